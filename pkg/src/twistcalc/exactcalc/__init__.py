"""Exact cyclotomic scalars and windowed truncated series."""

from twistcalc.exactcalc.scalar import (
    Scalar, S_ZERO, S_ONE, S_MINUS_ONE,
    cyclotomic_polynomial, euler_phi,
    rational_binomial, falling_factorial, koszul_sign,
)
from twistcalc.exactcalc.series import (
    TruncatedSeries, SoundnessError,
    FULL, EMPTY, w_intersect, w_contains, w_shift, w_is_full, w_is_empty,
    rat_floor, rat_ceil,
    formal_derivative, formal_residue,
    binomial_expand, binomial_cover,
    delta_identity_residual, delta_derivative_series,
    lemma_vanishing_residual, substitution_residual, poly_z1_minus_z2,
)
from twistcalc.exactcalc.literals import parse_scalar, ScalarSyntaxError

__all__ = [
    "Scalar", "S_ZERO", "S_ONE", "S_MINUS_ONE",
    "cyclotomic_polynomial", "euler_phi",
    "rational_binomial", "falling_factorial", "koszul_sign",
    "TruncatedSeries", "SoundnessError",
    "FULL", "EMPTY", "w_intersect", "w_contains", "w_shift",
    "w_is_full", "w_is_empty", "rat_floor", "rat_ceil",
    "formal_derivative", "formal_residue",
    "binomial_expand", "binomial_cover",
    "delta_identity_residual", "delta_derivative_series",
    "lemma_vanishing_residual", "substitution_residual", "poly_z1_minus_z2",
    "parse_scalar", "ScalarSyntaxError",
]
