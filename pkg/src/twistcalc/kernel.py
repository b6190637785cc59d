"""Rational-arithmetic backend selection.

All exact arithmetic in twistcalc runs on one rational type, ``RAT``.  At
import time we pick the compiled Cython kernel when it is available and fall
back to fractions.Fraction otherwise.  Set TWISTCALC_PURE=1 to force the
pure-Python backend (used by the benchmark for comparison).

Both backends satisfy the same small protocol: exact +, -, *, /, ** with
ints and with each other, total order, hash, bool (nonzero test) and a
canonical str() of the form "p" or "p/q".
"""

import os
from fractions import Fraction

if os.environ.get("TWISTCALC_PURE"):
    RAT = Fraction
    BACKEND = "python"
else:
    try:
        from twistcalc._rat import Rat as RAT
        BACKEND = "compiled"
    except ImportError:
        RAT = Fraction
        BACKEND = "python"

ZERO = RAT(0)
ONE = RAT(1)


def rat(num, den=1):
    """Build a RAT from ints (or pass a RAT through)."""
    if type(num) is RAT and den == 1:
        return num
    return RAT(num, den)


def as_rat(x):
    """Coerce int / Fraction / RAT / "p/q" string to RAT."""
    if type(x) is RAT:
        return x
    if isinstance(x, int):
        return RAT(x)
    if isinstance(x, Fraction):
        return RAT(x.numerator, x.denominator)
    if isinstance(x, RAT):
        return x
    if isinstance(x, str):
        if "/" in x:
            p, q = x.split("/")
            return RAT(int(p), int(q))
        return RAT(int(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")
