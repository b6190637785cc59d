"""Algebra input specs, the PBW engine, and concrete module builders."""

from twistcalc.algebras.spec import (
    AlgebraSpec, AlgebraSpecError, EigenBasis, validate_spec)
from twistcalc.algebras.engine import Family, ModeAlgebra, LowestWeightModule
from twistcalc.algebras.builders import (
    ModuleBuild, build_virasoro, build_ns_vacuum, build_ramond,
    build_affine_twisted, build_clifford_twisted, build_free_fermions,
    quotient_build)

__all__ = [
    "AlgebraSpec", "AlgebraSpecError", "EigenBasis", "validate_spec",
    "Family", "ModeAlgebra", "LowestWeightModule",
    "ModuleBuild", "build_virasoro", "build_ns_vacuum", "build_ramond",
    "build_affine_twisted", "build_clifford_twisted", "build_free_fermions",
    "quotient_build",
]
