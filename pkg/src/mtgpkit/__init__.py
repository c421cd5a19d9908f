"""MTGP toolkit: generator, parameter-set creator, equidistribution analysis
and a lane-parallel simulator."""

from mtgpkit.f2core import F2Matrix, F2Poly, is_irreducible, minimal_polynomial, poly_mulmod, rank
from mtgpkit.mtgp import (
    GeneratorState,
    OutputMode,
    RecursionParams,
    TemperingParams,
    derive_sizes,
    generate,
    next_output,
    seed,
)

__version__ = "0.1.0"

__all__ = [
    "F2Matrix",
    "F2Poly",
    "GeneratorState",
    "OutputMode",
    "RecursionParams",
    "TemperingParams",
    "derive_sizes",
    "generate",
    "is_irreducible",
    "minimal_polynomial",
    "next_output",
    "poly_mulmod",
    "rank",
    "seed",
]
