"""Chaotic-iteration post-processing for classical pseudorandom generators."""

from ciprng.generators import (
    AllZeroSeed,
    Generator,
    GeneratorSpec,
    GeneratorState,
    default_spec,
    seed,
    step,
)
from ciprng.combinators import (
    MixedXorCI,
    MultipleXorCI,
    NewCI,
    OldCI,
    XorCI,
    find_period,
    g1,
)

__version__ = "0.1.0"

__all__ = [
    "AllZeroSeed",
    "Generator",
    "GeneratorSpec",
    "GeneratorState",
    "MixedXorCI",
    "MultipleXorCI",
    "NewCI",
    "OldCI",
    "XorCI",
    "default_spec",
    "find_period",
    "g1",
    "seed",
    "step",
]
