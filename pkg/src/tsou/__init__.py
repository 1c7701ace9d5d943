"""Exact simulation of tempered stable Ornstein-Uhlenbeck processes."""

from .dist_basic import (
    GgaParams,
    MllParams,
    RngStream,
    gga_sample,
    mll_pdf,
    mll_sample,
    poisson_sample,
    positive_stable_sample,
)
from .tempering import (
    Direction,
    RadialMixture,
    RosinskiMeasure,
    SphericalMeasure,
    TemperingSpec,
    TsouModel,
    compute_K,
    direction,
)

__all__ = [
    "Direction",
    "GgaParams",
    "MllParams",
    "RadialMixture",
    "RngStream",
    "RosinskiMeasure",
    "SphericalMeasure",
    "TemperingSpec",
    "TsouModel",
    "compute_K",
    "direction",
    "gga_sample",
    "mll_pdf",
    "mll_sample",
    "poisson_sample",
    "positive_stable_sample",
]

__version__ = "0.1.0"
