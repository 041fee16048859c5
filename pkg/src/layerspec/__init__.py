"""Spectral analysis of layered divergence-form operators through their 1-D fibers."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .profile import (  # noqa: F401
    AnalyticPreset,
    CelerityProfile,
    PiecewiseConstant,
    SampledGrid,
    WellInterval,
    find_well,
    load_profile,
    validate,
)
from .fiber import (  # noqa: F401
    FiberEigenpair,
    eigenfunction,
    eigenpair,
    eigenvalue,
    liouville_transform,
    propagate_pc,
    shoot_pruefer,
    spectrum_in_range,
)
