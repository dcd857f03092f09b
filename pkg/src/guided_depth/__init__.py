"""Robust colour-guided depth map upsampling."""

from .imagecore import (
    ColorImage,
    DepthMap,
    DimensionError,
    GridShape,
    InputRangeError,
    Neighborhood,
    bicubic_upsample,
    clamp_coord,
    denormalize_depth,
    normalize_depth,
)
from .solver import (
    BandwidthField,
    ConfigError,
    SolverConfig,
    SolverState,
    UpsampleReport,
    bandwidth_gradient,
    discrete_laplacian,
    mrf_upsample,
    objective,
    update_bandwidth,
    update_depth,
    upsample,
)

__version__ = "0.1.0"
