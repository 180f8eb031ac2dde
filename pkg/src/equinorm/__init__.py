"""Shift and translation equivariance of normalization layers."""

__version__ = "0.1.0"

from .metrics import cosine_distance, equivariance_error, measure  # noqa: E402
from .norm import NormConfig, init_params, normalize, preset  # noqa: E402
from .tensor import Axis, mean_over, var_over  # noqa: E402
from .transform import shift2d, translate1d, translate2d, translation_kernel, upsample2x_sinc  # noqa: E402
from .verify import classify_config, theorem_sweep  # noqa: E402

__all__ = [
    "Axis",
    "NormConfig",
    "classify_config",
    "cosine_distance",
    "equivariance_error",
    "init_params",
    "mean_over",
    "measure",
    "normalize",
    "preset",
    "shift2d",
    "theorem_sweep",
    "translate1d",
    "translate2d",
    "translation_kernel",
    "upsample2x_sinc",
    "var_over",
]
