"""Axis-parameterized normalization: centering, scaling and an affine step.

Every layer is described by three axis sets. Centering subtracts the mean
over ``center_axes``, scaling divides by the standard deviation over
``scale_axes`` (each statistic taken on the raw input) and the affine step
applies ``gamma * y + beta`` with parameters varying along ``affine_axes``.
An empty axis set switches the corresponding statistic step off.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .tensor import Axis, StatDivisionError, broadcast_combine, mean_over, var_over

Mode = Literal["training", "evaluation"]


class ZeroVarianceError(StatDivisionError):
    """Raised when ``eps == 0`` and a variance used for scaling vanishes."""

    def __init__(self, index: tuple[int, ...]):
        super().__init__(index)
        self.args = (f"zero variance at reduced index {index} with eps=0",)


@dataclass(frozen=True)
class NormConfig:
    center_axes: Axis
    scale_axes: Axis
    affine_axes: Axis | None
    eps: float = 1e-5
    track_running_stats: bool = False
    mode: Mode = "training"
    name: str = ""

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if self.track_running_stats and not (
            Axis.B in self.center_axes and Axis.B in self.scale_axes
        ):
            raise ValueError("running statistics need B in both center and scale axes")
        if self.mode not in ("training", "evaluation"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def replace(self, **changes) -> NormConfig:
        return dataclasses.replace(self, **changes)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        affine = "none" if self.affine_axes is None else str(self.affine_axes)
        return f"center={self.center_axes}/scale={self.scale_axes}/affine={affine}"


@dataclass(frozen=True)
class AffineParams:
    gamma: np.ndarray
    beta: np.ndarray


@dataclass
class RunningStats:
    """Per-channel running mean/variance used by evaluation-mode layers."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    update_count: int = 0

    @classmethod
    def fresh(cls, channels: int, momentum: float = 0.1) -> RunningStats:
        if not 0.0 < momentum < 1.0:
            raise ValueError(f"momentum must lie in (0, 1), got {momentum}")
        return cls(np.zeros(channels), np.ones(channels), momentum)

    def copy(self) -> RunningStats:
        return RunningStats(
            self.running_mean.copy(), self.running_var.copy(), self.momentum, self.update_count
        )

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray) -> None:
        m = self.momentum
        self.running_mean = (1.0 - m) * self.running_mean + m * batch_mean
        self.running_var = (1.0 - m) * self.running_var + m * batch_var
        self.update_count += 1


PRESETS: dict[str, tuple[str, str, str | None]] = {
    "BatchNorm": ("BHW", "BHW", "C"),
    "InstanceNorm": ("HW", "HW", None),
    "LayerNorm-CHW": ("CHW", "CHW", "CHW"),
    "LayerNorm-C": ("C", "C", "C"),
    "LayerNorm-AF": ("C", "CHW", "C"),
}

PASS_THROUGH = NormConfig(Axis.none(), Axis.none(), None, eps=0.0, name="Identity")


def preset(name: str, eps: float = 1e-5, mode: Mode = "training") -> NormConfig:
    try:
        center, scale, affine = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown normalization layer {name!r}; choose from {list(PRESETS)}")
    return NormConfig(
        Axis.parse(center),
        Axis.parse(scale),
        None if affine is None else Axis.parse(affine),
        eps=eps,
        track_running_stats=name == "BatchNorm",
        mode=mode,
        name=name,
    )


def param_shape(cfg: NormConfig, dims: tuple[int, ...]) -> tuple[int, ...]:
    axes = cfg.affine_axes or Axis.none()
    return tuple(d if i in axes.dims else 1 for i, d in enumerate(dims))


def init_params(
    cfg: NormConfig,
    dims: tuple[int, ...],
    scheme: Literal["default", "gaussian"] = "default",
    seed: int | np.random.Generator | None = None,
) -> AffineParams | None:
    """Affine parameters for ``cfg`` on maps of shape ``dims``.

    ``default`` gives gamma = 1 and beta = 0; ``gaussian`` draws both from a
    standard normal. Layers without an affine step get ``None``.
    """
    if cfg.affine_axes is None:
        return None
    shape = param_shape(cfg, dims)
    if scheme == "default":
        return AffineParams(np.ones(shape), np.zeros(shape))
    if scheme == "gaussian":
        rng = np.random.default_rng(seed)
        gamma = rng.standard_normal(shape)
        beta = rng.standard_normal(shape)
        return AffineParams(gamma, beta)
    raise ValueError(f"unknown initialization scheme {scheme!r}")


def _channel_stat(v: np.ndarray) -> np.ndarray:
    return v.reshape(1, -1, 1, 1)


def normalize(
    x: np.ndarray,
    cfg: NormConfig,
    params: AffineParams | None = None,
    state: RunningStats | None = None,
) -> np.ndarray:
    """Apply the layer described by ``cfg`` to the feature map ``x``.

    In training mode with running statistics the batch statistics are used
    for the output and ``state`` is updated in place afterwards; in
    evaluation mode the statistics come from ``state``.
    """
    if cfg.track_running_stats and state is None:
        raise ValueError(f"{cfg.label} tracks running statistics but no state was given")
    if not cfg.track_running_stats and state is not None:
        raise ValueError(f"{cfg.label} does not track running statistics")

    if state is not None and cfg.mode == "evaluation":
        mu = _channel_stat(state.running_mean)
        var = _channel_stat(state.running_var)
        scale = True
    else:
        mu = mean_over(x, cfg.center_axes) if cfg.center_axes else None
        var = var_over(x, cfg.scale_axes) if cfg.scale_axes else None
        scale = var is not None
        if state is not None:
            state.update(x.mean(axis=(0, 2, 3)), x.var(axis=(0, 2, 3)))

    y = x if mu is None else broadcast_combine(x, mu, "sub")
    if scale:
        try:
            y = broadcast_combine(y, np.sqrt(var + cfg.eps), "div")
        except StatDivisionError as exc:
            raise ZeroVarianceError(exc.index) from None

    if params is not None:
        if cfg.affine_axes is None:
            raise ValueError(f"{cfg.label} has no affine step but parameters were given")
        y = params.gamma * y + params.beta
    return y
