"""Brute-force oracles, the 1-D counterexamples and the exhaustive configuration sweep.

The 1-D model works on ``(K, D)`` arrays: ``K`` spatial samples and ``D``
merged batch/channel entries. Where a 4-D layer is needed, a ``(K, D)``
array is laid out as a ``(1, D, 1, K)`` feature map.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .norm import AffineParams, NormConfig, RunningStats, ZeroVarianceError, init_params, normalize
from .synthetic import gen_maps
from .tensor import SPATIAL, Axis
from .transform import shift2d, translate1d, translate2d, translation_kernel


class EquivarianceClass(enum.Enum):
    TRANSLATION = "Translation"
    SHIFT = "Shift"
    NEITHER = "Neither"

    def __str__(self) -> str:
        return self.value


def classify_config(cfg: NormConfig) -> EquivarianceClass:
    """Predicted equivariance from the axis sets alone.

    A spatial affine step breaks shift equivariance. Otherwise the layer is
    translation-equivariant when its scaling statistic covers both spatial
    axes, or when it has no scaling step at all (the layer is then affine).
    """
    if cfg.affine_axes is not None and cfg.affine_axes & SPATIAL:
        return EquivarianceClass.NEITHER
    if not cfg.scale_axes or SPATIAL in cfg.scale_axes:
        return EquivarianceClass.TRANSLATION
    return EquivarianceClass.SHIFT


MAX_RESAMPLES = 16


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b))) / scale


def shift_equivariance_exhaustive(
    cfg: NormConfig,
    params: AffineParams | None,
    x: np.ndarray,
    state: RunningStats | None = None,
) -> float:
    """Max-abs equivariance error over every integer displacement of ``x``."""
    H, W = x.shape[-2:]
    fx = normalize(x, cfg, params, _copy(state))
    worst = 0.0
    for g in itertools.product(range(H), range(W)):
        diff = normalize(shift2d(x, g), cfg, params, _copy(state)) - shift2d(fx, g)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def _copy(state):
    return None if state is None else state.copy()


def translate_naive(v: np.ndarray, g: float) -> np.ndarray:
    """Direct O(K^2) circular convolution of each column with the translation kernel."""
    v = np.asarray(v)
    K = v.shape[0]
    phi = translation_kernel(g, K)
    k = np.arange(K)
    circulant = phi[(k[:, None] - k[None, :]) % K]
    return circulant @ v


def unitarity_check(x: np.ndarray, g: float) -> float:
    """``|E[|T_g x|^2] - E[x^2]|`` for the complex 1-D translation along axis 0.

    Integer displacements are applied as the permutation they are, and sums
    are exactly rounded, so those return exactly 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if float(g).is_integer():
        moved = np.roll(x, int(g), axis=0)
        before = math.fsum((x * x).ravel())
        after = math.fsum((moved * moved).ravel())
    else:
        moved = translate1d(x, g, complex_output=True)
        before = math.fsum((x * x).ravel())
        after = math.fsum((moved.real**2 + moved.imag**2).ravel())
    return abs(after - before) / x.size


def _as_map(v: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(v.T[None, :, None, :])


def _from_map(x: np.ndarray) -> np.ndarray:
    return x[0, :, 0, :].T


@dataclass(frozen=True)
class ShiftCounterexample:
    g: int
    x: np.ndarray
    y: np.ndarray  # shifted standardized map
    error: np.ndarray

    @property
    def magnitude(self) -> float:
        return float(np.max(np.abs(self.error)))

    @property
    def support(self) -> set[int]:
        return {int(k) for k in np.nonzero(np.any(self.error != 0, axis=1))[0]}


def _standardize_rows(x: np.ndarray) -> np.ndarray:
    mu = np.mean(x, axis=1, keepdims=True)
    return (x - mu) / np.sqrt(np.mean((x - mu) ** 2, axis=1, keepdims=True))


def appendixb_shift_counterexample(
    K: int, D: int, seed: int | None = 0, g: int | None = None
) -> ShiftCounterexample:
    """A spatial affine step (gamma = delta at row 0, beta = 0) breaks shift equivariance.

    ``x`` takes values in {-1, 1} with both present in every row; rows are
    standardized over ``D``. The error should be ``y[0]`` on row 0,
    ``-y[g]`` on row ``g`` and zero elsewhere.
    """
    if K < 2 or D < 2:
        raise ValueError(f"need K >= 2 and D >= 2, got K={K}, D={D}")
    rng = np.random.default_rng(seed)
    if g is None:
        g = int(rng.integers(1, K))
    x = np.empty((K, D))
    for k in range(K):
        row = rng.choice([-1.0, 1.0], size=D)
        while abs(row.sum()) == D:
            row = rng.choice([-1.0, 1.0], size=D)
        x[k] = row

    cfg = NormConfig(Axis.C, Axis.C, Axis.W, eps=0.0)
    gamma = np.zeros((1, 1, 1, K))
    gamma[..., 0] = 1.0
    params = AffineParams(gamma, np.zeros((1, 1, 1, K)))
    xm = _as_map(x)
    lhs = normalize(shift2d(xm, (0, g)), cfg, params)
    rhs = shift2d(normalize(xm, cfg, params), (0, g))
    y = np.roll(_standardize_rows(x), g, axis=0)
    return ShiftCounterexample(g, x, y, _from_map(lhs - rhs))


def _standardize_complex(z: np.ndarray) -> np.ndarray:
    # rows whose variance is at roundoff level relative to the whole map are
    # treated as vanishing and map to zero
    mu = np.mean(z, axis=1, keepdims=True)
    c = z - mu
    var = np.mean(c.real**2 + c.imag**2, axis=1, keepdims=True)
    floor = 1e-24 * max(float(np.mean(z.real**2 + z.imag**2)), np.finfo(float).tiny)
    safe = np.where(var > floor, var, 1.0)
    return np.where(var > floor, c / np.sqrt(safe), 0.0)


@dataclass(frozen=True)
class TranslationCounterexample:
    g: float
    u: np.ndarray
    phi: np.ndarray
    measured: np.ndarray
    closed_form: np.ndarray


def appendixb_translation_counterexample(
    K: int, D: int, g: float, seed: int | None = 0
) -> TranslationCounterexample:
    """Channel-wise scaling of an impulse is not translation-equivariant.

    With ``x[k, d] = delta(k, 0) u[d]`` (``u`` of mean 0, variance 1) and the
    complex translation, the error is ``phi[k] (1/|phi[k]| - 1) u[d]``.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(D)
    u = (u - u.mean()) / u.std()
    x = np.zeros((K, D))
    x[0] = u

    measured = _standardize_complex(translate1d(x, g, complex_output=True)) - translate1d(
        _standardize_complex(x.astype(complex)), g, complex_output=True
    )
    phi = translation_kernel(g, K)
    mag = np.abs(phi)
    factor = np.where(mag > 0, phi * (1.0 / np.where(mag > 0, mag, 1.0) - 1.0), 0.0)
    return TranslationCounterexample(g, u, phi, measured, factor[:, None] * u[None, :])


@dataclass(frozen=True)
class SweepRow:
    center_axes: Axis
    scale_axes: Axis
    affine_axes: Axis | None
    predicted: EquivarianceClass
    shift_error: float
    translation_error: float
    measured: EquivarianceClass | None  # None when indeterminate

    @property
    def agreement(self) -> bool:
        return self.measured is self.predicted

    @property
    def config(self) -> NormConfig:
        return NormConfig(self.center_axes, self.scale_axes, self.affine_axes, eps=0.0)


def all_configs() -> Iterator[NormConfig]:
    """Every (center, scale, affine) combination; affine ``None`` comes first."""
    subsets = [Axis.from_mask(m) for m in range(16)]
    for affine in [None, *subsets]:
        for scale in subsets:
            for center in subsets:
                yield NormConfig(center, scale, affine, eps=0.0)


def classify_measured(shift_err: float, trans_err: float, t_lo: float, t_hi: float):
    if shift_err >= t_hi and trans_err >= t_hi:
        return EquivarianceClass.NEITHER
    if shift_err <= t_lo:
        if trans_err <= t_lo:
            return EquivarianceClass.TRANSLATION
        if trans_err >= t_hi:
            return EquivarianceClass.SHIFT
    return None


def measure_row(
    cfg: NormConfig,
    dims: tuple[int, int, int, int],
    rng: np.random.Generator,
    n_displacements: int = 3,
) -> tuple[float, float]:
    """Worst relative max-abs error over a few random shifts and translations.

    Maps are low-pass (Nyquist-free) Gaussian maps, resampled on a zero
    variance. Shift displacements are nonzero along both axes. If every
    resample hits a zero variance (e.g. scaling over axes of size 1 with
    ``eps=0``) both errors are NaN, which classifies as indeterminate.
    """
    B, C, H, W = dims
    params = init_params(cfg, dims, "gaussian", rng)
    for _ in range(MAX_RESAMPLES):
        (x,) = gen_maps(dims, 1, "lowpass:0.5", rng)
        try:
            fx = normalize(x, cfg, params)
            break
        except ZeroVarianceError:
            continue
    else:
        return float("nan"), float("nan")

    shift_err = 0.0
    for _ in range(n_displacements):
        g = (int(rng.integers(1, H)) if H > 1 else 0, int(rng.integers(1, W)) if W > 1 else 0)
        shift_err = max(shift_err, _relative_error(normalize(shift2d(x, g), cfg, params), shift2d(fx, g)))
    trans_err = 0.0
    for _ in range(n_displacements):
        g = (float(rng.uniform(0, H)), float(rng.uniform(0, W)))
        trans_err = max(
            trans_err, _relative_error(normalize(translate2d(x, g), cfg, params), translate2d(fx, g))
        )
    return shift_err, trans_err


def theorem_sweep(
    dims: tuple[int, int, int, int] = (2, 3, 8, 8),
    seed: int = 0,
    t_lo: float = 1e-8,
    t_hi: float = 1e-4,
) -> list[SweepRow]:
    """Measure and classify all 4352 configurations; row ``i`` uses rng ``(seed, i)``."""
    if not t_lo < t_hi:
        raise ValueError(f"need t_lo < t_hi, got {t_lo}, {t_hi}")
    rows = []
    for i, cfg in enumerate(all_configs()):
        rng = np.random.default_rng([seed, i])
        shift_err, trans_err = measure_row(cfg, dims, rng)
        rows.append(
            SweepRow(
                cfg.center_axes,
                cfg.scale_axes,
                cfg.affine_axes,
                classify_config(cfg),
                shift_err,
                trans_err,
                classify_measured(shift_err, trans_err, t_lo, t_hi),
            )
        )
    return rows
