"""Cosine distance and Monte-Carlo estimation of equivariance errors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .norm import NormConfig, RunningStats, init_params, normalize
from .transform import Displacement, shift2d, translate2d

Group = Literal["shift", "translation"]
GROUPS: tuple[Group, ...] = ("shift", "translation")


class DegeneratePixelError(ValueError):
    """A pixel's channel vector has zero norm, so its cosine is undefined."""

    def __init__(self, index: tuple[int, int, int], which: str):
        self.index = index
        super().__init__(f"zero-norm channel vector in {which} at (b, h, w) = {index}")


def _unit_channels(x: np.ndarray, which: str) -> np.ndarray:
    norms = np.sqrt(np.sum(x * x, axis=1, keepdims=True))
    zeros = np.argwhere(norms[:, 0] == 0)
    if len(zeros):
        raise DegeneratePixelError(tuple(int(i) for i in zeros[0]), which)
    return x / norms


def cosine_distance(x: np.ndarray, y: np.ndarray) -> float:
    """One minus the mean per-pixel cosine similarity of channel vectors.

    Evaluated as half the squared distance between unit channel vectors,
    which equals ``1 - cos`` without cancellation near zero.
    """
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    diff = _unit_channels(x, "x") - _unit_channels(y, "y")
    return float(0.5 * np.mean(np.sum(diff * diff, axis=1)))


def sample_displacement(group: Group, H: int, W: int, rng: np.random.Generator) -> Displacement:
    if group == "shift":
        return Displacement(int(rng.integers(H)), int(rng.integers(W)), integer=True)
    if group == "translation":
        return Displacement(float(rng.uniform(0, H)), float(rng.uniform(0, W)))
    raise ValueError(f"unknown group {group!r}")


def apply_group(x: np.ndarray, g: Displacement) -> np.ndarray:
    return shift2d(x, g) if g.integer else translate2d(x, g)


@dataclass(frozen=True)
class TrialPlan:
    group: Group
    n_trials: int
    schemes: tuple[str, ...] = ("default", "gaussian")
    bn_modes: tuple[str, ...] = ("training", "evaluation")
    eval_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials}")
        if not self.schemes or not self.bn_modes:
            raise ValueError("at least one scheme and one mode are required")
        if not 0.0 <= self.eval_fraction <= 1.0:
            raise ValueError(f"eval_fraction must lie in [0, 1], got {self.eval_fraction}")


@dataclass
class Cell:
    """Streaming mean/variance of per-trial errors for one (layer, group)."""

    layer: str
    group: str
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, value: float) -> None:
        self.n += 1
        delta = value - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (value - self.mean)

    def merge(self, other: Cell) -> Cell:
        n = self.n + other.n
        if n == 0:
            return Cell(self.layer, self.group)
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Cell(self.layer, self.group, n, mean, m2)

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return math.nan
        return math.sqrt(self.m2 / (self.n - 1)) / math.sqrt(self.n)


@dataclass
class EquivarianceReport:
    cells: list[Cell] = field(default_factory=list)

    def cell(self, layer: str, group: str) -> Cell:
        for c in self.cells:
            if c.layer == layer and c.group == group:
                return c
        raise KeyError((layer, group))


def warm_running_stats(cfg: NormConfig, maps: Sequence[np.ndarray]) -> RunningStats:
    """Running statistics after one training pass over every map in order."""
    state = RunningStats.fresh(maps[0].shape[1])
    train = cfg.replace(mode="training")
    for x in maps:
        normalize(x, train, None, state)
    return state


def equivariance_error(
    cfg: NormConfig, maps: Sequence[np.ndarray], plan: TrialPlan
) -> Cell:
    """Mean cosine distance between ``f(T_g x)`` and ``T_g f(x)`` over random trials.

    Trial ``t`` draws from its own generator seeded by ``(plan.seed, t)``:
    a map, an initialization scheme, a BatchNorm mode, a displacement and
    then the affine parameters, always in that order.
    """
    if not maps:
        raise ValueError("no feature maps to measure on")
    warm = warm_running_stats(cfg, maps) if cfg.track_running_stats else None
    cell = Cell(cfg.label, plan.group)
    for t in range(plan.n_trials):
        rng = np.random.default_rng([plan.seed, t])
        x = maps[int(rng.integers(len(maps)))]
        scheme = plan.schemes[int(rng.integers(len(plan.schemes)))]
        mode = _pick_mode(plan, rng)
        g = sample_displacement(plan.group, x.shape[2], x.shape[3], rng)
        params = init_params(cfg, x.shape, scheme, rng)

        layer = cfg.replace(mode=mode) if warm is not None else cfg
        try:
            lhs = normalize(apply_group(x, g), layer, params, _copy(warm))
            rhs = apply_group(normalize(x, layer, params, _copy(warm)), g)
            cell.add(cosine_distance(lhs, rhs))
        except (ValueError, ZeroDivisionError) as exc:
            exc.trial = t
            raise
    return cell


def _pick_mode(plan: TrialPlan, rng: np.random.Generator) -> str:
    u = rng.random()
    if len(plan.bn_modes) == 1:
        return plan.bn_modes[0]
    return "evaluation" if u < plan.eval_fraction else "training"


def _copy(state: RunningStats | None) -> RunningStats | None:
    return None if state is None else state.copy()


def measure(
    configs: Sequence[NormConfig],
    maps: Sequence[np.ndarray],
    groups: Sequence[Group],
    n_trials: int,
    seed: int = 0,
    **plan_kw,
) -> EquivarianceReport:
    """One report cell per (layer, group), layers outermost."""
    report = EquivarianceReport()
    for cfg in configs:
        for group in groups:
            plan = TrialPlan(group, n_trials, seed=seed, **plan_kw)
            report.cells.append(equivariance_error(cfg, maps, plan))
    return report
