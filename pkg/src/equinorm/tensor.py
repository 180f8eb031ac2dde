"""Feature-map storage, axis subsets and reduced statistics.

Feature maps are plain ``float64`` numpy arrays of shape ``(B, C, H, W)``.
Reductions keep the reduced dimensions with size 1 so results broadcast back
onto the source map.
"""

from __future__ import annotations

import enum
from typing import Literal

import numpy as np

AXIS_NAMES = "BCHW"


class Axis(enum.Flag):
    """Subset of the four feature-map dimensions, stored as a 4-bit mask."""

    B = 1
    C = 2
    H = 4
    W = 8

    @classmethod
    def none(cls) -> Axis:
        return cls(0)

    @classmethod
    def all(cls) -> Axis:
        return cls.B | cls.C | cls.H | cls.W

    @classmethod
    def parse(cls, text: str) -> Axis:
        """Parse ``"BHW"``, ``"B,H,W"`` or ``""`` into an axis set."""
        out = cls(0)
        for ch in text.replace(",", "").replace(" ", "").upper():
            if ch not in AXIS_NAMES:
                raise ValueError(f"unknown axis {ch!r} in {text!r}")
            out |= cls[ch]
        return out

    @classmethod
    def from_mask(cls, mask: int) -> Axis:
        if not 0 <= mask < 16:
            raise ValueError(f"axis mask out of range: {mask}")
        return cls(mask)

    @property
    def dims(self) -> tuple[int, ...]:
        """Positional indices into a ``(B, C, H, W)`` array."""
        return tuple(i for i, name in enumerate(AXIS_NAMES) if self & Axis[name])

    @property
    def label(self) -> str:
        return "".join(name for name in AXIS_NAMES if self & Axis[name])

    def __str__(self) -> str:
        return self.label or "-"


SPATIAL = Axis.H | Axis.W


class StatDivisionError(ZeroDivisionError):
    """A reduced statistic used as a divisor contains a zero."""

    def __init__(self, index: tuple[int, ...]):
        self.index = index
        super().__init__(f"division by zero statistic at index {index}")


def as_feature_map(x, *, copy: bool = False) -> np.ndarray:
    """Validate ``x`` as a 4-D finite feature map and widen it to float64."""
    arr = np.array(x, dtype=np.float64, order="C") if copy else np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError(f"feature map must be 4-D (B, C, H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"feature map dims must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature map contains NaN or Inf")
    return arr


def mean_over(x: np.ndarray, axes: Axis) -> np.ndarray:
    """Mean of ``x`` over ``axes``; the empty set returns ``x`` itself."""
    if not axes:
        return x
    return np.mean(x, axis=axes.dims, keepdims=True)


def var_over(x: np.ndarray, axes: Axis) -> np.ndarray:
    """Biased variance over ``axes``, computed in two passes.

    The empty set yields zeros shaped like ``x`` (a one-sample variance).
    """
    if not axes:
        return np.zeros_like(x)
    centered = x - np.mean(x, axis=axes.dims, keepdims=True)
    return np.mean(centered * centered, axis=axes.dims, keepdims=True)


def broadcast_combine(
    x: np.ndarray, s: np.ndarray, op: Literal["add", "sub", "mul", "div"]
) -> np.ndarray:
    """Entry-wise ``x op s`` with ``s`` replicated along its size-1 axes."""
    if s.ndim != x.ndim or any(a != b and a != 1 for a, b in zip(s.shape, x.shape)):
        raise ValueError(f"statistic of shape {s.shape} does not broadcast onto {x.shape}")
    if op == "add":
        return x + s
    if op == "sub":
        return x - s
    if op == "mul":
        return x * s
    if op == "div":
        zeros = np.argwhere(s == 0)
        if len(zeros):
            raise StatDivisionError(tuple(int(i) for i in zeros[0]))
        return x / s
    raise ValueError(f"unknown op {op!r}")
