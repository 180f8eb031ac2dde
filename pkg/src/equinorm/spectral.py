"""Radial power spectral density and the sinc-upsampling aliasing probe."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .norm import AffineParams, NormConfig, RunningStats, normalize
from .synthetic import radial_frequency
from .transform import upsample2x_sinc

R_MAX = np.sqrt(2.0) / 2.0
ALIAS_BAND = (np.sqrt(2.0) / 4.0, 0.5)
_EDGE_TOL = 1e-12


class SpatialSizeError(ValueError):
    pass


class MisalignedBinsError(ValueError):
    pass


@dataclass(frozen=True)
class RadialPSD:
    """Per-bin mean power over ``(lo, hi]`` annuli (the first bin also holds r = 0).

    ``counts`` is the number of DFT cells of one slice in each bin, so
    ``sum(power * counts)`` is the mean per-slice energy.
    """

    edges: np.ndarray
    power: np.ndarray
    counts: np.ndarray

    @property
    def total_energy(self) -> float:
        return float(np.sum(self.power * self.counts))


def bin_edges(n_bins: int = 64, forced: Sequence[float] = ALIAS_BAND) -> np.ndarray:
    """Uniform edges on ``[0, sqrt(2)/2]`` with each ``forced`` value made an edge.

    A uniform edge within a tiny tolerance of a forced one is replaced by it,
    otherwise the forced edge is inserted (adding a bin).
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    edges = list(np.linspace(0.0, R_MAX, n_bins + 1))
    for f in forced:
        near = [i for i, e in enumerate(edges) if abs(e - f) < 1e-9]
        if near:
            edges[near[0]] = f
        elif 0.0 < f < R_MAX:
            edges.append(f)
    return np.array(sorted(edges))


def _snap(r: np.ndarray, edges: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(edges, r), 0, len(edges) - 1)
    lo = np.clip(idx - 1, 0, len(edges) - 1)
    out = r.copy()
    for cand in (idx, lo):
        close = np.abs(r - edges[cand]) < _EDGE_TOL
        out[close] = edges[cand][close]
    return out


def radial_psd(maps: Sequence[np.ndarray], n_bins: int = 64, edges: np.ndarray | None = None) -> RadialPSD:
    """Radially binned power spectrum averaged over every (b, c) slice of every map."""
    if not maps:
        raise ValueError("no maps given")
    H, W = maps[0].shape[-2:]
    for x in maps:
        if x.shape[-2:] != (H, W):
            raise SpatialSizeError(f"mixed spatial sizes: {(H, W)} and {x.shape[-2:]}")
    if edges is None:
        edges = bin_edges(n_bins)

    r = _snap(radial_frequency(H, W), edges)
    which = np.clip(np.searchsorted(edges, r, side="left") - 1, 0, len(edges) - 2)
    n_out = len(edges) - 1
    counts = np.bincount(which.ravel(), minlength=n_out)

    cell_power = np.zeros((H, W))
    n_slices = 0
    for x in maps:
        spec = np.fft.fft2(x.reshape(-1, H, W), axes=(-2, -1))
        cell_power += np.sum(spec.real**2 + spec.imag**2, axis=0)
        n_slices += spec.shape[0]
    cell_power /= H * W * n_slices

    sums = np.bincount(which.ravel(), weights=cell_power.ravel(), minlength=n_out)
    power = np.divide(sums, counts, out=np.zeros(n_out), where=counts > 0)
    return RadialPSD(edges, power, counts)


def band_mask(psd: RadialPSD, band: tuple[float, float] = ALIAS_BAND) -> np.ndarray:
    lo, hi = band
    edges = psd.edges
    for b in (lo, hi):
        if np.min(np.abs(edges - b)) > _EDGE_TOL:
            raise MisalignedBinsError(f"band boundary {b} is not a bin edge")
    return (edges[:-1] >= lo - _EDGE_TOL) & (edges[1:] <= hi + _EDGE_TOL)


def aliasing_energy(psd: RadialPSD, band: tuple[float, float] = ALIAS_BAND) -> float:
    """Energy in the bins lying inside ``band``."""
    mask = band_mask(psd, band)
    return float(np.sum(psd.power[mask] * psd.counts[mask]))


@dataclass(frozen=True)
class ProbeResult:
    psd: RadialPSD
    energy: float
    ratio: float


def aliasing_probe(
    cfg: NormConfig,
    params: AffineParams | None,
    maps: Sequence[np.ndarray],
    n_bins: int = 64,
    state: RunningStats | None = None,
) -> ProbeResult:
    """Upsample by 2 with an ideal sinc, normalize, and measure band energy.

    ``params`` must be shaped for the upsampled maps. Layers with running
    statistics get a fresh state when none is given.
    """
    if cfg.track_running_stats and state is None:
        state = RunningStats.fresh(maps[0].shape[1])
    out = [normalize(upsample2x_sinc(x), cfg, params, state) for x in maps]
    psd = radial_psd(out, n_bins)
    energy = aliasing_energy(psd)
    total = psd.total_energy
    return ProbeResult(psd, energy, energy / total if total > 0 else 0.0)
