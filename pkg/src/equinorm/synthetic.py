"""Synthetic feature maps standing in for exported network activations."""

from __future__ import annotations

import numpy as np


def parse_spectrum(text: str) -> tuple[str, float | None]:
    """``"white"`` or ``"lowpass:BW"`` -> ``(kind, bandwidth)``."""
    if text == "white":
        return "white", None
    kind, _, bw = text.partition(":")
    if kind != "lowpass" or not bw:
        raise ValueError(f"spectrum must be 'white' or 'lowpass:BW', got {text!r}")
    bandwidth = float(bw)
    if not 0.0 < bandwidth <= 0.5:
        raise ValueError(f"lowpass bandwidth must lie in (0, 1/2], got {bandwidth}")
    return "lowpass", bandwidth


def radial_frequency(H: int, W: int) -> np.ndarray:
    """Normalized radial frequency of each DFT cell, with ``f`` in ``[-1/2, 1/2)``."""
    fh = np.fft.fftfreq(H)[:, None]
    fw = np.fft.fftfreq(W)[None, :]
    return np.sqrt(fh * fh + fw * fw)


def lowpass(x: np.ndarray, bandwidth: float) -> np.ndarray:
    """Keep only DFT cells with radial frequency strictly below ``bandwidth``.

    With ``bandwidth = 1/2`` this drops every Nyquist row and column, which
    is what makes sub-pixel translation of the result exactly unitary.
    """
    H, W = x.shape[-2:]
    mask = radial_frequency(H, W) < bandwidth
    spec = np.fft.fft2(x, axes=(-2, -1)) * mask
    return np.fft.ifft2(spec, axes=(-2, -1)).real


def gen_maps(
    dims: tuple[int, int, int, int],
    n: int,
    spectrum: str = "white",
    seed: int | None = 0,
) -> list[np.ndarray]:
    """``n`` i.i.d. Gaussian feature maps, optionally low-pass filtered.

    Low-pass maps are rescaled by the kept fraction of DFT cells so entries
    keep roughly unit variance.
    """
    kind, bandwidth = parse_spectrum(spectrum)
    rng = np.random.default_rng(seed)
    maps = []
    for _ in range(n):
        x = rng.standard_normal(dims)
        if kind == "lowpass":
            kept = np.mean(radial_frequency(*dims[-2:]) < bandwidth)
            x = lowpass(x, bandwidth) / np.sqrt(kept)
        maps.append(x)
    return maps
