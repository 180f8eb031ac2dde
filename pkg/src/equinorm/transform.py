"""Circular shifts, Fourier-domain translations and sinc upsampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Displacement:
    """Displacement ``(dh, dw)`` in pixels.

    ``integer`` marks a shift (whole pixels); otherwise the displacement is a
    continuous translation.
    """

    dh: float
    dw: float
    integer: bool = False

    def __post_init__(self):
        if self.integer and not (float(self.dh).is_integer() and float(self.dw).is_integer()):
            raise ValueError(f"shift displacement must be integer, got ({self.dh}, {self.dw})")

    def __iter__(self):
        yield self.dh
        yield self.dw


def _pair(g) -> tuple[float, float]:
    dh, dw = g
    return float(dh), float(dw)


def shift2d(x: np.ndarray, g) -> np.ndarray:
    """Circularly shift the last two axes: ``out[..., h, w] = x[..., h - dh, w - dw]``."""
    dh, dw = _pair(g)
    if not (dh.is_integer() and dw.is_integer()):
        raise ValueError(f"shift2d needs integer displacements, got ({dh}, {dw})")
    return np.roll(x, (int(dh), int(dw)), axis=(-2, -1))


def symmetric_freqs(n: int) -> np.ndarray:
    """Cycles per sample for each DFT bin; bins above ``n/2`` are negative."""
    k = np.arange(n)
    return np.where(k <= n // 2, k, k - n) / n


def _phase_ramp(shape: tuple[int, int], dh: float, dw: float) -> np.ndarray:
    fh = symmetric_freqs(shape[0])[:, None]
    fw = symmetric_freqs(shape[1])[None, :]
    return np.exp(-2j * np.pi * (fh * dh + fw * dw))


def translate2d_complex(x: np.ndarray, g) -> np.ndarray:
    dh, dw = _pair(g)
    spec = np.fft.fft2(x, axes=(-2, -1))
    spec *= _phase_ramp(x.shape[-2:], dh, dw)
    return np.fft.ifft2(spec, axes=(-2, -1))


def translate2d(x: np.ndarray, g) -> np.ndarray:
    """Sub-pixel circular translation of the last two axes by a phase ramp.

    The phase is applied with symmetric frequencies and the real part of the
    inverse DFT is returned. For even sizes the Nyquist row/column is scaled
    by ``cos(pi * d)``, so the map is unitary only on inputs without Nyquist
    content; :func:`imaginary_residue` reports what the real part discards.
    """
    return translate2d_complex(x, g).real


def imaginary_residue(x: np.ndarray, g) -> float:
    """Largest imaginary magnitude dropped by :func:`translate2d`."""
    return float(np.max(np.abs(translate2d_complex(x, g).imag)))


def translate1d(v: np.ndarray, g: float, *, complex_output: bool = False) -> np.ndarray:
    """Translate a ``(K, D)`` array along its first axis by ``g`` samples.

    By default this is the 1-D analogue of :func:`translate2d` (symmetric
    frequencies, real part). With ``complex_output=True`` the phase ramp
    ``exp(-2i pi k g / K)`` is applied to raw bin indices ``k = 0..K-1`` and
    the complex result is returned; that operator is exactly circular
    convolution with :func:`translation_kernel` and is unitary for every g.
    """
    v = np.asarray(v)
    K = v.shape[0]
    if complex_output:
        freqs = np.arange(K) / K
    else:
        freqs = symmetric_freqs(K)
    ramp = np.exp(-2j * np.pi * freqs * float(g))
    ramp = ramp.reshape((K,) + (1,) * (v.ndim - 1))
    out = np.fft.ifft(np.fft.fft(v, axis=0) * ramp, axis=0)
    return out if complex_output else out.real


def translation_kernel(g: float, K: int) -> np.ndarray:
    """Closed-form convolution kernel of the complex 1-D translation.

    For integer ``g`` this is the Kronecker delta at ``g mod K``; otherwise
    ``(1/K) sin(pi(g-k)) / sin(pi(g-k)/K) * exp(-i pi (g-k)(1 - 1/K))``.
    """
    if K < 1:
        raise ValueError(f"kernel length must be positive, got {K}")
    g = float(g)
    if g.is_integer():
        phi = np.zeros(K, dtype=np.complex128)
        phi[int(g) % K] = 1.0
        return phi
    # the kernel has period 2K in g - k; reducing first keeps the sines
    # accurate when g sits close to an integer
    t = np.fmod(g - np.arange(K), 2 * K)
    n = np.round(t)
    m = np.round(t / K)
    sign = (-1.0) ** (n + m)
    d = t - n
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = sign * np.sin(np.pi * d) / np.sin(np.pi * (t - m * K) / K)
    # the peak entry (n == mK) is sin(pi d)/sin(pi d/K); use its sinc form
    peak = n == m * K
    ratio[peak] = sign[peak] * K * np.sinc(d[peak]) / np.sinc(d[peak] / K)
    return ratio / K * np.exp(-1j * np.pi * t * (1.0 - 1.0 / K))


def _zero_pad_axis(spec: np.ndarray, axis: int) -> np.ndarray:
    n = spec.shape[axis]
    shape = list(spec.shape)
    shape[axis] = 2 * n
    out = np.zeros(shape, dtype=spec.dtype)

    def put(dst, src, scale=1.0):
        out_idx = [slice(None)] * spec.ndim
        in_idx = [slice(None)] * spec.ndim
        out_idx[axis], in_idx[axis] = dst, src
        out[tuple(out_idx)] += scale * spec[tuple(in_idx)]

    half = (n + 1) // 2  # bins 0..half-1 are non-negative frequencies
    put(slice(0, half), slice(0, half))
    if n % 2:
        put(slice(2 * n - (n - half), 2 * n), slice(half, n))
    else:
        # the Nyquist bin is split between both conjugate slots
        put(slice(half + 1 + n, 2 * n), slice(half + 1, n))
        put(slice(half, half + 1), slice(half, half + 1), 0.5)
        put(slice(half + n, half + n + 1), slice(half, half + 1), 0.5)
    return out


def upsample2x_sinc(x: np.ndarray) -> np.ndarray:
    """Ideal sinc upsampling by 2 of the last two axes via DFT zero-padding."""
    spec = np.fft.fft2(x, axes=(-2, -1))
    spec = _zero_pad_axis(_zero_pad_axis(spec, spec.ndim - 2), spec.ndim - 1)
    return 4.0 * np.fft.ifft2(spec, axes=(-2, -1)).real
