"""Discrete Schroedinger transform of 1D signals and grey-level images.

Two formulations are provided:

* a spatial one, convolving the input with the truncated chirp kernel
  ``G(x) = exp(-j t x^2)`` sampled on ``[-r, r]`` and taking the modulus;
* a frequency one, multiplying the centred spectrum by
  ``exp(-j k d_uv t)`` and taking the modulus of the inverse DFT.

Spatial convolution mirrors the input at the borders (``numpy.pad`` mode
``"symmetric"``), so outputs have the same shape as inputs. The frequency
route is circular; the two are not expected to agree near the borders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChirpKernel",
    "InvalidParameterError",
    "make_chirp_kernel",
    "transform_1d",
    "transform_1d_expanded",
    "transform_2d",
    "transform_frequency",
    "squared_distance_map",
]


class InvalidParameterError(ValueError):
    """Raised when a transform, feature or classifier parameter is out of range."""


@dataclass(frozen=True)
class ChirpKernel:
    t: float
    r: int
    real_part: np.ndarray
    imag_part: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.r, self.r + 1)

    def as_complex(self) -> np.ndarray:
        return self.real_part + 1j * self.imag_part


def _check_params(t, r):
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)):
        raise InvalidParameterError(f"r must be an integer, got {r!r}")
    if r < 1:
        raise InvalidParameterError(f"r must be >= 1, got {r}")
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise InvalidParameterError(f"t must be finite and non-negative, got {t}")
    return t, int(r)


def make_chirp_kernel(t: float, r: int) -> ChirpKernel:
    """Sample ``exp(-j t x^2)`` at the integer offsets ``-r..r``."""
    t, r = _check_params(t, r)
    x = np.arange(-r, r + 1, dtype=np.float64)
    phase = t * x * x
    return ChirpKernel(t=t, r=r, real_part=np.cos(phase), imag_part=-np.sin(phase))


def _as_signal(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise InvalidParameterError("signal must be a non-empty 1D sequence")
    if not np.all(np.isfinite(f)):
        raise InvalidParameterError("signal samples must be finite")
    return f


def _as_image(image) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] < 1 or image.shape[1] < 1:
        raise InvalidParameterError(f"expected a non-empty 2D image, got shape {image.shape}")
    image = image.astype(np.float64)
    if not np.all(np.isfinite(image)):
        raise InvalidParameterError("image values must be finite")
    return image


def _correlate_last_axis(padded: np.ndarray, taps: np.ndarray, n: int) -> np.ndarray:
    # out[..., x] = sum_i padded[..., x + i] * taps[i]; padded has n + len(taps) - 1 samples
    out = padded[..., 0:n] * taps[0]
    for i in range(1, taps.size):
        out = out + padded[..., i:i + n] * taps[i]
    return out


def transform_1d(f, t: float, r: int) -> np.ndarray:
    """Modulus of the chirp convolution of a 1D signal.

    ``out[x] = |sum_{i=-r..r} f(x + i) exp(-j t i^2)|`` with mirrored borders.
    """
    kernel = make_chirp_kernel(t, r)
    f = _as_signal(f)
    padded = np.pad(f, kernel.r, mode="symmetric")
    return np.abs(_correlate_last_axis(padded, kernel.as_complex(), f.size))


def transform_1d_expanded(f, t: float, r: int) -> np.ndarray:
    """Same quantity as :func:`transform_1d`, evaluated in real arithmetic.

    Uses the symmetric pair sums ``d_i = f(x - i) + f(x + i)`` and the
    fully developed square::

        |f*G|^2 = f^2 + 2 sum_i d_i (cos(t i^2) f + d_i / 2
                                      + sum_{j>i} cos(t i^2 - t j^2) d_j)

    Kept as an independent evaluation route for cross-checking.
    """
    t, r = _check_params(t, r)
    f = _as_signal(f)
    n = f.size
    padded = np.pad(f, r, mode="symmetric")
    centre = padded[r:r + n]
    d = [padded[r - i:r - i + n] + padded[r + i:r + i + n] for i in range(1, r + 1)]
    squared = centre * centre
    for i in range(1, r + 1):
        di = d[i - 1]
        inner = math.cos(t * i * i) * centre + 0.5 * di
        for j in range(i + 1, r + 1):
            inner = inner + math.cos(t * i * i - t * j * j) * d[j - 1]
        squared = squared + 2.0 * di * inner
    # rounding can push an exact zero slightly negative
    return np.sqrt(np.maximum(squared, 0.0))


def transform_2d(image, t: float, r: int) -> np.ndarray:
    """Modulus of the convolution with ``exp(-j t (x^2 + y^2))`` on ``[-r, r]^2``.

    The kernel is separable, so rows are filtered first and columns second,
    both in complex arithmetic; the modulus is taken once at the end.
    """
    kernel = make_chirp_kernel(t, r)
    image = _as_image(image)
    h, w = image.shape
    taps = kernel.as_complex()
    padded = np.pad(image, kernel.r, mode="symmetric")
    rows = _correlate_last_axis(padded, taps, w)
    cols = _correlate_last_axis(rows.T, taps, h).T
    return np.abs(cols)


def squared_distance_map(shape) -> np.ndarray:
    """Squared distance of every bin from the centre of an ``m x n`` spectrum.

    The centre sits at ``(m // 2, n // 2)``, which is where ``numpy.fft.fftshift``
    places the zero frequency for both even and odd sizes.
    """
    m, n = shape
    u = np.arange(m, dtype=np.float64) - (m // 2)
    v = np.arange(n, dtype=np.float64) - (n // 2)
    return u[:, None] ** 2 + v[None, :] ** 2


def transform_frequency(image, t: float, k: float = 1.0) -> np.ndarray:
    """Frequency-domain transform ``|IDFT(exp(-j k d_uv t) * DFT(I))|``."""
    t = float(t)
    k = float(k)
    if not math.isfinite(t) or t < 0:
        raise InvalidParameterError(f"t must be finite and non-negative, got {t}")
    if not math.isfinite(k):
        raise InvalidParameterError(f"k must be finite, got {k}")
    image = _as_image(image)
    spectrum = np.fft.fftshift(np.fft.fft2(image))
    multiplier = np.exp(-1j * k * t * squared_distance_map(image.shape))
    return np.abs(np.fft.ifft2(np.fft.ifftshift(spectrum * multiplier)))
