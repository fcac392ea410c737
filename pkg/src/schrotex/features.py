"""Moment descriptors of the Schroedinger transform over a sweep of ``t``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transform import InvalidParameterError, transform_2d

DEFAULT_BINS = 256
GRID_STEPS = 100


@dataclass(frozen=True)
class Histogram:
    bin_centers: np.ndarray
    mass: np.ndarray

    @property
    def bin_count(self) -> int:
        return int(self.mass.size)


def t_grid(step: float = 1e-6, count: int = GRID_STEPS) -> np.ndarray:
    """Return ``step * i`` for ``i = 1..count``.

    The default spans ``[1e-6, 1e-4]``. Pass ``step=1e-4`` for the
    ``1e-4 * i`` indexing.
    """
    if step <= 0 or count < 1:
        raise InvalidParameterError("t-grid step must be positive and count >= 1")
    return step * np.arange(1, count + 1, dtype=np.float64)


def histogram(field, bins: int = DEFAULT_BINS) -> Histogram:
    """Normalized equal-width histogram over ``[min(field), max(field)]``.

    A constant field puts all of its mass in the first bin, whose centre is
    the constant value itself.
    """
    if bins < 1:
        raise InvalidParameterError(f"bins must be >= 1, got {bins}")
    values = np.asarray(field, dtype=np.float64).ravel()
    if values.size == 0:
        raise InvalidParameterError("cannot histogram an empty field")
    lo, hi = values.min(), values.max()
    if lo == hi:
        centers = np.full(bins, lo)
        mass = np.zeros(bins)
        mass[0] = 1.0
        return Histogram(centers, mass)
    try:
        counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
        centers = 0.5 * (edges[:-1] + edges[1:])
    except ValueError:
        # range too narrow (subnormal) for distinct float edges
        span = (values - lo) / (hi - lo)
        index = np.minimum((span * bins).astype(np.int64), bins - 1)
        counts = np.bincount(index, minlength=bins)
        centers = lo + (np.arange(bins) + 0.5) * ((hi - lo) / bins)
    return Histogram(centers, counts / values.size)


def central_moments(h: Histogram, M: int) -> np.ndarray:
    """Central moments ``mu^1..mu^M`` of a normalized histogram."""
    if M < 1:
        raise InvalidParameterError(f"M must be >= 1, got {M}")
    mean = np.dot(h.bin_centers, h.mass)
    dev = h.bin_centers - mean
    out = np.empty(M)
    power = np.ones_like(dev)
    for m in range(M):
        power = power * dev
        out[m] = np.dot(power, h.mass)
    return out


def build_descriptor(image, r: int = 6, M: int = 5, ts=None, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Concatenate the first ``M`` central moments for every ``t`` in ``ts``.

    Ordering is t-major: all moments of ``ts[0]``, then of ``ts[1]``, and so on.
    """
    if M < 1:
        raise InvalidParameterError(f"M must be >= 1, got {M}")
    ts = t_grid() if ts is None else np.asarray(ts, dtype=np.float64)
    out = np.empty((ts.size, M))
    for i, t in enumerate(ts):
        out[i] = central_moments(histogram(transform_2d(image, t, r), bins), M)
    return out.ravel()
