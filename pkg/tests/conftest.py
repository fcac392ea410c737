import cmath
import math

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def mirror_index(i, n):
    """Symmetric (edge-repeating) reflection of index ``i`` into ``[0, n)``."""
    m = i % (2 * n)
    return m if m < n else 2 * n - 1 - m


def brute_force_1d(f, t, r):
    """Naive complex convolution, one output sample at a time."""
    f = [float(v) for v in f]
    n = len(f)
    out = []
    for x in range(n):
        acc = 0j
        for i in range(-r, r + 1):
            acc += f[mirror_index(x + i, n)] * cmath.exp(-1j * t * i * i)
        out.append(abs(acc))
    return np.array(out)


def direct_2d(image, t, r):
    """Non-separable 2D convolution with exp(-j t (x^2 + y^2)), mirrored borders."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    ys = np.arange(h)
    xs = np.arange(w)
    acc = np.zeros((h, w), dtype=np.complex128)
    for i in range(-r, r + 1):
        rows = np.array([mirror_index(y + i, h) for y in ys])
        for j in range(-r, r + 1):
            cols = np.array([mirror_index(x + j, w) for x in xs])
            weight = complex(math.cos(t * (i * i + j * j)), -math.sin(t * (i * i + j * j)))
            acc += image[np.ix_(rows, cols)] * weight
    return np.abs(acc)


def box_sum_1d(f, r):
    n = len(f)
    return np.array([sum(int(f[mirror_index(x + i, n)]) for i in range(-r, r + 1)) for x in range(n)],
                    dtype=np.float64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
