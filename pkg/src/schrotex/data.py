"""Datasets of labelled grey images, tiling, noise injection and synthetic textures."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imageio import load_grey_image, write_pgm
from .transform import InvalidParameterError

IMAGE_SUFFIXES = (".png", ".pgm")
GAUSSIAN_LEVELS = (5.0, 10.0, 20.0, 40.0)
SALT_PEPPER_LEVELS = (0.01, 0.05, 0.10, 0.20)
FAMILIES = ("grating", "checkerboard", "filtered_noise", "step_edge")


@dataclass(frozen=True)
class DatasetIndex:
    """Labelled image paths, relative to ``root`` and sorted by (label, path)."""

    root: str
    entries: tuple

    @property
    def classes(self) -> list:
        return sorted({label for _, label in self.entries})

    def __len__(self) -> int:
        return len(self.entries)

    def full_path(self, i: int) -> str:
        return os.path.join(self.root, self.entries[i][0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["path", "label"])
            writer.writerows(self.entries)


def scan_dataset(root) -> DatasetIndex:
    """Index ``<root>/<class_name>/<image files>``; the directory name is the label."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} is not a directory")
    entries = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(class_dir.iterdir()):
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((f.relative_to(root).as_posix(), class_dir.name))
    entries.sort(key=lambda e: (e[1], e[0]))
    return DatasetIndex(str(root), tuple(entries))


def load_dataset(index: DatasetIndex) -> list:
    return [load_grey_image(index.full_path(i)) for i in range(len(index))]


def tile_image(image, tile: int) -> list:
    """Non-overlapping ``tile x tile`` crops in row-major order; remainders are dropped."""
    if tile < 1:
        raise InvalidParameterError(f"tile must be >= 1, got {tile}")
    image = np.asarray(image)
    rows, cols = image.shape[0] // tile, image.shape[1] // tile
    return [
        image[i * tile:(i + 1) * tile, j * tile:(j + 1) * tile].copy()
        for i in range(rows)
        for j in range(cols)
    ]


def add_gaussian_noise(image, sigma: float, seed: int) -> np.ndarray:
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be >= 0, got {sigma}")
    image = np.asarray(image)
    if sigma == 0:
        return image.astype(np.uint8, copy=True)
    rng = np.random.default_rng(seed)
    noisy = image.astype(np.float64) + rng.normal(0.0, sigma, size=image.shape)
    return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)


def add_salt_pepper(image, p: float, seed: int) -> np.ndarray:
    """Replace each pixel with probability ``p`` by 0 or 255 (equally likely)."""
    if not 0 <= p <= 1:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p}")
    image = np.asarray(image).astype(np.uint8, copy=True)
    rng = np.random.default_rng(seed)
    hit = rng.random(image.shape) < p
    salt = rng.random(image.shape) < 0.5
    image[hit] = np.where(salt[hit], 255, 0)
    return image


def add_noise(image, kind: str, level: float, seed: int) -> np.ndarray:
    if kind == "gaussian":
        return add_gaussian_noise(image, level, seed)
    if kind in ("salt_pepper", "salt-pepper"):
        return add_salt_pepper(image, level, seed)
    raise InvalidParameterError(f"unknown noise kind {kind!r}")


# -- synthetic textures ------------------------------------------------------

def _coords(size):
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    return x, y


def _grating(rng, size, variant):
    freq = 0.025 * (1.0 + 0.7 * variant) * rng.uniform(0.95, 1.05)
    theta = (0.3 + 0.9 * variant) + rng.uniform(-0.1, 0.1)
    x, y = _coords(size)
    u = x * np.cos(theta) + y * np.sin(theta)
    return np.sin(2 * np.pi * freq * u + rng.uniform(0, 2 * np.pi))


def _checkerboard(rng, size, variant):
    cell = max(2, int(round((4 + 3 * variant) * rng.uniform(0.9, 1.1))))
    x, y = _coords(size)
    x = x + rng.integers(0, cell)
    y = y + rng.integers(0, cell)
    return np.where(((x // cell) + (y // cell)) % 2 == 0, 1.0, -1.0)


def _filtered_noise(rng, size, variant):
    corr = (3.0 + 2.5 * variant) * rng.uniform(0.9, 1.1)
    white = rng.standard_normal((size, size))
    f = np.fft.fftfreq(size)
    gain = np.exp(-2 * (np.pi * corr) ** 2 * (f[:, None] ** 2 + f[None, :] ** 2))
    smooth = np.real(np.fft.ifft2(np.fft.fft2(white) * gain))
    return smooth / (np.abs(smooth).max() + 1e-12)


def _step_edge(rng, size, variant):
    # alternating bands of random width along one axis
    run = (12 + 8 * variant) * rng.uniform(0.9, 1.1)
    cuts = np.cumsum(rng.exponential(run, size=size))
    levels = np.where(np.arange(cuts.size + 1) % 2 == 0, 0.5, -0.5)
    profile = levels[np.searchsorted(cuts, np.arange(size), side="right")]
    band = np.tile(profile, (size, 1))
    return band if variant % 2 == 0 else band.T


_GENERATORS = {
    "grating": _grating,
    "checkerboard": _checkerboard,
    "filtered_noise": _filtered_noise,
    "step_edge": _step_edge,
}


def synth_texture(family: str, variant: int, size: int, rng) -> np.ndarray:
    pattern = _GENERATORS[family](rng, size, variant)
    mean = rng.uniform(100, 156)
    contrast = rng.uniform(22, 26)
    noise = rng.normal(0.0, 6.0, size=(size, size))
    return np.clip(np.rint(mean + contrast * pattern + noise), 0, 255).astype(np.uint8)


def synth_texture_dataset(classes: int = 4, per_class: int = 25, size: int = 128, seed: int = 0):
    """Generate a labelled synthetic texture set.

    Class ``c`` uses family ``FAMILIES[c % 4]`` with a scale/orientation
    variant ``c // 4``; every image gets its own phase, offset, contrast and
    additive noise. Returns ``(DatasetIndex, images)``; the index root is
    empty until :func:`write_dataset` is called.
    """
    if classes < 2:
        raise InvalidParameterError(f"need at least 2 classes, got {classes}")
    if per_class < 1 or size < 1:
        raise InvalidParameterError("per_class and size must be positive")
    seeds = np.random.SeedSequence(seed).spawn(classes)
    entries, images = [], []
    for c in range(classes):
        family = FAMILIES[c % len(FAMILIES)]
        label = f"c{c:02d}_{family}"
        rng = np.random.default_rng(seeds[c])
        for j in range(per_class):
            entries.append((f"{label}/{label}_{j:03d}.pgm", label))
            images.append(synth_texture(family, c // len(FAMILIES), size, rng))
    return DatasetIndex("", tuple(entries)), images


def write_dataset(root, index: DatasetIndex, images) -> DatasetIndex:
    root = Path(root)
    for (rel, _), image in zip(index.entries, images):
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(target, image)
    return DatasetIndex(str(root), index.entries)
