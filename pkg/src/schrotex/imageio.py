"""Reading 8-bit grey images (PGM P5 / PNG) and writing PGM."""

from __future__ import annotations

import os

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageReadError(OSError):
    pass


def _pgm_tokens(data: bytes, count: int):
    """Yield ``count`` header tokens and the offset of the raster."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(tok) for tok in tokens[1:])
    if not 0 < maxval < 256:
        raise ValueError(f"only 8-bit PGM is supported (maxval {maxval})")
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    return raster.reshape(height, width).copy()


def write_pgm(path, image) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM output needs a 2D array")
    if image.dtype != np.uint8:
        if image.min() < 0 or image.max() > 255:
            raise ValueError("PGM pixel values must lie in [0, 255]")
        image = image.astype(np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(image).tobytes())


def to_grey(pixels: np.ndarray) -> np.ndarray:
    """Convert an RGB(A) array to 8-bit grey with BT.601 luminance, rounding half up."""
    if pixels.ndim == 2:
        return pixels.astype(np.uint8)
    rgb = pixels[..., :3].astype(np.float64)
    luma = rgb @ np.array(LUMA_WEIGHTS)
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def _read_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I", "F"):
            raise ValueError(f"unsupported pixel mode {im.mode} (8-bit only)")
        if im.mode == "LA":
            im = im.convert("L")
        elif im.mode not in ("L", "RGB", "RGBA"):
            im = im.convert("RGB")
        return np.asarray(im)


def load_grey_image(path) -> np.ndarray:
    """Load a PGM or PNG file as a 2D ``uint8`` array of grey levels."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            magic = fh.read(2)
        if magic == b"P5":
            return read_pgm(path)
        return to_grey(_read_png(path))
    except (OSError, ValueError) as exc:
        raise ImageReadError(f"cannot read image {path}: {exc}") from exc
    except Exception as exc:  # Pillow raises assorted decoder errors
        raise ImageReadError(f"cannot decode image {path}: {exc}") from exc


def scale_to_byte(field) -> np.ndarray:
    """Min-max scale a real field to ``0..255``; a constant field maps to 0."""
    field = np.asarray(field, dtype=np.float64)
    lo, hi = field.min(), field.max()
    if hi == lo:
        return np.zeros(field.shape, dtype=np.uint8)
    return np.floor((field - lo) * (255.0 / (hi - lo)) + 0.5).astype(np.uint8)


def clip_to_byte(field) -> np.ndarray:
    return np.clip(np.floor(np.asarray(field, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)
