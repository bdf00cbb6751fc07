"""8-bit binary PGM (P5) grids of image tiles."""
import math
import re
from pathlib import Path

import numpy as np

from vampvae.errors import ContractError, FormatError

MAXVAL = 255
MARGIN = 1
MARGIN_VALUE = 128

_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s")


def to_pixels(values: np.ndarray) -> np.ndarray:
    return np.round(np.clip(values, 0.0, 1.0) * MAXVAL).astype(np.uint8)


def tile_grid(images: np.ndarray, image_shape: tuple[int, int], cols: int) -> np.ndarray:
    """
    Arrange rows of `images` (each H*W values in [0, 1]) left-to-right, top-to-bottom.

    Tiles are separated and surrounded by a MARGIN-pixel border, so the grid is
    cols*W + cols + 1 pixels wide.
    """
    height, width = image_shape
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 2 or images.shape[1] != height * width:
        raise ContractError(f"images of shape {images.shape} do not match image shape {image_shape}")
    if cols < 1:
        raise ContractError("a grid needs at least one column")
    rows = max(1, math.ceil(len(images) / cols))
    grid = np.full((rows * height + (rows + 1) * MARGIN, cols * width + (cols + 1) * MARGIN),
                   MARGIN_VALUE, dtype=np.uint8)
    for i, image in enumerate(images):
        r, c = divmod(i, cols)
        top = MARGIN + r * (height + MARGIN)
        left = MARGIN + c * (width + MARGIN)
        grid[top:top + height, left:left + width] = to_pixels(image.reshape(height, width))
    return grid


def encode_pgm(pixels: np.ndarray) -> bytes:
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise ContractError("PGM payload must be a 2-D uint8 array")
    height, width = pixels.shape
    return f"P5\n{width} {height}\n{MAXVAL}\n".encode("ascii") + pixels.tobytes()


def write_grid(path: str | Path, images: np.ndarray, image_shape: tuple[int, int], cols: int | None = None) -> Path:
    """Write a square-ish grid of tiles; `cols` defaults to ceil(sqrt(n))."""
    cols = cols or max(1, math.isqrt(max(len(images) - 1, 0)) + 1)
    path = Path(path)
    path.write_bytes(encode_pgm(tile_grid(images, image_shape, cols)))
    return path


def interleave_pairs(originals: np.ndarray, reconstructions: np.ndarray) -> np.ndarray:
    """original_0, reconstruction_0, original_1, ... so pairs sit side by side in a grid with even cols."""
    if originals.shape != reconstructions.shape:
        raise ContractError("originals and reconstructions differ in shape")
    paired = np.empty((2 * len(originals), originals.shape[1]))
    paired[0::2] = originals
    paired[1::2] = reconstructions
    return paired


def read_pgm(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    match = _HEADER.match(blob)
    if match is None:
        raise FormatError("not a binary PGM (P5) file", offset=0)
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != MAXVAL:
        raise FormatError(f"unsupported maxval {maxval}", offset=match.start(3))
    payload = blob[match.end():]
    if len(payload) != width * height:
        raise FormatError(f"expected {width * height} pixel bytes, found {len(payload)}", offset=match.end())
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
