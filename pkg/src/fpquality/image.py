"""Grayscale image ingestion, block decomposition and centroid weighting."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np


class ImageFormatError(ValueError):
    """Raised for malformed or unsupported image input."""


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster. pixels is (height, width) uint8, 0 = ridge ink."""

    pixels: np.ndarray
    dpi: float = 500.0

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be a 2-D uint8 array")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if self.dpi <= 0:
            raise ValueError("dpi must be positive")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BlockGrid:
    """Non-overlapped square-block decomposition of an image.

    foreground/centroid/weights start unset (None) and are filled by
    segment_foreground and compute_centroid_weights. Background blocks
    always carry weight 0.
    """

    block_size: int
    cols: int
    rows: int
    width: int
    height: int
    foreground: np.ndarray | None = None    # (rows, cols) bool
    centroid: tuple[float, float] | None = None   # (x, y) pixels
    weights: np.ndarray | None = None       # (rows, cols) float, >= 0

    def block_bounds(self, r: int, c: int) -> tuple[int, int, int, int]:
        """Pixel bounds (y0, y1, x0, x1) of block (r, c), clipped to the image."""
        b = self.block_size
        return (r * b, min((r + 1) * b, self.height),
                c * b, min((c + 1) * b, self.width))

    def block_center(self, r: int, c: int) -> tuple[float, float]:
        """Center (x, y) of the real pixel area of block (r, c)."""
        y0, y1, x0, x1 = self.block_bounds(r, c)
        return ((x0 + x1 - 1) / 2.0, (y0 + y1 - 1) / 2.0)

    def is_partial(self, r: int, c: int) -> bool:
        y0, y1, x0, x1 = self.block_bounds(r, c)
        return (y1 - y0) != self.block_size or (x1 - x0) != self.block_size


def load_image(source, fmt: str | None = None) -> GrayImage:
    """Decode a binary PGM (P5, maxval 255) or 8-bit grayscale PNG.

    source is a path or binary file object. The format is sniffed from the
    magic bytes unless fmt ("pgm" or "png") is given. dpi is read from PNG
    metadata when present, else defaults to 500.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if fmt is None:
        if data[:2] == b"P5":
            fmt = "pgm"
        elif data[:8] == b"\x89PNG\r\n\x1a\n":
            fmt = "png"
        else:
            raise ImageFormatError("unrecognized image format (expected PGM P5 or PNG)")
    if fmt == "pgm":
        return _load_pgm(data)
    if fmt == "png":
        return _load_png(data)
    raise ImageFormatError(f"unsupported format {fmt!r}")


def _load_pgm(data: bytes) -> GrayImage:
    if data[:2] != b"P5":
        raise ImageFormatError("not a binary PGM (P5) file")
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed up to the single whitespace after maxval
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError("non-numeric PGM header field") from None
    if width < 1 or height < 1:
        raise ImageFormatError("PGM dimensions must be positive")
    if maxval != 255:
        raise ImageFormatError(f"only 8-bit PGM supported (maxval 255, got {maxval})")
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise ImageFormatError(
            f"PGM raster has {len(raster)} bytes, expected {width * height}")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()
    return GrayImage(pixels=pixels, dpi=500.0)


def _load_png(data: bytes) -> GrayImage:
    from PIL import Image as PILImage

    img = PILImage.open(io.BytesIO(data))
    if img.mode != "L":
        raise ImageFormatError(
            f"PNG must be single-channel 8-bit grayscale, got mode {img.mode!r}")
    dpi = 500.0
    if "dpi" in img.info:
        dpi = float(img.info["dpi"][0])
    pixels = np.asarray(img, dtype=np.uint8)
    return GrayImage(pixels=pixels, dpi=dpi)


def save_pgm(img: GrayImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.width, img.height))
        fh.write(img.pixels.tobytes())


def partition_blocks(img: GrayImage, block_size: int) -> BlockGrid:
    """Split the image into non-overlapped square blocks of block_size pixels.

    Partial edge blocks are included; their statistics later use only real
    pixels. Raises ValueError when block_size is outside
    [4, min(width, height)].
    """
    if block_size < 4 or block_size > min(img.width, img.height):
        raise ValueError(
            f"block_size {block_size} outside [4, {min(img.width, img.height)}]")
    cols = math.ceil(img.width / block_size)
    rows = math.ceil(img.height / block_size)
    return BlockGrid(block_size=block_size, cols=cols, rows=rows,
                     width=img.width, height=img.height)


def block_stats(img: GrayImage, grid: BlockGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-block (mean, std) over real pixels only. Population std."""
    px = img.pixels.astype(np.float64)
    means = np.empty((grid.rows, grid.cols))
    stds = np.empty((grid.rows, grid.cols))
    for r in range(grid.rows):
        for c in range(grid.cols):
            y0, y1, x0, x1 = grid.block_bounds(r, c)
            blk = px[y0:y1, x0:x1]
            means[r, c] = blk.mean()
            stds[r, c] = blk.std()
    return means, stds


def segment_foreground(img: GrayImage, grid: BlockGrid,
                       std_min: float = 12.0, mean_max: float = 220.0) -> BlockGrid:
    """Mark blocks with ridge texture as foreground.

    A block is foreground iff its intensity std >= std_min and its mean is
    below mean_max. An all-background result is valid.
    """
    means, stds = block_stats(img, grid)
    fg = (stds >= std_min) & (means < mean_max)
    return BlockGrid(block_size=grid.block_size, cols=grid.cols, rows=grid.rows,
                     width=grid.width, height=grid.height, foreground=fg)


def compute_centroid_weights(grid: BlockGrid, decay: float = 0.0) -> BlockGrid:
    """Set the foreground centroid and Gaussian distance weights.

    w_i = exp(-d_i^2 / (2 sigma^2)) for foreground blocks, 0 for background,
    where d_i is the distance from the block center to the centroid of the
    foreground block centers. decay <= 0 selects the default sigma: one
    quarter of the foreground bounding-box diagonal (floor 1 px).
    """
    if grid.foreground is None:
        raise ValueError("grid has no foreground mask; run segment_foreground first")
    rs, cs = np.nonzero(grid.foreground)
    if rs.size == 0:
        raise ValueError("no foreground blocks")
    centers = np.array([grid.block_center(r, c) for r, c in zip(rs, cs)])
    centroid = (float(centers[:, 0].mean()), float(centers[:, 1].mean()))
    if decay <= 0:
        dx = centers[:, 0].max() - centers[:, 0].min() + grid.block_size
        dy = centers[:, 1].max() - centers[:, 1].min() + grid.block_size
        decay = max(1.0, 0.25 * math.hypot(dx, dy))
    d2 = (centers[:, 0] - centroid[0]) ** 2 + (centers[:, 1] - centroid[1]) ** 2
    w = np.zeros((grid.rows, grid.cols))
    w[rs, cs] = np.exp(-d2 / (2.0 * decay * decay))
    return BlockGrid(block_size=grid.block_size, cols=grid.cols, rows=grid.rows,
                     width=grid.width, height=grid.height,
                     foreground=grid.foreground, centroid=centroid, weights=w)


def prepare_grid(img: GrayImage, cfg=None) -> BlockGrid:
    """Partition, segment and weight in one step using config defaults."""
    from .config import QualityConfig

    cfg = cfg or QualityConfig()
    b = max(4, round(cfg.block_size * img.dpi / 500.0))
    b = min(b, min(img.width, img.height))
    grid = partition_blocks(img, b)
    grid = segment_foreground(img, grid, cfg.seg_std_min, cfg.seg_mean_max)
    if grid.foreground.any():
        grid = compute_centroid_weights(grid, cfg.weight_sigma)
    return grid
