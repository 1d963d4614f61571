"""Regular-access data-parallel operators.

Grayscale conversion, morphological opening with a disk structuring
element, color deconvolution (optical-density stain separation), and the
Sobel gradient.  All operators partition output rows across workers and
are bit-exact for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .parallel import resolve_workers, run_banded
from .tiles import ImageTile

__all__ = [
    "StructuringElement",
    "disk",
    "StainMatrix",
    "default_he_stains",
    "load_stain_matrix",
    "rgb_to_gray",
    "morph_open",
    "color_deconvolution",
    "sobel_gradient",
]


# ---------------------------------------------------------------------------
# structuring elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructuringElement:
    """Disk neighborhood: all (dy, dx) with dy^2 + dx^2 <= radius^2."""

    radius: int
    offsets: tuple

    def __post_init__(self):
        offs = set(self.offsets)
        if (0, 0) not in offs:
            raise ValueError("structuring element must contain the origin")
        if any((-dy, -dx) not in offs for dy, dx in offs):
            raise ValueError("structuring element offsets must be symmetric about the origin")


def disk(radius: int) -> StructuringElement:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    offs = tuple(
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dy * dy + dx * dx <= radius * radius
    )
    return StructuringElement(radius=radius, offsets=offs)


# ---------------------------------------------------------------------------
# stain matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StainMatrix:
    """3x3 matrix of unit-length stain optical-density vectors (rows = stains)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("stain matrix must be 3x3")
        norms = np.sqrt((m * m).sum(axis=1))
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("stain rows must have unit Euclidean norm (within 1e-6)")
        if abs(np.linalg.det(m)) < 1e-9:
            raise ValueError("stain matrix is singular")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_rows(cls, rows, normalize: bool = True) -> "StainMatrix":
        m = np.asarray(rows, dtype=np.float64).reshape(3, 3)
        if normalize:
            norms = np.sqrt((m * m).sum(axis=1, keepdims=True))
            if np.any(norms == 0):
                raise ValueError("stain row with zero norm")
            m = m / norms
        return cls(m)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def default_he_stains() -> StainMatrix:
    """Standard H&E vectors; third stain is the normalized cross product."""
    h = np.array([0.650, 0.704, 0.286])
    e = np.array([0.072, 0.990, 0.105])
    r = np.cross(h, e)
    return StainMatrix.from_rows([h, e, r], normalize=True)


def load_stain_matrix(path) -> StainMatrix:
    """Load 9 whitespace-separated numbers (row-major stain rows)."""
    text = Path(path).read_text()
    vals = [float(t) for t in text.split()]
    if len(vals) != 9:
        raise ValueError(f"stain config must hold exactly 9 numbers, got {len(vals)}")
    return StainMatrix.from_rows(vals)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def rgb_to_gray(tile: ImageTile, workers=None) -> ImageTile:
    """BT.601 luma: round(0.299 R + 0.587 G + 0.114 B), round half up."""
    if tile.channels != 3 or tile.sample_kind != "u8":
        raise ValueError(f"rgb_to_gray needs a 3-channel u8 tile, got {tile.channels} channels")
    workers = resolve_workers(workers)
    src = tile.data
    out = np.empty((tile.height, tile.width), dtype=np.uint8)

    def band(y0, y1):
        s = src[y0:y1].astype(np.float64)
        v = s[:, :, 0] * 0.299 + s[:, :, 1] * 0.587 + s[:, :, 2] * 0.114
        out[y0:y1] = np.clip(np.floor(v + 0.5), 0, 255).astype(np.uint8)

    run_banded(band, tile.height, workers)
    return ImageTile(out)


def _pad_replicate(img: np.ndarray, r: int) -> np.ndarray:
    return np.pad(img, r, mode="edge")


def _se_filter(padded, r, offsets, reduce_fn, out, y0, y1):
    """min/max over structuring-element offsets for output rows [y0, y1)."""
    w = out.shape[1]
    acc = None
    for dy, dx in offsets:
        view = padded[y0 + r + dy : y1 + r + dy, r + dx : r + dx + w]
        acc = view.copy() if acc is None else reduce_fn(acc, view, out=acc)
    out[y0:y1] = acc


def morph_open(tile: ImageTile, se: StructuringElement | None = None, workers=None) -> ImageTile:
    """Erosion then dilation with a disk; borders replicate edge values."""
    if tile.channels != 1:
        raise ValueError("morph_open needs a 1-channel tile")
    se = se if se is not None else disk(6)
    if se.radius >= min(tile.width, tile.height) / 2:
        raise ValueError(
            f"structuring element radius {se.radius} too large for {tile.width}x{tile.height} tile"
        )
    workers = resolve_workers(workers)
    r = se.radius
    src = tile.data

    eroded = np.empty_like(src)
    padded = _pad_replicate(src, r)
    run_banded(
        lambda y0, y1: _se_filter(padded, r, se.offsets, np.minimum, eroded, y0, y1),
        tile.height,
        workers,
    )
    opened = np.empty_like(src)
    padded2 = _pad_replicate(eroded, r)
    run_banded(
        lambda y0, y1: _se_filter(padded2, r, se.offsets, np.maximum, opened, y0, y1),
        tile.height,
        workers,
    )
    return ImageTile(opened)


def color_deconvolution(tile: ImageTile, stains: StainMatrix | None = None, workers=None):
    """Split an RGB tile into per-stain concentration channels.

    Per pixel: OD_c = -log10((I_c + 1) / 256), concentrations = OD @ inv(M),
    clamped at zero.  Returns a tuple of three 1-channel f32 tiles.
    """
    if tile.channels != 3 or tile.sample_kind != "u8":
        raise ValueError("color_deconvolution needs a 3-channel u8 tile")
    stains = stains if stains is not None else default_he_stains()
    inv = stains.inverse()
    workers = resolve_workers(workers)
    src = tile.data
    out = np.empty((tile.height, tile.width, 3), dtype=np.float32)

    def band(y0, y1):
        od = -np.log10((src[y0:y1].astype(np.float64) + 1.0) / 256.0)
        conc = od @ inv
        np.maximum(conc, 0.0, out=conc)
        out[y0:y1] = conc.astype(np.float32)

    run_banded(band, tile.height, workers)
    return tuple(ImageTile(out[:, :, s].copy()) for s in range(3))


def sobel_gradient(tile: ImageTile, workers=None):
    """Standard 3x3 Sobel with edge replication.

    Returns (gx, gy, magnitude) as f32 tiles; magnitude = sqrt(gx^2 + gy^2).
    """
    if tile.channels != 1:
        raise ValueError("sobel_gradient needs a 1-channel tile")
    if tile.width < 3 or tile.height < 3:
        raise ValueError("sobel_gradient needs at least a 3x3 tile")
    workers = resolve_workers(workers)
    src = tile.data.astype(np.float32)
    padded = _pad_replicate(src, 1)
    h, w = tile.height, tile.width
    gx = np.empty((h, w), dtype=np.float32)
    gy = np.empty((h, w), dtype=np.float32)
    mag = np.empty((h, w), dtype=np.float32)

    # kernel weights at offset (dy, dx): gx = x-difference, gy = y-difference
    wx = {(-1, -1): -1, (-1, 1): 1, (0, -1): -2, (0, 1): 2, (1, -1): -1, (1, 1): 1}
    wy = {(-1, -1): -1, (-1, 0): -2, (-1, 1): -1, (1, -1): 1, (1, 0): 2, (1, 1): 1}

    def band(y0, y1):
        ax = np.zeros((y1 - y0, w), dtype=np.float32)
        ay = np.zeros((y1 - y0, w), dtype=np.float32)
        for (dy, dx), c in wx.items():
            ax += c * padded[y0 + 1 + dy : y1 + 1 + dy, 1 + dx : 1 + dx + w]
        for (dy, dx), c in wy.items():
            ay += c * padded[y0 + 1 + dy : y1 + 1 + dy, 1 + dx : 1 + dx + w]
        gx[y0:y1] = ax
        gy[y0:y1] = ay
        mag[y0:y1] = np.sqrt(ax * ax + ay * ay)

    run_banded(band, h, workers)
    return ImageTile(gx), ImageTile(gy), ImageTile(mag)
