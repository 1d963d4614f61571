"""Image tiles, synthetic tile generation, and portable-anymap file I/O.

A tile is a small immutable wrapper around a row-major numpy array:
``(h, w)`` for single-channel data, ``(h, w, c)`` for multi-channel.
Supported sample kinds are 8-bit unsigned (``u8``) and 32-bit float
(``f32``).  Binary masks and label maps are plain numpy arrays by
convention:

* ``BinaryMask``  -- bool array, True = foreground
* ``LabelMap``    -- int32 array, 0 = background, components labeled 1..K
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ImageTile",
    "make_synthetic_tile",
    "read_tile",
    "write_tile",
]


@dataclass(frozen=True)
class ImageTile:
    """Immutable pixel grid; the unit of pipeline work."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if not isinstance(d, np.ndarray) or d.ndim not in (2, 3):
            raise ValueError("tile data must be a 2-D or 3-D numpy array")
        if d.shape[0] < 1 or d.shape[1] < 1 or (d.ndim == 3 and d.shape[2] < 1):
            raise ValueError(f"bad tile shape {d.shape}")
        if d.dtype == np.uint8:
            kind = "u8"
        elif d.dtype == np.float32:
            kind = "f32"
            if not np.isfinite(d).all():
                raise ValueError("f32 tile contains non-finite samples")
        else:
            raise ValueError(f"unsupported sample dtype {d.dtype} (use uint8 or float32)")
        object.__setattr__(self, "_kind", kind)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    @property
    def sample_kind(self) -> str:
        return self._kind

    def channel(self, c: int) -> np.ndarray:
        return self.data if self.data.ndim == 2 else self.data[:, :, c]


# ---------------------------------------------------------------------------
# synthetic tiles
# ---------------------------------------------------------------------------

_BACKGROUND = (233, 228, 237)


def make_synthetic_tile(width: int, height: int, object_count: int, seed: int) -> ImageTile:
    """Generate a 3-channel u8 tile with disjoint dark elliptical blobs.

    The background is a uniform light color; each blob is a filled, slightly
    shaded ellipse at least 60 intensity levels darker than the background
    in every channel.  Deterministic for a fixed seed.
    """
    if width < 8 or height < 8:
        raise ValueError(f"tile dimensions must be >= 8, got {width}x{height}")
    if object_count < 0:
        raise ValueError("object_count must be >= 0")

    rgb = np.empty((height, width, 3), dtype=np.uint8)
    rgb[:, :] = _BACKGROUND
    if object_count == 0:
        return ImageTile(rgb)

    rng = np.random.default_rng(seed)
    side = min(width, height)
    hi = max(2, min(14, side // 5))
    lo = min(8, hi)

    placed = []  # (cy, cx, bounding radius)
    params = []
    tries = 0
    while len(params) < object_count:
        tries += 1
        if tries > 5000:
            raise ValueError(
                f"cannot place {object_count} disjoint objects on a {width}x{height} tile"
            )
        a = rng.uniform(lo, hi)
        b = rng.uniform(lo, hi)
        theta = rng.uniform(0.0, math.pi)
        r = max(a, b)
        cy = rng.uniform(r + 1, height - r - 2)
        cx = rng.uniform(r + 1, width - r - 2)
        if any((cy - py) ** 2 + (cx - px) ** 2 < (r + pr + 3.0) ** 2 for py, px, pr in placed):
            continue
        depth = rng.uniform(95, 150)
        tint = rng.uniform(-20, 20, size=3)
        placed.append((cy, cx, r))
        params.append((cy, cx, a, b, theta, depth, tint))

    ys, xs = np.mgrid[0:height, 0:width]
    img = rgb.astype(np.float64)
    for cy, cx, a, b, theta, depth, tint in params:
        ct, st = math.cos(theta), math.sin(theta)
        u = (xs - cx) * ct + (ys - cy) * st
        v = -(xs - cx) * st + (ys - cy) * ct
        rr = (u / a) ** 2 + (v / b) ** 2
        inside = rr <= 1.0
        # mild radial shading so gradients inside objects are nonzero
        shade = depth * (1.0 - 0.15 * rr[inside])
        for c in range(3):
            ch = img[:, :, c]
            ch[inside] = _BACKGROUND[c] + tint[c] - shade
    return ImageTile(np.clip(np.rint(img), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# portable anymap I/O (P5/P6 binary, PFM for f32)
# ---------------------------------------------------------------------------


def _read_pnm_tokens(buf: bytes, count: int):
    """Yield `count` whitespace-separated header tokens, skipping # comments.

    Returns (tokens, offset of the byte right after the last token's
    single trailing whitespace byte).
    """
    tokens = []
    i = 0
    n = len(buf)
    while len(tokens) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i < n and buf[i : i + 1] == b"#":
            while i < n and buf[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < n and not buf[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ValueError("malformed header: unexpected end of file")
        tokens.append(buf[i:j])
        i = j
    if i >= n or not buf[i : i + 1].isspace():
        raise ValueError("malformed header: missing whitespace after header")
    return tokens, i + 1


def read_tile(path) -> ImageTile:
    """Read a PGM (P5), PPM (P6) or PFM tile."""
    buf = Path(path).read_bytes()
    if len(buf) < 2:
        raise ValueError(f"{path}: malformed header: file too short")
    magic = buf[:2]
    if magic in (b"P5", b"P6"):
        toks, off = _read_pnm_tokens(buf[2:], 3)
        w, h, maxval = (int(t) for t in toks)
        if w < 1 or h < 1:
            raise ValueError(f"{path}: malformed header: bad dimensions {w}x{h}")
        if maxval != 255:
            raise ValueError(f"{path}: unsupported max-value {maxval} (only 255)")
        channels = 1 if magic == b"P5" else 3
        need = w * h * channels
        raster = buf[2 + off : 2 + off + need]
        if len(raster) < need:
            raise ValueError(f"{path}: truncated payload ({len(raster)} of {need} bytes)")
        data = np.frombuffer(raster, dtype=np.uint8, count=need)
        data = data.reshape((h, w) if channels == 1 else (h, w, 3)).copy()
        return ImageTile(data)
    if magic in (b"Pf", b"PF"):
        toks, off = _read_pnm_tokens(buf[2:], 3)
        w, h = int(toks[0]), int(toks[1])
        scale = float(toks[2])
        if w < 1 or h < 1:
            raise ValueError(f"{path}: malformed header: bad dimensions {w}x{h}")
        channels = 1 if magic == b"Pf" else 3
        need = w * h * channels
        raster = buf[2 + off :]
        if len(raster) < 4 * need:
            raise ValueError(f"{path}: truncated payload ({len(raster)} of {4 * need} bytes)")
        dt = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
        data = np.frombuffer(raster, dtype=dt, count=need).astype(np.float32)
        data = data.reshape((h, w) if channels == 1 else (h, w, 3))
        return ImageTile(data[::-1].copy())  # PFM rasters run bottom-up
    raise ValueError(f"{path}: malformed header: unknown magic {magic!r}")


def write_tile(tile: ImageTile, path) -> None:
    """Write a tile; the file suffix selects the format (.pgm/.ppm/.pfm)."""
    p = Path(path)
    suffix = p.suffix.lower()
    d = tile.data
    if suffix == ".pgm":
        if tile.sample_kind != "u8" or tile.channels != 1:
            raise ValueError("PGM requires a 1-channel u8 tile")
        header = f"P5\n{tile.width} {tile.height}\n255\n".encode()
        p.write_bytes(header + d.tobytes())
    elif suffix == ".ppm":
        if tile.sample_kind != "u8" or tile.channels != 3:
            raise ValueError("PPM requires a 3-channel u8 tile")
        header = f"P6\n{tile.width} {tile.height}\n255\n".encode()
        p.write_bytes(header + d.tobytes())
    elif suffix == ".pfm":
        if tile.sample_kind != "f32" or tile.channels not in (1, 3):
            raise ValueError("PFM requires a 1- or 3-channel f32 tile")
        magic = "Pf" if tile.channels == 1 else "PF"
        header = f"{magic}\n{tile.width} {tile.height}\n-1.0\n".encode()
        p.write_bytes(header + d[::-1].astype("<f4").tobytes())
    else:
        raise ValueError(f"unknown tile suffix {suffix!r} (use .pgm/.ppm/.pfm)")
