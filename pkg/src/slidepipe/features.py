"""Per-object feature computation over bounding boxes.

Objects are processed independently (one worker task per object chunk);
all statistics use the population (divide-by-N) variance convention and
the lower median for even-sized samples, so values are bit-stable across
worker counts and scheduling orders.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .parallel import resolve_workers
from .regular import sobel_gradient
from .tiles import ImageTile

__all__ = [
    "ObjectRecord",
    "StatVector",
    "FeatureVector",
    "extract_objects",
    "pixel_stats",
    "gradient_stats",
    "sobel_edge_stats",
    "compute_features",
    "FEATURE_COLUMNS",
    "feature_csv_lines",
]


@dataclass(frozen=True)
class ObjectRecord:
    """One labeled component: inclusive bounding box and pixel area."""

    label: int
    min_y: int
    min_x: int
    max_y: int
    max_x: int
    area: int


@dataclass(frozen=True)
class StatVector:
    mean: float
    median: float
    min: float
    max: float
    std: float


@dataclass(frozen=True)
class FeatureVector:
    """Full per-object feature row: intensity, gradient, and edge statistics."""

    label: int
    area: int
    min_y: int
    min_x: int
    max_y: int
    max_x: int
    pixel: StatVector
    gradient: StatVector
    edge: StatVector
    edge_fraction: float


def extract_objects(labels: np.ndarray) -> list[ObjectRecord]:
    """Minimal bounding box and area of every nonzero label, by label order."""
    ys, xs = np.nonzero(labels)
    if ys.size == 0:
        return []
    ls = labels[ys, xs].astype(np.int64)
    top = int(ls.max())
    min_y = np.full(top + 1, np.iinfo(np.int64).max, dtype=np.int64)
    min_x = np.full(top + 1, np.iinfo(np.int64).max, dtype=np.int64)
    max_y = np.full(top + 1, -1, dtype=np.int64)
    max_x = np.full(top + 1, -1, dtype=np.int64)
    np.minimum.at(min_y, ls, ys)
    np.minimum.at(min_x, ls, xs)
    np.maximum.at(max_y, ls, ys)
    np.maximum.at(max_x, ls, xs)
    counts = np.bincount(ls, minlength=top + 1)
    return [
        ObjectRecord(
            label=lab,
            min_y=int(min_y[lab]),
            min_x=int(min_x[lab]),
            max_y=int(max_y[lab]),
            max_x=int(max_x[lab]),
            area=int(counts[lab]),
        )
        for lab in range(1, top + 1)
        if counts[lab] > 0
    ]


def _stat_vector(vals: np.ndarray) -> StatVector:
    v = np.sort(vals.astype(np.float64))
    n = v.size
    mean = float(v.mean())
    return StatVector(
        mean=mean,
        median=float(v[(n - 1) // 2]),
        min=float(v[0]),
        max=float(v[-1]),
        std=float(np.sqrt(np.mean((v - mean) ** 2))),
    )


def _per_object(values: np.ndarray, objects, labels, workers, fn):
    """Run fn(object, bbox values) per object, objects split across workers."""

    def one(obj: ObjectRecord):
        box = (slice(obj.min_y, obj.max_y + 1), slice(obj.min_x, obj.max_x + 1))
        sel = labels[box] == obj.label
        if not sel.any():
            raise ValueError(f"label {obj.label} has no pixels inside its record bbox")
        return fn(obj, values[box][sel])

    if workers <= 1 or len(objects) < 2:
        return [one(o) for o in objects]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, objects))


def pixel_stats(gray: ImageTile, objects, labels: np.ndarray, workers=None) -> list[StatVector]:
    """Raw-intensity statistics of each object, restricted to its bbox."""
    if gray.channels != 1:
        raise ValueError("pixel_stats needs a 1-channel tile")
    if gray.data.shape != labels.shape:
        raise ValueError("tile and label map dimensions differ")
    workers = resolve_workers(workers)
    return _per_object(gray.data, objects, labels, workers, lambda o, v: _stat_vector(v))


def gradient_stats(gray: ImageTile, objects, labels: np.ndarray, workers=None) -> list[StatVector]:
    """Statistics of the whole-tile Sobel gradient magnitude per object."""
    workers = resolve_workers(workers)
    _, _, mag = sobel_gradient(gray, workers=workers)
    return _per_object(mag.data, objects, labels, workers, lambda o, v: _stat_vector(v))


def sobel_edge_stats(
    gray: ImageTile, objects, labels: np.ndarray, edge_threshold: float = 50.0, workers=None
):
    """Thresholded-gradient statistics plus per-object edge-pixel fraction.

    The edge response is the Sobel magnitude where it exceeds the
    threshold and 0 elsewhere; the fraction counts object pixels whose
    magnitude exceeds the threshold.  Returns (stat vectors, fractions).
    """
    if edge_threshold < 0:
        raise ValueError("edge_threshold must be >= 0")
    workers = resolve_workers(workers)
    _, _, mag = sobel_gradient(gray, workers=workers)

    def one(obj, vals):
        above = vals > edge_threshold
        resp = np.where(above, vals, 0.0)
        return _stat_vector(resp), float(np.count_nonzero(above) / obj.area)

    pairs = _per_object(mag.data, objects, labels, workers, one)
    return [p[0] for p in pairs], [p[1] for p in pairs]


def compute_features(
    gray: ImageTile, labels: np.ndarray, edge_threshold: float = 50.0, workers=None
) -> list[FeatureVector]:
    """Assemble the full feature table for one tile."""
    objects = extract_objects(labels)
    px = pixel_stats(gray, objects, labels, workers=workers)
    gr = gradient_stats(gray, objects, labels, workers=workers)
    ed, frac = sobel_edge_stats(gray, objects, labels, edge_threshold, workers=workers)
    return [
        FeatureVector(
            label=o.label,
            area=o.area,
            min_y=o.min_y,
            min_x=o.min_x,
            max_y=o.max_y,
            max_x=o.max_x,
            pixel=px[i],
            gradient=gr[i],
            edge=ed[i],
            edge_fraction=frac[i],
        )
        for i, o in enumerate(objects)
    ]


FEATURE_COLUMNS = (
    "label",
    "area",
    "min_y",
    "min_x",
    "max_y",
    "max_x",
    "pixel_mean",
    "pixel_median",
    "pixel_min",
    "pixel_max",
    "pixel_std",
    "grad_mean",
    "grad_median",
    "grad_min",
    "grad_max",
    "grad_std",
    "edge_mean",
    "edge_median",
    "edge_min",
    "edge_max",
    "edge_std",
    "edge_fraction",
)


def feature_csv_lines(features: list[FeatureVector]):
    """CSV lines (header first) with the fixed column order above."""
    yield ",".join(FEATURE_COLUMNS)
    for f in features:
        cells = [f.label, f.area, f.min_y, f.min_x, f.max_y, f.max_x]
        for sv in (f.pixel, f.gradient, f.edge):
            cells += [sv.mean, sv.median, sv.min, sv.max, sv.std]
        cells.append(f.edge_fraction)
        yield ",".join(repr(c) if isinstance(c, float) else str(c) for c in cells)
