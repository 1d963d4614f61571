"""Two-phase union-find connected-component labeling and area filtering.

Phase 1 labels horizontal strips independently (no shared writes between
strips); phase 2 merges trees that cross strip boundaries.  Union always
keeps the smaller root value as the merged root.  The output is
canonically relabeled 1..K in raster order of each component's first
pixel, so results are identical for any strip count.
"""

from __future__ import annotations

import numpy as np

from .parallel import resolve_workers, row_bands

__all__ = [
    "UnionFindForest",
    "connected_components",
    "area_histogram",
    "area_threshold",
]


class UnionFindForest:
    """Disjoint-set forest over element indices 0..n-1.

    ``find`` compresses paths; ``union`` picks the smaller root value as
    the root of the merged tree.
    """

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("forest size must be >= 0")
        self.parent = np.arange(n, dtype=np.int64)

    def __len__(self):
        return self.parent.size

    def _check(self, i: int) -> int:
        i = int(i)
        if i < 0 or i >= self.parent.size:
            raise IndexError(f"element {i} outside forest of size {self.parent.size}")
        return i

    def find(self, i: int) -> int:
        i = self._check(i)
        parent = self.parent
        root = i
        while parent[root] != root:
            root = int(parent[root])
        while parent[i] != root:
            parent[i], i = root, int(parent[i])
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra

    def flatten(self) -> np.ndarray:
        """Point every node directly at its root; returns the parent array."""
        p = self.parent
        while True:
            pp = p[p]
            if np.array_equal(pp, p):
                return p
            p[:] = pp


def _row_runs(row: np.ndarray):
    """Column runs [start, end) of foreground in one mask row."""
    padded = np.zeros(row.size + 2, dtype=np.int8)
    padded[1:-1] = row
    d = np.diff(padded)
    return np.flatnonzero(d == 1), np.flatnonzero(d == -1)


def _join_rows(forest, starts_a, ends_a, base_a, starts_b, ends_b, base_b, ext):
    """Union runs of two adjacent rows whose column ranges touch.

    ``ext`` widens run b by one column on each side (8-connectivity).
    """
    i = j = 0
    na, nb = starts_a.size, starts_b.size
    while i < nb and j < na:
        lo = starts_b[i] - ext
        hi = ends_b[i] + ext
        ps, pe = starts_a[j], ends_a[j]
        if ps < hi and pe > lo:
            forest.union(int(base_a + ps), int(base_b + starts_b[i]))
        if pe < hi:
            j += 1
        else:
            i += 1


def connected_components(mask: np.ndarray, connectivity: int = 8, tile_rows: int = 1) -> np.ndarray:
    """Label foreground components of a bool mask; 0 = background.

    ``tile_rows`` is the number of independent row strips used in phase 1.
    """
    if mask.dtype != bool or mask.ndim != 2:
        raise ValueError("mask must be a 2-D bool array")
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    if tile_rows < 1:
        raise ValueError("tile_rows must be >= 1")
    h, w = mask.shape
    ext = 1 if connectivity == 8 else 0
    forest = UnionFindForest(h * w)

    # phase 1: strips labeled independently (writes never cross a strip)
    strip_bounds = list(row_bands(h, min(tile_rows, h)))
    runs = [None] * h
    for y0, y1 in strip_bounds:
        for y in range(y0, y1):
            starts, ends = _row_runs(mask[y])
            runs[y] = (starts, ends)
            base = y * w
            parent = forest.parent
            for s, e in zip(starts.tolist(), ends.tolist()):
                parent[base + s : base + e] = base + s
            if y > y0:
                ps, pe = runs[y - 1]
                _join_rows(forest, ps, pe, (y - 1) * w, starts, ends, base, ext)

    # phase 2: merge trees across strip boundaries
    for y0, _ in strip_bounds[1:]:
        ps, pe = runs[y0 - 1]
        starts, ends = runs[y0]
        _join_rows(forest, ps, pe, (y0 - 1) * w, starts, ends, y0 * w, ext)

    parent = forest.flatten()
    out = np.zeros(h * w, dtype=np.int32)
    fg = np.flatnonzero(mask.ravel())
    if fg.size:
        roots = parent[fg]
        uniq, first = np.unique(roots, return_index=True)
        order = np.argsort(first, kind="stable")
        label_of = np.empty(uniq.size, dtype=np.int32)
        label_of[order] = np.arange(1, uniq.size + 1, dtype=np.int32)
        out[fg] = label_of[np.searchsorted(uniq, roots)]
    return out.reshape(h, w)


def area_histogram(labels: np.ndarray, workers=None) -> np.ndarray:
    """Pixel count per label (index = label value, entry 0 = background).

    Accumulated as per-band partial histograms merged by integer addition,
    so the total is exact for any worker count.
    """
    workers = resolve_workers(workers)
    top = int(labels.max()) if labels.size else 0
    hist = np.zeros(top + 1, dtype=np.int64)
    for y0, y1 in row_bands(labels.shape[0], workers):
        hist += np.bincount(labels[y0:y1].ravel(), minlength=top + 1)
    return hist


def area_threshold(
    labels: np.ndarray, min_area: int, max_area: int, workers=None
) -> np.ndarray:
    """Zero out components whose pixel area is outside [min_area, max_area]."""
    if min_area > max_area:
        raise ValueError(f"min_area {min_area} > max_area {max_area}")
    hist = area_histogram(labels, workers)
    keep = (hist >= min_area) & (hist <= max_area)
    keep[0] = False
    return np.where(keep[labels], labels, 0).astype(labels.dtype)
