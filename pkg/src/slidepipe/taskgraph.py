"""Operation-task graphs for the tile pipeline.

A task is (tile, operation kind); edges encode the stage ordering: the
seven segmentation operations form a chain per tile, and each of the four
feature operations depends on the end of that chain.  Tiles are
independent sub-graphs.  Stored as CSR arrays so graphs for tens of
thousands of tiles stay small.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "OP_KINDS",
    "SEGMENTATION_CHAIN",
    "FEATURE_OPS",
    "TaskGraph",
    "build_task_graph",
]

SEGMENTATION_CHAIN = (
    "rgb2gray",
    "morph_open",
    "morph_reconstruction",
    "fill_holes",
    "area_threshold",
    "connected_components",
    "distance_transform",
)
FEATURE_OPS = (
    "color_deconvolution",
    "pixel_stats",
    "gradient_stats",
    "sobel_edge_stats",
)
OP_KINDS = SEGMENTATION_CHAIN + FEATURE_OPS

STAGES = ("segmentation", "feature_computation")


def stage_of(kind: str) -> str:
    """Pipeline stage a (tile, operation) task belongs to.

    A tile's feature_computation stage depends on its segmentation stage:
    the graph builder gives every feature op an edge from the last
    segmentation op of the same tile.
    """
    if kind in SEGMENTATION_CHAIN:
        return "segmentation"
    if kind in FEATURE_OPS:
        return "feature_computation"
    raise ValueError(f"unknown pipeline operation {kind!r}")


class TaskGraph:
    """Immutable DAG of operation tasks with per-task tile ids.

    ``tile_of[t] == -1`` marks tasks not bound to a tile (free-form graphs
    used in scheduler tests).
    """

    def __init__(self, kinds, tile_of, pred_indptr, pred_indices):
        self.kinds = list(kinds)
        self.tile_of = np.asarray(tile_of, dtype=np.int64)
        self._pred_indptr = np.asarray(pred_indptr, dtype=np.int64)
        self._pred_indices = np.asarray(pred_indices, dtype=np.int64)
        n = len(self.kinds)
        if self.tile_of.size != n or self._pred_indptr.size != n + 1:
            raise ValueError("inconsistent task graph arrays")
        if self._pred_indices.size and (
            self._pred_indices.min() < 0 or self._pred_indices.max() >= n
        ):
            raise ValueError("dependency index out of range")
        # successor CSR
        counts = np.bincount(self._pred_indices, minlength=n)
        self._succ_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self._succ_indptr[1:])
        order = np.argsort(self._pred_indices, kind="stable")
        targets = np.repeat(np.arange(n, dtype=np.int64), np.diff(self._pred_indptr))
        self._succ_indices = targets[order]

    @classmethod
    def from_tasks(cls, tasks) -> "TaskGraph":
        """tasks: iterable of (kind, tile, predecessor ids)."""
        kinds, tiles, indptr, indices = [], [], [0], []
        for kind, tile, preds in tasks:
            kinds.append(kind)
            tiles.append(tile)
            indices.extend(int(p) for p in preds)
            indptr.append(len(indices))
        return cls(kinds, tiles, indptr, indices)

    @property
    def task_count(self) -> int:
        return len(self.kinds)

    @property
    def edge_count(self) -> int:
        return int(self._pred_indices.size)

    def predecessors(self, t: int) -> np.ndarray:
        return self._pred_indices[self._pred_indptr[t] : self._pred_indptr[t + 1]]

    def successors(self, t: int) -> np.ndarray:
        return self._succ_indices[self._succ_indptr[t] : self._succ_indptr[t + 1]]

    def edges(self):
        for t in range(self.task_count):
            for p in self.predecessors(t):
                yield int(p), t

    def indegrees(self) -> np.ndarray:
        return np.diff(self._pred_indptr)

    def tile_count(self) -> int:
        return int(self.tile_of.max()) + 1 if self.tile_of.size else 0

    def topo_order(self) -> np.ndarray:
        """Kahn order of all tasks; raises ValueError if the graph has a cycle."""
        indeg = self.indegrees().copy()
        order = np.empty(self.task_count, dtype=np.int64)
        frontier = list(np.flatnonzero(indeg == 0))
        k = 0
        while frontier:
            nxt = []
            for t in frontier:
                order[k] = t
                k += 1
                for s in self.successors(t):
                    indeg[s] -= 1
                    if indeg[s] == 0:
                        nxt.append(int(s))
            frontier = nxt
        if k != self.task_count:
            raise ValueError("task graph contains a cycle")
        return order

    def csr_lists(self):
        """Plain-python CSR views for the simulator hot loop."""
        return (
            self._succ_indptr.tolist(),
            self._succ_indices.tolist(),
            self.indegrees().tolist(),
        )


_PRED_OFFSETS = np.array([0, 1, 2, 3, 4, 5, 6, 6, 6, 6], dtype=np.int64)
_PRED_COUNTS = np.array([0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1], dtype=np.int64)


def build_task_graph(tiles: int) -> TaskGraph:
    """Per-tile pipeline graph: 11 operation tasks, 10 dependency edges."""
    if tiles < 1:
        raise ValueError("tile count must be >= 1")
    per = len(OP_KINDS)
    kinds = list(OP_KINDS) * tiles
    tile_of = np.repeat(np.arange(tiles, dtype=np.int64), per)
    indptr = np.tile(_PRED_COUNTS, tiles)
    indptr = np.concatenate([[0], np.cumsum(indptr)])
    bases = np.repeat(np.arange(tiles, dtype=np.int64) * per, _PRED_OFFSETS.size)
    indices = bases + np.tile(_PRED_OFFSETS, tiles)
    return TaskGraph(kinds, tile_of, indptr, indices)
