"""Irregular wavefront propagation engine and its three instantiations.

Active grid elements propagate values to neighbors whenever a propagation
condition holds; receivers join the wavefront, and the process runs to a
fixpoint.  The wavefront lives in per-worker sub-queues of coordinate
chunks with work stealing when a sub-queue drains.  Cell updates go
through ``np.minimum.at`` / ``np.maximum.at``, i.e. conditional
improve-only writes that are safe under colliding propagations and make
the fixpoint independent of processing order.

Monotonicity is enforced: every accepted propagation must strictly
improve the cell in the rule's declared direction, otherwise the run
aborts with :class:`NonMonotoneRuleError`.  For monotone rules the
fixpoint is unique, so results are bit-identical for any worker count and
for FIFO vs LIFO queue discipline.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .parallel import resolve_workers
from .tiles import ImageTile

__all__ = [
    "NonMonotoneRuleError",
    "PropagationRule",
    "WavefrontQueue",
    "IwppStats",
    "iwpp_run",
    "morph_reconstruction",
    "fill_holes",
    "distance_transform",
]

N4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
N8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


class NonMonotoneRuleError(RuntimeError):
    """A propagation rule produced an update that does not strictly improve."""


@dataclass(frozen=True)
class PropagationRule:
    """Neighborhood, propagation condition, and update of one wavefront kind.

    ``condition(src_vals, dst_vals, src_idx, dst_idx)`` returns a bool mask;
    ``update`` returns the new destination values for the accepted subset.
    ``direction`` declares the convergence measure: accepted updates must
    strictly ``"increase"`` or ``"decrease"`` the cell value, which bounds
    the number of updates per cell and guarantees termination.
    """

    neighborhood: int
    condition: Callable
    update: Callable
    direction: str

    def __post_init__(self):
        if self.neighborhood not in (4, 8):
            raise ValueError("neighborhood must be 4 or 8")
        if self.direction not in ("increase", "decrease"):
            raise ValueError("direction must be 'increase' or 'decrease'")


@dataclass
class IwppStats:
    """Counters of one propagation run."""

    elements_processed: int = 0
    updates_applied: int = 0
    updates_checked: int = 0
    batches: int = 0
    steals: int = 0
    max_pending: int = 0


class WavefrontQueue:
    """Per-worker sub-queues of active-coordinate chunks.

    Each worker pushes the elements it activates to its own sub-queue; a
    worker whose sub-queue drains steals half the chunks of the fullest
    sub-queue.  Elements may be queued more than once; processing an
    element whose condition no longer holds is a no-op.
    """

    def __init__(self, workers: int, chunk_size: int = 4096):
        if workers < 1:
            raise ValueError("worker count must be >= 1")
        self.chunk_size = int(chunk_size)
        self._qs = [deque() for _ in range(workers)]
        self.pending = 0
        self.steals = 0

    def push(self, worker: int, coords: np.ndarray) -> None:
        if coords.size == 0:
            return
        q = self._qs[worker]
        cs = self.chunk_size
        for i in range(0, coords.size, cs):
            q.append(coords[i : i + cs])
        self.pending += coords.size

    def pop(self, worker: int, lifo: bool = False):
        q = self._qs[worker]
        if not q:
            donor = max(range(len(self._qs)), key=lambda i: len(self._qs[i]))
            dq = self._qs[donor]
            if not dq:
                return None
            for _ in range(max(1, len(dq) // 2)):
                q.append(dq.pop())
            self.steals += 1
        chunk = q.pop() if lifo else q.popleft()
        self.pending -= chunk.size
        return chunk


def _as_flat_seeds(seeds, height, width):
    if isinstance(seeds, np.ndarray) and seeds.ndim == 1:
        flat = seeds.astype(np.int64)
        if flat.size and (flat.min() < 0 or flat.max() >= height * width):
            raise ValueError("seed index outside the grid")
        return flat
    arr = np.asarray(list(seeds) if not isinstance(seeds, np.ndarray) else seeds, dtype=np.int64)
    if arr.size == 0:
        return np.empty(0, dtype=np.int64)
    arr = arr.reshape(-1, 2)
    ys, xs = arr[:, 0], arr[:, 1]
    if (ys < 0).any() or (ys >= height).any() or (xs < 0).any() or (xs >= width).any():
        raise ValueError("seed coordinate outside the grid")
    return ys * width + xs


def iwpp_run(
    grid: np.ndarray,
    seeds,
    rule: PropagationRule,
    workers: int = 1,
    order: str = "fifo",
    chunk_size: int = 4096,
    stats: IwppStats | None = None,
) -> np.ndarray:
    """Propagate to fixpoint and return the new grid.

    ``grid`` is a 2-D integer array; ``seeds`` is a sequence of (y, x)
    pairs or a flat int index array.  The input grid is not modified.
    """
    if grid.ndim != 2:
        raise ValueError("grid must be 2-D")
    if order not in ("fifo", "lifo"):
        raise ValueError("order must be 'fifo' or 'lifo'")
    h, w = grid.shape
    g = grid.copy()
    flat = g.ravel()
    offsets = N4 if rule.neighborhood == 4 else N8
    decrease = rule.direction == "decrease"
    apply_at = np.minimum.at if decrease else np.maximum.at
    lifo = order == "lifo"

    queue = WavefrontQueue(workers, chunk_size)
    seed_idx = _as_flat_seeds(seeds, h, w)
    for k, i in enumerate(range(0, seed_idx.size, chunk_size)):
        queue.push(k % workers, seed_idx[i : i + chunk_size])

    st = stats if stats is not None else IwppStats()
    st.max_pending = max(st.max_pending, queue.pending)
    worker = 0
    while queue.pending:
        chunk = queue.pop(worker, lifo=lifo)
        if chunk is None:  # pragma: no cover - pending>0 guarantees a donor
            worker = (worker + 1) % workers
            continue
        st.batches += 1
        st.elements_processed += chunk.size
        rows = chunk // w
        cols = chunk - rows * w
        activated = []
        for dy, dx in offsets:
            ok = np.ones(chunk.size, dtype=bool)
            if dy < 0:
                ok &= rows > 0
            elif dy > 0:
                ok &= rows < h - 1
            if dx < 0:
                ok &= cols > 0
            elif dx > 0:
                ok &= cols < w - 1
            src = chunk[ok]
            if src.size == 0:
                continue
            dst = src + (dy * w + dx)
            sv = flat[src]
            dv = flat[dst]
            cond = rule.condition(sv, dv, src, dst)
            if not cond.any():
                continue
            s2 = src[cond]
            d2 = dst[cond]
            new = rule.update(sv[cond], dv[cond], s2, d2)
            prev = dv[cond]
            wrong = (new >= prev) if decrease else (new <= prev)
            st.updates_checked += int(new.size)
            if wrong.any():
                k = int(np.flatnonzero(wrong)[0])
                raise NonMonotoneRuleError(
                    f"update at cell ({d2[k] // w},{d2[k] % w}) moved {prev[k]} -> {new[k]} "
                    f"against declared direction {rule.direction!r}"
                )
            apply_at(flat, d2, new)
            changed = flat[d2] != prev
            st.updates_applied += int(np.count_nonzero(changed))
            if changed.any():
                activated.append(d2[changed])
        if activated:
            nxt = np.unique(np.concatenate(activated))
            queue.push(worker, nxt)
            st.max_pending = max(st.max_pending, queue.pending)
        worker = (worker + 1) % workers
    st.steals = queue.steals
    return g


# ---------------------------------------------------------------------------
# morphological reconstruction by dilation
# ---------------------------------------------------------------------------

def _vertical_sweeps(m, mask, connectivity, sweeps):
    """Raster/anti-raster pre-passes, vectorized one row at a time.

    Each sweep propagates unboundedly along the scan direction (rows);
    leftover horizontal propagation is resolved by the queue phase.
    """
    h, w = m.shape
    down = True
    for _ in range(sweeps):
        rng = range(1, h) if down else range(h - 2, -1, -1)
        prev_off = -1 if down else 1
        for y in rng:
            p = m[y + prev_off]
            cand = p.copy()
            if connectivity == 8:
                np.maximum(cand[1:], p[:-1], out=cand[1:])
                np.maximum(cand[:-1], p[1:], out=cand[:-1])
            np.maximum(cand, m[y], out=cand)
            np.minimum(cand, mask[y], out=cand)
            m[y] = cand
        down = not down
    return m


def _active_cells(m, mask, connectivity):
    """Cells that can still propagate to some neighbor."""
    h, w = m.shape
    offsets = N4 if connectivity == 4 else N8
    active = np.zeros((h, w), dtype=bool)
    for dy, dx in offsets:
        src = (slice(max(0, -dy), h - max(0, dy)), slice(max(0, -dx), w - max(0, dx)))
        dst = (slice(max(0, dy), h - max(0, -dy)), slice(max(0, dx), w - max(0, -dx)))
        can = m[dst] < np.minimum(m[src], mask[dst])
        active[src] |= can
    return active


def morph_reconstruction(
    marker: ImageTile,
    mask: ImageTile,
    connectivity: int = 8,
    sweeps: int = 2,
    workers=None,
) -> ImageTile:
    """Grayscale reconstruction by dilation: flood marker peaks under mask.

    Runs ``sweeps`` raster/anti-raster pre-passes, then the wavefront
    queue phase to the fixpoint.  Requires marker <= mask pixel-wise.
    """
    if marker.channels != 1 or mask.channels != 1:
        raise ValueError("reconstruction needs 1-channel tiles")
    if marker.data.shape != mask.data.shape:
        raise ValueError("marker and mask dimensions differ")
    if (marker.data > mask.data).any():
        raise ValueError("marker must be <= mask everywhere")
    workers = resolve_workers(workers)
    msk = mask.data
    m = _vertical_sweeps(marker.data.copy(), msk, connectivity, sweeps)
    seeds = np.flatnonzero(_active_cells(m, msk, connectivity).ravel())
    msk_flat = msk.ravel()

    def condition(sv, dv, s, d):
        return dv < np.minimum(sv, msk_flat[d])

    def update(sv, dv, s, d):
        return np.minimum(sv, msk_flat[d])

    rule = PropagationRule(connectivity, condition, update, "increase")
    out = iwpp_run(m, seeds, rule, workers=workers)
    return ImageTile(out)


# ---------------------------------------------------------------------------
# fill holes
# ---------------------------------------------------------------------------

_FILL_FG = np.int8(-1)
_FILL_UNSEEN = np.int8(1)
_FILL_REACHED = np.int8(0)


def fill_holes(mask: np.ndarray, connectivity: int = 4, workers=None) -> np.ndarray:
    """Turn background regions not connected to the border into foreground.

    ``mask`` is a bool array (True = foreground).  The background flood
    uses ``connectivity`` (default 4, the complement convention for
    8-connected objects).
    """
    if mask.dtype != bool or mask.ndim != 2:
        raise ValueError("mask must be a 2-D bool array")
    workers = resolve_workers(workers)
    h, w = mask.shape
    state = np.where(mask, _FILL_FG, _FILL_UNSEEN)
    border = np.zeros((h, w), dtype=bool)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    seeds_mask = border & ~mask
    state[seeds_mask] = _FILL_REACHED
    seeds = np.flatnonzero(seeds_mask.ravel())

    def condition(sv, dv, s, d):
        return (sv == _FILL_REACHED) & (dv == _FILL_UNSEEN)

    def update(sv, dv, s, d):
        return np.zeros(sv.size, dtype=np.int8)

    rule = PropagationRule(connectivity, condition, update, "decrease")
    out = iwpp_run(state, seeds, rule, workers=workers)
    return mask | (out == _FILL_UNSEEN)


# ---------------------------------------------------------------------------
# exact Euclidean distance transform
# ---------------------------------------------------------------------------

def distance_transform(mask: np.ndarray, workers=None) -> ImageTile:
    """Distance to the closest background pixel for each foreground pixel.

    Propagates nearest-background coordinates over the 8-connected grid
    and relaxes until fixpoint; squared distances are compared in integer
    arithmetic.  Each cell holds one int64 key:

        key = dist2 * (h*w) + (bg_y * w + bg_x)

    so ``np.minimum.at`` both minimizes dist2 and breaks ties
    deterministically by background coordinate.
    """
    if mask.dtype != bool or mask.ndim != 2:
        raise ValueError("mask must be a 2-D bool array")
    workers = resolve_workers(workers)
    h, w = mask.shape
    wh = h * w
    if mask.all():
        raise ValueError("all-foreground mask: no background pixel to measure from")
    inf_key = np.int64((h * h + w * w + 1)) * wh
    keys = np.full((h, w), inf_key, dtype=np.int64)
    bg = ~mask
    bg_idx = np.flatnonzero(bg.ravel())
    keys.ravel()[bg_idx] = bg_idx  # dist2 = 0, nearest = self

    # seeds: background cells with at least one foreground neighbor
    near_fg = np.zeros((h, w), dtype=bool)
    for dy, dx in N8:
        src = (slice(max(0, -dy), h - max(0, dy)), slice(max(0, -dx), w - max(0, dx)))
        dst = (slice(max(0, dy), h - max(0, -dy)), slice(max(0, dx), w - max(0, -dx)))
        near_fg[src] |= mask[dst]
    seeds = np.flatnonzero((bg & near_fg).ravel())

    def candidate_keys(sv, d):
        b = sv % wh
        by = b // w
        bx = b - by * w
        dy_ = d // w
        dx_ = d - dy_ * w
        ddy = dy_ - by
        ddx = dx_ - bx
        return (ddy * ddy + ddx * ddx) * wh + b

    def condition(sv, dv, s, d):
        return candidate_keys(sv, d) < dv

    def update(sv, dv, s, d):
        return candidate_keys(sv, d)

    rule = PropagationRule(8, condition, update, "decrease")
    out = iwpp_run(keys, seeds, rule, workers=workers)
    dist = np.sqrt((out // wh).astype(np.float64)).astype(np.float32)
    return ImageTile(dist)
