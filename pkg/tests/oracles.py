"""Independent reference implementations used to check the library kernels.

Everything here is deliberately naive: per-pixel loops, exhaustive scans,
fixpoint iteration.  None of it shares code with the library under test.
"""

from collections import deque
import math

import numpy as np


# ---------------------------------------------------------------------------
# regular operators
# ---------------------------------------------------------------------------

def luma_pixel(r, g, b):
    """Round-half-up BT.601 luma of one pixel."""
    v = math.floor(r * 0.299 + g * 0.587 + b * 0.114 + 0.5)
    return min(255, max(0, v))


def gray_oracle(rgb):
    h, w, _ = rgb.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            r, g, b = rgb[y, x]
            out[y, x] = luma_pixel(int(r), int(g), int(b))
    return out


def _clamp(v, lo, hi):
    return lo if v < lo else (hi if v > hi else v)


def erode_oracle(img, offsets):
    h, w = img.shape
    out = np.empty_like(img)
    for y in range(h):
        for x in range(w):
            m = 255
            for dy, dx in offsets:
                yy = _clamp(y + dy, 0, h - 1)
                xx = _clamp(x + dx, 0, w - 1)
                v = img[yy, xx]
                if v < m:
                    m = v
            out[y, x] = m
    return out


def dilate_oracle(img, offsets):
    h, w = img.shape
    out = np.empty_like(img)
    for y in range(h):
        for x in range(w):
            m = 0
            for dy, dx in offsets:
                yy = _clamp(y + dy, 0, h - 1)
                xx = _clamp(x + dx, 0, w - 1)
                v = img[yy, xx]
                if v > m:
                    m = v
            out[y, x] = m
    return out


def open_oracle(img, offsets):
    return dilate_oracle(erode_oracle(img, offsets), offsets)


SOBEL_X = ((-1, 0, 1), (-2, 0, 2), (-1, 0, 1))
SOBEL_Y = ((-1, -2, -1), (0, 0, 0), (1, 2, 1))


def sobel_oracle(gray):
    """Direct 3x3 convolution with edge replication."""
    h, w = gray.shape
    gx = np.zeros((h, w), dtype=np.float64)
    gy = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            sx = 0.0
            sy = 0.0
            for ky in (-1, 0, 1):
                for kx in (-1, 0, 1):
                    v = float(gray[_clamp(y + ky, 0, h - 1), _clamp(x + kx, 0, w - 1)])
                    sx += v * SOBEL_X[ky + 1][kx + 1]
                    sy += v * SOBEL_Y[ky + 1][kx + 1]
            gx[y, x] = sx
            gy[y, x] = sy
    mag = np.sqrt(gx * gx + gy * gy)
    return gx, gy, mag


def invert3_oracle(m):
    """3x3 matrix inverse via the adjugate (no LAPACK)."""
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    if det == 0.0:
        raise ZeroDivisionError("singular matrix")
    adj = [
        [e * i - f * h, c * h - b * i, b * f - c * e],
        [f * g - d * i, a * i - c * g, c * d - a * f],
        [d * h - e * g, b * g - a * h, a * e - b * d],
    ]
    return [[x / det for x in row] for row in adj]


def deconv_oracle(rgb, stain_rows):
    """Per-pixel optical-density inversion against the stain matrix rows."""
    inv = invert3_oracle([list(map(float, r)) for r in stain_rows])
    h, w, _ = rgb.shape
    out = np.zeros((h, w, 3), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            od = [-math.log10((float(rgb[y, x, c]) + 1.0) / 256.0) for c in range(3)]
            for s in range(3):
                v = od[0] * inv[0][s] + od[1] * inv[1][s] + od[2] * inv[2][s]
                out[y, x, s] = v if v > 0.0 else 0.0
    return out


# ---------------------------------------------------------------------------
# irregular operators
# ---------------------------------------------------------------------------

def reconstruction_oracle(marker, mask):
    """Fixpoint iteration of pointwise min(dilate8(out), mask)."""
    out = marker.astype(np.int32)
    msk = mask.astype(np.int32)
    while True:
        p = np.pad(out, 1, mode="constant", constant_values=0)
        d = out
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                d = np.maximum(d, p[1 + dy : 1 + dy + out.shape[0], 1 + dx : 1 + dx + out.shape[1]])
        nxt = np.minimum(d, msk)
        if np.array_equal(nxt, out):
            return nxt.astype(marker.dtype)
        out = nxt


def _neighbors(connectivity):
    if connectivity == 4:
        return ((-1, 0), (1, 0), (0, -1), (0, 1))
    return ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def fill_holes_oracle(mask, connectivity=4):
    """BFS flood of the background from the border; unreached background is a hole."""
    h, w = mask.shape
    reached = np.zeros((h, w), dtype=bool)
    q = deque()
    for y in range(h):
        for x in (0, w - 1):
            if not mask[y, x] and not reached[y, x]:
                reached[y, x] = True
                q.append((y, x))
    for x in range(w):
        for y in (0, h - 1):
            if not mask[y, x] and not reached[y, x]:
                reached[y, x] = True
                q.append((y, x))
    nbrs = _neighbors(connectivity)
    while q:
        y, x = q.popleft()
        for dy, dx in nbrs:
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w and not mask[yy, xx] and not reached[yy, xx]:
                reached[yy, xx] = True
                q.append((yy, xx))
    return mask | ~reached


def distance_oracle(mask):
    """Exhaustive nearest-background scan, exact Euclidean."""
    h, w = mask.shape
    bg_y, bg_x = np.nonzero(~mask)
    if bg_y.size == 0:
        raise ValueError("no background pixel")
    out = np.zeros((h, w), dtype=np.float64)
    fg_y, fg_x = np.nonzero(mask)
    if fg_y.size:
        dy = fg_y[:, None].astype(np.int64) - bg_y[None, :].astype(np.int64)
        dx = fg_x[:, None].astype(np.int64) - bg_x[None, :].astype(np.int64)
        d2 = dy * dy + dx * dx
        out[fg_y, fg_x] = np.sqrt(d2.min(axis=1).astype(np.float64))
    return out


# ---------------------------------------------------------------------------
# labeling
# ---------------------------------------------------------------------------

def bfs_label_oracle(mask, connectivity=8):
    """Flood-fill labeling, labels assigned 1..K in raster order of discovery."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    nbrs = _neighbors(connectivity)
    nxt = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x] and labels[y, x] == 0:
                nxt += 1
                labels[y, x] = nxt
                q = deque([(y, x)])
                while q:
                    cy, cx = q.popleft()
                    for dy, dx in nbrs:
                        yy, xx = cy + dy, cx + dx
                        if 0 <= yy < h and 0 <= xx < w and mask[yy, xx] and labels[yy, xx] == 0:
                            labels[yy, xx] = nxt
                            q.append((yy, xx))
    return labels


class ListDisjointSets:
    """Set-merging oracle for the union-find primitives: a literal list of sets."""

    def __init__(self, n):
        self.sets = [{i} for i in range(n)]

    def union(self, a, b):
        sa = next(s for s in self.sets if a in s)
        sb = next(s for s in self.sets if b in s)
        if sa is not sb:
            self.sets.remove(sb)
            sa |= sb

    def partition(self):
        return sorted(tuple(sorted(s)) for s in self.sets)


def area_filter_oracle(labels, lo, hi):
    counts = {}
    for v in labels.ravel().tolist():
        if v:
            counts[v] = counts.get(v, 0) + 1
    out = labels.copy()
    for v, n in counts.items():
        if n < lo or n > hi:
            out[out == v] = 0
    return out


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------

def objects_oracle(labels):
    """Full-image scan per label: (label, min_y, min_x, max_y, max_x, area)."""
    out = []
    for lab in sorted(set(labels.ravel().tolist()) - {0}):
        ys, xs = np.nonzero(labels == lab)
        out.append((lab, int(ys.min()), int(xs.min()), int(ys.max()), int(xs.max()), int(ys.size)))
    return out


def stats_oracle(values):
    """(mean, lower median, min, max, population std) of a value list."""
    vals = [float(v) for v in values]
    n = len(vals)
    mean = sum(vals) / n
    srt = sorted(vals)
    median = srt[(n - 1) // 2]
    var = sum((v - mean) ** 2 for v in vals) / n
    return mean, median, srt[0], srt[-1], math.sqrt(var)


# ---------------------------------------------------------------------------
# scheduling
# ---------------------------------------------------------------------------

def check_trace(graph, profile, trace, tol=1e-9):
    """Independent schedule validator.

    Checks: every task scheduled exactly once, starts respect dependency
    finish times, durations match the profile, no device runs two tasks at
    once, makespan equals the latest end.
    """
    n = graph.task_count
    seen = [0] * n
    start = {}
    end = {}
    device = {}
    for k in range(len(trace.task)):
        t = int(trace.task[k])
        seen[t] += 1
        start[t] = float(trace.start[k])
        end[t] = float(trace.end[k])
        device[t] = int(trace.device[k])
    assert all(c == 1 for c in seen), "every task must be scheduled exactly once"
    for t in range(n):
        cls = trace.device_class[device[t]]
        dur = profile.duration_ms(graph.kinds[t], cls)
        assert abs((end[t] - start[t]) - dur) <= tol + 1e-9 * dur, f"duration mismatch for task {t}"
        for p in graph.predecessors(t):
            assert start[t] >= end[p] - tol, f"task {t} started before predecessor {p} finished"
    by_dev = {}
    for t in range(n):
        by_dev.setdefault(device[t], []).append((start[t], end[t]))
    for dev, spans in by_dev.items():
        spans.sort()
        for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
            assert s1 >= e0 - tol, f"device {dev} overlaps at t={s1}"
    assert abs(trace.makespan_ms - max(end.values())) <= tol
    return True


def independent_optimum(durations_by_class, class_counts):
    """Exhaustive optimum makespan for independent tasks.

    ``durations_by_class``: per task, a dict class -> duration.  Enumerates
    every assignment of tasks to device classes; within a class the tasks are
    packed longest-first onto the class's devices (exact when per-class
    durations are identical, which is how the bimodal reference case is
    built; asserted below).
    """
    import itertools

    classes = sorted(class_counts)
    for d in durations_by_class:
        assert len(set(d.values())) >= 1
    best = math.inf
    n = len(durations_by_class)
    for assign in itertools.product(range(len(classes)), repeat=n):
        loads_ok = True
        makespan = 0.0
        for ci, cls in enumerate(classes):
            durs = sorted(
                (durations_by_class[t][cls] for t in range(n) if assign[t] == ci),
                reverse=True,
            )
            if not durs:
                continue
            if len(set(durs)) > 1:
                # longest-first packing is only exact for identical durations;
                # keep the oracle honest by refusing other inputs.
                loads_ok = False
                break
            k = class_counts[cls]
            loads = [0.0] * k
            for d in durs:
                loads[loads.index(min(loads))] += d
            makespan = max(makespan, max(loads))
        if loads_ok:
            best = min(best, makespan)
    return best
