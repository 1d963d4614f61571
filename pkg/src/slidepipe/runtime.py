"""Real-mode pipeline execution: run the actual kernels over a worker pool.

A dispatcher resolves task-graph dependencies and hands ready operation
tasks to executor threads; each registered kernel (the single cpu function
variant of its operation) reads and writes per-tile context slots, one
writer per slot, so outputs are bit-identical to a sequential run for any
worker count.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import (
    FeatureVector,
    extract_objects,
    feature_csv_lines,
    gradient_stats,
    pixel_stats,
    sobel_edge_stats,
)
from .iwpp import distance_transform, fill_holes, morph_reconstruction
from .labeling import area_threshold, connected_components
from .regular import StainMatrix, color_deconvolution, disk, morph_open, rgb_to_gray
from .taskgraph import OP_KINDS, TaskGraph
from .tiles import ImageTile

__all__ = ["PipelineConfig", "PipelineResult", "run_real", "KERNELS"]


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the segmentation + feature pipeline."""

    open_radius: int = 6
    fg_threshold: int = 60
    min_area: int = 50
    max_area: int | None = None  # default: quarter of the tile area
    object_connectivity: int = 8
    hole_connectivity: int = 4
    recon_sweeps: int = 2
    tile_rows: int = 4
    edge_threshold: float = 50.0
    stains: StainMatrix | None = None
    kernel_workers: int = 1  # nested parallelism inside kernels

    def max_area_for(self, tile: ImageTile) -> int:
        return self.max_area if self.max_area is not None else (tile.width * tile.height) // 4


def _k_rgb2gray(ctx, cfg):
    ctx["gray"] = rgb_to_gray(ctx["rgb"], workers=cfg.kernel_workers)


def _k_morph_open(ctx, cfg):
    # objects are darker than background: work on the inverted grayscale
    inv = ImageTile((255 - ctx["gray"].data.astype(np.int16)).astype(np.uint8))
    ctx["inverted"] = inv
    ctx["opened"] = morph_open(inv, disk(cfg.open_radius), workers=cfg.kernel_workers)


def _k_morph_reconstruction(ctx, cfg):
    # opening-by-reconstruction: recover the shapes that survived the opening
    ctx["recon"] = morph_reconstruction(
        ctx["opened"], ctx["inverted"], sweeps=cfg.recon_sweeps, workers=cfg.kernel_workers
    )


def _k_fill_holes(ctx, cfg):
    mask = ctx["recon"].data >= cfg.fg_threshold
    ctx["mask_filled"] = fill_holes(mask, cfg.hole_connectivity, workers=cfg.kernel_workers)


def _k_area_threshold(ctx, cfg):
    provisional = connected_components(
        ctx["mask_filled"], cfg.object_connectivity, cfg.tile_rows
    )
    kept = area_threshold(provisional, cfg.min_area, cfg.max_area_for(ctx["rgb"]))
    ctx["mask_kept"] = kept > 0


def _k_connected_components(ctx, cfg):
    ctx["labels"] = connected_components(
        ctx["mask_kept"], cfg.object_connectivity, cfg.tile_rows
    )


def _k_distance_transform(ctx, cfg):
    ctx["distance"] = distance_transform(ctx["mask_kept"], workers=cfg.kernel_workers)


def _k_color_deconvolution(ctx, cfg):
    ctx["stain_channels"] = color_deconvolution(
        ctx["rgb"], cfg.stains, workers=cfg.kernel_workers
    )


def _k_pixel_stats(ctx, cfg):
    objs = extract_objects(ctx["labels"])
    ctx["pixel_stats"] = pixel_stats(ctx["gray"], objs, ctx["labels"], workers=cfg.kernel_workers)


def _k_gradient_stats(ctx, cfg):
    objs = extract_objects(ctx["labels"])
    ctx["gradient_stats"] = gradient_stats(
        ctx["gray"], objs, ctx["labels"], workers=cfg.kernel_workers
    )


def _k_sobel_edge_stats(ctx, cfg):
    objs = extract_objects(ctx["labels"])
    ctx["edge_stats"] = sobel_edge_stats(
        ctx["gray"], objs, ctx["labels"], cfg.edge_threshold, workers=cfg.kernel_workers
    )


KERNELS = {
    "rgb2gray": _k_rgb2gray,
    "morph_open": _k_morph_open,
    "morph_reconstruction": _k_morph_reconstruction,
    "fill_holes": _k_fill_holes,
    "area_threshold": _k_area_threshold,
    "connected_components": _k_connected_components,
    "distance_transform": _k_distance_transform,
    "color_deconvolution": _k_color_deconvolution,
    "pixel_stats": _k_pixel_stats,
    "gradient_stats": _k_gradient_stats,
    "sobel_edge_stats": _k_sobel_edge_stats,
}


@dataclass
class PipelineResult:
    features: dict  # tile id -> list[FeatureVector]
    timings_s: dict  # op kind -> [calls, total seconds]
    labels: dict = field(default_factory=dict)  # tile id -> LabelMap

    def feature_csv(self, tile: int) -> str:
        return "\n".join(feature_csv_lines(self.features[tile])) + "\n"

    def write_feature_csvs(self, outdir) -> list:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = []
        for tile in sorted(self.features):
            p = outdir / f"features_tile{tile:04d}.csv"
            p.write_text(self.feature_csv(tile))
            paths.append(p)
        return paths

    def timing_csv(self) -> str:
        lines = ["operation,calls,total_s,mean_s"]
        for kind in OP_KINDS:
            calls, total = self.timings_s.get(kind, (0, 0.0))
            mean = total / calls if calls else 0.0
            lines.append(f"{kind},{calls},{total:.6f},{mean:.6f}")
        return "\n".join(lines) + "\n"


def run_real(
    graph: TaskGraph, tiles: list, workers: int = 1, cfg: PipelineConfig | None = None
) -> PipelineResult:
    """Execute the pipeline kernels for every task of the graph.

    ``tiles[i]`` is the 3-channel u8 ImageTile of tile id ``i``.  Kernel
    failures propagate with the task identity attached.  Raises on cyclic
    graphs before executing anything.
    """
    cfg = cfg if cfg is not None else PipelineConfig()
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    order = graph.topo_order()  # raises on cycles
    if graph.tile_count() > len(tiles):
        raise ValueError(f"graph references {graph.tile_count()} tiles, got {len(tiles)}")
    for kind in graph.kinds:
        if kind not in KERNELS:
            raise ValueError(f"no kernel registered for operation {kind!r}")

    ctxs = {i: {"rgb": t} for i, t in enumerate(tiles)}
    timings: dict = {}
    lock = threading.Lock()

    def execute(task: int) -> None:
        kind = graph.kinds[task]
        tile = int(graph.tile_of[task])
        t0 = time.perf_counter()
        try:
            KERNELS[kind](ctxs[tile], cfg)
        except Exception as e:
            raise RuntimeError(f"task {task} ({kind}, tile {tile}) failed: {e}") from e
        dt = time.perf_counter() - t0
        with lock:
            c = timings.setdefault(kind, [0, 0.0])
            c[0] += 1
            c[1] += dt

    if workers == 1:
        for task in order:
            execute(int(task))
    else:
        indeg = graph.indegrees().copy()
        ready = [int(t) for t in np.flatnonzero(indeg == 0)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending = {pool.submit(execute, t): t for t in ready}
            while pending:
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    t = pending.pop(fut)
                    fut.result()  # re-raise kernel failures
                    for s in graph.successors(t):
                        indeg[s] -= 1
                        if indeg[s] == 0:
                            pending[pool.submit(execute, int(s))] = int(s)

    features = {}
    labels = {}
    for tile, ctx in ctxs.items():
        if "labels" in ctx:
            labels[tile] = ctx["labels"]
        if not all(k in ctx for k in ("labels", "pixel_stats", "gradient_stats", "edge_stats")):
            continue
        objs = extract_objects(ctx["labels"])
        edge_vecs, edge_fracs = ctx["edge_stats"]
        features[tile] = [
            FeatureVector(
                label=o.label,
                area=o.area,
                min_y=o.min_y,
                min_x=o.min_x,
                max_y=o.max_y,
                max_x=o.max_x,
                pixel=ctx["pixel_stats"][i],
                gradient=ctx["gradient_stats"][i],
                edge=edge_vecs[i],
                edge_fraction=edge_fracs[i],
            )
            for i, o in enumerate(objs)
        ]
    return PipelineResult(
        features=features,
        timings_s={k: tuple(v) for k, v in timings.items()},
        labels=labels,
    )
