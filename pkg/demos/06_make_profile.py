"""Measure this machine's kernel costs and write a device profile.

Base costs come from timing each of the 11 operations on a 512x512
synthetic tile with one worker; the speedup table compares the threaded
kernels (8 workers) against the sequential run.  The result is the
packaged default profile, regenerate with:

    python demos/06_make_profile.py src/slidepipe/data/default_profile.json
"""

import sys
import time
from pathlib import Path

import numpy as np

from slidepipe import (
    ImageTile,
    connected_components,
    color_deconvolution,
    distance_transform,
    disk,
    extract_objects,
    fill_holes,
    gradient_stats,
    make_synthetic_tile,
    morph_open,
    morph_reconstruction,
    pixel_stats,
    rgb_to_gray,
    sobel_edge_stats,
)
from slidepipe.labeling import area_threshold
from slidepipe.profiles import DeviceProfile, save_profile

REPEATS = 3


def measure(fn):
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def kernel_timers(workers):
    tile = make_synthetic_tile(512, 512, 13, seed=1)
    gray = rgb_to_gray(tile, workers=workers)
    inv = ImageTile((255 - gray.data.astype(np.int16)).astype(np.uint8))
    opened = morph_open(inv, disk(6), workers=workers)
    recon = morph_reconstruction(opened, inv, workers=workers)
    mask = fill_holes(recon.data >= 60, 4, workers=workers)
    labels = connected_components(mask, 8, 4)
    kept = area_threshold(labels, 50, mask.size // 4)
    final = connected_components(kept > 0, 8, 4)
    objs = extract_objects(final)
    return {
        "rgb2gray": lambda: rgb_to_gray(tile, workers=workers),
        "morph_open": lambda: morph_open(inv, disk(6), workers=workers),
        "morph_reconstruction": lambda: morph_reconstruction(opened, inv, workers=workers),
        "fill_holes": lambda: fill_holes(recon.data >= 60, 4, workers=workers),
        "area_threshold": lambda: area_threshold(labels, 50, mask.size // 4),
        "connected_components": lambda: connected_components(mask, 8, 4),
        "distance_transform": lambda: distance_transform(kept > 0, workers=workers),
        "color_deconvolution": lambda: color_deconvolution(tile, workers=workers),
        "pixel_stats": lambda: pixel_stats(gray, objs, final, workers=workers),
        "gradient_stats": lambda: gradient_stats(gray, objs, final, workers=workers),
        "sobel_edge_stats": lambda: sobel_edge_stats(gray, objs, final, workers=workers),
    }


def main(out_path):
    sequential = {op: measure(fn) for op, fn in kernel_timers(1).items()}
    threaded = {op: measure(fn) for op, fn in kernel_timers(8).items()}
    speedup = {
        op: {"worker-pool": max(0.05, round(sequential[op] / threaded[op], 3))}
        for op in sequential
    }
    base = {op: round(ms, 3) for op, ms in sequential.items()}
    profile = DeviceProfile(
        device_counts={"cpu-core": 1, "worker-pool": 1},
        base_cost_ms=base,
        speedup=speedup,
    )
    save_profile(profile, out_path)
    print(f"measured on this machine (1-worker ms / 8-worker speedup):")
    for op in base:
        print(f"  {op:24s} {base[op]:9.2f} ms   {speedup[op]['worker-pool']:.2f}x")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/measured_profile.json"))
