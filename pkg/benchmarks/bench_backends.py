"""Timing comparison of the numpy and compiled rasterizer backends.

Renders randomized scenes at a few sizes and reports the median wall time
of the forward and backward passes per backend, plus the speedup.

    python3 benchmarks/bench_backends.py --repeats 5
"""

import argparse
import math
import statistics
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from helpers import random_scene, random_view  # noqa: E402

from skewsplat.raster import backend  # noqa: E402
from skewsplat.raster.backward import render_backward  # noqa: E402
from skewsplat.raster.forward import render_forward  # noqa: E402


def time_case(scene, view, name, repeats):
    fwd, bwd = [], []
    frame = render_forward(scene, view, backend_name=name)
    dL = np.ones((view.height, view.width, 3))
    for _ in range(repeats):
        t0 = time.perf_counter()
        frame = render_forward(scene, view, backend_name=name)
        t1 = time.perf_counter()
        render_backward(scene, view, frame, dL, backend_name=name)
        t2 = time.perf_counter()
        fwd.append(t1 - t0)
        bwd.append(t2 - t1)
    return statistics.median(fwd), statistics.median(bwd)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cases = [
        ("small", 50, 64, 64),
        ("medium", 300, 128, 128),
        ("large", 1500, 256, 256),
    ]
    names = ["numpy"]
    try:
        backend.active_backend("cython")
        names.append("cython")
    except RuntimeError:
        print("compiled backend unavailable; timing numpy only")

    rng = np.random.default_rng(args.seed)
    header = f"{'case':<8} {'prims':>6} {'size':>9}"
    for name in names:
        header += f" {name + ' fwd':>12} {name + ' bwd':>12}"
    if len(names) == 2:
        header += f" {'speedup fwd':>12} {'speedup bwd':>12}"
    print(header)

    for label, n, w, h in cases:
        scene = random_scene(rng, n, spread=1.2)
        view = random_view(rng, w, h)
        row = f"{label:<8} {n:>6} {w:>4}x{h:<4}"
        times = {}
        for name in names:
            f, b = time_case(scene, view, name, args.repeats)
            times[name] = (f, b)
            row += f" {f * 1e3:>10.2f}ms {b * 1e3:>10.2f}ms"
        if len(names) == 2:
            row += f" {times['numpy'][0] / times['cython'][0]:>11.1f}x"
            row += f" {times['numpy'][1] / times['cython'][1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
