#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot paths (composed per-point transforms and the
k-nearest-neighbor statistics behind outlier removal) on both backends and
checks that their outputs agree.

Usage:
    python benchmarks/bench_kernels.py [--points 2048] [--clouds 32] [--repeat 5]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from pcveil import backend
from pcveil.defenses import sor
from pcveil.transforms import ComposedTransform, Rotation, Scaling, Shear, Twist, apply


def make_clouds(n_clouds: int, n_points: int, seed: int = 0) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.normal(size=(n_points, 3)) for _ in range(n_clouds)]


def run_transform(clouds) -> list[np.ndarray]:
    chain = ComposedTransform(
        (Rotation(0.1, 0.2, 1.3), Scaling(0.7), Twist(math.radians(18.0)), Shear("xy", 0.25, 0.1))
    )
    return [apply(chain, cloud) for cloud in clouds]


def run_sor(clouds) -> list[np.ndarray]:
    return [sor(cloud, k=2, alpha=1.1) for cloud in clouds]


def timed(fn, clouds, repeat: int) -> tuple[float, list[np.ndarray]]:
    best = math.inf
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(clouds)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=2048)
    parser.add_argument("--clouds", type=int, default=32)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    clouds = make_clouds(args.clouds, args.points)
    results = {}
    for name in ("numpy", "numba"):
        try:
            backend.use_backend(name)
        except ImportError:
            print(f"{name}: unavailable, skipped")
            continue
        if name == "numba":  # compile outside the timed region
            run_transform(clouds[:1])
            run_sor(clouds[:1])
        t_chain, out_chain = timed(run_transform, clouds, args.repeat)
        t_sor, out_sor = timed(run_sor, clouds, args.repeat)
        results[name] = (t_chain, out_chain, t_sor, out_sor)
        print(f"{name:>6}: transform chain {t_chain * 1e3:8.2f} ms   sor {t_sor * 1e3:8.2f} ms")

    if len(results) == 2:
        chain_np, chain_nb = results["numpy"][1], results["numba"][1]
        worst = max(float(np.max(np.abs(a - b))) for a, b in zip(chain_np, chain_nb))
        print(f"transform agreement: max |numpy - numba| = {worst:.3e}")
        sor_np, sor_nb = results["numpy"][3], results["numba"][3]
        same = all(a.shape == b.shape and np.array_equal(a, b) for a, b in zip(sor_np, sor_nb))
        print(f"sor agreement: outputs identical = {same}")
        speedup_chain = results["numpy"][0] / results["numba"][0]
        speedup_sor = results["numpy"][2] / results["numba"][2]
        print(f"numba speedup: transform {speedup_chain:.2f}x   sor {speedup_sor:.2f}x")
        if worst > 1e-12 or not same:
            print("BACKEND MISMATCH")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
