"""Timing comparison of the compiled and fallback kernel backends.

The backend is fixed at import time by WSNOPT_NUMBA, so the parent
process re-runs itself once per backend and prints a side-by-side
table.  Workloads cover the hot kernels (pairwise distances, weighted
assignment, least-cost routing, the colony search) plus one end-to-end
simulation.

Usage:
    python3 benchmarks/kernel_benchmark.py [--repeat 5] [--scale 1.0]
"""

import argparse
import json
import os
import subprocess
import sys
import time

CHILD_FLAG = "_WSNOPT_BENCH_CHILD"


def best_of(repeat, fn):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_workloads(repeat, scale):
    import numpy as np

    from wsnopt import _kernels as K
    from wsnopt._accel import USE_NUMBA
    from wsnopt.aco import AcoParams, build_ch_graph, run_aco
    from wsnopt.config import ScenarioConfig
    from wsnopt.engine import run_simulation
    from wsnopt.model import EnergyModel, derive_rng

    rng = np.random.default_rng(17)
    times = {}

    n_pts = int(500 * scale)
    pos = rng.uniform(0.0, 300.0, (n_pts, 2))
    times[f"dist_matrix n={n_pts}"] = best_of(
        repeat, lambda: K.dist_matrix(pos))

    n_nodes, n_heads = int(3000 * scale), 30
    node_pos = rng.uniform(0.0, 300.0, (n_nodes, 2))
    head_pos = rng.uniform(0.0, 300.0, (n_heads, 2))
    radii = rng.uniform(5.0, 80.0, n_heads)
    times[f"voronoi_assign {n_nodes}x{n_heads}"] = best_of(
        repeat, lambda: K.voronoi_assign(node_pos, head_pos, radii))

    n_v = int(150 * scale)
    raw = rng.uniform(size=(n_v, n_v)) < 0.2
    adj = np.triu(raw, 1)
    adj = (adj | adj.T).astype(np.uint8)
    cost = rng.uniform(0.1, 2.0, n_v)
    times[f"route_dp n={n_v}"] = best_of(
        repeat, lambda: K.route_dp(adj, cost, n_v - 1))

    n_ch = int(30 * scale)
    heads = rng.uniform(0.0, 300.0, (n_ch, 2))
    energies = rng.uniform(0.2, 1.0, n_ch)
    graph = build_ch_graph(heads, energies, list(range(n_ch)),
                           (150.0, 400.0), comm_range=200.0)
    model = EnergyModel()
    times[f"run_aco {n_ch} heads"] = best_of(
        repeat, lambda: run_aco(graph, model, AcoParams(), n_res=100,
                                rng=derive_rng(3, "bench")))

    cfg = ScenarioConfig(
        node_count=int(100 * scale), ch_count=10,
        field_dims=(200.0, 200.0), sink_pos=(100.0, 300.0),
        initial_energy=0.1, seed=4, rounds_max=60, rounds_per_campaign=10)
    times["run_simulation 100 nodes x 60 rounds"] = best_of(
        max(1, repeat // 2), lambda: run_simulation(cfg))

    return {"backend": "numba" if USE_NUMBA else "fallback", "times": times}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions, best-of (default 5)")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="workload size multiplier (default 1.0)")
    args = parser.parse_args(argv)

    if os.environ.get(CHILD_FLAG):
        print(json.dumps(run_workloads(args.repeat, args.scale)))
        return 0

    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, WSNOPT_NUMBA=flag)
        env[CHILD_FLAG] = "1"
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--repeat", str(args.repeat), "--scale", str(args.scale)],
            capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            return 1
        payload = json.loads(proc.stdout.splitlines()[-1])
        results[payload["backend"]] = payload["times"]

    numba_t, plain_t = results["numba"], results["fallback"]
    width = max(len(k) for k in numba_t)
    print(f"{'workload':<{width}}  {'numba':>10}  {'fallback':>10}  "
          f"{'speedup':>8}")
    for key in numba_t:
        a, b = numba_t[key], plain_t[key]
        print(f"{key:<{width}}  {a * 1e3:>8.2f}ms  {b * 1e3:>8.2f}ms  "
              f"{b / a:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
