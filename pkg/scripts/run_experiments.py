#!/usr/bin/env python3
"""Run the full evaluation: every sweep, at heavier budgets than the tests.

The default profile takes tens of minutes on a laptop-class machine; pass
--quick for a few-minute shakedown with smaller seed lists and budgets.
Outputs land under --output as CSV/JSON, ready for scripts/plot_results.py.
"""

import argparse
import time
from dataclasses import replace

from hoplite.harness import ExperimentConfig, run_all

FULL = ExperimentConfig(
    rings=3,
    demand_levels=(0.2, 0.5, 0.8, 1.0, 1.2, 1.4),
    algorithms=("periodic", "random", "greedy", "mcts", "ga"),
    seeds=tuple(range(10)),
    horizon_slots=30,
    warmup_slots=12,
    hotspot_count=9,
    hotspot_multiplier=5.0,
    mcts_iterations=400,
    mcts_exploration=0.5,
    mcts_pruning=True,
    prune_width=18,
    ga_population=200,
    ga_generations=30,
    beta_levels=(2, 4, 6, 8, 10),
    ds_levels=(1.0, 2.0, 3.0, 4.0, 5.0),
    bench_rings=(3, 4, 5, 6),
    sweeps=("throughput", "timing", "convergence", "scoring", "beta", "ds"),
)

QUICK = replace(
    FULL,
    demand_levels=(0.5, 1.0, 1.3),
    seeds=(0, 1, 2),
    mcts_iterations=120,
    ga_population=80,
    ga_generations=10,
    beta_levels=(2, 10),
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="results/full", help="output directory")
    parser.add_argument(
        "--quick", action="store_true", help="smaller budgets, minutes not tens"
    )
    parser.add_argument(
        "--sweeps",
        nargs="+",
        choices=FULL.sweeps,
        help="run a subset of the sweeps (default: all)",
    )
    args = parser.parse_args()

    cfg = QUICK if args.quick else FULL
    cfg = replace(cfg, output_dir=args.output)
    if args.sweeps:
        cfg = replace(cfg, sweeps=tuple(args.sweeps))

    t0 = time.perf_counter()
    written = run_all(cfg)
    for name, path in sorted(written.items()):
        print(f"{name}: {path}")
    print(f"done in {time.perf_counter() - t0:.0f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
