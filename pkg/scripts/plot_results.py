#!/usr/bin/env python3
"""Render the sweep outputs written by run_experiments.py (or `hoplite run`).

Reads the JSON files from a results directory and writes one PNG per sweep
found. Requires matplotlib (install the package's `plots` extra).
"""

import argparse
import json
from collections import defaultdict
from pathlib import Path

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover - depends on the optional extra
    raise SystemExit(
        "matplotlib is not installed; run `pip install matplotlib` "
        "(or install the package with the [plots] extra)"
    )


def plot_throughput(records, out_path):
    by_alg = defaultdict(lambda: defaultdict(list))
    for rec in records:
        by_alg[rec["algorithm"]][rec["demand_level"]].append(rec["served_bits"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for alg, per_level in sorted(by_alg.items()):
        levels = sorted(per_level)
        means = [sum(per_level[l]) / len(per_level[l]) / 1e9 for l in levels]
        ax.plot(levels, means, marker="o", label=alg)
    ax.set_xlabel("offered load / system capacity")
    ax.set_ylabel("served traffic (Gbit)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_convergence(trace, out_path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, color in (("unpruned", "tab:blue"), ("pruned", "tab:orange")):
        for i, run in enumerate(trace["runs"]):
            ax.plot(
                run[label]["best_so_far"],
                color=color,
                alpha=0.5,
                label=label if i == 0 else None,
            )
    ax.set_xlabel("iteration (all stages, in order)")
    ax.set_ylabel("best score so far")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_scoring(rows, out_path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = [row["n_cells"] for row in rows]
    ax.plot(ns, [row["bruteforce_per_score_s"] * 1e6 for row in rows], "o-",
            label="brute force")
    ax.plot(ns, [row["sliding_per_score_s"] * 1e6 for row in rows], "s-",
            label="sliding window")
    ax.set_xlabel("cells")
    ax.set_ylabel("time per score (us)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_beta(rows, out_path):
    reference = [r["served_bits"] for r in rows if r["beta"] is None]
    ref_mean = sum(reference) / len(reference)
    by_beta = defaultdict(list)
    for row in rows:
        if row["beta"] is not None:
            by_beta[row["beta"]].append(row["served_bits"])
    betas = sorted(by_beta)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(betas, [sum(by_beta[b]) / len(by_beta[b]) / ref_mean for b in betas], "o-")
    ax.axhline(1.0, linestyle="--", color="gray", label="undiscretized")
    ax.set_xlabel("discretization levels (beta)")
    ax.set_ylabel("served fraction of undiscretized")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_ds(rows, out_path):
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4))
    ds = [row["ds_diameters"] for row in rows]
    left.plot(ds, [row["per_score_time_s"] * 1e6 for row in rows], "o-")
    left.set_xlabel("window size (cell diameters)")
    left.set_ylabel("time per score (us)")
    left.grid(True, alpha=0.3)
    right.plot(ds, [row["served_bits"] / 1e9 for row in rows], "s-")
    right.set_xlabel("window size (cell diameters)")
    right.set_ylabel("served traffic (Gbit)")
    right.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


PLOTTERS = {
    "throughput.json": ("throughput.png", plot_throughput),
    "convergence.json": ("convergence.png", plot_convergence),
    "scoring_bench.json": ("scoring_bench.png", plot_scoring),
    "beta_sweep.json": ("beta_sweep.png", plot_beta),
    "ds_sweep.json": ("ds_sweep.png", plot_ds),
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("results", help="directory written by run_experiments.py")
    parser.add_argument("--output", default=None, help="directory for PNGs")
    args = parser.parse_args()

    results = Path(args.results)
    out_dir = Path(args.output) if args.output else results
    out_dir.mkdir(parents=True, exist_ok=True)
    rendered = 0
    for name, (png_name, plotter) in PLOTTERS.items():
        source = results / name
        if not source.exists():
            continue
        with open(source) as fh:
            data = json.load(fh)
        target = out_dir / png_name
        plotter(data, target)
        print(f"wrote {target}")
        rendered += 1
    if not rendered:
        print(f"no known sweep files found under {results}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
