"""Experiment harness: seeded sweeps, timing benches, and metric files.

Demand levels are expressed as offered load divided by best-case system
capacity (beam count x one beam-slot's packet capacity), so level 1.0 means
the system is offered exactly what it could serve with every beam boresight
and interference-free. Hotspot cells concentrate the load to make scheduler
quality visible.

All sweeps are deterministic under their seed lists; wall-clock columns are
the only nondeterministic outputs and are named in TIMING_COLUMNS so
consumers can exclude them when comparing runs.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .baselines import (
    GaConfig,
    pattern_ga,
    pattern_greedy,
    pattern_periodic,
    pattern_random,
)
from .cache import BhtpCache
from .channel import LinkParams, build_link_budget, pattern_capacities
from .geometry import generate_grid
from .mcts import MctsConfig, compute_pattern_mcts, compute_pattern_mcts_traced
from .orchestrator import (
    HybridPlanner,
    PlanRequest,
    PlannerSettings,
    default_c_max,
    plan_bhtp,
    simulate_bhtp,
)
from .scoring import (
    make_score_context,
    omega_max_for,
    score_bruteforce,
    score_sliding_window,
)
from .traffic import (
    advance_slot,
    generate_clustered_demand,
    generate_demand,
    make_queue_state,
)

ALGORITHMS = ("periodic", "random", "greedy", "mcts", "ga")
SWEEPS = ("throughput", "timing", "convergence", "scoring", "beta", "ds")

# Columns whose values are wall-clock measurements; excluded from
# reproducibility comparisons.
TIMING_COLUMNS = ("mean_pattern_time_s",)


@dataclass(frozen=True)
class ExperimentConfig:
    rings: int = 3
    cell_diameter_km: float = 942.0
    beams: int | None = None  # None -> floor(N/4)
    demand_levels: tuple = (0.2, 0.5, 0.8, 1.0, 1.2)
    algorithms: tuple = ("periodic", "random", "greedy", "mcts")
    seeds: tuple = (0, 1, 2)
    horizon_slots: int = 30
    # Unmetered lead-in slots so throughput is measured at steady state
    # rather than during the cold-start queue build-up.
    warmup_slots: int = 0
    slot_s: float = 0.1
    packet_bits: float = 1500 * 8.0
    ttl_slots: int = 20
    backend: str = "sliding"
    ds_diameters: float = 1.0
    demand_profile: str = "clustered"  # "clustered" | "uniform" hotspot layout
    hotspot_count: int = 12
    hotspot_multiplier: float = 6.0
    mcts_iterations: int = 200
    mcts_exploration: float = math.sqrt(2.0)
    mcts_pruning: bool = False
    prune_width: int | None = None
    ga_population: int = 60
    ga_generations: int = 10
    beta: int = 4
    beta_levels: tuple = (2, 4, 6, 8, 10)
    ds_levels: tuple = (1.0, 2.0, 3.0, 4.0, 5.0)
    bench_rings: tuple = (3, 4, 5, 6)
    sweeps: tuple = ("throughput",)
    output_dir: str = "results"

    def beams_for(self, n_cells: int) -> int:
        return self.beams if self.beams is not None else n_cells // 4


def load_config(path) -> ExperimentConfig:
    """Read a JSON config; unknown keys are rejected, lists become tuples."""
    with open(path) as fh:
        raw = json.load(fh)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cleaned = {
        key: tuple(value) if isinstance(value, list) else value
        for key, value in raw.items()
    }
    return ExperimentConfig(**cleaned)


@dataclass(frozen=True)
class MetricsRecord:
    sweep: str
    algorithm: str
    n_cells: int
    beams: int
    demand_level: float
    seed: int
    served_bits: float
    dropped_packets: int
    final_backlog: int
    mean_pattern_time_s: float


def make_system(rings: int, cell_diameter_km: float = 942.0):
    grid = generate_grid(rings, cell_diameter_km)
    params = LinkParams()
    budget = build_link_budget(grid, params)
    return grid, params, budget


def scaled_demand(grid, level: float, beams: int, c0_packets: float, cfg: ExperimentConfig, seed: int):
    """Hotspotted arrival rates whose total equals level x system capacity."""
    if cfg.demand_profile == "clustered":
        generator = generate_clustered_demand
    elif cfg.demand_profile == "uniform":
        generator = generate_demand
    else:
        raise ValueError(f"unknown demand profile {cfg.demand_profile!r}")
    base = generator(grid, 1.0, cfg.hotspot_count, cfg.hotspot_multiplier, seed)
    target_total = level * beams * c0_packets
    total = float(base.sum())
    return base * (target_total / total) if total > 0 else base


def _entropy(*parts) -> tuple:
    return tuple(int(p) for p in parts)


def _pattern_fn(alg: str, n: int, beams: int, seed: int, level_key: int, ctx, cfg: ExperimentConfig):
    if alg == "periodic":
        return lambda totals, slot: pattern_periodic(n, beams, slot)
    if alg == "random":
        rng = np.random.default_rng(_entropy(seed, level_key, 7))
        return lambda totals, slot: pattern_random(n, beams, rng)
    if alg == "greedy":
        return lambda totals, slot: pattern_greedy(totals, beams)
    if alg == "mcts":
        base = MctsConfig(
            max_iterations=cfg.mcts_iterations,
            exploration_constant=cfg.mcts_exploration,
            pruning_enabled=cfg.mcts_pruning,
            prune_width=cfg.prune_width,
        )
        return lambda totals, slot: compute_pattern_mcts(
            ctx, totals, beams, replace(base, rng_seed=_entropy(seed, level_key, slot))
        )
    if alg == "ga":
        base = GaConfig(
            population_size=cfg.ga_population, generations=cfg.ga_generations
        )
        return lambda totals, slot: pattern_ga(
            ctx, totals, beams, replace(base, rng_seed=_entropy(seed, level_key, slot))
        )
    raise ValueError(f"unknown algorithm {alg!r}")


def _simulate_run(alg, rates, grid, budget, params, cfg: ExperimentConfig, seed, level) -> MetricsRecord:
    n = grid.n_cells
    beams = cfg.beams_for(n)
    level_key = round(level * 1000)
    state = make_queue_state(n, rates, ttl=cfg.ttl_slots, packet_bits=cfg.packet_bits)
    ctx = make_score_context(
        grid,
        budget,
        params,
        state.totals(),
        slot_s=cfg.slot_s,
        packet_bits=cfg.packet_bits,
        ds_km=cfg.ds_diameters * grid.cell_diameter,
        omega_max=omega_max_for(budget, params, beams, cfg.slot_s),
        backend=cfg.backend,
    )
    next_pattern = _pattern_fn(alg, n, beams, seed, level_key, ctx, cfg)
    arrivals_rng = np.random.default_rng(_entropy(seed, level_key, 1))
    served_bits = 0.0
    dropped = 0
    times = []
    for slot in range(cfg.warmup_slots + cfg.horizon_slots):
        totals = state.totals()
        t0 = time.perf_counter()
        pattern = next_pattern(totals, slot)
        elapsed = time.perf_counter() - t0
        caps = pattern_capacities(pattern, budget, params, n)
        outcome = advance_slot(
            state, pattern, caps, cfg.slot_s, rng=arrivals_rng, expected_beams=beams
        )
        state = outcome.queue_after
        if slot < cfg.warmup_slots:
            continue  # lead-in slot: evolve the queues, record nothing
        times.append(elapsed)
        served_bits += float(outcome.served_bits.sum())
        dropped += int(outcome.dropped_packets.sum())
    return MetricsRecord(
        sweep="throughput",
        algorithm=alg,
        n_cells=n,
        beams=beams,
        demand_level=level,
        seed=seed,
        served_bits=served_bits,
        dropped_packets=dropped,
        final_backlog=int(state.totals().sum()),
        mean_pattern_time_s=statistics.fmean(times),
    )


def run_throughput_sweep(cfg: ExperimentConfig) -> list[MetricsRecord]:
    grid, params, budget = make_system(cfg.rings, cfg.cell_diameter_km)
    beams = cfg.beams_for(grid.n_cells)
    settings = PlannerSettings(
        beams=beams,
        horizon_slots=cfg.horizon_slots,
        slot_s=cfg.slot_s,
        packet_bits=cfg.packet_bits,
        ttl_slots=cfg.ttl_slots,
    )
    c0 = default_c_max(budget, params, settings)
    records = []
    for level in cfg.demand_levels:
        for seed in cfg.seeds:
            rates = scaled_demand(grid, level, beams, c0, cfg, seed)
            for alg in cfg.algorithms:
                records.append(
                    _simulate_run(alg, rates, grid, budget, params, cfg, seed, level)
                )
    return records


def run_timing_table(cfg: ExperimentConfig, repeats: int = 10) -> list[dict]:
    """Mean/stdev wall time per emitted pattern, per algorithm and grid size."""
    rows = []
    for rings in cfg.bench_rings:
        grid, params, budget = make_system(rings, cfg.cell_diameter_km)
        n = grid.n_cells
        beams = cfg.beams_for(n)
        settings = PlannerSettings(beams=beams, horizon_slots=cfg.horizon_slots)
        c0 = default_c_max(budget, params, settings)
        rates = scaled_demand(grid, 1.0, beams, c0, cfg, cfg.seeds[0])
        totals = np.rint(rates)
        ctx = make_score_context(
            grid,
            budget,
            params,
            totals,
            slot_s=cfg.slot_s,
            packet_bits=cfg.packet_bits,
            ds_km=cfg.ds_diameters * grid.cell_diameter,
            omega_max=omega_max_for(budget, params, beams, cfg.slot_s),
            backend=cfg.backend,
        )
        for alg in cfg.algorithms:
            fn = _pattern_fn(alg, n, beams, cfg.seeds[0], 1000, ctx, cfg)
            times = []
            for rep in range(repeats):
                t0 = time.perf_counter()
                fn(totals, rep)
                times.append(time.perf_counter() - t0)
            rows.append(
                {
                    "algorithm": alg,
                    "n_cells": n,
                    "beams": beams,
                    "repeats": repeats,
                    "mean_pattern_time_s": statistics.fmean(times),
                    "stdev_pattern_time_s": statistics.stdev(times) if repeats > 1 else 0.0,
                }
            )
    return rows


def convergence_iterations(best_so_far: list[float], fraction: float = 0.99) -> int:
    """First iteration index whose running best reaches fraction x final."""
    final = best_so_far[-1]
    threshold = fraction * final
    for i, value in enumerate(best_so_far):
        if value >= threshold:
            return i
    return len(best_so_far) - 1


def run_convergence_trace(cfg: ExperimentConfig) -> dict:
    """Paired pruned/unpruned search traces on one demand snapshot per seed."""
    grid, params, budget = make_system(cfg.rings, cfg.cell_diameter_km)
    n = grid.n_cells
    beams = cfg.beams_for(n)
    settings = PlannerSettings(beams=beams, horizon_slots=cfg.horizon_slots)
    c0 = default_c_max(budget, params, settings)
    base_cfg = MctsConfig(
        max_iterations=cfg.mcts_iterations,
        exploration_constant=cfg.mcts_exploration,
    )
    out = {"n_cells": n, "beams": beams, "seeds": list(cfg.seeds), "runs": []}
    for seed in cfg.seeds:
        rates = scaled_demand(grid, 1.0, beams, c0, cfg, seed)
        totals = np.rint(rates)
        ctx = make_score_context(
            grid,
            budget,
            params,
            totals,
            slot_s=cfg.slot_s,
            packet_bits=cfg.packet_bits,
            ds_km=cfg.ds_diameters * grid.cell_diameter,
            omega_max=omega_max_for(budget, params, beams, cfg.slot_s),
            backend=cfg.backend,
        )
        run = {"seed": seed}
        for label, pruned in (("unpruned", False), ("pruned", True)):
            mcfg = replace(
                base_cfg,
                pruning_enabled=pruned,
                prune_width=cfg.prune_width,
                rng_seed=_entropy(seed, int(pruned)),
            )
            _, trace = compute_pattern_mcts_traced(ctx, totals, beams, mcfg)
            best = trace.best_so_far()
            run[label] = {
                "final_score": best[-1],
                "iterations_to_99pct": convergence_iterations(best),
                "best_so_far": best,
            }
        out["runs"].append(run)
    return out


def run_scoring_bench(
    cfg: ExperimentConfig, patterns_per_n: int = 50, repeats: int = 5
) -> list[dict]:
    """Per-score wall time, brute force vs sliding window, across grid sizes."""
    rows = []
    for rings in cfg.bench_rings:
        grid, params, budget = make_system(rings, cfg.cell_diameter_km)
        n = grid.n_cells
        beams = cfg.beams_for(n)
        rng = np.random.default_rng(_entropy(rings, 99))
        totals = rng.integers(0, 20000, size=n).astype(float)
        ctx = make_score_context(
            grid,
            budget,
            params,
            totals,
            slot_s=cfg.slot_s,
            packet_bits=cfg.packet_bits,
            ds_km=cfg.ds_diameters * grid.cell_diameter,
            omega_max=omega_max_for(budget, params, beams, cfg.slot_s),
        )
        patterns = [
            tuple(sorted(int(c) for c in rng.choice(n, size=beams, replace=False)))
            for _ in range(patterns_per_n)
        ]
        timings = {}
        for label, scorer in (
            ("bruteforce", score_bruteforce),
            ("sliding", score_sliding_window),
        ):
            best = math.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                for p in patterns:
                    scorer(p, ctx, beams)
                best = min(best, time.perf_counter() - t0)
            timings[label] = best / patterns_per_n
        rows.append(
            {
                "n_cells": n,
                "beams": beams,
                "bruteforce_per_score_s": timings["bruteforce"],
                "sliding_per_score_s": timings["sliding"],
                "speedup": timings["bruteforce"] / timings["sliding"],
            }
        )
    return rows


def run_beta_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Throughput of the cached plan path as discretization coarsens.

    For each beta the planner is asked twice: the first request fills the
    cache (inline, sync mode), the second returns the stored refined plan,
    which is then replayed against the true (undiscretized) demand. A
    reference row plans directly from the raw demand.
    """
    grid, params, budget = make_system(cfg.rings, cfg.cell_diameter_km)
    n = grid.n_cells
    beams = cfg.beams_for(n)
    settings = PlannerSettings(
        beams=beams,
        horizon_slots=cfg.horizon_slots,
        slot_s=cfg.slot_s,
        packet_bits=cfg.packet_bits,
        ttl_slots=cfg.ttl_slots,
        ds_km=cfg.ds_diameters * grid.cell_diameter,
        backend=cfg.backend,
    )
    c0 = default_c_max(budget, params, settings)
    mcts_cfg = MctsConfig(
        max_iterations=cfg.mcts_iterations,
        exploration_constant=cfg.mcts_exploration,
        pruning_enabled=cfg.mcts_pruning,
        prune_width=cfg.prune_width,
    )
    rows = []
    for seed in cfg.seeds:
        rates = scaled_demand(grid, 1.0, beams, c0, cfg, seed)
        reference = plan_bhtp(
            rates,
            grid,
            budget,
            params,
            settings,
            "mcts",
            replace(mcts_cfg, rng_seed=_entropy(seed)),
        )
        ref_sim = simulate_bhtp(reference, rates, grid, budget, params, settings)
        rows.append(
            {
                "seed": seed,
                "beta": None,
                "served_bits": ref_sim["served_bits"],
                "dropped_packets": ref_sim["dropped_packets"],
            }
        )
        for beta in cfg.beta_levels:
            planner = HybridPlanner(
                grid,
                params,
                settings,
                mcts_cfg=replace(mcts_cfg, rng_seed=_entropy(seed)),
                mode="sync",
                beta=beta,
            )
            first = planner.handle_request(PlanRequest(rates))
            assert first.source == "online_greedy"
            second = planner.handle_request(PlanRequest(rates))
            if second.source != "cache":
                raise RuntimeError("sync fill did not populate the cache")
            sim = simulate_bhtp(second.bhtp, rates, grid, budget, params, settings)
            rows.append(
                {
                    "seed": seed,
                    "beta": beta,
                    "served_bits": sim["served_bits"],
                    "dropped_packets": sim["dropped_packets"],
                }
            )
    return rows


def run_ds_sweep(cfg: ExperimentConfig, patterns_per_ds: int = 30) -> list[dict]:
    """Score time and plan quality as the interference window widens."""
    grid, params, budget = make_system(cfg.rings, cfg.cell_diameter_km)
    n = grid.n_cells
    beams = cfg.beams_for(n)
    rng = np.random.default_rng(_entropy(505, n))
    totals = rng.integers(0, 20000, size=n).astype(float)
    patterns = [
        tuple(sorted(int(c) for c in rng.choice(n, size=beams, replace=False)))
        for _ in range(patterns_per_ds)
    ]
    mcts_cfg = MctsConfig(
        max_iterations=cfg.mcts_iterations,
        exploration_constant=cfg.mcts_exploration,
    )
    rows = []
    for ds in cfg.ds_levels:
        ds_km = ds * grid.cell_diameter
        ctx = make_score_context(
            grid,
            budget,
            params,
            totals,
            slot_s=cfg.slot_s,
            packet_bits=cfg.packet_bits,
            ds_km=ds_km,
            omega_max=omega_max_for(budget, params, beams, cfg.slot_s),
        )
        best = math.inf
        for _ in range(5):
            t0 = time.perf_counter()
            for p in patterns:
                score_sliding_window(p, ctx, beams)
            best = min(best, time.perf_counter() - t0)
        settings = PlannerSettings(
            beams=beams,
            horizon_slots=cfg.horizon_slots,
            slot_s=cfg.slot_s,
            packet_bits=cfg.packet_bits,
            ttl_slots=cfg.ttl_slots,
            ds_km=ds_km,
            backend="sliding",
        )
        c0 = default_c_max(budget, params, settings)
        rates = scaled_demand(grid, 1.0, beams, c0, cfg, cfg.seeds[0])
        bhtp = plan_bhtp(
            rates, grid, budget, params, settings, "mcts",
            replace(mcts_cfg, rng_seed=_entropy(cfg.seeds[0], round(ds * 10))),
        )
        sim = simulate_bhtp(bhtp, rates, grid, budget, params, settings)
        rows.append(
            {
                "ds_diameters": ds,
                "per_score_time_s": best / patterns_per_ds,
                "served_bits": sim["served_bits"],
            }
        )
    return rows


# -- output files ------------------------------------------------------------


def write_records_csv(records: list[MetricsRecord], path):
    cols = [f.name for f in fields(MetricsRecord)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for rec in records:
            writer.writerow([getattr(rec, c) for c in cols])


def write_records_json(records: list[MetricsRecord], path):
    with open(path, "w") as fh:
        json.dump([asdict(r) for r in records], fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def strip_timing_columns(csv_text: str) -> str:
    """CSV content with TIMING_COLUMNS removed — the reproducible part."""
    lines = csv_text.splitlines()
    if not lines:
        return csv_text
    header = lines[0].split(",")
    keep = [i for i, name in enumerate(header) if name not in TIMING_COLUMNS]
    out = []
    for line in lines:
        cells = line.split(",")
        out.append(",".join(cells[i] for i in keep))
    return "\n".join(out) + "\n"


def run_all(cfg: ExperimentConfig) -> dict[str, Path]:
    """Run every sweep named in cfg.sweeps; returns the files written."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for sweep in cfg.sweeps:
        if sweep == "throughput":
            records = run_throughput_sweep(cfg)
            csv_path = outdir / "throughput.csv"
            write_records_csv(records, csv_path)
            write_records_json(records, outdir / "throughput.json")
            written["throughput"] = csv_path
        elif sweep == "timing":
            path = outdir / "timing.json"
            write_json(run_timing_table(cfg), path)
            written["timing"] = path
        elif sweep == "convergence":
            path = outdir / "convergence.json"
            write_json(run_convergence_trace(cfg), path)
            written["convergence"] = path
        elif sweep == "scoring":
            path = outdir / "scoring_bench.json"
            write_json(run_scoring_bench(cfg), path)
            written["scoring"] = path
        elif sweep == "beta":
            path = outdir / "beta_sweep.json"
            write_json(run_beta_sweep(cfg), path)
            written["beta"] = path
        elif sweep == "ds":
            path = outdir / "ds_sweep.json"
            write_json(run_ds_sweep(cfg), path)
            written["ds"] = path
        else:
            raise ValueError(f"unknown sweep {sweep!r}")
    return written
