"""Hybrid planner: plan construction, cache flow, background-fill contract."""

import threading
import time

import numpy as np
import pytest

import hoplite.orchestrator as orch
from hoplite.channel import build_link_budget
from hoplite.geometry import generate_grid
from hoplite.mcts import MctsConfig
from hoplite.orchestrator import (
    HybridPlanner,
    PlanRequest,
    PlannerSettings,
    default_c_max,
    plan_bhtp,
    simulate_bhtp,
)
from hoplite.traffic import generate_clustered_demand


@pytest.fixture(scope="module")
def system(params):
    grid = generate_grid(3)
    return grid, build_link_budget(grid, params), params


def test_settings_validation():
    with pytest.raises(ValueError):
        PlannerSettings(beams=0)
    with pytest.raises(ValueError):
        PlannerSettings(beams=9, horizon_slots=0)


def test_default_c_max_one_beam_slot(system):
    grid, budget, params = system
    settings = PlannerSettings(beams=9)
    packets = default_c_max(budget, params, settings)
    assert packets == pytest.approx(9975, rel=0.01)


def test_plan_bhtp_well_formed_and_deterministic(system):
    grid, budget, params = system
    settings = PlannerSettings(beams=9, horizon_slots=12)
    rng = np.random.default_rng(0)
    rates = rng.uniform(0, 4000, grid.n_cells)
    for algorithm, cfg in (
        ("greedy", None),
        ("mcts", MctsConfig(max_iterations=15, rng_seed=1)),
    ):
        plan = plan_bhtp(rates, grid, budget, params, settings, algorithm, cfg)
        assert len(plan) == 12
        for pattern in plan:
            assert len(set(pattern)) == 9
            assert all(0 <= c < grid.n_cells for c in pattern)
        again = plan_bhtp(rates, grid, budget, params, settings, algorithm, cfg)
        assert plan == again


def test_plan_bhtp_validation(system):
    grid, budget, params = system
    settings = PlannerSettings(beams=9)
    with pytest.raises(ValueError):
        plan_bhtp(np.zeros(grid.n_cells), grid, budget, params, settings, "magic")
    with pytest.raises(ValueError):
        plan_bhtp(np.zeros(5), grid, budget, params, settings, "greedy")


def test_simulate_bhtp_accounting(system):
    grid, budget, params = system
    settings = PlannerSettings(beams=9, horizon_slots=8)
    rng = np.random.default_rng(1)
    rates = rng.uniform(0, 3000, grid.n_cells)
    plan = plan_bhtp(rates, grid, budget, params, settings, "greedy")
    sim = simulate_bhtp(plan, rates, grid, budget, params, settings)
    assert sim["served_bits"] == pytest.approx(sum(sim["per_slot_bits"]), rel=1e-12)
    assert len(sim["per_slot_bits"]) == 8
    assert sim["dropped_packets"] >= 0
    assert sim["final_backlog"] >= 0


# -- request flow ------------------------------------------------------------------


def sync_planner(system, beta=4, iterations=10, horizon=6):
    grid, budget, params = system
    settings = PlannerSettings(beams=9, horizon_slots=horizon)
    return HybridPlanner(
        grid,
        params,
        settings,
        mcts_cfg=MctsConfig(max_iterations=iterations, rng_seed=0),
        mode="sync",
        beta=beta,
    )


def test_first_miss_then_hit_sync(system):
    grid, budget, params = system
    planner = sync_planner(system)
    rng = np.random.default_rng(2)
    demand = rng.uniform(0, 5000, grid.n_cells)
    first = planner.handle_request(PlanRequest(demand))
    assert first.source == "online_greedy"
    assert len(first.bhtp) == 6
    second = planner.handle_request(PlanRequest(demand))
    assert second.source == "cache"
    # The stored plan is the MCTS plan computed from the discretized demand.
    expect = plan_bhtp(
        planner.cache.discretize(demand),
        grid,
        planner.budget,
        params,
        planner.settings,
        "mcts",
        planner.mcts_cfg,
    )
    assert second.bhtp == expect
    stats = planner.stats()
    assert stats["requests"] == 2
    assert stats["cache_hits"] == 1
    assert stats["jobs_completed"] == 1


def test_demand_length_checked(system):
    planner = sync_planner(system)
    with pytest.raises(ValueError):
        planner.handle_request(PlanRequest(np.zeros(5)))


def test_horizon_mismatch_is_a_miss(system):
    grid, budget, params = system
    planner = sync_planner(system, horizon=6)
    demand = np.full(grid.n_cells, 800.0)
    planner.handle_request(PlanRequest(demand))  # fills cache at horizon 6
    short = planner.handle_request(PlanRequest(demand, horizon_slots=3))
    assert short.source == "online_greedy"
    assert len(short.bhtp) == 3
    repeat = planner.handle_request(PlanRequest(demand, horizon_slots=3))
    assert repeat.source == "cache"
    assert len(repeat.bhtp) == 3


def test_invalid_mode_rejected(system):
    grid, budget, params = system
    with pytest.raises(ValueError):
        HybridPlanner(grid, params, PlannerSettings(beams=9), mode="fiber")


# -- background fill (thread mode, gated worker) --------------------------------------


class GatedJob:
    """Stand-in background planner that blocks until released."""

    def __init__(self):
        self.started = threading.Event()
        self.release = threading.Event()
        self.calls = 0

    def __call__(self, grid, budget, params, settings, mcts_cfg, demand):
        self.calls += 1
        self.started.set()
        assert self.release.wait(20), "test never released the gated job"
        return tuple(
            tuple(range(settings.beams)) for _ in range(settings.horizon_slots)
        )


def thread_planner(system, max_pending=8):
    grid, budget, params = system
    settings = PlannerSettings(beams=9, horizon_slots=4)
    return HybridPlanner(
        grid,
        params,
        settings,
        mcts_cfg=MctsConfig(max_iterations=5),
        mode="thread",
        max_workers=1,
        max_pending=max_pending,
        beta=4,
    )


def test_duplicate_inflight_misses_coalesce(system, monkeypatch):
    gate = GatedJob()
    monkeypatch.setattr(orch, "_background_job", gate)
    grid = system[0]
    demand = np.full(grid.n_cells, 1500.0)
    with thread_planner(system) as planner:
        first = planner.handle_request(PlanRequest(demand))
        assert first.source == "online_greedy"
        assert gate.started.wait(5)
        second = planner.handle_request(PlanRequest(demand))
        assert second.source == "online_greedy"
        assert planner.stats()["coalesced"] == 1
        gate.release.set()
        assert planner.drain(timeout=10)
        third = planner.handle_request(PlanRequest(demand))
        assert third.source == "cache"
        assert gate.calls == 1
        assert planner.stats()["jobs_completed"] == 1


def test_pending_queue_drops_oldest(system, monkeypatch):
    gate = GatedJob()
    monkeypatch.setattr(orch, "_background_job", gate)
    grid = system[0]
    with thread_planner(system, max_pending=2) as planner:
        step = planner.cache.c_max / planner.cache.beta
        demands = [np.full(grid.n_cells, i * step) for i in range(4)]
        assert len({planner.cache.key_for(d) for d in demands}) == 4
        for demand in demands:
            planner.handle_request(PlanRequest(demand))
        assert gate.started.wait(5)
        assert planner.stats()["dropped_jobs"] == 1
        gate.release.set()
        assert planner.drain(timeout=10)
        assert planner.stats()["jobs_completed"] == 3
        kept = [planner.cache.lookup(d) is not None for d in demands]
        assert kept == [True, False, True, True]  # the oldest waiter was shed


def test_online_path_not_blocked_by_inflight_job(system, monkeypatch):
    gate = GatedJob()
    monkeypatch.setattr(orch, "_background_job", gate)
    grid = system[0]
    with thread_planner(system) as planner:
        step = planner.cache.c_max / planner.cache.beta
        planner.handle_request(PlanRequest(np.full(grid.n_cells, step)))
        assert gate.started.wait(5)
        t0 = time.perf_counter()
        response = planner.handle_request(PlanRequest(np.full(grid.n_cells, 2 * step)))
        elapsed = time.perf_counter() - t0
        gate.release.set()
        assert response.source == "online_greedy"
        assert elapsed < 1.0  # nowhere near the gated job's 20 s hold


def test_sync_mode_failure_keeps_serving(system, monkeypatch):
    def exploding(*args):
        raise RuntimeError("search blew up")

    monkeypatch.setattr(orch, "_background_job", exploding)
    grid = system[0]
    planner = sync_planner(system)
    demand = np.full(grid.n_cells, 700.0)
    first = planner.handle_request(PlanRequest(demand))
    assert first.source == "online_greedy"
    assert planner.stats()["jobs_failed"] == 1
    again = planner.handle_request(PlanRequest(demand))
    assert again.source == "online_greedy"  # cache was never filled


# -- refined plans beat the online answer ----------------------------------------------


def test_stored_plan_at_least_greedy_on_most_seeds(system):
    grid, budget, params = system
    settings = PlannerSettings(beams=9)
    c0 = default_c_max(budget, params, settings)
    wins = 0
    for seed in range(20):
        base = generate_clustered_demand(grid, 1.0, 9, 5.0, seed)
        rates = base * (1.2 * 9 * c0 / base.sum())
        greedy = plan_bhtp(rates, grid, budget, params, settings, "greedy")
        cfg = MctsConfig(
            max_iterations=60,
            exploration_constant=0.5,
            pruning_enabled=True,
            prune_width=12,
            rng_seed=(seed,),
        )
        refined = plan_bhtp(rates, grid, budget, params, settings, "mcts", cfg)
        served_g = simulate_bhtp(greedy, rates, grid, budget, params, settings)
        served_m = simulate_bhtp(refined, rates, grid, budget, params, settings)
        wins += served_m["served_bits"] >= served_g["served_bits"]
    assert wins >= 18  # >= 90% of 20 trials
