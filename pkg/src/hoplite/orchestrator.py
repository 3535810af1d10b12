"""Hybrid planner: answer now with greedy, refine in the background.

A request carries a per-cell demand vector. If the plan cache already holds
a transmission plan for that demand class the stored plan is returned
immediately; otherwise the request is answered with a greedy plan computed
on the spot, and a background search job is queued that computes an MCTS
plan for the same demand class and stores it for future requests. Jobs for
the same discretized demand coalesce, and the waiting queue is depth-limited
(oldest waiting demand dropped first).

Plans are built closed-loop: each slot's pattern is chosen against the queue
state that results from serving the previous slots of the same plan, with
arrivals taken as the rounded demand rates.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import OrderedDict
from concurrent.futures import Future, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import pattern_greedy
from .cache import BhtpCache
from .channel import LinkBudget, LinkParams, build_link_budget, pattern_capacities
from .geometry import CellGrid
from .mcts import MctsConfig, compute_pattern_mcts
from .scoring import make_score_context, omega_max_for
from .traffic import advance_slot, make_queue_state

logger = logging.getLogger(__name__)

EXECUTION_MODES = ("process", "thread", "sync")
PLAN_ALGORITHMS = ("greedy", "mcts")


@dataclass(frozen=True)
class PlannerSettings:
    """Shared knobs for plan construction and replay."""

    beams: int
    horizon_slots: int = 30
    slot_s: float = 0.1
    packet_bits: float = 1500 * 8.0
    ttl_slots: int = 20
    ds_km: float | None = None  # None -> one cell diameter
    backend: str = "sliding"

    def __post_init__(self):
        if self.beams < 1 or self.horizon_slots < 1:
            raise ValueError("beams and horizon_slots must be >= 1")


@dataclass(frozen=True)
class PlanRequest:
    demand: np.ndarray  # per-cell packets per slot
    horizon_slots: int | None = None  # None -> planner default
    request_id: int = 0


@dataclass(frozen=True)
class PlanResponse:
    bhtp: tuple
    source: str  # "cache" | "online_greedy"
    latency_s: float
    request_id: int = 0


def default_c_max(budget: LinkBudget, params: LinkParams, settings: PlannerSettings) -> float:
    """Demand clamp for discretization: one beam-slot's packet capacity."""
    bits = omega_max_for(budget, params, 1, settings.slot_s)
    return bits / settings.packet_bits


def _slot_seed(base, slot: int) -> tuple:
    if isinstance(base, tuple):
        return base + (slot,)
    return (int(base), slot)


def plan_bhtp(
    arrival_rates,
    grid: CellGrid,
    budget: LinkBudget,
    params: LinkParams,
    settings: PlannerSettings,
    algorithm: str = "greedy",
    mcts_cfg: MctsConfig | None = None,
) -> tuple:
    """Closed-loop transmission plan over the horizon for one demand vector."""
    if algorithm not in PLAN_ALGORITHMS:
        raise ValueError(f"unknown planning algorithm {algorithm!r}")
    rates = np.asarray(arrival_rates, dtype=float)
    n = grid.n_cells
    if rates.shape != (n,):
        raise ValueError("demand vector length must match the grid")
    state = make_queue_state(
        n, rates, ttl=settings.ttl_slots, packet_bits=settings.packet_bits
    )
    ctx = None
    if algorithm == "mcts":
        if mcts_cfg is None:
            mcts_cfg = MctsConfig()
        ctx = make_score_context(
            grid,
            budget,
            params,
            state.totals(),
            slot_s=settings.slot_s,
            packet_bits=settings.packet_bits,
            ds_km=settings.ds_km,
            omega_max=omega_max_for(budget, params, settings.beams, settings.slot_s),
            backend=settings.backend,
        )
    plan = []
    for slot in range(settings.horizon_slots):
        totals = state.totals()
        if algorithm == "greedy":
            pattern = pattern_greedy(totals, settings.beams)
        else:
            cfg = replace(mcts_cfg, rng_seed=_slot_seed(mcts_cfg.rng_seed, slot))
            pattern = compute_pattern_mcts(ctx, totals, settings.beams, cfg)
        plan.append(tuple(pattern))
        caps = pattern_capacities(pattern, budget, params, n)
        state = advance_slot(state, pattern, caps, settings.slot_s, rng=None).queue_after
    return tuple(plan)


def simulate_bhtp(
    bhtp,
    arrival_rates,
    grid: CellGrid,
    budget: LinkBudget,
    params: LinkParams,
    settings: PlannerSettings,
    rng: np.random.Generator | None = None,
) -> dict:
    """Replay a fixed plan against the queue model; totals for scoring runs."""
    rates = np.asarray(arrival_rates, dtype=float)
    state = make_queue_state(
        grid.n_cells, rates, ttl=settings.ttl_slots, packet_bits=settings.packet_bits
    )
    served_bits = 0.0
    dropped = 0
    per_slot_bits = []
    for pattern in bhtp:
        caps = pattern_capacities(pattern, budget, params, grid.n_cells)
        outcome = advance_slot(state, pattern, caps, settings.slot_s, rng=rng)
        slot_bits = float(outcome.served_bits.sum())
        served_bits += slot_bits
        dropped += int(outcome.dropped_packets.sum())
        per_slot_bits.append(slot_bits)
        state = outcome.queue_after
    return {
        "served_bits": served_bits,
        "dropped_packets": dropped,
        "per_slot_bits": per_slot_bits,
        "final_backlog": int(state.totals().sum()),
    }


def _background_job(
    grid: CellGrid,
    budget: LinkBudget,
    params: LinkParams,
    settings: PlannerSettings,
    mcts_cfg: MctsConfig,
    demand,
) -> tuple:
    """Runs in a worker (process or thread): the refined plan for one demand."""
    return plan_bhtp(demand, grid, budget, params, settings, "mcts", mcts_cfg)


class HybridPlanner:
    """Serves plan requests from the cache, filling misses in the background."""

    def __init__(
        self,
        grid: CellGrid,
        params: LinkParams,
        settings: PlannerSettings,
        cache: BhtpCache | None = None,
        mcts_cfg: MctsConfig | None = None,
        mode: str = "process",
        max_workers: int = 1,
        max_pending: int = 8,
        beta: int = 4,
    ):
        if mode not in EXECUTION_MODES:
            raise ValueError(f"unknown execution mode {mode!r}")
        self.grid = grid
        self.params = params
        self.settings = settings
        self.budget = build_link_budget(grid, params)
        self.mcts_cfg = mcts_cfg if mcts_cfg is not None else MctsConfig()
        if cache is None:
            cache = BhtpCache(c_max=default_c_max(self.budget, params, settings), beta=beta)
        self.cache = cache
        self.mode = mode
        self.max_workers = max(1, int(max_workers))
        self.max_pending = max(1, int(max_pending))
        if mode == "process":
            self._executor = ProcessPoolExecutor(max_workers=self.max_workers)
        elif mode == "thread":
            self._executor = ThreadPoolExecutor(max_workers=self.max_workers)
        else:
            self._executor = None
        self._lock = threading.Lock()
        self._waiting: OrderedDict[bytes, np.ndarray] = OrderedDict()
        self._inflight: dict[bytes, tuple[Future, np.ndarray]] = {}
        self._idle = threading.Event()
        self._idle.set()
        self.requests = 0
        self.cache_hits = 0
        self.online_misses = 0
        self.coalesced = 0
        self.dropped_jobs = 0
        self.jobs_completed = 0
        self.jobs_failed = 0

    # -- online path -------------------------------------------------------

    def handle_request(self, req: PlanRequest) -> PlanResponse:
        t0 = time.perf_counter()
        demand = np.asarray(req.demand, dtype=float)
        if demand.shape != (self.grid.n_cells,):
            raise ValueError(
                f"demand length {demand.shape} does not match {self.grid.n_cells} cells"
            )
        horizon = req.horizon_slots or self.settings.horizon_slots
        settings = (
            self.settings
            if horizon == self.settings.horizon_slots
            else replace(self.settings, horizon_slots=horizon)
        )
        self.requests += 1
        stored = self.cache.lookup(demand)
        if stored is not None and len(stored) == horizon:
            self.cache_hits += 1
            return PlanResponse(stored, "cache", time.perf_counter() - t0, req.request_id)
        self.online_misses += 1
        self._enqueue(demand, settings)
        bhtp = plan_bhtp(demand, self.grid, self.budget, self.params, settings, "greedy")
        return PlanResponse(bhtp, "online_greedy", time.perf_counter() - t0, req.request_id)

    # -- background fill ----------------------------------------------------

    def _enqueue(self, demand: np.ndarray, settings: PlannerSettings):
        disc = self.cache.discretize(demand)
        key = self.cache.key_for(demand)
        with self._lock:
            if key in self._inflight or key in self._waiting:
                self.coalesced += 1
                return
            self._idle.clear()
            self._waiting[key] = disc
            while len(self._waiting) > self.max_pending:
                self._waiting.popitem(last=False)
                self.dropped_jobs += 1
        if self.mode == "sync":
            self._run_sync(settings)
        else:
            with self._lock:
                self._dispatch_locked(settings)

    def _run_sync(self, settings: PlannerSettings):
        while True:
            with self._lock:
                if not self._waiting:
                    if not self._inflight:
                        self._idle.set()
                    return
                key, disc = self._waiting.popitem(last=False)
            try:
                bhtp = _background_job(
                    self.grid, self.budget, self.params, settings, self.mcts_cfg, disc
                )
            except Exception:
                logger.exception("background plan job failed")
                self.jobs_failed += 1
            else:
                self.cache.store(disc, bhtp)
                self.jobs_completed += 1

    def _dispatch_locked(self, settings: PlannerSettings):
        while self._waiting and len(self._inflight) < self.max_workers:
            key, disc = self._waiting.popitem(last=False)
            future = self._executor.submit(
                _background_job,
                self.grid,
                self.budget,
                self.params,
                settings,
                self.mcts_cfg,
                disc,
            )
            self._inflight[key] = (future, disc)
            future.add_done_callback(
                lambda fut, k=key, s=settings: self._on_done(k, fut, s)
            )

    def _on_done(self, key: bytes, future: Future, settings: PlannerSettings):
        with self._lock:
            _, disc = self._inflight.pop(key)
        try:
            bhtp = future.result()
        except Exception:
            logger.exception("background plan job failed")
            self.jobs_failed += 1
        else:
            self.cache.store(disc, bhtp)
            self.jobs_completed += 1
        with self._lock:
            self._dispatch_locked(settings)
            if not self._inflight and not self._waiting:
                self._idle.set()

    # -- lifecycle -----------------------------------------------------------

    def drain(self, timeout: float | None = None) -> bool:
        """Block until all queued background jobs have finished."""
        return self._idle.wait(timeout)

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def stats(self) -> dict:
        with self._lock:
            return {
                "requests": self.requests,
                "cache_hits": self.cache_hits,
                "online_misses": self.online_misses,
                "coalesced": self.coalesced,
                "dropped_jobs": self.dropped_jobs,
                "jobs_completed": self.jobs_completed,
                "jobs_failed": self.jobs_failed,
                "waiting": len(self._waiting),
                "inflight": len(self._inflight),
            }
