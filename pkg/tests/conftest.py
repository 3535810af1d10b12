"""Shared fixtures: canonical grids, link budgets and scoring contexts."""

import numpy as np
import pytest

from hoplite.channel import LinkParams, build_link_budget
from hoplite.geometry import generate_grid, grid_from_points
from hoplite.scoring import make_score_context, omega_max_for


@pytest.fixture(scope="session")
def params():
    return LinkParams()


@pytest.fixture(scope="session")
def grid37():
    return generate_grid(3)


@pytest.fixture(scope="session")
def budget37(grid37, params):
    return build_link_budget(grid37, params)


@pytest.fixture(scope="session")
def grid8():
    """Two rows of four cells, one diameter apart — small enough to enumerate."""
    d = 942.0
    xs = [0.0, d, 2 * d, 3 * d, 0.5 * d, 1.5 * d, 2.5 * d, 3.5 * d]
    ys = [0.0] * 4 + [d * np.sqrt(3) / 2] * 4
    return grid_from_points(xs, ys, cell_diameter=d)


@pytest.fixture(scope="session")
def budget8(grid8, params):
    return build_link_budget(grid8, params)


def build_ctx(grid, budget, params, totals, beams, **overrides):
    """Scoring context with the standard normalizer; keyword overrides pass through."""
    kwargs = dict(
        slot_s=0.1,
        packet_bits=1500 * 8.0,
        ds_km=grid.cell_diameter,
        omega_max=omega_max_for(budget, params, beams, 0.1),
    )
    kwargs.update(overrides)
    return make_score_context(grid, budget, params, np.asarray(totals, float), **kwargs)


@pytest.fixture(scope="session")
def ctx37(grid37, budget37, params):
    rng = np.random.default_rng(1234)
    totals = rng.integers(0, 20000, size=grid37.n_cells).astype(float)
    return build_ctx(grid37, budget37, params, totals, beams=9)
