"""Hex-grid construction, distances and the pre-sorted cell order."""

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hoplite.geometry import (
    DEFAULT_CELL_DIAMETER_KM,
    CellGrid,
    centered_hex_number,
    generate_grid,
    grid_from_points,
)


def test_centered_hex_numbers():
    assert [centered_hex_number(r) for r in range(1, 7)] == [7, 19, 37, 61, 91, 127]


@pytest.mark.parametrize("rings", range(1, 7))
def test_cell_count_is_centered_hex_number(rings):
    grid = generate_grid(rings)
    assert grid.n_cells == centered_hex_number(rings)
    assert [c.id for c in grid.cells] == list(range(grid.n_cells))


def test_rings_three_has_37_cells():
    assert generate_grid(3).n_cells == 37


def test_rings_one_has_7_cells():
    assert generate_grid(1).n_cells == 7


def test_rings_six_max_x_extent():
    # The outermost ring reaches six cell steps from the center along +x.
    grid = generate_grid(6, 942.0)
    assert grid.n_cells == 127
    max_abs_x = float(np.abs(grid.xs).max())
    assert max_abs_x == pytest.approx(6 * 942.0, rel=0.01)


def test_adjacent_cells_one_diameter_apart():
    grid = generate_grid(3)
    # Ring-1 cells are the center's immediate neighbors.
    ring1 = [c.id for c in grid.cells if c.ring == 1]
    assert len(ring1) == 6
    for c in ring1:
        assert grid.distance(0, c) == pytest.approx(grid.cell_diameter, rel=1e-12)


def test_distance_identity_and_symmetry():
    grid = generate_grid(2)
    for i in range(grid.n_cells):
        assert grid.distance(i, i) == 0.0
        for j in range(grid.n_cells):
            assert grid.distance(i, j) == grid.distance(j, i)


def test_opposite_ring3_corners_six_diameters():
    grid = generate_grid(3)
    # Corner cells of the outer ring sit exactly `rings` steps out; a corner
    # and its antipode are 2*rings = 6 diameters apart.
    ring3 = [c for c in grid.cells if c.ring == 3]
    corner = max(ring3, key=lambda c: math.hypot(c.x, c.y))
    antipode = min(ring3, key=lambda c: math.hypot(c.x + corner.x, c.y + corner.y))
    assert grid.distance(corner.id, antipode.id) == pytest.approx(
        6 * grid.cell_diameter, rel=1e-12
    )


def test_triangle_inequality_exhaustive_37():
    grid = generate_grid(3)
    dm = grid.distance_matrix()
    n = grid.n_cells
    for i, j, k in itertools.combinations(range(n), 3):
        assert dm[i, j] <= dm[i, k] + dm[k, j] + 1e-9


def test_distance_matrix_matches_pairwise_calls():
    grid = generate_grid(2)
    dm = grid.distance_matrix()
    for i in range(grid.n_cells):
        for j in range(grid.n_cells):
            assert dm[i, j] == pytest.approx(grid.distance(i, j), abs=1e-12)


def test_distance_matrix_fresh_per_instance():
    # Interleaved grids of different sizes must each see their own matrix.
    grids = [generate_grid(r) for r in (3, 4, 5, 3)]
    for grid in grids:
        assert grid.distance_matrix().shape == (grid.n_cells, grid.n_cells)
    del grids
    a = generate_grid(3)
    b = generate_grid(5)
    assert a.distance_matrix().shape == (37, 37)
    assert b.distance_matrix().shape == (91, 91)


def test_span_is_max_pairwise_distance():
    grid = generate_grid(3)
    assert grid.span() == pytest.approx(float(grid.distance_matrix().max()), rel=0)


def test_sorted_by_x_matches_sort_oracle():
    grid = generate_grid(4)
    oracle = sorted(range(grid.n_cells), key=lambda c: (grid.xs[c], c))
    assert list(grid.sorted_by_x) == oracle


def test_sorted_by_x_is_permutation_and_nondecreasing():
    for rings in (1, 3, 6):
        grid = generate_grid(rings)
        order = list(grid.sorted_by_x)
        assert sorted(order) == list(range(grid.n_cells))
        xs = [grid.xs[c] for c in order]
        assert all(a <= b for a, b in zip(xs, xs[1:]))


def test_to_json_round_trip():
    grid = generate_grid(2, 100.0)
    data = json.loads(grid.to_json())
    assert data["cell_diameter"] == 100.0
    assert len(data["cells"]) == 19
    assert data["cells"][0] == {"id": 0, "x": 0.0, "y": 0.0, "ring": 0}


def test_generate_grid_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_grid(0)
    with pytest.raises(ValueError):
        generate_grid(3, cell_diameter=0.0)


def test_distance_rejects_bad_ids():
    grid = generate_grid(1)
    with pytest.raises(ValueError):
        grid.distance(0, 7)
    with pytest.raises(ValueError):
        grid.distance(-1, 0)


def test_grid_from_points_validation():
    with pytest.raises(ValueError):
        grid_from_points([], [], 1.0)
    with pytest.raises(ValueError):
        grid_from_points([0.0, 1.0], [0.0], 1.0)
    with pytest.raises(ValueError):
        grid_from_points([0.0], [0.0], 0.0)


def test_grid_from_points_coordinates_preserved():
    grid = grid_from_points([3.0, 1.0, 2.0], [0.0, 1.0, -1.0], 1.0)
    assert isinstance(grid, CellGrid)
    assert list(grid.xs) == [3.0, 1.0, 2.0]
    assert list(grid.sorted_by_x) == [1, 2, 0]


@given(
    st.lists(
        st.tuples(
            st.floats(-1e4, 1e4, allow_nan=False),
            st.floats(-1e4, 1e4, allow_nan=False),
        ),
        min_size=1,
        max_size=40,
    )
)
def test_distances_match_hypot_on_arbitrary_layouts(points):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    grid = grid_from_points(xs, ys, cell_diameter=1.0)
    rng = np.random.default_rng(0)
    for _ in range(10):
        i, j = rng.integers(0, len(points), size=2)
        expect = math.hypot(xs[i] - xs[j], ys[i] - ys[j])
        assert grid.distance(int(i), int(j)) == pytest.approx(expect, abs=1e-9)


def test_default_cell_diameter_from_beam_footprint():
    # 2 * H * tan(theta_3dB / 2) for a 1.5-degree beam at 36000 km.
    footprint = 2 * 36_000.0 * math.tan(math.radians(0.75))
    assert DEFAULT_CELL_DIAMETER_KM == pytest.approx(footprint, rel=0.01)
