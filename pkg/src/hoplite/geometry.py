"""Hexagonal ground-cell grids in a planar projection.

The satellite footprint is modelled as a flat hex lattice centered on the
sub-satellite point. Only planar coordinates matter downstream: Euclidean
distances feed the interference model and the x-sorted cell order feeds the
sliding-window interference scan, so no geodesic machinery is used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

# Footprint of a 1.5 deg 3-dB beam seen from 36000 km: 2*H*tan(theta/2).
DEFAULT_CELL_DIAMETER_KM = 942.0

# Axial-coordinate steps around a hex ring, counter-clockwise.
_RING_STEPS = [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)]


def centered_hex_number(rings: int) -> int:
    """Cell count of a hex grid with the given ring count: 1 + 3r(r+1)."""
    return 1 + 3 * rings * (rings + 1)


@dataclass(frozen=True)
class Cell:
    id: int
    x: float
    y: float
    ring: int


@dataclass(frozen=True)
class CellGrid:
    """Immutable cell layout plus the reusable x-sorted cell order.

    ``sorted_by_x`` is ordered by ascending x with ties broken by cell id,
    so downstream consumers see a total order.
    """

    cells: tuple[Cell, ...]
    cell_diameter: float
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    sorted_by_x: np.ndarray = field(repr=False)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def distance(self, i: int, j: int) -> float:
        """Euclidean planar distance (km) between cell centers i and j."""
        self._check_id(i)
        self._check_id(j)
        return math.hypot(self.xs[i] - self.xs[j], self.ys[i] - self.ys[j])

    def distance_matrix(self) -> np.ndarray:
        """All-pairs distance matrix, computed once per grid instance."""
        cached = self.__dict__.get("_dist")
        if cached is None:
            dx = self.xs[:, None] - self.xs[None, :]
            dy = self.ys[:, None] - self.ys[None, :]
            cached = np.hypot(dx, dy)
            object.__setattr__(self, "_dist", cached)
        return cached

    def span(self) -> float:
        """Largest pairwise cell distance (km); the grid's diameter."""
        return float(self.distance_matrix().max())

    def _check_id(self, i) -> None:
        if not 0 <= int(i) < self.n_cells:
            raise ValueError(f"cell id {i} out of range 0..{self.n_cells - 1}")

    def to_json(self) -> str:
        records = [
            {"id": c.id, "x": c.x, "y": c.y, "ring": c.ring} for c in self.cells
        ]
        return json.dumps(
            {"cell_diameter": self.cell_diameter, "cells": records}, indent=2
        )


def _axial_to_xy(q: int, r: int, diameter: float) -> tuple[float, float]:
    # Adjacent centers end up exactly one diameter apart.
    return diameter * (q + r / 2.0), diameter * (math.sqrt(3.0) / 2.0) * r


def generate_grid(rings: int, cell_diameter: float = DEFAULT_CELL_DIAMETER_KM) -> CellGrid:
    """Build a hex grid of ``1 + 3*rings*(rings+1)`` cells centered at origin.

    Cells are numbered center-out, ring by ring, counter-clockwise from the
    positive x axis, so ids are dense and stable for a given ring count.
    """
    if rings < 1:
        raise ValueError("rings must be >= 1")
    if cell_diameter <= 0:
        raise ValueError("cell_diameter must be positive")

    coords: list[tuple[int, int, int]] = [(0, 0, 0)]  # (q, r, ring)
    for ring in range(1, rings + 1):
        q, r = ring, 0
        for dq, dr in _RING_STEPS:
            for _ in range(ring):
                coords.append((q, r, ring))
                q, r = q + dq, r + dr

    cells = []
    for idx, (q, r, ring) in enumerate(coords):
        x, y = _axial_to_xy(q, r, cell_diameter)
        cells.append(Cell(id=idx, x=x, y=y, ring=ring))
    return _finalize(cells, cell_diameter)


def grid_from_points(
    xs, ys, cell_diameter: float, rings=None
) -> CellGrid:
    """Build a grid from explicit planar coordinates (km).

    Used for irregular layouts (tests, partial footprints); ``generate_grid``
    is the hex-lattice constructor. Ring indices default to 0.
    """
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if len(xs) != len(ys) or not xs:
        raise ValueError("xs and ys must be equal-length and non-empty")
    if cell_diameter <= 0:
        raise ValueError("cell_diameter must be positive")
    if rings is None:
        rings = [0] * len(xs)
    cells = [
        Cell(id=i, x=xs[i], y=ys[i], ring=int(rings[i])) for i in range(len(xs))
    ]
    return _finalize(cells, cell_diameter)


def _finalize(cells: list[Cell], cell_diameter: float) -> CellGrid:
    xs = np.array([c.x for c in cells], dtype=float)
    ys = np.array([c.y for c in cells], dtype=float)
    order = np.lexsort((np.arange(len(cells)), xs))
    return CellGrid(
        cells=tuple(cells),
        cell_diameter=float(cell_diameter),
        xs=xs,
        ys=ys,
        sorted_by_x=order.astype(np.int64),
    )
