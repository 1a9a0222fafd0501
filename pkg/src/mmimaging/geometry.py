"""Planar antenna array geometry, subarray enumeration and steering vectors.

The panel lives in the y-z plane and looks along +x. Grid cell (row, col)
sits at y = (col - (cols-1)/2) * pitch and z = ((rows-1)/2 - row) * pitch,
so row 0 is the top of the panel and column index grows toward +y. A
direction is an (elevation, azimuth) pair (theta, phi); the corresponding
unit vector is

    u = (cos(theta) cos(phi), cos(theta) sin(phi), sin(theta)).

With the baseband convention used by :mod:`mmimaging.scene` (tap phase
``exp(-j 2 pi f_c tau)``), a plane wave arriving from direction u produces
the element response ``exp(+j k u . p)``; the steering vectors here use
that sign so that MUSIC peaks land on the physical source direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299792458.0

#: Grid cells absent from the stock 6x6 panel. The hardware has four
#: inactive positions; their exact cells are configurable (see the
#: ``missing`` key of the geometry file format in docs/formats.md).
DEFAULT_MISSING = frozenset({(0, 0), (0, 5), (5, 0), (5, 5)})


class GeometryError(ValueError):
    """Invalid geometry, direction or subarray request."""


@dataclass(frozen=True)
class Direction:
    """Elevation/azimuth pair in radians, each within [-pi/2, pi/2]."""

    theta: float
    phi: float

    def __post_init__(self):
        half_pi = np.pi / 2
        if not (-half_pi <= self.theta <= half_pi and -half_pi <= self.phi <= half_pi):
            raise GeometryError("direction out of range [-pi/2, pi/2]")

    def unit_vector(self) -> np.ndarray:
        ct = np.cos(self.theta)
        return np.array(
            [ct * np.cos(self.phi), ct * np.sin(self.phi), np.sin(self.theta)]
        )


@dataclass(frozen=True)
class ArrayGeometry:
    """Co-located Tx/Rx panel: grid size, element pitch and missing cells."""

    rows: int = 6
    cols: int = 6
    pitch: float = 0.003
    missing: frozenset = DEFAULT_MISSING
    carrier_freq: float = 60e9

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise GeometryError("grid must have at least one row and column")
        if self.pitch <= 0:
            raise GeometryError("pitch must be positive")
        if self.carrier_freq <= 0:
            raise GeometryError("carrier frequency must be positive")
        for (r, c) in self.missing:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise GeometryError(f"missing cell {(r, c)} outside grid")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def n_active(self) -> int:
        return self.rows * self.cols - len(self.missing)

    @property
    def active_cells(self) -> tuple:
        """Active grid cells in row-major order; index into this tuple is
        the element index used along the Tx/Rx axes of a CIR cube."""
        return tuple(
            (r, c)
            for r in range(self.rows)
            for c in range(self.cols)
            if (r, c) not in self.missing
        )

    def element_index(self, row: int, col: int) -> int:
        """Active-element index of a grid cell, or -1 if the cell is missing."""
        try:
            return self.active_cells.index((row, col))
        except ValueError:
            return -1

    def cell_position(self, row: int, col: int) -> np.ndarray:
        """Physical (x, y, z) of a grid cell, centered on the panel."""
        y = (col - (self.cols - 1) / 2.0) * self.pitch
        z = ((self.rows - 1) / 2.0 - row) * self.pitch
        return np.array([0.0, y, z])

    def element_positions(self) -> np.ndarray:
        """(n_active, 3) positions of the active elements, row-major."""
        return np.array([self.cell_position(r, c) for (r, c) in self.active_cells])


@dataclass(frozen=True)
class SubarraySpec:
    """A window of grid cells used as one MUSIC snapshot aperture.

    ``element_indices[i]`` is the active-element index of ``cells[i]``
    (-1 where the cell is missing); the window is *complete* when every
    cell carries an element.
    """

    anchor: tuple
    size: tuple
    cells: tuple
    element_indices: tuple

    @property
    def complete(self) -> bool:
        return all(i >= 0 for i in self.element_indices)

    @property
    def n_elements(self) -> int:
        return len(self.cells)


def subarray_at(geom: ArrayGeometry, row: int, col: int, size=(4, 4)) -> SubarraySpec:
    """Build the ``size`` window anchored at grid cell (row, col)."""
    nr, nc = size
    if row < 0 or col < 0 or row + nr > geom.rows or col + nc > geom.cols:
        raise GeometryError(f"subarray window {(row, col)}+{size} outside grid")
    cells = tuple((row + i, col + j) for i in range(nr) for j in range(nc))
    idx = tuple(geom.element_index(r, c) for (r, c) in cells)
    return SubarraySpec(anchor=(row, col), size=(nr, nc), cells=cells, element_indices=idx)


def enumerate_subarrays(geom: ArrayGeometry, size=(4, 4)) -> list:
    """All complete ``size`` windows of the grid, anchors in row-major order.

    Windows touching a missing cell are skipped rather than interpolated,
    so the result can be empty for pathological masks.
    """
    out = []
    for r0 in range(geom.rows - size[0] + 1):
        for c0 in range(geom.cols - size[1] + 1):
            sub = subarray_at(geom, r0, c0, size)
            if sub.complete:
                out.append(sub)
    return out


def full_array(geom: ArrayGeometry) -> SubarraySpec:
    """Spec covering every active element (no smoothing aperture)."""
    cells = geom.active_cells
    return SubarraySpec(
        anchor=(0, 0),
        size=(geom.rows, geom.cols),
        cells=cells,
        element_indices=tuple(range(len(cells))),
    )


def relative_positions(geom: ArrayGeometry, sub: SubarraySpec) -> np.ndarray:
    """(n, 2) [y, z] coordinates of the subarray cells relative to its anchor."""
    anchor = geom.cell_position(*sub.anchor)
    pos = np.array([geom.cell_position(r, c) for (r, c) in sub.cells])
    return (pos - anchor)[:, 1:3]


def steering_vector(geom: ArrayGeometry, sub: SubarraySpec, direction: Direction) -> np.ndarray:
    """Unit-modulus array response of a subarray for one direction.

    Element i carries phase ``exp(+j k (y_i cos(theta) sin(phi) + z_i
    sin(theta)))`` with (y_i, z_i) taken relative to the subarray anchor;
    this matches the response synthesized by the CIR model, so all
    congruent 4x4 windows share one steering manifold.
    """
    if not sub.complete:
        raise GeometryError("missing element in subarray")
    u = direction.unit_vector()
    rel = relative_positions(geom, sub)
    return np.exp(1j * geom.wavenumber * (rel @ u[1:3]))


def steering_matrix(
    geom: ArrayGeometry,
    sub: SubarraySpec,
    theta_grid: np.ndarray,
    phi_grid: np.ndarray,
) -> np.ndarray:
    """Steering vectors for a full (theta, phi) grid.

    Returns an (n_elements, len(theta_grid), len(phi_grid)) complex array;
    slice [:, i, j] equals ``steering_vector`` at (theta_grid[i], phi_grid[j]).
    """
    if not sub.complete:
        raise GeometryError("missing element in subarray")
    theta = np.asarray(theta_grid, dtype=float)
    phi = np.asarray(phi_grid, dtype=float)
    uy = np.cos(theta)[:, None] * np.sin(phi)[None, :]
    uz = np.broadcast_to(np.sin(theta)[:, None], uy.shape)
    rel = relative_positions(geom, sub)
    phase = rel[:, 0, None, None] * uy[None] + rel[:, 1, None, None] * uz[None]
    return np.exp(1j * geom.wavenumber * phase)


def parse_geometry(text: str) -> ArrayGeometry:
    """Parse the plain-text geometry format (see docs/formats.md)."""
    fields = {"rows": 6, "cols": 6, "pitch": 0.003, "carrier_freq": 60e9}
    missing = set()
    saw_missing = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key in ("rows", "cols"):
                fields[key] = int(rest[0])
            elif key in ("pitch", "carrier_freq"):
                fields[key] = float(rest[0])
            elif key == "missing":
                saw_missing = True
                for tok in rest:
                    r, c = tok.split(",")
                    missing.add((int(r), int(c)))
            else:
                raise GeometryError(f"line {lineno}: unknown key {key!r}")
        except GeometryError:
            raise
        except (ValueError, IndexError) as exc:
            raise GeometryError(f"line {lineno}: cannot parse {raw!r}") from exc
    if not saw_missing:
        missing = set(DEFAULT_MISSING)
    return ArrayGeometry(
        rows=fields["rows"],
        cols=fields["cols"],
        pitch=fields["pitch"],
        missing=frozenset(missing),
        carrier_freq=fields["carrier_freq"],
    )


def load_geometry(path) -> ArrayGeometry:
    return parse_geometry(Path(path).read_text())
