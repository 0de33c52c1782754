"""Tensor grids on truncated half-cylinders Omega x (0, Y_max).

Omega is an interval or an axis-aligned rectangle.  The y-direction may be
graded toward the bottom edge,

    y_j = Y_max * (j / (ny - 1)) ** (1 + grading),

which concentrates nodes where the power weight y**theta is singular.  Nodal
values are stored as shaped arrays (nx, ny) or (nx, nz, ny); raveling in C
order yields the lexicographic (x[, z], y) node order used for flat vectors,
CSV rows and sparse operators.

Derivatives are second-order finite differences (centered at interior nodes,
one-sided at boundary nodes, both on nonuniform spacings).  Quadrature is the
tensor trapezoid rule; integrals weighted by a singular power y**theta use
exact moments of the weight against the piecewise-linear hat functions, so
the first cell is integrated analytically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp


class Region(Enum):
    BULK = "bulk"
    BOTTOM = "bottom"
    LATERAL = "lateral"


@dataclass(frozen=True)
class DomainSpec:
    """Cross-section Omega: interval (x_min, x_max) or rectangle
    (x_min, x_max) x (z_min, z_max)."""

    x_min: float
    x_max: float
    z_min: float | None = None
    z_max: float | None = None

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("need x_max > x_min")
        if (self.z_min is None) != (self.z_max is None):
            raise ValueError("rectangle needs both z bounds")
        if self.z_min is not None and not self.z_max > self.z_min:
            raise ValueError("need z_max > z_min")

    @classmethod
    def interval(cls, x_min: float, x_max: float) -> "DomainSpec":
        return cls(x_min, x_max)

    @classmethod
    def rectangle(cls, x_min, x_max, z_min, z_max) -> "DomainSpec":
        return cls(x_min, x_max, z_min, z_max)

    @property
    def is_rectangle(self) -> bool:
        return self.z_min is not None

    @property
    def ndim(self) -> int:
        """Cross-section dimension n (the cylinder lives in n+1)."""
        return 2 if self.is_rectangle else 1


def _graded_nodes(y_max: float, ny: int, grading: float) -> np.ndarray:
    s = np.arange(ny, dtype=float) / (ny - 1)
    y = y_max * s ** (1.0 + grading)
    y[0] = 0.0
    y[-1] = y_max
    return y


def _diff_matrix_1d(x: np.ndarray) -> sp.csr_matrix:
    """Second-order first-derivative matrix on a nonuniform 1D grid."""
    n = x.size
    rows, cols, vals = [], [], []
    # one-sided at the left end
    h1, h2 = x[1] - x[0], x[2] - x[1]
    rows += [0, 0, 0]
    cols += [0, 1, 2]
    vals += [-(2 * h1 + h2) / (h1 * (h1 + h2)),
             (h1 + h2) / (h1 * h2),
             -h1 / (h2 * (h1 + h2))]
    # centered in the interior
    for i in range(1, n - 1):
        hd = x[i] - x[i - 1]
        hs = x[i + 1] - x[i]
        den = hs * hd * (hd + hs)
        rows += [i, i, i]
        cols += [i - 1, i, i + 1]
        vals += [-hs * hs / den, (hs * hs - hd * hd) / den, hd * hd / den]
    # one-sided at the right end
    hn, hm = x[-1] - x[-2], x[-2] - x[-3]
    rows += [n - 1, n - 1, n - 1]
    cols += [n - 1, n - 2, n - 3]
    vals += [(2 * hn + hm) / (hn * (hn + hm)),
             -(hn + hm) / (hn * hm),
             hn / (hm * (hn + hm))]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _pairing_diff_matrix_1d(x: np.ndarray) -> sp.csr_matrix:
    """First-derivative matrix used inside bilinear pairings.

    Interior rows are the same second-order centered stencils as
    ``_diff_matrix_1d``; the two boundary rows are the two-point one-sided
    differences.  With trapezoid weights this pair satisfies the exact
    summation-by-parts identity W·D + Dᵀ·W = diag(-1, 0, ..., 0, +1) on
    uniform grids, which is what makes nodal (hat-tested) weak residuals
    second-order accurate next to flux-carrying boundaries.  A three-point
    one-sided closure cannot satisfy that identity with any diagonal weight,
    so it is kept only in the pointwise ``gradient`` operator.
    """
    d = _diff_matrix_1d(x).tolil()
    n = x.size
    d.rows[0], d.data[0] = [0, 1], [-1.0 / (x[1] - x[0]), 1.0 / (x[1] - x[0])]
    d.rows[n - 1], d.data[n - 1] = (
        [n - 2, n - 1],
        [-1.0 / (x[-1] - x[-2]), 1.0 / (x[-1] - x[-2])],
    )
    return d.tocsr()


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    d = np.diff(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def weighted_y_weights(y: np.ndarray, theta: float) -> np.ndarray:
    """Quadrature weights for integrals of y**theta * G(y).

    Uses exact moments of the weight against piecewise-linear hats on every
    cell, so the (possibly singular) first cell [0, y_1] is integrated
    analytically.  Reduces to the trapezoid rule at theta = 0.
    """
    if theta == 0.0:
        return _trapezoid_weights(y)
    w = np.zeros_like(y)
    a, b = y[:-1], y[1:]
    h = b - a
    m0 = (b ** (theta + 1.0) - a ** (theta + 1.0)) / (theta + 1.0)
    m1 = (b ** (theta + 2.0) - a ** (theta + 2.0)) / (theta + 2.0)
    w[:-1] += (b * m0 - m1) / h
    w[1:] += (m1 - a * m0) / h
    return w


@dataclass(eq=False)
class CylinderGrid:
    """Tensor grid with cached derivative operators and weight vectors."""

    domain: DomainSpec
    nx: int
    ny: int
    y_max: float
    grading: float = 0.0
    nz: int | None = None
    x_nodes: np.ndarray = field(init=False, repr=False)
    z_nodes: np.ndarray | None = field(init=False, repr=False)
    y_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("need at least three nodes per direction")
        if not self.y_max > 0.0:
            raise ValueError("need y_max > 0")
        if self.grading < 0.0:
            raise ValueError("grading must be >= 0")
        if self.domain.is_rectangle:
            if self.nz is None:
                self.nz = self.nx
            if self.nz < 3:
                raise ValueError("need at least three nodes per direction")
        else:
            self.nz = None
        self.x_nodes = np.linspace(self.domain.x_min, self.domain.x_max, self.nx)
        self.z_nodes = (np.linspace(self.domain.z_min, self.domain.z_max, self.nz)
                        if self.domain.is_rectangle else None)
        self.y_nodes = _graded_nodes(self.y_max, self.ny, self.grading)
        self._cache = {}

    # -- shape bookkeeping --------------------------------------------------

    @property
    def shape(self) -> tuple:
        if self.domain.is_rectangle:
            return (self.nx, self.nz, self.ny)
        return (self.nx, self.ny)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_components(self) -> int:
        """Number of gradient components (x[, z], y)."""
        return 3 if self.domain.is_rectangle else 2

    def coordinate_arrays(self) -> list[np.ndarray]:
        """Shaped coordinate fields in component order (x[, z], y)."""
        if self.domain.is_rectangle:
            X, Z, Y = np.meshgrid(self.x_nodes, self.z_nodes, self.y_nodes,
                                  indexing="ij")
            return [X, Z, Y]
        X, Y = np.meshgrid(self.x_nodes, self.y_nodes, indexing="ij")
        return [X, Y]

    def top_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[..., -1] = True
        return m

    def bottom_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[..., 0] = True
        return m

    # -- cached operators ---------------------------------------------------

    def diff_1d(self, axis: int) -> sp.csr_matrix:
        key = ("diff1d", axis)
        if key not in self._cache:
            coords = [self.x_nodes, self.y_nodes]
            if self.domain.is_rectangle:
                coords = [self.x_nodes, self.z_nodes, self.y_nodes]
            self._cache[key] = _diff_matrix_1d(coords[axis])
        return self._cache[key]

    def pairing_diff_1d(self, axis: int) -> sp.csr_matrix:
        key = ("pdiff1d", axis)
        if key not in self._cache:
            coords = [self.x_nodes, self.y_nodes]
            if self.domain.is_rectangle:
                coords = [self.x_nodes, self.z_nodes, self.y_nodes]
            self._cache[key] = _pairing_diff_matrix_1d(coords[axis])
        return self._cache[key]

    def _tensor_gradient(self, diff) -> list[sp.csr_matrix]:
        if self.domain.is_rectangle:
            Ix = sp.identity(self.nx, format="csr")
            Iz = sp.identity(self.nz, format="csr")
            Iy = sp.identity(self.ny, format="csr")
            Gx = sp.kron(diff(0), sp.kron(Iz, Iy), format="csr")
            Gz = sp.kron(Ix, sp.kron(diff(1), Iy), format="csr")
            Gy = sp.kron(sp.kron(Ix, Iz), diff(2), format="csr")
            return [Gx, Gz, Gy]
        Ix = sp.identity(self.nx, format="csr")
        Iy = sp.identity(self.ny, format="csr")
        Gx = sp.kron(diff(0), Iy, format="csr")
        Gy = sp.kron(Ix, diff(1), format="csr")
        return [Gx, Gy]

    def gradient_operators(self) -> list[sp.csr_matrix]:
        """Sparse flat-vector operators, one per component (x[, z], y)."""
        key = "grad_ops"
        if key not in self._cache:
            self._cache[key] = self._tensor_gradient(self.diff_1d)
        return self._cache[key]

    def pairing_gradient_operators(self) -> list[sp.csr_matrix]:
        """Gradient operators for bilinear pairings (see _pairing_diff_matrix_1d)."""
        key = "pgrad_ops"
        if key not in self._cache:
            self._cache[key] = self._tensor_gradient(self.pairing_diff_1d)
        return self._cache[key]

    def axis_weights(self, axis: int) -> np.ndarray:
        key = ("w1d", axis)
        if key not in self._cache:
            coords = [self.x_nodes, self.y_nodes]
            if self.domain.is_rectangle:
                coords = [self.x_nodes, self.z_nodes, self.y_nodes]
            self._cache[key] = _trapezoid_weights(coords[axis])
        return self._cache[key]

    def y_weights(self, theta: float = 0.0) -> np.ndarray:
        key = ("wy", float(theta))
        if key not in self._cache:
            self._cache[key] = weighted_y_weights(self.y_nodes, float(theta))
        return self._cache[key]

    def bulk_weights(self, theta: float = 0.0) -> np.ndarray:
        """Shaped tensor weights for bulk integrals of y**theta * G."""
        key = ("wbulk", float(theta))
        if key not in self._cache:
            wy = self.y_weights(theta)
            if self.domain.is_rectangle:
                w = (self.axis_weights(0)[:, None, None]
                     * self.axis_weights(1)[None, :, None]
                     * wy[None, None, :])
            else:
                w = self.axis_weights(0)[:, None] * wy[None, :]
            self._cache[key] = w
        return self._cache[key]

    def bottom_weights(self) -> np.ndarray:
        """Shaped weights over the bottom slice Omega x {0}."""
        key = "wbottom"
        if key not in self._cache:
            if self.domain.is_rectangle:
                w = self.axis_weights(0)[:, None] * self.axis_weights(1)[None, :]
            else:
                w = self.axis_weights(0).copy()
            self._cache[key] = w
        return self._cache[key]

    # -- field constructors -------------------------------------------------

    def field(self, fn) -> "CylinderField":
        """Sample fn over the grid; fn takes (x, y) or (x, z, y) arrays."""
        coords = self.coordinate_arrays()
        return CylinderField(self, np.asarray(fn(*coords), dtype=float))

    def zeros(self) -> "CylinderField":
        return CylinderField(self, np.zeros(self.shape))


def build_grid(domain: DomainSpec, nx: int, ny: int, y_max: float,
               grading: float = 0.0, nz: int | None = None) -> CylinderGrid:
    return CylinderGrid(domain=domain, nx=nx, ny=ny, y_max=y_max,
                        grading=grading, nz=nz)


@dataclass(eq=False)
class CylinderField:
    """Nodal scalar field on a CylinderGrid."""

    grid: CylinderGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid "
                f"shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def ravel(self) -> np.ndarray:
        """Flat copy in lexicographic (x[, z], y) order."""
        return self.values.ravel()

    def copy(self) -> "CylinderField":
        return CylinderField(self.grid, self.values.copy())


def gradient(u: CylinderField) -> list[np.ndarray]:
    """All first-derivative components of u, shaped like u.values.

    Component order is (x[, z], y); interior stencils are centered, boundary
    stencils one-sided, all second order on the (possibly graded) spacings.
    """
    g = u.grid
    flat = u.values.ravel()
    return [(G @ flat).reshape(g.shape) for G in g.gradient_operators()]


def gradient_of_array(grid: CylinderGrid, values: np.ndarray) -> list[np.ndarray]:
    flat = np.asarray(values, dtype=float).ravel()
    return [(G @ flat).reshape(grid.shape) for G in grid.gradient_operators()]


def trace_bottom(u: CylinderField) -> np.ndarray:
    """Values on the bottom slice, shaped (nx,) or (nx, nz)."""
    return u.values[..., 0].copy()


def integrate(values, region: Region, grid: CylinderGrid) -> float:
    """Trapezoid quadrature over a region of the truncated cylinder.

    BULK expects the full grid shape, BOTTOM the Omega-slice shape.  LATERAL
    expects (2, ny) on an interval (sides x_min, x_max) or a 4-tuple of edge
    arrays on a rectangle, ordered (x_min, x_max, z_min, z_max), each shaped
    (n_edge, ny).
    """
    if region is Region.BULK:
        v = np.asarray(values, dtype=float)
        if v.shape != grid.shape:
            raise ValueError("bulk values must match the grid shape")
        return float(np.sum(grid.bulk_weights(0.0) * v))
    if region is Region.BOTTOM:
        v = np.asarray(values, dtype=float)
        want = (grid.nx, grid.nz) if grid.domain.is_rectangle else (grid.nx,)
        if v.shape != want:
            raise ValueError("bottom values must match the Omega slice shape")
        return float(np.sum(grid.bottom_weights() * v))
    if region is Region.LATERAL:
        wy = grid.axis_weights(grid.n_components - 1)
        if grid.domain.is_rectangle:
            if len(values) != 4:
                raise ValueError("rectangle lateral values: 4 edge arrays "
                                 "(x_min, x_max, z_min, z_max)")
            edge_w = [grid.axis_weights(1), grid.axis_weights(1),
                      grid.axis_weights(0), grid.axis_weights(0)]
            total = 0.0
            for v, we in zip(values, edge_w):
                v = np.asarray(v, dtype=float)
                if v.shape != (we.size, wy.size):
                    raise ValueError("edge array has wrong shape")
                total += float(np.sum(we[:, None] * wy[None, :] * v))
            return total
        v = np.asarray(values, dtype=float)
        if v.shape != (2, grid.ny):
            raise ValueError("interval lateral values must be shaped (2, ny)")
        return float(np.sum(v * wy[None, :]))
    raise ValueError(f"unknown region {region!r}")


def field_to_csv(u: CylinderField, path) -> None:
    """One row per node, coordinates then value, lexicographic order."""
    g = u.grid
    coords = [c.ravel() for c in g.coordinate_arrays()]
    header = ["x", "z", "y"] if g.domain.is_rectangle else ["x", "y"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header + ["value"])
        flat = u.values.ravel()
        for i in range(flat.size):
            writer.writerow([repr(float(c[i])) for c in coords]
                            + [repr(float(flat[i]))])
