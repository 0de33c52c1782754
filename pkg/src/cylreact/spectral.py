"""Neumann cosine eigenbasis, the spectral fractional Neumann Laplacian,
the semilinear nonlocal solve, and the harmonic extension to the cylinder.

The basis diagonalizes the Neumann Laplacian on an interval or rectangle,
so the fractional operator acts coefficient-wise as multiplication by
lambda_k**s (the zero mode is annihilated).  The s = 1/2 solve couples to
the cylinder machinery through the harmonic extension

    u(x, y) = sum_k v_k phi_k(x) exp(-sqrt(lambda_k) y),

whose bottom trace is v and whose weak cylinder residual with a == 1,
g == 0 and bottom reaction f is the equivalence check between the two
formulations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solver
from .coefficients import CoefficientModel
from .cylinder import CylinderField, CylinderGrid, DomainSpec, _trapezoid_weights

DEFAULT_S = 0.5


class SpectralSolveError(RuntimeError):
    """Newton failure in the semilinear spectral solve."""

    def __init__(self, message: str, residual_history: list[float]):
        super().__init__(message)
        self.residual_history = residual_history


def _mode_values_interval(domain: DomainSpec, k: int,
                          x: np.ndarray) -> np.ndarray:
    L = domain.x_max - domain.x_min
    if k == 0:
        return np.full_like(x, 1.0 / np.sqrt(L))
    return np.sqrt(2.0 / L) * np.cos(k * np.pi * (x - domain.x_min) / L)


@dataclass(frozen=True)
class SpectralBasis:
    """Neumann eigenbasis samples on a uniform cross-section grid."""

    domain: DomainSpec
    K: int
    lambdas: np.ndarray
    modes: list[tuple]           # per-basis-function cosine indices
    x_nodes: np.ndarray
    z_nodes: np.ndarray | None
    eigenfields: np.ndarray      # (K, nx) or (K, nx, nz)
    weights: np.ndarray          # quadrature weights matching eigenfields

    @property
    def resolution(self) -> int:
        return self.x_nodes.size

    def inner(self, values: np.ndarray, k: int) -> float:
        """Omega-quadrature inner product <values, phi_k>."""
        return float(np.sum(self.weights * values * self.eigenfields[k]))

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal samples of sum_k coeffs[k] phi_k on the basis grid."""
        return np.tensordot(coeffs, self.eigenfields, axes=1)

    def mode_at(self, k: int, x: np.ndarray,
                z: np.ndarray | None = None) -> np.ndarray:
        """Evaluate phi_k analytically at arbitrary points."""
        if self.domain.is_rectangle:
            i, j = self.modes[k]
            zdom = DomainSpec.interval(self.domain.z_min, self.domain.z_max)
            return (_mode_values_interval(self.domain, i, x)
                    * _mode_values_interval(zdom, j, z))
        (i,) = self.modes[k]
        return _mode_values_interval(self.domain, i, x)


def neumann_basis(domain: DomainSpec, K: int,
                  resolution: int | None = None) -> SpectralBasis:
    """First K Neumann eigenpairs of -Laplace on the cross-section.

    Interval (0,L): lambda_k = (k pi/L)^2 with cosine eigenfunctions;
    rectangle: tensor cosines sorted by eigenvalue, ties broken
    lexicographically in the mode indices.  The sampling resolution
    defaults to 2*max_mode_index+1 per axis (at least 33), which keeps the
    trapezoid Gram matrix of the retained cosines exact to roundoff.
    """
    if K < 1:
        raise ValueError("need K >= 1")
    if domain.is_rectangle:
        Lx = domain.x_max - domain.x_min
        Lz = domain.z_max - domain.z_min
        pairs = []
        for i in range(K):
            for j in range(K):
                lam = (i * np.pi / Lx) ** 2 + (j * np.pi / Lz) ** 2
                pairs.append((lam, (i, j)))
        pairs.sort(key=lambda t: (t[0], t[1]))
        pairs = pairs[:K]
        lambdas = np.array([p[0] for p in pairs])
        modes = [p[1] for p in pairs]
        max_idx = max(max(i, j) for i, j in modes)
        n = resolution if resolution is not None else max(33, 2 * max_idx + 1)
        x = np.linspace(domain.x_min, domain.x_max, n)
        z = np.linspace(domain.z_min, domain.z_max, n)
        zdom = DomainSpec.interval(domain.z_min, domain.z_max)
        fields = np.stack([
            _mode_values_interval(domain, i, x)[:, None]
            * _mode_values_interval(zdom, j, z)[None, :]
            for i, j in modes])
        w = _trapezoid_weights(x)[:, None] * _trapezoid_weights(z)[None, :]
        return SpectralBasis(domain=domain, K=K, lambdas=lambdas, modes=modes,
                             x_nodes=x, z_nodes=z, eigenfields=fields,
                             weights=w)
    L = domain.x_max - domain.x_min
    lambdas = np.array([(k * np.pi / L) ** 2 for k in range(K)])
    modes = [(k,) for k in range(K)]
    n = resolution if resolution is not None else max(33, 2 * (K - 1) + 1)
    x = np.linspace(domain.x_min, domain.x_max, n)
    fields = np.stack([_mode_values_interval(domain, k, x) for k in range(K)])
    return SpectralBasis(domain=domain, K=K, lambdas=lambdas, modes=modes,
                         x_nodes=x, z_nodes=None, eigenfields=fields,
                         weights=_trapezoid_weights(x))


@dataclass(frozen=True)
class SpectralFunction:
    basis: SpectralBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.basis.K,):
            raise ValueError("coefficient count must equal basis size")
        object.__setattr__(self, "coeffs", c)

    def values(self) -> np.ndarray:
        return self.basis.synthesize(self.coeffs)

    def seminorm_h_half(self) -> float:
        return float(np.sum(np.sqrt(self.basis.lambdas) * self.coeffs ** 2))

    def to_json_dict(self) -> dict:
        d = self.basis.domain
        dom = {"kind": "rectangle" if d.is_rectangle else "interval",
               "x_min": d.x_min, "x_max": d.x_max}
        if d.is_rectangle:
            dom.update({"z_min": d.z_min, "z_max": d.z_max})
        return {"domain": dom, "K": self.basis.K,
                "resolution": self.basis.resolution,
                "coeffs": [float(c) for c in self.coeffs]}

    @staticmethod
    def from_json_dict(data: dict) -> "SpectralFunction":
        dom = data["domain"]
        if dom["kind"] == "rectangle":
            d = DomainSpec.rectangle(dom["x_min"], dom["x_max"],
                                     dom["z_min"], dom["z_max"])
        else:
            d = DomainSpec.interval(dom["x_min"], dom["x_max"])
        basis = neumann_basis(d, int(data["K"]),
                              resolution=int(data["resolution"]))
        return SpectralFunction(basis, np.array(data["coeffs"], dtype=float))


def apply_fractional(basis: SpectralBasis, s: float,
                     w: SpectralFunction) -> SpectralFunction:
    """Coefficient-wise lambda_k**s; the zero mode maps to zero."""
    if w.basis is not basis and w.basis.K != basis.K:
        raise ValueError("spectral function must use the given basis")
    if not 0.0 < s <= 1.0:
        raise ValueError("need s in (0, 1]")
    factors = np.where(basis.lambdas > 0.0, basis.lambdas ** s, 0.0)
    return SpectralFunction(basis, factors * w.coeffs)


def solve_semilinear(basis: SpectralBasis, reaction, init: SpectralFunction,
                     tol: float = 1e-10, max_iter: int = 60,
                     s: float = DEFAULT_S) -> SpectralFunction:
    """Damped Galerkin-Newton for lambda^s v_k = <f(v), phi_k>.

    The residual is r_k = lambda_k**s v_k - <f(v), phi_k> with the inner
    product by cross-section quadrature; convergence means
    max|r_k| <= tol.  Failure raises SpectralSolveError carrying the
    residual history.
    """
    lam_s = np.where(basis.lambdas > 0.0, basis.lambdas ** s, 0.0)
    fields = basis.eigenfields
    w = basis.weights
    flatfields = fields.reshape(basis.K, -1)
    wflat = w.ravel()

    def project(vals_flat: np.ndarray) -> np.ndarray:
        return flatfields @ (wflat * vals_flat)

    def residual(c: np.ndarray) -> np.ndarray:
        vals = basis.synthesize(c).ravel()
        return lam_s * c - project(reaction.f(vals))

    c = init.coeffs.copy()
    r = residual(c)
    history = [float(np.max(np.abs(r)))]
    for _ in range(max_iter):
        if history[-1] <= tol:
            return SpectralFunction(basis, c)
        vals = basis.synthesize(c).ravel()
        fp = reaction.f_prime(vals)
        J = np.diag(lam_s) - (flatfields * (wflat * fp)) @ flatfields.T
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            # The annihilated zero mode can zero out a Jacobian row (for
            # instance with f == 0).  A consistent singular system still
            # admits the minimum-norm Newton step; an inconsistent one
            # stalls the line search below and surfaces as a solve error.
            delta = np.linalg.lstsq(J, -r, rcond=None)[0]
        base = float(r @ r)
        slope_ok = False
        step = 1.0
        while step >= solver.MIN_STEP:
            r_try = residual(c + step * delta)
            if float(r_try @ r_try) <= (1.0 - solver.ARMIJO_SLOPE * step) * base:
                slope_ok = True
                break
            step *= solver.ARMIJO_FACTOR
        if not slope_ok:
            raise SpectralSolveError("Armijo line search stalled", history)
        c = c + step * delta
        r = r_try
        history.append(float(np.max(np.abs(r))))
    if history[-1] <= tol:
        return SpectralFunction(basis, c)
    raise SpectralSolveError(
        f"no convergence in {max_iter} iterations "
        f"(best residual {min(history):.3e})", history)


def extend_harmonic(basis: SpectralBasis, v: SpectralFunction,
                    grid: CylinderGrid) -> CylinderField:
    """u(x,y) = sum_k v_k phi_k(x) exp(-sqrt(lambda_k) y) on the grid."""
    d, gd = basis.domain, grid.domain
    same = (d.is_rectangle == gd.is_rectangle
            and abs(d.x_min - gd.x_min) < 1e-12
            and abs(d.x_max - gd.x_max) < 1e-12)
    if d.is_rectangle and same:
        same = (abs(d.z_min - gd.z_min) < 1e-12
                and abs(d.z_max - gd.z_max) < 1e-12)
    if not same:
        raise ValueError("grid cross-section must match the basis domain")
    y = grid.y_nodes
    vals = np.zeros(grid.shape)
    for k in range(basis.K):
        decay = np.exp(-np.sqrt(basis.lambdas[k]) * y)
        if d.is_rectangle:
            phi = basis.mode_at(k, grid.x_nodes[:, None],
                                grid.z_nodes[None, :])
            vals += v.coeffs[k] * phi[:, :, None] * decay[None, None, :]
        else:
            phi = basis.mode_at(k, grid.x_nodes)
            vals += v.coeffs[k] * phi[:, None] * decay[None, :]
    return CylinderField(grid, vals)


def eig_growth_check(basis: SpectralBasis, beta: float):
    """(K_beta, (C1, C2)): eigenvalue growth index and sup-norm fit.

    K_beta is the smallest index from which lambda_k > k**beta holds for
    every computed k; (C1, C2) is the least-squares power-law fit
    sup|phi_k| ~ C1 * lambda_k**C2 over the nonzero modes.
    """
    n = basis.domain.ndim
    if not 0.0 < beta < 2.0 / n:
        raise ValueError(f"beta must lie in (0, {2.0 / n})")
    if basis.K < 50:
        raise ValueError("need a basis of size >= 50")
    k_idx = np.arange(basis.K, dtype=float)
    # Non-strict comparison: the index-1 interval mode sits exactly on the
    # k**beta curve for beta = 1.5 and is counted as satisfying the bound.
    # The annihilated zero mode is outside the scan, so K_beta >= 1.
    holds = basis.lambdas >= k_idx ** beta
    K_beta = basis.K
    for k0 in range(basis.K, 0, -1):
        if k0 == basis.K or holds[k0]:
            K_beta = k0
        else:
            break
    sup = np.max(np.abs(basis.eigenfields.reshape(basis.K, -1)), axis=1)
    lam = basis.lambdas[1:]
    slope, intercept = np.polyfit(np.log(lam), np.log(sup[1:]), 1)
    return int(K_beta), (float(np.exp(intercept)), float(slope))


def extension_equivalence(basis: SpectralBasis, reaction, grid: CylinderGrid,
                          tol: float = 1e-10,
                          init: SpectralFunction | None = None,
                          n_test_modes: int = 6) -> float:
    """Max cylinder weak residual of the harmonically extended s=1/2 solve.

    Solves the fractional problem spectrally, extends to the cylinder, and
    tests the extension in the cylinder weak form (a == 1, g == 0, bottom
    reaction f) against tensor test fields phi_k(x) * p(y) with
    top-vanishing y-profiles.
    """
    if init is None:
        init = SpectralFunction(basis, np.zeros(basis.K))
    v = solve_semilinear(basis, reaction, init, tol=tol)
    u = extend_harmonic(basis, v, grid)
    model_one = CoefficientModel.constant_one()
    y = grid.y_nodes
    ymax = grid.y_max
    profiles = [(1.0 - y / ymax) ** 2,
                np.cos(np.pi * y / (2.0 * ymax)),
                (1.0 - y / ymax)]
    worst = 0.0
    for k in range(min(n_test_modes, basis.K)):
        if grid.domain.is_rectangle:
            phi_x = basis.mode_at(k, grid.x_nodes[:, None],
                                  grid.z_nodes[None, :])
        else:
            phi_x = basis.mode_at(k, grid.x_nodes)
        for p in profiles:
            p = p.copy()
            p[-1] = 0.0
            vals = (phi_x[..., None] * p) if grid.domain.is_rectangle \
                else (phi_x[:, None] * p[None, :])
            res = solver.residual_weak(u, model_one, reaction,
                                       CylinderField(grid, vals))
            worst = max(worst, abs(res))
    return worst
