"""Second-variation (stability) analysis of cylinder solutions.

The quadratic form

    I(phi) = int <B(y, grad u) grad phi, grad phi>
           + int g_u(y, u) phi^2  -  int_bottom f'(u) phi^2

is assembled over the discrete test space of nodal fields vanishing at the
top slice, together with the weighted mass

    M(phi) = int a(y, |grad u|) phi^2  +  int_bottom phi^2.

The sign of the smallest generalized eigenvalue mu_1 of (I, M) classifies
the solution.  Because discrete eigenvalues carry O(h^2) error, values
within a margin ``tol`` of zero are reported as Marginal rather than
signed; the default margin is 1e-6 times the infinity norm of the energy
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms
from .coefficients import CoefficientModel, check_structural
from .cylinder import CylinderField, CylinderGrid

STABLE = "Stable"
UNSTABLE = "Unstable"
MARGINAL = "Marginal"

STRICTLY_POSITIVE = "StrictlyPositive"
STRICTLY_NEGATIVE = "StrictlyNegative"
IDENTICALLY_ZERO = "IdenticallyZero"
MIXED = "Mixed"

# Above this free-space dimension the dense generalized eigensolve is
# replaced by shift-invert Lanczos; both routes exist and are compared on
# small grids in the test suite.
DENSE_LIMIT = 2000

EIGEN_RESIDUAL_RTOL = 1e-8


class EigenSolveError(RuntimeError):
    """Eigensolver failed to meet the residual requirement."""

    def __init__(self, message: str, achieved_residual: float):
        super().__init__(message)
        self.achieved_residual = achieved_residual


@dataclass(frozen=True)
class StabilityForm:
    """Energy/mass pair restricted to the free (test-space) nodes."""

    energy_matrix: sp.csr_matrix
    mass_matrix: sp.csr_matrix
    grid: CylinderGrid
    free: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name, m in (("energy", self.energy_matrix),
                        ("mass", self.mass_matrix)):
            asym = abs(m - m.T).max()
            scale = max(abs(m).max(), 1e-300)
            if asym > 1e-14 * scale:
                raise ValueError(f"{name} matrix asymmetric beyond 1e-14")
        if np.any(self.mass_matrix.diagonal() <= 0.0):
            raise ValueError("mass matrix must be positive definite")

    @property
    def dim(self) -> int:
        return self.energy_matrix.shape[0]

    def embed(self, phi_free: np.ndarray) -> CylinderField:
        """Zero-extend a free-space vector to a full grid field."""
        full = np.zeros(self.grid.n_nodes)
        full[self.free] = phi_free
        return CylinderField(self.grid, full.reshape(self.grid.shape))

    def rayleigh(self, phi_free: np.ndarray) -> float:
        num = float(phi_free @ (self.energy_matrix @ phi_free))
        den = float(phi_free @ (self.mass_matrix @ phi_free))
        return num / den


@dataclass(frozen=True)
class StabilityReport:
    mu1: float
    ground_state: CylinderField
    classification: str
    tol: float
    eigen_residual: float

    def to_json_dict(self) -> dict:
        g = self.ground_state.grid
        return {
            "mu1": float(self.mu1),
            "classification": self.classification,
            "tol": float(self.tol),
            "grid": {"nx": g.nx, "nz": g.nz, "ny": g.ny,
                     "y_max": g.y_max, "grading": g.grading},
            "eigen_residual": float(self.eigen_residual),
        }


def _structural_gate(u: CylinderField, model: CoefficientModel) -> None:
    """Check the structural conditions on the (y, |grad u|) range of u."""
    y = u.grid.y_nodes[u.grid.y_nodes > 0.0]
    comps = forms.gradient_fields(u.grid, u.values, pairing=True)
    norms = forms.regularized_norm(comps, regularize=False).ravel()
    t = np.quantile(norms, [0.0, 0.25, 0.5, 0.75, 1.0])
    t = np.unique(np.concatenate([t, [0.0]]))
    report = check_structural(model, y_samples=y, t_samples=t)
    if not report.ellipticity_ok:
        raise ValueError(
            "coefficient model fails ellipticity on the solution's "
            f"(y, |grad u|) range; witness {report.witness}")


def assemble_I(u: CylinderField, model: CoefficientModel, reaction,
               vanish_above: float | None = None) -> StabilityForm:
    """Assemble the stability form at state u on the free test space.

    The test space is all nodes strictly below the top slice; passing
    ``vanish_above`` shrinks it further to nodes with y < vanish_above
    (nested spaces give monotone ground-state eigenvalues).
    """
    _structural_gate(u, model)
    A_full = forms.assemble_energy_matrix(u, model, reaction)
    M_full = forms.mass_matrix(u, model)
    free = forms.free_indices(u.grid, vanish_above=vanish_above)
    A = A_full[free][:, free].tocsr()
    A = ((A + A.T) * 0.5).tocsr()
    M = M_full[free][:, free].tocsr()
    return StabilityForm(energy_matrix=A, mass_matrix=M, grid=u.grid,
                         free=free)


def _eigen_residual_ok(A, M, mu, vec) -> tuple[bool, float]:
    res = float(np.linalg.norm(A @ vec - mu * (M @ vec)))
    scale = float(spla.norm(A, np.inf)) * float(np.linalg.norm(vec))
    return res <= EIGEN_RESIDUAL_RTOL * max(scale, 1e-300), res


def _solve_pairs(form: StabilityForm, k: int, method: str | None = None):
    """(values, fields, residuals) for the k smallest eigenpairs.

    method None picks dense below DENSE_LIMIT free nodes and shift-invert
    above; "dense"/"shift-invert" force a route (used to cross-check them).
    """
    if k < 1 or k >= form.dim:
        raise ValueError("need 1 <= k < dimension of the form")
    A, M = form.energy_matrix, form.mass_matrix
    if method is None:
        method = "dense" if form.dim <= DENSE_LIMIT else "shift-invert"
    if method == "dense":
        vals, vecs = scipy.linalg.eigh(A.toarray(), M.toarray())
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        d = M.diagonal()
        s = 1.0 / np.sqrt(d)
        C = sp.diags(s) @ A @ sp.diags(s)
        C = ((C + C.T) * 0.5).tocsc()
        # Gershgorin lower bound puts the shift strictly below the spectrum.
        absC = abs(C)
        row_rest = np.asarray(absC.sum(axis=1)).ravel() - np.abs(C.diagonal())
        sigma = float(np.min(C.diagonal() - row_rest)) - 1.0
        vals, w = spla.eigsh(C, k=k, sigma=sigma)
        order = np.argsort(vals)
        vals, w = vals[order], w[:, order]
        vecs = s[:, None] * w
    out_vals, out_fields, out_res = [], [], []
    for i in range(k):
        mu, vec = float(vals[i]), vecs[:, i]
        norm_m = float(np.sqrt(vec @ (M @ vec)))
        vec = vec / norm_m
        ok, res = _eigen_residual_ok(A, M, mu, vec)
        if not ok:
            raise EigenSolveError(
                f"eigenpair {i} residual {res:.3e} exceeds tolerance", res)
        out_vals.append(mu)
        out_fields.append(form.embed(vec))
        out_res.append(res)
    return out_vals, out_fields, out_res


def min_rayleigh(form: StabilityForm, k: int = 1,
                 method: str | None = None):
    """k smallest eigenpairs of energy*phi = mu * mass * phi, ascending.

    Mass-normalized eigenfields; dense generalized eigensolve up to
    DENSE_LIMIT free nodes, shift-invert Lanczos on the symmetrically
    scaled problem above it.  Each pair must satisfy
    ||A phi - mu M phi|| <= 1e-8 * ||A||_inf * ||phi||.
    """
    vals, fields, _ = _solve_pairs(form, k, method=method)
    return list(zip(vals, fields))


def default_tol(form: StabilityForm) -> float:
    """Stability margin: 1e-6 times the energy matrix's infinity norm."""
    return 1e-6 * float(spla.norm(form.energy_matrix, np.inf))


def classify_value(mu1: float, tol: float) -> str:
    if mu1 > tol:
        return STABLE
    if mu1 < -tol:
        return UNSTABLE
    return MARGINAL


def classify(u: CylinderField, model: CoefficientModel, reaction,
             tol: float | None = None) -> StabilityReport:
    """Assemble I at u, compute the ground state, apply the margin rule."""
    form = assemble_I(u, model, reaction)
    if tol is None:
        tol = default_tol(form)
    elif not tol > 0.0:
        raise ValueError("tol must be positive")
    vals, fields, residuals = _solve_pairs(form, k=1)
    mu1, ground = vals[0], fields[0]
    return StabilityReport(mu1=mu1, ground_state=ground,
                           classification=classify_value(mu1, tol),
                           tol=tol, eigen_residual=residuals[0])


def sign_trichotomy(ground_state: CylinderField, tol: float = 1e-6) -> str:
    """Nodal sign pattern of an eigenfield over its support slice.

    Nodes on the top slice are excluded (they are constrained to zero, not
    part of the test space).  Mixed indicates genuinely both signs beyond
    the threshold, which for a ground state only arises from discretization
    error.
    """
    vals = ground_state.values[..., :-1].ravel()
    if np.all(np.abs(vals) <= tol):
        return IDENTICALLY_ZERO
    has_pos = np.any(vals > tol)
    has_neg = np.any(vals < -tol)
    if has_pos and has_neg:
        return MIXED
    return STRICTLY_POSITIVE if has_pos else STRICTLY_NEGATIVE


def form_J(u: CylinderField, model: CoefficientModel,
           phi: CylinderField) -> float:
    """J(phi) = -int (a_t/|grad u|) (grad u . grad phi)^2 (regularized).

    For models with a_t <= 0 this is nonnegative; together with the
    positive part it decomposes the B-form:
    int <B grad phi, grad phi> + J(phi) = int a |grad phi|^2.
    """
    grid = u.grid
    state = forms.coefficient_state(u, model)
    if not model.has_t_dependence:
        return 0.0
    phi_comps = forms.gradient_fields(grid, phi.values, pairing=True)
    dot = sum(gc * pc for gc, pc in zip(state["comps"], phi_comps))
    w_theta = grid.bulk_weights(state["theta"])
    integrand = (state["a_t_red"] / state["norm_reg"]) * dot * dot
    return -float(np.sum(w_theta * integrand))


def convexity_gap(u_bottom: np.ndarray, reaction, c: float) -> float:
    """min over bottom nodes of (f(u)+f'(u)(c-u))(c-u) - f(c)(c-u).

    Requires the reaction's convexity flag to be declared; for convex f
    with u >= c the tangent-line bound makes every term nonnegative.
    """
    if reaction.convexity is None:
        raise ValueError("reaction must declare convex or concave")
    u = np.asarray(u_bottom, dtype=float)
    d = c - u
    gap = (reaction.f(u) + reaction.f_prime(u) * d) * d - reaction.f(c) * d
    return float(np.min(gap))
