"""Level-set curvature weights, the directional Poincaré inequality sides,
lateral boundary terms, and the logarithmic cutoff family.

The central object is the bulk weight

    bracket = sum_j <B grad u_xj, grad u_xj> - <B grad |grad_x u|, grad |grad_x u|>

whose sign and size control the cross-sectional oscillation of u.  On the
set where |grad_x u| falls below a threshold the bracket is zero: the
speed is constant a.e. on its zero set, so its gradient carries no mass
there, and the x-derivative fields vanish with it on any zero set of
positive measure — the discrete stand-in for the measure-theoretic
argument used in the continuum proof.  All derivatives here are pointwise
second-order stencils (the public gradient operator), not the weak-form
pairing variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import forms
from .coefficients import CoefficientModel
from .cylinder import CylinderField, CylinderGrid

DEFAULT_THRESHOLD_FACTOR = 1e-8


class NotApplicableError(ValueError):
    """Raised when an operation needs a rectangle cross-section (n = 2)."""


@dataclass(frozen=True)
class LevelSetGeometry:
    """Curvature data of the level curves of u on one y-slice (n = 2)."""

    K: np.ndarray
    tangential_gradient_of_speed: np.ndarray
    K0: np.ndarray
    Ksharp: np.ndarray
    mask: np.ndarray

    def to_json_dict(self) -> dict:
        m = self.mask
        def stats(arr):
            vals = arr[m]
            if vals.size == 0:
                return {"min": None, "max": None}
            return {"min": float(vals.min()), "max": float(vals.max())}
        return {
            "masked_nodes": int(np.count_nonzero(m)),
            "K": stats(self.K),
            "K0": stats(self.K0),
            "Ksharp": stats(self.Ksharp),
        }


@dataclass(frozen=True)
class PoincareSides:
    """Both sides of the directional Poincaré inequality.

    lhs_bulk + lhs_lateral <= rhs is the inequality satisfied by stable
    solutions; the operation only reports the numbers.
    """

    lhs_bulk: float
    lhs_lateral: float
    rhs: float

    def to_json_dict(self) -> dict:
        return {"lhs_bulk": float(self.lhs_bulk),
                "lhs_lateral": float(self.lhs_lateral),
                "rhs": float(self.rhs),
                "slack": float(self.rhs - self.lhs_bulk - self.lhs_lateral)}


def _full_gradient(grid: CylinderGrid, values: np.ndarray) -> list[np.ndarray]:
    return forms.gradient_fields(grid, values, pairing=False)


def _safe_divide(num: np.ndarray, den: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=mask)
    return out


def level_set_weights(u: CylinderField, y_index: int,
                      threshold: float) -> LevelSetGeometry:
    """Curvature quantities of the level curves of u on slice y_index.

    Requires a rectangle cross-section; with an interval the level sets of
    the slice are points and carry no curvature.
    """
    grid = u.grid
    if not grid.domain.is_rectangle:
        raise NotApplicableError(
            "level-set curvature needs a rectangle cross-section")
    if not threshold > 0.0:
        raise ValueError("threshold must be positive")
    ny = grid.ny
    if not -ny <= y_index < ny:
        raise ValueError("y_index out of range")

    comps = _full_gradient(grid, u.values)          # [ux, uz, uy]
    ux, uz, uy = comps
    speed = np.sqrt(ux * ux + uz * uz)
    mask3 = speed > threshold

    # Unit normal of the level curves.  The division floor is machine-scale,
    # not the reporting threshold: zeroing the normal below the threshold
    # would plant an artificial unit-to-zero jump just outside the mask, and
    # the divergence stencils of masked-in nodes would read O(1/h) garbage
    # from it.  The threshold only selects which nodes are reported.
    floor = 1e-14 * max(float(speed.max()), 1e-300)
    div_ok = speed > floor
    nx_ = _safe_divide(ux, speed, div_ok)
    nz_ = _safe_divide(uz, speed, div_ok)
    div_n = (_full_gradient(grid, nx_)[0] + _full_gradient(grid, nz_)[1])
    K3 = np.abs(div_n)

    grad_speed = _full_gradient(grid, speed)        # [sx, sz, sy]
    sx, sz, sy = grad_speed
    tangential3 = np.abs(-nz_ * sx + nx_ * sz)

    grad_ux = _full_gradient(grid, ux)
    grad_uz = _full_gradient(grid, uz)
    uxy, uzy = grad_ux[2], grad_uz[2]
    K0_3 = (uxy * uxy + uzy * uzy) - sy * sy + K3 * K3 * speed * speed \
        + tangential3 * tangential3

    dot_ux = sum(c * d for c, d in zip(comps, grad_ux))
    dot_uz = sum(c * d for c, d in zip(comps, grad_uz))
    dot_s = sum(c * d for c, d in zip(comps, grad_speed))
    Ksharp3 = dot_ux * dot_ux + dot_uz * dot_uz - dot_s * dot_s

    sl = (slice(None), slice(None), y_index)
    return LevelSetGeometry(
        K=K3[sl], tangential_gradient_of_speed=tangential3[sl],
        K0=K0_3[sl], Ksharp=Ksharp3[sl], mask=mask3[sl])


def _speed_and_threshold(grid, comps, threshold):
    x_comps = comps[:-1]
    speed = np.sqrt(sum(c * c for c in x_comps))
    if threshold is None:
        threshold = DEFAULT_THRESHOLD_FACTOR * max(float(speed.max()), 1e-300)
    return speed, threshold


def bulk_bracket(u: CylinderField, model: CoefficientModel,
                 threshold: float | None = None) -> np.ndarray:
    """Pointwise bracket sum_j <B grad u_xj, grad u_xj>
    - <B grad |grad_x u|, grad |grad_x u|>, restricted to the mask.

    Off the mask (speed at or below the threshold) the whole bracket is
    zero: the speed is constant a.e. on its zero set, so its gradient
    carries no mass there, and on any interior zero set the x-derivative
    fields vanish along with it.  Keeping only the first sum at isolated
    speed zeros (kink columns of |grad_x u|) would break the designed
    cancellation between the two terms by O(h) times the local stiffness
    scale, which is exactly the discretization artifact the masked form
    avoids.
    """
    grid = u.grid
    comps = _full_gradient(grid, u.values)
    speed, threshold = _speed_and_threshold(grid, comps, threshold)
    mask = speed > threshold

    state = forms.coefficient_state(u, model)
    a_red = state["a_red"]
    tdep = model.has_t_dependence

    def b_form(vec_comps):
        sq = sum(c * c for c in vec_comps)
        out = a_red * sq
        if tdep:
            dot = sum(g * c for g, c in zip(state["comps"], vec_comps))
            out = out + (state["a_t_red"] / state["norm_reg"]) * dot * dot
        return out

    total = np.zeros(grid.shape)
    for c in comps[:-1]:
        total += b_form(_full_gradient(grid, c))
    total -= b_form(_full_gradient(grid, speed))
    return np.where(mask, total, 0.0)


def lateral_boundary_term(u: CylinderField, model: CoefficientModel,
                          psi_sq: np.ndarray) -> float:
    """Quadrature of a(y,|grad u|) * (grad u . d_nu grad u) * psi^2 over the
    lateral boundary, with the normal derivative taken by the one-sided
    stencil rows of the gradient operator.

    For the flat boundary pieces of intervals and rectangles the exact
    value is zero whenever u satisfies the lateral Neumann condition; the
    returned number is the raw evaluation used for cross-validation, and
    for convex cross-sections it is nonpositive up to quadrature error.
    """
    grid = u.grid
    comps = _full_gradient(grid, u.values)
    state = forms.coefficient_state(u, model)
    a_red = state["a_red"]  # the y**theta factor lives in the y-quadrature
    theta = state["theta"]

    raw = np.zeros(grid.shape)
    # x-direction faces: nu = -e_x at the first slice, +e_x at the last
    dcomps_dx = [_full_gradient(grid, c)[0] for c in comps]
    face_val = sum(c * d for c, d in zip(comps, dcomps_dx))
    raw[0, ...] += -face_val[0, ...]
    raw[-1, ...] += face_val[-1, ...]
    if grid.domain.is_rectangle:
        dcomps_dz = [_full_gradient(grid, c)[1] for c in comps]
        face_val_z = sum(c * d for c, d in zip(comps, dcomps_dz))
        raw[:, 0, :] += -face_val_z[:, 0, :]
        raw[:, -1, :] += face_val_z[:, -1, :]

    integrand = a_red * raw * psi_sq
    wy = grid.y_weights(theta)
    if grid.domain.is_rectangle:
        wx = grid.axis_weights(0)
        wz = grid.axis_weights(1)
        total = 0.0
        total += float(np.sum(wz[:, None] * wy[None, :] * integrand[0, :, :]))
        total += float(np.sum(wz[:, None] * wy[None, :] * integrand[-1, :, :]))
        total += float(np.sum(wx[:, None] * wy[None, :] * integrand[:, 0, :]))
        total += float(np.sum(wx[:, None] * wy[None, :] * integrand[:, -1, :]))
        return total
    total = float(np.sum(wy * integrand[0, :]))
    total += float(np.sum(wy * integrand[-1, :]))
    return total


def poincare_sides(u: CylinderField, model: CoefficientModel, reaction,
                   psi: CylinderField,
                   threshold: float | None = None) -> PoincareSides:
    """Evaluate both sides of the directional Poincaré inequality at u, psi.

    The reaction argument is part of the reporting interface (it identifies
    the problem the solution came from) but the inequality itself involves
    only the coefficient model and u.  No stability assertion is made here:
    for unstable u the inequality may genuinely fail.
    """
    grid = u.grid
    comps = _full_gradient(grid, u.values)
    speed, threshold = _speed_and_threshold(grid, comps, threshold)

    state = forms.coefficient_state(u, model)
    w_theta = grid.bulk_weights(state["theta"])

    bracket = bulk_bracket(u, model, threshold=threshold)
    lhs_bulk = float(np.sum(w_theta * bracket * psi.values ** 2))

    lhs_lateral = -lateral_boundary_term(u, model, psi.values ** 2)

    psi_comps = _full_gradient(grid, psi.values)
    b_psi = state["a_red"] * sum(c * c for c in psi_comps)
    if model.has_t_dependence:
        dot = sum(g * c for g, c in zip(state["comps"], psi_comps))
        b_psi = b_psi + (state["a_t_red"] / state["norm_reg"]) * dot * dot
    rhs = float(np.sum(w_theta * b_psi * speed * speed))
    return PoincareSides(lhs_bulk=lhs_bulk, lhs_lateral=lhs_lateral, rhs=rhs)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic ramp: 0 at 0, 1 at 1, first and second derivatives zero at
    both ends; maximum slope 15/8, well under the slope bound 10."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def tau_ramp(z: float, R: float) -> float:
    """C^2 plateau function: 0 below sqrt(R), 1 on [sqrt(R)+1, R-1],
    0 above R, with unit-width quintic ramps."""
    lo = np.sqrt(R)
    if z <= lo or z >= R:
        return 0.0
    if z < lo + 1.0:
        return float(_smoothstep(np.array(z - lo)))
    if z > R - 1.0:
        return float(_smoothstep(np.array(R - z)))
    return 1.0


def log_cutoff(R: float, grid: CylinderGrid) -> CylinderField:
    """The logarithmic cutoff psi_R(y) = int_y^R tau_R(z)/z dz on the grid.

    tau_R ramps from 0 to 1 across [sqrt(R), sqrt(R)+1] and back down
    across [R-1, R]; psi_R is constant (about log(sqrt R)) below sqrt(R)
    and vanishes for y >= R.
    """
    if not R > 100.0:
        raise ValueError("need R > 100")
    if not np.sqrt(R) + 1.0 < R - 1.0:
        raise ValueError("R too small for unit-width ramps")
    y = grid.y_nodes
    profile = np.zeros_like(y)
    corners = (np.sqrt(R), np.sqrt(R) + 1.0, R - 1.0, R)
    # integrate from the top down so each node extends the previous segment
    prev_y, acc = float(R), 0.0
    for j in range(y.size - 1, -1, -1):
        yj = float(y[j])
        if yj >= R:
            continue
        lo = max(yj, 1e-300)
        # hand the quadrature the ramp corners inside the segment: on a
        # segment much wider than the unit ramps, adaptive subdivision
        # alone can integrate straight past them
        pts = [c for c in corners if lo < c < prev_y]
        seg, _ = quad(lambda z: tau_ramp(z, R) / z, lo, prev_y, limit=200,
                      points=pts or None)
        acc += seg
        profile[j] = acc
        prev_y = lo
    vals = np.broadcast_to(profile, grid.shape).copy()
    return CylinderField(grid, vals)
