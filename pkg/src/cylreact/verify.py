"""Acceptance checks: one callable per criterion, shared by CLI and tests.

Each criterion returns a CheckRecord with a pass/fail/not-applicable
status, the headline measured value, the tolerance it was held to, the
anchor payload for the report, wall-clock, and a details dict whose
array-valued entries the reporting layer spills to CSV.

Checks are deterministic: every randomized piece draws from an
explicitly seeded generator.  A check fails if its measurement fails OR
it overruns its wall-clock budget.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import coefficients, fractional1d, geometry, presets, solver, spectral, stability
from .coefficients import CoefficientModel
from .cylinder import CylinderField, DomainSpec, build_grid
from .solver import ReactionSpec

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"


@dataclass
class CheckRecord:
    """Outcome of one acceptance criterion."""

    name: str
    status: str
    measured: float | None
    tolerance: str
    anchor: str
    wall_clock: float = 0.0
    budget_s: float = 0.0
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (np.floating, float)):
                return float(v)
            if isinstance(v, (np.integer, int)):
                return int(v)
            if isinstance(v, np.ndarray):
                return [clean(x) for x in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (bool, np.bool_)):
                return bool(v)
            return v
        return {
            "name": self.name,
            "status": self.status,
            "measured": clean(self.measured),
            "tolerance": self.tolerance,
            "anchor": self.anchor,
            "wall_clock": float(self.wall_clock),
            "budget_s": float(self.budget_s),
            "details": clean(self.details),
        }


def _finish(rec: CheckRecord, t0: float) -> CheckRecord:
    rec.wall_clock = time.perf_counter() - t0
    if rec.status == PASS and rec.budget_s and rec.wall_clock > rec.budget_s:
        rec.status = FAIL
        rec.details["budget_overrun"] = rec.wall_clock
    return rec


# -- criterion 1: flux-linearization spectrum --------------------------------

def criterion_1() -> CheckRecord:
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260822)
    worst = 0.0
    families = (
        lambda: CoefficientModel.power_weight(float(rng.uniform(-0.9, 0.9))),
        lambda: CoefficientModel.power_weight_p_laplace(
            float(rng.uniform(-0.9, 0.9)), float(rng.uniform(1.1, 4.0))),
        lambda: CoefficientModel.mean_curvature_weight(
            float(rng.uniform(-0.9, 0.9))),
        CoefficientModel.constant_one,
        CoefficientModel.exp_y,
    )
    for i in range(200):
        model = families[i % len(families)]()
        y = float(rng.uniform(0.1, 3.0))
        dim = 2 if i % 2 == 0 else 3  # full gradients over 1D/2D cross-sections
        eta = rng.uniform(-2.0, 2.0, size=dim)
        while np.linalg.norm(eta) < 1e-6:
            eta = rng.uniform(-2.0, 2.0, size=dim)
        B = coefficients.matrix_B(model, y, eta)
        numeric = np.sort(np.linalg.eigvalsh(B.entries))
        closed = np.sort(coefficients.eigvals_B_closed_form(model, y, eta)[0])
        rel = float(np.max(np.abs(numeric - closed) / np.abs(closed)))
        worst = max(worst, rel)
    status = PASS if worst <= 1e-12 else FAIL
    rec = CheckRecord(
        name="flux-linearization-spectrum", status=status, measured=worst,
        tolerance="relative error <= 1e-12 over 200 samples",
        anchor="Lemma B-POS", budget_s=1.0,
        details={"samples": 200, "worst_relative_error": worst})
    return _finish(rec, t0)


# -- criterion 2: catalog residual convergence -------------------------------

_C2_CASES = (
    ("decay-cos", DomainSpec.interval(0.0, 2.0 * np.pi), 2.0,
     CoefficientModel.constant_one, lambda: ReactionSpec.linear(1.0), False),
    ("grow-cos", DomainSpec.interval(0.0, 2.0 * np.pi), 1.0,
     CoefficientModel.constant_one, lambda: ReactionSpec.linear(-1.0), False),
    ("linear-y", DomainSpec.interval(0.0, np.pi), 8.0,
     CoefficientModel.constant_one, lambda: ReactionSpec.constant(-1.0), True),
    ("exp-decay", DomainSpec.interval(0.0, np.pi), 3.0,
     CoefficientModel.exp_y, lambda: ReactionSpec.constant(1.0), True),
    ("one-dim-family", DomainSpec.interval(0.0, np.pi), 2.0,
     CoefficientModel.constant_one, lambda: ReactionSpec.linear(1.0), True),
)


def _catalog_residual(name, domain, y_max, model, reaction, n):
    grid = build_grid(domain, nx=n, ny=n, y_max=y_max)
    u = solver.catalog_solution(name, grid, model=model, reaction=reaction,
                                c=1.0)
    r = solver.residual_vector(u, model, reaction, ("neumann",))
    mask = ~grid.top_mask().ravel()
    return float(np.max(np.abs(r[mask]))), float(np.max(np.abs(u.values)))


def criterion_2() -> CheckRecord:
    t0 = time.perf_counter()
    rows, ok = [], True
    worst_slope = np.inf
    for name, domain, y_max, model_f, reaction_f, allow_floor in _C2_CASES:
        model, reaction = model_f(), reaction_f()
        ns = (17, 33, 65)
        res, scale = zip(*(_catalog_residual(name, domain, y_max, model,
                                             reaction, n) for n in ns))
        hs = [(domain.x_max - domain.x_min) / (n - 1) for n in ns]
        floor = res[-1] <= 1e-12 * (1.0 + scale[-1])
        if floor:
            slope = None
            case_ok = True
        else:
            slope = float(np.polyfit(np.log(hs), np.log(res), 1)[0])
            case_ok = slope >= 1.9
            worst_slope = min(worst_slope, slope)
        ok = ok and case_ok
        rows.append({"case": name, "residuals": list(res),
                     "slope": slope, "floor": bool(floor), "ok": case_ok})
    if not allow_floor:  # pragma: no cover - table sanity
        pass
    measured = None if worst_slope is np.inf else worst_slope
    rec = CheckRecord(
        name="catalog-residual-convergence", status=PASS if ok else FAIL,
        measured=measured,
        tolerance="order >= 1.9 over nx=ny in {17,33,65}, or floor <= "
                  "1e-12*(1+max|u|)",
        anchor="§1.4 and Eq. O76:98", budget_s=30.0,
        details={"cases": rows})
    return _finish(rec, t0)


# -- criterion 3: stability labels -------------------------------------------

def _classify_preset(preset, nx=65, ny=65):
    grid = preset.build_grid(nx=nx, ny=ny)
    u = preset.exact_state(grid)
    report = stability.classify(u, preset.model(), preset.reaction())
    return report


def criterion_3() -> CheckRecord:
    t0 = time.perf_counter()
    rows, ok = [], True
    mu_unstable = None
    for preset in presets.stability_quartet():
        report = _classify_preset(preset)
        expected = preset.expected_classification
        row_ok = report.classification == expected
        if preset.name == "decay-cos-unstable":
            mu_unstable = report.mu1
            row_ok = row_ok and report.mu1 < -1e-3
        ok = ok and row_ok
        rows.append({"preset": preset.name, "mu1": report.mu1,
                     "classification": report.classification,
                     "expected": expected, "ok": row_ok})
    rec = CheckRecord(
        name="stability-labels", status=PASS if ok else FAIL,
        measured=mu_unstable,
        tolerance="labels match; unstable mu1 < -1e-3 at nx=ny=65, y_max=8",
        anchor="§1.4", budget_s=60.0,
        details={"cases": rows})
    return _finish(rec, t0)


# -- criterion 4: directional Poincare inequality ----------------------------

def _psi_battery(grid):
    X = grid.coordinate_arrays()[0]
    Y = grid.coordinate_arrays()[-1]
    L = grid.domain.x_max - grid.domain.x_min
    w = 2.0 * np.pi / L
    ym = grid.y_max
    fields = [
        geometry.log_cutoff(1e4, grid),
        CylinderField(grid, np.cos(np.pi * Y / (2 * ym))),
        CylinderField(grid, np.cos(w * (X - grid.domain.x_min))
                      * np.cos(np.pi * Y / (2 * ym))),
        CylinderField(grid, np.cos(2 * w * (X - grid.domain.x_min))
                      * np.cos(np.pi * Y / ym)),
    ]
    labels = ["log-cutoff", "cos-y", "cos-x-cos-y", "cos-2x-cos-y"]
    return list(zip(labels, fields))


def _poincare_slacks(preset, n):
    grid = preset.build_grid(nx=n, ny=n)
    u = preset.exact_state(grid)
    model, reaction = preset.model(), preset.reaction()
    out = []
    for label, psi in _psi_battery(grid):
        sides = geometry.poincare_sides(u, model, reaction, psi)
        out.append((label, sides.lhs_bulk + sides.lhs_lateral, sides.rhs))
    return out


def criterion_4() -> CheckRecord:
    t0 = time.perf_counter()
    stable = [p for p in presets.stability_quartet()
              if p.expected_classification == "Stable"]
    # refinement-estimated constant from the coarse pair
    excess = 0.0
    for preset in stable:
        for n in (17, 33):
            h = (preset.domain.x_max - preset.domain.x_min) / (n - 1)
            for label, lhs, rhs in _poincare_slacks(preset, n):
                excess = max(excess, (lhs - rhs) / h ** 2)
    C = max(1.0, 2.0 * excess)
    rows, ok = [], True
    worst_margin = -np.inf
    for preset in stable:
        n = 65
        h = (preset.domain.x_max - preset.domain.x_min) / (n - 1)
        for label, lhs, rhs in _poincare_slacks(preset, n):
            margin = lhs - rhs - C * h * h
            worst_margin = max(worst_margin, margin)
            row_ok = margin <= 0.0
            ok = ok and row_ok
            rows.append({"preset": preset.name, "psi": label, "lhs": lhs,
                         "rhs": rhs, "margin": margin, "ok": row_ok})
    # informational witness scan on the unstable case
    witness = []
    unstable = presets.get_preset("decay-cos-unstable")
    n = 65
    h = (unstable.domain.x_max - unstable.domain.x_min) / (n - 1)
    for label, lhs, rhs in _poincare_slacks(unstable, n):
        if lhs > rhs + 10.0 * C * h * h:
            witness.append(label)
    rec = CheckRecord(
        name="poincare-inequality", status=PASS if ok else FAIL,
        measured=worst_margin,
        tolerance=f"lhs_bulk + lhs_lateral <= rhs + C h^2 with C = {C:g}",
        anchor="Theorem TH:POI", budget_s=60.0,
        details={"cases": rows, "C": C,
                 "unstable_witness": witness or ["absent"]})
    return _finish(rec, t0)


# -- criterion 5: level-set weight decomposition -----------------------------

_C5_MASK_FRACTION = 0.3


def _decomposition_misfit(n, ny):
    dom = DomainSpec.rectangle(0.0, np.pi, 0.0, np.pi)
    model = CoefficientModel.constant_one()
    grid = build_grid(dom, nx=n, ny=ny, y_max=1.0, nz=n)
    X, Z, Y = grid.coordinate_arrays()
    u = CylinderField(grid, np.exp(-Y) * np.cos(X) * np.cos(Z))
    comps = geometry._full_gradient(grid, u.values)
    speed = np.sqrt(sum(c * c for c in comps[:-1]))
    thr = _C5_MASK_FRACTION * float(speed.max())
    bracket = geometry.bulk_bracket(u, model, threshold=thr)
    worst, min_combo = 0.0, np.inf
    for j in range(grid.ny):
        g = geometry.level_set_weights(u, j, thr)
        m = g.mask
        if not m.any():
            continue
        combo = g.K0  # unit coefficient: a = 1, a_t = 0
        worst = max(worst, float(np.max(np.abs(bracket[:, :, j][m] - combo[m]))))
        min_combo = min(min_combo, float(combo[m].min()))
    return worst, min_combo


def criterion_5() -> CheckRecord:
    t0 = time.perf_counter()
    coarse = []
    for n, ny in ((17, 9), (25, 13)):
        h = np.pi / (n - 1)
        w, _ = _decomposition_misfit(n, ny)
        coarse.append(w / h)
    C = 2.0 * max(coarse)
    n, ny = 33, 17
    h = np.pi / (n - 1)
    misfit, min_combo = _decomposition_misfit(n, ny)
    ok = misfit <= C * h and min_combo >= -1e-8
    rec = CheckRecord(
        name="weight-decomposition", status=PASS if ok else FAIL,
        measured=misfit,
        tolerance=f"masked |bracket - (a K0 + (a_t/s) Ksharp)| <= C h with "
                  f"C = {C:.3g}; nonnegativity >= -1e-8",
        anchor="Eq. OIhh", budget_s=30.0,
        details={"C": C, "misfit_at_33": misfit, "C_times_h": C * h,
                 "min_combination": min_combo,
                 "mask_fraction": _C5_MASK_FRACTION})
    return _finish(rec, t0)


# -- criterion 6: nonlocal constancy -----------------------------------------

def _constancy_runs(domain, K, reaction, n_runs, seed):
    basis = spectral.neumann_basis(domain, K)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_runs):
        init = spectral.SpectralFunction(
            basis, rng.normal(0.0, 0.5, size=basis.K))
        sol = spectral.solve_semilinear(basis, reaction, init)
        worst = max(worst, float(np.sum(sol.coeffs[1:] ** 2)))
    return worst


def criterion_6() -> CheckRecord:
    t0 = time.perf_counter()
    cubic = ReactionSpec.custom(
        f=lambda v: -np.asarray(v) ** 3,
        f_prime=lambda v: -3.0 * np.asarray(v) ** 2)
    cubic_linear = ReactionSpec.custom(
        f=lambda v: -np.asarray(v) - np.asarray(v) ** 3,
        f_prime=lambda v: -1.0 - 3.0 * np.asarray(v) ** 2)
    cases = [
        ("interval-cubic", DomainSpec.interval(0.0, np.pi), 12, cubic),
        ("interval-cubic-linear", DomainSpec.interval(0.0, np.pi), 12,
         cubic_linear),
        ("rectangle-cubic", DomainSpec.rectangle(0.0, np.pi, 0.0, np.pi), 16,
         cubic),
        ("rectangle-cubic-linear",
         DomainSpec.rectangle(0.0, np.pi, 0.0, np.pi), 16, cubic_linear),
    ]
    rows, worst = [], 0.0
    for i, (label, domain, K, reaction) in enumerate(cases):
        w = _constancy_runs(domain, K, reaction, n_runs=20, seed=777 + i)
        worst = max(worst, w)
        rows.append({"case": label, "max_nonconstant_energy": w})
    status = PASS if worst <= 1e-12 else FAIL
    rec = CheckRecord(
        name="nonlocal-constancy", status=status, measured=worst,
        tolerance="sum_{k>=1} v_k^2 <= 1e-12 in every run (20 seeds/case)",
        anchor="Theorem thm: s-Neumann 1 and 2", budget_s=60.0,
        details={"cases": rows})
    return _finish(rec, t0)


# -- criterion 7: extension equivalence --------------------------------------

def criterion_7() -> CheckRecord:
    t0 = time.perf_counter()
    domain = DomainSpec.interval(0.0, np.pi)
    basis = spectral.neumann_basis(domain, K=32)
    grid = build_grid(domain, nx=129, ny=129, y_max=19.0)
    cubic = ReactionSpec.custom(
        f=lambda v: -np.asarray(v) ** 3,
        f_prime=lambda v: -3.0 * np.asarray(v) ** 2)
    rng = np.random.default_rng(4242)
    init = spectral.SpectralFunction(
        basis, 1e-3 * rng.normal(size=basis.K))
    disc = spectral.extension_equivalence(basis, cubic, grid, init=init)
    status = PASS if disc <= 1e-6 else FAIL
    rec = CheckRecord(
        name="extension-equivalence", status=status, measured=disc,
        tolerance="weak-residual discrepancy <= 1e-6 at nx=129, K=32, "
                  "y_max=19 (e^{-sqrt(lambda_1) Y} < 1e-8)",
        anchor="Eq. s-Neumann", budget_s=30.0,
        details={"discrepancy": disc})
    return _finish(rec, t0)


# -- criterion 8: eigenvalue growth ------------------------------------------

def criterion_8() -> CheckRecord:
    t0 = time.perf_counter()
    rect = spectral.neumann_basis(
        DomainSpec.rectangle(0.0, np.pi, 0.0, np.pi), K=500)
    K_beta, _ = spectral.eig_growth_check(rect, beta=0.9)
    interval = spectral.neumann_basis(DomainSpec.interval(0.0, np.pi), K=64)
    _, (C1, C2) = spectral.eig_growth_check(interval, beta=1.5)
    ok = K_beta <= 50 and abs(C2) <= 0.05
    rec = CheckRecord(
        name="eigenvalue-growth", status=PASS if ok else FAIL,
        measured=float(K_beta),
        tolerance="rectangle K_beta <= 50 at K=500, beta=0.9; interval "
                  "sup-norm slope |C2| <= 0.05",
        anchor="Eq. l k and Eq. PHIk", budget_s=10.0,
        details={"rectangle_K_beta": int(K_beta),
                 "interval_C1": float(C1), "interval_C2": float(C2)})
    return _finish(rec, t0)


# -- criterion 9: spectral vs integral operators -----------------------------

def criterion_9() -> CheckRecord:
    t0 = time.perf_counter()
    domain = DomainSpec.interval(0.0, np.pi)
    basis = spectral.neumann_basis(domain, K=16)
    bump = np.exp(-((basis.x_nodes - np.pi / 2) / 0.4) ** 2)
    coeffs = np.array([basis.inner(bump, k) for k in range(basis.K)])
    w = spectral.SpectralFunction(basis, coeffs)
    d1 = fractional1d.compare_operators(domain, w, 0.5, op_nodes=2049)
    d2 = fractional1d.compare_operators(domain, w, 0.5, op_nodes=4097)
    change = abs(d2 - d1) / d1
    ok = d1 > 0.01 and d2 > 0.01 and change <= 0.10
    rec = CheckRecord(
        name="operator-distinctness", status=PASS if ok else FAIL,
        measured=d1,
        tolerance="discrepancy > 0.01, change <= 10% under one refinement",
        anchor="§1.6", budget_s=30.0,
        details={"discrepancy": d1, "refined": d2,
                 "relative_change": change})
    return _finish(rec, t0)


# -- criterion 10: counterexample pipeline -----------------------------------

def criterion_10() -> CheckRecord:
    t0 = time.perf_counter()
    try:
        res = fractional1d.construct_counterexample(
            lambda x: np.zeros_like(x), eps=0.5, s=0.5)
    except fractional1d.NoRootError as err:
        rec = CheckRecord(
            name="counterexample-pipeline", status=FAIL,
            measured=float(err.band_c2_residual),
            tolerance="derivative roots with interior residual <= 1e-8 and "
                      "boundary-limit coefficient <= 1e-4; the no-root "
                      "branch fails this criterion",
            anchor="Example EXAMPLE", budget_s=120.0,
            details={
                "outcome": "no-root",
                "c2_residual": float(err.c2_residual),
                "band_c2_residual": float(err.band_c2_residual),
                "analysis": "the least-squares surrogate for the "
                            "non-constructive density step cannot reach band "
                            "misfit < 1 at the pinned regularization weight: "
                            "the required exterior amplitude (~1e14) is "
                            "suppressed by the 1e-8 penalty and would sink "
                            "the interior residual floor to ~1e-2 in double "
                            "precision regardless",
            })
        return _finish(rec, t0)
    b = 0.5 / 11.0
    in_band = (b <= res.delta1 <= 4 * b) and (b <= res.delta2 <= 4 * b)
    side = fractional1d.Side
    nd1 = fractional1d.fractional_normal_derivative(
        (res.x, res.v), res.s, -1.0 - res.delta1, side.FROM_LEFT_INTERVAL)
    nd2 = fractional1d.fractional_normal_derivative(
        (res.x, res.v), res.s, 1.0 + res.delta2, side.FROM_RIGHT_INTERVAL)
    ok = (in_band and res.interior_residual <= 1e-8
          and abs(nd1) <= 1e-4 and abs(nd2) <= 1e-4)
    rec = CheckRecord(
        name="counterexample-pipeline", status=PASS if ok else FAIL,
        measured=float(res.interior_residual),
        tolerance="delta in [eps/11, 4 eps/11], interior residual <= 1e-8, "
                  "boundary-limit coefficient <= 1e-4",
        anchor="Example EXAMPLE", budget_s=120.0,
        details={"outcome": "roots", "delta1": float(res.delta1),
                 "delta2": float(res.delta2),
                 "interior_residual": float(res.interior_residual),
                 "normal_derivative_left": float(nd1),
                 "normal_derivative_right": float(nd2)})
    return _finish(rec, t0)


# -- criterion 11: extremum sign ---------------------------------------------

def criterion_11() -> CheckRecord:
    t0 = time.perf_counter()
    rows, ok, applicable = [], True, 0
    worst_f = -np.inf
    for preset in presets.extremum_battery():
        if preset.catalog_name is None:
            continue
        grid = preset.build_grid(nx=33, ny=33)
        model, reaction = preset.model(), preset.reaction()
        exact = preset.exact_state(grid)
        # Pin the top slice to the profile's own trace: the constant-flux
        # reactions are incompatible with a zero-flux top (their flux leaves
        # through y -> infinity), so the faithful truncation is Dirichlet.
        top = ("dirichlet", exact.values[..., -1].ravel().copy())
        report = solver.solve_newton(model, reaction, grid, exact, top_bc=top)
        label = stability.classify(report.u, model, reaction).classification
        row = {"preset": preset.name, "converged": report.converged,
               "classification": label,
               "bounded_below": preset.bounded_below,
               "reciprocal_integral_diverges":
                   preset.reciprocal_a_integral_diverges}
        gated = (report.converged and label == "Stable"
                 and preset.bounded_below
                 and preset.reciprocal_a_integral_diverges)
        if not gated:
            row["status"] = NOT_APPLICABLE
            rows.append(row)
            continue
        applicable += 1
        check = solver.extremum_sign_check(report.u, reaction, tol=1e-8)
        row.update(check)
        row["status"] = PASS if check["ok"] else FAIL
        worst_f = max(worst_f, check["f_at_infimum"])
        ok = ok and check["ok"]
        rows.append(row)
    ok = ok and applicable > 0
    rec = CheckRecord(
        name="extremum-sign", status=PASS if ok else FAIL,
        measured=None if worst_f == -np.inf else worst_f,
        tolerance="f(infimum) <= 1e-8 and infimum on the bottom within 1e-8 "
                  "for every applicable stable solve",
        anchor="Corollary C:PT and Lemma 0oPPy", budget_s=30.0,
        details={"cases": rows, "applicable": applicable})
    return _finish(rec, t0)


CRITERIA = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
    criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
    criterion_11,
)


def run_all(parallel: bool = False, max_workers: int | None = None) -> list[CheckRecord]:
    """Run the full acceptance battery, in order."""
    if not parallel:
        return [fn() for fn in CRITERIA]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda fn: fn(), CRITERIA))


def overall_status(records: list[CheckRecord]) -> str:
    """Pass iff every applicable record passes."""
    bad = [r for r in records if r.status == FAIL]
    return FAIL if bad else PASS
