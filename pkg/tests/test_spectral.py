"""Tests for the spectral half-power operator and its harmonic extension."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylreact import spectral, solver
from cylreact.cylinder import DomainSpec, build_grid

INTERVAL_PI = DomainSpec.interval(0.0, np.pi)


def _damped_cubic():
    return solver.ReactionSpec(
        f=lambda v: -np.asarray(v, float) ** 3 - np.asarray(v, float),
        f_prime=lambda v: -3.0 * np.asarray(v, float) ** 2 - 1.0)


def _one_minus_v():
    return solver.ReactionSpec(
        f=lambda v: 1.0 - np.asarray(v, float),
        f_prime=lambda v: -np.ones_like(np.asarray(v, float)))


# ---------------------------------------------------------------------------
# basis construction


def test_interval_eigenvalues():
    b = spectral.neumann_basis(INTERVAL_PI, 3)
    assert np.allclose(b.lambdas, [0.0, 1.0, 4.0], atol=1e-14)
    b2 = spectral.neumann_basis(DomainSpec.interval(0.0, 2.0 * np.pi), 2)
    assert b2.lambdas[1] == pytest.approx(0.25, rel=1e-14)


def test_rectangle_eigenvalues_sorted_with_ties():
    dom = DomainSpec.rectangle(0.0, np.pi, 0.0, np.pi)
    b = spectral.neumann_basis(dom, 4)
    assert np.allclose(b.lambdas, [0.0, 1.0, 1.0, 2.0], atol=1e-14)
    # ties broken lexicographically in the mode indices
    assert b.modes == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_basis_gram_orthonormal():
    for dom in (INTERVAL_PI, DomainSpec.rectangle(0.0, np.pi, 0.0, 2.0)):
        b = spectral.neumann_basis(dom, 6)
        flat = b.eigenfields.reshape(b.K, -1)
        gram = flat @ (b.weights.ravel()[:, None] * flat.T)
        assert np.max(np.abs(gram - np.eye(b.K))) < 1e-12


def test_mode_at_matches_sampled_fields():
    b = spectral.neumann_basis(INTERVAL_PI, 5)
    for k in range(b.K):
        assert np.allclose(b.mode_at(k, b.x_nodes), b.eigenfields[k],
                           atol=1e-14)


def test_neumann_basis_validation():
    with pytest.raises(ValueError):
        spectral.neumann_basis(INTERVAL_PI, 0)


# ---------------------------------------------------------------------------
# spectral functions and the fractional map


def test_spectral_function_values_and_seminorm():
    b = spectral.neumann_basis(INTERVAL_PI, 4)
    c = np.array([0.5, 1.0, 0.0, -2.0])
    v = spectral.SpectralFunction(b, c)
    assert np.allclose(v.values(), b.synthesize(c))
    expected = float(np.sum(np.sqrt(b.lambdas) * c ** 2))
    assert v.seminorm_h_half() == pytest.approx(expected, rel=1e-14)


def test_spectral_function_coeff_count_checked():
    b = spectral.neumann_basis(INTERVAL_PI, 4)
    with pytest.raises(ValueError):
        spectral.SpectralFunction(b, np.zeros(5))


def test_spectral_function_json_round_trip():
    dom = DomainSpec.rectangle(0.0, np.pi, 0.0, 1.0)
    b = spectral.neumann_basis(dom, 5)
    v = spectral.SpectralFunction(b, np.linspace(-1, 1, 5))
    d = json.loads(json.dumps(v.to_json_dict()))
    w = spectral.SpectralFunction.from_json_dict(d)
    assert np.allclose(w.coeffs, v.coeffs, atol=0)
    assert w.basis.K == b.K and w.basis.resolution == b.resolution
    assert np.allclose(w.values(), v.values(), atol=1e-15)


def test_apply_fractional_annihilates_zero_mode():
    b = spectral.neumann_basis(INTERVAL_PI, 4)
    v = spectral.SpectralFunction(b, np.array([3.0, 1.0, 1.0, 1.0]))
    out = spectral.apply_fractional(b, 0.5, v)
    assert out.coeffs[0] == 0.0
    assert np.allclose(out.coeffs[1:], np.sqrt(b.lambdas[1:]))


def test_apply_fractional_validation():
    b = spectral.neumann_basis(INTERVAL_PI, 4)
    v = spectral.SpectralFunction(b, np.ones(4))
    for s in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            spectral.apply_fractional(b, s, v)
    b5 = spectral.neumann_basis(INTERVAL_PI, 5)
    with pytest.raises(ValueError):
        spectral.apply_fractional(b5, 0.5, v)


@settings(deadline=None, max_examples=30)
@given(s1=st.floats(0.05, 0.5), s2=st.floats(0.05, 0.5),
       seed=st.integers(0, 2 ** 16))
def test_apply_fractional_semigroup(s1, s2, seed):
    b = spectral.neumann_basis(INTERVAL_PI, 6)
    rng = np.random.default_rng(seed)
    v = spectral.SpectralFunction(b, rng.standard_normal(6))
    once = spectral.apply_fractional(b, s1 + s2, v)
    twice = spectral.apply_fractional(b, s2, spectral.apply_fractional(b, s1, v))
    assert np.allclose(twice.coeffs, once.coeffs, rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------------------
# semilinear solve: every solution is constant in the cross-section


def test_solve_semilinear_reaches_constant_from_random_inits():
    b = spectral.neumann_basis(INTERVAL_PI, 12)
    reaction = solver.ReactionSpec(
        f=lambda v: 1.0 - np.asarray(v, float) ** 3,
        f_prime=lambda v: -3.0 * np.asarray(v, float) ** 2)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        init = spectral.SpectralFunction(b, 1e-2 * rng.standard_normal(12))
        v = spectral.solve_semilinear(b, reaction, init)
        assert float(np.sum(v.coeffs[1:] ** 2)) < 1e-24
        assert np.allclose(v.values(), 1.0, atol=1e-10)


def test_solve_semilinear_zero_root_damped_cubic():
    b = spectral.neumann_basis(INTERVAL_PI, 8)
    init = spectral.SpectralFunction(
        b, 0.1 * np.random.default_rng(7).standard_normal(8))
    v = spectral.solve_semilinear(b, _damped_cubic(), init)
    assert np.max(np.abs(v.coeffs)) < 1e-10


def test_solve_semilinear_inconsistent_problem_raises():
    # f(v) = v^2 + 1 has positive mean for every v: the zero-mode equation
    # 0 = <f(v), phi_0> is unsolvable
    b = spectral.neumann_basis(INTERVAL_PI, 4)
    reaction = solver.ReactionSpec(
        f=lambda v: np.asarray(v, float) ** 2 + 1.0,
        f_prime=lambda v: 2.0 * np.asarray(v, float))
    init = spectral.SpectralFunction(b, np.zeros(4))
    with pytest.raises(spectral.SpectralSolveError) as exc:
        spectral.solve_semilinear(b, reaction, init, max_iter=25)
    assert len(exc.value.residual_history) >= 1


# ---------------------------------------------------------------------------
# eigenvalue growth / eigenfunction bound fit


def test_eig_growth_interval():
    b = spectral.neumann_basis(INTERVAL_PI, 64)
    K_beta, (C1, C2) = spectral.eig_growth_check(b, 1.5)
    # lambda_k = k^2 >= k^1.5 from k = 1 on; cosines have sup sqrt(2/pi)
    assert K_beta == 1
    assert C1 == pytest.approx(np.sqrt(2.0 / np.pi), rel=1e-12)
    assert abs(C2) < 1e-12


def test_eig_growth_rectangle():
    dom = DomainSpec.rectangle(0.0, np.pi, 0.0, np.pi)
    b = spectral.neumann_basis(dom, 128)
    K_beta, (C1, C2) = spectral.eig_growth_check(b, 0.9)
    assert K_beta == 8  # frozen: smallest index from which lambda_k > k^0.9
    assert np.all(b.lambdas[K_beta:] >= np.arange(K_beta, 128) ** 0.9)
    assert C1 == pytest.approx(0.514102120557188, rel=1e-9)
    assert C2 == pytest.approx(0.037628635584056803, rel=1e-6)


def test_eig_growth_validation():
    b = spectral.neumann_basis(INTERVAL_PI, 64)
    with pytest.raises(ValueError):
        spectral.eig_growth_check(b, 0.0)
    with pytest.raises(ValueError):
        spectral.eig_growth_check(b, 2.0)  # beta must be < 2/n = 2
    small = spectral.neumann_basis(INTERVAL_PI, 10)
    with pytest.raises(ValueError):
        spectral.eig_growth_check(small, 1.0)


# ---------------------------------------------------------------------------
# harmonic extension


def test_extend_harmonic_single_mode_closed_form():
    b = spectral.neumann_basis(INTERVAL_PI, 8)
    c = np.zeros(8)
    c[1] = 1.0
    v = spectral.SpectralFunction(b, c)
    grid = build_grid(INTERVAL_PI, nx=17, ny=17, y_max=4.0)
    u = spectral.extend_harmonic(b, v, grid)
    X = grid.coordinate_arrays()[0]
    Y = grid.coordinate_arrays()[-1]
    exact = np.sqrt(2.0 / np.pi) * np.cos(X) * np.exp(-Y)
    assert np.max(np.abs(u.values - exact)) < 1e-14


def test_extend_harmonic_interior_laplacian_ladder():
    # the extension is harmonic: the discrete interior Laplacian residual
    # shrinks under refinement (frozen from the second-order stencils)
    from cylreact import forms
    b = spectral.neumann_basis(INTERVAL_PI, 8)
    c = np.zeros(8)
    c[1] = 1.0
    v = spectral.SpectralFunction(b, c)
    frozen = {17: 1.510892e-2, 33: 5.136369e-3, 65: 1.475544e-3}
    for n, expected in frozen.items():
        grid = build_grid(INTERVAL_PI, nx=n, ny=n, y_max=4.0)
        u = spectral.extend_harmonic(b, v, grid)
        gx = forms.gradient_fields(grid, u.values, pairing=False)
        lap = (forms.gradient_fields(grid, gx[0], pairing=False)[0]
               + forms.gradient_fields(grid, gx[-1], pairing=False)[-1])
        res = float(np.max(np.abs(lap[2:-2, 2:-2])))
        assert res == pytest.approx(expected, rel=1e-5)


def test_extend_harmonic_domain_mismatch():
    b = spectral.neumann_basis(INTERVAL_PI, 4)
    v = spectral.SpectralFunction(b, np.zeros(4))
    grid = build_grid(DomainSpec.interval(0.0, 1.0), nx=9, ny=9, y_max=2.0)
    with pytest.raises(ValueError):
        spectral.extend_harmonic(b, v, grid)


# ---------------------------------------------------------------------------
# equivalence with the cylinder weak form


def test_extension_equivalence_residuals_at_roundoff():
    basis = spectral.neumann_basis(INTERVAL_PI, 32)
    grid = build_grid(INTERVAL_PI, nx=65, ny=65, y_max=19.0)
    rng = np.random.default_rng(0)
    init = spectral.SpectralFunction(basis, 1e-3 * rng.standard_normal(32))
    cases = [
        ("zero", solver.ReactionSpec.constant(0.0), 1e-15),
        ("one-minus-v", _one_minus_v(), 1e-12),
        ("damped-cubic", _damped_cubic(), 1e-18),
    ]
    for name, reaction, bound in cases:
        res = spectral.extension_equivalence(basis, reaction, grid, init=init)
        assert res < bound, name
