"""Grids, quadrature weights, and discrete gradients on the half-cylinder."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylreact.cylinder import (
    CylinderField,
    DomainSpec,
    Region,
    build_grid,
    field_to_csv,
    gradient,
    integrate,
    trace_bottom,
)

PI = np.pi


def _interval_grid(nx=17, ny=17, y_max=2.0, grading=0.0):
    return build_grid(DomainSpec.interval(0.0, PI), nx=nx, ny=ny,
                      y_max=y_max, grading=grading)


def test_domain_kinds():
    assert not DomainSpec.interval(0.0, 1.0).is_rectangle
    assert DomainSpec.rectangle(0.0, 1.0, 0.0, 2.0).is_rectangle
    assert DomainSpec.interval(0.0, 1.0).ndim == 1
    assert DomainSpec.rectangle(0.0, 1.0, 0.0, 2.0).ndim == 2


def test_grid_shape_and_masks():
    g = _interval_grid(nx=9, ny=13)
    assert g.shape == (9, 13)
    assert g.n_nodes == 9 * 13
    assert g.bottom_mask().sum() == 9
    assert g.top_mask().sum() == 9


def test_rectangle_grid_shape():
    g = build_grid(DomainSpec.rectangle(0.0, PI, 0.0, PI),
                   nx=7, ny=5, y_max=1.0, nz=9)
    assert g.shape == (7, 9, 5)


def test_bulk_weights_integrate_constant():
    g = _interval_grid(nx=33, ny=33, y_max=2.0)
    w = g.bulk_weights(0.0)
    assert float(w.sum()) == pytest.approx(PI * 2.0, rel=1e-12)


def test_weighted_bulk_weights_power():
    # integral of y^theta over the truncated cylinder
    theta = 0.5
    g = _interval_grid(nx=17, ny=257, y_max=1.0)
    w = g.bulk_weights(theta)
    exact = PI * (1.0 / (theta + 1.0))
    assert float(w.sum()) == pytest.approx(exact, rel=2e-3)


def test_bottom_weights_integrate_cross_section():
    g = _interval_grid(nx=65, ny=9)
    assert float(g.bottom_weights().sum()) == pytest.approx(PI, rel=1e-12)


def test_gradient_exact_on_affine():
    g = _interval_grid(nx=11, ny=11)
    X, Y = g.coordinate_arrays()
    u = CylinderField(g, 2.0 * X - 3.0 * Y + 1.0)
    gx, gy = gradient(u)
    assert np.allclose(gx, 2.0, atol=1e-12)
    assert np.allclose(gy, -3.0, atol=1e-12)


def test_gradient_second_order_interior_and_boundary():
    errs = []
    for n in (17, 33, 65):
        g = _interval_grid(nx=n, ny=n)
        X, Y = g.coordinate_arrays()
        u = CylinderField(g, np.sin(X) * np.exp(-Y))
        gx, _ = gradient(u)
        errs.append(float(np.max(np.abs(gx - np.cos(X) * np.exp(-Y)))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


def test_pairing_summation_by_parts():
    # pairing derivative D and weights w satisfy (Du, v)_w + (u, Dv)_w
    # = boundary product exactly on uniform grids
    g = _interval_grid(nx=23, ny=9)
    D = g.pairing_diff_1d(0)
    w = g.axis_weights(0)
    rng = np.random.default_rng(5)
    u = rng.standard_normal(23)
    v = rng.standard_normal(23)
    lhs = float((D @ u) @ (w * v) + (w * u) @ (D @ v))
    boundary = u[-1] * v[-1] - u[0] * v[0]
    assert lhs == pytest.approx(boundary, abs=1e-12)


def test_graded_grid_refines_toward_bottom():
    g = _interval_grid(ny=33, grading=0.5)
    y = g.coordinate_arrays()[-1][0]
    dy = np.diff(y)
    assert dy[0] < dy[-1]
    assert y[0] == 0.0
    assert y[-1] == pytest.approx(g.y_max)


def test_trace_bottom_and_integrate():
    g = _interval_grid(nx=33, ny=17)
    X, Y = g.coordinate_arrays()
    u = CylinderField(g, np.cos(X) ** 2 * np.exp(-Y))
    tr = trace_bottom(u)
    assert tr.shape == (33,)
    assert np.allclose(tr, np.cos(g.coordinate_arrays()[0][:, 0]) ** 2)
    val = integrate(tr, Region.BOTTOM, g)
    assert val == pytest.approx(PI / 2.0, rel=1e-10)


def test_field_to_csv_round_trip(tmp_path):
    g = _interval_grid(nx=5, ny=4)
    X, Y = g.coordinate_arrays()
    u = CylinderField(g, X + Y)
    path = tmp_path / "field.csv"
    field_to_csv(u, str(path))
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (20, 3)
    assert np.allclose(data[:, 0] + data[:, 1], data[:, 2])


def test_build_grid_validates_counts():
    with pytest.raises(ValueError):
        build_grid(DomainSpec.interval(0.0, 1.0), nx=2, ny=9, y_max=1.0)
    with pytest.raises(ValueError):
        build_grid(DomainSpec.interval(0.0, 1.0), nx=9, ny=9, y_max=-1.0)


@settings(deadline=None, max_examples=40)
@given(nx=st.integers(5, 40), ny=st.integers(5, 40),
       y_max=st.floats(0.5, 10.0))
def test_weights_positive_and_consistent(nx, ny, y_max):
    g = build_grid(DomainSpec.interval(0.0, PI), nx=nx, ny=ny, y_max=y_max)
    assert np.all(g.bulk_weights(0.0) > 0.0)
    assert np.all(g.bottom_weights() > 0.0)
    assert float(g.bulk_weights(0.0).sum()) == pytest.approx(
        PI * y_max, rel=1e-10)


@settings(deadline=None, max_examples=25)
@given(grading=st.floats(0.0, 1.5), ny=st.integers(6, 50))
def test_graded_coordinates_monotone(grading, ny):
    g = build_grid(DomainSpec.interval(0.0, 1.0), nx=5, ny=ny,
                   y_max=3.0, grading=grading)
    y = g.coordinate_arrays()[-1][0]
    assert np.all(np.diff(y) > 0.0)
    assert y[0] == 0.0
    assert y[-1] == pytest.approx(3.0)
