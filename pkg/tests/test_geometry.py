import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubedswe import geometry as geo
from cubedswe.constants import EARTH
from cubedswe.errors import OutOfPanel

R = EARTH.R
Q = np.pi / 4


def test_panel_center_maps_to_itself():
    xi, eta = geo.panel_to_sphere(1, 0.0, 0.0)
    assert abs(xi) < 1e-15 and abs(eta) < 1e-15


def test_corner_point_value():
    xi, eta = geo.panel_to_sphere(1, Q, Q)
    assert abs(xi - Q) < 1e-14
    assert abs(eta - np.arctan(np.sqrt(2.0) / 2.0)) < 1e-14


def test_north_pole_convention():
    xi, eta = geo.panel_to_sphere(5, 0.0, 0.0)
    assert eta == pytest.approx(np.pi / 2, abs=1e-15)
    assert xi == 0.0


def test_round_trip_all_panels(rng):
    for p in range(1, 7):
        x = rng.uniform(-Q, Q, 10000)
        y = rng.uniform(-Q, Q, 10000)
        xi, eta = geo.panel_to_sphere(p, x, y)
        x2, y2 = geo.sphere_to_panel(xi, eta, p)
        assert np.max(np.abs(x2 - x)) < 1e-12
        assert np.max(np.abs(y2 - y)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(p=st.integers(1, 6),
       x=st.floats(-Q + 1e-9, Q - 1e-9),
       y=st.floats(-Q + 1e-9, Q - 1e-9))
def test_round_trip_property(p, x, y):
    xi, eta = geo.panel_to_sphere(p, x, y)
    x2, y2 = geo.sphere_to_panel(xi, eta, p)
    assert abs(float(x2) - x) < 1e-12 and abs(float(y2) - y) < 1e-12


def test_out_of_panel_rejected():
    with pytest.raises(OutOfPanel):
        geo.sphere_to_panel(np.pi, 0.0, 1)   # antipodal point
    with pytest.raises(OutOfPanel):
        geo.sphere_to_panel(1.0, 0.0, 1)     # beyond pi/4 in longitude


def test_metric_center_and_hand_value():
    m = geo.metric_at(0.0, 0.0, R)
    assert m.g11 == pytest.approx(R * R, rel=1e-15)
    assert m.g12 == 0.0
    assert m.lambda_jac == pytest.approx(R * R, rel=1e-15)
    for gval in m.christoffel.values():
        assert gval == 0.0
    # tan x = 1, tan y = 0
    m = geo.metric_at(Q, 0.0, R)
    assert m.g11 == pytest.approx(R * R, rel=1e-14)
    assert m.g22 == pytest.approx(R * R / 2.0, rel=1e-14)
    assert m.g12 == 0.0
    assert m.lambda_jac == pytest.approx(R * R / np.sqrt(2.0), rel=1e-14)
    assert m.ginv11 == pytest.approx(1.0 / R ** 2, rel=1e-14)
    assert m.ginv22 == pytest.approx(2.0 / R ** 2, rel=1e-14)


def test_metric_inverse_and_jacobian(rng):
    x = rng.uniform(-Q, Q, 3000)
    y = rng.uniform(-Q, Q, 3000)
    m = geo.metric_at(x, y, R)
    one = m.g11 * m.ginv11 + m.g12 * m.ginv12
    zero = m.g11 * m.ginv12 + m.g12 * m.ginv22
    assert np.max(np.abs(one - 1.0)) < 1e-12
    assert np.max(np.abs(zero)) < 1e-12
    det = m.g11 * m.g22 - m.g12 * m.g12
    assert np.all(det > 0.0)
    assert np.max(np.abs(m.lambda_jac ** 2 - det) / det) < 1e-12


def test_velocity_matrix_vs_metric(rng):
    for p in range(1, 7):
        x = rng.uniform(-Q, Q, 800)
        y = rng.uniform(-Q, Q, 800)
        A = geo.velocity_matrix_at(p, x, y, R)
        m = geo.metric_at(x, y, R)
        r2 = R * R
        assert np.max(np.abs(A.a11 ** 2 + A.a21 ** 2 - m.g11)) < 1e-10 * r2
        assert np.max(np.abs(A.a11 * A.a12 + A.a21 * A.a22 - m.g12)) \
            < 1e-10 * r2
        assert np.max(np.abs(A.a12 ** 2 + A.a22 ** 2 - m.g22)) < 1e-10 * r2
        # charts are orientation preserving: det A = +Lambda
        assert np.max(np.abs(A.det() - m.lambda_jac)) < 1e-10 * r2


def test_velocity_matrix_center_is_scaled_identity():
    A = geo.velocity_matrix_at(1, 0.0, 0.0, R)
    assert A.a11 == pytest.approx(R, rel=1e-14)
    assert A.a22 == pytest.approx(R, rel=1e-14)
    assert abs(A.a12) < 1e-9 and abs(A.a21) < 1e-9


def test_velocity_conversion_round_trip(rng):
    for p in (1, 3, 5, 6):
        x = rng.uniform(-Q, Q, 400)
        y = rng.uniform(-Q, Q, 400)
        us = rng.normal(0, 50, 400)
        vs = rng.normal(0, 50, 400)
        u, v = geo.contravariant_from_spherical(p, x, y, R, us, vs)
        us2, vs2 = geo.spherical_from_contravariant(p, x, y, R, u, v)
        assert np.max(np.abs(us2 - us)) < 1e-10
        assert np.max(np.abs(vs2 - vs)) < 1e-10
        # zero maps to zero
        u0, v0 = geo.contravariant_from_spherical(
            p, x, y, R, np.zeros(400), np.zeros(400))
        assert np.max(np.abs(u0)) == 0.0 and np.max(np.abs(v0)) == 0.0


def test_adjacent_panels_agree_on_shared_edges():
    t = np.linspace(-Q, Q, 57)
    pairs = [((1, t, np.full_like(t, Q)), (5, t, np.full_like(t, -Q))),
             ((1, np.full_like(t, Q), t), (2, np.full_like(t, -Q), t)),
             ((3, t, np.full_like(t, -Q)), (6, -t, np.full_like(t, -Q)))]
    for (pa, xa, ya), (pb, xb, yb) in pairs:
        va = geo.panel_to_xyz(pa, xa, ya)
        vb = geo.panel_to_xyz(pb, xb, yb)
        assert np.max(np.abs(va - vb)) < 1e-12


def test_metric_divergence_identity(rng):
    # d/dx (Lam g^11) + d/dy (Lam g^12) = 0, the free-stream identity
    x = rng.uniform(-0.7, 0.7, 50)
    y = rng.uniform(-0.7, 0.7, 50)
    h = 1e-6

    def m1(x_, y_):
        m = geo.metric_at(x_, y_, R)
        return m.lambda_jac * m.ginv11, m.lambda_jac * m.ginv12

    ax = (m1(x + h, y)[0] - m1(x - h, y)[0]) / (2 * h)
    ay = (m1(x, y + h)[1] - m1(x, y - h)[1]) / (2 * h)
    scale = np.max(np.abs(m1(x, y)[0]))
    assert np.max(np.abs(ax + ay)) < 1e-4 * h * scale + 1e-8 * scale
