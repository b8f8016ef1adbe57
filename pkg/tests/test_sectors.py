import numpy as np
import pytest

from cubedswe import core
from cubedswe import geometry as geo
from cubedswe import sectors as sec
from cubedswe.constants import EARTH

G = EARTH.g
R = EARTH.R


def dir_metric(x, y, radius=R):
    m = geo.metric_at(x, y, radius)
    return sec.DirMetric(g11=np.asarray(m.ginv11), g12=np.asarray(m.ginv12),
                         g22=np.asarray(m.ginv22))


def f_of(theta, tx, ty, u, v, c, met):
    gs = core.g_s(met.g11, met.g12, met.g22, theta)
    gc = core.g_c(met.g11, met.g12, met.g22, theta)
    return tx * (v - c * gs) - ty * (u - c * gc)


def bisect_roots(tx, ty, u, v, c, met, npts=8192):
    """Dense scan + bisection; the independent root oracle."""
    ths = np.linspace(0.0, 2 * np.pi, npts + 1)
    F = f_of(ths, tx, ty, u, v, c, met)
    roots = []
    for i in range(npts):
        if (F[i] < 0.0) != (F[i + 1] < 0.0):
            lo, hi, flo = ths[i], ths[i + 1], F[i]
            for _ in range(120):
                mid = 0.5 * (lo + hi)
                fm = f_of(mid, tx, ty, u, v, c, met)
                if (fm < 0.0) == (flo < 0.0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    return np.array(roots)


def test_directions_match_eigen_projection(rng):
    """d_i^(l) must equal L^(l) A_i R^(l) of the eigensystem."""
    for _ in range(200):
        x, y = rng.uniform(-0.7, 0.7, 2)
        m = geo.metric_at(x, y, R)
        met = dir_metric(x, y)
        h = rng.uniform(200, 9000)
        u, v = rng.normal(0, 2e-5, 2)
        th = rng.uniform(0, 2 * np.pi)
        d1, d2 = sec.directions(h, u, v, met, th, G)
        es = core.eigensystem(h, u, v, m, th, G)
        A1, A2 = core.quasilinear_matrices(h, u, v, m, G)
        for ell in range(3):
            ref1 = es.Lmat[ell] @ A1 @ es.Rmat[:, ell]
            ref2 = es.Lmat[ell] @ A2 @ es.Rmat[:, ell]
            assert d1[ell] == pytest.approx(ref1, rel=1e-10, abs=1e-18)
            assert d2[ell] == pytest.approx(ref2, rel=1e-10, abs=1e-18)


def test_direction_symmetries(rng):
    met = dir_metric(0.4, -0.2)
    h, u, v = 3000.0, 1.5e-5, -0.7e-5
    th = rng.uniform(0, 2 * np.pi, 50)
    d1, d2 = sec.directions(h, u, v, met, th, G)
    d1p, d2p = sec.directions(h, u, v, met, th + np.pi, G)
    # advective branch independent of theta
    assert np.ptp(d1[1]) == 0.0 and np.ptp(d2[1]) == 0.0
    # d^(1)(theta + pi) = d^(3)(theta)
    assert np.max(np.abs(d1p[0] - d1[2])) < 1e-18
    assert np.max(np.abs(d2p[0] - d2[2])) < 1e-18


def test_direction_derivative_constant():
    """d(d1)/dtheta = c sin(theta) / (det(G) K^3)."""
    met = dir_metric(0.5, 0.3)
    h = 2500.0
    c = np.sqrt(G * h)
    th = np.linspace(0.1, 6.0, 40)
    d = 1e-7
    d1p, _ = sec.directions(h, 0.0, 0.0, met, th + d, G)
    d1m, _ = sec.directions(h, 0.0, 0.0, met, th - d, G)
    fd = (d1p[0] - d1m[0]) / (2 * d)
    K = core.k_theta(met.g11, met.g12, met.g22, th)
    analytic = c * np.sin(th) / (met.lam2 * K ** 3)
    assert np.max(np.abs(fd - analytic) / np.max(np.abs(analytic))) < 1e-6


def test_edge_interior_rest_center():
    met = sec.DirMetric(np.float64(1 / R ** 2), np.float64(0.0),
                        np.float64(1 / R ** 2))
    p = sec.sector_angles_edge_interior(1000.0, 0.0, 0.0, met, "y-edge", G)
    assert p.nhat == 2
    assert np.allclose(np.sort(p.angles), [0.0, np.pi], atol=1e-12)
    p = sec.sector_angles_edge_interior(1000.0, 0.0, 0.0, met, "x-edge", G)
    assert p.nhat == 2
    assert np.allclose(np.sort(p.angles), [np.pi / 2, 3 * np.pi / 2],
                       atol=1e-12)


def test_edge_interior_supersonic_fallback():
    met = dir_metric(0.2, 0.1)
    h = 1000.0
    v_super = 2.0 * np.sqrt(G * h) * np.sqrt(float(met.g22))
    p = sec.sector_angles_edge_interior(h, 0.0, v_super, met, "y-edge", G)
    assert p.nhat == 1 and p.angles[0] == 0.0


def test_vertex_rest_state_exact_quadrants():
    met = sec.DirMetric(np.float64(1 / R ** 2), np.float64(0.0),
                        np.float64(1 / R ** 2))
    p = sec.sector_angles_vertex(2000.0, 0.0, 0.0, met, G)
    assert p.nhat == 4
    assert np.allclose(p.angles, [0.0, np.pi / 2, np.pi, 3 * np.pi / 2],
                       atol=1e-12)


def test_vertex_case_enumeration(rng):
    met = dir_metric(0.3, -0.3)
    h = 1000.0
    c = np.sqrt(G * h)
    cu = c * np.sqrt(float(met.g11))
    cv = c * np.sqrt(float(met.g22))
    # both supersonic
    p = sec.sector_angles_vertex(h, 3 * cu, 3 * cv, met, G)
    assert p.nhat == 1
    # only condition on v holds -> roots of d2
    p = sec.sector_angles_vertex(h, 3 * cu, 0.0, met, G)
    assert p.nhat == 2
    d1, d2 = sec.directions(h, 3 * cu, 0.0, met, p.angles, G)
    assert np.max(np.abs(d2[0])) < 1e-10 * c
    # only condition on u holds -> roots of d1
    p = sec.sector_angles_vertex(h, 0.0, 3 * cv, met, G)
    assert p.nhat == 2
    d1, d2 = sec.directions(h, 0.0, 3 * cv, met, p.angles, G)
    assert np.max(np.abs(d1[0])) < 1e-10 * c
    # subsonic -> 4
    p = sec.sector_angles_vertex(h, 0.3 * cu, -0.2 * cv, met, G)
    assert p.nhat == 4
    assert np.all(np.diff(p.angles) > 1e-10)


def test_newton_vs_bisection_oracle(rng):
    mismatches = 0
    worst = 0.0
    for _ in range(200):
        x, y = rng.uniform(-0.78, 0.78, 2)
        met1 = dir_metric(x, y)
        met = sec.DirMetric(np.atleast_1d(met1.g11), np.atleast_1d(met1.g12),
                            np.atleast_1d(met1.g22))
        h = rng.uniform(50, 9000)
        c = np.sqrt(G * h)
        u, v = rng.normal(0, 0.6 * c * np.sqrt(float(met1.g11)), 2)
        t = rng.normal(size=2)
        t /= np.hypot(*t)
        ok, ta, tb = sec.solve_family(np.full(1, t[0]), np.full(1, t[1]),
                                      np.full(1, u), np.full(1, v),
                                      np.full(1, c), met)
        ref = bisect_roots(t[0], t[1], u, v, c, met1)
        if bool(ok[0]):
            if len(ref) != 2:
                mismatches += 1
                continue
            worst = max(worst, np.max(np.abs(np.sort(ref)
                                             - np.sort([ta[0], tb[0]]))))
        elif len(ref) >= 2:
            mismatches += 1
    assert mismatches == 0
    assert worst < 1e-10


def test_roots_bracket_sign_change(rng):
    for _ in range(100):
        x, y = rng.uniform(-0.7, 0.7, 2)
        met1 = dir_metric(x, y)
        h = rng.uniform(100, 8000)
        c = np.sqrt(G * h)
        u, v = rng.normal(0, 0.4 * c * np.sqrt(float(met1.g11)), 2)
        p = sec.sector_angles_vertex(h, u, v, met1, G)
        if p.nhat == 1:
            continue
        assert np.all(np.diff(p.angles) >= sec.MIN_ANGLE_SEP)
        assert np.all((p.angles >= 0.0) & (p.angles < 2 * np.pi))


def test_panel_boundary_families_match_curve_geometry(rng):
    """The generic tangent-family roots satisfy the boundary-curve cut
    condition sec^2(eta) d2 = -sin(xi_rel) tan(y_edge) d1."""
    from cubedswe.mesh import Mesh
    mesh = Mesh(4, 1, R)
    for e in range(0, mesh.nEb, 7):
        qn = 1
        eta0 = mesh.be_eta[e, qn]
        h = 4000.0
        us, vs = 25.0, -13.0
        w = vs * np.cos(eta0)
        p = sec.sector_angles_panel_boundary(
            h, us, w, eta0,
            [(mesh.be_tanx[e, qn], mesh.be_tany[e, qn], "through")], G)
        assert p.nhat in (1, 2)
        if p.nhat == 2:
            met = sec.DirMetric(np.ones(1), np.zeros(1),
                                np.full(1, np.cos(eta0) ** 2))
            tx, ty = mesh.be_tanx[e, qn], mesh.be_tany[e, qn]
            for th in p.angles:
                val = f_of(th, tx, ty, us, w, np.sqrt(G * h), met)
                assert abs(val) < 1e-10 * np.sqrt(G * h)


def test_panel_boundary_supersonic_fallback():
    eta0 = 0.35
    h = 1000.0
    c = np.sqrt(G * h)
    p = sec.sector_angles_panel_boundary(h, 5 * c, 4 * c, eta0,
                                         [(1.0, 0.2, "through")], G)
    assert p.nhat == 1 and p.angles[0] == 0.0
