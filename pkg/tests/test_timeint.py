import numpy as np
import pytest

from cubedswe.cases import make_case
from cubedswe.constants import EARTH
from cubedswe.dg import SpatialOperator, l2_project
from cubedswe.mesh import Mesh
from cubedswe import timeint as ti

G = EARTH.g
R = EARTH.R


class _LinearRHS:
    """u' = a u with recorded stage times."""

    def __init__(self, a=-1.0):
        self.a = a
        self.times = []

    def __call__(self, u, t):
        self.times.append(t)
        return self.a * u


def test_ssp_rk3_matches_stagewise_composition():
    rhs = _LinearRHS(a=-0.7)
    u0 = np.array([2.0])
    dt, t0 = 0.3, 1.5
    got = ti.step(rhs, u0, dt, t0, "ssp-rk3")
    # compose the three stages by hand
    L = lambda u: -0.7 * u
    u1 = u0 + dt * L(u0)
    u2 = 0.75 * u0 + 0.25 * (u1 + dt * L(u1))
    u3 = u0 / 3.0 + 2.0 / 3.0 * (u2 + dt * L(u2))
    assert got[0] == u3[0]
    # stage-time arguments: tn, tn + dt, tn + dt/2
    assert rhs.times == [t0, t0 + dt, t0 + 0.5 * dt]


def test_ssp_rk2_and_rk4_stage_times():
    rhs = _LinearRHS()
    ti.step(rhs, np.ones(1), 0.1, 0.0, "ssp-rk2")
    assert rhs.times == [0.0, 0.1]
    rhs = _LinearRHS()
    ti.step(rhs, np.ones(1), 0.1, 0.0, "rk4")
    assert rhs.times == [0.0, 0.05, 0.05, 0.1]


def test_zero_rhs_identity():
    rhs = lambda u, t: np.zeros_like(u)
    u0 = np.arange(5.0)
    for scheme in ti.SCHEMES:
        assert np.array_equal(ti.step(rhs, u0, 0.5, 0.0, scheme), u0)


@pytest.mark.parametrize("scheme,order", [("ssp-rk2", 2), ("ssp-rk3", 3),
                                          ("rk4", 4)])
def test_scalar_ode_convergence_order(scheme, order):
    """Step halving on u' = -u: local error order p+1, global p."""
    rhs = lambda u, t: -u
    u0 = np.array([1.0])
    errs = []
    for nsteps in (8, 16, 32):
        u = u0.copy()
        dt = 1.0 / nsteps
        for k in range(nsteps):
            u = ti.step(rhs, u, dt, k * dt, scheme)
        errs.append(abs(u[0] - np.exp(-1.0)))
    p1 = np.log2(errs[0] / errs[1])
    p2 = np.log2(errs[1] / errs[2])
    assert min(p1, p2) > order - 0.25


def test_cfl_formula_arithmetic():
    """dt = pi C / (2 N max(|lam(0)| + |lam(pi/2)|)) against a longhand
    recomputation from the cell means."""
    mesh = Mesh(16, 1, R)
    case = make_case("w2", EARTH)
    fld = l2_project(mesh, case.initial)
    dt = ti.cfl_timestep(mesh, fld.coef, 0.25, G)
    hbar = fld.coef[:, 0, 0]
    ubar = fld.coef[:, 1, 0] / hbar
    vbar = fld.coef[:, 2, 0] / hbar
    c = np.sqrt(G * hbar)
    met = mesh.ctr_metric
    denom = np.max(np.abs(ubar) + c * np.sqrt(met.ginv11)
                   + np.abs(vbar) + c * np.sqrt(met.ginv22))
    assert dt == pytest.approx(np.pi * 0.25 / (2 * 16 * denom), rel=1e-14)
    # doubling N halves dt, up to the cell centers shifting on the metric
    mesh2 = Mesh(32, 1, R)
    fld2 = l2_project(mesh2, case.initial)
    dt2 = ti.cfl_timestep(mesh2, fld2.coef, 0.25, G)
    assert dt2 == pytest.approx(dt / 2, rel=2e-2)


def test_cfl_rest_state_hand_value():
    mesh = Mesh(8, 1, R)
    h0 = 3000.0
    fld = l2_project(mesh, lambda xi, eta: (np.full_like(xi, h0),
                                            np.zeros_like(xi),
                                            np.zeros_like(xi)))
    dt = ti.cfl_timestep(mesh, fld.coef, 0.25, G)
    c = np.sqrt(G * h0)
    met = mesh.ctr_metric
    denom = np.max(c * (np.sqrt(met.ginv11) + np.sqrt(met.ginv22)))
    assert dt == pytest.approx(np.pi * 0.25 / (16 * denom), rel=1e-12)


def test_advance_identity_at_zero_time(mesh_small):
    mesh = mesh_small
    case = make_case("w2", EARTH)
    op = SpatialOperator(mesh, EARTH, case=case)
    fld = l2_project(mesh, case.initial)
    ref = fld.coef.copy()
    cfg = ti.TimeConfig(cfl=0.25, scheme="ssp-rk2", t_end=0.0)
    fld, nst = ti.advance(op, fld, cfg)
    assert nst == 0
    assert np.array_equal(fld.coef, ref)


def test_advance_split_run_determinism(mesh_small):
    mesh = mesh_small
    case = make_case("w2", EARTH)
    op = SpatialOperator(mesh, EARTH, case=case)
    dt = 200.0
    full = l2_project(mesh, case.initial)
    cfg = ti.TimeConfig(cfl=0.25, scheme="ssp-rk2", t_end=1600.0, fixed_dt=dt)
    full, _ = ti.advance(op, full, cfg)
    half = l2_project(mesh, case.initial)
    cfg1 = ti.TimeConfig(cfl=0.25, scheme="ssp-rk2", t_end=800.0, fixed_dt=dt)
    half, _ = ti.advance(op, half, cfg1)
    half, _ = ti.advance(op, half, cfg1)
    assert np.max(np.abs(half.coef - full.coef)) \
        < 1e-12 * np.max(np.abs(full.coef))


def test_advance_smoke_one_hour(mesh_8_2):
    case = make_case("w2", EARTH)
    op = SpatialOperator(mesh_8_2, EARTH, case=case)
    fld = l2_project(mesh_8_2, case.initial)
    cfg = ti.TimeConfig(cfl=0.15, scheme="ssp-rk3", t_end=3600.0)
    seen = []
    fld, nst = ti.advance(op, fld, cfg, callbacks=[
        lambda t, f: seen.append(t)], sample_dt=1800.0)
    assert nst > 0
    assert seen[0] == 0.0 and seen[-1] == pytest.approx(3600.0)
    assert np.isfinite(fld.coef).all()
    fld.check_positive()


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        ti.TimeConfig(cfl=-1.0, scheme="ssp-rk3", t_end=1.0)
    with pytest.raises(ValueError):
        ti.TimeConfig(cfl=0.2, scheme="euler", t_end=1.0)
    with pytest.raises(ValueError):
        ti.step(lambda u, t: u, np.ones(1), 0.1, 0.0, "nope")
