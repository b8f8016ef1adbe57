"""Acceptance suite: every gate criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.  The solver integrations here run at desk scale (N <= 32) and
take a couple of hours in total; set CUBEDSWE_ACCEPT_CACHE=<dir> to reuse
results across invocations while developing.
"""

import json
import os

import numpy as np
import pytest
from scipy.integrate import quad

from cubedswe import core, evolution, geometry, sectors
from cubedswe.cases import make_case
from cubedswe.constants import EARTH, SECONDS_PER_DAY
from cubedswe.dg import SpatialOperator, l2_project
from cubedswe.diagnostics import conserved, freestream_residual, \
    relative_errors
from cubedswe.mesh import Mesh
from cubedswe.timeint import TimeConfig, advance, default_cfl, default_scheme

G = EARTH.g
R = EARTH.R
_CACHE_DIR = os.environ.get("CUBEDSWE_ACCEPT_CACHE", "")


def _cached(key, compute):
    if not _CACHE_DIR:
        return compute()
    os.makedirs(_CACHE_DIR, exist_ok=True)
    path = os.path.join(_CACHE_DIR, key + ".json")
    if os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)
    out = compute()
    with open(path, "w") as fh:
        json.dump(out, fh)
    return out


def _run_case(name, K, N, days, flux="leg", track_energy=False, **case_kw):
    case = make_case(name, EARTH, **case_kw)
    mesh = Mesh(N, K, R)
    op = SpatialOperator(mesh, EARTH, case=case, flux_mode=flux)
    field = l2_project(mesh, case.initial)
    M0, E0, P0 = conserved(field, case=case)
    cfg = TimeConfig(cfl=default_cfl(K), scheme=default_scheme(K),
                     t_end=days * SECONDS_PER_DAY)
    field, nstep = advance(op, field, cfg)
    field.check_positive()
    M1, E1, P1 = conserved(field, case=case)
    out = {"steps": nstep,
           "mass_drift": abs(M1 - M0) / M0,
           "energy_drift": abs(E1 - E0) / E0,
           "enstrophy_drift": abs(P1 - P0) / P0,
           "min_h": float(np.min(np.matmul(field.coef[:, 0, :], mesh.Vb)))}
    if case.has_exact:
        for qty in ("h",):
            l1, l2, linf = relative_errors(
                field, lambda xi, eta, t: case.exact(xi, eta, t),
                cfg.t_end, qty)
            out.update({"l1_h": float(l1), "l2_h": float(l2),
                        "linf_h": float(linf)})
    return out


# ---------------------------------------------------------------- W2 table

@pytest.fixture(scope="module")
def w2_table():
    table = {}
    for K in (1, 2, 3):
        for N in (16, 32):
            key = f"w2_K{K}_N{N}_3d"
            table[(K, N)] = _cached(key, lambda K=K, N=N: _run_case(
                "w2", K, N, 3.0))
    return table


PAPER_W2 = {  # t = 3 days reference values and orders
    1: {"l1_N32": 2.67e-4, "order_lo": 1.7, "order_hi": 2.5},
    2: {"l1_N32": 3.47e-6, "order_lo": 2.6, "order_hi": 3.4},
    3: {"order_lo": 3.5, "order_hi": 4.5},
}


@pytest.mark.slow
@pytest.mark.parametrize("K", [1, 2, 3])
def test_w2_convergence_order(w2_table, K):
    e16 = w2_table[(K, 16)]["l2_h"]
    e32 = w2_table[(K, 32)]["l2_h"]
    order = np.log2(e16 / e32)
    lo, hi = PAPER_W2[K]["order_lo"], PAPER_W2[K]["order_hi"]
    ok = lo <= order <= hi
    print(f"[{'PASS' if ok else 'FAIL'}] W2 l2(h) order K={K}: {order:.4f} "
          f"(window [{lo}, {hi}]; errors {e16:.3e} -> {e32:.3e})")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("K", [1, 2])
def test_w2_error_magnitude(w2_table, K):
    got = w2_table[(K, 32)]["l1_h"]
    ref = PAPER_W2[K]["l1_N32"]
    ok = ref / 3.0 <= got <= ref * 3.0
    print(f"[{'PASS' if ok else 'FAIL'}] W2 l1(h) K={K} N=32: {got:.3e} "
          f"(reference {ref:.2e}, factor-3 window)")
    assert ok


@pytest.mark.slow
def test_mass_conservation_one_day():
    out = _cached("w2_K2_N16_1d", lambda: _run_case("w2", 2, 16, 1.0))
    drift = out["mass_drift"]
    ok = drift <= 1e-12
    print(f"[{'PASS' if ok else 'FAIL'}] mass drift over 1 day "
          f"(K=2, N=16): {drift:.3e} (tol 1e-12)")
    assert ok


# ------------------------------------------------- free-stream/consistency

@pytest.mark.parametrize("N", [8, 16])
@pytest.mark.parametrize("K", [1, 2, 3])
def test_freestream_suite(N, K):
    worst = 0.0
    for mode in ("leg", "baseline"):
        op = SpatialOperator(Mesh(N, K, R), EARTH, case=None, flux_mode=mode)
        worst = max(worst, freestream_residual(op))
    ok = worst <= 1e-11
    print(f"[{'PASS' if ok else 'FAIL'}] free-stream residual K={K} N={N}: "
          f"{worst:.3e} (tol 1e-11)")
    assert ok


def test_operator_consistency_suite(rng):
    worst = 0.0
    for _ in range(500):
        x, y = rng.uniform(-0.78, 0.78, 2)
        m = geometry.metric_at(x, y, R)
        met = sectors.DirMetric(np.atleast_1d(m.ginv11),
                                np.atleast_1d(m.ginv12),
                                np.atleast_1d(m.ginv22))
        nh = int(rng.integers(1, 5))
        ang = np.sort(rng.uniform(0, 2 * np.pi, nh))
        st = np.array([rng.uniform(100, 8000), rng.normal(0, 2e-5),
                       rng.normal(0, 2e-5)])
        out = evolution.leg_operator(np.tile(st, (nh, 1)), ang, st, st,
                                     met, G)
        worst = max(worst, np.max(np.abs(out - st)
                                  / np.array([st[0], 2e-5, 2e-5])))
    for _ in range(500):
        eta0 = rng.uniform(-0.8, 0.8)
        nh = int(rng.integers(1, 5))
        ang = np.sort(rng.uniform(0, 2 * np.pi, nh))
        st = np.array([rng.uniform(100, 8000), rng.normal(0, 40),
                       rng.normal(0, 40)])
        out = evolution.leg_operator_latlon(np.tile(st, (nh, 1)), ang, st,
                                            st, eta0, G)
        worst = max(worst, np.max(np.abs(out - st)
                                  / np.array([st[0], 1.0, 1.0])))
    ok = worst <= 1e-12
    print(f"[{'PASS' if ok else 'FAIL'}] evolution-operator consistency "
          f"(interior + lat/lon): {worst:.3e} (tol 1e-12)")
    assert ok


# --------------------------------------------------------- oracle suites

def test_oracle_j_constants(rng):
    worst = 0.0
    for _ in range(1000):
        x, y = rng.uniform(-0.78, 0.78, 2)
        m = geometry.metric_at(x, y, 1.0)
        geom = evolution.OperatorGeometry(m.ginv11, m.ginv12, m.ginv22)

        def K2(t):
            return (m.ginv11 * np.cos(t) ** 2
                    + 2 * m.ginv12 * np.sin(t) * np.cos(t)
                    + m.ginv22 * np.sin(t) ** 2)

        J2q = quad(lambda t: np.sin(t) ** 2 / K2(t), 0, 2 * np.pi,
                   limit=200)[0] / (2 * np.pi)
        J1q = quad(lambda t: np.sin(t) * np.cos(t) / K2(t), 0, 2 * np.pi,
                   limit=200)[0] / (2 * np.pi)
        worst = max(worst, abs(geom.J1[0] - J1q), abs(geom.J2[0] - J2q))
    ok = worst <= 1e-10
    print(f"[{'PASS' if ok else 'FAIL'}] J constants vs adaptive quadrature "
          f"(1000 metrics): {worst:.3e} (tol 1e-10)")
    assert ok


def test_oracle_antiderivatives(rng):
    worst = 0.0
    for _ in range(1000):
        kind = rng.integers(0, 3)
        if kind == 0:
            x, y = rng.uniform(-0.78, 0.78, 2)
            m = geometry.metric_at(x, y, 1.0)
            ge = (m.ginv11, m.ginv12, m.ginv22)
        elif kind == 1:
            ge = (1.0, 0.0, 1.0 - 10.0 ** rng.uniform(-15, -0.3))
        else:
            ge = (1.0, 0.0, np.cos(rng.uniform(-0.8, 0.8)) ** 2)
        geom = evolution.OperatorGeometry(*ge)
        th = rng.uniform(-1.0, 7.0)
        d = 1e-4
        fd = (geom.primitives(np.array([th + d]))[0]
              - geom.primitives(np.array([th - d]))[0]) / (2 * d)
        thp = th + geom.phiG[0]
        ct, st = np.cos(thp), np.sin(thp)
        K2v = geom.ew1[0] * ct * ct + geom.ew2[0] * st * st
        exact = np.array([ct / np.sqrt(K2v), st / np.sqrt(K2v),
                          ct * ct / K2v, st * ct / K2v, st * st / K2v])
        worst = max(worst, np.max(np.abs(fd - exact)
                                  / np.maximum(np.abs(exact), 1.0)))
    ok = worst <= 1e-8
    print(f"[{'PASS' if ok else 'FAIL'}] antiderivative derivative check "
          f"(1000 samples): {worst:.3e} (tol 1e-8)")
    assert ok


def _bisect_roots(tx, ty, u, v, c, g11, g12, g22, npts=8192):
    ths = np.linspace(0.0, 2 * np.pi, npts + 1)

    def F(t):
        gs = core.g_s(g11, g12, g22, t)
        gc = core.g_c(g11, g12, g22, t)
        return tx * (v - c * gs) - ty * (u - c * gc)

    Fv = F(ths)
    roots = []
    for i in range(npts):
        if (Fv[i] < 0.0) != (Fv[i + 1] < 0.0):
            lo, hi, flo = ths[i], ths[i + 1], Fv[i]
            for _ in range(120):
                mid = 0.5 * (lo + hi)
                fm = F(mid)
                if (fm < 0.0) == (flo < 0.0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    return np.array(roots)


def test_oracle_newton_vs_bisection(rng):
    worst = 0.0
    mismatch = 0
    for trial in range(1000):
        if trial % 2 == 0:
            x, y = rng.uniform(-0.78, 0.78, 2)
            m = geometry.metric_at(x, y, R)
            g11, g12, g22 = m.ginv11, m.ginv12, m.ginv22
            t = rng.normal(size=2)
            t /= np.hypot(*t)
            vel_scale = np.sqrt(g11)
        else:
            # panel-boundary families: lat/lon metric with curve tangents
            eta0 = rng.uniform(-0.8, 0.8)
            g11, g12, g22 = 1.0, 0.0, np.cos(eta0) ** 2
            t = rng.normal(size=2)
            t /= np.hypot(*t)
            vel_scale = 1.0
        h = rng.uniform(50, 9000)
        c = np.sqrt(G * h)
        u, v = rng.normal(0, 0.6 * c * vel_scale, 2)
        met = sectors.DirMetric(np.atleast_1d(g11), np.atleast_1d(g12),
                                np.atleast_1d(g22))
        ok, ta, tb = sectors.solve_family(
            np.full(1, t[0]), np.full(1, t[1]), np.full(1, u), np.full(1, v),
            np.full(1, c), met)
        ref = _bisect_roots(t[0], t[1], u, v, c, g11, g12, g22)
        if bool(ok[0]):
            if len(ref) != 2:
                mismatch += 1
                continue
            worst = max(worst, np.max(np.abs(np.sort(ref)
                                             - np.sort([ta[0], tb[0]]))))
        elif len(ref) >= 2:
            mismatch += 1
    ok = worst <= 1e-10 and mismatch == 0
    print(f"[{'PASS' if ok else 'FAIL'}] sector-angle Newton vs bisection "
          f"(1000 states incl. boundary): {worst:.3e} rad, "
          f"{mismatch} case mismatches (tol 1e-10)")
    assert ok


def test_oracle_eigensystem(rng):
    worst = 0.0
    for _ in range(10000):
        x, y = rng.uniform(-0.78, 0.78, 2)
        m = geometry.metric_at(x, y, R)
        h = rng.uniform(100, 9000)
        u, v = rng.normal(0, 2e-5, 2)
        th = rng.uniform(0, 2 * np.pi)
        es = core.eigensystem(h, u, v, m, th, G)
        scale = np.abs(es.Lmat) @ np.abs(es.Rmat) + 1.0
        worst = max(worst, np.max(np.abs(es.Lmat @ es.Rmat - np.eye(3))
                                  / scale))
        A1, A2 = core.quasilinear_matrices(h, u, v, m, G)
        Ath = A1 * np.cos(th) + A2 * np.sin(th)
        rec = es.Rmat @ np.diag(es.lambdas) @ es.Lmat
        worst = max(worst, np.max(np.abs(rec - Ath)) / np.max(np.abs(Ath)))
    ok = worst <= 1e-10
    print(f"[{'PASS' if ok else 'FAIL'}] eigensystem identities "
          f"(10^4 triples): {worst:.3e} (tol 1e-10)")
    assert ok


def test_oracle_two_sided_edge_flux(rng):
    mesh = Mesh(5, 1, R)
    worst = 0.0
    for e in range(mesh.nEb):
        qn = int(rng.integers(0, mesh.q))
        h = rng.uniform(500, 8000)
        us, vs = rng.normal(0, 60, 2)
        nhat = mesh.be_nhat[e, qn]
        f = evolution.edge_physical_flux((h, us, vs), (nhat[0], nhat[1]), G)
        for side in (0, 1):
            A = (mesh.be_AA, mesh.be_AB)[side][e, qn]
            dlds = mesh.be_dlds[e, qn, side]
            x = (mesh.be_xA, mesh.be_xB)[side][e, qn]
            y = (mesh.be_yA, mesh.be_yB)[side][e, qn]
            side_nm = (mesh.be_sideA, mesh.be_sideB)[side][e]
            n = {"B": (0, -1), "T": (0, 1), "L": (-1, 0), "R": (1, 0)}[side_nm]
            u, v = np.linalg.solve(A, [us, vs])
            m = geometry.metric_at(x, y, R)
            lam = m.lambda_jac
            p = 0.5 * G * h * h * lam
            F1 = np.array([lam * h * u, lam * h * u * u + p * m.ginv11,
                           lam * h * u * v + p * m.ginv12])
            F2 = np.array([lam * h * v, lam * h * u * v + p * m.ginv12,
                           lam * h * v * v + p * m.ginv22])
            Fn = F1 * n[0] + F2 * n[1]
            trans = np.array([Fn[0], A[0, 0] * Fn[1] + A[0, 1] * Fn[2],
                              A[1, 0] * Fn[1] + A[1, 1] * Fn[2]]) / dlds
            ref = f if side == 0 else -f
            worst = max(worst, np.max(np.abs(trans - ref))
                        / np.max(np.abs(ref)))
    ok = worst <= 1e-11
    print(f"[{'PASS' if ok else 'FAIL'}] two-sided panel-edge flux: "
          f"{worst:.3e} (tol 1e-11)")
    assert ok


# ----------------------------------------------------- unsteady references

@pytest.mark.slow
def test_lauter_accuracy_and_order():
    r16 = _cached("lauter_K2_N16_1d", lambda: _run_case("lauter", 2, 16, 1.0))
    r32 = _cached("lauter_K2_N32_1d", lambda: _run_case("lauter", 2, 32, 1.0))
    order = np.log2(r16["l2_h"] / r32["l2_h"])
    ok = r16["l2_h"] < 1e-3 and order >= 2.5
    print(f"[{'PASS' if ok else 'FAIL'}] unsteady zonal flow: l2(h)@N16 = "
          f"{r16['l2_h']:.3e} (tol 1e-3), order N16->32 = {order:.3f} "
          f"(min 2.5)")
    assert ok


@pytest.mark.slow
def test_deform_stability_and_refinement():
    r16 = _cached("deform_K2_N16_1d", lambda: _run_case("deform", 2, 16, 1.0))
    r32 = _cached("deform_K2_N32_1d", lambda: _run_case("deform", 2, 32, 1.0))
    ok = r16["min_h"] > 0 and r32["min_h"] > 0 \
        and r32["linf_h"] < r16["linf_h"]
    print(f"[{'PASS' if ok else 'FAIL'}] forced deformational flow: "
          f"linf(h) {r16['linf_h']:.3e} -> {r32['linf_h']:.3e} under "
          f"refinement, min h > 0")
    assert ok


# ------------------------------------------------------------- long runs

@pytest.mark.slow
def test_longrun_mountain_flow():
    out = _cached("w5_K2_N16_15d", lambda: _run_case("w5", 2, 16, 15.0))
    ok = out["min_h"] > 0 and out["energy_drift"] <= 1e-4
    print(f"[{'PASS' if ok else 'FAIL'}] mountain flow 15 days "
          f"(K=2, N=16): min h = {out['min_h']:.1f} m, energy drift = "
          f"{out['energy_drift']:.3e} (tol 1e-4), mass drift = "
          f"{out['mass_drift']:.1e}")
    assert ok


@pytest.mark.slow
def test_longrun_rossby_haurwitz():
    out = _cached("rh4_K2_N24_7d", lambda: _run_case("rh4", 2, 24, 7.0))
    ok = out["min_h"] > 0 and out["energy_drift"] <= 1e-4
    print(f"[{'PASS' if ok else 'FAIL'}] Rossby-Haurwitz wave 7 days "
          f"(K=2, N=24): min h = {out['min_h']:.1f} m, energy drift = "
          f"{out['energy_drift']:.3e} (tol 1e-4), mass drift = "
          f"{out['mass_drift']:.1e}")
    assert ok


# ------------------------------------------------------ baseline harness

@pytest.mark.slow
def test_baseline_comparison(w2_table):
    leg = w2_table[(1, 16)]["l2_h"]
    base = _cached("w2_K1_N16_3d_baseline",
                   lambda: _run_case("w2", 1, 16, 3.0, flux="baseline"))
    ratio = leg / base["l2_h"]
    ok = ratio <= 2.0
    print(f"[{'PASS' if ok else 'FAIL'}] flux comparison W2 K=1 N=16: "
          f"l2(h) leg = {leg:.3e}, baseline = {base['l2_h']:.3e}, "
          f"ratio = {ratio:.3f} (max 2.0)")
    assert ok
