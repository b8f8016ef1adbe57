"""Self-contained property checks behind the `verify` CLI subcommand.

Each check returns (name, worst_value, tolerance); the CLI prints one
PASS/FAIL line per entry.  These are quick versions of the full pytest
property suites, runnable from an installed package.
"""

import numpy as np
from scipy.integrate import quad

from . import core, evolution, geometry, sectors
from .cases import make_case
from .constants import EARTH
from .dg import SpatialOperator, l2_project
from .diagnostics import freestream_residual
from .mesh import Mesh


def check_geometry_roundtrip(rng):
    worst = 0.0
    for p in range(1, 7):
        x = rng.uniform(-np.pi / 4, np.pi / 4, 2000)
        y = rng.uniform(-np.pi / 4, np.pi / 4, 2000)
        xi, eta = geometry.panel_to_sphere(p, x, y)
        x2, y2 = geometry.sphere_to_panel(xi, eta, p)
        worst = max(worst, np.max(np.abs(x2 - x)), np.max(np.abs(y2 - y)))
    return "geometry round trip", worst, 1.0e-12


def check_velocity_matrix(rng):
    R = EARTH.R
    worst = 0.0
    for p in range(1, 7):
        x = rng.uniform(-np.pi / 4, np.pi / 4, 500)
        y = rng.uniform(-np.pi / 4, np.pi / 4, 500)
        A = geometry.velocity_matrix_at(p, x, y, R)
        m = geometry.metric_at(x, y, R)
        err = max(np.max(np.abs(A.a11 * A.a11 + A.a21 * A.a21 - m.g11)),
                  np.max(np.abs(A.a11 * A.a12 + A.a21 * A.a22 - m.g12)),
                  np.max(np.abs(A.a12 * A.a12 + A.a22 * A.a22 - m.g22)))
        worst = max(worst, err / (R * R))
    return "A^T A = G", worst, 1.0e-10


def check_eigensystem(rng):
    g, R = EARTH.g, EARTH.R
    worst = 0.0
    for _ in range(300):
        x, y = rng.uniform(-0.78, 0.78, 2)
        m = geometry.metric_at(x, y, R)
        es = core.eigensystem(rng.uniform(100, 9000), rng.normal(0, 1e-5),
                              rng.normal(0, 1e-5), m,
                              rng.uniform(0, 2 * np.pi), g)
        scale = np.abs(es.Lmat) @ np.abs(es.Rmat) + 1.0
        worst = max(worst, np.max(np.abs(es.Lmat @ es.Rmat - np.eye(3))
                                  / scale))
    return "eigensystem L R = I", worst, 1.0e-12


def check_j_constants(rng):
    worst = 0.0
    for _ in range(15):
        x, y = rng.uniform(-0.78, 0.78, 2)
        m = geometry.metric_at(x, y, 1.0)
        geom = evolution.OperatorGeometry(m.ginv11, m.ginv12, m.ginv22)
        K2 = lambda t: (m.ginv11 * np.cos(t) ** 2
                        + 2 * m.ginv12 * np.sin(t) * np.cos(t)
                        + m.ginv22 * np.sin(t) ** 2)
        J2q = quad(lambda t: np.sin(t) ** 2 / K2(t), 0, 2 * np.pi,
                   limit=200)[0] / (2 * np.pi)
        worst = max(worst, abs(geom.J2[0] - J2q),
                    abs(geom.J5[0] + geom.J6[0] - 1.0))
    return "J constants vs quadrature", worst, 1.0e-10


def check_antiderivatives(rng):
    worst = 0.0
    for _ in range(200):
        e = 10.0 ** rng.uniform(-14, -0.3)
        geom = evolution.OperatorGeometry(1.0, 0.0, 1.0 - e)
        th = rng.uniform(-1, 7)
        d = 1e-4
        fd = (geom.primitives(np.array([th + d]))[0]
              - geom.primitives(np.array([th - d]))[0]) / (2 * d)
        ct, st = np.cos(th), np.sin(th)
        K2 = ct * ct + (1 - e) * st * st
        K = np.sqrt(K2)
        exact = np.array([ct / K, st / K, ct * ct / K2,
                          st * ct / K2, st * st / K2])
        worst = max(worst, np.max(np.abs(fd - exact)
                                  / np.maximum(np.abs(exact), 1.0)))
    return "antiderivative d/dtheta", worst, 1.0e-8


def check_operator_consistency(rng):
    g = EARTH.g
    worst = 0.0
    for _ in range(150):
        x, y = rng.uniform(-0.78, 0.78, 2)
        m = geometry.metric_at(x, y, EARTH.R)
        met = sectors.DirMetric(np.atleast_1d(m.ginv11),
                                np.atleast_1d(m.ginv12),
                                np.atleast_1d(m.ginv22))
        nh = int(rng.integers(1, 5))
        ang = np.sort(rng.uniform(0, 2 * np.pi, nh))
        st = np.array([rng.uniform(100, 8000), rng.normal(0, 1e-5),
                       rng.normal(0, 1e-5)])
        out = evolution.leg_operator(np.tile(st, (nh, 1)), ang, st, st, met, g)
        worst = max(worst, np.max(np.abs(out - st)
                                  / np.array([st[0], 1e-5, 1e-5])))
    for _ in range(150):
        eta0 = rng.uniform(-0.8, 0.8)
        nh = int(rng.integers(1, 5))
        ang = np.sort(rng.uniform(0, 2 * np.pi, nh))
        st = np.array([rng.uniform(100, 8000), rng.normal(0, 30),
                       rng.normal(0, 30)])
        out = evolution.leg_operator_latlon(np.tile(st, (nh, 1)), ang, st,
                                            st, eta0, g)
        worst = max(worst, np.max(np.abs(out - st)
                                  / np.array([st[0], 1.0, 1.0])))
    return "evolution operator consistency", worst, 1.0e-12


def check_freestream():
    worst = 0.0
    for mode in ("leg", "baseline"):
        mesh = Mesh(6, 1, EARTH.R)
        op = SpatialOperator(mesh, EARTH, case=None, flux_mode=mode)
        worst = max(worst, freestream_residual(op))
    return "free-stream residual", worst, 1.0e-11


def check_mass_conservation():
    mesh = Mesh(6, 2, EARTH.R)
    case = make_case("w2", EARTH)
    op = SpatialOperator(mesh, EARTH, case=case, flux_mode="leg")
    fld = l2_project(mesh, case.initial)
    r = op.residual(fld.coef, 0.0)
    hdot = np.matmul(r[:, 0, :], mesh.Vb)
    rate = np.sum(mesh.area * np.einsum("cq,cq,q->c", mesh.vol_lam, hdot,
                                        mesh.quad.vol_w))
    h = np.matmul(fld.coef[:, 0, :], mesh.Vb)
    tot = np.sum(mesh.area * np.einsum("cq,cq,q->c", mesh.vol_lam, h,
                                       mesh.quad.vol_w))
    return "instantaneous mass conservation", abs(rate / tot), 1.0e-12


def check_edge_flux_two_sided(rng):
    """Transformed reference fluxes of both panels match the shared one."""
    g = EARTH.g
    mesh = Mesh(5, 1, EARTH.R)
    worst = 0.0
    for e in rng.integers(0, mesh.nEb, 12):
        for qn in range(mesh.q):
            h = rng.uniform(500, 8000)
            us, vs = rng.normal(0, 50, 2)
            f = evolution.edge_physical_flux(
                (h, us, vs), (mesh.be_nhat[e, qn, 0], mesh.be_nhat[e, qn, 1]),
                g)
            for side, A, dlds, sgn in (
                    (0, mesh.be_AA[e, qn], mesh.be_dlds[e, qn, 0], 1.0),
                    (1, mesh.be_AB[e, qn], mesh.be_dlds[e, qn, 1], -1.0)):
                Ainv = np.linalg.inv(A)
                u, v = Ainv @ np.array([us, vs])
                x = (mesh.be_xA, mesh.be_xB)[side][e, qn]
                y = (mesh.be_yA, mesh.be_yB)[side][e, qn]
                m = geometry.metric_at(x, y, mesh.R)
                lam = m.lambda_jac
                U = np.array([lam * h, lam * h * u, lam * h * v])
                p = 0.5 * g * h * h * lam
                F1 = np.array([U[1], U[1] * u + p * m.ginv11,
                               U[2] * u + p * m.ginv12])
                F2 = np.array([U[2], U[1] * v + p * m.ginv12,
                               U[2] * v + p * m.ginv22])
                pan = (mesh.be_pA, mesh.be_pB)[side][e]
                side_nm = (mesh.be_sideA, mesh.be_sideB)[side][e]
                n = {"B": (0, -1), "T": (0, 1),
                     "L": (-1, 0), "R": (1, 0)}[side_nm]
                Fn = F1 * n[0] + F2 * n[1]
                trans = np.array([Fn[0],
                                  A[0, 0] * Fn[1] + A[0, 1] * Fn[2],
                                  A[1, 0] * Fn[1] + A[1, 1] * Fn[2]])
                ref = sgn * f * dlds
                worst = max(worst, np.max(np.abs(trans - ref))
                            / max(np.max(np.abs(ref)), 1.0))
    return "two-sided panel-edge flux", worst, 1.0e-11


def run_all(seed=0):
    rng = np.random.default_rng(seed)
    checks = [
        check_geometry_roundtrip(rng),
        check_velocity_matrix(rng),
        check_eigensystem(rng),
        check_j_constants(rng),
        check_antiderivatives(rng),
        check_operator_consistency(rng),
        check_freestream(),
        check_mass_conservation(),
        check_edge_flux_two_sided(rng),
    ]
    ok = True
    for name, val, tol in checks:
        good = val <= tol
        ok = ok and good
        print(f"[{'PASS' if good else 'FAIL'}] {name}: {val:.3e} "
              f"(tol {tol:.1e})")
    return ok
