"""The approximate local evolution operator and its closed-form integrals.

Given one-sided traces V*_i on the sectors of the bicharacteristic-cone
base and the upstream trace V*_0, the operator returns the interface
state used by the DG flux.  All direction integrals over a sector
(theta_a, theta_b) are evaluated from closed-form antiderivatives in the
frame that diagonalizes the frozen inverse metric; the five primitive
antiderivatives are written in branch-free arcsin/arcsinh/arctan forms
that stay accurate through the isotropic limit ew1 -> ew2.

The velocity components of the operator are defined implicitly; the 2x2
linear system they satisfy depends only on the frozen metric, so its
inverse is precomputed per node (`OperatorGeometry`).
"""

from dataclasses import dataclass

import numpy as np

from .errors import PoleSingularity, SingularSystem
from .sectors import DirMetric

TWO_PI = 2.0 * np.pi
_SERIES_EPS = 1.0e-5


@dataclass
class MetricEigen:
    """Eigenvalues of the inverse metric and the diagonalizing rotation.

    Q(phiG)^T diag(lam1, lam2) Q(phiG) equals the inverse metric, with
    Q a rotation by phiG and lam1 >= lam2 > 0.
    """

    lam1: np.ndarray
    lam2: np.ndarray
    phiG: np.ndarray


def metric_eigen(met: DirMetric):
    g11 = np.asarray(met.g11, dtype=float)
    g12 = np.asarray(met.g12, dtype=float)
    g22 = np.asarray(met.g22, dtype=float)
    half = 0.5 * (g11 + g22)
    r = np.sqrt(0.25 * (g11 - g22) ** 2 + g12 * g12)
    phi0 = 0.5 * np.arctan2(2.0 * g12, g11 - g22)
    return MetricEigen(lam1=half + r, lam2=half - r, phiG=-phi0)


def _atan_over(e, w):
    """arctan(e*w)/e, stable for e -> 0 (w bounded)."""
    z = e * w
    small = np.abs(z) < 1.0e-4
    zs = np.where(small, z, 0.0)
    with np.errstate(all="ignore"):
        direct = np.arctan(z) / np.where(small, 1.0, e)
    series = w * (1.0 - zs * zs / 3.0 + zs ** 4 / 5.0)
    return np.where(small, series, direct)


def _asin_over_sqrt(e, s):
    """arcsin(sqrt(e)*s)/sqrt(e), stable for e -> 0 (|s| <= 1)."""
    se = np.sqrt(e)
    small = se * np.abs(s) < 1.0e-4
    with np.errstate(all="ignore"):
        direct = np.arcsin(np.clip(se * s, -1.0, 1.0)) / np.where(small, 1.0, se)
    es2 = np.where(small, e * s * s, 0.0)
    series = s * (1.0 + es2 / 6.0 + 3.0 * es2 * es2 / 40.0)
    return np.where(small, series, direct)


def _asinh_over_sqrt(e, c):
    """arcsinh(sqrt(e)*c)/sqrt(e), stable for e -> 0 (|c| <= 1)."""
    se = np.sqrt(e)
    small = se * np.abs(c) < 1.0e-4
    with np.errstate(all="ignore"):
        direct = np.arcsinh(se * c) / np.where(small, 1.0, se)
    ec2 = np.where(small, e * c * c, 0.0)
    series = c * (1.0 - ec2 / 6.0 + 3.0 * ec2 * ec2 / 40.0)
    return np.where(small, series, direct)


def primitive_antiderivatives(theta, ew1, ew2):
    """The five primitives at theta in the diagonal frame.

    Returns [Tc, Ts, Tcc, Tsc, Tss] with
      Tc'  = cos/K',  Ts'  = sin/K',
      Tcc' = cos^2/K'^2,  Tsc' = sin cos/K'^2,  Tss' = sin^2/K'^2,
    K'^2 = ew1 cos^2 + ew2 sin^2.  Continuous in theta on all of R and
    uniformly accurate through the isotropic limit: the secular parts are
    arranged so that the anisotropy eps = (ew1-ew2)/ew1 factors out
    exactly instead of being divided back in.
    """
    ew1 = np.asarray(ew1, dtype=float)
    ew2 = np.asarray(ew2, dtype=float)
    eps = (ew1 - ew2) / ew1
    q = np.sqrt(ew2 / ew1)
    return _primitives_cached(theta, ew1, ew2, eps, q, 1.0 + q,
                              np.sqrt(ew1), np.sqrt(ew2))


def _primitives_cached(theta, ew1, ew2, eps, q, opq, sq1, sq2):
    theta = np.asarray(theta, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cc, ss, sc = ct * ct, st * st, st * ct

    # delta(theta) = arctan((q-1) sc / (cc + q ss)) is the periodic part of
    # the unwrapped arctan antiderivative of 1/K'^2; delta/eps stays O(1)
    w = -sc / (opq * (cc + q * ss))
    delta_over_eps = _atan_over(eps, w)

    Tcc = (theta / opq - q * delta_over_eps) / ew1
    Tss = (theta / opq + delta_over_eps) / (q * ew1)

    small = eps < 1.0e-12
    with np.errstate(all="ignore"):
        tsc_exact = np.log1p(-eps * ss) / (-2.0 * ew1 * np.where(small, 1.0, eps))
    tsc_series = ss * (1.0 + 0.5 * eps * ss) / (2.0 * ew1)
    Tsc = np.where(small, tsc_series, tsc_exact)

    Tc = _asin_over_sqrt(eps, st) / sq1
    m2 = eps * ew1 / ew2
    Ts = -_asinh_over_sqrt(m2, ct) / sq2

    return np.stack([Tc, Ts, Tcc, Tsc, Tss], axis=-1)


class OperatorGeometry:
    """Frozen-metric quantities of the evolution operator at a batch of nodes.

    Everything here depends only on the (contravariant) metric, so for a
    fixed mesh it is computed once and reused every stage.
    """

    def __init__(self, g11, g12, g22):
        self.g11 = np.atleast_1d(np.asarray(g11, dtype=float))
        self.g12 = np.atleast_1d(np.asarray(g12, dtype=float))
        self.g22 = np.atleast_1d(np.asarray(g22, dtype=float))
        det_inv = self.g11 * self.g22 - self.g12 * self.g12
        self.lam2 = 1.0 / det_inv                      # det(G)
        self.cov11 = self.g22 * self.lam2
        self.cov12 = -self.g12 * self.lam2
        self.cov22 = self.g11 * self.lam2
        eig = metric_eigen(DirMetric(self.g11, self.g12, self.g22))
        self.ew1, self.ew2, self.phiG = eig.lam1, eig.lam2, eig.phiG
        phi0 = -self.phiG
        self.cos_p, self.sin_p = np.cos(phi0), np.sin(phi0)
        self.cos2p, self.sin2p = np.cos(2 * phi0), np.sin(2 * phi0)
        self._eps = (self.ew1 - self.ew2) / self.ew1
        self._q = np.sqrt(self.ew2 / self.ew1)
        self._opq = 1.0 + self._q
        self._sq1 = np.sqrt(self.ew1)
        self._sq2 = np.sqrt(self.ew2)

        J = self.j_constants()
        (self.J1, self.J2, self.J3, self.J4, self.J5, self.J6, self.J7) = J
        self.a_uu = (self.cov12 * self.J1 - self.cov11 * self.J2) / self.lam2
        self.a_uv = (self.cov22 * self.J1 - self.cov12 * self.J2) / self.lam2
        self.a_vu = (self.cov11 * self.J1 - self.cov12 * self.J3) / self.lam2
        self.a_vv = (self.cov12 * self.J1 - self.cov22 * self.J3) / self.lam2
        m11 = 1.0 + self.a_uu
        m12 = self.a_uv
        m21 = self.a_vu
        m22 = 1.0 + self.a_vv
        self.det = m11 * m22 - m12 * m21
        if np.any(np.abs(self.det) < 1.0e-14):
            raise SingularSystem("degenerate velocity system in evolution operator")
        self.inv11 = m22 / self.det
        self.inv12 = -m12 / self.det
        self.inv21 = -m21 / self.det
        self.inv22 = m11 / self.det

    def primitives(self, theta):
        """Primitive antiderivative bundle at angles theta, shape (..., 5)."""
        phi0 = _expand(-self.phiG, theta)
        return _primitives_cached(theta - phi0,
                                  _expand(self.ew1, theta),
                                  _expand(self.ew2, theta),
                                  _expand(self._eps, theta),
                                  _expand(self._q, theta),
                                  _expand(self._opq, theta),
                                  _expand(self._sq1, theta),
                                  _expand(self._sq2, theta))

    def sector_integrals(self, theta_a, theta_b):
        """The eight direction integrals over (theta_a, theta_b).

        Returns dict with Ic, Is, IGc, IGs, IGcc, IGcs, IGsc, IGss.
        """
        both = self.primitives(np.concatenate([theta_a, theta_b], axis=-1))
        nb = theta_a.shape[-1]
        d = both[..., nb:, :] - both[..., :nb, :]
        dTc, dTs, dTcc, dTsc, dTss = (d[..., i] for i in range(5))
        cp, sp = _expand(self.cos_p, dTc), _expand(self.sin_p, dTc)
        c2p, s2p = _expand(self.cos2p, dTc), _expand(self.sin2p, dTc)
        P1 = cp * dTc - sp * dTs
        P2 = sp * dTc + cp * dTs
        P3 = cp * cp * dTcc + sp * sp * dTss - s2p * dTsc
        P5 = sp * sp * dTcc + cp * cp * dTss + s2p * dTsc
        P4 = c2p * dTsc + 0.5 * s2p * (dTcc - dTss)
        g11 = _expand(self.g11, dTc)
        g12 = _expand(self.g12, dTc)
        g22 = _expand(self.g22, dTc)
        return {
            "Ic": P1, "Is": P2,
            "IGc": g11 * P1 + g12 * P2,
            "IGs": g12 * P1 + g22 * P2,
            "IGcc": g11 * P3 + g12 * P4,
            "IGcs": g11 * P4 + g12 * P5,
            "IGsc": g12 * P3 + g22 * P4,
            "IGss": g12 * P4 + g22 * P5,
        }

    def phi_jump_values(self, theta):
        """phi_1..phi_6 potentials at angles theta, shape (..., 6)."""
        ct, st = np.cos(theta), np.sin(theta)
        g11 = _expand(self.g11, ct)
        g12 = _expand(self.g12, ct)
        g22 = _expand(self.g22, ct)
        K = np.sqrt(g11 * ct * ct + 2.0 * g12 * st * ct + g22 * st * st)
        pc = g11 * ct + g12 * st
        ps = g12 * ct + g22 * st
        out = np.empty(np.shape(ct) + (6,))
        out[..., 0] = K * ps
        out[..., 1] = K * pc
        out[..., 2] = pc * ps
        out[..., 3] = pc * pc
        out[..., 4] = ps * ps
        out[..., 5] = out[..., 2]
        return out

    def j_constants(self):
        """J1..J7 as full-circle averages (stable for any metric)."""
        d = self.primitives(np.full_like(self.g11, TWO_PI)) - \
            self.primitives(np.zeros_like(self.g11))
        dTc, dTs, dTcc, dTsc, dTss = (d[..., i] for i in range(5))
        P3 = self.cos_p ** 2 * dTcc + self.sin_p ** 2 * dTss - self.sin2p * dTsc
        P5 = self.sin_p ** 2 * dTcc + self.cos_p ** 2 * dTss + self.sin2p * dTsc
        P4 = self.cos2p * dTsc + 0.5 * self.sin2p * (dTcc - dTss)
        J1 = P4 / TWO_PI
        J2 = P5 / TWO_PI
        J3 = P3 / TWO_PI
        J4 = self.g11 * J1 + self.g12 * J2
        J5 = self.g11 * J3 + self.g12 * J1
        J6 = self.g12 * J1 + self.g22 * J2
        J7 = self.g12 * J3 + self.g22 * J1
        return J1, J2, J3, J4, J5, J6, J7


def _expand(a, like):
    """Append trailing axes of `a` to broadcast against `like`."""
    a = np.asarray(a)
    extra = np.ndim(like) - np.ndim(a)
    if extra <= 0:
        return a
    return a.reshape(a.shape + (1,) * extra)


def j_constants_closed(met: DirMetric, lam=None):
    """Closed forms of J1..J3 (valid away from isotropic points)."""
    g11 = np.asarray(met.g11, dtype=float)
    g12 = np.asarray(met.g12, dtype=float)
    g22 = np.asarray(met.g22, dtype=float)
    if lam is None:
        lam = 1.0 / np.sqrt(g11 * g22 - g12 * g12)
    H = (g11 - g22) ** 2 + 4.0 * g12 * g12
    iso = H < 1.0e-12 * (g11 + g22) ** 2
    Hs = np.where(iso, 1.0, H)
    J1 = np.where(iso, 0.0, g12 * (2.0 - (g11 + g22) * lam) / Hs)
    J2 = np.where(iso, 1.0 / (g11 + g22),
                  ((g11 * g11 - g11 * g22 + 2.0 * g12 * g12) * lam + g22 - g11) / Hs)
    J3 = np.where(iso, 1.0 / (g11 + g22),
                  ((g22 * g22 - g11 * g22 + 2.0 * g12 * g12) * lam + g11 - g22) / Hs)
    return J1, J2, J3, H


def leg_apply(geom: OperatorGeometry, angles, traces, v0, tilde, g):
    """Apply the local evolution operator on a batch of nodes.

    angles: (n, Nhat) sorted ascending in [0, 2pi)
    traces: (n, Nhat, 3) primitive one-sided limits per sector, sector i
            spanning (angles[i], angles[i+1]) cyclically
    v0:     (n, 3) upstream trace along the advective bicharacteristic
    tilde:  (n, 3) frozen linearization state
    Returns (n, 3) evolved primitive states.
    """
    angles = np.asarray(angles, dtype=float)
    traces = np.asarray(traces, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    tilde = np.asarray(tilde, dtype=float)
    n, nhat = angles.shape

    c = np.sqrt(g * tilde[:, 0])
    th_a = angles
    th_b = np.concatenate([angles[:, 1:], angles[:, :1] + TWO_PI], axis=1)

    ints = geom.sector_integrals(th_a, th_b)
    phia = geom.phi_jump_values(th_a)
    phib = geom.phi_jump_values(th_b)
    dphi = phib - phia

    hs = traces[:, :, 0]
    us = traces[:, :, 1]
    vs = traces[:, :, 2]

    pi0 = np.sum(us * dphi[:, :, 0] - vs * dphi[:, :, 1], axis=1)
    pic = np.sum(us * dphi[:, :, 2] - vs * dphi[:, :, 3], axis=1)
    pis = np.sum(us * dphi[:, :, 4] - vs * dphi[:, :, 5], axis=1)

    dth = th_b - th_a
    h_new = (np.sum(hs * dth - (c / g)[:, None] * (us * ints["Ic"] + vs * ints["Is"]),
                    axis=1)
             - (c * geom.lam2 / g) * pi0) / TWO_PI

    gc_ = (g / c)[:, None]
    A_u = (np.sum(-gc_ * hs * ints["IGc"] + us * ints["IGcc"] + vs * ints["IGcs"],
                  axis=1) / TWO_PI
           + v0[:, 1] * geom.J6 - v0[:, 2] * geom.J4
           + geom.lam2 * pic / TWO_PI)
    A_v = (np.sum(-gc_ * hs * ints["IGs"] + us * ints["IGsc"] + vs * ints["IGss"],
                  axis=1) / TWO_PI
           - (v0[:, 1] * geom.J7 - v0[:, 2] * geom.J5)
           + geom.lam2 * pis / TWO_PI)

    rhs_u = A_u + geom.a_uu * v0[:, 1] + geom.a_uv * v0[:, 2]
    rhs_v = A_v + geom.a_vu * v0[:, 1] + geom.a_vv * v0[:, 2]
    u_new = geom.inv11 * rhs_u + geom.inv12 * rhs_v
    v_new = geom.inv21 * rhs_u + geom.inv22 * rhs_v
    return np.stack([h_new, u_new, v_new], axis=-1)


def leg_operator(traces, angles, v0, tilde, met: DirMetric, g):
    """Single-node evolution operator in reference coordinates."""
    geom = OperatorGeometry(met.g11, met.g12, met.g22)
    out = leg_apply(geom, np.asarray(angles, dtype=float)[None, :],
                    np.asarray(traces, dtype=float)[None, :, :],
                    np.asarray(v0, dtype=float)[None, :],
                    np.asarray(tilde, dtype=float)[None, :], g)
    return out[0]


def leg_operator_latlon(traces, angles, v0, tilde, eta0, g):
    """Single-node operator in lat/lon variables (h, u_s, v_s cos eta0)."""
    if abs(eta0) > np.pi / 2.0 - 1.0e-6:
        raise PoleSingularity("lat/lon evolution operator too close to a pole")
    met = DirMetric(g11=np.array([1.0]), g12=np.array([0.0]),
                    g22=np.array([np.cos(eta0) ** 2]))
    return leg_operator(traces, angles, v0, tilde, met, g)


def edge_physical_flux(state, n_s, g):
    """Physical flux through a lat/lon unit normal per meter of edge.

    state = (h, u_s, v_s) in meters and m/s; n_s = (east, north)
    components of the unit normal.  Both panels sharing a cubed-sphere
    edge evaluate this same function on the same evolved state, which is
    what makes the cross-panel flux conservative.
    """
    h, us, vs = state
    n1, n2 = n_s
    un = us * n1 + vs * n2
    p = 0.5 * g * h * h
    return np.stack([h * un, h * us * un + p * n1, h * vs * un + p * n2], axis=-1)
