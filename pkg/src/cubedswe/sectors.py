"""Bicharacteristic directions and sector-angle solvers.

The slow bicharacteristic field of the locally linearized system is

    d1(theta) = u~ - c~ Gc(theta),   d2(theta) = v~ - c~ Gs(theta)

with d/dtheta d1 = c~ sin(theta) / (det(G)~ K^3) and the mirrored cosine
for d2.  A cell edge through a quadrature node cuts the cone base where
the retreat direction (-d1, -d2) is parallel to the edge tangent t, i.e.
at the roots of

    F(theta) = t_x d2(theta) - t_y d1(theta).

F has one minimum and one maximum per period, so it carries either two
simple roots (one in each monotone half) or none; a safeguarded Newton
iteration inside those brackets is total.  All solvers are vectorized
over batches of nodes, each with its own frozen state and metric.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NewtonDiverged, NonPositiveDepth

TWO_PI = 2.0 * np.pi
MIN_ANGLE_SEP = 1.0e-10
_COND_MARGIN = 1.0e-12
_NEWTON_TOL = 1.0e-13
_MAX_ITER = 50


@dataclass
class SectorPartition:
    """Sorted cut angles in [0, 2pi) splitting the cone base."""

    angles: np.ndarray
    nhat: int


@dataclass
class DirMetric:
    """Contravariant metric entries plus det(G) at the frozen point."""

    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray

    @property
    def lam2(self):
        return 1.0 / (self.g11 * self.g22 - self.g12 * self.g12)

    @property
    def eigmax(self):
        half = 0.5 * (self.g11 + self.g22)
        r = np.sqrt(0.25 * (self.g11 - self.g22) ** 2 + self.g12 ** 2)
        return half + r


def directions(h, u, v, met: DirMetric, theta, g):
    """d1^(l), d2^(l) for l = 1, 2, 3 at angles theta."""
    if np.any(np.asarray(h) <= 0.0):
        raise NonPositiveDepth("directions need h > 0")
    c = np.sqrt(g * h)
    ct, st = np.cos(theta), np.sin(theta)
    K = np.sqrt(met.g11 * ct * ct + 2.0 * met.g12 * st * ct + met.g22 * st * st)
    Gc = (met.g11 * ct + met.g12 * st) / K
    Gs = (met.g12 * ct + met.g22 * st) / K
    d1 = (u - c * Gc, u + 0.0 * ct, u + c * Gc)
    d2 = (v - c * Gs, v + 0.0 * ct, v + c * Gs)
    return d1, d2


def _f_and_deriv(theta, tx, ty, u, v, c, met: DirMetric):
    ct, st = np.cos(theta), np.sin(theta)
    K2 = met.g11 * ct * ct + 2.0 * met.g12 * st * ct + met.g22 * st * st
    K = np.sqrt(K2)
    Gc = (met.g11 * ct + met.g12 * st) / K
    Gs = (met.g12 * ct + met.g22 * st) / K
    F = tx * (v - c * Gs) - ty * (u - c * Gc)
    dF = -(c / (met.lam2 * K2 * K)) * (tx * ct + ty * st)
    return F, dF


def solve_family(tx, ty, u, v, c, met: DirMetric):
    """Cut angles of one edge family for a batch of nodes.

    tx, ty: edge tangent (normalized), one per node.  Returns
    (ok, th_a, th_b): ok marks nodes whose family condition holds, in
    which case th_a, th_b in [0, 2pi) are the two roots of F.
    """
    tx = np.asarray(tx, dtype=float)
    ty = np.asarray(ty, dtype=float)
    nrm = np.hypot(tx, ty)
    tx, ty = tx / nrm, ty / nrm
    th_min = np.arctan2(tx, -ty)
    th_max = th_min + np.pi

    f_min, _ = _f_and_deriv(th_min, tx, ty, u, v, c, met)
    f_max, _ = _f_and_deriv(th_max, tx, ty, u, v, c, met)
    scale = np.maximum(np.abs(f_min), np.abs(f_max))
    ok = (f_min < -_COND_MARGIN * scale) & (f_max > _COND_MARGIN * scale)

    # initial guess from the sinusoid model F ~ a - b cos(theta - th_min),
    # which is exact for isotropic metrics
    with np.errstate(all="ignore"):
        ratio = np.clip((f_max + f_min) / (f_max - f_min), -1.0, 1.0)
    ratio = np.where(ok, ratio, 0.0)
    off = np.arccos(ratio)
    # both roots as one batch: F rises through the first, falls through
    # the second, encoded by the sign flip on F
    n = tx.shape[0]
    two = lambda a, b: np.concatenate([a, b])
    rep = lambda a: np.concatenate([a, a])
    met2 = DirMetric(rep(met.g11), rep(met.g12), rep(met.g22))
    sgn = np.concatenate([np.ones(n), -np.ones(n)])
    th = _bracketed_root(two(th_min, th_max),
                         two(th_max, th_min + TWO_PI), sgn,
                         two(th_min + off, th_min + TWO_PI - off),
                         rep(tx), rep(ty), rep(u), rep(v), rep(c),
                         met2, rep(ok), rep(scale))
    return ok, np.mod(th[:n], TWO_PI), np.mod(th[n:], TWO_PI)


def _bracketed_root(lo0, hi0, sgn, th0, tx, ty, u, v, c, met, ok, scale):
    """Safeguarded Newton for the root of F in (lo0, hi0).

    sgn = +1 when F rises through the root, -1 when it falls.  Falls back
    to bisection whenever a Newton step leaves the bracket, so the
    iteration cannot diverge; NewtonDiverged signals only a failure to
    meet the tolerance, i.e. a genuinely bad state.
    """
    lo = np.array(lo0, dtype=float, copy=True)
    hi = np.array(hi0, dtype=float, copy=True)
    th = np.clip(th0, lo + 1.0e-12, hi - 1.0e-12)
    tol = _NEWTON_TOL * np.maximum(scale, 1.0e-300)
    done = ~ok
    for _ in range(_MAX_ITER):
        F, dF = _f_and_deriv(th, tx, ty, u, v, c, met)
        done = done | (np.abs(F) <= tol)
        if np.all(done):
            break
        below = (sgn * F) < 0.0
        lo = np.where(~done & below, th, lo)
        hi = np.where(~done & ~below, th, hi)
        with np.errstate(all="ignore"):
            step = F / dF
            cand = th - step
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        th = np.where(done, th, cand)
    else:
        F, _ = _f_and_deriv(th, tx, ty, u, v, c, met)
        if np.any(ok & (np.abs(F) > 1.0e3 * tol)):
            raise NewtonDiverged("sector-angle iteration failed to converge")
    return th


def assemble_partition(angles, min_sep=MIN_ANGLE_SEP):
    """Sort cut angles, drop near-duplicates, return a SectorPartition."""
    th = np.mod(np.asarray(angles, dtype=float), TWO_PI)
    th = np.sort(th)
    if th.size == 0:
        return SectorPartition(angles=np.array([0.0]), nhat=1)
    keep = [th[0]]
    for t in th[1:]:
        if t - keep[-1] >= min_sep:
            keep.append(t)
    # wrap-around duplicate
    if len(keep) > 1 and (keep[0] + TWO_PI) - keep[-1] < min_sep:
        keep.pop()
    return SectorPartition(angles=np.array(keep), nhat=len(keep))


def _tilde_speed(h, g):
    if np.any(np.asarray(h) <= 0.0):
        raise NonPositiveDepth("sector solver needs h > 0")
    return np.sqrt(g * h)


def _met1(met: DirMetric):
    return DirMetric(g11=np.atleast_1d(np.asarray(met.g11, dtype=float)),
                     g12=np.atleast_1d(np.asarray(met.g12, dtype=float)),
                     g22=np.atleast_1d(np.asarray(met.g22, dtype=float)))


def sector_angles_edge_interior(h, u, v, met: DirMetric, orientation, g):
    """Partition at an interior point of a cell edge.

    orientation 'y-edge' is an edge of constant y (cuts where d2 = 0),
    'x-edge' one of constant x (cuts where d1 = 0).
    """
    c = _tilde_speed(h, g)
    if orientation == "y-edge":
        tx, ty = 1.0, 0.0
    elif orientation == "x-edge":
        tx, ty = 0.0, 1.0
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    one = np.ones(1)
    ok, ta, tb = solve_family(tx * one, ty * one, u * one, v * one, c * one,
                              _met1(met))
    if not bool(ok[0]):
        return SectorPartition(angles=np.array([0.0]), nhat=1)
    return assemble_partition([ta[0], tb[0]])


def sector_angles_vertex(h, u, v, met: DirMetric, g):
    """Partition at a cell vertex interior to a panel (both line families)."""
    c = _tilde_speed(h, g)
    one = np.ones(1)
    met1 = _met1(met)
    angles = []
    for tx, ty in ((1.0, 0.0), (0.0, 1.0)):
        ok, ta, tb = solve_family(tx * one, ty * one, u * one, v * one,
                                  c * one, met1)
        if bool(ok[0]):
            angles.extend([ta[0], tb[0]])
    if not angles:
        return SectorPartition(angles=np.array([0.0]), nhat=1)
    return assemble_partition(angles)


def sector_angles_panel_boundary(h_s, u_s, w_s, eta0, tangents, g):
    """Partition at a panel-boundary node, in lat/lon variables.

    State is (h, u_s, v_s*cos(eta0)); the frozen metric inverse is
    diag(1, cos^2 eta0).  ``tangents`` is a list of (t_xi, t_eta, kind)
    describing the cell-edge curves through the node: kind 'through'
    keeps both roots of its family, kind 'half' only the root whose
    retreat direction leaves along the (oriented) tangent.  Half families
    contribute in pairs so the sector count stays even away from cube
    corners.
    """
    c = _tilde_speed(h_s, g)
    met = DirMetric(g11=np.ones(1), g12=np.zeros(1),
                    g22=np.full(1, np.cos(eta0) ** 2))
    one = np.ones(1)
    n_half = sum(1 for t in tangents if t[2] == "half")
    halves = []
    angles = []
    for t_xi, t_eta, kind in tangents:
        ok, ta, tb = solve_family(t_xi * one, t_eta * one, u_s * one, w_s * one,
                                  c * one, met)
        if not bool(ok[0]):
            continue
        if kind == "through":
            angles.extend([ta[0], tb[0]])
        else:
            picked = _pick_half_root(ta[0], tb[0], t_xi, t_eta, u_s, w_s, c, met)
            if picked is not None:
                halves.append(picked)
    if n_half != 3 and len(halves) < n_half:
        halves = []          # keep the count even off cube corners
    angles.extend(halves)
    if not angles:
        return SectorPartition(angles=np.array([0.0]), nhat=1)
    return assemble_partition(angles)


def _pick_half_root(ta, tb, t_xi, t_eta, u, w, c, met):
    """Root of the family whose retreat direction exits along +t."""
    for th in (ta, tb):
        ct, st = np.cos(th), np.sin(th)
        K = np.sqrt(met.g11 * ct * ct + 2.0 * met.g12 * st * ct
                    + met.g22 * st * st)
        d1 = u - c * (met.g11 * ct + met.g12 * st) / K
        d2 = w - c * (met.g12 * ct + met.g22 * st) / K
        if float(-d1[0] * t_xi - d2[0] * t_eta) > 0.0:
            return th
    return None
