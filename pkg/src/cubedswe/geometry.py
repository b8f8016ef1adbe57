"""Equiangular cubed-sphere charts, metric tensor and velocity conversions.

The sphere is covered by six panels.  Panels 1-4 ring the equator with
centers at longitudes 0, pi/2, pi, 3pi/2 (local x east, y north); panel 5
caps the north pole (its frame is panel 1's rotated onto the pole) and
panel 6 the south pole.  Each panel maps the reference square
[-pi/4, pi/4]^2 onto the sphere by central projection, so a panel is fully
described by an orthonormal triple (n, tx, ty):

    p(x, y) = (n + tan(x) tx + tan(y) ty) / rho,   rho^2 = 1 + tan^2x + tan^2y

All functions are pure and accept scalars or numpy arrays for x, y.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OutOfPanel

# panel -> (normal, x-tangent, y-tangent) of the cube face
_FRAMES = np.array([
    [[1, 0, 0], [0, 1, 0], [0, 0, 1]],     # panel 1, lon 0
    [[0, 1, 0], [-1, 0, 0], [0, 0, 1]],    # panel 2, lon pi/2
    [[-1, 0, 0], [0, -1, 0], [0, 0, 1]],   # panel 3, lon pi
    [[0, -1, 0], [1, 0, 0], [0, 0, 1]],    # panel 4, lon 3pi/2
    [[0, 0, 1], [0, 1, 0], [-1, 0, 0]],    # panel 5, north
    [[0, 0, -1], [0, 1, 0], [1, 0, 0]],    # panel 6, south
], dtype=float)

PANEL_HALF_WIDTH = np.pi / 4.0


def panel_frame(panel):
    """Orthonormal (normal, x-tangent, y-tangent) triple of a panel (1-6)."""
    return _FRAMES[panel - 1]


def panel_to_xyz(panel, x, y):
    """Unit sphere point of panel coordinates (x, y); shape (..., 3)."""
    n, tx, ty = panel_frame(panel)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = (n + np.tan(x)[..., None] * tx + np.tan(y)[..., None] * ty)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def xyz_to_sphere(p):
    """(lon, lat) of unit vectors p, lon in [-pi, pi).  lon(pole) = 0.

    The latitude comes from atan2 rather than arcsin, which stays fully
    conditioned next to the poles.
    """
    p = np.asarray(p, dtype=float)
    xi = np.arctan2(p[..., 1], p[..., 0])
    xi = np.where(xi >= np.pi, xi - 2.0 * np.pi, xi)
    eta = np.arctan2(p[..., 2], np.hypot(p[..., 0], p[..., 1]))
    return xi, eta


def panel_to_sphere(panel, x, y):
    """Map panel coordinates to global (lon, lat) in radians."""
    return xyz_to_sphere(panel_to_xyz(panel, x, y))


def sphere_to_xyz(xi, eta):
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    ce = np.cos(eta)
    return np.stack([ce * np.cos(xi), ce * np.sin(xi), np.sin(eta)], axis=-1)


def sphere_to_panel(xi, eta, panel, tol=1.0e-12):
    """Panel coordinates of (lon, lat) on the given panel.

    Points may overshoot the reference square by up to ``tol`` radians and
    are clamped back; anything further raises OutOfPanel.
    """
    p = sphere_to_xyz(xi, eta)
    n, tx, ty = panel_frame(panel)
    d = p @ n
    if np.any(d <= 0.0):
        raise OutOfPanel(f"point not in hemisphere of panel {panel}")
    x = np.arctan2(p @ tx, d)
    y = np.arctan2(p @ ty, d)
    lim = PANEL_HALF_WIDTH + tol
    if np.any(np.abs(x) > lim) or np.any(np.abs(y) > lim):
        raise OutOfPanel(f"point outside panel {panel} reference square")
    x = np.clip(x, -PANEL_HALF_WIDTH, PANEL_HALF_WIDTH)
    y = np.clip(y, -PANEL_HALF_WIDTH, PANEL_HALF_WIDTH)
    return x, y


def locate_panel(xi, eta):
    """Panel number (1-6) whose center is closest to the point (scalar)."""
    p = sphere_to_xyz(xi, eta)
    dots = _FRAMES[:, 0, :] @ p
    return int(np.argmax(dots)) + 1


@dataclass
class MetricData:
    """Covariant/contravariant metric, Jacobian and Christoffel symbols."""

    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    ginv11: np.ndarray
    ginv12: np.ndarray
    ginv22: np.ndarray
    lambda_jac: np.ndarray
    gamma1_11: np.ndarray
    gamma1_12: np.ndarray
    gamma2_12: np.ndarray
    gamma2_22: np.ndarray

    @property
    def christoffel(self):
        return {
            "gamma1_11": self.gamma1_11,
            "gamma1_12": self.gamma1_12,
            "gamma2_12": self.gamma2_12,
            "gamma2_22": self.gamma2_22,
        }


def metric_at(x, y, R):
    """Metric data at panel coordinates (x, y); identical on every panel."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tx, ty = np.tan(x), np.tan(y)
    cx2, cy2 = np.cos(x) ** 2, np.cos(y) ** 2
    rho2 = 1.0 + tx * tx + ty * ty
    fac = R * R / (rho2 * rho2 * cx2 * cy2)
    g11 = fac * (1.0 + tx * tx)
    g12 = -fac * tx * ty
    g22 = fac * (1.0 + ty * ty)
    lam = R * R / (rho2 ** 1.5 * cx2 * cy2)
    ginv11 = rho2 * cx2 / (R * R)
    ginv12 = tx * ty * rho2 * cx2 * cy2 / (R * R)
    ginv22 = rho2 * cy2 / (R * R)
    return MetricData(
        g11=g11, g12=g12, g22=g22,
        ginv11=ginv11, ginv12=ginv12, ginv22=ginv22,
        lambda_jac=lam,
        gamma1_11=2.0 * tx * ty * ty / rho2,
        gamma1_12=-ty / (rho2 * cy2),
        gamma2_12=-tx / (rho2 * cx2),
        gamma2_22=2.0 * tx * tx * ty / rho2,
    )


def covariant_basis(panel, x, y, R):
    """Embedded tangent vectors dr/dx, dr/dy (meters per radian), (..., 3)."""
    n, txv, tyv = panel_frame(panel)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tx, ty = np.tan(x), np.tan(y)
    sx2 = 1.0 + tx * tx
    sy2 = 1.0 + ty * ty
    v = n + tx[..., None] * txv + ty[..., None] * tyv
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    p = v / nv
    dv_dx = sx2[..., None] * txv
    dv_dy = sy2[..., None] * tyv
    # project out the radial component of the raw derivative
    drdx = (dv_dx - p * np.sum(p * dv_dx, axis=-1, keepdims=True)) / nv
    drdy = (dv_dy - p * np.sum(p * dv_dy, axis=-1, keepdims=True)) / nv
    return R * drdx, R * drdy


def east_north(xi, eta):
    """Unit east/north vectors of the global lat/lon frame, (..., 3)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    z = np.zeros(np.broadcast(xi, eta).shape)
    e_east = np.stack([-np.sin(xi), np.cos(xi), z], axis=-1)
    e_north = np.stack([-np.sin(eta) * np.cos(xi),
                        -np.sin(eta) * np.sin(xi),
                        np.cos(eta)], axis=-1)
    return e_east, e_north


@dataclass
class VelocityMatrix:
    """2x2 matrix mapping contravariant (u, v) to spherical (u_s, v_s)."""

    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray

    def apply(self, u, v):
        return self.a11 * u + self.a12 * v, self.a21 * u + self.a22 * v

    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a21

    def solve(self, us, vs):
        d = self.det()
        return (self.a22 * us - self.a12 * vs) / d, \
               (-self.a21 * us + self.a11 * vs) / d


def velocity_matrix_at(panel, x, y, R):
    """A with A (u,v)^T = (u_s, v_s)^T and A^T A = G.

    Singular only at the global poles (panel 5/6 centers); use the
    3-vector conversion helpers there.
    """
    drdx, drdy = covariant_basis(panel, x, y, R)
    xi, eta = panel_to_sphere(panel, x, y)
    e_east, e_north = east_north(xi, eta)
    return VelocityMatrix(
        a11=np.sum(e_east * drdx, axis=-1),
        a12=np.sum(e_east * drdy, axis=-1),
        a21=np.sum(e_north * drdx, axis=-1),
        a22=np.sum(e_north * drdy, axis=-1),
    )


def contravariant_from_spherical(panel, x, y, R, us, vs):
    """(u, v) in rad/s from lat/lon components (m/s); pole-safe."""
    xi, eta = panel_to_sphere(panel, x, y)
    e_east, e_north = east_north(xi, eta)
    vel = us[..., None] * e_east + vs[..., None] * e_north
    drdx, drdy = covariant_basis(panel, x, y, R)
    uhat = np.sum(vel * drdx, axis=-1)
    vhat = np.sum(vel * drdy, axis=-1)
    m = metric_at(x, y, R)
    det = m.g11 * m.g22 - m.g12 * m.g12
    u = (m.g22 * uhat - m.g12 * vhat) / det
    v = (-m.g12 * uhat + m.g11 * vhat) / det
    return u, v


def spherical_from_contravariant(panel, x, y, R, u, v):
    """(u_s, v_s) in m/s from contravariant components (rad/s)."""
    drdx, drdy = covariant_basis(panel, x, y, R)
    vel = u[..., None] * drdx + v[..., None] * drdy
    xi, eta = panel_to_sphere(panel, x, y)
    e_east, e_north = east_north(xi, eta)
    return np.sum(vel * e_east, axis=-1), np.sum(vel * e_north, axis=-1)


def chart_jacobian(panel, x, y):
    """d(lon, lat)/d(x, y) of the panel chart, four arrays.

    Rows are (dxi/dx, dxi/dy) and (deta/dx, deta/dy).  Undefined at the
    poles (cos eta = 0).
    """
    A = velocity_matrix_at(panel, x, y, 1.0)
    xi, eta = panel_to_sphere(panel, x, y)
    ce = np.cos(eta)
    return A.a11 / ce, A.a12 / ce, A.a21, A.a22
