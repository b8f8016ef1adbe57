"""Shallow water state vectors, fluxes, sources and the eigensystem.

Everything is written for the reference-coordinate form of the equations:
conservative state U = (Lam*h, Lam*h*u, Lam*h*v) with contravariant
velocities in rad/s, flux pair F1/F2, geometric + Coriolis + topography
source S0, and the direction-resolved characteristic decomposition of
A1*cos(theta) + A2*sin(theta).
"""

import numpy as np

from .errors import NonPositiveDepth
from .geometry import MetricData

__all__ = [
    "prim_to_cons", "cons_to_prim", "flux", "source_S0", "source_S1",
    "coriolis", "eigensystem", "k_theta", "g_c", "g_s",
]


def _check_positive(h, what="depth"):
    if np.any(~np.isfinite(h)) or np.any(h <= 0.0):
        raise NonPositiveDepth(f"non-positive {what} encountered")


def coriolis(xi, eta, pc):
    """Coriolis parameter with a tilted rotation axis.

    Reduces to 2*Omega*sin(eta) for alpha = 0.
    """
    return 2.0 * pc.Omega * (-np.cos(xi) * np.cos(eta) * np.sin(pc.alpha)
                             + np.sin(eta) * np.cos(pc.alpha))


def prim_to_cons(h, u, v, m: MetricData):
    _check_positive(h)
    lam = m.lambda_jac
    return lam * h, lam * h * u, lam * h * v


def cons_to_prim(U1, U2, U3, m: MetricData):
    _check_positive(U1, "conservative depth")
    h = U1 / m.lambda_jac
    return h, U2 / U1, U3 / U1


def flux(U1, U2, U3, m: MetricData, g):
    """Flux pair (F1, F2), each a 3-tuple of arrays."""
    _check_positive(U1, "conservative depth")
    lam = m.lambda_jac
    h = U1 / lam
    u = U2 / U1
    v = U3 / U1
    p = 0.5 * g * h * h * lam
    F1 = (U2, U2 * u + p * m.ginv11, U3 * u + p * m.ginv12)
    F2 = (U3, U2 * v + p * m.ginv12, U3 * v + p * m.ginv22)
    return F1, F2


def source_S0(U1, U2, U3, m: MetricData, f, grad_b, g):
    """Geometric/Coriolis/topography source of the divergence form.

    grad_b is the pair (db/dx, db/dy) in reference coordinates.
    Returns (0, Lam*S0_1, Lam*S0_2).
    """
    _check_positive(U1, "conservative depth")
    lam = m.lambda_jac
    h = U1 / lam
    u = U2 / U1
    v = U3 / U1
    hu, hv = h * u, h * v
    bx, by = grad_b
    s1 = (-m.gamma1_11 * hu * u - 2.0 * m.gamma1_12 * hu * v
          - f * lam * (m.ginv12 * hu - m.ginv11 * hv)
          - g * h * (m.ginv11 * bx + m.ginv12 * by))
    s2 = (-m.gamma2_22 * hv * v - 2.0 * m.gamma2_12 * hu * v
          - f * lam * (m.ginv22 * hu - m.ginv12 * hv)
          - g * h * (m.ginv12 * bx + m.ginv22 * by))
    return np.zeros_like(s1), lam * s1, lam * s2


def metric_gradients(x, y, R):
    """Analytic x/y derivatives of ginv11, ginv12, ginv22 and Lambda."""
    tx, ty = np.tan(x), np.tan(y)
    sx2 = 1.0 + tx * tx
    sy2 = 1.0 + ty * ty
    cx2 = 1.0 / sx2
    cy2 = 1.0 / sy2
    rho2 = 1.0 + tx * tx + ty * ty
    R2 = R * R
    # ginv11 = rho2*cx2/R^2 = (1 + ty^2 cx2)/R^2
    d11_dx = -2.0 * tx * ty * ty * cx2 / R2
    d11_dy = 2.0 * ty * sy2 * cx2 / R2
    # ginv22 = (1 + tx^2 cy2)/R^2
    d22_dy = -2.0 * ty * tx * tx * cy2 / R2
    d22_dx = 2.0 * tx * sx2 * cy2 / R2
    # ginv12 = tx*ty*w/R^2 with w = rho2*cx2*cy2
    w = rho2 * cx2 * cy2
    dw_dx = -2.0 * tx * ty * ty * cx2 * cy2
    dw_dy = -2.0 * ty * tx * tx * cx2 * cy2
    d12_dx = (sx2 * ty * w + tx * ty * dw_dx) / R2
    d12_dy = (tx * sy2 * w + tx * ty * dw_dy) / R2
    # Lambda = R^2 / (rho2^{3/2} cx2 cy2); dLam/dx = Lam*tx*(2 - 3 sx2/rho2)
    lam = R2 / (rho2 ** 1.5 * cx2 * cy2)
    dlam_dx = lam * tx * (2.0 - 3.0 * sx2 / rho2)
    dlam_dy = lam * ty * (2.0 - 3.0 * sy2 / rho2)
    return {
        "d11_dx": d11_dx, "d11_dy": d11_dy,
        "d12_dx": d12_dx, "d12_dy": d12_dy,
        "d22_dx": d22_dx, "d22_dy": d22_dy,
        "lam": lam, "dlam_dx": dlam_dx, "dlam_dy": dlam_dy,
    }


def source_S1(h, u, v, x, y, m: MetricData, f, grad_b, g, R):
    """Primitive-form source S1 = S1_B - S1_S with analytic metric derivatives."""
    _check_positive(h)
    bx, by = grad_b
    s1b_1 = g * (m.ginv11 * bx + m.ginv12 * by)
    s1b_2 = g * (m.ginv12 * bx + m.ginv22 * by)
    d = metric_gradients(x, y, R)
    lam = m.lambda_jac
    s1s_1 = (m.gamma1_11 * u * u + 2.0 * m.gamma1_12 * u * v
             + f * lam * (m.ginv12 * u - m.ginv11 * v)
             + 0.5 * g * h * (d["d11_dx"] + d["d12_dy"])
             + 0.5 * g * h / lam * (d["dlam_dx"] * m.ginv11 + d["dlam_dy"] * m.ginv12))
    s1s_2 = (m.gamma2_22 * v * v + 2.0 * m.gamma2_12 * u * v
             - f * lam * (m.ginv22 * u - m.ginv12 * v)
             + 0.5 * g * h * (d["d12_dx"] + d["d22_dy"])
             + 0.5 * g * h / lam * (d["dlam_dx"] * m.ginv12 + d["dlam_dy"] * m.ginv22))
    zero = np.zeros_like(s1s_1)
    return zero, s1b_1 - s1s_1, s1b_2 - s1s_2


def k_theta(ginv11, ginv12, ginv22, theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.sqrt(ginv11 * c * c + 2.0 * ginv12 * s * c + ginv22 * s * s)


def g_c(ginv11, ginv12, ginv22, theta):
    c, s = np.cos(theta), np.sin(theta)
    return (ginv11 * c + ginv12 * s) / k_theta(ginv11, ginv12, ginv22, theta)


def g_s(ginv11, ginv12, ginv22, theta):
    c, s = np.cos(theta), np.sin(theta)
    return (ginv12 * c + ginv22 * s) / k_theta(ginv11, ginv12, ginv22, theta)


class EigenSystem:
    """Wave speeds and left/right eigenvectors of A1 cos + A2 sin."""

    def __init__(self, h, u, v, m: MetricData, theta, g):
        _check_positive(h)
        self.c = np.sqrt(g * h)
        self.Ktheta = k_theta(m.ginv11, m.ginv12, m.ginv22, theta)
        self.Gc = g_c(m.ginv11, m.ginv12, m.ginv22, theta)
        self.Gs = g_s(m.ginv11, m.ginv12, m.ginv22, theta)
        self.vtheta = u * np.cos(theta) + v * np.sin(theta)
        cK = self.c * self.Ktheta
        self.lambda1 = self.vtheta - cK
        self.lambda2 = self.vtheta
        self.lambda3 = self.vtheta + cK
        ct, st = np.cos(theta), np.sin(theta)
        cg = self.c / (2.0 * g * self.Ktheta)
        self.Lmat = np.array([
            [-0.5, cg * ct, cg * st],
            [0.0, self.Gs / self.Ktheta, -self.Gc / self.Ktheta],
            [0.5, cg * ct, cg * st],
        ])
        gc_ = g / self.c
        self.Rmat = np.array([
            [-1.0, 0.0, 1.0],
            [gc_ * self.Gc, st, gc_ * self.Gc],
            [gc_ * self.Gs, -ct, gc_ * self.Gs],
        ])

    @property
    def lambdas(self):
        return np.array([self.lambda1, self.lambda2, self.lambda3])


def eigensystem(h, u, v, m: MetricData, theta, g):
    return EigenSystem(h, u, v, m, theta, g)


def quasilinear_matrices(h, u, v, m: MetricData, g):
    """A1, A2 of the primitive-variable form (3x3 each, scalar state)."""
    A1 = np.array([
        [u, h, 0.0],
        [g * m.ginv11, u, 0.0],
        [g * m.ginv12, 0.0, u],
    ])
    A2 = np.array([
        [v, 0.0, h],
        [g * m.ginv12, v, 0.0],
        [g * m.ginv22, 0.0, v],
    ])
    return A1, A2
