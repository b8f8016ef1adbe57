"""Initial conditions, topography, forcing and reference solutions.

Seven standard experiments on the rotating sphere.  Each case exposes
initial/exact fields in lat/lon components (h in meters, u_s, v_s in
m/s), the Coriolis parameter, the bottom topography with its physical
(east, north) gradient, and an optional extra momentum forcing.
"""

import numpy as np
from scipy.integrate import quad

from .constants import SECONDS_PER_DAY
from .errors import NoExactSolution

_WRAP = lambda a: np.mod(a + np.pi, 2.0 * np.pi) - np.pi


class TestCase:
    """Base class: flat bottom, untilted Coriolis, no forcing."""

    name = "base"
    has_exact = False
    has_extra_source = False

    def __init__(self, pc):
        self.pc = pc

    def coriolis_f(self, xi, eta):
        return 2.0 * self.pc.Omega * np.sin(eta)

    def topography(self, xi, eta):
        z = np.zeros_like(np.asarray(xi, dtype=float))
        return z, z, z

    def initial(self, xi, eta):
        raise NotImplementedError

    def exact(self, xi, eta, t):
        raise NoExactSolution(f"case {self.name} has no closed-form solution")

    def extra_source(self, xi, eta, t):
        z = np.zeros_like(np.asarray(xi, dtype=float))
        return z, z


class SteadyZonalFlow(TestCase):
    """Geostrophically balanced zonal flow, steady for any axis tilt."""

    name = "w2"
    has_exact = True

    def __init__(self, pc, alpha=0.0):
        super().__init__(pc)
        self.alpha = alpha
        g = pc.g
        self.h0 = 2.94e4 / g
        self.u0 = 2.0 * np.pi * pc.R / (12.0 * SECONDS_PER_DAY)

    def coriolis_f(self, xi, eta):
        a = self.alpha
        return 2.0 * self.pc.Omega * (-np.cos(xi) * np.cos(eta) * np.sin(a)
                                      + np.sin(eta) * np.cos(a))

    def initial(self, xi, eta):
        pc, a = self.pc, self.alpha
        C = -np.cos(xi) * np.cos(eta) * np.sin(a) + np.sin(eta) * np.cos(a)
        h = self.h0 - (pc.R * pc.Omega * self.u0 + 0.5 * self.u0 ** 2) \
            / pc.g * C * C
        us = self.u0 * (np.cos(eta) * np.cos(a)
                        + np.cos(xi) * np.sin(eta) * np.sin(a))
        vs = -self.u0 * np.sin(xi) * np.sin(a) + np.zeros_like(h)
        return h, us, vs

    def exact(self, xi, eta, t):
        return self.initial(xi, eta)


class UnsteadyZonalFlow(TestCase):
    """Rigidly precessing tilted zonal flow over a zonal bottom profile."""

    name = "lauter"
    has_exact = True

    def __init__(self, pc, alpha=np.pi / 4.0, k1=133681.0, k2=0.0):
        super().__init__(pc)
        self.alpha = alpha
        self.k1 = k1
        self.k2 = k2
        self.u0 = 2.0 * np.pi * pc.R / (12.0 * SECONDS_PER_DAY)

    def topography(self, xi, eta):
        pc = self.pc
        b = 0.5 * (pc.R * pc.Omega * np.sin(eta)) ** 2 / pc.g + self.k2 / pc.g
        bN = pc.R * pc.Omega ** 2 * np.sin(eta) * np.cos(eta) / pc.g
        return b, np.zeros_like(b), bN

    def exact(self, xi, eta, t):
        pc, a = self.pc, self.alpha
        phase = xi + pc.Omega * t
        C = -np.sin(a) * np.cos(eta) * np.cos(phase) + np.cos(a) * np.sin(eta)
        rs = pc.R * pc.Omega * np.sin(eta)
        b, _, _ = self.topography(xi, eta)
        h = (-0.5 * (self.u0 * C + rs) ** 2 + 0.5 * rs * rs + self.k1) \
            / pc.g - b
        us = self.u0 * (np.sin(a) * np.sin(eta) * np.cos(phase)
                        + np.cos(a) * np.cos(eta))
        vs = -self.u0 * np.sin(a) * np.sin(phase) + np.zeros_like(h)
        return h, us, vs

    def initial(self, xi, eta):
        return self.exact(xi, eta, 0.0)


class ZonalFlowOverMountain(TestCase):
    """Steady zonal base flow disturbed by a conical mountain."""

    name = "w5"

    def __init__(self, pc):
        super().__init__(pc)
        self.h0 = 5960.0
        self.u0 = 20.0
        self.b0 = 2000.0
        self.r0 = np.pi / 9.0
        self.center = (-np.pi / 2.0, np.pi / 6.0)

    def _r(self, xi, eta):
        dxi = _WRAP(xi - self.center[0])
        deta = eta - self.center[1]
        return np.minimum(self.r0, np.hypot(dxi, deta)), dxi, deta

    def topography(self, xi, eta):
        r, dxi, deta = self._r(xi, eta)
        b = self.b0 * (1.0 - r / self.r0)
        inside = (r < self.r0) & (r > 1.0e-12)
        rs = np.where(inside, r, 1.0)
        slope = -self.b0 / self.r0
        b_xi = np.where(inside, slope * dxi / rs, 0.0)
        b_eta = np.where(inside, slope * deta / rs, 0.0)
        R = self.pc.R
        return b, b_xi / (R * np.cos(eta)), b_eta / R

    def initial(self, xi, eta):
        pc = self.pc
        hs = self.h0 - (pc.R * pc.Omega * self.u0 + 0.5 * self.u0 ** 2) \
            / pc.g * np.sin(eta) ** 2
        b, _, _ = self.topography(xi, eta)
        h = hs - b
        return h, self.u0 * np.cos(eta), np.zeros_like(h)


class DeformationalFlow(TestCase):
    """Translating sheared vortex pair driven by analytic momentum forcing.

    The height field is an exact traveling solution of the forced
    momentum equations; any height scale works since all h-terms enter
    linearly, and 1e-4 R keeps the field in the few-hundred-meter range
    with a two-orders cheaper gravity-wave CFL limit.
    """

    name = "deform"
    has_exact = True
    has_extra_source = True

    def __init__(self, pc):
        super().__init__(pc)
        self.rho0 = 3.0
        self.gamma = 5.0
        self.u0 = np.pi / 6.0 / SECONDS_PER_DAY
        self.h_scale = 1.0e-4 * pc.R

    def _omega(self, eta):
        rho = self.rho0 * np.cos(eta)
        amp = 1.5 * np.sqrt(3.0) * self.u0
        small = np.abs(rho) < 1.0e-3
        rho_s = np.where(small, 1.0, rho)
        w = amp * np.tanh(rho_s) / (rho_s * np.cosh(rho_s) ** 2)
        w_series = amp * (1.0 - 4.0 * rho * rho / 3.0)
        omega = np.where(small, w_series, w)
        dw = amp * (1.0 / np.cosh(rho_s) ** 2 / (rho_s * np.cosh(rho_s) ** 2)
                    - np.tanh(rho_s) * (1.0 + 2.0 * rho_s * np.tanh(rho_s))
                    / (rho_s ** 2 * np.cosh(rho_s) ** 2))
        dw = np.where(small, -8.0 * amp * rho / 3.0, dw)
        return omega, dw, rho

    def exact(self, xi, eta, t):
        omega, _, rho = self._omega(eta)
        h = self.h_scale * (1.0 - np.tanh(rho / self.gamma
                                          * np.sin(xi - omega * t)))
        us = self.pc.R * omega * np.cos(eta)
        vs = np.zeros_like(h)
        return h, us, vs

    def initial(self, xi, eta):
        return self.exact(xi, eta, 0.0)

    def extra_source(self, xi, eta, t):
        pc = self.pc
        omega, domega_drho, rho = self._omega(eta)
        phase = xi - omega * t
        arg = rho / self.gamma * np.sin(phase)
        sech2 = 1.0 / np.cosh(arg) ** 2
        drho_deta = -self.rho0 * np.sin(eta)
        darg_deta = (drho_deta / self.gamma * np.sin(phase)
                     - rho / self.gamma * np.cos(phase) * t
                     * domega_drho * drho_deta)
        # d(tanh arg)/dxi has a rho = rho0 cos(eta) factor cancelling 1/cos(eta)
        a_us = -(pc.g * self.h_scale / pc.R) * sech2 \
            * (self.rho0 / self.gamma) * np.cos(phase)
        f = self.coriolis_f(xi, eta)
        a_vs = -(pc.g * self.h_scale / pc.R) * sech2 * darg_deta \
            + (f + omega * np.sin(eta)) * pc.R * omega * np.cos(eta)
        return a_us, a_vs


class RossbyHaurwitzWave(TestCase):
    """Zonal wavenumber-4 Rossby-Haurwitz wave."""

    name = "rh4"

    def __init__(self, pc):
        super().__init__(pc)
        self.Kamp = 7.848e-6
        self.r = 4
        self.h0 = 8000.0

    def initial(self, xi, eta):
        pc = self.pc
        K, r = self.Kamp, self.r
        Om = pc.Omega
        ce = np.cos(eta)
        se = np.sin(eta)
        A = (0.5 * K * (2.0 * Om + K) * ce * ce
             + 0.25 * K * K * ce ** (2 * r)
             * ((r + 1) * ce * ce + (2 * r * r - r - 2)
                - 2.0 * r * r / (ce * ce)))
        B = (2.0 * (Om + K) * K / ((r + 1) * (r + 2)) * ce ** r
             * ((r * r + 2 * r + 2) - (r + 1) ** 2 * ce * ce))
        C = 0.25 * K * K * ce ** (2 * r) * ((r + 1) * ce * ce - (r + 2))
        h = self.h0 + pc.R ** 2 / pc.g * (A + B * np.cos(r * xi)
                                          + C * np.cos(2 * r * xi))
        us = (pc.R * K * ce + pc.R * K * ce ** (r - 1)
              * (r * se * se - ce * ce) * np.cos(r * xi))
        vs = -pc.R * K * r * ce ** (r - 1) * se * np.sin(r * xi)
        return h, us, vs


class CrossPolarFlow(TestCase):
    """Geopotential dipole driving flow across both poles."""

    name = "crosspolar"

    def __init__(self, pc):
        super().__init__(pc)
        self.h0 = 5.768e4 / pc.g
        self.u0 = 20.0

    def initial(self, xi, eta):
        pc = self.pc
        h = self.h0 - 2.0 * pc.R * pc.Omega * self.u0 / pc.g \
            * np.sin(eta) ** 3 * np.cos(eta) * np.sin(xi)
        us = -self.u0 * np.sin(xi) * np.sin(eta) * (4.0 * np.cos(eta) ** 2 - 1.0)
        vs = self.u0 * np.sin(eta) ** 2 * np.cos(xi)
        return h, us, vs


class BarotropicJet(TestCase):
    """Balanced mid-latitude jet plus the height bump that destabilizes it.

    The balanced depth uses the standard 10 km reference layer (a 1 km
    layer would go negative north of the jet).
    """

    name = "galewsky"

    def __init__(self, pc):
        super().__init__(pc)
        self.umax = 80.0
        self.eta0 = np.pi / 7.0
        self.eta1 = 0.5 * np.pi - self.eta0
        self.en = np.exp(-4.0 / (self.eta1 - self.eta0) ** 2)
        self.h0 = 10000.0
        self.hhat = 120.0
        self.alpha = 1.0 / 3.0
        self.beta = 1.0 / 15.0
        self.eta2 = np.pi / 4.0
        self._cache = {}

    def u_jet(self, eta):
        eta = np.asarray(eta, dtype=float)
        inside = (eta > self.eta0) & (eta < self.eta1)
        d = np.where(inside, (eta - self.eta0) * (eta - self.eta1), -1.0)
        return np.where(inside, self.umax / self.en * np.exp(1.0 / d), 0.0)

    def _integrand(self, eta):
        pc = self.pc
        u = self.u_jet(eta)
        f = 2.0 * pc.Omega * np.sin(eta)
        return pc.R * u * (f + np.tan(eta) * u / pc.R)

    def _balance_drop(self, eta):
        """g * (h0 - h_balanced)(eta), cached per latitude."""
        key = round(float(eta), 14)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if eta <= self.eta0:
            val = 0.0
        else:
            hi = min(float(eta), self.eta1)
            val, _ = quad(self._integrand, self.eta0, hi, limit=200,
                          epsabs=1.0e-10 * self.h0 * self.pc.g,
                          epsrel=1.0e-12)
        self._cache[key] = val
        return val

    def balanced_depth(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        vals = np.unique(np.round(eta, 14))
        table = {v: self._balance_drop(v) for v in vals}
        drop = np.vectorize(lambda e: table[round(e, 14)])(np.round(eta, 14))
        return self.h0 - drop / self.pc.g

    def initial(self, xi, eta):
        eta = np.asarray(eta, dtype=float)
        shape = np.broadcast(np.asarray(xi), eta).shape
        h = np.broadcast_to(
            self.balanced_depth(eta.ravel()).reshape(eta.shape), shape).copy()
        xiw = _WRAP(np.asarray(xi, dtype=float))
        h = h + self.hhat * np.cos(eta) * np.exp(
            -(xiw / self.alpha) ** 2 - ((self.eta2 - eta) / self.beta) ** 2)
        us = np.broadcast_to(self.u_jet(eta), shape)
        return h, us, np.zeros(shape)


CASES = {
    "w2": SteadyZonalFlow,
    "lauter": UnsteadyZonalFlow,
    "w5": ZonalFlowOverMountain,
    "deform": DeformationalFlow,
    "rh4": RossbyHaurwitzWave,
    "crosspolar": CrossPolarFlow,
    "galewsky": BarotropicJet,
}


def make_case(name, pc, **kw):
    try:
        cls = CASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown test case {name!r}; "
                         f"choose from {sorted(CASES)}") from None
    return cls(pc, **kw)
