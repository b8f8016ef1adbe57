"""CFL time step and the explicit Runge-Kutta drivers."""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveDepth

SCHEMES = ("ssp-rk2", "ssp-rk3", "rk4")


def default_scheme(K):
    return {1: "ssp-rk2", 2: "ssp-rk3", 3: "rk4"}[K]


def default_cfl(K):
    return {1: 0.25, 2: 0.15, 3: 0.1}[K]


@dataclass
class TimeConfig:
    cfl: float
    scheme: str
    t_end: float
    fixed_dt: float = 0.0          # override the CFL step when > 0

    def __post_init__(self):
        if self.cfl <= 0.0:
            raise ValueError("cfl must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


def cfl_timestep(mesh, coef, cfl, g):
    """pi C / (2N max(|lambda(0)| + |lambda(pi/2)|)) over cell means."""
    norm0 = mesh.basis.norms[0]
    hbar = coef[:, 0, 0] * norm0
    if np.any(hbar <= 0.0):
        raise NonPositiveDepth("non-positive cell-mean depth in CFL estimate")
    ubar = coef[:, 1, 0] / coef[:, 0, 0]
    vbar = coef[:, 2, 0] / coef[:, 0, 0]
    c = np.sqrt(g * hbar)
    met = mesh.ctr_metric
    s0 = np.abs(ubar) + c * np.sqrt(met.ginv11)      # theta = 0
    s1 = np.abs(vbar) + c * np.sqrt(met.ginv22)      # theta = pi/2
    denom = np.max(s0 + s1)
    return np.pi * cfl / (2.0 * mesh.N * denom)


def step(rhs, coef, dt, t, scheme):
    """One explicit RK step of d(coef)/dt = rhs(coef, t)."""
    if scheme == "ssp-rk2":
        u1 = coef + dt * rhs(coef, t)
        return 0.5 * coef + 0.5 * (u1 + dt * rhs(u1, t + dt))
    if scheme == "ssp-rk3":
        u1 = coef + dt * rhs(coef, t)
        u2 = 0.75 * coef + 0.25 * (u1 + dt * rhs(u1, t + dt))
        return coef / 3.0 + 2.0 / 3.0 * (u2 + dt * rhs(u2, t + 0.5 * dt))
    if scheme == "rk4":
        k1 = rhs(coef, t)
        k2 = rhs(coef + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(coef + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(coef + dt * k3, t + dt)
        return coef + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise ValueError(f"unknown scheme {scheme!r}")


def advance(op, field, config: TimeConfig, callbacks=(), sample_dt=None):
    """Integrate a field to t_end, clamping the final step.

    callbacks are called as cb(t, field) at t = 0, every time the model
    time crosses a multiple of sample_dt, and at t_end.
    """
    mesh = field.mesh
    coef = field.coef.copy()
    t = 0.0
    nstep = 0
    for cb in callbacks:
        cb(t, type(field)(mesh, coef))
    if config.t_end <= 0.0:
        field.coef = coef
        return field, nstep
    next_sample = sample_dt if sample_dt else np.inf
    while t < config.t_end - 1.0e-9:
        if config.fixed_dt > 0.0:
            dt = config.fixed_dt
        else:
            dt = cfl_timestep(mesh, coef, config.cfl, op.g)
        dt = min(dt, config.t_end - t)
        coef = step(op.residual, coef, dt, t, config.scheme)
        t += dt
        nstep += 1
        if t >= next_sample - 1.0e-9 or t >= config.t_end - 1.0e-9:
            for cb in callbacks:
                cb(t, type(field)(mesh, coef))
            while next_sample <= t + 1.0e-9:
                next_sample += sample_dt if sample_dt else np.inf
    field.coef = coef
    return field, nstep
