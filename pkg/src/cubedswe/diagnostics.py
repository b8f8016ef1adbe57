"""Error norms, conserved functionals and interface-state diagnostics."""

import numpy as np

from .errors import NoExactSolution, NonPositiveDepth


def primitive_fields(field):
    """(h, u_s, v_s) at the volume quadrature nodes, (ncells, nq) each."""
    m = field.mesh
    W = np.matmul(field.coef, m.Vb)
    h = W[:, 0]
    u = W[:, 1] / h
    v = W[:, 2] / h
    vel = (u[..., None] * m.vol_drdx + v[..., None] * m.vol_drdy)
    us = np.einsum("cqk,cqk->cq", vel, m.vol_eE)
    vs = np.einsum("cqk,cqk->cq", vel, m.vol_eN)
    return h, us, vs


def relative_errors(field, exact_fn, t, quantity="h"):
    """The three relative norms of h, u_s or v_s against a reference.

    exact_fn(lon, lat, t) must return (h, u_s, v_s); surface integrals use
    the solver's own quadrature with the Lambda area element.
    """
    m = field.mesh
    h, us, vs = primitive_fields(field)
    ref = exact_fn(m.vol_xi, m.vol_eta, t)
    idx = {"h": 0, "u": 1, "v": 2}
    try:
        which = idx[quantity]
    except KeyError:
        raise ValueError(f"unknown quantity {quantity!r}") from None
    num = (h, us, vs)[which]
    ex = np.broadcast_to(np.asarray(ref[which], dtype=float), num.shape)
    w = m.vol_lam * m.quad.vol_w
    diff = num - ex
    # a velocity component that is identically zero (zonal flows) gets its
    # errors scaled by the full velocity magnitude instead
    if which > 0 and np.max(np.abs(ex)) == 0.0:
        ex = np.broadcast_to(np.hypot(np.asarray(ref[1], dtype=float),
                                      np.asarray(ref[2], dtype=float)),
                             num.shape)
    l1 = np.sum(w * np.abs(diff)) / np.sum(w * np.abs(ex))
    l2 = np.sqrt(np.sum(w * diff * diff) / np.sum(w * ex * ex))
    linf = np.max(np.abs(diff)) / np.max(np.abs(ex))
    return l1, l2, linf


def relative_errors_oversampled(field, exact_fn, t, quantity="h", factor=2):
    """Error norms on a `factor`-times finer Gauss-Lobatto rule.

    Sensitivity companion to relative_errors: the solver's polynomials are
    re-evaluated on the finer tensor rule, so only the integration of the
    error changes, not the field.
    """
    from . import geometry as geo
    from .basis import gauss_lobatto
    m = field.mesh
    qf = factor * m.q
    tq, wq = gauss_lobatto(qf)
    Xg, Yg = np.meshgrid(tq, tq, indexing="ij")
    Xf, Yf = Xg.ravel(), Yg.ravel()
    wf = np.outer(wq, wq).ravel() / 4.0
    half = 0.5 * m.delta
    xv = m.cell_xc[:, None] + half * Xf[None, :]
    yv = m.cell_yc[:, None] + half * Yf[None, :]
    met = geo.metric_at(xv, yv, m.R)
    basis = m.basis.eval(Xf, Yf)
    W = np.matmul(field.coef, basis)
    h = W[:, 0]
    u = W[:, 1] / h
    v = W[:, 2] / h
    xi = np.empty_like(xv)
    eta = np.empty_like(xv)
    us = np.empty_like(xv)
    vs = np.empty_like(xv)
    for p in range(1, 7):
        sel = m.cell_panel == p
        xi[sel], eta[sel] = geo.panel_to_sphere(p, xv[sel], yv[sel])
        us[sel], vs[sel] = geo.spherical_from_contravariant(
            p, xv[sel], yv[sel], m.R, u[sel], v[sel])
    ref = exact_fn(xi, eta, t)
    idx = {"h": 0, "u": 1, "v": 2}[quantity]
    num = (h, us, vs)[idx]
    ex = np.broadcast_to(np.asarray(ref[idx], dtype=float), num.shape)
    w = met.lambda_jac * wf
    diff = num - ex
    if idx > 0 and np.max(np.abs(ex)) == 0.0:
        ex = np.broadcast_to(np.hypot(np.asarray(ref[1], dtype=float),
                                      np.asarray(ref[2], dtype=float)),
                             num.shape)
    l1 = np.sum(w * np.abs(diff)) / np.sum(w * np.abs(ex))
    l2 = np.sqrt(np.sum(w * diff * diff) / np.sum(w * ex * ex))
    linf = np.max(np.abs(diff)) / np.max(np.abs(ex))
    return l1, l2, linf


def vorticity(field):
    """Relative vorticity (1/Lam)(d vhat/dx - d uhat/dy) at volume nodes.

    The covariant velocity is re-projected onto the modal space per cell
    and differentiated analytically; the metric factors stay pointwise.
    """
    m = field.mesh
    W = np.matmul(field.coef, m.Vb)
    h = W[:, 0]
    u = W[:, 1] / h
    v = W[:, 2] / h
    met = m.vol_metric
    uhat = met.g11 * u + met.g12 * v
    vhat = met.g12 * u + met.g22 * v
    cu = np.matmul(uhat * m.quad.vol_w, m.Vb.T)      # (ncells, nm)
    cv = np.matmul(vhat * m.quad.vol_w, m.Vb.T)
    dvdx = np.matmul(cv, m.VbX)
    dudy = np.matmul(cu, m.VbY)
    return (dvdx - dudy) / m.vol_lam


def conserved(field, case=None, pc=None):
    """Total mass, energy and potential enstrophy of a field."""
    m = field.mesh
    h, us, vs = primitive_fields(field)
    if np.any(h <= 0.0):
        raise NonPositiveDepth("conserved functionals need h > 0")
    w = m.vol_lam * m.quad.vol_w * m.area
    if case is not None:
        b = np.broadcast_to(np.asarray(case.topography(m.vol_xi, m.vol_eta)[0],
                                       dtype=float), h.shape)
        f = case.coriolis_f(m.vol_xi, m.vol_eta)
        g = case.pc.g
    else:
        b = np.zeros_like(h)
        f = np.zeros_like(h)
        g = pc.g if pc is not None else 9.80616
    mass = np.sum(w * h)
    energy = np.sum(w * (0.5 * h * (us * us + vs * vs)
                         + 0.5 * g * ((h + b) ** 2 - b * b)))
    zeta = vorticity(field)
    enstrophy = np.sum(w * (zeta + f) ** 2 / (2.0 * h))
    return mass, energy, enstrophy


def freestream_residual(op, h0=2000.0):
    """Relative size of the residual of the constant-depth rest state.

    Momentum rows are normalized by the edge pressure-flux moments whose
    cancellation is under test; the mass row (no geometric terms cancel
    there) by the natural mass-flux moment Lam h0 c sqrt(g11) |e|.
    """
    from .dg import l2_project
    m = op.mesh
    fld = l2_project(m, lambda xi, eta: (np.full_like(xi, h0),
                                         np.zeros_like(xi),
                                         np.zeros_like(xi)))
    raw = op._volume_terms(fld.coef, 0.0)
    if op.flux_mode == "leg":
        op._vertex_states_vel3 = op._vertex_states(fld.coef)
        primL, primR = op._interior_traces(fld.coef)
        op._interior_flux(raw, op._interior_states_leg(primL, primR))
        op._boundary_flux(raw, op._boundary_states_leg(fld.coef))
    else:
        primL, primR = op._interior_traces(fld.coef)
        op._interior_flux_baseline(raw, primL, primR)
        sA, sB = op._boundary_traces(fld.coef)
        op._boundary_flux_baseline(raw, sA, sB)
    met = m.vol_metric
    p_scale = m.delta * 0.5 * op.g * h0 * h0 * np.max(
        m.vol_lam * np.maximum(met.ginv11, met.ginv22))
    m_scale = m.delta * np.max(m.vol_lam) * h0 * np.sqrt(op.g * h0) \
        * np.sqrt(np.max(met.ginv11))
    return max(np.max(np.abs(raw[:, 0, :])) / m_scale,
               np.max(np.abs(raw[:, 1:, :])) / p_scale)
