"""CSV export/import of solver fields and time series.

Three little-endian decimal text formats, one header row each, floats
written with 17 significant digits so values survive a text round trip:

  grid-csv    one row per volume quadrature node; carries a '# meta:'
              comment line so a field can be rebuilt (plotdata)
  latlon-csv  the field sampled on a uniform M x 2M lat/lon raster
  norms-csv   a time series of error norms / conserved quantities
"""

import csv

import numpy as np

from . import geometry as geo
from .diagnostics import primitive_fields, vorticity
from .mesh import Mesh

_FMT = "%.17g"

GRID_COLUMNS = ["panel", "j", "k", "x", "y", "xi", "eta",
                "h", "u_s", "v_s", "vorticity"]
LATLON_COLUMNS = ["xi", "eta", "h", "u_s", "v_s", "vorticity"]


def _fmt(v):
    return _FMT % v


def export_grid_csv(field, path, meta=None):
    """Write one row per volume node; meta into a leading comment line."""
    m = field.mesh
    h, us, vs = primitive_fields(field)
    zeta = vorticity(field)
    meta = dict(meta or {})
    meta.setdefault("N", m.N)
    meta.setdefault("K", m.K)
    meta.setdefault("R", m.R)
    with open(path, "w", newline="") as fh:
        fh.write("# meta: " + " ".join(f"{k}={v}" for k, v in meta.items())
                 + "\n")
        wr = csv.writer(fh)
        wr.writerow(GRID_COLUMNS)
        for c in range(m.ncells):
            for q in range(m.nq):
                wr.writerow([m.cell_panel[c], m.cell_j[c], m.cell_k[c],
                             _fmt(m.vol_x[c, q]), _fmt(m.vol_y[c, q]),
                             _fmt(m.vol_xi[c, q]), _fmt(m.vol_eta[c, q]),
                             _fmt(h[c, q]), _fmt(us[c, q]), _fmt(vs[c, q]),
                             _fmt(zeta[c, q])])


def read_grid_csv(path):
    """Parse a grid-csv file; returns (meta dict, column dict of arrays)."""
    meta = {}
    rows = []
    with open(path) as fh:
        first = fh.readline()
        if first.startswith("# meta:"):
            for tok in first[len("# meta:"):].split():
                k, _, v = tok.partition("=")
                meta[k] = v
            header = fh.readline()
        else:
            header = first
        names = [s.strip() for s in header.strip().split(",")]
        for rec in csv.reader(fh):
            if rec:
                rows.append([float(x) for x in rec])
    data = np.array(rows)
    return meta, {nm: data[:, i] for i, nm in enumerate(names)}


def field_from_grid_csv(path, pc):
    """Rebuild a DGField from a grid-csv export (lossless for DG data)."""
    from .dg import DGField
    meta, cols = read_grid_csv(path)
    mesh = Mesh(int(meta["N"]), int(meta["K"]), float(meta.get("R", pc.R)))
    n = mesh.ncells * mesh.nq
    if cols["h"].size != n:
        raise ValueError("grid-csv size does not match its meta line")
    h = cols["h"].reshape(mesh.ncells, mesh.nq)
    us = cols["u_s"].reshape(mesh.ncells, mesh.nq)
    vs = cols["v_s"].reshape(mesh.ncells, mesh.nq)
    vel = us[..., None] * mesh.vol_eE + vs[..., None] * mesh.vol_eN
    u = np.einsum("cqk,cqk->cq", mesh.vol_conv[:, :, 0, :], vel)
    v = np.einsum("cqk,cqk->cq", mesh.vol_conv[:, :, 1, :], vel)
    W = np.stack([h, h * u, h * v], axis=1)
    rhs = np.einsum("cq,cvq,mq,q->cvm", mesh.vol_lam, W, mesh.Vb,
                    mesh.quad.vol_w)
    coef = np.einsum("cml,cvl->cvm", mesh.mass_inv, rhs)
    return DGField(mesh, coef), meta


def sample_latlon(field, n_lat):
    """Sample the DG polynomials on a uniform n_lat x 2 n_lat raster."""
    m = field.mesh
    d = np.pi / n_lat
    eta = -0.5 * np.pi + (np.arange(n_lat) + 0.5) * d
    xi = -np.pi + (np.arange(2 * n_lat) + 0.5) * d
    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    pts = geo.sphere_to_xyz(XI.ravel(), ETA.ravel())
    dots = pts @ np.stack([geo.panel_frame(p)[0] for p in range(1, 7)]).T
    panel = np.argmax(dots, axis=1) + 1
    half = 0.5 * m.delta
    zeta_nodes = vorticity(field)
    # vorticity as a per-cell polynomial for consistent sampling
    czeta = np.matmul(zeta_nodes * m.quad.vol_w, m.Vb.T)
    out = np.empty((pts.shape[0], 4))
    for p in range(1, 7):
        sel = np.where(panel == p)[0]
        if sel.size == 0:
            continue
        x, y = geo.sphere_to_panel(XI.ravel()[sel], ETA.ravel()[sel], p,
                                   tol=1e-9)
        j = np.clip(((x + geo.PANEL_HALF_WIDTH) / m.delta).astype(int),
                    0, m.N - 1)
        k = np.clip(((y + geo.PANEL_HALF_WIDTH) / m.delta).astype(int),
                    0, m.N - 1)
        cid = m.cell_id(p, j, k)
        X = (x - m.cell_xc[cid]) / half
        Y = (y - m.cell_yc[cid]) / half
        basis = m.basis.eval(X, Y)                 # (nm, npts)
        W = np.einsum("nvm,mn->nv", field.coef[cid], basis)
        h = W[:, 0]
        u = W[:, 1] / h
        v = W[:, 2] / h
        drdx, drdy = geo.covariant_basis(p, x, y, m.R)
        vel = u[:, None] * drdx + v[:, None] * drdy
        eE, eN = geo.east_north(XI.ravel()[sel], ETA.ravel()[sel])
        out[sel, 0] = h
        out[sel, 1] = np.sum(vel * eE, axis=1)
        out[sel, 2] = np.sum(vel * eN, axis=1)
        out[sel, 3] = np.einsum("nm,mn->n", czeta[cid], basis)
    return XI.ravel(), ETA.ravel(), out


def export_latlon_csv(field, path, n_lat=90, meta=None):
    xi, eta, vals = sample_latlon(field, n_lat)
    meta = dict(meta or {})
    meta.setdefault("n_lat", n_lat)
    with open(path, "w", newline="") as fh:
        fh.write("# meta: " + " ".join(f"{k}={v}" for k, v in meta.items())
                 + "\n")
        wr = csv.writer(fh)
        wr.writerow(LATLON_COLUMNS)
        for i in range(xi.size):
            wr.writerow([_fmt(xi[i]), _fmt(eta[i])]
                        + [_fmt(v) for v in vals[i]])


def export_norms_csv(rows, path):
    """Write a list of dicts as a time-series CSV (header from keys)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        if not rows:
            wr.writerow(["t_days"])
            return
        keys = list(rows[0].keys())
        wr.writerow(keys)
        for row in rows:
            wr.writerow([_fmt(row[k]) if isinstance(row[k], float)
                         else row[k] for k in keys])


def read_config(path):
    """key=value configuration lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
