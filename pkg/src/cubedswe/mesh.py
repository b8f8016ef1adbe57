"""Cubed-sphere DG mesh with precomputed static geometry.

Everything that depends only on (N, K, R) is tabulated once here:
quadrature nodes and their metric data, trace matrices, cross-panel
adjacency with orientation, the per-node frozen-metric data of the
evolution operator, and the free-stream defect vectors.  The residual
evaluation in `dg.py` is then pure array algebra plus the sector-angle
Newton solves.

Interface-node classes:
  * interior edge nodes inside a panel  (two traces, one line family)
  * interior vertices                   (four traces, two line families)
  * panel-boundary edge nodes           (lat/lon variables, curve family)
  * panel-boundary vertices             (4 traces: through + 2 half families)
  * cube corners                        (3 traces: 3 half families)
"""

import numpy as np

from . import geometry as geo
from .basis import ModalBasis, QuadratureRule
from .evolution import OperatorGeometry

HALF = geo.PANEL_HALF_WIDTH
_SIDES = ("B", "T", "L", "R")


def _side_points(side, s):
    """Panel coordinates of points at parameter s along a panel side."""
    c = np.full_like(np.asarray(s, dtype=float), HALF)
    if side == "B":
        return np.asarray(s, dtype=float), -c
    if side == "T":
        return np.asarray(s, dtype=float), c
    if side == "L":
        return -c, np.asarray(s, dtype=float)
    return c, np.asarray(s, dtype=float)


def _side_along(side):
    """In-panel unit direction of increasing side parameter."""
    return (1.0, 0.0) if side in ("B", "T") else (0.0, 1.0)


def _side_inward(side):
    """In-panel unit direction pointing away from the side."""
    return {"B": (0.0, 1.0), "T": (0.0, -1.0),
            "L": (1.0, 0.0), "R": (-1.0, 0.0)}[side]


def _side_cell(side, m, N):
    """(j, k) of the m-th cell along a panel side."""
    if side == "B":
        return m, 0
    if side == "T":
        return m, N - 1
    if side == "L":
        return 0, m
    return N - 1, m


def _panel_coords_of(xi, eta, panel):
    return geo.sphere_to_panel(xi, eta, panel, tol=1.0e-9)


def panel_adjacency():
    """The 12 shared panel sides as (pA, sideA, pB, sideB, flip) records."""
    seen = {}
    records = []
    for p in range(1, 7):
        for side in _SIDES:
            s_probe = np.array([-0.31, 0.22])
            x, y = _side_points(side, s_probe)
            xi, eta = geo.panel_to_sphere(p, x, y)
            match = None
            for p2 in range(1, 7):
                if p2 == p:
                    continue
                try:
                    x2, y2 = _panel_coords_of(xi, eta, p2)
                except geo.OutOfPanel:
                    continue
                on = [np.all(np.abs(np.abs(v) - HALF) < 1e-9) or True for v in (x2,)]
                # identify which coordinate sits on the panel border
                for side2 in _SIDES:
                    xs, ys = _side_points(side2, np.array([0.0, 0.0]))
                    fixed_is_y = side2 in ("B", "T")
                    border = ys[0] if fixed_is_y else xs[0]
                    coord = y2 if fixed_is_y else x2
                    par = x2 if fixed_is_y else y2
                    if np.all(np.abs(coord - border) < 1e-9):
                        match = (p2, side2, par)
                        break
                if match:
                    break
            if match is None:
                raise RuntimeError(f"no neighbor found for panel {p} side {side}")
            p2, side2, par = match
            flip = bool(par[1] < par[0])
            key = tuple(sorted([(p, side), (p2, side2)]))
            if key in seen:
                continue
            seen[key] = True
            records.append((p, side, p2, side2, flip))
    assert len(records) == 12
    return records


class Mesh:
    """6 N^2-cell cubed-sphere mesh carrying all static solver tables."""

    def __init__(self, N, K, R):
        if K not in (1, 2, 3):
            raise ValueError("polynomial degree must be 1, 2 or 3")
        if N < 3:
            raise ValueError("need at least 3 cells per panel direction")
        self.N = int(N)
        self.K = int(K)
        self.R = float(R)
        self.delta = np.pi / (2.0 * self.N)
        self.area = self.delta ** 2
        self.basis = ModalBasis(K)
        self.quad = QuadratureRule(K)
        self.nm = self.basis.nm
        self.q = self.quad.q
        self.nq = self.quad.nq
        self.ncells = 6 * N * N

        self._build_cells()
        self._build_volume()
        self._build_trace_matrices()
        self._build_defect()
        self.adjacency = panel_adjacency()
        self._build_vertex_index()
        self._build_interior_edges()
        self._build_interior_vertices()
        self._build_boundary_edges()
        self._build_boundary_vertices()

    # ---------------- cells and volume nodes ----------------

    def cell_id(self, panel, j, k):
        return ((panel - 1) * self.N + k) * self.N + j

    def _build_cells(self):
        N = self.N
        j = np.arange(N)
        centers = -HALF + (j + 0.5) * self.delta
        pp, kk, jj = np.meshgrid(np.arange(1, 7), np.arange(N), np.arange(N),
                                 indexing="ij")
        self.cell_panel = pp.ravel()
        self.cell_j = jj.ravel()
        self.cell_k = kk.ravel()
        self.cell_xc = centers[self.cell_j]
        self.cell_yc = centers[self.cell_k]
        mc = geo.metric_at(self.cell_xc, self.cell_yc, self.R)
        self.ctr_metric = mc

    def _build_volume(self):
        half = 0.5 * self.delta
        self.vol_x = self.cell_xc[:, None] + half * self.quad.vol_X[None, :]
        self.vol_y = self.cell_yc[:, None] + half * self.quad.vol_Y[None, :]
        m = geo.metric_at(self.vol_x, self.vol_y, self.R)
        self.vol_metric = m
        self.vol_lam = m.lambda_jac
        xi = np.empty_like(self.vol_x)
        eta = np.empty_like(self.vol_x)
        for p in range(1, 7):
            sel = self.cell_panel == p
            xi[sel], eta[sel] = geo.panel_to_sphere(p, self.vol_x[sel],
                                                    self.vol_y[sel])
        self.vol_xi = xi
        self.vol_eta = eta
        # contravariant (u, v) from an embedded velocity vector: 2x3 map
        conv = np.empty(self.vol_x.shape + (2, 3))
        drdx = np.empty(self.vol_x.shape + (3,))
        drdy = np.empty(self.vol_x.shape + (3,))
        for p in range(1, 7):
            sel = self.cell_panel == p
            dx, dy = geo.covariant_basis(p, self.vol_x[sel], self.vol_y[sel],
                                         self.R)
            drdx[sel] = dx
            drdy[sel] = dy
        det = m.g11 * m.g22 - m.g12 * m.g12
        conv[..., 0, :] = (m.g22[..., None] * drdx - m.g12[..., None] * drdy) \
            / det[..., None]
        conv[..., 1, :] = (-m.g12[..., None] * drdx + m.g11[..., None] * drdy) \
            / det[..., None]
        self.vol_conv = conv          # (ncells, nq, 2, 3)
        self.vol_drdx = drdx
        self.vol_drdy = drdy
        self.vol_eE, self.vol_eN = geo.east_north(xi, eta)

        b = self.basis
        self.Vb = b.eval(self.quad.vol_X, self.quad.vol_Y)          # (nm, nq)
        gX, gY = b.grad(self.quad.vol_X, self.quad.vol_Y)
        self.VbX = gX * (2.0 / self.delta)
        self.VbY = gY * (2.0 / self.delta)
        # Jacobian-weighted mass matrix (the prognostic variables are
        # h, hu, hv; the conservative state carries the collocated Lambda)
        mass = np.einsum("cq,mq,lq,q->cml", self.vol_lam, self.Vb, self.Vb,
                         self.quad.vol_w)
        self.mass_inv = np.linalg.inv(mass)
        self.cell_lam_mean = np.einsum("cq,q->c", self.vol_lam,
                                       self.quad.vol_w)
        # weight-folded transposed basis matrices for fast matmul paths
        self.VbXw_T = (self.VbX * self.quad.vol_w).T.copy()   # (nq, nm)
        self.VbYw_T = (self.VbY * self.quad.vol_w).T.copy()
        self.Vbw_T = (self.Vb * self.quad.vol_w).T.copy()

    def _build_trace_matrices(self):
        t = self.quad.edge_t
        ones = np.ones_like(t)
        b = self.basis
        self.Eb = {
            "L": b.eval(-ones, t),
            "R": b.eval(ones, t),
            "B": b.eval(t, -ones),
            "T": b.eval(t, ones),
        }
        self.Ebw_T = {k: (v * self.quad.edge_w).T.copy()
                      for k, v in self.Eb.items()}
        self.corner_basis = {
            (sx, sy): b.eval(np.array([sx * 1.0]), np.array([sy * 1.0]))[:, 0]
            for sx in (-1, 1) for sy in (-1, 1)
        }

    def _build_defect(self):
        """Free-stream defect of the quadrature for both pressure-metric pairs.

        gamma = sum_sides |e| w~ (M.n) phi  -  |C| w (M . grad phi); a
        constant-h rest state produces exactly -(g/2) h^2 gamma, which the
        residual adds back.
        """
        m = self.vol_metric
        M1x = m.lambda_jac * m.ginv11
        M1y = m.lambda_jac * m.ginv12
        M2x = M1y
        M2y = m.lambda_jac * m.ginv22
        w = self.quad.vol_w
        vol1 = np.einsum("cq,mq,q->cm", M1x, self.VbX, w) + \
            np.einsum("cq,mq,q->cm", M1y, self.VbY, w)
        vol2 = np.einsum("cq,mq,q->cm", M2x, self.VbX, w) + \
            np.einsum("cq,mq,q->cm", M2y, self.VbY, w)
        g1 = -self.area * vol1
        g2 = -self.area * vol2
        half = 0.5 * self.delta
        te = self.quad.edge_t
        we = self.quad.edge_w
        for side in _SIDES:
            if side in ("B", "T"):
                ex = self.cell_xc[:, None] + half * te[None, :]
                ey = np.full_like(ex, 0.0) + (self.cell_yc[:, None]
                                              + (half if side == "T" else -half))
                n = (0.0, 1.0) if side == "T" else (0.0, -1.0)
            else:
                ey = self.cell_yc[:, None] + half * te[None, :]
                ex = np.zeros_like(ey) + (self.cell_xc[:, None]
                                          + (half if side == "R" else -half))
                n = (1.0, 0.0) if side == "R" else (-1.0, 0.0)
            me = geo.metric_at(ex, ey, self.R)
            M1n = me.lambda_jac * (me.ginv11 * n[0] + me.ginv12 * n[1])
            M2n = me.lambda_jac * (me.ginv12 * n[0] + me.ginv22 * n[1])
            g1 += self.delta * np.einsum("cq,mq,q->cm", M1n, self.Eb[side], we)
            g2 += self.delta * np.einsum("cq,mq,q->cm", M2n, self.Eb[side], we)
        self.gamma1 = g1
        self.gamma2 = g2

    # ---------------- vertex identification ----------------

    def _build_vertex_index(self):
        N = self.N
        lat = -HALF + np.arange(N + 1) * self.delta
        groups = {}
        interior = []
        for p in range(1, 7):
            for i in range(N + 1):
                for j in range(N + 1):
                    x, y = lat[i], lat[j]
                    if 0 < i < N and 0 < j < N:
                        interior.append((p, i, j))
                        continue
                    pt = geo.panel_to_xyz(p, x, y)
                    key = tuple(np.round(pt * 1e12).astype(np.int64))
                    groups.setdefault(key, []).append((p, i, j))
        self._interior_lattice = interior
        bverts = []
        corners = []
        for key, inc in groups.items():
            if len(inc) == 2:
                bverts.append(inc)
            elif len(inc) == 3:
                corners.append(inc)
            else:
                raise RuntimeError("unexpected vertex multiplicity")
        assert len(corners) == 8
        self._bvert_incidences = bverts
        self._corner_incidences = corners
        self.n_int_verts = len(interior)
        self.n_bverts = len(bverts)
        self.n_corners = 8
        self.n_verts = self.n_int_verts + self.n_bverts + self.n_corners
        self._vid_of = {}
        for vid, (p, i, j) in enumerate(interior):
            self._vid_of[(p, i, j)] = vid
        for n, inc in enumerate(bverts):
            for rec in inc:
                self._vid_of[rec] = self.n_int_verts + n
        for n, inc in enumerate(corners):
            for rec in inc:
                self._vid_of[rec] = self.n_int_verts + self.n_bverts + n

    # ---------------- interior edges ----------------

    def _build_interior_edges(self):
        N = self.N
        lat = -HALF + np.arange(N + 1) * self.delta
        centers = -HALF + (np.arange(N) + 0.5) * self.delta
        rows = []
        for p in range(1, 7):
            for j in range(1, N):       # vertical edges x = lat[j]
                for k in range(N):
                    rows.append((0, p, self.cell_id(p, j - 1, k),
                                 self.cell_id(p, j, k), lat[j], centers[k],
                                 self._vid_of.get((p, j, k), None), (p, j, k),
                                 (p, j, k + 1)))
            for k in range(1, N):       # horizontal edges y = lat[k]
                for j in range(N):
                    rows.append((1, p, self.cell_id(p, j, k - 1),
                                 self.cell_id(p, j, k), centers[j], lat[k],
                                 None, (p, j, k), (p, j + 1, k)))
        nE = len(rows)
        self.nEi = nE
        self.ie_orient = np.array([r[0] for r in rows])
        self.ie_panel = np.array([r[1] for r in rows])
        self.ie_cL = np.array([r[2] for r in rows])
        self.ie_cR = np.array([r[3] for r in rows])
        a = np.array([r[4] for r in rows])
        bq = np.array([r[5] for r in rows])
        half = 0.5 * self.delta
        t = self.quad.edge_t
        # node coordinates along the edge
        self.ie_x = np.where(self.ie_orient[:, None] == 0, a[:, None],
                             a[:, None] + half * t[None, :])
        self.ie_y = np.where(self.ie_orient[:, None] == 0,
                             bq[:, None] + half * t[None, :], bq[:, None])
        self.ie_metric = geo.metric_at(self.ie_x, self.ie_y, self.R)
        self.ie_v0 = np.array([self._vid_of[r[7]] for r in rows])
        self.ie_v1 = np.array([self._vid_of[r[8]] for r in rows])
        # contravariant conversion (2x3) at the two endpoints
        conv = np.empty((nE, 2, 2, 3))
        for e_i, (xx, yy) in enumerate(((self.ie_x[:, 0], self.ie_y[:, 0]),
                                        (self.ie_x[:, -1], self.ie_y[:, -1]))):
            for p in range(1, 7):
                sel = self.ie_panel == p
                dx, dy = geo.covariant_basis(p, xx[sel], yy[sel], self.R)
                m = geo.metric_at(xx[sel], yy[sel], self.R)
                det = (m.g11 * m.g22 - m.g12 * m.g12)[:, None]
                conv[sel, e_i, 0, :] = (m.g22[:, None] * dx - m.g12[:, None] * dy) / det
                conv[sel, e_i, 1, :] = (-m.g12[:, None] * dx + m.g11[:, None] * dy) / det
        self.ie_end_conv = conv
        # frozen-metric operator data at edge-interior nodes (flattened)
        xi_ = self.ie_x[:, 1:-1].ravel()
        yi_ = self.ie_y[:, 1:-1].ravel()
        mi = geo.metric_at(xi_, yi_, self.R)
        self.og_ie = OperatorGeometry(mi.ginv11, mi.ginv12, mi.ginv22)
        orient_flat = np.repeat(self.ie_orient, self.q - 2)
        self.ie_tan_x = np.where(orient_flat == 1, 1.0, 0.0)
        self.ie_tan_y = np.where(orient_flat == 1, 0.0, 1.0)
        self.ie_orient_flat = orient_flat

    # ---------------- interior vertices ----------------

    def _build_interior_vertices(self):
        lat = -HALF + np.arange(self.N + 1) * self.delta
        recs = self._interior_lattice
        n = len(recs)
        self.iv_panel = np.array([p for p, _, _ in recs])
        self.iv_x = np.array([lat[i] for _, i, _ in recs])
        self.iv_y = np.array([lat[j] for _, _, j in recs])
        cells = np.empty((n, 4), dtype=int)     # SW, SE, NW, NE
        for r, (p, i, j) in enumerate(recs):
            cells[r] = [self.cell_id(p, i - 1, j - 1), self.cell_id(p, i, j - 1),
                        self.cell_id(p, i - 1, j), self.cell_id(p, i, j)]
        self.iv_cells = cells
        m = geo.metric_at(self.iv_x, self.iv_y, self.R)
        self.iv_metric = m
        self.og_iv = OperatorGeometry(m.ginv11, m.ginv12, m.ginv22)
        drdx = np.empty((n, 3))
        drdy = np.empty((n, 3))
        for p in range(1, 7):
            sel = self.iv_panel == p
            dx, dy = geo.covariant_basis(p, self.iv_x[sel], self.iv_y[sel], self.R)
            drdx[sel] = dx
            drdy[sel] = dy
        self.iv_drdx = drdx
        self.iv_drdy = drdy
        # trace rows: corner of each adjacent cell seen from that cell
        cb = self.corner_basis
        self.iv_corner_rows = np.stack([cb[(1, 1)], cb[(-1, 1)],
                                        cb[(1, -1)], cb[(-1, -1)]])  # SW..NE order

    # ---------------- panel boundary edges ----------------

    def _latlon_frame(self, panel, x, y):
        """xi, eta, A matrix and chart tangent helpers at panel points."""
        xi, eta = geo.panel_to_sphere(panel, x, y)
        A = geo.velocity_matrix_at(panel, x, y, self.R)
        return xi, eta, A

    def _chart_tangent(self, panel, x, y, direction):
        """Unit (xi, eta)-plane tangent of an in-panel direction."""
        jxx, jxy, jex, jey = geo.chart_jacobian(panel, x, y)
        tx = jxx * direction[0] + jxy * direction[1]
        ty = jex * direction[0] + jey * direction[1]
        nrm = np.hypot(tx, ty)
        return tx / nrm, ty / nrm

    def _build_boundary_edges(self):
        N = self.N
        q = self.q
        half = 0.5 * self.delta
        t = self.quad.edge_t
        rows = {k: [] for k in ("pA", "sideA", "pB", "sideB", "flip",
                                "cA", "cB", "m")}
        for (pA, sideA, pB, sideB, flip) in self.adjacency:
            for m in range(N):
                mB = N - 1 - m if flip else m
                jA, kA = _side_cell(sideA, m, N)
                jB, kB = _side_cell(sideB, mB, N)
                rows["pA"].append(pA)
                rows["sideA"].append(sideA)
                rows["pB"].append(pB)
                rows["sideB"].append(sideB)
                rows["flip"].append(flip)
                rows["cA"].append(self.cell_id(pA, jA, kA))
                rows["cB"].append(self.cell_id(pB, jB, kB))
                rows["m"].append(m)
        nE = len(rows["pA"])
        self.nEb = nE
        self.be_cA = np.array(rows["cA"])
        self.be_cB = np.array(rows["cB"])
        self.be_pA = np.array(rows["pA"])
        self.be_pB = np.array(rows["pB"])
        self.be_sideA = rows["sideA"]
        self.be_sideB = rows["sideB"]

        centers = -HALF + (np.arange(N) + 0.5) * self.delta
        self.be_xA = np.empty((nE, q))
        self.be_yA = np.empty((nE, q))
        self.be_xB = np.empty((nE, q))
        self.be_yB = np.empty((nE, q))
        self.be_xi = np.empty((nE, q))
        self.be_eta = np.empty((nE, q))
        self.be_basisA = np.empty((nE, self.nm, q))
        self.be_basisB = np.empty((nE, self.nm, q))
        self.be_AA = np.empty((nE, q, 2, 2))
        self.be_AB = np.empty((nE, q, 2, 2))
        self.be_nhat = np.empty((nE, q, 2))
        self.be_dlds = np.empty((nE, q, 2))      # per side A, B
        self.be_tanx = np.empty((nE, q))
        self.be_tany = np.empty((nE, q))
        self.be_v0 = np.empty(nE, dtype=int)
        self.be_v1 = np.empty(nE, dtype=int)
        self.be_eE = np.empty((nE, q, 3))
        self.be_eN = np.empty((nE, q, 3))
        self.be_lamA = np.empty((nE, q))
        self.be_lamB = np.empty((nE, q))

        for e in range(nE):
            pA, sideA = rows["pA"][e], rows["sideA"][e]
            pB, sideB = rows["pB"][e], rows["sideB"][e]
            m = rows["m"][e]
            s = centers[m] + half * t
            xA, yA = _side_points(sideA, s)
            self.be_xA[e], self.be_yA[e] = xA, yA
            xi, eta = geo.panel_to_sphere(pA, xA, yA)
            self.be_xi[e], self.be_eta[e] = xi, eta
            xB, yB = _panel_coords_of(xi, eta, pB)
            self.be_xB[e], self.be_yB[e] = xB, yB
            # lattice endpoints
            iA = {"B": (m, 0), "T": (m, N), "L": (0, m), "R": (N, m)}[sideA]
            iA2 = {"B": (m + 1, 0), "T": (m + 1, N), "L": (0, m + 1),
                   "R": (N, m + 1)}[sideA]
            self.be_v0[e] = self._vid_of[(pA,) + iA]
            self.be_v1[e] = self._vid_of[(pA,) + iA2]

            cA = rows["cA"][e]
            cB = rows["cB"][e]
            XA = (xA - self.cell_xc[cA]) / half
            YA = (yA - self.cell_yc[cA]) / half
            self.be_basisA[e] = self.basis.eval(XA, YA)
            XB = (xB - self.cell_xc[cB]) / half
            YB = (yB - self.cell_yc[cB]) / half
            self.be_basisB[e] = self.basis.eval(XB, YB)

            AA = geo.velocity_matrix_at(pA, xA, yA, self.R)
            AB = geo.velocity_matrix_at(pB, xB, yB, self.R)
            self.be_AA[e, :, 0, 0], self.be_AA[e, :, 0, 1] = AA.a11, AA.a12
            self.be_AA[e, :, 1, 0], self.be_AA[e, :, 1, 1] = AA.a21, AA.a22
            self.be_AB[e, :, 0, 0], self.be_AB[e, :, 0, 1] = AB.a11, AB.a12
            self.be_AB[e, :, 1, 0], self.be_AB[e, :, 1, 1] = AB.a21, AB.a22

            mA = geo.metric_at(xA, yA, self.R)
            mB = geo.metric_at(xB, yB, self.R)
            self.be_lamA[e] = mA.lambda_jac
            self.be_lamB[e] = mB.lambda_jac
            nA = np.array(_side_inward(sideA)) * -1.0
            nB = np.array(_side_inward(sideB)) * -1.0
            wA = self._piola(AA, mA.lambda_jac, nA)
            wB = self._piola(AB, mB.lambda_jac, nB)
            self.be_dlds[e, :, 0] = np.hypot(wA[:, 0], wA[:, 1])
            self.be_dlds[e, :, 1] = np.hypot(wB[:, 0], wB[:, 1])
            self.be_nhat[e] = wA / self.be_dlds[e, :, 0][:, None]

            tg = self._chart_tangent(pA, xA, yA, _side_along(sideA))
            self.be_tanx[e], self.be_tany[e] = tg
            eE, eN = geo.east_north(xi, eta)
            self.be_eE[e] = eE
            self.be_eN[e] = eN

        self.be_ceta = np.cos(self.be_eta)
        self.be_Ainv_A = np.linalg.inv(self.be_AA)
        self.be_Ainv_B = np.linalg.inv(self.be_AB)
        met_in = np.cos(self.be_eta[:, 1:-1].ravel()) ** 2
        self.og_be = OperatorGeometry(np.ones_like(met_in),
                                      np.zeros_like(met_in), met_in)

    @staticmethod
    def _piola(A: geo.VelocityMatrix, lam, n):
        """lam * A^{-T} n, the physical normal times dL/ds, shape (q, 2)."""
        det = A.det()
        # A^{-T} = (1/det) [[a22, -a21], [-a12, a11]]
        wx = (A.a22 * n[0] - A.a21 * n[1]) * lam / det
        wy = (-A.a12 * n[0] + A.a11 * n[1]) * lam / det
        return np.stack([wx, wy], axis=-1)

    # ---------------- panel boundary vertices and corners ----------------

    def _build_boundary_vertices(self):
        N = self.N
        lat = -HALF + np.arange(N + 1) * self.delta
        half = 0.5 * self.delta

        def lattice_xy(i, j):
            return lat[i], lat[j]

        def side_of(i, j):
            sides = []
            if j == 0:
                sides.append(("B", i))
            if j == N:
                sides.append(("T", i))
            if i == 0:
                sides.append(("L", j))
            if i == N:
                sides.append(("R", j))
            return sides

        def cells_at(p, i, j):
            out = []
            for jj in (i - 1, i):
                for kk in (j - 1, j):
                    if 0 <= jj < N and 0 <= kk < N:
                        out.append((p, jj, kk))
            return out

        groups = self._bvert_incidences + self._corner_incidences
        nV = len(groups)
        self.nVb = nV
        max_c = 4
        self.bv_ncells = np.empty(nV, dtype=int)
        self.bv_cells = np.zeros((nV, max_c), dtype=int)
        self.bv_cell_box = np.zeros((nV, max_c, 4))
        self.bv_cell_panel = np.zeros((nV, max_c), dtype=int)
        self.bv_tr_rows = np.zeros((nV, max_c, self.nm))
        self.bv_cell_A = np.zeros((nV, max_c, 2, 2))
        self.bv_lam = np.ones((nV, max_c))
        self.bv_xi = np.empty(nV)
        self.bv_eta = np.empty(nV)
        self.bv_eE = np.empty((nV, 3))
        self.bv_eN = np.empty((nV, 3))
        self.bv_fam_t = np.zeros((nV, 4, 2))
        self.bv_fam_kind = np.zeros((nV, 4), dtype=int)   # 0 unused, 1 through, 2 half
        self.bv_vid = np.empty(nV, dtype=int)

        for r, inc in enumerate(groups):
            p0, i0, j0 = inc[0]
            x0, y0 = lattice_xy(i0, j0)
            xi, eta = geo.panel_to_sphere(p0, x0, y0)
            self.bv_xi[r], self.bv_eta[r] = float(xi), float(eta)
            eE, eN = geo.east_north(xi, eta)
            self.bv_eE[r], self.bv_eN[r] = eE, eN
            self.bv_vid[r] = self._vid_of[inc[0]]

            cells = []
            for (p, i, j) in inc:
                cells.extend(cells_at(p, i, j))
            assert len(cells) == (4 if len(inc) == 2 else 3)
            self.bv_ncells[r] = len(cells)
            for s, (p, jj, kk) in enumerate(cells):
                cid = self.cell_id(p, jj, kk)
                self.bv_cells[r, s] = cid
                self.bv_cell_panel[r, s] = p
                self.bv_cell_box[r, s] = (lat[jj], lat[jj + 1], lat[kk], lat[kk + 1])
                xv, yv = geo.sphere_to_panel(xi, eta, p, tol=1e-9)
                X = (xv - self.cell_xc[cid]) / half
                Y = (yv - self.cell_yc[cid]) / half
                self.bv_tr_rows[r, s] = self.basis.eval(np.array([X]),
                                                        np.array([Y]))[:, 0]
                Av = geo.velocity_matrix_at(p, xv, yv, self.R)
                self.bv_cell_A[r, s] = [[float(Av.a11), float(Av.a12)],
                                        [float(Av.a21), float(Av.a22)]]
                self.bv_lam[r, s] = geo.metric_at(xv, yv, self.R).lambda_jac
            if len(cells) == 3:
                self.bv_cells[r, 3] = self.bv_cells[r, 0]
                self.bv_cell_panel[r, 3] = self.bv_cell_panel[r, 0]
                self.bv_cell_box[r, 3] = self.bv_cell_box[r, 0]
                self.bv_tr_rows[r, 3] = self.bv_tr_rows[r, 0]
                self.bv_cell_A[r, 3] = self.bv_cell_A[r, 0]
                self.bv_lam[r, 3] = self.bv_lam[r, 0]

            # family tangents
            fams = []
            if len(inc) == 2:
                # through family: boundary curve via the first panel's chart
                (pa, ia, ja) = inc[0]
                (sideA, _) = side_of(ia, ja)[0]
                xa, ya = lattice_xy(ia, ja)
                fams.append((self._chart_tangent(pa, np.array([xa]),
                                                 np.array([ya]),
                                                 _side_along(sideA)), 1))
                for (p, i, j) in inc:
                    (side, _) = side_of(i, j)[0]
                    xv, yv = lattice_xy(i, j)
                    fams.append((self._chart_tangent(p, np.array([xv]),
                                                     np.array([yv]),
                                                     _side_inward(side)), 2))
            else:
                # cube corner: three half families along the boundary edges
                for (p, i, j) in inc:
                    for (side, par) in side_of(i, j):
                        along = np.array(_side_along(side))
                        sgn = 1.0 if par == 0 else -1.0
                        xv, yv = lattice_xy(i, j)
                        fams.append((self._chart_tangent(
                            p, np.array([xv]), np.array([yv]), sgn * along), 2))
                # each boundary edge is seen from both of its panels; dedupe
                fams = self._dedupe_corner_fams(fams)
            for s, ((tx, ty), kind) in enumerate(fams[:4]):
                self.bv_fam_t[r, s] = (float(tx[0]), float(ty[0]))
                self.bv_fam_kind[r, s] = kind

        self.og_bv = OperatorGeometry(np.ones(nV), np.zeros(nV),
                                      np.cos(self.bv_eta) ** 2)

    @staticmethod
    def _dedupe_corner_fams(fams):
        out = []
        for (t, kind) in fams:
            tv = np.array([float(t[0][0]), float(t[1][0])])
            dup = False
            for (t2, _) in out:
                tv2 = np.array([float(t2[0][0]), float(t2[1][0])])
                if abs(tv @ tv2) > 1.0 - 1e-8:
                    dup = True
                    break
            if not dup:
                out.append((t, kind))
        return out
