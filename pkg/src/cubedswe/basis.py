"""Modal Legendre basis and Gauss-Lobatto quadrature on the reference cell.

The DG space is the total-degree space P^K on each cell, spanned by
orthonormalized Legendre products phi_(a,b)(X, Y) = N_ab P_a(X) P_b(Y)
with a + b <= K on the reference square [-1, 1]^2; the cell average of
phi^2 is one, so the mass matrix is |C| times the identity.
"""

import numpy as np
from numpy.polynomial import legendre as npleg


def gauss_lobatto(n):
    """n-point Gauss-Lobatto rule on [-1, 1]; weights sum to 2."""
    if n < 2:
        raise ValueError("Gauss-Lobatto needs at least 2 points")
    # interior nodes are the roots of P'_{n-1}
    cp = np.zeros(n)
    cp[-1] = 1.0
    dcp = npleg.legder(cp)
    inner = npleg.legroots(dcp)
    x = np.concatenate([[-1.0], np.sort(inner), [1.0]])
    pn = npleg.legval(x, cp)
    w = 2.0 / (n * (n - 1) * pn * pn)
    return x, w


def total_degree_exponents(K):
    """(a, b) pairs with a + b <= K, graded order, (0,0) first."""
    return [(d - b, b) for d in range(K + 1) for b in range(d + 1)]


def n_modes(K):
    return (K + 1) * (K + 2) // 2


class ModalBasis:
    """Orthonormalized total-degree Legendre basis on [-1, 1]^2."""

    def __init__(self, K):
        self.K = K
        self.exponents = total_degree_exponents(K)
        self.nm = len(self.exponents)
        self.norms = np.array([np.sqrt((2 * a + 1) * (2 * b + 1))
                               for a, b in self.exponents])

    def _leg(self, deg, t):
        c = np.zeros(deg + 1)
        c[deg] = 1.0
        return npleg.legval(t, c)

    def _dleg(self, deg, t):
        c = np.zeros(deg + 1)
        c[deg] = 1.0
        return npleg.legval(t, npleg.legder(c)) if deg > 0 else np.zeros_like(t)

    def eval(self, X, Y):
        """Basis values at reference points, shape (nm,) + X.shape."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = np.empty((self.nm,) + X.shape)
        for m, (a, b) in enumerate(self.exponents):
            out[m] = self.norms[m] * self._leg(a, X) * self._leg(b, Y)
        return out

    def grad(self, X, Y):
        """Reference-coordinate gradients, two arrays shaped like eval()."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        gx = np.empty((self.nm,) + X.shape)
        gy = np.empty((self.nm,) + X.shape)
        for m, (a, b) in enumerate(self.exponents):
            gx[m] = self.norms[m] * self._dleg(a, X) * self._leg(b, Y)
            gy[m] = self.norms[m] * self._leg(a, X) * self._dleg(b, Y)
        return gx, gy


def basis_eval(K, ell, X, Y):
    """Value and reference gradient of a single mode."""
    basis = ModalBasis(K)
    if not 0 <= ell < basis.nm:
        raise ValueError(f"mode index {ell} out of range for degree {K}")
    vals = basis.eval(X, Y)[ell]
    gx, gy = basis.grad(X, Y)
    return vals, (gx[ell], gy[ell])


class QuadratureRule:
    """Tensor Gauss-Lobatto volume rule and matching edge rule.

    q = K + 2 points per direction; weights are normalized so the sums
    are 1 (cell averages), the |C| and |edge| factors live in the caller.
    """

    def __init__(self, K):
        self.K = K
        self.q = K + 2
        t, w = gauss_lobatto(self.q)
        self.edge_t = t
        self.edge_w = w / 2.0
        Xg, Yg = np.meshgrid(t, t, indexing="ij")
        self.vol_X = Xg.ravel()
        self.vol_Y = Yg.ravel()
        self.vol_w = np.outer(w, w).ravel() / 4.0
        self.nq = self.vol_w.size
