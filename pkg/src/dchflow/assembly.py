"""P1 finite element matrices, load vectors, interpolation and error norms.

All matrices on a level share one compressed-sparse-row pattern (the node
adjacency of the triangulation), so the assembled ``data`` arrays of A, M, B,
C and Q line up entry by entry.  Element contributions are accumulated with
``np.bincount`` in element order, which makes assembly bit-reproducible.
"""

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .quadrature import triangle_rule

__all__ = ["FESpace", "MATRIX_DEGREE", "FUNCTION_DEGREE"]

MATRIX_DEGREE = 4  # highest polynomial degree among matrix integrands (Q)
FUNCTION_DEGREE = 6  # loads and errors for non-polynomial data


class FESpace:
    """Continuous piecewise-linear space on one :class:`MeshLevel`."""

    def __init__(self, mesh):
        self.mesh = mesh
        tris = mesh.triangles
        self.N = mesh.num_nodes
        self.E = len(tris)
        xy = mesh.node_coords[tris]  # (E, 3, 2)
        self.area = mesh.areas()
        if np.any(self.area <= 0):
            raise ValueError("triangles must be counterclockwise with positive area")
        # gradients of the barycentric coordinates, constant per element
        d = np.empty((self.E, 3, 2))
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            d[:, a, 0] = xy[:, b, 1] - xy[:, c, 1]
            d[:, a, 1] = xy[:, c, 0] - xy[:, b, 0]
        self.grads = d / (2.0 * self.area)[:, None, None]
        self._gram = np.einsum("eai,ebi->eab", self.grads, self.grads)

        rows = np.repeat(tris, 3, axis=1).ravel()
        cols = np.tile(tris, (1, 3)).ravel()
        keys = rows * self.N + cols
        uniq, inv = np.unique(keys, return_inverse=True)
        self._pos = inv.reshape(self.E, 3, 3)
        self.indices = (uniq % self.N).astype(np.int64)
        counts = np.bincount(uniq // self.N, minlength=self.N)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.nnz = len(uniq)
        row_of = np.repeat(np.arange(self.N), counts)
        self.diag = np.flatnonzero(self.indices == row_of).astype(np.int64)

        # node -> incident (element, local vertex) pairs, for pointwise smoothing
        order = np.argsort(tris.ravel(), kind="stable")
        self.node_elem = (order // 3).astype(np.int64)
        self.node_local = (order % 3).astype(np.int64)
        self.node_elem_ptr = np.concatenate(
            [[0], np.cumsum(np.bincount(tris.ravel(), minlength=self.N))]
        ).astype(np.int64)

        self._stiffness = self._matrix(self.area[:, None, None] * self._gram)
        local_mass = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
        self._mass = self._matrix(self.area[:, None, None] * local_mass)
        self.ones = np.ones(self.N)
        self.lumped = self._mass @ self.ones

    # -- assembly ----------------------------------------------------------
    def _scatter(self, local):
        return np.bincount(self._pos.ravel(), weights=local.ravel(), minlength=self.nnz)

    def _matrix(self, local):
        return sp.csr_matrix((self._scatter(local), self.indices, self.indptr),
                             shape=(self.N, self.N))

    def matrix_from_data(self, data):
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.N, self.N))

    def _check_field(self, v, name="field"):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.N,):
            raise ValueError(f"{name} has shape {v.shape}, expected ({self.N},)")
        return v

    def stiffness(self):
        """A_ij = (grad u_j, grad u_i)."""
        return self._stiffness

    def mass(self):
        """M_ij = (u_j, u_i)."""
        return self._mass

    def weighted_stiffness(self, w, power=1):
        """(w**power grad u_j, grad u_i) for a P1 weight ``w``; power 1 gives C, 2 gives B."""
        w = self._check_field(w, "weight")
        we = w[self.mesh.triangles]
        if power == 1:
            avg = we.mean(axis=1)
        elif power == 2:
            s = we.sum(axis=1)
            avg = (np.einsum("ea,ea->e", we, we) + s * s) / 12.0
        else:
            raise ValueError("power must be 1 or 2")
        return self._matrix((self.area * avg)[:, None, None] * self._gram)

    def phi_mass(self, psi):
        """Q_ij = (psi**2 u_j, u_i), integrated exactly."""
        psi = self._check_field(psi, "psi")
        rule = triangle_rule(MATRIX_DEGREE)
        lam = rule.points
        vq = psi[self.mesh.triangles] @ lam.T  # (E, q)
        wq = self.area[:, None] * rule.weights[None, :] * vq**2
        local = np.einsum("eq,qa,qb->eab", wq, lam, lam)
        return self._matrix(local)

    def cubic_vector(self, psi):
        """(psi**3, u_i) for every node; equals ``phi_mass(psi) @ psi``."""
        psi = self._check_field(psi, "psi")
        return _kernels.cubic_load(self.mesh.triangles, self.area, psi, np.empty(self.N))

    def quadrature_points(self, degree=FUNCTION_DEGREE):
        rule = triangle_rule(degree)
        xy = self.mesh.node_coords[self.mesh.triangles]  # (E, 3, 2)
        pts = np.einsum("qa,eai->eqi", rule.points, xy)
        return rule, pts[..., 0], pts[..., 1]

    def load(self, f, degree=FUNCTION_DEGREE):
        """b_i = (f, u_i) for a vectorised callable ``f(x, y)``."""
        rule, X, Y = self.quadrature_points(degree)
        fq = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
        local = (self.area[:, None] * rule.weights[None, :] * fq) @ rule.points
        return np.bincount(self.mesh.triangles.ravel(), weights=local.ravel(),
                           minlength=self.N)

    def interpolate(self, f):
        x, y = self.mesh.node_coords.T
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), (self.N,)).copy()

    # -- functionals -------------------------------------------------------
    def integrate(self, v):
        return float(self.lumped @ self._check_field(v))

    def mean_value(self, v):
        return self.integrate(v) / float(self.area.sum())

    def project_zero_mean(self, v):
        return self._check_field(v) - self.mean_value(v)

    def integrate_poly_of_field(self, v, g, degree=MATRIX_DEGREE):
        """Exact integral of ``g(v_h)`` when ``g`` is a polynomial of degree ``<= degree``."""
        v = self._check_field(v)
        rule = triangle_rule(degree)
        vq = v[self.mesh.triangles] @ rule.points.T
        return float(np.sum(self.area[:, None] * rule.weights[None, :] * g(vq)))

    def l2_error(self, v, exact, degree=FUNCTION_DEGREE):
        """||v_h - u||_{L2} for a callable ``exact(x, y)``."""
        v = self._check_field(v)
        rule, X, Y = self.quadrature_points(degree)
        vq = v[self.mesh.triangles] @ rule.points.T
        e = vq - exact(X, Y)
        return float(np.sqrt(np.sum(self.area[:, None] * rule.weights[None, :] * e * e)))

    def h1_error(self, v, exact, exact_grad, degree=FUNCTION_DEGREE):
        """Full H1 norm of ``v_h - u``; ``exact_grad(x, y)`` returns ``(ux, uy)``."""
        v = self._check_field(v)
        rule, X, Y = self.quadrature_points(degree)
        gh = np.einsum("ea,eai->ei", v[self.mesh.triangles], self.grads)
        gx, gy = exact_grad(X, Y)
        ex = gh[:, 0:1] - gx
        ey = gh[:, 1:2] - gy
        semi = np.sum(self.area[:, None] * rule.weights[None, :] * (ex * ex + ey * ey))
        l2 = self.l2_error(v, exact, degree)
        return float(np.sqrt(semi + l2 * l2))

    def l2_norm(self, v):
        v = self._check_field(v)
        return float(np.sqrt(v @ (self._mass @ v)))

    def h1_norm(self, v):
        v = self._check_field(v)
        return float(np.sqrt(v @ (self._mass @ v) + v @ (self._stiffness @ v)))
