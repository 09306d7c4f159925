"""Independent dense reference implementations used as test oracles.

Nothing here imports the package's assembly or solver code: matrices are
built element by element from a hard-coded degree-4 rule and the nonlinear
system is solved by a plain dense Newton iteration.
"""

import numpy as np

# symmetric 6-point rule on the reference triangle, exact to degree 4
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
RULE4 = (
    np.array([
        [1 - 2 * _A1, _A1, _A1], [_A1, 1 - 2 * _A1, _A1], [_A1, _A1, 1 - 2 * _A1],
        [1 - 2 * _A2, _A2, _A2], [_A2, 1 - 2 * _A2, _A2], [_A2, _A2, 1 - 2 * _A2],
    ]),
    np.array([_W1] * 3 + [_W2] * 3),
)


def unit_square_mesh(n):
    """Same numbering and diagonal direction as the package mesh, built by loops."""
    coords = [(i / n, j / n) for j in range(n + 1) for i in range(n + 1)]
    tris = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            tris.append((a, a + 1, a + n + 2))
            tris.append((a, a + n + 2, a + n + 1))
    return np.array(coords), np.array(tris)


class DenseSystem:
    """Dense matrices A, M and the phi_prev-weighted C, B on a small mesh."""

    def __init__(self, n, phi_prev):
        self.coords, self.tris = unit_square_mesh(n)
        N = len(self.coords)
        self.N = N
        self.phi_prev = np.asarray(phi_prev, dtype=float)
        self.A = np.zeros((N, N))
        self.M = np.zeros((N, N))
        self.C = np.zeros((N, N))
        self.B = np.zeros((N, N))
        pts, wts = RULE4
        self._elems = []
        for tri in self.tris:
            xy = self.coords[tri]
            area = 0.5 * abs(np.linalg.det(np.array([xy[1] - xy[0], xy[2] - xy[0]])))
            # rows of the inverse Vandermonde-type matrix are barycentric gradients
            grads = np.linalg.inv(np.vstack([np.ones(3), xy.T]))[:, 1:]
            K = area * grads @ grads.T
            w = self.phi_prev[tri] @ pts.T  # phi_prev at the quadrature points
            for a in range(3):
                for b in range(3):
                    ia, ib = tri[a], tri[b]
                    self.A[ia, ib] += K[a, b]
                    self.M[ia, ib] += area * np.sum(wts * pts[:, a] * pts[:, b])
                    self.C[ia, ib] += K[a, b] * np.sum(wts * w)
                    self.B[ia, ib] += K[a, b] * np.sum(wts * w * w)
            self._elems.append((tri, area))

    def Q(self, psi):
        pts, wts = RULE4
        out = np.zeros((self.N, self.N))
        for tri, area in self._elems:
            v = psi[tri] @ pts.T
            loc = area * np.einsum("q,qa,qb->ab", wts * v * v, pts, pts)
            out[np.ix_(tri, tri)] += loc
        return out

    def operator(self, p, mu, phi, eps, gamma, tau):
        n1 = self.A @ p + gamma * self.C @ mu
        n2 = self.M @ phi + tau * (eps * self.A + gamma * self.B) @ mu + tau * self.C @ p
        n3 = eps * self.A @ phi + self.Q(phi) @ phi / eps - self.M @ mu
        return n1, n2, n3

    def newton(self, s1, s2, s3, eps, gamma, tau, x0=None, tol=1e-14, max_iter=60):
        """Full Newton on the bordered system with the constraint ``int p = 0``.

        Unknowns are ``(p, mu, phi, lam)``; ``lam`` multiplies the mass
        vector in the first block row so the pressure block is nonsingular.
        Returns ``(p, mu, phi)``.
        """
        N = self.N
        m = self.M @ np.ones(N)
        x = np.zeros(3 * N + 1) if x0 is None else np.concatenate([x0, [0.0]])
        for _ in range(max_iter):
            p, mu, phi, lam = x[:N], x[N:2 * N], x[2 * N:3 * N], x[-1]
            n1, n2, n3 = self.operator(p, mu, phi, eps, gamma, tau)
            F = np.concatenate([n1 + lam * m - s1, n2 - s2, n3 - s3, [m @ p]])
            J = np.zeros((3 * N + 1, 3 * N + 1))
            J[:N, :N] = self.A
            J[:N, N:2 * N] = gamma * self.C
            J[:N, -1] = m
            J[N:2 * N, :N] = tau * self.C
            J[N:2 * N, N:2 * N] = tau * (eps * self.A + gamma * self.B)
            J[N:2 * N, 2 * N:3 * N] = self.M
            J[2 * N:3 * N, N:2 * N] = -self.M
            J[2 * N:3 * N, 2 * N:3 * N] = eps * self.A + 3.0 * self.Q(phi) / eps
            J[-1, :N] = m
            dx = np.linalg.solve(J, -F)
            x += dx
            if np.max(np.abs(dx)) < tol * max(1.0, np.max(np.abs(x))):
                break
        else:
            raise RuntimeError("dense Newton did not converge")
        return x[:N], x[N:2 * N], x[2 * N:3 * N]
