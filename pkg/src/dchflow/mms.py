"""Manufactured solution and its source terms.

The exact fields are ``p = mu = phi = cos(pi t) G(x, y)`` with
``G = g(x) g(y)`` and ``g(s) = 16 s^2 (s - 1)^2``.  Every source is a sum of
time coefficients times five fixed spatial functions::

    G, lap G, div(G grad G), div(G^2 grad G), G^3

so the load vectors of those five functions are integrated once per level
and recombined at each time step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import triangle_rule

__all__ = ["ManufacturedSolution", "MmsLoads", "LOAD_DEGREE"]

# G^3 * u_i has total degree 25; this rule integrates every load exactly
LOAD_DEGREE = 25
_CHUNK = 4096


def g(s):
    return 16.0 * s * s * (s - 1.0) ** 2


def dg(s):
    return 32.0 * s * (s - 1.0) * (2.0 * s - 1.0)


def d2g(s):
    return 32.0 * (6.0 * s * s - 6.0 * s + 1.0)


def _spatial(x, y):
    """The five spatial building blocks evaluated at ``(x, y)``."""
    gx, gy = g(x), g(y)
    G = gx * gy
    Gx = dg(x) * gy
    Gy = gx * dg(y)
    lap = d2g(x) * gy + gx * d2g(y)
    grad2 = Gx * Gx + Gy * Gy
    return (G, lap, grad2 + G * lap, 2.0 * G * grad2 + G * G * lap, G**3)


@dataclass(frozen=True)
class ManufacturedSolution:
    eps: float
    gamma: float

    # exact fields (p, mu and phi coincide)
    def value(self, x, y, t):
        return math.cos(math.pi * t) * g(x) * g(y)

    def grad(self, x, y, t):
        c = math.cos(math.pi * t)
        return c * dg(x) * g(y), c * g(x) * dg(y)

    def laplacian(self, x, y, t):
        c = math.cos(math.pi * t)
        return c * (d2g(x) * g(y) + g(x) * d2g(y))

    def time_derivative(self, x, y, t):
        return -math.pi * math.sin(math.pi * t) * g(x) * g(y)

    def mean(self, t):
        return math.cos(math.pi * t) * (8.0 / 15.0) ** 2

    def coefficients(self, t):
        """3x5 matrix: row k holds the weights of the spatial blocks in source k."""
        c = math.cos(math.pi * t)
        sn = math.sin(math.pi * t)
        e, gm = self.eps, self.gamma
        return np.array([
            [0.0, -c, -gm * c * c, 0.0, 0.0],
            [-math.pi * sn, -e * c, -c * c, -gm * c**3, 0.0],
            [c * (1.0 + 1.0 / e), e * c, 0.0, 0.0, -(c**3) / e],
        ])

    def sources(self, t):
        """``(s1, s2, s3)`` as vectorised callables of ``(x, y)``.

        s1 = -lap p - gamma div(phi grad mu)
        s2 = phi_t - eps lap mu - div(phi (grad p + gamma phi grad mu))
        s3 = mu + eps lap phi - (phi^3 - phi)/eps
        """
        W = self.coefficients(t)

        def make(k):
            def f(x, y):
                blocks = _spatial(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
                return sum(W[k, j] * blocks[j] for j in range(5))
            return f

        return make(0), make(1), make(2)

    def field_functions(self, t):
        c = math.cos(math.pi * t)
        return (lambda x, y: c * g(x) * g(y)), (lambda x, y: self.grad(x, y, t))


class MmsLoads:
    """Per-level load vectors ``(s_k(., t), u_i)`` for the manufactured sources."""

    def __init__(self, space, solution, degree=LOAD_DEGREE):
        self.space = space
        self.solution = solution
        self.degree = degree
        rule = triangle_rule(degree)
        tris = space.mesh.triangles
        xy = space.mesh.node_coords[tris]
        self.blocks = np.zeros((5, space.N))
        for lo in range(0, len(tris), _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            pts = np.einsum("qa,eai->eqi", rule.points, xy[sl])
            wq = space.area[sl, None] * rule.weights[None, :]
            for k, b in enumerate(_spatial(pts[..., 0], pts[..., 1])):
                local = (wq * b) @ rule.points
                self.blocks[k] += np.bincount(tris[sl].ravel(), weights=local.ravel(),
                                              minlength=space.N)

    def loads(self, t):
        """``(b1, b2, b3)`` at time ``t``."""
        b = self.solution.coefficients(t) @ self.blocks
        return b[0], b[1], b[2]

    def add_to(self, sources, t, tau):
        """Scheme right-hand sides with the manufactured loads folded in.

        The third block equation is negated when written as ``N3 = s3``, so
        its load enters with a minus sign; the second is scaled by ``tau``.
        """
        b1, b2, b3 = self.loads(t)
        out = sources.copy()
        out.p += b1
        out.mu += tau * b2
        out.phi -= b3
        return out
