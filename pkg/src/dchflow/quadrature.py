"""Gauss quadrature on triangles.

Rules are built by collapsing a tensor Gauss rule onto the triangle (Duffy
map), which gives positive weights and exactness ``2k - 1`` with ``k`` points
per direction.  Weights are normalised to sum to one, so a rule integrates
over a triangle ``K`` as ``|K| * sum(w * f(points))``.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

__all__ = ["QuadratureRule", "triangle_rule", "monomial_integral"]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (q, 3) barycentric coordinates
    weights: np.ndarray  # (q,), sum to 1
    degree: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Rule integrating every polynomial of total degree ``<= degree`` exactly."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    k = max(1, (degree + 2) // 2)
    s, ws = roots_legendre(k)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    # weight (1 - t) absorbs the Jacobian of the collapse
    t, wt = roots_jacobi(k, 1.0, 0.0)
    t = 0.5 * (t + 1.0)
    wt = 0.25 * wt
    S, T = np.meshgrid(s, t, indexing="ij")
    WS, WT = np.meshgrid(ws, wt, indexing="ij")
    xi = (S * (1.0 - T)).ravel()
    eta = T.ravel()
    w = (WS * WT).ravel() * 2.0  # reference triangle has area 1/2
    bary = np.column_stack([1.0 - xi - eta, xi, eta])
    bary.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(bary, w, 2 * k - 1)


def monomial_integral(a, b, c=0):
    """Exact integral of ``l1^a l2^b l3^c`` over a triangle, divided by its area."""
    return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
