"""Nested uniform triangulations of the unit square and intergrid transfers.

Level ``l`` has ``n = n0 * 2**l`` cells per side.  Every square cell is cut by
its bottom-left to top-right diagonal, so all triangles are right isosceles
with legs ``1/n``.  Nodes are numbered lexicographically, row by row::

    k = j * (n + 1) + i    <->    (x, y) = (i / n, j / n)
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = ["MeshLevel", "MeshHierarchy", "build_hierarchy", "write_mesh"]


@dataclass(frozen=True, eq=False)
class MeshLevel:
    level_index: int
    n: int
    node_coords: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)

    @classmethod
    def uniform(cls, level_index, n):
        s = np.arange(n + 1) / n
        X, Y = np.meshgrid(s, s)  # row j holds y = j/n
        coords = np.column_stack([X.ravel(), Y.ravel()])
        i, j = np.meshgrid(np.arange(n), np.arange(n))
        i, j = i.ravel(), j.ravel()
        a = j * (n + 1) + i
        b = a + 1
        c = a + n + 2
        d = a + n + 1
        lower = np.column_stack([a, b, c])
        upper = np.column_stack([a, c, d])
        tris = np.empty((2 * n * n, 3), dtype=np.int64)
        tris[0::2] = lower
        tris[1::2] = upper
        coords.setflags(write=False)
        tris.setflags(write=False)
        return cls(level_index, n, coords, tris)

    @property
    def num_nodes(self):
        return (self.n + 1) ** 2

    @property
    def num_triangles(self):
        return 2 * self.n * self.n

    @property
    def h(self):
        """Longest edge (the hypotenuse) of every triangle."""
        return np.sqrt(2.0) / self.n

    @property
    def spacing(self):
        """Grid spacing ``1/n`` (leg length)."""
        return 1.0 / self.n

    def areas(self):
        p = self.node_coords[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def grid(self, values):
        """View nodal values on the ``(n+1, n+1)`` lattice, ``[j, i]`` indexing."""
        return np.asarray(values).reshape(self.n + 1, self.n + 1)


def _prolongation(n_coarse):
    """Sparse matrix of the natural injection ``V_{l-1} -> V_l``."""
    nc = n_coarse
    nf = 2 * nc
    I, J = np.meshgrid(np.arange(nf + 1), np.arange(nf + 1))
    I, J = I.ravel(), J.ravel()
    fine = J * (nf + 1) + I

    def cidx(ic, jc):
        return jc * (nc + 1) + ic

    rows, cols, vals = [], [], []
    even = (I % 2 == 0) & (J % 2 == 0)
    rows.append(fine[even])
    cols.append(cidx(I[even] // 2, J[even] // 2))
    vals.append(np.ones(even.sum()))

    # midpoints of horizontal, vertical and diagonal coarse edges
    for mask, d0, d1 in (
        ((I % 2 == 1) & (J % 2 == 0), (-1, 0), (1, 0)),
        ((I % 2 == 0) & (J % 2 == 1), (0, -1), (0, 1)),
        ((I % 2 == 1) & (J % 2 == 1), (-1, -1), (1, 1)),
    ):
        for di, dj in (d0, d1):
            rows.append(fine[mask])
            cols.append(cidx((I[mask] + di) // 2, (J[mask] + dj) // 2))
            vals.append(np.full(mask.sum(), 0.5))

    P = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=((nf + 1) ** 2, (nc + 1) ** 2),
    )
    P.sort_indices()
    return P


def _injection_indices(n_coarse):
    """Fine-level node index of every coarse node."""
    nf = 2 * n_coarse
    ic, jc = np.meshgrid(np.arange(n_coarse + 1), np.arange(n_coarse + 1))
    return (2 * jc.ravel()) * (nf + 1) + 2 * ic.ravel()


class MeshHierarchy:
    """Levels ``0..L`` of nested meshes plus the transfers between them.

    ``prolongation[l]`` maps level ``l-1`` to level ``l`` (entry 0 is None).
    """

    def __init__(self, n0, L):
        if int(n0) != n0 or n0 < 1:
            raise ValueError(f"n0 must be a positive integer, got {n0!r}")
        if int(L) != L or L < 1:
            raise ValueError(f"L must be a positive integer, got {L!r}")
        self.n0 = int(n0)
        self.L = int(L)
        self.levels = [MeshLevel.uniform(l, self.n0 * 2**l) for l in range(self.L + 1)]
        self.prolongation = [None] + [
            _prolongation(self.levels[l - 1].n) for l in range(1, self.L + 1)
        ]
        self.restriction = [None] + [P.T.tocsr() for P in self.prolongation[1:]]
        self._inject = [None] + [
            _injection_indices(self.levels[l - 1].n) for l in range(1, self.L + 1)
        ]

    def __len__(self):
        return self.L + 1

    def __getitem__(self, l):
        return self.levels[l]

    @property
    def finest(self):
        return self.levels[-1]

    def _check(self, l, v, which):
        if not 1 <= l <= self.L:
            raise ValueError(f"level {l} has no coarser neighbour")
        expected = self.levels[l if which == "fine" else l - 1].num_nodes
        if v.shape[0] != expected:
            raise ValueError(
                f"{which} vector has length {v.shape[0]}, expected {expected} at level "
                f"{l if which == 'fine' else l - 1}"
            )

    def prolong(self, l, coarse):
        """Interpolate a level ``l-1`` field onto level ``l``."""
        coarse = np.asarray(coarse, dtype=float)
        self._check(l, coarse, "coarse")
        return self.prolongation[l] @ coarse

    def restrict_canonical(self, l, fine):
        """Transpose of the prolongation; for residual (dual) vectors."""
        fine = np.asarray(fine, dtype=float)
        self._check(l, fine, "fine")
        return self.restriction[l] @ fine

    def restrict_nodal(self, l, fine):
        """Sample a level ``l`` field at the level ``l-1`` nodes."""
        fine = np.asarray(fine, dtype=float)
        self._check(l, fine, "fine")
        return fine[self._inject[l]].copy()

    def restrict_nodal_to(self, l, fine):
        """Compose nodal restrictions from the finest level down to ``l``."""
        v = np.asarray(fine, dtype=float)
        for k in range(self.L, l, -1):
            v = self.restrict_nodal(k, v)
        return v

    def prolong_from(self, l, coarse, target=None):
        """Compose prolongations from level ``l`` up to ``target`` (default finest)."""
        target = self.L if target is None else target
        v = np.asarray(coarse, dtype=float)
        for k in range(l + 1, target + 1):
            v = self.prolong(k, v)
        return v


def build_hierarchy(n0=1, L=1):
    return MeshHierarchy(n0, L)


def write_mesh(level, path):
    """Dump node coordinates and triangles as plain text, one record per line."""
    with open(path, "w") as fh:
        fh.write(f"{level.num_nodes}\n")
        for x, y in level.node_coords:
            fh.write(f"{x!r} {y!r}\n")
        fh.write(f"{level.num_triangles}\n")
        for a, b, c in level.triangles:
            fh.write(f"{a} {b} {c}\n")
