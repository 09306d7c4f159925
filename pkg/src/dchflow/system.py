"""The level-wise nonlinear operator of the convex-splitting scheme.

At one time step the unknowns ``(p, mu, phi)`` on level ``l`` satisfy
``N_l(p, mu, phi) = s_l`` with::

    N1 = A p + gamma C mu
    N2 = M phi + tau (eps A + gamma B) mu + tau C p
    N3 = eps A phi + (1/eps) Q(phi) phi - M mu

where ``B`` and ``C`` are stiffness matrices weighted by ``phi_prev**2`` and
``phi_prev``.  This module also carries the physical diagnostics: energy,
mass and the one-step energy balance.
"""

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import _kernels
from .assembly import MATRIX_DEGREE, FESpace
from .quadrature import triangle_rule

__all__ = [
    "DchParams",
    "DchState",
    "Discretization",
    "LevelContext",
    "SourceTriple",
    "build_level_context",
    "apply_operator",
    "compute_sources",
    "residual",
    "residual_rms",
    "energy",
    "total_mass",
    "energy_law_audit",
    "EnergyAudit",
]


@dataclass(frozen=True)
class DchParams:
    eps: float
    gamma: float
    tau: float
    T: float = 0.0
    sweeps: int = 2
    tol: float = 1e-12
    L: int = 1
    n0: int = 1
    seed: int = 42
    max_cycles: int = 200
    coarse_sweeps: int = 0
    max_newton: int = 20
    newton_tol: float = 1e-14

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be at least 1, got {self.sweeps}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.T < 0:
            raise ValueError(f"T must be non-negative, got {self.T}")

    @property
    def num_steps(self):
        M = round(self.T / self.tau)
        if M < 0 or abs(M * self.tau - self.T) > 1e-9 * max(1.0, self.T):
            raise ValueError(f"T/tau = {self.T / self.tau!r} is not an integer")
        return int(M)

    def with_(self, **kw):
        return replace(self, **kw)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class DchState:
    """Nodal coefficients ``(p, mu, phi)`` on one level."""

    p: np.ndarray
    mu: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if not (self.p.shape == self.mu.shape == self.phi.shape and self.p.ndim == 1):
            raise ValueError("p, mu and phi must be vectors of equal length")

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))

    def copy(self):
        return DchState(self.p.copy(), self.mu.copy(), self.phi.copy())

    def __len__(self):
        return self.p.shape[0]

    def as_array(self):
        return np.column_stack([self.p, self.mu, self.phi])

    def __add__(self, other):
        return DchState(self.p + other.p, self.mu + other.mu, self.phi + other.phi)

    def __sub__(self, other):
        return DchState(self.p - other.p, self.mu - other.mu, self.phi - other.phi)


# the source triple has the same layout as a state
SourceTriple = DchState


class Discretization:
    """A mesh hierarchy together with the P1 space on each of its levels."""

    def __init__(self, hierarchy):
        self.hierarchy = hierarchy
        self.spaces = [FESpace(level) for level in hierarchy.levels]

    @property
    def L(self):
        return self.hierarchy.L

    @property
    def finest(self):
        return self.spaces[-1]


@dataclass(eq=False)
class LevelContext:
    level: int
    space: FESpace
    phi_prev: np.ndarray
    A: object = field(repr=False)
    M: object = field(repr=False)
    B: object = field(repr=False)
    C: object = field(repr=False)

    @property
    def N(self):
        return self.space.N


def _context(level, space, phi_prev):
    return LevelContext(
        level,
        space,
        phi_prev,
        space.stiffness(),
        space.mass(),
        space.weighted_stiffness(phi_prev, 2),
        space.weighted_stiffness(phi_prev, 1),
    )


def build_level_context(disc, l, phi_prev_finest):
    """Context for level ``l``, lagging ``phi_prev`` restricted by point sampling."""
    if not 0 <= l <= disc.L:
        raise ValueError(f"level {l} outside 0..{disc.L}")
    phi_l = disc.hierarchy.restrict_nodal_to(l, phi_prev_finest)
    return _context(l, disc.spaces[l], phi_l)


def build_all_contexts(disc, phi_prev_finest):
    phi = np.asarray(phi_prev_finest, dtype=float)
    if phi.shape != (disc.finest.N,):
        raise ValueError("phi_prev must live on the finest level")
    out = [None] * (disc.L + 1)
    for l in range(disc.L, -1, -1):
        out[l] = _context(l, disc.spaces[l], phi)
        if l > 0:
            phi = disc.hierarchy.restrict_nodal(l, phi)
    return out


def _check_level(ctx, xi):
    if len(xi) != ctx.N:
        raise ValueError(f"state has {len(xi)} nodes, level {ctx.level} has {ctx.N}")


def apply_operator(ctx, params, xi):
    """``N_l(xi)`` as a :class:`SourceTriple`-shaped triple."""
    _check_level(ctx, xi)
    sp = ctx.space
    out = DchState.zeros(ctx.N)
    _kernels.block_operator(
        sp.indptr, sp.indices, ctx.A.data, ctx.M.data, ctx.B.data, ctx.C.data,
        sp.mesh.triangles, sp.area, xi.p, xi.mu, xi.phi,
        float(params.eps), float(params.gamma), float(params.tau), out.p, out.mu, out.phi,
    )
    return out


def compute_sources(ctx, params):
    """Right-hand sides of the unsourced scheme."""
    Mphi = ctx.M @ ctx.phi_prev
    return DchState(np.zeros(ctx.N), Mphi, Mphi / params.eps)


def residual(ctx, params, s, xi):
    return s - apply_operator(ctx, params, xi)


def residual_rms(ctx, params, s, xi):
    r = residual(ctx, params, s, xi)
    total = r.p @ r.p + r.mu @ r.mu + r.phi @ r.phi
    return float(np.sqrt(total / (3 * ctx.N)))


def _double_well(v):
    return 0.25 * (v * v - 1.0) ** 2


def energy(space, phi, eps):
    """``int eps/2 |grad phi|^2 + F(phi)/eps`` with the quartic well integrated exactly."""
    phi = np.asarray(phi, dtype=float)
    grad = 0.5 * eps * float(phi @ (space.stiffness() @ phi))
    return grad + space.integrate_poly_of_field(phi, _double_well) / eps


def total_mass(space, phi):
    return space.integrate(phi)


@dataclass
class EnergyAudit:
    energy_new: float
    energy_old: float
    chem_dissipation: float  # eps ||grad mu||^2
    darcy_dissipation: float  # ||u||^2 / gamma
    split_grad: float  # 2 eps^2 ||d_t grad phi||^2
    split_square: float  # ||d_t (phi^2)||^2
    split_product: float  # 2 ||phi d_t phi||^2
    split_plain: float  # 2 ||d_t phi||^2
    tau: float
    eps: float

    @property
    def dissipation(self):
        split = self.split_grad + self.split_square + self.split_product + self.split_plain
        return self.chem_dissipation + self.darcy_dissipation + self.tau / (4.0 * self.eps) * split

    @property
    def defect(self):
        return self.energy_new - self.energy_old + self.tau * self.dissipation


def energy_law_audit(space, params, phi_prev, state_new):
    """Every term of the one-step discrete energy balance.

    ``defect`` vanishes (up to the solver residual) for a converged step of
    the unsourced scheme started from ``phi_prev``.
    """
    eps, gam, tau = params.eps, params.gamma, params.tau
    phi_prev = np.asarray(phi_prev, dtype=float)
    phi, mu, p = state_new.phi, state_new.mu, state_new.p
    A, Mm = space.stiffness(), space.mass()
    dphi = (phi - phi_prev) / tau
    chem = eps * float(mu @ (A @ mu))
    if gam > 0:
        C = space.weighted_stiffness(phi_prev, 1)
        B = space.weighted_stiffness(phi_prev, 2)
        # ||grad p + gamma phi_prev grad mu||^2
        u2 = float(p @ (A @ p) + 2.0 * gam * (p @ (C @ mu)) + gam * gam * (mu @ (B @ mu)))
        darcy = u2 / gam
    else:
        darcy = 0.0
    split_grad = 2.0 * eps * eps * float(dphi @ (A @ dphi))
    split_plain = 2.0 * float(dphi @ (Mm @ dphi))
    rule = triangle_rule(MATRIX_DEGREE)
    tris = space.mesh.triangles
    new_q = phi[tris] @ rule.points.T
    old_q = phi_prev[tris] @ rule.points.T
    wts = space.area[:, None] * rule.weights[None, :]
    d_sq = (new_q * new_q - old_q * old_q) / tau
    d_q = (new_q - old_q) / tau
    split_square = float(np.sum(wts * d_sq * d_sq))
    split_product = 2.0 * float(np.sum(wts * (new_q * d_q) ** 2))
    return EnergyAudit(
        energy(space, phi, eps),
        energy(space, phi_prev, eps),
        chem,
        darcy,
        split_grad,
        split_square,
        split_product,
        split_plain,
        tau,
        eps,
    )
