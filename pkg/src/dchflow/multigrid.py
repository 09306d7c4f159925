"""Full approximation scheme (FAS) V-cycles with a nonlinear block smoother."""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .system import (
    DchState,
    apply_operator,
    build_all_contexts,
    residual_rms,
)

__all__ = ["MgWorkspace", "SolveReport", "SolverDivergence", "smooth", "v_cycle", "solve"]

log = logging.getLogger(__name__)


@dataclass
class SolveReport:
    cycles: int = 0
    residual: float = np.inf
    history: list = field(default_factory=list)
    smoother_flags: int = 0
    converged: bool = False


class SolverDivergence(RuntimeError):
    """Raised when the V-cycle loop hits ``max_cycles``; carries the report."""

    def __init__(self, report, tol):
        super().__init__(
            f"multigrid did not reach tol={tol:g} in {report.cycles} cycles "
            f"(residual {report.residual:.3e})"
        )
        self.report = report


class MgWorkspace:
    """Level contexts for one time step, all lagging the same ``phi_prev``."""

    def __init__(self, disc, phi_prev_finest):
        self.disc = disc
        self.hierarchy = disc.hierarchy
        self.contexts = build_all_contexts(disc, phi_prev_finest)
        self.flags = 0

    @property
    def L(self):
        return self.disc.L

    @property
    def finest(self):
        return self.contexts[-1]


def smooth(ctx, params, s, state, sweeps):
    """``sweeps`` nonlinear block Gauss-Seidel sweeps, in place; returns the flag count."""
    sp = ctx.space
    return _kernels.block_gauss_seidel(
        sp.indptr, sp.indices, sp.diag,
        ctx.A.data, ctx.M.data, ctx.B.data, ctx.C.data,
        sp.mesh.triangles, sp.area, sp.node_elem_ptr, sp.node_elem, sp.node_local,
        state.p, state.mu, state.phi, s.p, s.mu, s.phi,
        float(params.eps), float(params.gamma), float(params.tau), int(sweeps),
        int(params.max_newton), float(params.newton_tol),
    )


def _restrict_nodal(h, l, x):
    return DchState(h.restrict_nodal(l, x.p), h.restrict_nodal(l, x.mu), h.restrict_nodal(l, x.phi))


def _restrict_canonical(h, l, x):
    return DchState(h.restrict_canonical(l, x.p), h.restrict_canonical(l, x.mu),
                    h.restrict_canonical(l, x.phi))


def _prolong(h, l, x):
    return DchState(h.prolong(l, x.p), h.prolong(l, x.mu), h.prolong(l, x.phi))


def v_cycle(l, state, s, params, ws):
    """One FAS V-cycle on level ``l >= 1``; ``state`` is updated in place and returned."""
    if l < 1:
        raise ValueError("v_cycle needs a level with a coarser neighbour")
    h = ws.hierarchy
    ctx, coarse_ctx = ws.contexts[l], ws.contexts[l - 1]
    lam = params.sweeps

    ws.flags += smooth(ctx, params, s, state, lam)

    start = _restrict_nodal(h, l, state)
    r = s - apply_operator(ctx, params, state)
    s_c = _restrict_canonical(h, l, r) + apply_operator(coarse_ctx, params, start)
    xi = start.copy()
    if l == 1:
        ws.flags += smooth(coarse_ctx, params, s_c, xi, lam + params.coarse_sweeps)
    else:
        v_cycle(l - 1, xi, s_c, params, ws)
    corr = _prolong(h, l, xi - start)
    state.p += corr.p
    state.mu += corr.mu
    state.phi += corr.phi

    ws.flags += smooth(ctx, params, s, state, lam)
    return state


def solve(ws, params, s, initial, raise_on_failure=True):
    """Repeat V-cycles on the finest level until the residual RMS drops below ``tol``.

    Returns ``(state, report)``.  The pressure is shifted to zero mean after
    every cycle.
    """
    ctx = ws.finest
    state = initial.copy()
    if len(state) != ctx.N:
        raise ValueError("initial state must live on the finest level")
    report = SolveReport()
    space = ctx.space
    ws.flags = 0
    rms = residual_rms(ctx, params, s, state)
    report.history.append(rms)
    while rms >= params.tol:
        if report.cycles >= params.max_cycles:
            report.residual = rms
            report.smoother_flags = ws.flags
            if raise_on_failure:
                raise SolverDivergence(report, params.tol)
            return state, report
        v_cycle(ws.L, state, s, params, ws)
        state.p -= space.mean_value(state.p)
        report.cycles += 1
        rms = residual_rms(ctx, params, s, state)
        report.history.append(rms)
        if not np.isfinite(rms):
            report.residual = rms
            raise SolverDivergence(report, params.tol)
    state.p -= space.mean_value(state.p)
    report.residual = rms
    report.smoother_flags = ws.flags
    report.converged = True
    if ws.flags:
        log.warning("%d local Newton solves did not converge", ws.flags)
    return state, report
