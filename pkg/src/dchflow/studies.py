"""Refinement studies: manufactured-solution errors and Cauchy differences."""

import logging
import math
from dataclasses import dataclass, field

from .integrator import TimeIntegrator
from .mesh import build_hierarchy
from .mms import ManufacturedSolution
from .system import Discretization

__all__ = [
    "StudyRow",
    "FIELDS",
    "P_GAUGES",
    "rates",
    "refinement_tau",
    "convergence_study",
    "cauchy_study",
]

log = logging.getLogger(__name__)


@dataclass
class StudyRow:
    h: float
    tau: float
    errors: dict  # field name -> error norm
    rates: dict = field(default_factory=dict)  # field name -> rate (empty on first row)
    h_f: float = None  # fine mesh size for Cauchy rows (``h`` is then h_c)
    steps: int = 0
    cycles: int = 0
    alt_p: float = float("nan")  # pressure error under the other gauge


FIELDS = ("phi", "mu", "p")
# "mean": compare pressures at equal means; "corner": at equal values in the
# node (x, y) = (1, 0), the convention behind the reference pressure columns
P_GAUGES = ("mean", "corner")


def _corner(n):
    return n  # lexicographic index of (1, 0)


def _other(p_gauge):
    return "corner" if p_gauge == "mean" else "mean"


def _check_gauge(p_gauge):
    if p_gauge not in P_GAUGES:
        raise ValueError(f"p_gauge must be one of {P_GAUGES}, got {p_gauge!r}")


def rates(rows):
    """Fill ``rate = log2(e_prev / e)`` between successive rows, in place."""
    for prev, row in zip(rows, rows[1:]):
        row.rates = {
            k: (math.log2(prev.errors[k] / row.errors[k])
                if prev.errors[k] > 0 and row.errors[k] > 0 else float("nan"))
            for k in FIELDS
        }
    if rows:
        rows[0].rates = {}
    return rows


def refinement_tau(n, path, constant):
    """Time step on a refinement path, with ``h`` taken as the grid spacing ``1/n``."""
    spacing = 1.0 / n
    if path == "quadratic":
        return constant * spacing**2
    if path == "linear":
        return constant * spacing
    raise ValueError(f"unknown refinement path {path!r}")


def _levels_for(n, n0):
    L = int(round(math.log2(n / n0)))
    if n0 * 2**L != n or L < 1:
        raise ValueError(f"n={n} is not n0 * 2**L with L >= 1 (n0={n0})")
    return L


def convergence_study(norm, ns, path, params, constant=None, T=1.0, on_row=None,
                      p_gauge="mean"):
    """Manufactured-solution errors at ``T`` for each grid ``n`` in ``ns``.

    ``norm`` is ``"L2"`` or ``"H1"``.  The pressure is shifted to the exact
    mean before measuring, or with ``p_gauge="corner"`` to the exact value at
    (1, 0).  A failed run is reported on the row (errors NaN) without
    aborting the study.
    """
    if norm not in ("L2", "H1"):
        raise ValueError("norm must be 'L2' or 'H1'")
    _check_gauge(p_gauge)
    if constant is None:
        constant = 25.6 if path == "quadratic" else 1.6
    rows = []
    for n in ns:
        tau = refinement_tau(n, path, constant)
        L = _levels_for(n, params.n0)
        p = params.with_(tau=tau, T=T, L=L)
        disc = Discretization(build_hierarchy(p.n0, L))
        sol = ManufacturedSolution(p.eps, p.gamma)
        try:
            integ = TimeIntegrator(disc, p, mms=sol)
            state, records = integ.run_to_end(integ.initial_state("manufactured"))
            space = disc.finest
            exact, exact_grad = sol.field_functions(T)
            shifted = {
                "mean": state.p - space.mean_value(state.p) + sol.mean(T),
                "corner": state.p - state.p[_corner(n)] + sol.value(1.0, 0.0, T),
            }

            def err(v):
                if norm == "L2":
                    return space.l2_error(v, exact)
                return space.h1_error(v, exact, exact_grad)

            errs = {"phi": err(state.phi), "mu": err(state.mu), "p": err(shifted[p_gauge])}
            alt = err(shifted[_other(p_gauge)])
            cycles = sum(r.cycles for r in records)
        except Exception as exc:  # noqa: BLE001 - a failed cell must not sink the study
            errs = {k: float("nan") for k in FIELDS}
            alt = float("nan")
            cycles = -1
            log.error("study cell n=%d failed: %s", n, exc)
        rows.append(StudyRow(math.sqrt(2.0) / n, tau, errs, steps=p.num_steps, cycles=cycles,
                             alt_p=alt))
        rates(rows)
        if on_row is not None:
            on_row(rows[-1])
    return rows


def cauchy_study(norm, ns, path, params, constant, T, initial="cauchy", on_row=None,
                 p_gauge="mean"):
    """Cauchy differences between runs on consecutive grids ``n`` and ``2n``.

    ``ns`` lists the grids; row ``k`` compares ``ns[k]`` and ``ns[k+1]``.
    The coarse solution is prolonged exactly to the fine mesh and the
    difference measured there.  Pressure differences are taken at zero mean,
    or with ``p_gauge="corner"`` made to vanish at (1, 0).
    """
    if norm not in ("L2", "H1"):
        raise ValueError("norm must be 'L2' or 'H1'")
    _check_gauge(p_gauge)
    ns = list(ns)
    for a, b in zip(ns, ns[1:]):
        if b != 2 * a:
            raise ValueError("Cauchy pairs must halve the mesh size")
    finals = {}
    levels = {}
    L_max = _levels_for(ns[-1], params.n0)
    hier = build_hierarchy(params.n0, L_max)
    disc_max = Discretization(hier)

    def final_state(n):
        if n not in finals:
            tau = refinement_tau(n, path, constant)
            L = _levels_for(n, params.n0)
            p = params.with_(tau=tau, T=T, L=L)
            disc = Discretization(build_hierarchy(p.n0, L))
            integ = TimeIntegrator(disc, p)
            state, records = integ.run_to_end(integ.initial_state(initial))
            finals[n] = (state, p, sum(r.cycles for r in records))
            levels[n] = L
        return finals[n]

    rows = []
    for nc, nf in zip(ns, ns[1:]):
        try:
            sc, pc, cyc_c = final_state(nc)
            sf, pf, cyc_f = final_state(nf)
            Lc, Lf = levels[nc], levels[nf]
            space = disc_max.spaces[Lf]
            norm_of = space.l2_norm if norm == "L2" else space.h1_norm
            errs = {}
            for name in FIELDS:
                up = hier.prolong_from(Lc, getattr(sc, name), target=Lf)
                d = getattr(sf, name) - up
                if name == "p":
                    gauged = {"mean": space.project_zero_mean(d), "corner": d - d[_corner(nf)]}
                    d = gauged[p_gauge]
                    alt = norm_of(gauged[_other(p_gauge)])
                errs[name] = norm_of(d)
            steps = pf.num_steps
            cycles = cyc_c + cyc_f
            tau_c = pc.tau
        except Exception as exc:  # noqa: BLE001
            log.error("Cauchy pair (%d, %d) failed: %s", nc, nf, exc)
            errs = {k: float("nan") for k in FIELDS}
            alt = float("nan")
            steps, cycles, tau_c = 0, -1, refinement_tau(nc, path, constant)
        rows.append(StudyRow(math.sqrt(2.0) / nc, tau_c, errs, h_f=math.sqrt(2.0) / nf,
                             steps=steps, cycles=cycles, alt_p=alt))
        rates(rows)
        if on_row is not None:
            on_row(rows[-1])
    return rows
