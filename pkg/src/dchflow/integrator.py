"""Time marching of the convex-splitting scheme and run-level bookkeeping."""

import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import factorized

from .mesh import build_hierarchy
from .mms import LOAD_DEGREE, ManufacturedSolution, MmsLoads
from .multigrid import MgWorkspace, solve
from .system import (
    DchParams,
    DchState,
    Discretization,
    compute_sources,
    energy,
    energy_law_audit,
    total_mass,
)

__all__ = [
    "RunConfig",
    "StepRecord",
    "TimeIntegrator",
    "INITIAL_CONDITIONS",
    "initial_condition",
    "run",
]

log = logging.getLogger(__name__)

INITIAL_CONDITIONS = ("manufactured", "spinodal", "cauchy", "file")


@dataclass(frozen=True)
class RunConfig:
    params: DchParams
    initial: str = "spinodal"
    init_file: str = None
    snapshot_every: int = 10
    out_dir: str = None
    mms: bool = False
    format: str = "grid-csv"

    def __post_init__(self):
        if self.initial not in INITIAL_CONDITIONS:
            raise ValueError(
                f"unknown initial condition {self.initial!r}; choose from {INITIAL_CONDITIONS}"
            )
        if self.initial == "file" and not self.init_file:
            raise ValueError("initial = file needs init_file")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be non-negative")
        if self.params.T > 0:
            self.params.num_steps  # validates T/tau


@dataclass
class StepRecord:
    m: int
    t: float
    energy: float
    mass: float
    phi_min: float
    phi_max: float
    cycles: int
    residual: float
    energy_defect: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return asdict(self)


def _cauchy_profile(x, y):
    return (1.0 - np.cos(4.0 * np.pi * x)) * (1.0 - np.cos(2.0 * np.pi * y)) / 2.0 - 1.0


def initial_condition(config, space):
    """Initial phase field on ``space`` for the configured selector."""
    kind = config.initial
    if kind == "manufactured":
        sol = ManufacturedSolution(config.params.eps, config.params.gamma)
        return space.interpolate(lambda x, y: sol.value(x, y, 0.0))
    if kind == "cauchy":
        return space.interpolate(_cauchy_profile)
    if kind == "spinodal":
        rng = np.random.default_rng(config.params.seed)
        return -0.1 + 0.05 * rng.uniform(-1.0, 1.0, space.N)
    if kind == "file":
        from .io import read_snapshot

        snap = read_snapshot(config.init_file)
        if snap.n != space.mesh.n:
            raise ValueError(f"{config.init_file}: snapshot has n={snap.n}, mesh has n={space.mesh.n}")
        return snap.values.ravel().copy()
    raise ValueError(f"unknown initial condition {kind!r}")


class TimeIntegrator:
    """Steps ``(p, mu, phi)`` forward on the finest level of ``disc``.

    With ``mms`` set to a :class:`ManufacturedSolution` the compensating
    sources are added at every step.
    """

    def __init__(self, disc, params, mms=None, load_degree=LOAD_DEGREE):
        self.disc = disc
        self.params = params
        self.space = disc.finest
        self.mms = mms
        self.loads = MmsLoads(self.space, mms, load_degree) if mms is not None else None
        self._mass_solve = None

    def initial_mu(self, phi0):
        """mu from the third block equation with ``phi = phi_prev = phi0``."""
        sp, eps = self.space, self.params.eps
        if self._mass_solve is None:
            self._mass_solve = factorized(sp.mass().tocsc())
        rhs = eps * (sp.stiffness() @ phi0) + (sp.cubic_vector(phi0) - sp.mass() @ phi0) / eps
        return self._mass_solve(rhs)

    def initial_state(self, selector="spinodal", init_file=None, phi0=None):
        if phi0 is None:
            cfg = RunConfig(self.params.with_(T=0.0), initial=selector, init_file=init_file)
            phi0 = initial_condition(cfg, self.space)
        phi0 = np.asarray(phi0, dtype=float).copy()
        return DchState(np.zeros_like(phi0), self.initial_mu(phi0), phi0)

    def record(self, m, state, cycles=0, residual=0.0, defect=0.0):
        sp = self.space
        return StepRecord(
            m,
            m * self.params.tau,
            energy(sp, state.phi, self.params.eps),
            total_mass(sp, state.phi),
            float(state.phi.min()),
            float(state.phi.max()),
            cycles,
            residual,
            defect,
        )

    def step(self, prev, m):
        """Advance from ``prev`` (time level ``m-1``) to level ``m``."""
        par = self.params
        ws = MgWorkspace(self.disc, prev.phi)
        s = compute_sources(ws.finest, par)
        if self.loads is not None:
            s = self.loads.add_to(s, m * par.tau, par.tau)
        guess = prev.copy()
        if par.gamma == 0:
            guess.p[:] = 0.0
        state, report = solve(ws, par, s, guess)
        audit = energy_law_audit(self.space, par, prev.phi, state)
        rec = StepRecord(
            m,
            m * par.tau,
            audit.energy_new,
            total_mass(self.space, state.phi),
            float(state.phi.min()),
            float(state.phi.max()),
            report.cycles,
            report.residual,
            audit.defect,
        )
        return state, rec

    def run(self, state, steps=None, m0=0, on_step=None):
        """Yield ``(state, record)`` for ``m = m0+1, ..., m0+steps``."""
        steps = self.params.num_steps - m0 if steps is None else steps
        for m in range(m0 + 1, m0 + steps + 1):
            state, rec = self.step(state, m)
            if on_step is not None:
                on_step(state, rec)
            yield state, rec

    def run_to_end(self, state, m0=0):
        records = [self.record(m0, state)]
        for state, rec in self.run(state, m0=m0):
            records.append(rec)
        return state, records


def run(config, restart=None):
    """Execute a configured run, writing records and snapshots if ``out_dir`` is set.

    ``restart`` may be ``(m0, state)`` to continue from a saved time level.
    Returns ``(final_state, records)``.
    """
    from . import io

    par = config.params
    disc = Discretization(build_hierarchy(par.n0, par.L))
    mms = ManufacturedSolution(par.eps, par.gamma) if config.mms else None
    integ = TimeIntegrator(disc, par, mms=mms)
    if restart is None:
        m0 = 0
        state = integ.initial_state(config.initial, config.init_file)
    else:
        m0, state = restart
    M = par.num_steps
    out = Path(config.out_dir) if config.out_dir else None
    level = disc.finest.mesh

    records = [integ.record(m0, state)]
    writer = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        writer = io.RecordWriter(out / "records.csv")
        writer.write(records[0])
        io.write_state(out, level, m0, m0 * par.tau, state, config.format)

    def on_step(st, rec):
        records.append(rec)
        log.info("step %d t=%.6g E=%.12g mass=%.3e cycles=%d", rec.m, rec.t, rec.energy,
                 rec.mass, rec.cycles)
        if writer is not None:
            writer.write(rec)
            every = config.snapshot_every
            if rec.m == M or (every and rec.m % every == 0):
                io.write_state(out, level, rec.m, rec.t, st, config.format)

    try:
        for state, _ in integ.run(state, steps=M - m0, m0=m0, on_step=on_step):
            pass
    finally:
        if writer is not None:
            writer.close()
    return state, records
