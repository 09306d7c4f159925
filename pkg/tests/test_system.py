import numpy as np
import pytest

from oracles import DenseSystem

from dchflow.assembly import FESpace
from dchflow.mesh import MeshLevel, build_hierarchy
from dchflow.multigrid import MgWorkspace, solve
from dchflow.system import (
    DchParams,
    DchState,
    Discretization,
    apply_operator,
    build_all_contexts,
    build_level_context,
    compute_sources,
    energy,
    energy_law_audit,
    residual_rms,
    total_mass,
)


def test_params_validation():
    p = DchParams(eps=0.1, gamma=0.0, tau=0.01, T=0.05)
    assert p.num_steps == 5
    assert p.with_(tau=0.025).num_steps == 2
    with pytest.raises(ValueError):
        DchParams(eps=0.1, gamma=0.0, tau=0.03, T=0.05).num_steps
    for bad in ({"eps": 0}, {"gamma": -1}, {"tau": 0}, {"sweeps": 0}, {"tol": 0}):
        kw = {"eps": 0.1, "gamma": 0.1, "tau": 0.1, **bad}
        with pytest.raises(ValueError):
            DchParams(**kw)


def test_state_arithmetic():
    a = DchState(np.ones(3), 2 * np.ones(3), 3 * np.ones(3))
    b = a.copy()
    b.phi[0] = 0
    assert a.phi[0] == 3
    assert np.array_equal((a - a).as_array(), np.zeros((3, 3)))
    assert np.array_equal((a + a).mu, 4 * np.ones(3))
    assert len(a) == 3
    with pytest.raises(ValueError):
        DchState(np.ones(3), np.ones(2), np.ones(3))


@pytest.mark.parametrize("gamma", [0.0, 0.3])
def test_operator_against_dense(gamma, rng):
    n = 4
    disc = Discretization(build_hierarchy(1, 2))
    phi_prev = rng.uniform(-1, 1, 25)
    ctx = build_level_context(disc, 2, phi_prev)
    par = DchParams(eps=0.2, gamma=gamma, tau=0.05)
    xi = DchState(rng.normal(size=25), rng.normal(size=25), rng.normal(size=25))
    got = apply_operator(ctx, par, xi)
    want = DenseSystem(n, phi_prev).operator(xi.p, xi.mu, xi.phi, 0.2, gamma, 0.05)
    for g, w in zip((got.p, got.mu, got.phi), want):
        assert np.abs(g - w).max() < 1e-13


def test_contexts_lag_restricted_phi(rng):
    disc = Discretization(build_hierarchy(1, 3))
    phi = rng.normal(size=disc.finest.N)
    ctxs = build_all_contexts(disc, phi)
    for l, ctx in enumerate(ctxs):
        assert np.array_equal(ctx.phi_prev, disc.hierarchy.restrict_nodal_to(l, phi))
        ref = build_level_context(disc, l, phi)
        assert abs(ref.C - ctx.C).max() == 0


@pytest.mark.parametrize("c", [-0.4, 0.0, 0.9])
def test_constant_state_is_an_equilibrium(c):
    disc = Discretization(build_hierarchy(1, 3))
    N = disc.finest.N
    par = DchParams(eps=0.05, gamma=0.5, tau=0.1)
    phi = np.full(N, c)
    ws = MgWorkspace(disc, phi)
    s = compute_sources(ws.finest, par)
    state = DchState(np.zeros(N), np.full(N, (c**3 - c) / par.eps), phi.copy())
    assert residual_rms(ws.finest, par, s, state) < 1e-15
    out, rep = solve(ws, par, s, state)
    assert rep.cycles == 0 and rep.converged


def test_energy_closed_forms():
    sp = FESpace(MeshLevel.uniform(0, 8))
    x = sp.mesh.node_coords[:, 0]
    eps = 0.3
    # J(x) = eps/2 + int (x^2-1)^2/4 / eps = eps/2 + 2/(15 eps)
    assert energy(sp, x, eps) == pytest.approx(eps / 2 + 2 / (15 * eps), rel=1e-13)
    assert energy(sp, np.full(sp.N, 0.5), eps) == pytest.approx((0.75**2 / 4) / eps)
    assert abs(energy(sp, np.ones(sp.N), eps)) < 1e-30
    assert total_mass(sp, x) == pytest.approx(0.5)


@pytest.mark.parametrize("gamma", [0.0, 0.01, 1.0])
def test_energy_law_holds_for_converged_step(gamma, rng):
    disc = Discretization(build_hierarchy(1, 4))
    N = disc.finest.N
    par = DchParams(eps=0.08, gamma=gamma, tau=0.01)
    phi0 = -0.1 + 0.05 * rng.uniform(-1, 1, N)
    ws = MgWorkspace(disc, phi0)
    s = compute_sources(ws.finest, par)
    state, rep = solve(ws, par, s, DchState(np.zeros(N), np.zeros(N), phi0.copy()))
    audit = energy_law_audit(disc.finest, par, phi0, state)
    assert abs(audit.defect) < 1e-10
    assert audit.energy_new < audit.energy_old
    assert audit.dissipation > 0
    # mass is conserved up to the block-2 residual left by the stopping test
    assert abs(total_mass(disc.finest, state.phi) - total_mass(disc.finest, phi0)) < 1e-11


def test_energy_law_detects_wrong_state(rng):
    disc = Discretization(build_hierarchy(1, 3))
    N = disc.finest.N
    par = DchParams(eps=0.1, gamma=0.1, tau=0.01)
    phi0 = rng.uniform(-0.5, 0.5, N)
    ws = MgWorkspace(disc, phi0)
    state, _ = solve(ws, par, compute_sources(ws.finest, par),
                     DchState(np.zeros(N), np.zeros(N), phi0.copy()))
    state.mu += 0.1 * disc.finest.mesh.node_coords[:, 0]
    assert abs(energy_law_audit(disc.finest, par, phi0, state).defect) > 1e-6
