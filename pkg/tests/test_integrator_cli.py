import numpy as np
import pytest

from dchflow.cli import main
from dchflow.integrator import RunConfig, TimeIntegrator, initial_condition
from dchflow.io import read_records, read_snapshot
from dchflow.mesh import build_hierarchy
from dchflow.system import DchParams, Discretization


@pytest.fixture
def integ():
    disc = Discretization(build_hierarchy(1, 4))
    return TimeIntegrator(disc, DchParams(eps=0.05, gamma=0.02, tau=1e-3, T=5e-3, L=4))


def test_initial_mu_solves_the_third_row(integ):
    sp = integ.space
    state = integ.initial_state("cauchy")
    eps = integ.params.eps
    lhs = sp.mass() @ state.mu
    rhs = eps * sp.stiffness() @ state.phi + (sp.cubic_vector(state.phi) - sp.mass() @ state.phi) / eps
    assert np.abs(lhs - rhs).max() < 1e-12
    assert np.all(state.p == 0)


def test_initial_conditions(integ):
    sp = integ.space
    cfg = RunConfig(integ.params, initial="spinodal")
    a = initial_condition(cfg, sp)
    assert np.array_equal(a, initial_condition(cfg, sp))
    assert np.all(np.abs(a + 0.1) <= 0.05)
    other = initial_condition(RunConfig(integ.params.with_(seed=1)), sp)
    assert not np.array_equal(a, other)
    c = initial_condition(RunConfig(integ.params, initial="cauchy"), sp)
    assert c.min() == pytest.approx(-1.0) and c.max() == pytest.approx(1.0)
    m = initial_condition(RunConfig(integ.params, initial="manufactured"), sp)
    assert m.max() == pytest.approx(1.0)


def test_spinodal_steps_dissipate_and_conserve(integ):
    state, recs = integ.run_to_end(integ.initial_state("spinodal"))
    assert len(recs) == 6
    e = [r.energy for r in recs]
    assert all(b < a for a, b in zip(e, e[1:]))
    assert max(abs(r.mass - recs[0].mass) for r in recs) < 1e-12
    assert max(abs(r.energy_defect) for r in recs[1:]) < 1e-9
    assert all(r.residual < 1e-12 for r in recs[1:])


def test_mms_run_tracks_the_exact_solution():
    disc = Discretization(build_hierarchy(1, 4))
    par = DchParams(eps=1.0, gamma=1.0, tau=0.1, T=0.5, L=4)
    from dchflow.mms import ManufacturedSolution

    sol = ManufacturedSolution(1.0, 1.0)
    integ = TimeIntegrator(disc, par, mms=sol)
    state, _ = integ.run_to_end(integ.initial_state("manufactured"))
    exact, _ = sol.field_functions(0.5)
    assert disc.finest.l2_error(state.phi, exact) < 0.05


# -- CLI --------------------------------------------------------------------
def test_cli_run_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epsilon = 0.05\ngamma = 0.01\ntau = 0.001\nT = 0.002\nL = 3\n")
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--format", "vtk-ascii", "--set", "snapshot_every=1"])
    assert code == 0
    assert "steps=2" in capsys.readouterr().out
    assert len(read_records(tmp_path / "o" / "records.csv")) == 3
    snap = read_snapshot(tmp_path / "o" / "phi_000002.vtk")
    assert snap.n == 8 and snap.t == 0.002


def test_cli_spinodal_defaults_can_be_overridden(tmp_path, capsys):
    code = main(["spinodal", "--set", "L=3", "--set", "T=0.002", "--out", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "records.csv").read_text().splitlines()
    assert len(text) == 4


def test_cli_config_errors(tmp_path, capsys):
    assert main(["run", "--set", "epsilon=0.1"]) == 2
    assert "missing required" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert main(["spinodal", "--set", "bogus"]) == 2


def test_cli_solver_failure_exit_code(capsys):
    code = main(["spinodal", "--set", "L=3", "--set", "T=0.001", "--set", "max_cycles=1"])
    assert code == 3
    assert "solver failure" in capsys.readouterr().err


def test_cli_studies(tmp_path, capsys):
    code = main(["mms-convergence", "--set", "grids=4,8", "--set", "T=0.25",
                 "--set", "constant=4", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "h,e_phi,rate_phi" in out
    assert (tmp_path / "mms-convergence-L2.csv").read_text() == out
    code = main(["cauchy-convergence", "--set", "grids=4,8,16", "--set", "norm=H1",
                 "--set", "T=0.002", "--set", "constant=0.008"])
    assert code == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert lines[0].startswith("h_c,h_f,delta_phi") and len(lines) == 3


def test_cli_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
