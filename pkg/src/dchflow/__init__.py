"""Finite elements and nonlinear multigrid for the Darcy-Cahn-Hilliard model."""

from .assembly import FESpace
from .integrator import RunConfig, StepRecord, TimeIntegrator, run
from .mesh import MeshHierarchy, MeshLevel, build_hierarchy
from .mms import ManufacturedSolution
from .multigrid import MgWorkspace, SolveReport, SolverDivergence, solve, v_cycle
from .system import DchParams, DchState, Discretization

__all__ = [
    "FESpace",
    "RunConfig",
    "StepRecord",
    "TimeIntegrator",
    "run",
    "MeshHierarchy",
    "MeshLevel",
    "build_hierarchy",
    "ManufacturedSolution",
    "MgWorkspace",
    "SolveReport",
    "SolverDivergence",
    "solve",
    "v_cycle",
    "DchParams",
    "DchState",
    "Discretization",
]

__version__ = "0.1.0"
