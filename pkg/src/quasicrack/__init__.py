"""Quasi-static crack growth with cohesive plasticity on a straight path."""

from .grid import Grid, GridSpec, build_grid
from .fem import (
    BoundaryData,
    LinearSystem,
    ScalarField,
    SolveError,
    apply_dirichlet,
    assemble_mass,
    assemble_stiffness,
    elastic_energy,
    solve_spd,
)
from .cohesive import (
    AuxSolution,
    ProfileParams,
    boundary_profile,
    cohesive_load,
    find_sigma,
    solve_aux,
)
from .evolution import EvolutionResult, initial_displacement, run_evolution
from .io_formats import Config, load_config, parse_config, save_config, write_config
from .experiments import (
    convergence_study,
    jump_stats,
    run_experiment,
    run_sweep,
    validate_result,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "GridSpec",
    "build_grid",
    "BoundaryData",
    "LinearSystem",
    "ScalarField",
    "SolveError",
    "apply_dirichlet",
    "assemble_mass",
    "assemble_stiffness",
    "elastic_energy",
    "solve_spd",
    "AuxSolution",
    "ProfileParams",
    "boundary_profile",
    "cohesive_load",
    "find_sigma",
    "solve_aux",
    "EvolutionResult",
    "initial_displacement",
    "run_evolution",
    "Config",
    "load_config",
    "parse_config",
    "save_config",
    "write_config",
    "convergence_study",
    "jump_stats",
    "run_experiment",
    "run_sweep",
    "validate_result",
    "__version__",
]
