"""Finite element simulation of radiofrequency cardiac ablation.

Couples incompressible blood flow, electric potential, and bio-heat
transport on a two-subdomain (blood channel / tissue) triangulation,
with temperature-dependent material laws and residual-based artificial
viscosity stabilizing the convective heat transport.
"""

__version__ = "0.1.0"

from .config import ConfigError, echo_config, parse_config
from .driver import (
    RunError,
    ScenarioConfig,
    SimulationResult,
    load_checkpoint,
    probe,
    run,
    save_checkpoint,
    scenario_test1,
    scenario_test2,
    scenario_test3,
)
from .geometry import (
    BLOOD,
    TISSUE,
    GeometryParams,
    Mesh,
    MeshError,
    build_channel_tissue_mesh,
    load_mesh,
    rectangle_mesh,
    write_mesh,
)
from .materials import MaterialModel
from .sparse import CSRMatrix, SolveReport, solve_general, solve_spd
from .stepping import (
    FieldState,
    StabilizationParams,
    StepError,
    entropy_viscosity,
    flow_step,
    heat_step,
    joule_field,
    potential_step,
)
from .vtkio import write_csv, write_vtk

__all__ = [
    "BLOOD",
    "TISSUE",
    "CSRMatrix",
    "ConfigError",
    "FieldState",
    "GeometryParams",
    "MaterialModel",
    "Mesh",
    "MeshError",
    "RunError",
    "ScenarioConfig",
    "SimulationResult",
    "SolveReport",
    "StabilizationParams",
    "StepError",
    "build_channel_tissue_mesh",
    "echo_config",
    "entropy_viscosity",
    "flow_step",
    "heat_step",
    "joule_field",
    "load_checkpoint",
    "load_mesh",
    "parse_config",
    "potential_step",
    "probe",
    "rectangle_mesh",
    "run",
    "save_checkpoint",
    "scenario_test1",
    "scenario_test2",
    "scenario_test3",
    "solve_general",
    "solve_spd",
    "write_csv",
    "write_mesh",
    "write_vtk",
    "__version__",
]
