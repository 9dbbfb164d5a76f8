"""Placement and sizing of PV, wind and fuel-cell generation on radial feeders."""

from .dg import DgKind, DgSettings, DgUnit, WindCurve, fc_output, hourly_injections, pv_output, wt_output
from .lsa import LsaParams, run_lsa
from .network import (
    Branch,
    Bus,
    HourlySeries,
    NetworkError,
    NetworkModel,
    SeriesKind,
    TopologyError,
    bundled_path,
    load_network,
    load_profile,
    scale_loads,
    validate_radial,
)
from .objective import (
    DgBounds,
    Evaluation,
    ObjectiveWeights,
    Penalties,
    Placement,
    PlacementObjective,
    Scenario,
    calibrate_weights,
    decode,
    encode,
    evaluate,
    evaluate_many,
)
from .powerflow import (
    HorizonSolution,
    InjectionSet,
    PowerFlowSolution,
    VoltageCollapseError,
    loss_index,
    solve_horizon,
    solve_hour,
    voltage_deviation_index,
)
from .pso import PsoParams, inertia, run_pso
from .trace import ConvergenceTrace

__version__ = "0.1.0"
