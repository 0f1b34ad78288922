"""Simulation and stability analysis of star DC networks with constant-power
loads, including the voltage collapse stabilization controller."""

from .dynamics import (
    ControllerParams,
    DemandSchedule,
    Event,
    IntegrationError,
    System,
    Trajectory,
    VcsState,
    collapse_event,
    detect_collapse,
    inflexible_rhs,
    integrate,
    vcs_rhs,
)
from .equilibria import (
    EquilibriumPoint,
    all_equilibria,
    inflexible_equilibria,
    load_satisfaction_set,
    proportional_allocation_point,
    solve_total_conductance,
)
from .network import LoadSet, LoadSpec, NetworkParams, as_conductances, load_powers
from .stability import (
    QuarticCoeffs,
    RouthColumn,
    SpectrumReport,
    classify,
    jacobian_inflexible,
    jacobian_vcs,
    mismatch_curvature_c,
    routh_first_column,
    rpsi_spectrum,
    shed_band,
    tilde_lambda,
    vcs_closed_form_spectrum,
    vcs_quartic,
)

__version__ = "0.1.0"
