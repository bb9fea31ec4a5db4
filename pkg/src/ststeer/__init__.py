"""Spatio-temporal quantum steering in open quantum networks.

Assemblages are built from Lindblad dynamics, and their steerability is
quantified with semidefinite programs solved by a built-in interior-point
method.
"""

from .assemblage import (
    Assemblage,
    Mode,
    Scenario,
    assemblage_series,
    assemblage_series_by_target,
    make_st_assemblage,
    make_temporal_assemblage,
    validate,
)
from .dynamics import (
    ChainParams,
    FmoParams,
    IntegratorOptions,
    LindbladModel,
    build_fmo_model,
    build_network_model,
    build_three_qubit_chain,
    evolve,
    reduce_to_excitation_sectors,
)
from .quantum import DensityMatrix, MeasurementSet, Povm, pauli_measurement_set
from .scenarios import chain_scenario, epr_scenario, fmo_scenario, network_scenario
from .sdp import SdpProblem, SdpSolution, SolverOptions, check_certificates, export_problem, import_problem, solve
from .steering import (
    Measure,
    SolverFailure,
    SteeringResult,
    enumerate_strategies,
    is_unsteerable,
    measure_sweep,
    sts_robustness,
    sts_weight,
    unsteerability_margin,
    vanishing_time,
)

__all__ = [name for name in dir() if not name.startswith("_")]
