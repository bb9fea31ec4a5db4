"""Ready-made scenarios: the three-qubit chain, the FMO complex, EPR fixtures."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .assemblage import Mode, Scenario
from .dynamics import (
    ChainParams,
    FmoParams,
    IntegratorOptions,
    LindbladModel,
    build_fmo_model,
    build_network_model,
    build_three_qubit_chain,
)
from .quantum import DensityMatrix, MeasurementSet, kron, ket, pauli_measurement_set, projector, werner_state

GROUND = projector(ket(0))
EXCITED = projector(ket(1))
MIXED = np.eye(2, dtype=complex) / 2


def site_product_state(n_qubits: int, site_states: dict[int, np.ndarray]) -> DensityMatrix:
    """Product state with the given single-qubit states, ground elsewhere."""
    return DensityMatrix(kron(*(site_states.get(i, GROUND) for i in range(n_qubits))), (2,) * n_qubits)


def chain_scenario(
    params: ChainParams,
    target: int = 2,
    measured: int = 0,
    reduced: bool = False,
    measurements: MeasurementSet | None = None,
    integrator: IntegratorOptions = IntegratorOptions(),
) -> Scenario:
    """Initial state |1>|0>|0> (qubit 1 excited), Pauli measurements on qubit 1."""
    return Scenario(
        initial_state=site_product_state(3, {0: EXCITED}),
        measurements=measurements or pauli_measurement_set(),
        measured=(measured,),
        target=(target,),
        channel=build_three_qubit_chain(params),
        reduced=reduced,
        integrator=integrator,
    )


def fmo_scenario(
    target: int,
    params: FmoParams = FmoParams(),
    measured: int = 5,
    reduced: bool = True,
    model: LindbladModel | None = None,
    integrator: IntegratorOptions = IntegratorOptions(),
) -> Scenario:
    """Site ``measured`` (0-based; default site 6) completely mixed, all else ground."""
    model = model or build_fmo_model(params)
    n = len(model.dims)
    return Scenario(
        initial_state=site_product_state(n, {measured: MIXED}),
        measurements=pauli_measurement_set(),
        measured=(measured,),
        target=(target,),
        channel=model,
        reduced=reduced,
        integrator=integrator,
    )


def network_scenario(
    site_hamiltonian: np.ndarray,
    dephasing: Sequence[float] | float,
    measured: int,
    target: int,
    initial: str = "mixed",
    reduced: bool = True,
    integrator: IntegratorOptions = IntegratorOptions(),
) -> Scenario:
    """Generic excitation network; ``initial`` is 'mixed' or 'excited' on the measured site."""
    model = build_network_model(site_hamiltonian, dephasing)
    state = {"mixed": MIXED, "excited": EXCITED}[initial]
    return Scenario(
        initial_state=site_product_state(len(model.dims), {measured: state}),
        measurements=pauli_measurement_set(),
        measured=(measured,),
        target=(target,),
        channel=model,
        reduced=reduced,
        integrator=integrator,
    )


def epr_scenario(p: float = 1.0) -> Scenario:
    """Two-qubit Werner state p|Phi+><Phi+| + (1-p) 1/4, Paulis on qubit 1, no channel."""
    return Scenario(
        initial_state=DensityMatrix(werner_state(p), (2, 2)),
        measurements=pauli_measurement_set(),
        measured=(0,),
        target=(1,),
        mode=Mode.EPR,
    )
