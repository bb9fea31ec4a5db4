from dataclasses import replace

import numpy as np
import pytest

from ststeer.assemblage import (
    Assemblage,
    Mode,
    Scenario,
    assemblage_series,
    assemblage_series_by_target,
    dumps,
    load,
    loads,
    make_st_assemblage,
    make_temporal_assemblage,
    post_measurement_branches,
    save,
    validate,
)
from ststeer.dynamics import ChainParams, build_three_qubit_chain
from ststeer.quantum import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    kron,
    ket,
    pauli_measurement_set,
    projector,
    random_density_matrix,
)
from ststeer.scenarios import chain_scenario, epr_scenario, fmo_scenario


def test_bell_assemblage_closed_form():
    # sigma_{a|x} = (1/2) transpose of the +-1 eigenprojector of Pauli x
    asm = make_st_assemblage(epr_scenario(1.0), 0.0)
    for x, p in enumerate((SIGMA_X, SIGMA_Y, SIGMA_Z)):
        for a, sign in enumerate((1, -1)):
            expect = 0.25 * (np.eye(2) + sign * p).T
            np.testing.assert_allclose(asm.members[x, a], expect, atol=1e-15)
    rep = validate(asm)
    assert rep.ok and rep.no_signalling
    assert asm.members.shape == (3, 2, 2, 2)
    np.testing.assert_allclose(asm.probabilities(), 0.5)


def test_chain_t0_members_are_ground_state():
    asm = make_st_assemblage(chain_scenario(ChainParams(gamma=1.0)), 0.0)
    g = projector(ket(0))
    probs = asm.probabilities()
    for x in range(3):
        for a in range(2):
            np.testing.assert_allclose(asm.members[x, a], probs[x, a] * g, atol=1e-15)
    # qubit 1 starts excited: Z gives outcome +1 (excited) with certainty
    np.testing.assert_allclose(probs[2], [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(probs[:2], 0.5, atol=1e-15)


def test_null_branch_is_exactly_zero():
    asm = make_st_assemblage(chain_scenario(ChainParams(gamma=1.0)), 1.5)
    assert np.all(asm.members[2, 0] == 0)
    assert validate(asm).ok


def test_members_psd_and_normalized_over_time():
    sc = chain_scenario(ChainParams(gamma=1.0))
    for asm in assemblage_series(sc, np.linspace(0, 5, 11)):
        rep = validate(asm)
        assert rep.ok, rep


def test_reduced_matches_full_chain():
    times = np.linspace(0, 6, 13)
    full = assemblage_series(chain_scenario(ChainParams(gamma=1.0)), times)
    red = assemblage_series(chain_scenario(ChainParams(gamma=1.0), reduced=True), times)
    assert max(np.abs(a.members - b.members).max() for a, b in zip(full, red)) < 1e-9


def test_spatio_temporal_signals_through_channel():
    # the measurement on qubit 1 changes what reaches qubit 3 later on
    asm = make_st_assemblage(chain_scenario(ChainParams(gamma=0.0)), 2.0)
    rep = validate(asm)
    assert rep.ok and not rep.no_signalling and rep.notes


def test_by_target_matches_single_target():
    sc = chain_scenario(ChainParams(gamma=0.5))
    times = [0.0, 0.7, 1.4]
    both = assemblage_series_by_target(sc, times, [(1,), (2,)])
    single = assemblage_series(replace(sc, target=(1,)), times)
    for a, b in zip(both[0], single):
        np.testing.assert_array_equal(a.members, b.members)


def test_times_not_starting_at_zero():
    sc = chain_scenario(ChainParams(gamma=0.5))
    a = assemblage_series(sc, [0.5, 1.0])
    b = assemblage_series(sc, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(a[1].members, b[2].members, atol=1e-12)
    with pytest.raises(ValueError):
        assemblage_series(sc, [1.0, 0.5])
    with pytest.raises(ValueError):
        make_st_assemblage(sc, -1.0)


def test_post_measurement_branches_sum_to_dephased_state(rng):
    rho = random_density_matrix(4, rng)
    sc = Scenario(DensityMatrix(rho, (2, 2)), pauli_measurement_set(), (0,), (1,), mode=Mode.EPR)
    br = post_measurement_branches(sc)
    for x in range(3):
        total = br[x].sum(axis=0)
        np.testing.assert_allclose(np.trace(total), 1, atol=1e-12)
        np.testing.assert_allclose(total.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2), rho.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2), atol=1e-12)


def test_temporal_mode():
    model = build_three_qubit_chain(ChainParams(gamma=0.0))
    rho0 = DensityMatrix(kron(np.eye(2) / 2, projector(ket(0)), projector(ket(0))), (2, 2, 2))
    sc = Scenario(rho0, pauli_measurement_set(), (0,), (0,), channel=model, mode=Mode.TEMPORAL)
    asm = make_temporal_assemblage(sc, 0.0)
    # at t = 0 the branch states are the post-measurement projectors
    np.testing.assert_allclose(asm.members[2, 0], 0.5 * projector(ket(0)), atol=1e-15)
    with pytest.raises(ValueError):
        make_temporal_assemblage(chain_scenario(ChainParams()), 0.0)


def test_scenario_validation():
    model = build_three_qubit_chain(ChainParams())
    rho0 = DensityMatrix(kron(*([projector(ket(0))] * 3)), (2, 2, 2))
    ms = pauli_measurement_set()
    with pytest.raises(ValueError):
        Scenario(rho0, ms, (0,), (0,), channel=model)
    with pytest.raises(ValueError):
        Scenario(rho0, ms, (0,), (3,), channel=model)
    with pytest.raises(ValueError):
        Scenario(rho0, ms, (0,), (2,))
    with pytest.raises(ValueError):
        Scenario(rho0, ms, (0,), (1,), channel=model, mode=Mode.TEMPORAL)
    with pytest.raises(ValueError):
        Scenario(rho0, ms, (0, 1), (2,), channel=model)


def test_validate_flags_bad_members():
    bad = np.zeros((1, 2, 2, 2), dtype=complex)
    bad[0, 0] = np.diag([0.7, -0.1])
    bad[0, 1] = np.diag([0.3, 0.0])
    rep = validate(Assemblage(bad))
    assert not rep.psd and not rep.normalized and not rep.ok


def test_assemblage_helpers(rng):
    a = make_st_assemblage(epr_scenario(1.0), 0.0)
    b = make_st_assemblage(epr_scenario(0.0), 0.0)
    mix = a.mix(b, 0.3)
    np.testing.assert_allclose(mix.members, make_st_assemblage(epr_scenario(0.3), 0.0).members, atol=1e-15)
    u = np.array([[0, 1], [1, 0]], dtype=complex)
    np.testing.assert_allclose(a.conjugate(u).members[2, 0], u @ a.members[2, 0] @ u.T)
    assert not a.members.flags.writeable
    with pytest.raises(ValueError):
        Assemblage(np.zeros((2, 2, 2)))


def test_serialization_round_trip(tmp_path):
    asm = make_st_assemblage(fmo_scenario(4), 0.1)
    text = dumps(asm)
    again = loads(text)
    assert dumps(again) == text
    np.testing.assert_array_equal(again.members, asm.members)
    assert again.time == asm.time
    save(asm, tmp_path / "a.asm")
    assert (tmp_path / "a.asm").read_text() == text
    assert dumps(load(tmp_path / "a.asm")) == text
    first = text.splitlines()[0]
    assert first.split()[:3] == ["3", "2", "2"]


def test_loads_rejects_malformed():
    with pytest.raises(ValueError):
        loads("1 2 2 0\n1 0 0 0\n")
    with pytest.raises(ValueError):
        loads("1 1 2 0\n1 0\n0 0 0 0\n")
