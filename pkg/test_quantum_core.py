"""
Test the state-vector core: preparation, operators, Bell and basis
measurements, photon holdings, random streams and the message log
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from qss.exceptions import InternalInvariantError, InvalidArgumentError, ProtocolStateError
from qss.models.protocol import PartyId, PauliLabel, PhaseAngle
from qss.models.quantum import BellLabel, MeasBasis, QubitId, RoleTag, StateVector
from qss.services.gates import gate_algebra
from qss.services.lab import PhotonLab
from qss.services.quantum import quantum_service
from qss.services.randomness import RandomStreams, derive_trial_seed
from qss.services.transcript import Transcript

T0 = QubitId(RoleTag.T, 0)
H0 = QubitId(RoleTag.H, 0)
TP0 = QubitId(RoleTag.TP, 0)
HP0 = QubitId(RoleTag.HP, 0)

X = np.array([[0, 1], [1, 0]], dtype=complex)


# ==================== STATE VECTORS ====================

def test_bell_vectors_are_canonical():
    state = quantum_service.make_bell(BellLabel.PSI_MINUS, T0, H0)
    assert state.qubits == (T0, H0)
    np.testing.assert_allclose(state.amplitudes, np.array([0, 1, -1, 0]) / np.sqrt(2))


def test_bell_on_same_qubit_is_rejected():
    with pytest.raises(InvalidArgumentError):
        quantum_service.make_bell(BellLabel.PHI_PLUS, T0, T0)


def test_state_validation():
    with pytest.raises(InvalidArgumentError):
        StateVector((T0,), [1, 1])
    with pytest.raises(InvalidArgumentError):
        StateVector((T0, T0), [1, 0, 0, 0])
    five = tuple(QubitId(RoleTag.T, i) for i in range(5))
    with pytest.raises(InvalidArgumentError):
        StateVector(five, np.eye(1, 32).reshape(-1))


def test_amplitudes_are_read_only():
    state = quantum_service.make_basis_state(T0, 0)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 0


def test_tensor_rejects_shared_qubits():
    a = quantum_service.make_basis_state(T0, 0)
    with pytest.raises(InvalidArgumentError):
        quantum_service.tensor(a, a)


def test_apply_single_flips_the_target_only():
    state = quantum_service.tensor(quantum_service.make_basis_state(T0, 0), quantum_service.make_basis_state(H0, 0))
    flipped = quantum_service.apply_single(state, X, H0)
    np.testing.assert_allclose(flipped.amplitudes, [0, 1, 0, 0])


def test_apply_single_rejects_bad_operators():
    state = quantum_service.make_basis_state(T0, 0)
    with pytest.raises(InvalidArgumentError):
        quantum_service.apply_single(state, np.eye(3), T0)
    with pytest.raises(InvalidArgumentError):
        quantum_service.apply_single(state, np.array([[1, 1], [0, 1]]), T0)
    with pytest.raises(InvalidArgumentError):
        quantum_service.apply_single(state, X, H0)


def test_reordering_keeps_the_state():
    state = quantum_service.make_bell(BellLabel.PSI_MINUS, H0, T0)
    canonical = state.canonical()
    assert canonical.qubits == (T0, H0)
    # psi- is antisymmetric under swapping its qubits
    np.testing.assert_allclose(canonical.amplitudes, -state.amplitudes)
    assert quantum_service.equal_up_to_global_phase(state, canonical)


def test_global_phase_is_ignored():
    state = quantum_service.make_bell(BellLabel.PHI_MINUS, T0, H0)
    rotated = StateVector(state.qubits, 1j * state.amplitudes)
    assert quantum_service.equal_up_to_global_phase(state, rotated)
    other = quantum_service.make_bell(BellLabel.PHI_PLUS, T0, H0)
    assert not quantum_service.equal_up_to_global_phase(state, other)


def test_comparison_needs_same_qubits():
    a = quantum_service.make_basis_state(T0, 0)
    b = quantum_service.make_basis_state(H0, 0)
    with pytest.raises(InvalidArgumentError):
        quantum_service.equal_up_to_global_phase(a, b)


@st.composite
def three_qubit_states(draw):
    parts = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=16, max_size=16))
    vector = np.array(parts[:8]) + 1j * np.array(parts[8:])
    norm = np.linalg.norm(vector)
    if norm < 0.1:
        vector = np.eye(1, 8).reshape(-1).astype(complex)
        norm = 1.0
    return StateVector((T0, H0, TP0), vector / norm)


@hypothesis_settings(max_examples=50, deadline=None)
@given(
    state=three_qubit_states(),
    ticks=st.integers(0, 2),
    pauli=st.sampled_from(list(PauliLabel)),
    target=st.sampled_from([T0, H0, TP0]),
)
def test_operators_preserve_norm(state, ticks, pauli, target):
    moved = quantum_service.apply_single(state, gate_algebra.phase_unitary(PhaseAngle(ticks)), target)
    moved = quantum_service.apply_single(moved, gate_algebra.pauli_unitary(pauli), target)
    assert moved.norm() == pytest.approx(1.0, abs=1e-10)


# ==================== MEASUREMENTS ====================

@pytest.mark.parametrize("label", list(BellLabel))
def test_bell_decompose_of_bell_state(label):
    state = quantum_service.make_bell(label, T0, H0)
    decomposition = quantum_service.bell_decompose(state, T0, H0)
    assert abs(decomposition[label][0]) == pytest.approx(1.0)
    for other, (amplitude, residual) in decomposition.items():
        if other != label:
            assert abs(amplitude) < 1e-12
            assert residual is None


def test_decompose_then_reconstruct():
    state = quantum_service.tensor(
        quantum_service.make_bell(BellLabel.PHI_MINUS, T0, H0),
        quantum_service.make_bell(BellLabel.PSI_PLUS, TP0, HP0),
    )
    decomposition = quantum_service.bell_decompose(state, T0, HP0)
    for amplitude, _ in decomposition.values():
        assert abs(amplitude) == pytest.approx(0.5, abs=1e-10)
    rebuilt = quantum_service.reconstruct(decomposition, T0, HP0)
    assert rebuilt.qubits[:2] == (T0, HP0)
    assert quantum_service.equal_up_to_global_phase(rebuilt, state)


def test_bell_measurement_statistics_of_product_state():
    # |00> = (phi+ + phi-)/sqrt2
    state = quantum_service.tensor(quantum_service.make_basis_state(T0, 0), quantum_service.make_basis_state(H0, 0))
    rng = np.random.default_rng(11)
    n = 10_000
    counts = {label: 0 for label in BellLabel}
    for _ in range(n):
        label, residual = quantum_service.bell_measure(state, T0, H0, rng)
        assert residual.n_qubits == 0
        counts[label] += 1
    assert counts[BellLabel.PSI_PLUS] == counts[BellLabel.PSI_MINUS] == 0
    assert abs(counts[BellLabel.PHI_PLUS] / n - 0.5) < 0.02


FOUR_QUBITS = (T0, H0, TP0, HP0)
PAIRS = [(T0, H0), (H0, TP0), (T0, HP0), (HP0, TP0)]


def random_states(count: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        vector = rng.normal(size=16) + 1j * rng.normal(size=16)
        yield StateVector(FOUR_QUBITS, vector / np.linalg.norm(vector))


def test_measurement_outcomes_are_complete():
    for index, state in enumerate(random_states(1000, seed=41)):
        q1, q2 = PAIRS[index % len(PAIRS)]
        assert sum(quantum_service.bell_probabilities(state, q1, q2).values()) == pytest.approx(1.0, abs=1e-10)
        for basis in MeasBasis:
            probabilities = quantum_service.basis_probabilities(state, FOUR_QUBITS[index % 4], basis)
            assert sum(probabilities) == pytest.approx(1.0, abs=1e-10)


def test_reconstruct_inverts_decompose_on_random_states():
    for index, state in enumerate(random_states(200, seed=42)):
        q1, q2 = PAIRS[index % len(PAIRS)]
        rebuilt = quantum_service.reconstruct(quantum_service.bell_decompose(state, q1, q2), q1, q2)
        assert rebuilt.qubits[:2] == (q1, q2)
        np.testing.assert_allclose(rebuilt.reordered(state.qubits).amplitudes, state.amplitudes, atol=1e-10)


def test_bell_measurement_follows_the_born_rule():
    state = next(random_states(1, seed=43))
    expected = quantum_service.bell_probabilities(state, H0, HP0)
    rng = np.random.default_rng(44)
    n = 10_000
    counts = {label: 0 for label in BellLabel}
    for _ in range(n):
        label, residual = quantum_service.bell_measure(state, H0, HP0, rng)
        assert residual.qubits == (T0, TP0)
        counts[label] += 1
    for label, p in expected.items():
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(counts[label] / n - p) <= 3 * sigma


def test_gate_matrices_skip_the_unitarity_check(monkeypatch):
    checked = []

    def recording(op):
        checked.append(op)
        return True

    monkeypatch.setattr(quantum_service, "_is_unitary", recording)
    state = quantum_service.make_bell(BellLabel.PHI_PLUS, T0, H0)
    quantum_service.apply_single(state, gate_algebra.phase_unitary(PhaseAngle(1)), T0)
    quantum_service.apply_single(state, gate_algebra.pauli_unitary(PauliLabel.S11), H0)
    assert checked == []
    quantum_service.apply_single(state, gate_algebra.phase_unitary(PhaseAngle(1)).copy(), T0)
    assert len(checked) == 1


def test_registered_operators_are_frozen():
    gate = gate_algebra.phase_unitary(PhaseAngle(2))
    assert not gate.flags.writeable
    assert quantum_service.is_verified(gate)
    with pytest.raises(ValueError):
        gate[0, 0] = 1
    with pytest.raises(InvalidArgumentError):
        quantum_service.register_unitary(np.array([[1, 1], [0, 1]], dtype=np.complex128))


def test_basis_measurement_collapses_partner():
    state = quantum_service.make_bell(BellLabel.PSI_PLUS, T0, H0)
    rng = np.random.default_rng(3)
    for _ in range(50):
        bit, residual = quantum_service.basis_measure(state, T0, MeasBasis.COMPUTATIONAL, rng)
        partner, _ = quantum_service.basis_measure(residual, H0, MeasBasis.COMPUTATIONAL, rng)
        assert partner == 1 - bit


def test_basis_probabilities():
    plus = quantum_service.make_basis_state(T0, 0, MeasBasis.HADAMARD)
    assert quantum_service.basis_probabilities(plus, T0, MeasBasis.HADAMARD) == pytest.approx([1.0, 0.0])
    assert quantum_service.basis_probabilities(plus, T0, MeasBasis.COMPUTATIONAL) == pytest.approx([0.5, 0.5])


def test_corrupted_probabilities_are_an_internal_error():
    rng = np.random.default_rng(0)
    with pytest.raises(InternalInvariantError):
        quantum_service._sample([0.5, 0.3], rng)
    with pytest.raises(InternalInvariantError):
        quantum_service._sample([0.0, 0.0], rng)


# ==================== RANDOM STREAMS ====================

def test_trial_seeds_are_stable():
    assert derive_trial_seed(7, 3) == derive_trial_seed(7, 3)
    assert derive_trial_seed(7, 3) != derive_trial_seed(7, 4)
    assert derive_trial_seed(7, 3) != derive_trial_seed(8, 3)
    assert 0 <= derive_trial_seed(7, 0) < 2 ** 64


def test_streams_are_keyed_and_reproducible():
    a = RandomStreams(42)
    b = RandomStreams(42)
    assert a.stream(PartyId.BOB, "angles") is a.stream(PartyId.BOB, "angles")
    assert list(a.stream(PartyId.BOB, "angles").integers(0, 3, 20)) == list(b.stream(PartyId.BOB, "angles").integers(0, 3, 20))
    first = RandomStreams(42).stream(PartyId.BOB, "angles").integers(0, 1 << 30, 8)
    other = RandomStreams(42).stream(PartyId.CHARLIE, "angles").integers(0, 1 << 30, 8)
    assert list(first) != list(other)


def test_unknown_stream_purpose():
    with pytest.raises(InvalidArgumentError):
        RandomStreams(1).stream(PartyId.ALICE, "coffee")


# ==================== PHOTON LAB ====================

def test_only_the_holder_can_act():
    lab = PhotonLab()
    lab.add(quantum_service.make_bell(BellLabel.PHI_PLUS, T0, H0), PartyId.ALICE)
    with pytest.raises(InternalInvariantError):
        lab.apply(PartyId.BOB, X, T0)
    lab.transfer([T0], PartyId.ALICE, PartyId.BOB)
    lab.apply(PartyId.BOB, X, T0)
    assert lab.holder(T0) == PartyId.BOB
    assert lab.holds(PartyId.ALICE, H0)
    with pytest.raises(InternalInvariantError):
        lab.transfer([T0], PartyId.ALICE, PartyId.CHARLIE)


def test_bell_measurement_merges_and_destroys():
    lab = PhotonLab()
    lab.add(quantum_service.make_bell(BellLabel.PHI_MINUS, T0, H0), PartyId.ZACH)
    lab.add(quantum_service.make_bell(BellLabel.PSI_PLUS, TP0, HP0), PartyId.ZACH)
    lab.bell_measure(PartyId.ZACH, T0, HP0, np.random.default_rng(5))
    assert not lab.exists(T0) and not lab.exists(HP0)
    assert set(lab.joint_state(H0, TP0).qubits) == {H0, TP0}
    with pytest.raises(InternalInvariantError):
        lab.holder(T0)


def test_photons_cannot_be_prepared_twice():
    lab = PhotonLab()
    lab.add(quantum_service.make_basis_state(T0, 0), PartyId.EVE)
    with pytest.raises(InvalidArgumentError):
        lab.add(quantum_service.make_basis_state(T0, 1), PartyId.EVE)


# ==================== TRANSCRIPT ====================

def test_reading_before_publication_fails():
    transcript = Transcript()
    with pytest.raises(ProtocolStateError):
        transcript.read(PartyId.ZACH, "initial-states")
    transcript.publish(PartyId.ALICE, "initial-states", ["PhiPlus"])
    assert transcript.read(PartyId.ZACH, "initial-states") == ["PhiPlus"]
    assert transcript.reads == [(PartyId.ZACH, "public", "initial-states")]


def test_covert_and_addressed_messages():
    transcript = Transcript()
    transcript.covert(PartyId.BOB, PartyId.ZACH, "T-sequence", [0, 1])
    transcript.publish(PartyId.GREEN, "bell-outcome/verify/0", "PhiPlus", receiver=PartyId.ALICE)
    assert transcript.read(PartyId.ZACH, "T-sequence", channel="covert") == [0, 1]
    with pytest.raises(ProtocolStateError):
        transcript.read(PartyId.ALICE, "T-sequence", channel="covert")
    with pytest.raises(ProtocolStateError):
        transcript.read(PartyId.CHARLIE, "bell-outcome/verify/0")
    assert [e.topic for e in transcript.public] == ["bell-outcome/verify/0"]
    assert [e.topic for e in transcript.covert_entries] == ["T-sequence"]


def test_topics_are_sent_once():
    transcript = Transcript()
    transcript.publish(PartyId.ALICE, "check-positions", [1])
    with pytest.raises(ProtocolStateError):
        transcript.publish(PartyId.ALICE, "check-positions", [2])
