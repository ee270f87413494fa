"""
Test the five-party protocol engine: preparation, rotations, encoding,
Green's checks, the improved pre-check and secret recovery
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from collections import Counter

import numpy as np
import pytest
from pydantic import ValidationError

from qss.exceptions import InternalInvariantError, InvalidArgumentError, ProtocolStateError
from qss.models.protocol import (
    AGENT_RING,
    PartyId,
    PauliLabel,
    PhaseAngle,
    PhotonSequence,
    SequenceName,
    Variant,
    Verdict,
)
from qss.models.quantum import BellLabel, QubitId, RoleTag
from qss.schemas.config import ProtocolConfig
from qss.schemas.report import PositionVerdict, RunReport
from qss.services.adversary import AdversaryStrategy, PartyBehavior
from qss.services.equations import rotated_bell
from qss.services.gates import gate_algebra
from qss.services.protocol import protocol_engine, select_check_positions
from qss.services.quantum import quantum_service


def honest_config(seed: int, k: int = 32, k1: int = 8, m: int = 0) -> ProtocolConfig:
    variant = Variant.IMPROVED if m else Variant.ORIGINAL
    return ProtocolConfig(k=k, k1=k1, m=m, variant=variant, seed=seed)


# ==================== CONFIG ====================

def test_config_budget_rules():
    with pytest.raises(ValidationError, match="k1 must be < k"):
        ProtocolConfig(k=4, k1=8)
    with pytest.raises(ValidationError, match="m must be 0"):
        ProtocolConfig(k=32, k1=8, m=4, variant=Variant.ORIGINAL)
    with pytest.raises(ValidationError, match="m must be < k - k1"):
        ProtocolConfig(k=32, k1=8, m=24, variant=Variant.IMPROVED)
    with pytest.raises(ValidationError):
        ProtocolConfig(k=32, k1=0)
    config = ProtocolConfig(k=64, k1=8, m=16, variant=Variant.IMPROVED)
    assert config.message_positions == 40
    assert config.message_capacity == 80


# ==================== ALICE ====================

def test_prepare_forced_label():
    ctx = protocol_engine.new_context(honest_config(1, k=2, k1=1))
    protocol_engine.alice_prepare(ctx, [BellLabel.PHI_PLUS, BellLabel.PSI_MINUS])
    t0, h0 = ctx.t_sequence.qubit(0), ctx.h_sequence.qubit(0)
    assert quantum_service.equal_up_to_global_phase(
        ctx.lab.joint_state(t0), quantum_service.make_bell(BellLabel.PHI_PLUS, t0, h0)
    )
    assert ctx.lab.holder(t0) == PartyId.ALICE


def test_prepare_label_frequencies():
    ctx = protocol_engine.new_context(honest_config(99, k=1000, k1=1))
    counts = Counter(protocol_engine.alice_prepare(ctx))
    # 4 sigma of a multinomial with p = 1/4
    for label in BellLabel:
        assert abs(counts[label] - 250) < 55


def test_prepare_is_deterministic():
    first = protocol_engine.alice_prepare(protocol_engine.new_context(honest_config(5)))
    second = protocol_engine.alice_prepare(protocol_engine.new_context(honest_config(5)))
    other = protocol_engine.alice_prepare(protocol_engine.new_context(honest_config(6)))
    assert first == second
    assert first != other


def test_prepare_rejects_wrong_label_count():
    ctx = protocol_engine.new_context(honest_config(1, k=4, k1=1))
    with pytest.raises(InvalidArgumentError):
        protocol_engine.alice_prepare(ctx, [BellLabel.PHI_PLUS])


def test_encode_requires_full_secret():
    ctx = protocol_engine.new_context(honest_config(1, k=4, k1=1))
    protocol_engine.alice_prepare(ctx)
    with pytest.raises(InvalidArgumentError):
        protocol_engine.alice_encode(ctx, [PauliLabel.S00])


def test_encode_transports_the_label():
    ctx = protocol_engine.new_context(honest_config(1, k=2, k1=1))
    protocol_engine.alice_prepare(ctx, [BellLabel.PSI_MINUS, BellLabel.PHI_PLUS])
    h1 = protocol_engine.alice_encode(ctx, [PauliLabel.S01, PauliLabel.S00])
    assert h1.name == SequenceName.H1
    t0, h0 = ctx.t_sequence.qubit(0), h1.qubit(0)
    assert quantum_service.equal_up_to_global_phase(
        ctx.lab.joint_state(t0, h0), quantum_service.make_bell(BellLabel.PHI_MINUS, t0, h0)
    )


# ==================== AGENTS ====================

def _walk_ring(ctx, angles_per_agent):
    sequence = ctx.t_sequence
    sender = PartyId.ALICE
    for agent, angles in zip(AGENT_RING, angles_per_agent):
        ctx.lab.transfer(sequence.live_qubits(), sender, agent)
        sequence = protocol_engine.agent_apply(ctx, agent, sequence, [PhaseAngle(a) for a in angles])
        sender = agent
    return sequence


def test_worked_instance_final_state():
    # Bob 1, Charlie 0, Green 1, Zach 2 on |psi->, Alice's S01 on h
    ctx = protocol_engine.new_context(honest_config(1, k=2, k1=1))
    protocol_engine.alice_prepare(ctx, [BellLabel.PSI_MINUS, BellLabel.PSI_MINUS])
    _walk_ring(ctx, [[1, 0], [0, 0], [1, 0], [2, 0]])
    protocol_engine.alice_encode(ctx, [PauliLabel.S01, PauliLabel.S01])
    t0, h0 = ctx.t_sequence.qubit(0), ctx.h_sequence.qubit(0)
    expected = rotated_bell(BellLabel.PHI_MINUS, t0, h0, PhaseAngle(1))
    assert quantum_service.equal_up_to_global_phase(ctx.lab.joint_state(t0, h0), expected)
    assert ctx.agent_angles[PartyId.ZACH] == {0: PhaseAngle(2), 1: PhaseAngle(0)}


def test_opposite_angles_cancel():
    ctx = protocol_engine.new_context(honest_config(1, k=2, k1=1))
    protocol_engine.alice_prepare(ctx, [BellLabel.PHI_PLUS, BellLabel.PSI_PLUS])
    _walk_ring(ctx, [[1, 0], [2, 0], [0, 0], [0, 0]])
    for position, label in enumerate([BellLabel.PHI_PLUS, BellLabel.PSI_PLUS]):
        t, h = ctx.t_sequence.qubit(position), ctx.h_sequence.qubit(position)
        assert quantum_service.equal_up_to_global_phase(
            ctx.lab.joint_state(t, h), quantum_service.make_bell(label, t, h)
        )


def test_agent_apply_checks_length():
    ctx = protocol_engine.new_context(honest_config(1, k=3, k1=1))
    protocol_engine.alice_prepare(ctx)
    ctx.lab.transfer(ctx.t_sequence.live_qubits(), PartyId.ALICE, PartyId.BOB)
    with pytest.raises(InvalidArgumentError):
        protocol_engine.agent_apply(ctx, PartyId.BOB, ctx.t_sequence, [PhaseAngle(0)])


def test_agents_cannot_touch_photons_they_do_not_hold():
    ctx = protocol_engine.new_context(honest_config(1, k=2, k1=1))
    protocol_engine.alice_prepare(ctx)
    with pytest.raises(InternalInvariantError):
        protocol_engine.agent_apply(ctx, PartyId.BOB, ctx.t_sequence, [PhaseAngle(1), PhaseAngle(1)])


def test_relay_renames_sequence():
    ctx = protocol_engine.new_context(honest_config(3, k=4, k1=1))
    protocol_engine.alice_prepare(ctx)
    sequence = protocol_engine.relay_through_agents(ctx)
    assert sequence.name == SequenceName.T4
    assert all(ctx.lab.holder(q) == PartyId.ZACH for q in sequence.live_qubits())
    assert all(len(ctx.agent_angles[agent]) == 4 for agent in AGENT_RING)


# ==================== POSITIONS ====================

def test_select_all_positions():
    rng = np.random.default_rng(0)
    assert select_check_positions(range(5), 5, rng) == [0, 1, 2, 3, 4]


def test_select_is_reproducible():
    a = select_check_positions(range(100), 10, np.random.default_rng(8))
    b = select_check_positions(range(100), 10, np.random.default_rng(8))
    assert a == b
    assert len(set(a)) == 10


def test_select_rejects_too_few_positions():
    with pytest.raises(InvalidArgumentError):
        select_check_positions([0, 1], 3, np.random.default_rng(0))


def test_selection_marginals():
    rng = np.random.default_rng(17)
    counts = Counter()
    trials = 10_000
    for _ in range(trials):
        counts.update(select_check_positions(range(10), 3, rng))
    for position in range(10):
        assert abs(counts[position] / trials - 0.3) < 0.02


def test_consumed_positions_cannot_be_used():
    sequence = PhotonSequence.of(SequenceName.T, [QubitId(RoleTag.T, i) for i in range(3)])
    consumed = sequence.consume([1])
    assert consumed.live_positions() == [0, 2]
    assert len(sequence) == 3
    with pytest.raises(InternalInvariantError):
        consumed.qubit(1)
    with pytest.raises(InternalInvariantError):
        consumed.consume([1])


# ==================== FULL RUNS ====================

@pytest.mark.parametrize("seed", range(20))
def test_honest_run_is_complete(seed):
    report = protocol_engine.run_scenario(honest_config(seed))
    assert not report.detected
    assert report.mismatch_count == 0
    assert len(report.stage_verdicts("verify")) == 8
    assert len(report.message_positions) == 24
    assert report.recovery_accuracy == 1.0
    assert report.recovered_secret == {p: report.alice_secret[p] for p in report.message_positions}
    assert not any(report.error_flags.values())
    assert report.adversary_secret is None


def test_worked_instance_recovery():
    config = honest_config(4, k=2, k1=1)
    report = protocol_engine.run_scenario(
        config,
        labels=[BellLabel.PSI_MINUS, BellLabel.PSI_MINUS],
        secret=[PauliLabel.S01, PauliLabel.S01],
    )
    assert not report.detected
    (position,) = report.message_positions
    assert report.recovered_secret == {position: PauliLabel.S01}
    outcome = next(e.value for e in report.messages if e.topic == f"bell-outcome/recover/{position}")
    assert outcome == BellLabel.PHI_MINUS.value


def test_identity_secret_is_recovered():
    report = protocol_engine.run_scenario(honest_config(12), secret=[PauliLabel.S00] * 32)
    assert set(report.recovered_secret.values()) == {PauliLabel.S00}


@pytest.mark.parametrize("seed", range(10))
def test_improved_honest_precheck_passes(seed):
    report = protocol_engine.run_scenario(honest_config(seed, k=32, k1=8, m=8))
    precheck = report.stage_verdicts("precheck")
    assert len(precheck) == 8
    assert all(v.verdict == Verdict.MATCH for v in precheck)
    assert not report.detected
    assert len(report.message_positions) == 16
    assert not set(report.precheck_positions) & set(report.check_positions)
    assert report.recovery_accuracy == 1.0


def test_improved_with_zero_precheck_is_original_order():
    config = ProtocolConfig(k=16, k1=4, m=0, variant=Variant.IMPROVED, seed=3)
    report = protocol_engine.run_scenario(config)
    assert report.precheck_positions == []
    assert report.stage_verdicts("precheck") == []
    assert len(report.message_positions) == 12


def test_published_angles_compose_to_applied():
    report = protocol_engine.run_scenario(honest_config(21))
    published = dict(next(e.value for e in report.messages if e.topic == "angles/verify"))
    assert sorted(published) == report.check_positions
    for position, ticks in published.items():
        applied = [PhaseAngle(report.agent_angles[agent][position]) for agent in AGENT_RING]
        assert sorted(PhaseAngle(t) for t in ticks) == sorted(applied)
        assert gate_algebra.compose_phase(PhaseAngle(t) for t in ticks) == gate_algebra.compose_phase(applied)


def test_honest_run_has_no_covert_traffic():
    report = protocol_engine.run_scenario(honest_config(2))
    assert report.covert_messages == []
    topics = [e.topic for e in report.messages]
    # Alice announces her initial states only after the check passed
    assert topics.index("check-result") < topics.index("initial-states")


def test_recovery_after_detection_is_refused():
    ctx = protocol_engine.new_context(honest_config(1))
    ctx.detection_stage = "verify"
    with pytest.raises(ProtocolStateError):
        protocol_engine.recover_secret(ctx)


def test_recovery_before_announcement_is_refused():
    ctx = protocol_engine.new_context(honest_config(1))
    with pytest.raises(ProtocolStateError):
        protocol_engine.recover_secret(ctx)


def test_report_detection_must_match_verdicts():
    with pytest.raises(ValidationError):
        RunReport(
            config=honest_config(1, k=2, k1=1),
            scenario="honest",
            initial_labels=[BellLabel.PHI_PLUS] * 2,
            alice_secret=[PauliLabel.S00] * 2,
            verdicts=[PositionVerdict(position=0, stage="verify", verdict=Verdict.MISMATCH)],
            detected=False,
        )


class FreshPhotonZach(PartyBehavior):
    """Swaps every checked t photon for a fresh |0>."""

    def on_check_request(self, ctx, party, stage, positions):
        surrendered = {}
        for position in positions:
            t = ctx.t_sequence.qubit(position)
            ctx.lab.discard(PartyId.ZACH, t, ctx.streams.stream(PartyId.ZACH, "measure", position))
            ctx.lab.add(quantum_service.make_basis_state(t, 0), PartyId.ZACH)
            surrendered[position] = (t, ctx.h_sequence.qubit(position))
        return surrendered


def test_fresh_photon_is_caught_three_times_in_four():
    mismatches = total = 0
    for seed in range(200):
        strategy = AdversaryStrategy()
        strategy.overrides[PartyId.ZACH] = FreshPhotonZach()
        report = protocol_engine.run_scenario(honest_config(seed, k=16, k1=12), strategy)
        verify = report.stage_verdicts("verify")
        mismatches += sum(v.verdict == Verdict.MISMATCH for v in verify)
        total += len(verify)
    assert total == 2400
    assert abs(mismatches / total - 0.75) < 0.04
