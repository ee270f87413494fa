"""
QSS Collusion Lab - Protocol Service
Five-party engine: Alice's preparation and encoding, the agents' phase
rotations, Green's Bell checks, the improved pre-check and the final
secret recovery
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from qss.exceptions import InvalidArgumentError, ProtocolAbortError, ProtocolStateError
from qss.models.protocol import (
    AGENT_RING,
    Correlation,
    PartyId,
    PauliLabel,
    PhaseAngle,
    PhotonSequence,
    QubitSlot,
    SequenceName,
    Variant,
    Verdict,
)
from qss.models.quantum import BellLabel, MeasBasis, QubitId, RoleTag
from qss.schemas.config import ProtocolConfig
from qss.schemas.report import PositionVerdict, RunReport, Stage
from qss.services.adversary import CHECK_POSITIONS, INITIAL_STATES, AdversaryStrategy
from qss.services.gates import gate_algebra
from qss.services.lab import PhotonLab
from qss.services.quantum import quantum_service
from qss.services.randomness import RandomStreams
from qss.services.transcript import Transcript

logger = logging.getLogger(__name__)

_BELL_LABELS = list(BellLabel)
_PAULI_LABELS = list(PauliLabel)
_BASES = list(MeasBasis)

_T_NAMES = (SequenceName.T1, SequenceName.T2, SequenceName.T3, SequenceName.T4)
_TP_NAMES = (SequenceName.TP1, SequenceName.TP2, SequenceName.TP3, SequenceName.TP4)


@dataclass
class RunContext:
    """Mutable state of one protocol execution."""
    config: ProtocolConfig
    strategy: AdversaryStrategy
    streams: RandomStreams
    engine: "ProtocolEngine"
    lab: PhotonLab = field(default_factory=PhotonLab)
    transcript: Transcript = field(default_factory=Transcript)
    t_sequence: Optional[PhotonSequence] = None
    h_sequence: Optional[PhotonSequence] = None
    # Alice's private knowledge
    initial_labels: List[BellLabel] = field(default_factory=list)
    secret: List[PauliLabel] = field(default_factory=list)
    # Each agent's private angles, position -> angle
    agent_angles: Dict[PartyId, Dict[int, PhaseAngle]] = field(default_factory=dict)
    precheck_positions: List[int] = field(default_factory=list)
    check_positions: List[int] = field(default_factory=list)
    message_positions: List[int] = field(default_factory=list)
    verdicts: List[PositionVerdict] = field(default_factory=list)
    detection_stage: Optional[Stage] = None
    recovered: Optional[Dict[int, PauliLabel]] = None

    @property
    def detected(self) -> bool:
        return self.detection_stage is not None


def select_check_positions(live_positions: Sequence[int], count: int, rng: np.random.Generator) -> List[int]:
    """Uniformly choose `count` distinct positions from the live ones, returned sorted."""
    live = list(live_positions)
    if count < 0 or count > len(live):
        raise InvalidArgumentError(f"Cannot choose {count} positions from {len(live)} live photons")
    if count == 0:
        return []
    chosen = rng.choice(len(live), size=count, replace=False)
    return sorted(live[i] for i in chosen)


class ProtocolEngine:
    """Runs the protocol step by step; every party decision goes through the strategy's hooks."""

    def new_context(self, config: ProtocolConfig, strategy: Optional[AdversaryStrategy] = None) -> RunContext:
        return RunContext(
            config=config,
            strategy=strategy or AdversaryStrategy(),
            streams=RandomStreams(config.seed),
            engine=self,
            agent_angles={party: {} for party in AGENT_RING},
        )

    # ==================== ALICE ====================

    def alice_prepare(self, ctx: RunContext, labels: Optional[Sequence[BellLabel]] = None) -> List[BellLabel]:
        """Prepare k Bell pairs; t photons form the T-sequence, h photons the H-sequence."""
        k = ctx.config.k
        if labels is None:
            draws = ctx.streams.stream(PartyId.ALICE, "labels").integers(0, 4, size=k)
            labels = [_BELL_LABELS[int(i)] for i in draws]
        elif len(labels) != k:
            raise InvalidArgumentError(f"Expected {k} initial Bell states, got {len(labels)}")

        t_qubits, h_qubits = [], []
        for position, label in enumerate(labels):
            t = QubitId(RoleTag.T, position)
            h = QubitId(RoleTag.H, position)
            ctx.lab.add(quantum_service.make_bell(label, t, h), PartyId.ALICE)
            t_qubits.append(t)
            h_qubits.append(h)

        ctx.initial_labels = list(labels)
        ctx.t_sequence = PhotonSequence.of(SequenceName.T, t_qubits)
        ctx.h_sequence = PhotonSequence.of(SequenceName.H, h_qubits)
        logger.debug(f"Alice prepared {k} Bell pairs")
        return ctx.initial_labels

    def draw_secret(self, ctx: RunContext) -> List[PauliLabel]:
        draws = ctx.streams.stream(PartyId.ALICE, "secret").integers(0, 4, size=ctx.config.k)
        return [_PAULI_LABELS[int(i)] for i in draws]

    def alice_encode(self, ctx: RunContext, secret: Sequence[PauliLabel]) -> PhotonSequence:
        """Apply the secret Paulis to the live h photons and rename the sequence H1."""
        if len(secret) != ctx.config.k:
            raise InvalidArgumentError(f"Secret must have {ctx.config.k} entries, got {len(secret)}")
        for position in ctx.h_sequence.live_positions():
            pauli = gate_algebra.pauli_unitary(secret[position])
            ctx.lab.apply(PartyId.ALICE, pauli, ctx.h_sequence.qubit(position))
        ctx.h_sequence = ctx.h_sequence.renamed(SequenceName.H1)
        return ctx.h_sequence

    # ==================== AGENTS ====================

    def send_sequence(
        self,
        ctx: RunContext,
        sequence: PhotonSequence,
        sender: PartyId,
        receiver: PartyId
    ) -> PhotonSequence:
        """Move a sequence over the quantum channel, letting a tapping strategy act in transit."""
        strategy = ctx.strategy
        if strategy.intercepts(sender, receiver):
            ctx.lab.transfer(sequence.live_qubits(), sender, PartyId.EVE)
            sequence = strategy.on_transit(ctx, sequence, sender, receiver)
            ctx.lab.transfer(sequence.live_qubits(), PartyId.EVE, receiver)
        else:
            ctx.lab.transfer(sequence.live_qubits(), sender, receiver)
        return sequence

    def draw_angles(self, ctx: RunContext, party: PartyId, positions: Sequence[int]) -> List[PhaseAngle]:
        ticks = ctx.streams.stream(party, "angles").integers(0, 3, size=len(positions))
        return [PhaseAngle(int(t)) for t in ticks]

    def agent_apply(
        self,
        ctx: RunContext,
        party: PartyId,
        sequence: PhotonSequence,
        angles: Sequence[PhaseAngle]
    ) -> PhotonSequence:
        """Rotate each live photon of the sequence by the agent's private angle."""
        live = sequence.live_positions()
        if len(angles) != len(live):
            raise InvalidArgumentError(f"{party.value} needs {len(live)} angles, got {len(angles)}")
        applied = ctx.agent_angles.setdefault(party, {})
        for position, angle in zip(live, angles):
            ctx.lab.apply(party, gate_algebra.phase_unitary(angle), sequence.qubit(position))
            applied[position] = angle
        return sequence

    def relay_through_agents(self, ctx: RunContext) -> PhotonSequence:
        """The T-sequence travels Alice -> Bob -> Charlie -> Green -> Zach."""
        sender = PartyId.ALICE
        sequence = ctx.t_sequence
        for hop, agent in enumerate(AGENT_RING):
            sequence = self.send_sequence(ctx, sequence, sender, agent)
            behavior = ctx.strategy.behavior(agent)
            sequence = behavior.on_receive_sequence(ctx, agent, sequence)
            angles = self.draw_angles(ctx, agent, sequence.live_positions())
            sequence = behavior.on_apply_operation(ctx, agent, sequence, angles)
            fake = sequence.name.value.startswith("Tp")
            sequence = sequence.renamed((_TP_NAMES if fake else _T_NAMES)[hop])
            logger.debug(f"{agent.value} forwarded {sequence.name.value}")
            sender = agent
        ctx.t_sequence = sequence
        return sequence

    def publish_angles(self, ctx: RunContext, stage: str, positions: Sequence[int]) -> None:
        """
        The agents publish their angles for the given positions in a random order.

        Green relays the shuffled lists as one broadcast; only the multiset per
        position is public and attribution goes to the debug log.
        """
        rng = ctx.streams.stream(PartyId.GREEN, "publish-order")
        published = []
        for position in positions:
            order = rng.permutation(len(AGENT_RING))
            agents = [AGENT_RING[int(i)] for i in order]
            published.append([position, [ctx.agent_angles[a][position].ticks for a in agents]])
            logger.debug(f"angles/{stage} position {position} order: {[a.value for a in agents]}")
        ctx.transcript.publish(PartyId.GREEN, f"angles/{stage}", published)

    def pooled_angles(self, ctx: RunContext, reader: PartyId, stage: str, position: int) -> List[PhaseAngle]:
        """Sorted multiset of the angles published for one position."""
        published = dict(ctx.transcript.read(reader, f"angles/{stage}"))
        if position not in published:
            raise ProtocolStateError(f"No angles published for position {position} at {stage}")
        return sorted(PhaseAngle(t) for t in published[position])

    def _surrender(self, ctx: RunContext, stage: str, positions: List[int], receiver: PartyId):
        surrendered = ctx.strategy.behavior(PartyId.ZACH).on_check_request(ctx, PartyId.ZACH, stage, positions)
        missing = [p for p in positions if p not in surrendered]
        if missing:
            raise ProtocolAbortError(f"Zach did not surrender photons at positions {missing}")
        for position in positions:
            t, h = surrendered[position]
            qubits = [t] if h is None else [t, h]
            for qubit in qubits:
                if ctx.lab.holder(qubit) != receiver:
                    ctx.lab.transfer([qubit], ctx.lab.holder(qubit), receiver)
        return surrendered

    # ==================== CHECKS ====================

    def improved_precheck(self, ctx: RunContext) -> List[PositionVerdict]:
        """
        Pre-check of the improved protocol.

        Before encoding, Alice measures m of her h photons in a random basis,
        gets the matching t photons back from Zach, undoes the published
        compound rotation and checks the correlation of her Bell state.
        """
        m = ctx.config.m
        if ctx.config.variant != Variant.IMPROVED or m == 0:
            return []

        positions = select_check_positions(
            ctx.h_sequence.live_positions(), m, ctx.streams.stream(PartyId.ALICE, "positions")
        )
        basis_rng = ctx.streams.stream(PartyId.ALICE, "basis")
        bases: Dict[int, MeasBasis] = {}
        h_bits: Dict[int, int] = {}
        for position in positions:
            bases[position] = _BASES[int(basis_rng.integers(0, 2))]
            h_bits[position] = ctx.lab.basis_measure(
                PartyId.ALICE,
                ctx.h_sequence.qubit(position),
                bases[position],
                ctx.streams.stream(PartyId.ALICE, "measure", position),
            )

        ctx.transcript.publish(PartyId.ALICE, "precheck-positions", positions)
        ctx.precheck_positions = positions
        surrendered = self._surrender(ctx, "precheck", positions, PartyId.ALICE)
        self.publish_angles(ctx, "precheck", positions)

        verdicts = []
        for position in positions:
            t, _ = surrendered[position]
            compound = gate_algebra.compose_phase(self.pooled_angles(ctx, PartyId.ALICE, "precheck", position))
            ctx.lab.apply(PartyId.ALICE, gate_algebra.phase_unitary(gate_algebra.inverse_phase(compound)), t)
            t_bit = ctx.lab.basis_measure(
                PartyId.ALICE, t, bases[position], ctx.streams.stream(PartyId.ALICE, "measure", position)
            )
            observed = Correlation.SAME if t_bit == h_bits[position] else Correlation.OPPOSITE
            expected = gate_algebra.expected_correlation(ctx.initial_labels[position], bases[position])
            verdict = Verdict.MATCH if observed == expected else Verdict.MISMATCH
            verdicts.append(PositionVerdict(position=position, stage="precheck", verdict=verdict, basis=bases[position]))

        ctx.t_sequence = ctx.t_sequence.consume(positions)
        ctx.h_sequence = ctx.h_sequence.consume(positions)
        ctx.verdicts.extend(verdicts)
        if any(v.verdict == Verdict.MISMATCH for v in verdicts):
            ctx.detection_stage = "precheck"
        ctx.transcript.publish(PartyId.ALICE, "precheck-result", "abort" if ctx.detected else "continue")
        logger.debug(f"Pre-check at {positions}: {[v.verdict.value for v in verdicts]}")
        return verdicts

    def green_verify(self, ctx: RunContext, position: int, t_qubit: QubitId, h_qubit: QubitId) -> Verdict:
        """Green undoes the compound rotation and Bell-measures; Alice compares with what she encoded."""
        compound = gate_algebra.compose_phase(self.pooled_angles(ctx, PartyId.GREEN, "verify", position))
        ctx.lab.apply(PartyId.GREEN, gate_algebra.phase_unitary(gate_algebra.inverse_phase(compound)), t_qubit)
        outcome = ctx.lab.bell_measure(
            PartyId.GREEN, t_qubit, h_qubit, ctx.streams.stream(PartyId.GREEN, "measure", position)
        )
        topic = f"bell-outcome/verify/{position}"
        ctx.transcript.publish(PartyId.GREEN, topic, outcome.value, receiver=PartyId.ALICE)

        measured = BellLabel(ctx.transcript.read(PartyId.ALICE, topic))
        expected = gate_algebra.bell_under_pauli(
            ctx.initial_labels[position], QubitSlot.SECOND, ctx.secret[position]
        )
        return Verdict.MATCH if measured == expected else Verdict.MISMATCH

    def final_check(self, ctx: RunContext) -> List[PositionVerdict]:
        """k1 random positions are verified by Green; the rest carry the message."""
        live = ctx.t_sequence.live_positions()
        positions = select_check_positions(live, ctx.config.k1, ctx.streams.stream(PartyId.ALICE, "positions"))
        ctx.transcript.publish(PartyId.ALICE, CHECK_POSITIONS, positions)
        ctx.check_positions = positions
        for agent in AGENT_RING:
            ctx.strategy.behavior(agent).on_announcement(ctx, agent, CHECK_POSITIONS)

        surrendered = self._surrender(ctx, "verify", positions, PartyId.GREEN)
        self.publish_angles(ctx, "verify", positions)
        verdicts = [
            PositionVerdict(position=p, stage="verify", verdict=self.green_verify(ctx, p, *surrendered[p]))
            for p in positions
        ]

        ctx.t_sequence = ctx.t_sequence.consume(positions)
        ctx.h_sequence = ctx.h_sequence.consume(positions)
        ctx.message_positions = ctx.t_sequence.live_positions()
        ctx.verdicts.extend(verdicts)
        if any(v.verdict == Verdict.MISMATCH for v in verdicts):
            ctx.detection_stage = "verify"
        ctx.transcript.publish(PartyId.ALICE, "check-result", "abort" if ctx.detected else "continue")
        return verdicts

    # ==================== RECOVERY ====================

    def recover_secret(self, ctx: RunContext) -> Dict[int, PauliLabel]:
        """The agents jointly read Alice's Paulis at the message positions after she announces her initial states."""
        if ctx.detected:
            raise ProtocolStateError("Run was aborted; no secret to recover")
        if not ctx.transcript.has(INITIAL_STATES):
            raise ProtocolStateError("Alice has not announced her initial Bell states")

        positions = ctx.message_positions
        self.publish_angles(ctx, "recover", positions)
        surrendered = self._surrender(ctx, "recover", positions, PartyId.GREEN)
        announced = ctx.transcript.read(PartyId.GREEN, INITIAL_STATES)

        recovered = {}
        for position in positions:
            t, h = surrendered[position]
            compound = gate_algebra.compose_phase(self.pooled_angles(ctx, PartyId.GREEN, "recover", position))
            ctx.lab.apply(PartyId.GREEN, gate_algebra.phase_unitary(gate_algebra.inverse_phase(compound)), t)
            outcome = ctx.lab.bell_measure(
                PartyId.GREEN, t, h, ctx.streams.stream(PartyId.GREEN, "measure", position)
            )
            ctx.transcript.publish(PartyId.GREEN, f"bell-outcome/recover/{position}", outcome.value)
            recovered[position] = gate_algebra.infer_pauli(BellLabel(announced[position]), outcome)
        ctx.recovered = recovered
        return recovered

    # ==================== RUN ====================

    def run_scenario(
        self,
        config: ProtocolConfig,
        strategy: Optional[AdversaryStrategy] = None,
        labels: Optional[Sequence[BellLabel]] = None,
        secret: Optional[Sequence[PauliLabel]] = None
    ) -> RunReport:
        """Execute one full run and return its transcript."""
        ctx = self.new_context(config, strategy)
        self.alice_prepare(ctx, labels)
        ctx.secret = list(secret) if secret is not None else self.draw_secret(ctx)
        if len(ctx.secret) != config.k:
            raise InvalidArgumentError(f"Secret must have {config.k} entries, got {len(ctx.secret)}")
        ctx.strategy.on_setup(ctx)

        self.relay_through_agents(ctx)
        self.improved_precheck(ctx)
        if not ctx.detected:
            self.alice_encode(ctx, ctx.secret)
            ctx.lab.transfer(ctx.h_sequence.live_qubits(), PartyId.ALICE, PartyId.ZACH)
            self.final_check(ctx)
        if not ctx.detected:
            ctx.transcript.publish(PartyId.ALICE, INITIAL_STATES, [label.value for label in ctx.initial_labels])
            for agent in AGENT_RING:
                ctx.strategy.behavior(agent).on_announcement(ctx, agent, INITIAL_STATES)
            self.recover_secret(ctx)

        report = self.build_report(ctx)
        logger.debug(
            f"Run seed={config.seed} scenario={ctx.strategy.name}: "
            f"detected={report.detected} stage={report.detection_stage}"
        )
        return report

    def build_report(self, ctx: RunContext) -> RunReport:
        error_flags = {}
        if ctx.recovered is not None:
            error_flags = {p: ctx.recovered[p] != ctx.secret[p] for p in ctx.message_positions}
        return RunReport(
            config=ctx.config,
            scenario=ctx.strategy.name,
            initial_labels=ctx.initial_labels,
            agent_angles={
                party: {p: a.ticks for p, a in sorted(angles.items())}
                for party, angles in ctx.agent_angles.items()
            },
            precheck_positions=ctx.precheck_positions,
            check_positions=ctx.check_positions,
            message_positions=ctx.message_positions,
            verdicts=ctx.verdicts,
            detected=ctx.detected,
            detection_stage=ctx.detection_stage,
            alice_secret=ctx.secret,
            recovered_secret=ctx.recovered,
            adversary_secret=ctx.strategy.adversary_secret(),
            error_flags=error_flags,
            messages=ctx.transcript.public,
            covert_messages=ctx.transcript.covert_entries,
        )


# Singleton instance
protocol_engine = ProtocolEngine()
