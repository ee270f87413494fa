"""
QSS Collusion Lab - Adversary Service
Party behaviors: honest defaults, the Bob-Zach collusion attack and an
intercept-resend eavesdropper

Hooks receive the run context and may only use classical values read from
the transcript plus photons the acting party holds; the lab and transcript
enforce both.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Tuple

from qss.exceptions import InvalidArgumentError, ProtocolStateError
from qss.models.protocol import PartyId, PauliLabel, PhaseAngle, PhotonSequence, SequenceName
from qss.models.quantum import BellLabel, MeasBasis, QubitId, RoleTag
from qss.services.gates import gate_algebra
from qss.services.quantum import quantum_service

if TYPE_CHECKING:
    from qss.services.protocol import RunContext

logger = logging.getLogger(__name__)

# Photons surrendered for a check: (t-photon, h-photon or None for the pre-check)
Surrendered = Dict[int, Tuple[QubitId, Optional[QubitId]]]

CHECK_POSITIONS = "check-positions"
INITIAL_STATES = "initial-states"


class PartyBehavior:
    """Honest behavior; adversarial parties override individual hooks."""

    def on_receive_sequence(self, ctx: RunContext, party: PartyId, sequence: PhotonSequence) -> PhotonSequence:
        # Single-photon composition check is a no-op on an ideal channel
        logger.debug(f"{party.value} checked {sequence.name.value}-sequence for single photons")
        return sequence

    def on_apply_operation(
        self,
        ctx: RunContext,
        party: PartyId,
        sequence: PhotonSequence,
        angles: List[PhaseAngle]
    ) -> PhotonSequence:
        return ctx.engine.agent_apply(ctx, party, sequence, angles)

    def on_check_request(self, ctx: RunContext, party: PartyId, stage: str, positions: List[int]) -> Surrendered:
        """Hand over the photons Alice (pre-check) or Green (verify/recover) asked for."""
        if stage == "precheck":
            return {p: (ctx.t_sequence.qubit(p), None) for p in positions}
        return {p: (ctx.t_sequence.qubit(p), ctx.h_sequence.qubit(p)) for p in positions}

    def on_announcement(self, ctx: RunContext, party: PartyId, topic: str) -> None:
        return None


HONEST = PartyBehavior()


class AdversaryStrategy:
    """Map of party overrides plus an optional channel tap; the base class is fully honest."""

    name = "honest"

    def __init__(self):
        self.overrides: Dict[PartyId, PartyBehavior] = {}

    def behavior(self, party: PartyId) -> PartyBehavior:
        return self.overrides.get(party, HONEST)

    def on_setup(self, ctx: RunContext) -> None:
        """Called once after Alice prepares her pairs."""
        return None

    def intercepts(self, sender: PartyId, receiver: PartyId) -> bool:
        return False

    def on_transit(
        self,
        ctx: RunContext,
        sequence: PhotonSequence,
        sender: PartyId,
        receiver: PartyId
    ) -> PhotonSequence:
        return sequence

    def adversary_secret(self) -> Optional[Dict[int, PauliLabel]]:
        return None


# ==================== COLLUSION ====================

@dataclass
class CollusionState:
    """Everything Bob and Zach hold or learn during one run."""
    fake_t: Optional[PhotonSequence] = None
    fake_h: Optional[PhotonSequence] = None
    captured_t: Optional[PhotonSequence] = None
    swap_outcomes: Dict[int, BellLabel] = field(default_factory=dict)
    corrections: Dict[int, PauliLabel] = field(default_factory=dict)
    message_outcomes: Dict[int, BellLabel] = field(default_factory=dict)
    recovered: Optional[Dict[int, PauliLabel]] = None


class ColludingBob(PartyBehavior):
    """Diverts Alice's T-sequence to Zach and forwards the fake T'-sequence instead."""

    def __init__(self, state: CollusionState, share_angles: bool = False):
        self.state = state
        self.share_angles = share_angles

    def on_receive_sequence(self, ctx: RunContext, party: PartyId, sequence: PhotonSequence) -> PhotonSequence:
        return self.bob_substitute(ctx, sequence)

    def bob_substitute(self, ctx: RunContext, sequence: PhotonSequence) -> PhotonSequence:
        """Send the genuine T-sequence to Zach covertly; continue with T'."""
        if self.state.fake_t is None or len(self.state.fake_t) != len(sequence):
            raise ProtocolStateError("Fake pair count must match the T-sequence")
        ctx.lab.transfer(sequence.live_qubits(), PartyId.BOB, PartyId.ZACH)
        ctx.transcript.covert(PartyId.BOB, PartyId.ZACH, "T-sequence", sequence.live_positions())
        self.state.captured_t = sequence
        logger.debug("Bob diverted the T-sequence to Zach")
        return self.state.fake_t

    def on_apply_operation(
        self,
        ctx: RunContext,
        party: PartyId,
        sequence: PhotonSequence,
        angles: List[PhaseAngle]
    ) -> PhotonSequence:
        forwarded = ctx.engine.agent_apply(ctx, party, sequence, angles)
        if self.share_angles:
            applied = ctx.agent_angles[PartyId.BOB]
            ctx.transcript.covert(
                PartyId.BOB, PartyId.ZACH, "bob-angles", [[p, a.ticks] for p, a in sorted(applied.items())]
            )
        return forwarded


class ColludingZach(PartyBehavior):
    """Entanglement-swaps at check positions, reads the message positions and decodes."""

    def __init__(self, state: CollusionState, returns_genuine: bool = False, skip_corrections: bool = False):
        self.state = state
        self.returns_genuine = returns_genuine
        self.skip_corrections = skip_corrections

    def on_announcement(self, ctx: RunContext, party: PartyId, topic: str) -> None:
        if topic == CHECK_POSITIONS:
            checks = ctx.transcript.read(PartyId.ZACH, CHECK_POSITIONS)
            for position in checks:
                self.zach_swap_and_correct(ctx, position)
            others = [p for p in ctx.h_sequence.live_positions() if p not in checks]
            self.zach_read_messages(ctx, others)
        elif topic == INITIAL_STATES:
            self.zach_decode(ctx)

    def zach_swap_and_correct(self, ctx: RunContext, position: int) -> PauliLabel:
        """Swap (t, h') and correct h so (t', h) looks like the honest (t, h)."""
        checks = ctx.transcript.read(PartyId.ZACH, CHECK_POSITIONS)
        if position not in checks:
            raise InvalidArgumentError(f"Position {position} is not an announced check position")
        t = self.state.captured_t.qubit(position)
        h_fake = self.state.fake_h.qubit(position)
        rng = ctx.streams.stream(PartyId.ZACH, "measure", position)
        outcome = ctx.lab.bell_measure(PartyId.ZACH, t, h_fake, rng)
        correction = gate_algebra.bell_compare(outcome, BellLabel.PSI_PLUS)
        if not self.skip_corrections:
            ctx.lab.apply(PartyId.ZACH, gate_algebra.pauli_unitary(correction), ctx.h_sequence.qubit(position))
        self.state.swap_outcomes[position] = outcome
        self.state.corrections[position] = correction
        logger.debug(f"Zach swapped position {position}: {outcome.value} -> {correction.value}")
        return correction

    def zach_read_messages(self, ctx: RunContext, positions: Iterable[int]) -> Dict[int, BellLabel]:
        """Bell-measure genuine (t, h1) pairs; they are eigenstates, so the outcome is certain."""
        for position in positions:
            t = self.state.captured_t.qubit(position)
            h = ctx.h_sequence.qubit(position)
            rng = ctx.streams.stream(PartyId.ZACH, "measure", position)
            outcome = ctx.lab.bell_measure(PartyId.ZACH, t, h, rng)
            # The measured pair is left in the observed Bell state
            ctx.lab.add(quantum_service.make_bell(outcome, t, h), PartyId.ZACH)
            self.state.message_outcomes[position] = outcome
        return dict(self.state.message_outcomes)

    def zach_decode(self, ctx: RunContext) -> Dict[int, PauliLabel]:
        """Infer Alice's Paulis once she announces her initial Bell states."""
        if not ctx.transcript.has(INITIAL_STATES):
            raise ProtocolStateError("Alice has not announced her initial Bell states")
        announced = ctx.transcript.read(PartyId.ZACH, INITIAL_STATES)
        self.state.recovered = {
            position: gate_algebra.infer_pauli(BellLabel(announced[position]), outcome)
            for position, outcome in sorted(self.state.message_outcomes.items())
        }
        return self.state.recovered

    def on_check_request(self, ctx: RunContext, party: PartyId, stage: str, positions: List[int]) -> Surrendered:
        if stage == "precheck":
            return self._surrender_precheck(ctx, positions)
        if stage == "verify":
            return self.zach_forward_for_check(ctx, positions)
        return self._surrender_recovery(ctx, positions)

    def zach_forward_for_check(self, ctx: RunContext, positions: List[int]) -> Surrendered:
        """Green gets the fake T'(4) and the corrected H(1)."""
        missing = [p for p in positions if p not in self.state.corrections]
        if missing:
            raise ProtocolStateError(f"No swap performed at check positions {missing}")
        return {p: (ctx.t_sequence.qubit(p), ctx.h_sequence.qubit(p)) for p in positions}

    def _surrender_precheck(self, ctx: RunContext, positions: List[int]) -> Surrendered:
        if not self.returns_genuine:
            return {p: (ctx.t_sequence.qubit(p), None) for p in positions}

        # Genuine t never saw Charlie's or Green's rotation; pre-apply what Zach knows
        bob_angles = dict(ctx.transcript.read(PartyId.ZACH, "bob-angles", channel="covert"))
        own = ctx.agent_angles[PartyId.ZACH]
        surrendered: Surrendered = {}
        for position in positions:
            t = self.state.captured_t.qubit(position)
            known = gate_algebra.compose_phase([PhaseAngle(bob_angles[position]), own[position]])
            ctx.lab.apply(PartyId.ZACH, gate_algebra.phase_unitary(known), t)
            surrendered[position] = (t, None)
        return surrendered

    def _surrender_recovery(self, ctx: RunContext, positions: List[int]) -> Surrendered:
        # Re-rotate the genuine t by the published compound angle so Green's reversal undoes it
        surrendered: Surrendered = {}
        for position in positions:
            t = self.state.captured_t.qubit(position)
            angles = ctx.engine.pooled_angles(ctx, PartyId.ZACH, "recover", position)
            compound = gate_algebra.compose_phase(angles)
            ctx.lab.apply(PartyId.ZACH, gate_algebra.phase_unitary(compound), t)
            surrendered[position] = (t, ctx.h_sequence.qubit(position))
        return surrendered


class CollusionStrategy(AdversaryStrategy):
    """Bob and Zach's joint attack."""

    name = "collusion"

    def __init__(self, zach_returns_genuine: bool = False, skip_corrections: bool = False):
        super().__init__()
        self.state = CollusionState()
        self.overrides = {
            PartyId.BOB: ColludingBob(self.state, share_angles=zach_returns_genuine),
            PartyId.ZACH: ColludingZach(
                self.state,
                returns_genuine=zach_returns_genuine,
                skip_corrections=skip_corrections,
            ),
        }

    def on_setup(self, ctx: RunContext) -> None:
        """Prepare k fake |psi+> pairs; T' stays with Bob, H' goes to Zach."""
        fake_t, fake_h = [], []
        for position in range(ctx.config.k):
            t = QubitId(RoleTag.TP, position)
            h = QubitId(RoleTag.HP, position)
            ctx.lab.add(quantum_service.make_bell(BellLabel.PSI_PLUS, t, h), PartyId.BOB)
            fake_t.append(t)
            fake_h.append(h)
        ctx.lab.transfer(fake_h, PartyId.BOB, PartyId.ZACH)
        ctx.transcript.covert(PartyId.BOB, PartyId.ZACH, "H'-sequence", list(range(ctx.config.k)))
        self.state.fake_t = PhotonSequence.of(SequenceName.TP, fake_t)
        self.state.fake_h = PhotonSequence.of(SequenceName.HP, fake_h)

    def adversary_secret(self) -> Optional[Dict[int, PauliLabel]]:
        return self.state.recovered


# ==================== INTERCEPT-RESEND ====================

class InterceptResendStrategy(AdversaryStrategy):
    """External Eve measuring every t photon on its way from Alice to Bob."""

    name = "intercept-resend"

    def intercepts(self, sender: PartyId, receiver: PartyId) -> bool:
        return sender == PartyId.ALICE and receiver == PartyId.BOB

    def on_transit(
        self,
        ctx: RunContext,
        sequence: PhotonSequence,
        sender: PartyId,
        receiver: PartyId
    ) -> PhotonSequence:
        return self.intercept_resend_eve(ctx, sequence)

    def intercept_resend_eve(self, ctx: RunContext, sequence: PhotonSequence) -> PhotonSequence:
        """Measure each t in the computational basis and resend the collapsed photon."""
        for position in sequence.live_positions():
            t = sequence.qubit(position)
            rng = ctx.streams.stream(PartyId.EVE, "measure", position)
            bit = ctx.lab.basis_measure(PartyId.EVE, t, MeasBasis.COMPUTATIONAL, rng)
            ctx.lab.add(quantum_service.make_basis_state(t, bit), PartyId.EVE)
        return sequence


def build_strategy(scenario: str, zach_returns_genuine: bool = False) -> AdversaryStrategy:
    """Strategy for a CLI scenario name."""
    if scenario == "honest":
        return AdversaryStrategy()
    if scenario in ("collusion", "collusion-improved"):
        strategy = CollusionStrategy(zach_returns_genuine=zach_returns_genuine)
        strategy.name = scenario
        return strategy
    if scenario == "intercept-resend":
        return InterceptResendStrategy()
    raise InvalidArgumentError(f"Unknown scenario {scenario!r}")
