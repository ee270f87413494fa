"""
QSS Collusion Lab - Equations Service
Numeric reproduction of the attack's worked example and the exhaustive
undetectability sweep
"""
import itertools
import logging
from typing import Dict, List, Sequence

import numpy as np

from qss.config import get_settings
from qss.models.protocol import PauliLabel, PhaseAngle
from qss.models.quantum import BellLabel, QubitId, RoleTag, StateVector
from qss.schemas.report import EquationCheckResult
from qss.services.gates import gate_algebra
from qss.services.quantum import quantum_service

settings = get_settings()
logger = logging.getLogger(__name__)

T = QubitId(RoleTag.T, 0)
H = QubitId(RoleTag.H, 0)
TP = QubitId(RoleTag.TP, 0)
HP = QubitId(RoleTag.HP, 0)

# Worked instance: initial |psi->, Alice's S01, angles of Bob, Charlie, Green, Zach
WORKED_INITIAL = BellLabel.PSI_MINUS
WORKED_PAULI = PauliLabel.S01
WORKED_ANGLES = (1, 0, 1, 2)
WORKED_OUTCOME = BellLabel.PSI_MINUS

# Swap outcome on (t, h') -> Bell label left on (t', h), before the rotation of t'
WORKED_RESIDUALS = {
    BellLabel.PHI_PLUS: BellLabel.PSI_MINUS,
    BellLabel.PHI_MINUS: BellLabel.PSI_PLUS,
    BellLabel.PSI_PLUS: BellLabel.PHI_MINUS,
    BellLabel.PSI_MINUS: BellLabel.PHI_PLUS,
}


def rotated_bell(label: BellLabel, rotated: QubitId, partner: QubitId, angle: PhaseAngle) -> StateVector:
    """U(angle) on `rotated` applied to the Bell state on (rotated, partner)."""
    state = quantum_service.make_bell(label, rotated, partner)
    return quantum_service.apply_single(state, gate_algebra.phase_unitary(angle), rotated)


def honest_state(initial: BellLabel, pauli: PauliLabel, angles: Sequence[PhaseAngle]) -> StateVector:
    """(t, h) after Alice's encoding and all four agent rotations."""
    state = quantum_service.make_bell(initial, T, H)
    state = quantum_service.apply_single(state, gate_algebra.pauli_unitary(pauli), H)
    for angle in angles:
        state = quantum_service.apply_single(state, gate_algebra.phase_unitary(angle), T)
    return state


def attack_joint_state(initial: BellLabel, pauli: PauliLabel, angles: Sequence[PhaseAngle]) -> StateVector:
    """Genuine encoded pair (t, h) next to the rotated fake |psi+> pair (t', h')."""
    genuine = quantum_service.make_bell(initial, T, H)
    genuine = quantum_service.apply_single(genuine, gate_algebra.pauli_unitary(pauli), H)
    fake = quantum_service.make_bell(BellLabel.PSI_PLUS, TP, HP)
    for angle in angles:
        fake = quantum_service.apply_single(fake, gate_algebra.phase_unitary(angle), TP)
    return quantum_service.tensor(genuine, fake)


def corrected_fake_pairs(
    initial: BellLabel,
    pauli: PauliLabel,
    angles: Sequence[PhaseAngle]
) -> Dict[BellLabel, StateVector]:
    """(t', h) after Zach's swap with each possible outcome and his correction on h."""
    decomposition = quantum_service.bell_decompose(attack_joint_state(initial, pauli, angles), T, HP)
    corrected = {}
    for outcome, (_, residual) in decomposition.items():
        correction = gate_algebra.bell_compare(outcome, BellLabel.PSI_PLUS)
        corrected[outcome] = quantum_service.apply_single(residual, gate_algebra.pauli_unitary(correction), H)
    return corrected


class EquationChecks:
    """Each check returns an EquationCheckResult; run_all runs them in order."""

    def __init__(self):
        self.angles = [PhaseAngle(a) for a in WORKED_ANGLES]
        self.compound = gate_algebra.compose_phase(self.angles)

    def check_swap_decomposition(self) -> EquationCheckResult:
        """All four swap outcomes occur with amplitude 1/2 and leave the expected rotated Bell state."""
        joint = attack_joint_state(WORKED_INITIAL, WORKED_PAULI, self.angles)
        decomposition = quantum_service.bell_decompose(joint, T, HP)
        failures = []
        for outcome, (amplitude, residual) in decomposition.items():
            if abs(abs(amplitude) - 0.5) > settings.norm_tolerance:
                failures.append(f"{outcome.value}: amplitude {abs(amplitude):.12f}")
                continue
            expected = rotated_bell(WORKED_RESIDUALS[outcome], TP, H, self.compound)
            if not quantum_service.equal_up_to_global_phase(residual, expected, settings.norm_tolerance):
                failures.append(f"{outcome.value}: residual is not U{self.compound}|{WORKED_RESIDUALS[outcome].value}>")
        return EquationCheckResult(
            name="swap decomposition",
            passed=not failures,
            detail="; ".join(failures) or "4 outcomes, amplitude 1/2 each",
        )

    def check_corrected_state(self) -> EquationCheckResult:
        """Outcome |psi-> gives correction S10 and leaves U(2pi/3)|phi-> on (t', h)."""
        correction = gate_algebra.bell_compare(WORKED_OUTCOME, BellLabel.PSI_PLUS)
        corrected = corrected_fake_pairs(WORKED_INITIAL, WORKED_PAULI, self.angles)[WORKED_OUTCOME]
        expected = rotated_bell(BellLabel.PHI_MINUS, TP, H, self.compound)
        passed = correction == PauliLabel.S10 and quantum_service.equal_up_to_global_phase(
            corrected, expected, settings.norm_tolerance
        )
        return EquationCheckResult(
            name="corrected fake pair",
            passed=passed,
            detail=f"correction {correction.value}, compound angle {self.compound}",
        )

    def check_honest_state(self) -> EquationCheckResult:
        """Honest path ends in U(2pi/3)|phi-> on (t, h)."""
        state = honest_state(WORKED_INITIAL, WORKED_PAULI, self.angles)
        expected = rotated_bell(BellLabel.PHI_MINUS, T, H, self.compound)
        return EquationCheckResult(
            name="honest final state",
            passed=quantum_service.equal_up_to_global_phase(state, expected, settings.norm_tolerance),
            detail=f"compound angle {self.compound}",
        )

    def check_paths_agree(self) -> EquationCheckResult:
        """Attack and honest paths give the same state once t' is renamed t."""
        attack = corrected_fake_pairs(WORKED_INITIAL, WORKED_PAULI, self.angles)[WORKED_OUTCOME]
        honest = honest_state(WORKED_INITIAL, WORKED_PAULI, self.angles)
        overlap = abs(np.vdot(honest.amplitudes, attack.relabeled({TP: T}).reordered(honest.qubits).amplitudes))
        return EquationCheckResult(
            name="attack path equals honest path",
            passed=overlap >= 1 - settings.norm_tolerance,
            detail=f"|<honest|attack>| = {overlap:.12f}",
        )

    def check_exhaustive_sweep(self) -> EquationCheckResult:
        """Every initial state, Pauli, angle tuple and swap outcome (5184 cases)."""
        cases = 0
        failures: List[str] = []
        for initial, pauli in itertools.product(BellLabel, PauliLabel):
            for ticks in itertools.product(range(3), repeat=4):
                angles = [PhaseAngle(t) for t in ticks]
                honest = honest_state(initial, pauli, angles)
                for outcome, attack in corrected_fake_pairs(initial, pauli, angles).items():
                    cases += 1
                    if not quantum_service.equal_up_to_global_phase(honest, attack.relabeled({TP: T})):
                        failures.append(f"{initial.value}/{pauli.value}/{ticks}/{outcome.value}")
        logger.info(f"Exhaustive sweep: {cases} cases, {len(failures)} failures")
        return EquationCheckResult(
            name="exhaustive sweep",
            passed=cases == 5184 and not failures,
            detail=f"{cases - len(failures)}/{cases} cases agree" + (f"; first failure {failures[0]}" if failures else ""),
        )

    def run_all(self) -> List[EquationCheckResult]:
        return [
            self.check_swap_decomposition(),
            self.check_corrected_state(),
            self.check_honest_state(),
            self.check_paths_agree(),
            self.check_exhaustive_sweep(),
        ]


# Singleton instance
equation_checks = EquationChecks()
