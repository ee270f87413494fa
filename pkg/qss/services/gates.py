"""
QSS Collusion Lab - Gate Algebra Service
Phase-shift group U(alpha), the Pauli encoding set, Bell-label transport
tables and the Bell-state comparison rule
"""
import itertools
import logging
from typing import Dict, Iterable, Tuple

import numpy as np

from qss.exceptions import InternalInvariantError
from qss.models.protocol import Correlation, PauliLabel, PhaseAngle, QubitSlot
from qss.models.quantum import BellLabel, MeasBasis, QubitId, RoleTag
from qss.services.quantum import BASIS_VECTORS, BELL_VECTORS, quantum_service

logger = logging.getLogger(__name__)

_HALF_SQRT3 = np.sqrt(3) / 2

# U(alpha) = [[cos a, sin a], [-sin a, cos a]] at a = 0, 2pi/3, 4pi/3
_PHASE_MATRICES = {
    0: np.eye(2, dtype=np.complex128),
    1: np.array([[-0.5, _HALF_SQRT3], [-_HALF_SQRT3, -0.5]], dtype=np.complex128),
    2: np.array([[-0.5, -_HALF_SQRT3], [_HALF_SQRT3, -0.5]], dtype=np.complex128),
}

_PAULI_MATRICES = {
    PauliLabel.S00: np.array([[1, 0], [0, 1]], dtype=np.complex128),
    PauliLabel.S01: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    PauliLabel.S10: np.array([[1, 0], [0, -1]], dtype=np.complex128),
    PauliLabel.S11: np.array([[0, 1], [-1, 0]], dtype=np.complex128),
}

# Frozen and checked once; apply_single skips the per-call unitarity test for these
for _matrix in (*_PHASE_MATRICES.values(), *_PAULI_MATRICES.values()):
    quantum_service.register_unitary(_matrix)

# Reference qubits for building the label tables
_FIRST = QubitId(RoleTag.T, 0)
_SECOND = QubitId(RoleTag.H, 0)


class GateAlgebra:
    """
    Closed-form operator algebra.

    The label tables are built once by brute force over the state simulator
    and then used as lookups.
    """

    def __init__(self):
        self._transport = self._build_transport_table()
        self._compare = {
            (self._transport[(reference, QubitSlot.FIRST, p)], reference): p
            for reference in BellLabel
            for p in PauliLabel
        }
        self._infer = {
            (initial, self._transport[(initial, QubitSlot.SECOND, p)]): p
            for initial in BellLabel
            for p in PauliLabel
        }
        self._correlation = self._build_correlation_table()
        if len(self._compare) != 16 or len(self._infer) != 16:
            raise InternalInvariantError("Pauli set does not act bijectively on the Bell labels")

    # ==================== PHASE GROUP ====================

    def phase_unitary(self, angle: PhaseAngle) -> np.ndarray:
        """Real rotation U(alpha) for alpha = ticks * 2pi/3."""
        return _PHASE_MATRICES[angle.ticks]

    def compose_phase(self, angles: Iterable[PhaseAngle]) -> PhaseAngle:
        """Group product of U(alpha) values; the empty product is U(0)."""
        total = PhaseAngle(0)
        for angle in angles:
            total = total + angle
        return total

    def inverse_phase(self, angle: PhaseAngle) -> PhaseAngle:
        return -angle

    # ==================== PAULI SET ====================

    def pauli_unitary(self, pauli: PauliLabel) -> np.ndarray:
        return _PAULI_MATRICES[pauli]

    def bell_under_pauli(self, start: BellLabel, slot: QubitSlot, pauli: PauliLabel) -> BellLabel:
        """Label reached by applying ``pauli`` to ``slot`` of the canonical ``start`` state."""
        return self._transport[(start, slot, pauli)]

    def bell_compare(self, measured: BellLabel, reference: BellLabel) -> PauliLabel:
        """First-slot Pauli that turns ``reference`` into ``measured``."""
        return self._compare[(measured, reference)]

    def infer_pauli(self, initial: BellLabel, final: BellLabel) -> PauliLabel:
        """Second-slot Pauli that turns ``initial`` into ``final`` (inverts Alice's encoding)."""
        return self._infer[(initial, final)]

    def expected_correlation(self, label: BellLabel, basis: MeasBasis) -> Correlation:
        """Whether both photons of ``label`` give equal bits when measured in ``basis``."""
        return self._correlation[(label, basis)]

    # ==================== TABLE CONSTRUCTION ====================

    def _build_transport_table(self) -> Dict[Tuple[BellLabel, QubitSlot, PauliLabel], BellLabel]:
        table = {}
        for start, slot, pauli in itertools.product(BellLabel, QubitSlot, PauliLabel):
            state = quantum_service.make_bell(start, _FIRST, _SECOND)
            target = _FIRST if slot == QubitSlot.FIRST else _SECOND
            moved = quantum_service.apply_single(state, _PAULI_MATRICES[pauli], target)
            matches = [
                label for label in BellLabel
                if quantum_service.equal_up_to_global_phase(
                    moved, quantum_service.make_bell(label, _FIRST, _SECOND)
                )
            ]
            if len(matches) != 1:
                raise InternalInvariantError(
                    f"{pauli.value} on {slot.value} slot of {start.value} is not a single Bell state"
                )
            table[(start, slot, pauli)] = matches[0]
        logger.debug(f"Built Bell transport table with {len(table)} entries")
        return table

    def _build_correlation_table(self) -> Dict[Tuple[BellLabel, MeasBasis], Correlation]:
        table = {}
        for label, basis in itertools.product(BellLabel, MeasBasis):
            vectors = BASIS_VECTORS[basis]
            same = sum(
                abs(np.vdot(np.kron(vectors[b], vectors[b]), BELL_VECTORS[label])) ** 2
                for b in (0, 1)
            )
            if np.isclose(same, 1.0):
                table[(label, basis)] = Correlation.SAME
            elif np.isclose(same, 0.0):
                table[(label, basis)] = Correlation.OPPOSITE
            else:
                raise InternalInvariantError(f"{label.value} is not correlated in the {basis.value} basis")
        return table


# Singleton instance
gate_algebra = GateAlgebra()
