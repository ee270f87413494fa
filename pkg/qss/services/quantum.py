"""
QSS Collusion Lab - Quantum Service
Exact pure-state simulation of 1-4 qubit registers: preparation, single-qubit
operators, Bell-basis and single-qubit measurements, phase-insensitive comparison
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from qss.config import get_settings
from qss.exceptions import InternalInvariantError, InvalidArgumentError
from qss.models.quantum import BellLabel, MeasBasis, QubitId, StateVector

settings = get_settings()
logger = logging.getLogger(__name__)

_SQRT2_INV = 1 / np.sqrt(2)

# Canonical Bell vectors over (first, second), first nonzero amplitude positive real
BELL_VECTORS: Dict[BellLabel, np.ndarray] = {
    BellLabel.PHI_PLUS: np.array([1, 0, 0, 1], dtype=np.complex128) * _SQRT2_INV,
    BellLabel.PHI_MINUS: np.array([1, 0, 0, -1], dtype=np.complex128) * _SQRT2_INV,
    BellLabel.PSI_PLUS: np.array([0, 1, 1, 0], dtype=np.complex128) * _SQRT2_INV,
    BellLabel.PSI_MINUS: np.array([0, 1, -1, 0], dtype=np.complex128) * _SQRT2_INV,
}

# Index 0 <-> |0> or |+>, index 1 <-> |1> or |->
BASIS_VECTORS: Dict[MeasBasis, Tuple[np.ndarray, np.ndarray]] = {
    MeasBasis.COMPUTATIONAL: (
        np.array([1, 0], dtype=np.complex128),
        np.array([0, 1], dtype=np.complex128),
    ),
    MeasBasis.HADAMARD: (
        np.array([1, 1], dtype=np.complex128) * _SQRT2_INV,
        np.array([1, -1], dtype=np.complex128) * _SQRT2_INV,
    ),
}

Decomposition = Dict[BellLabel, Tuple[complex, Optional[StateVector]]]


class QuantumService:
    """Pure functions over StateVector; only measurements consume randomness."""

    def __init__(self):
        # ids of frozen operators already checked for unitarity
        self._verified: Dict[int, np.ndarray] = {}

    def register_unitary(self, op: np.ndarray) -> np.ndarray:
        """Check a fixed operator once and freeze it; apply_single then skips the check."""
        if op.shape != (2, 2) or op.dtype != np.complex128:
            raise InvalidArgumentError(f"Registered operators must be 2x2 complex128, got {op.shape} {op.dtype}")
        if not self._is_unitary(op):
            raise InvalidArgumentError("Operator is not unitary")
        op.setflags(write=False)
        self._verified[id(op)] = op
        return op

    def is_verified(self, op: np.ndarray) -> bool:
        return self._verified.get(id(op)) is op

    def make_bell(self, label: BellLabel, q1: QubitId, q2: QubitId) -> StateVector:
        """Canonical Bell state on (q1, q2)."""
        if q1 == q2:
            raise InvalidArgumentError(f"Bell pair needs two distinct qubits, got {q1} twice")
        return StateVector((q1, q2), BELL_VECTORS[label])

    def make_basis_state(
        self,
        qubit: QubitId,
        bit: int,
        basis: MeasBasis = MeasBasis.COMPUTATIONAL
    ) -> StateVector:
        """Single-qubit eigenstate: |0>,|1> or |+>,|->."""
        if bit not in (0, 1):
            raise InvalidArgumentError(f"Bit must be 0 or 1, got {bit!r}")
        return StateVector((qubit,), BASIS_VECTORS[basis][bit])

    def tensor(self, a: StateVector, b: StateVector) -> StateVector:
        """Kronecker product with concatenated qubit lists."""
        overlap = set(a.qubits) & set(b.qubits)
        if overlap:
            raise InvalidArgumentError(f"Cannot tensor states sharing qubits {sorted(map(str, overlap))}")
        return StateVector(a.qubits + b.qubits, np.kron(a.amplitudes, b.amplitudes))

    def apply_single(self, state: StateVector, op: np.ndarray, target: QubitId) -> StateVector:
        """Apply a 2x2 unitary to one qubit, identity elsewhere."""
        if not self.is_verified(op):
            op = np.asarray(op, dtype=np.complex128)
            if op.shape != (2, 2):
                raise InvalidArgumentError(f"Single-qubit operator must be 2x2, got shape {op.shape}")
            if not self._is_unitary(op):
                raise InvalidArgumentError("Operator is not unitary")

        axis = state.axis_of(target)
        psi = np.tensordot(op, state.as_tensor(), axes=([1], [axis]))
        psi = np.moveaxis(psi, 0, axis)
        return StateVector(state.qubits, psi.reshape(-1))

    def bell_decompose(self, state: StateVector, q1: QubitId, q2: QubitId) -> Decomposition:
        """
        Expand a state over the Bell basis of (q1, q2).

        Each label maps to a nonnegative real coefficient and the normalized
        residual state of the remaining qubits (None when the coefficient
        vanishes). With no qubits left the residual is the 0-qubit scalar,
        which keeps the relative phase.
        """
        rest, psi = self._split(state, [q1, q2])
        result: Decomposition = {}
        for label, vector in BELL_VECTORS.items():
            component = vector.conj() @ psi
            weight = float(np.linalg.norm(component))
            if weight < settings.min_probability_mass:
                result[label] = (0j, None)
            else:
                result[label] = (complex(weight), StateVector(rest, component / weight))
        return result

    def reconstruct(self, decomposition: Decomposition, q1: QubitId, q2: QubitId) -> StateVector:
        """Inverse of bell_decompose; the result is ordered (q1, q2, rest...)."""
        rest: Optional[Tuple[QubitId, ...]] = None
        total: Optional[np.ndarray] = None
        for label, (amplitude, residual) in decomposition.items():
            if residual is None:
                continue
            if rest is None:
                rest = residual.qubits
            term = amplitude * np.kron(BELL_VECTORS[label], residual.reordered(rest).amplitudes)
            total = term if total is None else total + term
        if total is None:
            raise InternalInvariantError("Decomposition carries no probability mass")
        return StateVector((q1, q2) + rest, total)

    def bell_probabilities(self, state: StateVector, q1: QubitId, q2: QubitId) -> Dict[BellLabel, float]:
        return {
            label: abs(amplitude) ** 2
            for label, (amplitude, _) in self.bell_decompose(state, q1, q2).items()
        }

    def bell_measure(
        self,
        state: StateVector,
        q1: QubitId,
        q2: QubitId,
        rng: np.random.Generator
    ) -> Tuple[BellLabel, StateVector]:
        """Born-rule Bell measurement of (q1, q2); returns outcome and residual state."""
        decomposition = self.bell_decompose(state, q1, q2)
        labels = list(decomposition)
        probabilities = [abs(decomposition[label][0]) ** 2 for label in labels]
        index = self._sample(probabilities, rng)
        label = labels[index]
        logger.debug(f"Bell measurement on ({q1},{q2}) -> {label.value}")
        return label, decomposition[label][1]

    def basis_probabilities(self, state: StateVector, qubit: QubitId, basis: MeasBasis) -> List[float]:
        _, psi = self._split(state, [qubit])
        return [float(np.linalg.norm(vector.conj() @ psi)) ** 2 for vector in BASIS_VECTORS[basis]]

    def basis_measure(
        self,
        state: StateVector,
        qubit: QubitId,
        basis: MeasBasis,
        rng: np.random.Generator
    ) -> Tuple[int, StateVector]:
        """Born-rule single-qubit measurement; bit 0 <-> |0>/|+>, bit 1 <-> |1>/|->."""
        rest, psi = self._split(state, [qubit])
        components = [vector.conj() @ psi for vector in BASIS_VECTORS[basis]]
        probabilities = [float(np.linalg.norm(c)) ** 2 for c in components]
        bit = self._sample(probabilities, rng)
        component = components[bit]
        return bit, StateVector(rest, component / np.linalg.norm(component))

    def equal_up_to_global_phase(
        self,
        a: StateVector,
        b: StateVector,
        tol: Optional[float] = None
    ) -> bool:
        """True iff |<a|b>| >= 1 - tol after aligning qubit order."""
        if tol is None:
            tol = settings.phase_tolerance
        if set(a.qubits) != set(b.qubits):
            raise InvalidArgumentError(
                f"Cannot compare states over different qubits: {a} vs {b}"
            )
        overlap = abs(np.vdot(a.amplitudes, b.reordered(a.qubits).amplitudes))
        return overlap >= 1 - tol

    def _is_unitary(self, op: np.ndarray) -> bool:
        return np.allclose(op.conj().T @ op, np.eye(2), atol=settings.unitary_tolerance)

    def _split(self, state: StateVector, measured: List[QubitId]) -> Tuple[Tuple[QubitId, ...], np.ndarray]:
        """Move measured qubits to the front; returns (rest, matrix of shape 2^m x 2^rest)."""
        if len(set(measured)) != len(measured):
            raise InvalidArgumentError(f"Measured qubits must be distinct, got {[str(q) for q in measured]}")
        axes = [state.axis_of(q) for q in measured]
        rest = tuple(q for q in state.qubits if q not in measured)
        axes += [state.axis_of(q) for q in rest]
        psi = np.transpose(state.as_tensor(), axes).reshape(2 ** len(measured), -1)
        return rest, psi

    def _sample(self, probabilities: List[float], rng: np.random.Generator) -> int:
        total = sum(probabilities)
        if total < settings.min_probability_mass:
            raise InternalInvariantError("No outcome carries probability mass; state is corrupted")
        if abs(total - 1.0) > settings.norm_tolerance:
            raise InternalInvariantError(f"Outcome probabilities sum to {total!r}, expected 1")

        draw = rng.random() * total
        cumulative = 0.0
        chosen = None
        for index, p in enumerate(probabilities):
            if p < settings.min_probability_mass:
                continue
            cumulative += p
            chosen = index
            if draw < cumulative:
                return index
        return chosen


# Singleton instance
quantum_service = QuantumService()
