"""
QSS Collusion Lab - Photon Lab Service
Per-run quantum holdings: which register each photon lives in and which
party currently holds it
"""
import logging
from typing import Dict, Iterable, List, Optional

import numpy as np

from qss.exceptions import InternalInvariantError, InvalidArgumentError
from qss.models.protocol import PartyId
from qss.models.quantum import BellLabel, MeasBasis, QubitId, StateVector
from qss.services.quantum import quantum_service

logger = logging.getLogger(__name__)


class PhotonLab:
    """
    Registers of one run, split into independent subsystems.

    Subsystems are merged (tensored) only when a measurement spans two of
    them, so every register stays position-local. A party may only act on
    photons it holds.
    """

    def __init__(self):
        self._systems: Dict[QubitId, StateVector] = {}
        self._holders: Dict[QubitId, PartyId] = {}

    def add(self, state: StateVector, holder: PartyId) -> None:
        """Register a freshly prepared state."""
        for qubit in state.qubits:
            if qubit in self._systems:
                raise InvalidArgumentError(f"Photon {qubit} already exists")
        self._store(state)
        for qubit in state.qubits:
            self._holders[qubit] = holder

    def holder(self, qubit: QubitId) -> PartyId:
        if qubit not in self._holders:
            raise InternalInvariantError(f"Photon {qubit} does not exist (measured or never prepared)")
        return self._holders[qubit]

    def holds(self, party: PartyId, qubit: QubitId) -> bool:
        return self._holders.get(qubit) == party

    def exists(self, qubit: QubitId) -> bool:
        return qubit in self._systems

    def transfer(self, qubits: Iterable[QubitId], sender: PartyId, receiver: PartyId) -> None:
        qubits = list(qubits)
        self._require(sender, qubits)
        for qubit in qubits:
            self._holders[qubit] = receiver
        logger.debug(f"{sender.value} -> {receiver.value}: {len(qubits)} photon(s)")

    def apply(self, actor: PartyId, op: np.ndarray, qubit: QubitId) -> None:
        self._require(actor, [qubit])
        self._store(quantum_service.apply_single(self._systems[qubit], op, qubit))

    def bell_measure(self, actor: PartyId, q1: QubitId, q2: QubitId, rng: np.random.Generator) -> BellLabel:
        """Bell-measure two held photons; both are destroyed."""
        self._require(actor, [q1, q2])
        label, residual = quantum_service.bell_measure(self.joint_state(q1, q2), q1, q2, rng)
        self._remove([q1, q2], residual)
        return label

    def basis_measure(self, actor: PartyId, qubit: QubitId, basis: MeasBasis, rng: np.random.Generator) -> int:
        """Measure one held photon; it is destroyed."""
        self._require(actor, [qubit])
        bit, residual = quantum_service.basis_measure(self._systems[qubit], qubit, basis, rng)
        self._remove([qubit], residual)
        return bit

    def discard(self, actor: PartyId, qubit: QubitId, rng: np.random.Generator) -> None:
        """Throw a photon away (equivalent to measuring it and forgetting the result)."""
        self.basis_measure(actor, qubit, MeasBasis.COMPUTATIONAL, rng)

    def joint_state(self, *qubits: QubitId) -> StateVector:
        """Smallest register containing all given photons (merging subsystems if needed)."""
        systems: List[StateVector] = []
        for qubit in qubits:
            if qubit not in self._systems:
                raise InternalInvariantError(f"Photon {qubit} does not exist (measured or never prepared)")
            system = self._systems[qubit]
            if not any(system is s for s in systems):
                systems.append(system)
        joint = systems[0]
        for system in systems[1:]:
            joint = quantum_service.tensor(joint, system)
        if len(systems) > 1:
            self._store(joint)
        return joint

    def _require(self, actor: PartyId, qubits: List[QubitId]) -> None:
        for qubit in qubits:
            holder = self.holder(qubit)
            if holder != actor:
                raise InternalInvariantError(
                    f"{actor.value} tried to touch photon {qubit} held by {holder.value}"
                )

    def _store(self, state: StateVector) -> None:
        for qubit in state.qubits:
            self._systems[qubit] = state

    def _remove(self, measured: List[QubitId], residual: Optional[StateVector]) -> None:
        for qubit in measured:
            del self._systems[qubit]
            del self._holders[qubit]
        if residual is not None and residual.n_qubits:
            self._store(residual)
