"""
QSS Collusion Lab - Quantum Models
Labeled qubits, pure state vectors and the measurement-basis vocabulary
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Tuple

import numpy as np

from qss.config import get_settings
from qss.exceptions import InvalidArgumentError

settings = get_settings()

MAX_QUBITS = 4


class RoleTag(str, Enum):
    """Photon roles: Alice's pair (t, h) and the colluders' fake pair (t', h')."""
    T = "T"
    H = "H"
    TP = "Tp"
    HP = "Hp"

    @property
    def rank(self) -> int:
        return _ROLE_RANK[self]


_ROLE_RANK = {RoleTag.T: 0, RoleTag.H: 1, RoleTag.TP: 2, RoleTag.HP: 3}


class BellLabel(str, Enum):
    """The four Bell states."""
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"


class MeasBasis(str, Enum):
    """Single-qubit measurement bases: {|0>,|1>} and {|+>,|->}."""
    COMPUTATIONAL = "Computational"
    HADAMARD = "Hadamard"


@dataclass(frozen=True)
class QubitId:
    """A photon label such as t_3 or h'_0."""
    role: RoleTag
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise InvalidArgumentError(f"Qubit index must be nonnegative, got {self.index}")

    @property
    def sort_key(self) -> Tuple[int, int]:
        return (self.role.rank, self.index)

    def __str__(self) -> str:
        return f"{self.role.value}{self.index}"


def canonical_order(qubits: Iterable[QubitId]) -> Tuple[QubitId, ...]:
    """Sort qubits by (role, position)."""
    return tuple(sorted(qubits, key=lambda q: q.sort_key))


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    Normalized amplitudes over an ordered list of qubits.

    The first qubit in ``qubits`` is the most significant bit of the
    amplitude index. Amplitudes are stored read-only.
    """
    qubits: Tuple[QubitId, ...]
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        qubits = tuple(self.qubits)
        if len(set(qubits)) != len(qubits):
            raise InvalidArgumentError(f"Duplicate qubit ids in {[str(q) for q in qubits]}")
        if len(qubits) > MAX_QUBITS:
            raise InvalidArgumentError(f"Registers are limited to {MAX_QUBITS} qubits, got {len(qubits)}")

        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.size != 2 ** len(qubits):
            raise InvalidArgumentError(
                f"Expected {2 ** len(qubits)} amplitudes for {len(qubits)} qubits, got {amplitudes.size}"
            )
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > settings.norm_tolerance:
            raise InvalidArgumentError(f"State is not normalized (squared norm {norm!r})")
        amplitudes.setflags(write=False)

        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def axis_of(self, qubit: QubitId) -> int:
        """Tensor axis of a qubit."""
        try:
            return self.qubits.index(qubit)
        except ValueError:
            raise InvalidArgumentError(f"Qubit {qubit} is not part of this state") from None

    def as_tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit."""
        return self.amplitudes.reshape([2] * self.n_qubits)

    def reordered(self, order: Iterable[QubitId]) -> "StateVector":
        """Same state with the qubit list permuted to ``order``."""
        order = tuple(order)
        if set(order) != set(self.qubits) or len(order) != len(self.qubits):
            raise InvalidArgumentError("Reordering must be a permutation of the state's qubits")
        if order == self.qubits or self.n_qubits < 2:
            return self
        axes = [self.qubits.index(q) for q in order]
        return StateVector(order, np.transpose(self.as_tensor(), axes).reshape(-1))

    def canonical(self) -> "StateVector":
        return self.reordered(canonical_order(self.qubits))

    def relabeled(self, mapping: Dict[QubitId, QubitId]) -> "StateVector":
        """Rename qubits (e.g. t -> t') without touching amplitudes."""
        return StateVector(tuple(mapping.get(q, q) for q in self.qubits), self.amplitudes)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def __str__(self) -> str:
        labels = ",".join(str(q) for q in self.qubits)
        return f"StateVector[{labels}]"
