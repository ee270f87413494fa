"""
QSS Collusion Lab - Protocol Models
Operator labels, parties and photon sequences of the five-party protocol
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Tuple, Union

from qss.exceptions import InternalInvariantError, InvalidArgumentError
from qss.models.quantum import QubitId


@dataclass(frozen=True, order=True)
class PhaseAngle:
    """Agent rotation U(alpha) with alpha = ticks * 2pi/3."""
    ticks: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ticks", int(self.ticks) % 3)

    def __add__(self, other: "PhaseAngle") -> "PhaseAngle":
        return PhaseAngle(self.ticks + other.ticks)

    def __neg__(self) -> "PhaseAngle":
        return PhaseAngle(-self.ticks)

    def __str__(self) -> str:
        return ("0", "2pi/3", "4pi/3")[self.ticks]


class PauliLabel(str, Enum):
    """Alice's dense-coding operations sigma_00 .. sigma_11."""
    S00 = "S00"
    S01 = "S01"
    S10 = "S10"
    S11 = "S11"


class QubitSlot(str, Enum):
    """Which member of a Bell pair an operator acts on."""
    FIRST = "First"
    SECOND = "Second"


class Correlation(str, Enum):
    SAME = "Same"
    OPPOSITE = "Opposite"


class Verdict(str, Enum):
    MATCH = "match"
    MISMATCH = "mismatch"


class Variant(str, Enum):
    ORIGINAL = "Original"
    IMPROVED = "Improved"


class PartyId(str, Enum):
    """Protocol parties. Eve is the external eavesdropper and never joins the ring."""
    ALICE = "Alice"
    BOB = "Bob"
    CHARLIE = "Charlie"
    GREEN = "Green"
    ZACH = "Zach"
    EVE = "Eve"


# T-sequence travel order after Alice
AGENT_RING: Tuple[PartyId, ...] = (PartyId.BOB, PartyId.CHARLIE, PartyId.GREEN, PartyId.ZACH)


class SequenceName(str, Enum):
    T = "T"
    H = "H"
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    T4 = "T4"
    H1 = "H1"
    TP = "Tp"
    HP = "Hp"
    TP1 = "Tp1"
    TP2 = "Tp2"
    TP3 = "Tp3"
    TP4 = "Tp4"


class _Consumed:
    """Marker for a measured or surrendered sequence entry."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "CONSUMED"


CONSUMED = _Consumed()

Entry = Union[QubitId, _Consumed]


class PhotonSequence:
    """
    Ordered photons indexed by protocol position.

    Instances are immutable; consuming or renaming returns a new sequence.
    """

    def __init__(self, name: SequenceName, entries: Iterable[Tuple[int, Entry]]):
        self.name = name
        self._entries: Dict[int, Entry] = dict(entries)

    @classmethod
    def of(cls, name: SequenceName, qubits: Iterable[QubitId]) -> "PhotonSequence":
        return cls(name, ((q.index, q) for q in qubits))

    @property
    def positions(self) -> List[int]:
        return sorted(self._entries)

    def live_positions(self) -> List[int]:
        return [p for p in self.positions if self._entries[p] is not CONSUMED]

    def is_live(self, position: int) -> bool:
        return self._entries.get(position, CONSUMED) is not CONSUMED

    def qubit(self, position: int) -> QubitId:
        if position not in self._entries:
            raise InvalidArgumentError(f"Position {position} is not in the {self.name.value}-sequence")
        entry = self._entries[position]
        if entry is CONSUMED:
            raise InternalInvariantError(
                f"Position {position} of the {self.name.value}-sequence is already consumed"
            )
        return entry

    def live_qubits(self) -> List[QubitId]:
        return [self._entries[p] for p in self.live_positions()]

    def consume(self, positions: Iterable[int]) -> "PhotonSequence":
        entries = dict(self._entries)
        for position in positions:
            self.qubit(position)
            entries[position] = CONSUMED
        return PhotonSequence(self.name, entries.items())

    def renamed(self, name: SequenceName) -> "PhotonSequence":
        return PhotonSequence(name, self._entries.items())

    def __len__(self) -> int:
        return len(self.live_positions())

    def __repr__(self) -> str:
        return f"PhotonSequence({self.name.value}, live={len(self)}/{len(self._entries)})"
