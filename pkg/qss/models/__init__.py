# Models package
from qss.models.quantum import (
    MAX_QUBITS,
    BellLabel,
    MeasBasis,
    QubitId,
    RoleTag,
    StateVector,
    canonical_order,
)
from qss.models.protocol import (
    AGENT_RING,
    CONSUMED,
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
