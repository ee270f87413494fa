"""
QSS Collusion Lab - Report Schemas
Pydantic schemas for run transcripts, trial records and batch aggregates
"""
from typing import Annotated, Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, PlainSerializer, model_validator

from qss.config import get_settings
from qss.models.protocol import PartyId, PauliLabel, Verdict
from qss.models.quantum import BellLabel, MeasBasis
from qss.schemas.config import ProtocolConfig, Scenario

settings = get_settings()

# Fractions are written with a fixed number of decimals so reports are byte-stable
Fraction = Annotated[
    float,
    PlainSerializer(lambda v: f"{v:.{settings.float_decimals}f}", return_type=str, when_used="json"),
]

Stage = Literal["precheck", "verify"]
Channel = Literal["public", "covert"]


class MessageLogEntry(BaseModel):
    """One classical message."""
    seq: int
    channel: Channel = "public"
    sender: PartyId
    receiver: Optional[PartyId] = None  # None = broadcast
    topic: str
    value: Any = None


class PositionVerdict(BaseModel):
    """Outcome of one eavesdropping check."""
    position: int
    stage: Stage
    verdict: Verdict
    basis: Optional[MeasBasis] = None


class RunReport(BaseModel):
    """Full transcript of one protocol execution."""
    config: ProtocolConfig
    scenario: str
    initial_labels: List[BellLabel]
    agent_angles: Dict[PartyId, Dict[int, int]] = Field(default_factory=dict)
    precheck_positions: List[int] = Field(default_factory=list)
    check_positions: List[int] = Field(default_factory=list)
    message_positions: List[int] = Field(default_factory=list)
    verdicts: List[PositionVerdict] = Field(default_factory=list)
    detected: bool = False
    detection_stage: Optional[Stage] = None
    alice_secret: List[PauliLabel]
    recovered_secret: Optional[Dict[int, PauliLabel]] = None
    adversary_secret: Optional[Dict[int, PauliLabel]] = None
    error_flags: Dict[int, bool] = Field(default_factory=dict)
    messages: List[MessageLogEntry] = Field(default_factory=list)
    covert_messages: List[MessageLogEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_detection_verdict(self):
        mismatched = any(v.verdict == Verdict.MISMATCH for v in self.verdicts)
        if self.detected != mismatched:
            raise ValueError("detected must be true iff some check mismatched")
        return self

    def stage_verdicts(self, stage: Stage) -> List[PositionVerdict]:
        return [v for v in self.verdicts if v.stage == stage]

    @property
    def mismatch_count(self) -> int:
        return sum(1 for v in self.verdicts if v.verdict == Verdict.MISMATCH)

    def _accuracy(self, recovered: Optional[Dict[int, PauliLabel]]) -> Optional[float]:
        if recovered is None or not self.message_positions:
            return None
        hits = sum(
            1 for position in self.message_positions
            if recovered.get(position) == self.alice_secret[position]
        )
        return hits / len(self.message_positions)

    @property
    def recovery_accuracy(self) -> Optional[float]:
        return self._accuracy(self.recovered_secret)

    @property
    def adversary_accuracy(self) -> Optional[float]:
        return self._accuracy(self.adversary_secret)


class TrialRecord(BaseModel):
    """Per-trial summary kept in the batch report."""
    trial: int
    seed: int
    detected: bool
    detection_stage: Optional[Stage] = None
    mismatch_count: int
    precheck_matches: int = 0
    precheck_total: int = 0
    check_mismatches: int = 0
    check_total: int = 0
    recovery_accuracy: Optional[Fraction] = None
    adversary_accuracy: Optional[Fraction] = None

    @classmethod
    def from_report(cls, trial: int, report: RunReport) -> "TrialRecord":
        precheck = report.stage_verdicts("precheck")
        verify = report.stage_verdicts("verify")
        return cls(
            trial=trial,
            seed=report.config.seed,
            detected=report.detected,
            detection_stage=report.detection_stage,
            mismatch_count=report.mismatch_count,
            precheck_matches=sum(1 for v in precheck if v.verdict == Verdict.MATCH),
            precheck_total=len(precheck),
            check_mismatches=sum(1 for v in verify if v.verdict == Verdict.MISMATCH),
            check_total=len(verify),
            recovery_accuracy=report.recovery_accuracy,
            adversary_accuracy=report.adversary_accuracy,
        )


class Aggregates(BaseModel):
    detection_rate: Fraction
    mean_mismatch: Fraction
    mean_recovery_accuracy: Optional[Fraction] = None
    mean_adversary_accuracy: Optional[Fraction] = None
    precheck_match_rate: Optional[Fraction] = None
    check_mismatch_rate: Optional[Fraction] = None
    aborted_precheck: int = 0
    aborted_verify: int = 0


class AggregateReport(BaseModel):
    """Batch result: config echo, per-trial records and aggregates."""
    tool_version: str
    scenario: Scenario
    config: ProtocolConfig
    seed: int
    trials: int
    zach_returns_genuine: bool = False
    aggregates: Aggregates
    records: List[TrialRecord]

    @model_validator(mode="after")
    def check_detection_rate(self):
        if len(self.records) != self.trials:
            raise ValueError(f"Expected {self.trials} trial records, got {len(self.records)}")
        detected = sum(1 for r in self.records if r.detected)
        # Serialized fractions are rounded to float_decimals
        if abs(self.aggregates.detection_rate - detected / self.trials) > 0.5 * 10 ** -settings.float_decimals:
            raise ValueError("detection_rate must equal detected trials / trials")
        return self


class EquationCheckResult(BaseModel):
    """Outcome of one worked-equation check."""
    name: str
    passed: bool
    detail: str = ""
