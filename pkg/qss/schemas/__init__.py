# Schemas package
from qss.schemas.config import ProtocolConfig, Scenario, ScenarioSpec
from qss.schemas.report import (
    AggregateReport,
    Aggregates,
    EquationCheckResult,
    MessageLogEntry,
    PositionVerdict,
    RunReport,
    TrialRecord,
)
