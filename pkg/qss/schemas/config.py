"""
QSS Collusion Lab - Configuration Schemas
Pydantic schemas for protocol parameters and CLI scenario specs
"""
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qss.models.protocol import Variant


class ProtocolConfig(BaseModel):
    """Parameters of one protocol execution."""
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1, description="Bell pair count")
    k1: int = Field(..., ge=1, description="Final check positions")
    m: int = Field(0, ge=0, description="Pre-check photons (improved protocol only)")
    variant: Variant = Variant.ORIGINAL
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def check_position_budget(self):
        if self.k1 >= self.k:
            raise ValueError("k1 must be < k")
        if self.variant == Variant.ORIGINAL and self.m != 0:
            raise ValueError("m must be 0 for the original protocol")
        if self.m >= self.k - self.k1:
            raise ValueError("m must be < k - k1")
        return self

    @property
    def message_positions(self) -> int:
        return self.k - self.k1 - self.m

    @property
    def message_capacity(self) -> int:
        """Classical bits carried by the surviving positions."""
        return 2 * self.message_positions


class Scenario(str, Enum):
    HONEST = "honest"
    COLLUSION = "collusion"
    COLLUSION_IMPROVED = "collusion-improved"
    INTERCEPT_RESEND = "intercept-resend"


class ScenarioSpec(BaseModel):
    """A validated batch request."""
    scenario: Scenario
    config: ProtocolConfig
    trials: int = Field(..., ge=1)
    out: Optional[Path] = None
    csv: Optional[Path] = None
    zach_returns_genuine: bool = False
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def check_variant(self):
        if self.scenario == Scenario.COLLUSION_IMPROVED and self.config.variant != Variant.IMPROVED:
            raise ValueError("collusion-improved runs the improved protocol")
        if self.scenario == Scenario.COLLUSION and self.config.variant != Variant.ORIGINAL:
            raise ValueError("collusion runs the original protocol; use collusion-improved with --m")
        return self

    @staticmethod
    def variant_for(scenario: Scenario, m: int) -> Variant:
        """Variant implied by a scenario and pre-check size."""
        if scenario == Scenario.COLLUSION_IMPROVED:
            return Variant.IMPROVED
        if scenario == Scenario.COLLUSION:
            return Variant.ORIGINAL
        return Variant.IMPROVED if m > 0 else Variant.ORIGINAL
