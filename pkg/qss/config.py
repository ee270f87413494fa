"""
QSS Collusion Lab - Configuration
Environment configuration using Pydantic Settings
"""
from functools import lru_cache
from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict

# Resolve .env path relative to this file's directory (project root)
_ENV_FILE = Path(__file__).resolve().parent.parent / ".env"


class Settings(BaseSettings):
    """Simulator settings loaded from environment variables (QSS_*)."""

    model_config = SettingsConfigDict(
        env_prefix="QSS_",
        env_file=str(_ENV_FILE),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "QSS Collusion Lab"
    log_level: str = "WARNING"
    log_format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # Batch defaults (CLI flags override)
    default_seed: int = 7
    default_trials: int = 1000
    workers: int = 1  # 1 = sequential, >1 = process pool

    # Numerical tolerances
    norm_tolerance: float = 1e-10
    unitary_tolerance: float = 1e-10
    phase_tolerance: float = 1e-9
    min_probability_mass: float = 1e-12

    # Reports
    float_decimals: int = 6


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
