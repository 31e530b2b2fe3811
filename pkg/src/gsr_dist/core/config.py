import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="GSR_DIST_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Environment
    environment: str = Field(default="development")

    # Parallelism
    threads: int = Field(default=1, description="Worker cap for roots, grids and paths")

    # Spectral truncation and moment reconstruction
    default_modes: int = Field(default=500)
    t_star: float = Field(default=1e-3)

    # Monte-Carlo
    mc_dt: float = Field(default=1e-4)
    mc_batch_size: int = Field(default=4096)

    # Logging
    log_level: str = Field(default="WARNING")
    log_format: str = Field(default="%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    @field_validator("threads", "default_modes", "mc_batch_size")
    @classmethod
    def validate_positive_int(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("t_star", "mc_dt")
    @classmethod
    def validate_positive_float(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        level = v.strip().upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"log level must be one of {', '.join(_LOG_LEVELS)}")
        return level


def _resolve_env_file() -> Optional[Path]:
    environment = os.getenv("GSR_DIST_ENVIRONMENT", "development")
    project_root = Path(__file__).parent.parent.parent.parent

    env_file = project_root / f".env.{environment}"
    if env_file.exists():
        return env_file
    env_file = project_root / ".env"
    if env_file.exists():
        return env_file
    return None


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Get settings, preferring the environment-specific .env file"""
    env_file = _resolve_env_file()
    if env_file:
        return Settings(_env_file=str(env_file))
    return Settings()


def configure_logging(settings: Settings) -> None:
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format=settings.log_format,
    )


def validate_required_config(settings: Settings) -> None:
    """Validate settings that depend on the host rather than on a single field"""

    errors = []

    cpus = os.cpu_count() or 1
    if settings.threads > cpus:
        logging.getLogger(__name__).warning(
            "GSR_DIST_THREADS=%d exceeds available CPUs (%d)", settings.threads, cpus
        )

    if settings.mc_dt > 1e-2:
        errors.append("GSR_DIST_MC_DT must not exceed 1e-2")

    if settings.default_modes > 5000:
        errors.append("GSR_DIST_DEFAULT_MODES must not exceed 5000")

    if errors:
        error_message = f"Configuration validation failed for environment '{settings.environment}':\n"
        for error in errors:
            error_message += f"  - {error}\n"
        raise ValueError(error_message)
