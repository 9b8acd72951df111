"""
Process-level settings for the HE-BART tool.
"""

from functools import lru_cache
from typing import Optional
from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import find_dotenv

# Find .env file automatically
ENV_FILE = find_dotenv(usecwd=True) or ".env"

class Settings(BaseSettings):
    """Settings loaded from environment variables (prefix HEBART_)."""

    # Logging Configuration
    log_level: str = Field(
        default="INFO",
        validation_alias=AliasChoices("hebart_log", "hebart_log_level"),
    )
    log_file: Optional[str] = None
    log_to_console: bool = True

    # Chain execution
    show_progress: bool = False
    default_jobs: int = 1

    # Acceptance data (not shipped with the repo)
    sleepstudy_csv: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="hebart_",
        env_file=ENV_FILE,
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings.

    Returns:
        Settings instance
    """
    return Settings()

settings = get_settings()
