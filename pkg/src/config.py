"""Configuration management using Pydantic Settings"""

from functools import lru_cache
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables (prefix CSMA_)"""
    
    model_config = SettingsConfigDict(
        env_prefix="CSMA_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )
    
    # Sweep executor
    workers: int = Field(default=4, ge=1)  # CSMA_WORKERS
    seed_base: int = 0
    
    # Exact analysis caps
    enumeration_cap: int = Field(default=20, ge=1)  # links
    conductance_state_cap: int = Field(default=22, ge=1)  # chain states
    mws_cap: int = Field(default=32, ge=1)  # links for the exact MWIS oracle
    
    # Simulation defaults
    mws_every: int = Field(default=100, ge=1)
    record_every: int = Field(default=1, ge=1)
    
    # Logging
    log_level: str = "INFO"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
