"""Configuration management using Pydantic Settings."""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Environment
    ENVIRONMENT: str = "development"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"

    # Run artifacts
    OUTPUT_DIR: str = "runs"
    CHECKPOINT_NAME: str = "model.ckpt"
    REPORT_NAME: str = "report.json"
    EPOCH_CSV_NAME: str = "epochs.csv"
    METRICS_CSV_NAME: str = "metrics.csv"
    TIMING_NAME: str = "timing.json"

    # Evaluation
    KNN_K: int = 20
    KNN_TEST_FRACTION: float = 0.2
    EVAL_SPLIT_SEED: int = 0


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
