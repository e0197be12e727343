import os
import logging
from pydantic import BaseSettings

class Settings(BaseSettings):
    # Application settings
    APP_NAME: str = "MEC Handoff Simulator"
    APP_VERSION: str = "0.1.0"
    DEBUG: bool = os.getenv("DEBUG", "False").lower() in ("true", "1", "t")

    # Logging settings
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv(
        "LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    # Output settings
    DEFAULT_OUTPUT_DIR: str = os.getenv("DEFAULT_OUTPUT_DIR", "results")
    TRACE_FLOAT_FORMAT: str = os.getenv("TRACE_FLOAT_FORMAT", ".6f")

    # Batch settings
    MAX_WORKERS: int = int(os.getenv("MAX_WORKERS", "1"))  # independent runs in parallel

    @property
    def log_level(self) -> int:
        if self.DEBUG:
            return logging.DEBUG
        return getattr(logging, self.LOG_LEVEL.upper(), logging.INFO)

    class Config:
        env_file = ".env"
        case_sensitive = True

def configure_logging() -> None:
    """Configure root logging once for the process"""
    logging.basicConfig(level=settings.log_level, format=settings.LOG_FORMAT)

# Initialize settings once
settings = Settings()
