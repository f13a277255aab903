"""Configuration loading for lowdim-xray."""

import logging
import os
from pathlib import Path

from dotenv import find_dotenv, load_dotenv


class Config:
    """Configuration class for lowdim-xray."""

    def __init__(self, env_file: Path | None = None):
        """Load ``env_file``, or the nearest .env above the working directory."""
        load_dotenv(env_file or find_dotenv(usecwd=True))

    @property
    def data_dir(self) -> Path:
        """Directory holding the element tables."""
        return Path(os.getenv("LOWDIM_DATA_DIR", "data/elements"))

    @property
    def out_dir(self) -> Path:
        """Default output directory for datasets, models and reports."""
        return Path(os.getenv("LOWDIM_OUT_DIR", "./runs"))

    @property
    def log_level(self) -> str:
        return os.getenv("LOWDIM_LOG_LEVEL", "INFO").upper()

    @property
    def seed(self) -> int:
        """Default experiment seed."""
        return int(os.getenv("LOWDIM_SEED", "1234"))

    def validate(self) -> list[str]:
        """Validate configuration and return list of errors."""
        errors = []

        if not isinstance(logging.getLevelName(self.log_level), int):
            errors.append(f"LOWDIM_LOG_LEVEL must be a logging level name, got {self.log_level}")

        try:
            if self.seed < 0:
                errors.append(f"LOWDIM_SEED must be non-negative, got {self.seed}")
        except ValueError:
            errors.append(f"LOWDIM_SEED must be an integer, got {os.getenv('LOWDIM_SEED')}")

        if self.data_dir.exists() and not self.data_dir.is_dir():
            errors.append(f"LOWDIM_DATA_DIR is not a directory: {self.data_dir}")

        return errors
