"""Configuration loader for fsbench."""
import logging
import os
from pathlib import Path
from typing import Optional

import yaml

BASE_DIR = Path(__file__).resolve().parent.parent
CONFIG_DIR = BASE_DIR / "config"


class Settings:
    """Application settings."""

    OUTPUT_DIR: str = os.getenv("FSBENCH_OUT", "report")
    DEFAULTS_FILE: str = os.getenv("FSBENCH_CONFIG", str(CONFIG_DIR / "defaults.yaml"))
    LOG_LEVEL: str = os.getenv("FSBENCH_LOG_LEVEL", "INFO")
    JOBS: int = int(os.getenv("FSBENCH_JOBS", "1"))

    # Numerical floors shared by the scorers and the relevance analysis
    VARIANCE_FLOOR: float = 1e-12
    SCORE_CAP: float = 1e12


settings = Settings()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None) -> None:
    """Install a single stream handler on the package logger."""
    logger = logging.getLogger("fsbench")
    logger.setLevel((level or settings.LOG_LEVEL).upper())
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)


def load_yaml_config(path: str | Path) -> dict:
    """Load a YAML configuration file."""
    filepath = Path(path)
    if not filepath.exists():
        return {}
    with open(filepath, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def save_yaml_config(path: str | Path, data: dict) -> None:
    """Save data to a YAML configuration file."""
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, default_flow_style=False, sort_keys=True)


def get_defaults() -> dict:
    """Load the shipped defaults (presets, hyperparameters, footprint reference)."""
    return load_yaml_config(settings.DEFAULTS_FILE)


def get_presets() -> dict:
    """Load the dataset preset table."""
    return get_defaults().get("presets", {})


def get_footprint_defaults() -> dict:
    """Load the reference hardware configuration for the footprint model."""
    return get_defaults().get("footprint", {})


def get_suites() -> dict:
    """Load the bench suite table (cells, classifiers, trial value)."""
    return get_defaults().get("suites", {})


def get_method_defaults(method: str) -> dict:
    """Load default parameters for a selection method or classifier."""
    return get_defaults().get("methods", {}).get(method, {})


def get_output_dir(override: Optional[str] = None) -> Path:
    """Resolve the output directory: explicit flag, then FSBENCH_OUT, then ./report."""
    return Path(override or settings.OUTPUT_DIR)


def merge_config(base: dict, override: dict) -> dict:
    """Recursively merge ``override`` into a copy of ``base``; nested mappings merge, everything else replaces."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged
