import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

DEFAULT_PRESET_DIR = Path(__file__).resolve().parent / "presets"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class FreeminConfig:
    """Process settings for the experiment harness"""
    output_dir: str = "./out"
    log_level: str = "INFO"
    progress: bool = True
    reference_extension: int = 50
    preset_dir: str = str(DEFAULT_PRESET_DIR)


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"{name} must be a boolean (true/false), got {raw!r}")


def _env_int(name: str, default: int, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ValueError(f"{name} must be at least {minimum}, got {value}")
    return value


def get_config() -> FreeminConfig:
    """Get configuration from environment variables"""
    return FreeminConfig(
        output_dir=os.getenv("FREEMIN_OUTPUT_DIR", "./out"),
        log_level=os.getenv("FREEMIN_LOG_LEVEL", "INFO"),
        progress=_env_bool("FREEMIN_PROGRESS", True),
        reference_extension=_env_int("FREEMIN_REFERENCE_EXTENSION", 50),
        preset_dir=os.getenv("FREEMIN_PRESET_DIR", str(DEFAULT_PRESET_DIR)),
    )
