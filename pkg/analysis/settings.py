"""
Runtime configuration for the stability analysis toolkit.
Values come from environment variables, optionally loaded from a .env file.
"""
import logging
import os
from dataclasses import dataclass
from functools import lru_cache

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@dataclass(frozen=True)
class Settings:
    """Numeric defaults shared by the library, the CLI and the HTTP service."""
    root_tol: float = 1e-9
    max_iter: int = 50
    xi_min: float = 1e-3
    xi_max: float = 1e3
    xi_points: int = 2000
    s_max: float = 1e6
    workers: int = 4


def _read_float(name, default):
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got '{raw}'") from None
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def _read_int(name, default):
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got '{raw}'") from None
    if value < 1:
        raise ValueError(f"{name} must be at least 1, got {value}")
    return value


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Build the settings object from the environment.

    Returns:
        Settings: frozen configuration (cached; call ``get_settings.cache_clear()``
        after changing the environment).

    Raises:
        ValueError: if a variable is set to a malformed or non-positive value
    """
    settings = Settings(
        root_tol=_read_float("MEMSTAB_TOL", Settings.root_tol),
        max_iter=_read_int("MEMSTAB_MAX_ITER", Settings.max_iter),
        xi_min=_read_float("MEMSTAB_XI_MIN", Settings.xi_min),
        xi_max=_read_float("MEMSTAB_XI_MAX", Settings.xi_max),
        xi_points=_read_int("MEMSTAB_XI_POINTS", Settings.xi_points),
        s_max=_read_float("MEMSTAB_S_MAX", Settings.s_max),
        workers=_read_int("MEMSTAB_WORKERS", Settings.workers),
    )
    if settings.xi_min >= settings.xi_max:
        raise ValueError(
            f"MEMSTAB_XI_MIN ({settings.xi_min}) must be below MEMSTAB_XI_MAX ({settings.xi_max})"
        )
    return settings


def configure_logging():
    """Configure root logging from LOG_LEVEL (INFO is forced in production)."""
    log_level = os.getenv("LOG_LEVEL", "INFO").upper()
    if os.getenv("ENVIRONMENT", "").lower() == "production":
        log_level = "INFO"
    logging.basicConfig(
        level=getattr(logging, log_level, logging.INFO),
        format=LOG_FORMAT,
    )
