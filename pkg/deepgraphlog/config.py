"""
Engine configuration.

Loads settings from environment variables, optionally seeded from a
``.env_local`` or ``.env`` file next to the repository root.
"""
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

_REPO_ROOT = Path(__file__).resolve().parent.parent


def _parse_int_env(key: str, default: int) -> int:
    """
    Parse integer environment variable, stripping comments and whitespace.

    Handles cases like:
    - "8  # comment" -> 8
    - "8" -> 8
    - None -> default
    """
    value = os.environ.get(key)
    if not value:
        return default

    if "#" in value:
        value = value.split("#")[0]

    value = value.strip()

    if not value:
        return default

    try:
        return int(value)
    except ValueError:
        return default


def _parse_bool_env(key: str, default: bool) -> bool:
    value = os.environ.get(key)
    if value is None or not value.strip():
        return default
    return value.split("#")[0].strip().lower() in ("true", "1", "yes")


@dataclass
class EngineConfig:
    """Inference/training engine configuration."""

    # Worker parallelism for world enumeration and repetitions (0 = auto)
    threads: int = 0

    # Relevant-fact count above which exact enumeration is refused
    enumeration_cap: int = 24

    # Logging
    log_level: str = "WARNING"
    log_format: str = "json"  # "json" | "text"

    # Output root for experiment runs
    runs_dir: str = "runs"

    # Memoize GNN evaluations per (model, canonical graph, targets)
    gnn_cache: bool = True

    def worker_count(self) -> int:
        if self.threads > 0:
            return self.threads
        return max(1, os.cpu_count() or 1)

    @classmethod
    def from_env(cls) -> "EngineConfig":
        """Load configuration from environment variables."""
        # existing environment wins over files
        for name in (".env_local", ".env"):
            env_file = _REPO_ROOT / name
            if env_file.exists():
                load_dotenv(env_file, override=False)

        return cls(
            threads=max(0, _parse_int_env("DGL_THREADS", default=0)),
            enumeration_cap=_parse_int_env("DGL_ENUM_CAP", default=24),
            log_level=os.environ.get("DGL_LOG_LEVEL", "WARNING").upper(),
            log_format=os.environ.get("DGL_LOG_FORMAT", "json").lower(),
            runs_dir=os.environ.get("DGL_RUNS_DIR", "runs"),
            gnn_cache=_parse_bool_env("DGL_GNN_CACHE", default=True),
        )


def get_config() -> EngineConfig:
    """Get or create global config instance."""
    global _config
    if _config is None:
        _config = EngineConfig.from_env()
    return _config


def reset_config() -> None:
    """Drop the cached instance so the next get_config() rereads the environment."""
    global _config
    _config = None


# Global config instance (lazy loaded)
_config: Optional[EngineConfig] = None
