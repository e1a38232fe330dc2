"""Runtime configuration from a JSON file plus environment overrides.

Precedence: environment variables > config file > defaults. The file path
itself comes from --config or MEDIAMIND_CONFIG.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

DEFAULT_ADDR = "127.0.0.1:8756"
DEFAULT_STORE = "mediamind-store"

ENV_ADDR = "MEDIAMIND_ADDR"
ENV_STORE = "MEDIAMIND_STORE"
ENV_RESOURCES = "MEDIAMIND_RESOURCES"
ENV_CONFIG = "MEDIAMIND_CONFIG"
ENV_BACKEND_URL = "MEDIAMIND_BACKEND_URL"
ENV_PLANNER_URL = "MEDIAMIND_PLANNER_URL"


@dataclass
class Config:
    addr: str = DEFAULT_ADDR
    store_dir: Path = Path(DEFAULT_STORE)
    resources_dir: Path | None = None  # None -> packaged defaults
    backend_url: str | None = None
    planner_url: str | None = None

    @property
    def host(self) -> str:
        return self.addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        try:
            return int(self.addr.rsplit(":", 1)[1])
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"bad listen address {self.addr!r}, expected host:port") from exc


def load_config(config_path: str | Path | None = None, env: dict | None = None) -> Config:
    env = os.environ if env is None else env
    path = config_path or env.get(ENV_CONFIG)
    file_values: dict = {}
    if path:
        try:
            file_values = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc.msg}") from exc
        if not isinstance(file_values, dict):
            raise ValidationError(f"config file {path} must hold a JSON object")

    def pick(env_key: str, file_key: str, default=None):
        return env.get(env_key) or file_values.get(file_key) or default

    resources = pick(ENV_RESOURCES, "resources")
    return Config(
        addr=pick(ENV_ADDR, "addr", DEFAULT_ADDR),
        store_dir=Path(pick(ENV_STORE, "store", DEFAULT_STORE)),
        resources_dir=Path(resources) if resources else None,
        backend_url=pick(ENV_BACKEND_URL, "backend_url"),
        planner_url=pick(ENV_PLANNER_URL, "planner_url"),
    )
