"""Service configuration file (JSON)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .classifier import FilterConfig
from .policy import PolicyConfig

CONFIG_ENV = "BAYESGATE_CONFIG"
ADMIN_TOKEN_ENV = "BAYESGATE_ADMIN_TOKEN"


class ConfigError(ValueError):
    pass


@dataclass
class AppConfig:
    filter: FilterConfig = field(default_factory=FilterConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    storage_path: Path = Path("bayesgate.bgl")
    listen: str = "127.0.0.1:8080"
    admin_token: Optional[str] = None
    trust_forwarded_for: bool = False
    snapshot_every: int = 1000

    @property
    def host(self) -> str:
        return split_listen(self.listen)[0]

    @property
    def port(self) -> int:
        return split_listen(self.listen)[1]

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> AppConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {"filter", "policy", "storage_path", "listen", "admin_token", "trust_forwarded_for", "snapshot_every"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        try:
            filt = FilterConfig.from_dict(data.get("filter") or {})
            pol = PolicyConfig.from_dict(data.get("policy") or {})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        storage = Path(data.get("storage_path", "bayesgate.bgl"))
        if base_dir is not None and not storage.is_absolute():
            storage = base_dir / storage
        listen = str(data.get("listen", "127.0.0.1:8080"))
        split_listen(listen)
        token = data.get("admin_token")
        if token is not None and not isinstance(token, str):
            raise ConfigError("admin_token must be a string")
        snapshot_every = data.get("snapshot_every", 1000)
        if isinstance(snapshot_every, bool) or not isinstance(snapshot_every, int) or snapshot_every < 0:
            raise ConfigError("snapshot_every must be a non-negative integer")
        return cls(
            filter=filt,
            policy=pol,
            storage_path=storage,
            listen=listen,
            admin_token=token,
            trust_forwarded_for=bool(data.get("trust_forwarded_for", False)),
            snapshot_every=snapshot_every,
        )


def split_listen(listen: str) -> tuple[str, int]:
    host, sep, port = listen.rpartition(":")
    if not sep or not port.isdigit() or not 0 <= int(port) <= 65535:
        raise ConfigError(f"listen must look like HOST:PORT, got {listen!r}")
    return host.strip("[]") or "127.0.0.1", int(port)


def load_config(path: Optional[Path | str] = None) -> AppConfig:
    """Read the config file named by ``path`` or ``$BAYESGATE_CONFIG``.

    With neither given, defaults are used. The admin token from the
    environment wins over the file.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        cfg = AppConfig()
    else:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        cfg = AppConfig.from_dict(data, base_dir=path.parent)
    env_token = os.environ.get(ADMIN_TOKEN_ENV)
    if env_token:
        cfg.admin_token = env_token
    return cfg
