"""Configuration: the YAML config file declaring profiles, endpoints, and
reviewer tokens, plus the per-run settings bundle.

Secrets never live in the file; endpoint auth comes from the environment
variable each endpoint names.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .llm import ModelEndpoint
from .model import LanguageProfile
from .sandbox import ExecLimits


class ConfigError(ValueError):
    pass


@dataclass
class HarnessConfig:
    store_root: Path = Path("runs")
    workers: int = 4
    limits: ExecLimits = field(default_factory=ExecLimits)
    profiles: dict = field(default_factory=dict)
    endpoints: dict = field(default_factory=dict)
    reviewers: dict = field(default_factory=dict)  # reviewer_id -> token

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.profiles.setdefault("python", LanguageProfile())

    def profile(self, name: str) -> LanguageProfile:
        if name not in self.profiles:
            raise ConfigError(f"profile {name!r} not declared in config")
        return self.profiles[name]

    def endpoint(self, endpoint_id: str) -> ModelEndpoint:
        if endpoint_id not in self.endpoints:
            raise ConfigError(f"endpoint {endpoint_id!r} not declared in config")
        return self.endpoints[endpoint_id]


def load_config(path: Optional[str | Path]) -> HarnessConfig:
    """Parse the YAML config file; a missing path yields pure defaults."""
    if path is None:
        return HarnessConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a mapping")

    limits_raw = raw.get("limits", {})
    try:
        limits = ExecLimits(
            time_seconds=float(limits_raw.get("time_seconds", 10.0)),
            output_cap_bytes=int(limits_raw.get("output_cap_bytes", 1 << 20)),
            env=dict(limits_raw.get("env", {})),
        )
        profiles = {
            name: LanguageProfile.from_dict({"name": name, **(spec or {})})
            for name, spec in (raw.get("profiles") or {}).items()
        }
        endpoints = {}
        for endpoint_id, spec in (raw.get("endpoints") or {}).items():
            spec = spec or {}
            endpoints[endpoint_id] = ModelEndpoint(
                id=spec.get("model", endpoint_id),
                base_url=spec["base_url"],
                auth_env_var=spec.get("auth_env_var", ""),
                timeout_seconds=float(spec.get("timeout_seconds", 60.0)),
                max_retries=int(spec.get("max_retries", 2)),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config entry: {exc}") from exc

    return HarnessConfig(
        store_root=Path(raw.get("store_root", "runs")),
        workers=int(raw.get("workers", 4)),
        limits=limits,
        profiles=profiles,
        endpoints=endpoints,
        reviewers=dict(raw.get("reviewers") or {}),
    )


@dataclass
class RunConfig:
    """Everything one pipeline run needs."""

    run_id: str
    tasks_path: Path
    tasks_format: str = "unified"
    profile_name: str = "python"
    endpoint_id: Optional[str] = None
    candidates_path: Optional[Path] = None
    model_id: Optional[str] = None
    repair: bool = False
    max_iterations: int = 2
    workers: int = 1
    seed: int = 0
    drop_flagged: bool = False
    suggest_causes: bool = False

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if self.endpoint_id is None and self.candidates_path is None:
            raise ConfigError("either an endpoint or a candidates file is required")
