"""Run configuration for the dubbing toolkit.

Values are resolved with this precedence: command-line overrides, then the
``key = value`` config file, then ``AUMOS_DUBBING_*`` environment variables,
then defaults. Nested sections use dotted keys in the file
(``model.d_model = 64``) and ``__`` in the environment
(``AUMOS_DUBBING_NOISE__SIGMA=0.1``).
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from aumos_dubbing.core.config import ModelConfig, NoiseSpec, TrainingMode, VadConfig
from aumos_dubbing.errors import ConfigurationError


class Settings(BaseSettings):
    """Dubbing toolkit settings.

    Every artifact embeds ``provenance()`` so a run can be reproduced from its outputs.
    """

    seed: int = Field(default=1, description="Root seed; all randomness derives from named substreams of it")
    mode: TrainingMode = Field(default=TrainingMode.TXTD2PHND, description="Source/target format")

    # Data derivation
    frame_ms: int = Field(default=10, gt=0, description="Duration-token frame length in milliseconds")
    pause_threshold_ms: int = Field(default=300, gt=0, description="Minimum silence counted as a pause")
    bins: int = Field(default=100, ge=2, description="Requested number of duration bins")
    max_frames: int = Field(default=128, ge=1, description="Largest duration token; longer phones are clipped")
    source_bpe_size: int = Field(default=10000, ge=1, description="Source BPE symbol budget")
    target_bpe_size: int = Field(default=10000, ge=1, description="Target BPE symbol budget (StdMT)")
    valid_fraction: float = Field(default=0.05, ge=0.0, lt=1.0, description="Share of records held out for validation")
    test_fraction: float = Field(default=0.05, ge=0.0, lt=1.0, description="Share of records held out for testing")
    max_malformed_fraction: float = Field(
        default=0.01,
        ge=0.0,
        le=1.0,
        description="Abort prepare when more than this share of alignment lines is malformed",
    )

    # Model, noise and VAD sections
    model_preset: str = Field(default="desk", description="Base model preset: desk or base")
    model: ModelConfig = Field(default_factory=ModelConfig)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    vad: VadConfig = Field(default_factory=VadConfig)

    # Logging
    log_level: str = Field(default="INFO", description="Minimum log level")
    log_json: bool = Field(default=False, description="Render logs as JSON lines")

    model_config = SettingsConfigDict(
        env_prefix="AUMOS_DUBBING_",
        env_nested_delimiter="__",
        extra="forbid",
        protected_namespaces=(),
    )

    def run_model_config(self) -> ModelConfig:
        """Model section with the root seed applied."""
        return self.model.model_copy(update={"seed": self.seed})

    def run_noise_spec(self) -> NoiseSpec:
        """Noise section with the root seed applied."""
        return self.noise.model_copy(update={"seed": self.seed})

    def provenance(self) -> dict[str, Any]:
        """Fully serialized configuration, JSON-compatible."""
        return json.loads(self.model_dump_json())

    def provenance_json(self) -> str:
        """``provenance()`` as canonical (sorted, compact) JSON."""
        return json.dumps(self.provenance(), sort_keys=True, separators=(",", ":"))


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _assign(target: dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = target
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigurationError("config key is both a value and a section", key=dotted)
        node = child
    node[keys[-1]] = value


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines into a nested dict.

    ``#`` starts a comment line; values are read as JSON scalars when possible
    (``0.1``, ``true``) and as plain strings otherwise.

    Raises:
        ConfigurationError: On a line without ``=``.
    """
    values: dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError("config line is not 'key = value'", line=number)
        _assign(values, key.strip(), _parse_value(raw.strip()))
    return values


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Recursively merge ``override`` into a copy of ``base``."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(config_path: Path | None = None, overrides: Mapping[str, Any] | None = None) -> Settings:
    """Resolve settings from overrides, an optional config file and the environment.

    Args:
        config_path: ``key = value`` file.
        overrides: Nested values from the command line; highest precedence.

    Raises:
        ConfigurationError: On unreadable files, unknown keys or invalid values.
    """
    values: dict[str, Any] = {}
    if config_path is not None:
        try:
            values = parse_config_text(config_path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError("cannot read config file", path=str(config_path), error=str(exc)) from exc
    values = deep_merge(values, overrides or {})

    preset = values.get("model_preset")
    if preset is not None:
        try:
            base = ModelConfig.preset(str(preset)).model_dump()
        except ValueError as exc:
            raise ConfigurationError("unknown model preset", preset=preset) from exc
        values["model"] = deep_merge(base, values.get("model", {}))

    try:
        return Settings(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigurationError(
            "invalid configuration",
            key=".".join(str(part) for part in first["loc"]),
            error=first["msg"],
        ) from exc
