"""
Configuration — type-safe models via Pydantic.

Two kinds of configuration live here:

* ``TrainConfig`` / ``SynthConfig`` — frozen, schema-validated models that
  mirror ``config.json`` and the synthetic generator flags. Every numeric
  hyperparameter flows through them; call sites never hard-code defaults.
* ``Settings`` — runtime options (log level, jobs, output directory) loaded
  from ``VITA_*`` environment variables or a ``.env`` file.

Usage:
    config = load_train_config(Path("config.json"))
    config = config.with_overrides(variant="rs", seed=3)
    settings = Settings()
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from vita_rx.domain.exceptions import ConfigurationError
from vita_rx.domain.value_objects import EncoderVariant, HistoryFilter, PraucScoring

CONFIG_FORMAT_VERSION = 1


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class EncoderSettings(_Frozen):
    """Encoder behaviour: variant, temperatures and candidate filtering."""

    variant: EncoderVariant = EncoderVariant.FULL
    tau_g: float = Field(default=1.0, gt=0)
    tau_a: float = Field(default=1.0, gt=0)
    tau_g_anneal_to: float | None = Field(default=None, gt=0)
    history_filter: HistoryFilter = HistoryFilter.ALL
    stochastic_eval: bool = False
    soft_selection: bool = False

    @field_validator("variant", mode="before")
    @classmethod
    def parse_variant(cls, v: Any) -> Any:
        return EncoderVariant.from_str(v) if isinstance(v, str) else v

    @field_validator("history_filter", mode="before")
    @classmethod
    def parse_history_filter(cls, v: Any) -> Any:
        return HistoryFilter.from_str(v) if isinstance(v, str) else v


class PredictorSettings(_Frozen):
    """Decoder shape and the fixed DDI-branch coefficient."""

    beta: float = Field(default=0.1, ge=0)
    n_layers: int = Field(default=1, ge=1)
    n_heads: int = Field(default=1, ge=1)
    lambda_init: float = 0.0


class EvaluationSettings(_Frozen):
    """Scoring choices for metrics."""

    prauc_scoring: PraucScoring = PraucScoring.FIRST_STEP


class TrainConfig(_Frozen):
    """Full training configuration; the content of ``config.json``."""

    format_version: int = CONFIG_FORMAT_VERSION
    dim: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    epochs: int = Field(default=30, ge=0)
    patience: int = Field(default=5, ge=0)
    seed: int = 0
    max_decode_len: int | None = Field(default=None, ge=0)
    encoder: EncoderSettings = Field(default_factory=EncoderSettings)
    predictor: PredictorSettings = Field(default_factory=PredictorSettings)
    evaluation: EvaluationSettings = Field(default_factory=EvaluationSettings)

    @field_validator("format_version")
    @classmethod
    def check_format_version(cls, v: int) -> int:
        if v != CONFIG_FORMAT_VERSION:
            raise ValueError(
                f"config format_version {v} is not supported (expected {CONFIG_FORMAT_VERSION})"
            )
        return v

    @model_validator(mode="after")
    def check_heads_divide_dim(self) -> TrainConfig:
        if self.dim % self.predictor.n_heads:
            raise ValueError(
                f"predictor.n_heads={self.predictor.n_heads} must divide dim={self.dim}"
            )
        return self

    def tau_g_at(self, epoch: int) -> float:
        """Gumbel temperature for a 1-based epoch (linear anneal when configured)."""
        end = self.encoder.tau_g_anneal_to
        if end is None or self.epochs <= 1:
            return self.encoder.tau_g
        frac = (min(max(epoch, 1), self.epochs) - 1) / (self.epochs - 1)
        return self.encoder.tau_g + frac * (end - self.encoder.tau_g)

    def with_overrides(self, **overrides: Any) -> TrainConfig:
        """Copy with CLI overrides applied and re-validated.

        Top-level keys replace fields directly; ``variant``, ``tau_g``,
        ``tau_a``, ``history_filter`` and ``beta`` are routed to their group.
        """
        data = self.model_dump(mode="json")
        for key, value in overrides.items():
            if value is None:
                continue
            if key in EncoderSettings.model_fields:
                data["encoder"][key] = value.value if hasattr(value, "value") else value
            elif key in PredictorSettings.model_fields:
                data["predictor"][key] = value
            elif key in EvaluationSettings.model_fields:
                data["evaluation"][key] = value.value if hasattr(value, "value") else value
            else:
                data[key] = value
        return parse_train_config(data)

    def snapshot(self) -> dict[str, Any]:
        """JSON-compatible dump (enum values as strings)."""
        return self.model_dump(mode="json")


class SynthConfig(_Frozen):
    """Synthetic EHR generator parameters.

    Visit counts per patient are ``min_visits + Poisson(mean_extra_visits)``
    capped at ``max_visits``. Codes per visit are drawn from the visit's
    cluster blocks, plus each noise code with probability ``code_noise``.
    Every patient also carries ``chronic_per_patient`` medications from the
    home block that are prescribed at every home-cluster visit.
    """

    n_patients: int = Field(default=300, ge=1)
    n_dx: int = Field(default=40, ge=1)
    n_px: int = Field(default=20, ge=1)
    n_rx: int = Field(default=30, ge=1)
    n_clusters: int = Field(default=5, ge=1)
    min_visits: int = Field(default=2, ge=2)
    max_visits: int = Field(default=6, ge=2)
    mean_extra_visits: float = Field(default=1.5, ge=0)
    dx_per_visit: int = Field(default=3, ge=1)
    px_per_visit: int = Field(default=2, ge=1)
    rx_per_visit: int = Field(default=3, ge=1)
    chronic_per_patient: int = Field(default=2, ge=0)
    code_noise: float = Field(default=0.05, ge=0, le=1)
    relevance_noise: float = Field(default=0.3, ge=0, le=1)
    ddi_density: float = Field(default=0.05, ge=0, le=1)
    seed: int = 0

    @model_validator(mode="after")
    def check_visit_bounds(self) -> SynthConfig:
        if self.max_visits < self.min_visits:
            raise ValueError(
                f"max_visits={self.max_visits} must be >= min_visits={self.min_visits}"
            )
        return self


def _format_validation_error(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_train_config(data: dict[str, Any]) -> TrainConfig:
    """Validate a config mapping.

    Raises:
        ConfigurationError: On unknown keys, wrong types or a bad format_version.
    """
    try:
        return TrainConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid config: {_format_validation_error(e)}", cause=e) from e


def load_train_config(path: Path | None) -> TrainConfig:
    """Read ``config.json``; defaults when ``path`` is None."""
    if path is None:
        return TrainConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {path}", cause=e) from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid JSON: {e}", cause=e) from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a JSON object")
    return parse_train_config(data)


def build_synth_config(**values: Any) -> SynthConfig:
    """Validate generator flags.

    Raises:
        ConfigurationError: On out-of-range values.
    """
    try:
        return SynthConfig.model_validate({k: v for k, v in values.items() if v is not None})
    except ValidationError as e:
        raise ConfigurationError(
            f"Invalid generator settings: {_format_validation_error(e)}", cause=e
        ) from e


class Settings(BaseSettings):
    """Runtime settings.

    Load order:
        1. CLI flags (applied by the caller)
        2. Environment variables (``VITA_LOG_LEVEL``, ``VITA_JOBS``, ...)
        3. .env file (if present)
        4. Default values
    """

    model_config = SettingsConfigDict(
        env_prefix="VITA_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = "INFO"
    log_file: str | None = None
    jobs: int = Field(default=1, ge=1)
    output_dir: Path = Path("runs")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        allowed = {"DEBUG", "INFO", "WARNING", "ERROR"}
        if v.upper() not in allowed:
            raise ValueError(f"log_level must be one of {allowed}")
        return v.upper()
