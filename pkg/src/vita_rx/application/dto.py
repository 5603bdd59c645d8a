"""
Data Transfer Objects — values passed between use cases, the orchestrator
and worker processes. Everything here pickles cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass

from vita_rx.core.config import TrainConfig
from vita_rx.domain.entities import (
    AnalysisReport,
    MedicationGraphs,
    MetricsReport,
    PatientRecord,
    Vocab,
)


@dataclass(frozen=True)
class DatasetSplits:
    """Patient-level train/validation/test split plus graphs built from train."""

    vocab: Vocab
    train: tuple[PatientRecord, ...]
    val: tuple[PatientRecord, ...]
    test: tuple[PatientRecord, ...]
    graphs: MedicationGraphs


@dataclass(frozen=True)
class RunRequest:
    """One (label, seed) training + evaluation run of the harness."""

    label: str
    group: str
    config: TrainConfig

    @property
    def seed(self) -> int:
        return self.config.seed


@dataclass(frozen=True)
class RunOutcome:
    """Result of one harness run."""

    label: str
    group: str
    seed: int
    best_val_jaccard: float
    best_epoch: int
    test_all: MetricsReport
    test_history: MetricsReport


@dataclass(frozen=True)
class AblationResult:
    """Every run row plus the τ_a promoted to the ``sharp`` summary group."""

    rows: tuple[MetricsReport, ...]
    best_tau_a: float | None = None


@dataclass(frozen=True)
class TrainResponse:
    """What ``train`` wrote."""

    checkpoint_path: str
    log_path: str
    best_val_jaccard: float
    best_epoch: int


@dataclass(frozen=True)
class EvaluateResponse:
    """Both evaluation scopes of one checkpoint."""

    all_visits: MetricsReport
    with_history: MetricsReport


@dataclass(frozen=True)
class AnalyzeResponse:
    report: AnalysisReport
