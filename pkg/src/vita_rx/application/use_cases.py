"""
Use Cases — application-level operations behind each CLI command.

Each use case depends only on domain ports (interfaces), never on concrete
infrastructure adapters. Failures that are not already typed are wrapped
into the stage's ``VitaError`` subclass with the original cause attached.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

from vita_rx.application import references
from vita_rx.application.dto import (
    AblationResult,
    AnalyzeResponse,
    DatasetSplits,
    EvaluateResponse,
    TrainResponse,
)
from vita_rx.application.evaluation import check_vocab, evaluate_split, selected_visit_analysis
from vita_rx.application.pipeline import ExperimentOrchestrator, prepare_splits
from vita_rx.application.synthetic import SyntheticCohort, generate_synthetic
from vita_rx.application.training import train
from vita_rx.core.config import SynthConfig, TrainConfig
from vita_rx.domain.entities import EhrDataset, MetricsReport
from vita_rx.domain.exceptions import (
    CheckpointError,
    DatasetError,
    EvaluationError,
    ExperimentError,
    VitaError,
)
from vita_rx.domain.ports import CheckpointStore, DatasetRepository, ReportWriter
from vita_rx.domain.value_objects import EncoderVariant, HistoryFilter
from vita_rx.model.vita import VitaModel

log = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.json"


def _load_dataset(repository: DatasetRepository, data_dir: Path) -> EhrDataset:
    try:
        return repository.load(data_dir)
    except VitaError:
        raise
    except Exception as e:
        raise DatasetError(f"Could not load dataset from {data_dir}: {e}", cause=e) from e


def _load_model(store: CheckpointStore, path: Path) -> VitaModel:
    try:
        return VitaModel.from_checkpoint(store.load(path))
    except VitaError:
        raise
    except Exception as e:
        raise CheckpointError(f"Could not load checkpoint {path}: {e}", cause=e) from e


class GenerateDatasetUseCase:
    """Generate a synthetic EHR corpus and write it in the dataset format.

    Flow: SynthConfig → latent-cluster generator → meta.json / patients.jsonl / ddi.csv
    """

    def __init__(self, repository: DatasetRepository) -> None:
        self._repository = repository

    def execute(self, config: SynthConfig, out_dir: Path) -> SyntheticCohort:
        """Generate and save a cohort.

        Returns:
            The generated cohort with its latent cluster labels.

        Raises:
            DatasetError: If writing the dataset fails.
        """
        cohort = generate_synthetic(config)
        try:
            self._repository.save(cohort.dataset, out_dir)
        except VitaError:
            raise
        except Exception as e:
            raise DatasetError(f"Could not write dataset to {out_dir}: {e}", cause=e) from e
        log.info(
            "🧪 Wrote %d synthetic patients (%d DDI edges), foreign past visits %.2f",
            len(cohort.dataset.patients),
            len(cohort.dataset.ddi_edges),
            cohort.foreign_past_fraction(),
        )
        return cohort


class TrainModelUseCase:
    """Split a dataset, build graphs from the train split and fit one model.

    Flow: dataset → split → build_graphs → train → checkpoint + training log
    """

    def __init__(
        self,
        repository: DatasetRepository,
        store: CheckpointStore,
        writer: ReportWriter,
    ) -> None:
        self._repository = repository
        self._store = store
        self._writer = writer

    def execute(
        self, data_dir: Path, config: TrainConfig, out_dir: Path, split_seed: int
    ) -> TrainResponse:
        dataset = _load_dataset(self._repository, data_dir)
        splits = prepare_splits(dataset, split_seed)
        result = train(splits.train, splits.val, splits.graphs, splits.vocab, config)

        checkpoint_path = out_dir / CHECKPOINT_FILE
        try:
            self._store.save(result.checkpoint, checkpoint_path)
        except VitaError:
            raise
        except Exception as e:
            raise CheckpointError(f"Could not write {checkpoint_path}: {e}", cause=e) from e
        log_path = self._writer.write_training_log(
            [row.as_tuple() for row in result.history], out_dir
        )
        log.info("💾 Checkpoint saved: %s", checkpoint_path)
        return TrainResponse(
            checkpoint_path=str(checkpoint_path),
            log_path=str(log_path),
            best_val_jaccard=result.checkpoint.best_val_jaccard,
            best_epoch=result.checkpoint.epoch,
        )


class EvaluateCheckpointUseCase:
    """Score a checkpoint on the test split of a dataset.

    Writes ``report`` (all visits) and ``report_history`` (visits with history).
    """

    def __init__(
        self,
        repository: DatasetRepository,
        store: CheckpointStore,
        writer: ReportWriter,
    ) -> None:
        self._repository = repository
        self._store = store
        self._writer = writer

    def execute(
        self, data_dir: Path, checkpoint_path: Path, out_dir: Path, split_seed: int
    ) -> EvaluateResponse:
        """Evaluate a checkpoint in both scopes.

        Raises:
            EvaluationError: If the checkpoint vocabulary differs from the dataset's.
        """
        dataset = _load_dataset(self._repository, data_dir)
        model = _load_model(self._store, checkpoint_path)
        check_vocab(model, dataset.vocab)
        splits = prepare_splits(dataset, split_seed)

        try:
            evaluation = evaluate_split(model, splits.test)
        except VitaError:
            raise
        except Exception as e:
            raise EvaluationError(f"Evaluation failed: {e}", cause=e) from e

        headline = references.with_source(references.HEADLINE)
        self._writer.write_metrics([evaluation.all_visits], out_dir, "report", headline)
        self._writer.write_metrics(
            [evaluation.with_history], out_dir, "report_history", headline
        )
        return EvaluateResponse(
            all_visits=evaluation.all_visits, with_history=evaluation.with_history
        )


class AnalyzeSelectionUseCase:
    """Similarity of selected vs. unselected past visits on the test split."""

    def __init__(
        self,
        repository: DatasetRepository,
        store: CheckpointStore,
        writer: ReportWriter,
    ) -> None:
        self._repository = repository
        self._store = store
        self._writer = writer

    def execute(
        self, data_dir: Path, checkpoint_path: Path, out_dir: Path, split_seed: int
    ) -> AnalyzeResponse:
        dataset = _load_dataset(self._repository, data_dir)
        model = _load_model(self._store, checkpoint_path)
        check_vocab(model, dataset.vocab)
        splits = prepare_splits(dataset, split_seed)
        report = selected_visit_analysis(model, splits.test)
        self._writer.write_analysis(report, out_dir)
        return AnalyzeResponse(report=report)


class _ExperimentUseCase:
    def __init__(
        self,
        repository: DatasetRepository,
        writer: ReportWriter,
        orchestrator: ExperimentOrchestrator,
    ) -> None:
        self._repository = repository
        self._writer = writer
        self._orchestrator = orchestrator

    def _splits(self, data_dir: Path, split_seed: int) -> DatasetSplits:
        return prepare_splits(_load_dataset(self._repository, data_dir), split_seed)


class RunAblationUseCase(_ExperimentUseCase):
    """Every encoder variant × seed; one report row per run plus mean±std rows."""

    def execute(
        self,
        data_dir: Path,
        base: TrainConfig,
        variants: Sequence[EncoderVariant],
        seeds: Sequence[int],
        out_dir: Path,
        split_seed: int,
    ) -> AblationResult:
        splits = self._splits(data_dir, split_seed)
        try:
            result = self._orchestrator.ablation_suite(base, variants, seeds, splits)
        except VitaError:
            raise
        except Exception as e:
            raise ExperimentError(f"Ablation failed: {e}", cause=e) from e
        refs = references.with_source(references.HEADLINE[:1] + references.ABLATION)
        self._writer.write_metrics(result.rows, out_dir, "report", refs)
        return result


class RunMotivationUseCase(_ExperimentUseCase):
    """One variant under each history filter × seed, scored on visits with history."""

    def execute(
        self,
        data_dir: Path,
        base: TrainConfig,
        modes: Sequence[HistoryFilter],
        seeds: Sequence[int],
        out_dir: Path,
        split_seed: int,
    ) -> list[MetricsReport]:
        splits = self._splits(data_dir, split_seed)
        try:
            rows = self._orchestrator.motivation_experiment(base, modes, seeds, splits)
        except VitaError:
            raise
        except Exception as e:
            raise ExperimentError(f"Motivation experiment failed: {e}", cause=e) from e
        self._writer.write_metrics(rows, out_dir, "report")
        return rows
