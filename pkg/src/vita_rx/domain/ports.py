"""
Domain Ports — abstract interfaces for persistence.

Ports define what the application layer needs from the filesystem. The
adapters in ``vita_rx.infrastructure.adapters`` implement them, so use cases
can be tested against MagicMock doubles without touching disk.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Sequence
from pathlib import Path

from vita_rx.domain.entities import (
    AnalysisReport,
    Checkpoint,
    EhrDataset,
    MetricsReport,
    RunManifest,
)

# ═══════════════════════════════════════════════════════════════
# Dataset Port
# ═══════════════════════════════════════════════════════════════


class DatasetRepository(ABC):
    """Port for reading and writing EHR dataset directories.

    Implementations: JsonlDatasetRepository
    """

    @abstractmethod
    def load(self, path: Path) -> EhrDataset:
        """Load and validate a dataset directory.

        Args:
            path: Directory holding meta, patients and DDI files.

        Returns:
            The dataset with every index validated against its vocabulary.

        Raises:
            DatasetError: On malformed lines or out-of-range indices.
        """

    @abstractmethod
    def save(self, dataset: EhrDataset, path: Path) -> None:
        """Write a dataset directory.

        Args:
            dataset: Dataset to persist.
            path: Target directory (created if missing).
        """

    @abstractmethod
    def fingerprint(self, path: Path) -> str:
        """Content hash of a dataset directory.

        Args:
            path: Dataset directory.

        Returns:
            Hex digest over the dataset files, in a fixed file order.
        """


# ═══════════════════════════════════════════════════════════════
# Checkpoint Port
# ═══════════════════════════════════════════════════════════════


class CheckpointStore(ABC):
    """Port for persisting model checkpoints.

    Implementations: JsonCheckpointStore
    """

    @abstractmethod
    def save(self, checkpoint: Checkpoint, path: Path) -> None:
        """Write a checkpoint losslessly.

        Args:
            checkpoint: Checkpoint to persist.
            path: Target file.
        """

    @abstractmethod
    def load(self, path: Path) -> Checkpoint:
        """Read a checkpoint.

        Args:
            path: Checkpoint file.

        Returns:
            The checkpoint with bit-identical parameter arrays.

        Raises:
            CheckpointError: On version mismatch, missing parameters or bad JSON.
        """


# ═══════════════════════════════════════════════════════════════
# Report Port
# ═══════════════════════════════════════════════════════════════


class ReportWriter(ABC):
    """Port for writing result files under an output directory.

    Implementations: FileReportWriter
    """

    @abstractmethod
    def write_manifest(self, manifest: RunManifest, out_dir: Path) -> Path:
        """Write the run manifest before any long computation starts.

        Returns:
            Path of the written manifest.
        """

    @abstractmethod
    def write_metrics(
        self,
        reports: Sequence[MetricsReport],
        out_dir: Path,
        stem: str = "report",
        references: Sequence[dict[str, object]] = (),
    ) -> list[Path]:
        """Write per-run rows plus mean±std rows as CSV and Markdown.

        Args:
            reports: One report per (variant, seed) run.
            out_dir: Output directory.
            stem: File stem (``report`` → report.csv and report.md).
            references: Labelled published reference rows for the Markdown.

        Returns:
            Paths of the written files.
        """

    @abstractmethod
    def write_analysis(self, report: AnalysisReport, out_dir: Path) -> list[Path]:
        """Write the selected-visit similarity analysis as CSV and Markdown.

        Returns:
            Paths of the written files.
        """

    @abstractmethod
    def write_training_log(
        self, rows: Sequence[tuple[int, float, float]], out_dir: Path
    ) -> Path:
        """Write the per-epoch (epoch, train_loss, val_jaccard) log as CSV.

        Returns:
            Path of the written log.
        """
