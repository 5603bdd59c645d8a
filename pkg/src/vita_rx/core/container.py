"""
Dependency Injection Container — wires ports to adapters.

An explicit container that resolves domain ports to their concrete
infrastructure adapters. All wiring happens in one place; adapters are
created on first request and reused afterwards.

Usage:
    settings = Settings()
    container = Container(settings)
    repo = container.dataset_repository()
"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from vita_rx.application.pipeline import ExperimentOrchestrator
    from vita_rx.core.config import Settings
    from vita_rx.domain.ports import CheckpointStore, DatasetRepository, ReportWriter

log = logging.getLogger(__name__)


class Container:
    """Dependency injection container.

    Lazily creates and caches adapter instances.
    """

    def __init__(self, settings: Settings) -> None:
        self._settings = settings
        log.debug("🔌 DI Container initialized")

    @property
    def settings(self) -> Settings:
        return self._settings

    @lru_cache(maxsize=1)
    def dataset_repository(self) -> DatasetRepository:
        """Resolve DatasetRepository → JsonlDatasetRepository."""
        from vita_rx.infrastructure.adapters.jsonl_dataset import JsonlDatasetRepository

        return JsonlDatasetRepository()

    @lru_cache(maxsize=1)
    def checkpoint_store(self) -> CheckpointStore:
        """Resolve CheckpointStore → JsonCheckpointStore."""
        from vita_rx.infrastructure.adapters.json_checkpoint import JsonCheckpointStore

        return JsonCheckpointStore()

    @lru_cache(maxsize=1)
    def report_writer(self) -> ReportWriter:
        """Resolve ReportWriter → FileReportWriter."""
        from vita_rx.infrastructure.adapters.file_reports import FileReportWriter

        return FileReportWriter()

    def orchestrator(self) -> ExperimentOrchestrator:
        """A fresh orchestrator sized by ``settings.jobs``."""
        from vita_rx.application.pipeline import ExperimentOrchestrator

        return ExperimentOrchestrator(jobs=self._settings.jobs)
