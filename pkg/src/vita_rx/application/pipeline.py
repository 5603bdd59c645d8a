"""
Experiment Orchestrator — fans training runs out over seeds and variants.

The orchestrator drives the multi-run commands:
  - **ablation**: every requested encoder variant × every seed, with a
    τ_a sweep for the sharpened-attention variant
  - **motivation**: one encoder variant × every history filter × every seed

Runs are independent; with ``jobs > 1`` they go to a process pool. Results
always come back in request order so reports are identical for any ``jobs``.
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from vita_rx.application.dto import AblationResult, DatasetSplits, RunOutcome, RunRequest
from vita_rx.application.evaluation import evaluate_split
from vita_rx.application.training import train
from vita_rx.core.config import TrainConfig
from vita_rx.core.timer import RunTimer
from vita_rx.domain.ehr import build_graphs, split_dataset
from vita_rx.domain.entities import EhrDataset, MetricsReport
from vita_rx.domain.exceptions import ExperimentError, VitaError
from vita_rx.domain.value_objects import EncoderVariant, HistoryFilter

log = logging.getLogger(__name__)

SHARP_TAU_GRID: tuple[float, ...] = (1.0, 0.8, 0.6, 0.4, 0.2)


def prepare_splits(dataset: EhrDataset, seed: int) -> DatasetSplits:
    """Split patients and build both graphs from the training split only."""
    train_records, val_records, test_records = split_dataset(dataset.patients, seed)
    graphs = build_graphs(train_records, dataset.ddi_edges, dataset.vocab)
    log.info(
        "🧩 Split %d patients → %d train / %d val / %d test",
        len(dataset.patients),
        len(train_records),
        len(val_records),
        len(test_records),
    )
    return DatasetSplits(
        vocab=dataset.vocab,
        train=tuple(train_records),
        val=tuple(val_records),
        test=tuple(test_records),
        graphs=graphs,
    )


def execute_run(request: RunRequest, splits: DatasetSplits) -> RunOutcome:
    """Train one model and score it on the test split. Top-level so it pickles."""
    result = train(splits.train, splits.val, splits.graphs, splits.vocab, request.config)
    evaluation = evaluate_split(
        result.model, splits.test, seed=request.seed, variant=request.label
    )
    return RunOutcome(
        label=request.label,
        group=request.group,
        seed=request.seed,
        best_val_jaccard=result.checkpoint.best_val_jaccard,
        best_epoch=result.checkpoint.epoch,
        test_all=evaluation.all_visits,
        test_history=evaluation.with_history,
    )


class ExperimentOrchestrator:
    """Runs batches of independent training runs and assembles report rows."""

    def __init__(self, jobs: int = 1, timer: RunTimer | None = None) -> None:
        if jobs < 1:
            raise ExperimentError(f"jobs must be >= 1, got {jobs}")
        self._jobs = jobs
        self._timer = timer or RunTimer()

    @property
    def timer(self) -> RunTimer:
        return self._timer

    def run(self, requests: Sequence[RunRequest], splits: DatasetSplits) -> list[RunOutcome]:
        """Execute every request; outcomes come back in request order."""
        if not requests:
            raise ExperimentError("No runs requested")
        log.info("🏁 %d runs on %d worker(s)", len(requests), self._jobs)

        try:
            if self._jobs == 1:
                outcomes = []
                for request in requests:
                    name = f"{request.label} seed={request.seed}"
                    with self._timer.step(name, group=request.group):
                        outcomes.append(execute_run(request, splits))
                return outcomes

            with (
                self._timer.step(f"{len(requests)} runs (parallel)", group="parallel"),
                ProcessPoolExecutor(max_workers=self._jobs) as executor,
            ):
                futures = [executor.submit(execute_run, r, splits) for r in requests]
                return [f.result() for f in futures]
        except VitaError:
            raise
        except Exception as e:
            raise ExperimentError(f"Experiment run failed: {e}", cause=e) from e

    # ── ablation ──────────────────────────────────────────────

    def ablation_suite(
        self,
        base: TrainConfig,
        variants: Sequence[EncoderVariant],
        seeds: Sequence[int],
        splits: DatasetSplits,
        tau_grid: Sequence[float] = SHARP_TAU_GRID,
    ) -> AblationResult:
        """Every variant × seed, test metrics over all visits.

        The sharp variant is trained once per τ_a in ``tau_grid`` (rows
        ``sharp@τ``); the τ_a with the best mean validation Jaccard is
        repeated under the plain ``sharp`` label.
        """
        if not variants or not seeds:
            raise ExperimentError("Ablation needs at least one variant and one seed")

        requests: list[RunRequest] = []
        for variant in variants:
            taus: Sequence[float | None] = (
                tau_grid if variant is EncoderVariant.SHARP else (None,)
            )
            for tau in taus:
                label = variant.value if tau is None else f"{variant.value}@{tau:g}"
                for seed in seeds:
                    config = base.with_overrides(variant=variant, tau_a=tau, seed=seed)
                    requests.append(RunRequest(label=label, group=variant.value, config=config))

        outcomes = self.run(requests, splits)

        best_tau: float | None = None
        rows: list[MetricsReport] = []
        for variant in variants:
            members = [o for o in outcomes if o.group == variant.value]
            rows.extend(o.test_all for o in members)
            if variant is EncoderVariant.SHARP:
                best_tau = self._best_tau(members, tau_grid)
                promoted = f"{variant.value}@{best_tau:g}"
                rows.extend(
                    dataclasses.replace(o.test_all, variant=variant.value)
                    for o in members
                    if o.label == promoted
                )
                log.info("🎯 Best sharp τ_a = %g (by mean validation Jaccard)", best_tau)
        return AblationResult(rows=tuple(rows), best_tau_a=best_tau)

    @staticmethod
    def _best_tau(outcomes: Sequence[RunOutcome], tau_grid: Sequence[float]) -> float:
        best: tuple[float, float] | None = None
        for tau in tau_grid:
            label = f"{EncoderVariant.SHARP.value}@{tau:g}"
            vals = [o.best_val_jaccard for o in outcomes if o.label == label]
            score = float(np.mean(vals))
            # ties keep the earlier grid entry
            if best is None or score > best[1]:
                best = (tau, score)
        assert best is not None
        return best[0]

    # ── motivation ────────────────────────────────────────────

    def motivation_experiment(
        self,
        base: TrainConfig,
        modes: Sequence[HistoryFilter],
        seeds: Sequence[int],
        splits: DatasetSplits,
    ) -> list[MetricsReport]:
        """One model per history filter × seed, scored on visits that have history."""
        if not modes or not seeds:
            raise ExperimentError("Motivation needs at least one mode and one seed")

        requests = [
            RunRequest(
                label=f"mode={mode.value}",
                group=mode.value,
                config=base.with_overrides(history_filter=mode, seed=seed),
            )
            for mode in modes
            for seed in seeds
        ]
        return [o.test_history for o in self.run(requests, splits)]
