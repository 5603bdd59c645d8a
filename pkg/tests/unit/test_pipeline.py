"""Tests for the experiment orchestrator."""

from __future__ import annotations

import pytest

from vita_rx.application import pipeline
from vita_rx.application.dto import DatasetSplits, RunOutcome, RunRequest
from vita_rx.application.pipeline import ExperimentOrchestrator, execute_run, prepare_splits
from vita_rx.core.config import TrainConfig
from vita_rx.domain.entities import EhrDataset, MetricsReport
from vita_rx.domain.exceptions import DatasetError, ExperimentError
from vita_rx.domain.value_objects import EncoderVariant, HistoryFilter

# mean validation Jaccard per sharp τ_a used by the fake runs
_SHARP_VAL = {1.0: 0.30, 0.8: 0.42, 0.6: 0.42, 0.4: 0.35, 0.2: 0.10}


def _report(label: str, seed: int, jaccard: float) -> MetricsReport:
    return MetricsReport(
        jaccard=jaccard,
        f1=0.5,
        prauc=0.5,
        ddi_rate=0.0,
        n_patients=1,
        n_visits=2,
        seed=seed,
        variant=label,
    )


def _fake_run(request: RunRequest, splits: DatasetSplits) -> RunOutcome:
    config = request.config
    val = 0.2 + 0.01 * request.seed
    if config.encoder.variant is EncoderVariant.SHARP:
        val = _SHARP_VAL[config.encoder.tau_a]
    return RunOutcome(
        label=request.label,
        group=request.group,
        seed=request.seed,
        best_val_jaccard=val,
        best_epoch=1,
        test_all=_report(request.label, request.seed, val),
        test_history=_report(request.label, request.seed, val / 2),
    )


@pytest.fixture
def fake_runs(monkeypatch: pytest.MonkeyPatch) -> list[RunRequest]:
    seen: list[RunRequest] = []

    def run(request: RunRequest, splits: DatasetSplits) -> RunOutcome:
        seen.append(request)
        return _fake_run(request, splits)

    monkeypatch.setattr(pipeline, "execute_run", run)
    return seen


class TestPrepareSplits:
    """Tests for splitting and graph construction."""

    def test_graphs_come_from_train_split(self, tiny_dataset: EhrDataset) -> None:
        splits = prepare_splits(tiny_dataset, seed=0)
        assert (len(splits.train), len(splits.val), len(splits.test)) == (12, 3, 3)
        train_pairs = {
            (i, j)
            for r in splits.train
            for v in r.visits
            for i in v.rx
            for j in v.rx
            if i < j
        }
        edges = {
            (i, j)
            for i in range(splits.vocab.n_rx)
            for j in range(i + 1, splits.vocab.n_rx)
            if splits.graphs.a_ehr[i, j]
        }
        assert edges == train_pairs

    def test_too_small(self, tiny_dataset: EhrDataset) -> None:
        small = EhrDataset(vocab=tiny_dataset.vocab, patients=tiny_dataset.patients[:5])
        with pytest.raises(DatasetError, match="at least 6"):
            prepare_splits(small, seed=0)


class TestExperimentOrchestrator:
    """Tests for batching, labelling and τ_a promotion."""

    def test_jobs_must_be_positive(self) -> None:
        with pytest.raises(ExperimentError, match="jobs"):
            ExperimentOrchestrator(jobs=0)

    def test_empty_batch(self, tiny_splits: DatasetSplits) -> None:
        with pytest.raises(ExperimentError, match="No runs"):
            ExperimentOrchestrator().run([], tiny_splits)

    def test_ablation_labels_and_order(
        self, fake_runs: list[RunRequest], tiny_splits: DatasetSplits
    ) -> None:
        result = ExperimentOrchestrator().ablation_suite(
            TrainConfig(dim=8),
            [EncoderVariant.FULL, EncoderVariant.NO_SELECTION],
            [0, 1],
            tiny_splits,
        )
        assert [(r.variant, r.seed) for r in result.rows] == [
            ("full", 0),
            ("full", 1),
            ("no_selection", 0),
            ("no_selection", 1),
        ]
        assert result.best_tau_a is None
        assert [r.config.seed for r in fake_runs] == [0, 1, 0, 1]
        assert fake_runs[2].config.encoder.variant is EncoderVariant.NO_SELECTION

    def test_sharp_sweep_promotes_best_tau(
        self, fake_runs: list[RunRequest], tiny_splits: DatasetSplits
    ) -> None:
        result = ExperimentOrchestrator().ablation_suite(
            TrainConfig(dim=8), [EncoderVariant.SHARP], [0, 1], tiny_splits
        )
        # 0.8 and 0.6 tie; the earlier grid entry wins
        assert result.best_tau_a == 0.8
        labels = [r.variant for r in result.rows]
        assert labels[:2] == ["sharp@1", "sharp@1"]
        assert "sharp@0.2" in labels
        promoted = [r for r in result.rows if r.variant == "sharp"]
        assert len(promoted) == 2
        assert all(r.jaccard == pytest.approx(0.42) for r in promoted)
        assert len(fake_runs) == 10

    def test_motivation_rows(
        self, fake_runs: list[RunRequest], tiny_splits: DatasetSplits
    ) -> None:
        base = TrainConfig(dim=8).with_overrides(variant=EncoderVariant.NO_SELECTION)
        rows = ExperimentOrchestrator().motivation_experiment(
            base, [HistoryFilter.TOP1, HistoryFilter.NO], [3], tiny_splits
        )
        assert [r.variant for r in rows] == ["mode=top1", "mode=no"]
        assert rows[0].jaccard == pytest.approx((0.2 + 0.03) / 2)
        assert fake_runs[0].config.encoder.history_filter is HistoryFilter.TOP1
        assert fake_runs[0].config.encoder.variant is EncoderVariant.NO_SELECTION

    def test_timer_records_each_run(
        self, fake_runs: list[RunRequest], tiny_splits: DatasetSplits
    ) -> None:
        orchestrator = ExperimentOrchestrator()
        orchestrator.ablation_suite(TrainConfig(dim=8), [EncoderVariant.FULL], [0, 1], tiny_splits)
        assert [s.name for s in orchestrator.timer.steps] == ["full seed=0", "full seed=1"]
        assert orchestrator.timer.by_group()["full"].steps == 2

    def test_unexpected_failure_wrapped(
        self, monkeypatch: pytest.MonkeyPatch, tiny_splits: DatasetSplits
    ) -> None:
        def boom(request: RunRequest, splits: DatasetSplits) -> RunOutcome:
            raise RuntimeError("boom")

        monkeypatch.setattr(pipeline, "execute_run", boom)
        request = RunRequest(label="full", group="full", config=TrainConfig(dim=8))
        with pytest.raises(ExperimentError, match="boom"):
            ExperimentOrchestrator().run([request], tiny_splits)


class TestExecuteRun:
    """Tests for one real training run."""

    def test_reports_carry_label_and_seed(self, tiny_splits: DatasetSplits) -> None:
        config = TrainConfig(dim=8, epochs=1, seed=2)
        request = RunRequest(label="sharp@0.4", group="sharp", config=config)
        outcome = execute_run(request, tiny_splits)
        assert outcome.seed == 2
        assert outcome.test_all.variant == "sharp@0.4"
        assert outcome.test_history.seed == 2
        assert outcome.test_history.n_visits < outcome.test_all.n_visits

    @pytest.mark.slow
    def test_parallel_matches_sequential(self, tiny_splits: DatasetSplits) -> None:
        config = TrainConfig(dim=8, epochs=1)
        requests = [
            RunRequest(label="full", group="full", config=config.with_overrides(seed=s))
            for s in (0, 1, 2)
        ]
        sequential = ExperimentOrchestrator(jobs=1).run(requests, tiny_splits)
        parallel = ExperimentOrchestrator(jobs=2).run(requests, tiny_splits)
        assert parallel == sequential
