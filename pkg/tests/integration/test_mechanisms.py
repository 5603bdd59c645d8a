"""Directional checks of the selection mechanism on a noisy synthetic cohort.

Half of every patient's past visits come from a foreign cluster, so history
helps only when the relevant visits are the ones attended to.
"""

from __future__ import annotations

import pytest

from vita_rx.application.dto import DatasetSplits
from vita_rx.application.evaluation import selected_visit_analysis
from vita_rx.application.pipeline import ExperimentOrchestrator, prepare_splits
from vita_rx.application.synthetic import generate_synthetic
from vita_rx.application.training import train
from vita_rx.core.config import SynthConfig, TrainConfig
from vita_rx.domain.entities import MetricsReport, MetricsSummary
from vita_rx.domain.value_objects import EncoderVariant, HistoryFilter

pytestmark = [pytest.mark.integration, pytest.mark.slow]

SEEDS = [0, 1, 2, 3, 4]


@pytest.fixture(scope="module")
def noisy_splits() -> DatasetSplits:
    cohort = generate_synthetic(SynthConfig(n_patients=300, relevance_noise=0.5, seed=0))
    return prepare_splits(cohort.dataset, seed=0)


@pytest.fixture(scope="module")
def base_config() -> TrainConfig:
    return TrainConfig(dim=16, learning_rate=0.01, epochs=25, patience=5)


def _mean_jaccard(rows: list[MetricsReport]) -> dict[str, float]:
    return {s.variant: s.mean["jaccard"] for s in MetricsSummary.group(rows)}


class TestMechanisms:
    """Orderings between history filters and encoder variants."""

    def test_relevant_history_beats_irrelevant_history(
        self, noisy_splits: DatasetSplits, base_config: TrainConfig
    ) -> None:
        modes = [HistoryFilter.TOP1, HistoryFilter.BOT1, HistoryFilter.ALL, HistoryFilter.NO]
        rows = ExperimentOrchestrator(jobs=4).motivation_experiment(
            base_config.with_overrides(variant=EncoderVariant.NO_SELECTION),
            modes,
            SEEDS,
            noisy_splits,
        )
        jaccard = _mean_jaccard(rows)
        assert jaccard["mode=top1"] > jaccard["mode=bot1"]
        assert jaccard["mode=all"] > jaccard["mode=no"]

    def test_selection_is_no_worse_than_ablations(
        self, noisy_splits: DatasetSplits, base_config: TrainConfig
    ) -> None:
        variants = [EncoderVariant.FULL, EncoderVariant.NO_SELECTION, EncoderVariant.MEAN_POOL]
        result = ExperimentOrchestrator(jobs=4).ablation_suite(
            base_config, variants, SEEDS, noisy_splits
        )
        jaccard = _mean_jaccard(result.rows)
        assert jaccard["full"] >= jaccard["no_selection"]
        assert jaccard["full"] >= jaccard["mean_pool"]

    def test_selected_visits_are_more_similar(
        self, noisy_splits: DatasetSplits, base_config: TrainConfig
    ) -> None:
        result = train(
            noisy_splits.train,
            noisy_splits.val,
            noisy_splits.graphs,
            noisy_splits.vocab,
            base_config,
        )
        report = selected_visit_analysis(result.model, noisy_splits.test)
        assert not report.selected.is_empty
        assert not report.unselected.is_empty
        assert report.selected.mean is not None and report.unselected.mean is not None
        assert report.selected.mean > report.unselected.mean
