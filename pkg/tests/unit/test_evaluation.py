"""Tests for test-split evaluation and the selected-visit analysis."""

from __future__ import annotations

import numpy as np
import pytest

from vita_rx.application.evaluation import (
    check_vocab,
    evaluate,
    evaluate_split,
    selected_visit_analysis,
)
from vita_rx.core.config import TrainConfig
from vita_rx.domain.entities import MedicationGraphs, PatientRecord, Vocab
from vita_rx.domain.exceptions import EvaluationError
from vita_rx.domain.value_objects import PraucScoring
from vita_rx.model.vita import VitaModel


class TestEvaluateSplit:
    """Tests for metric aggregation over a split."""

    def test_scopes(self, model: VitaModel, records: list[PatientRecord]) -> None:
        result = evaluate_split(model, records)
        assert result.all_visits.n_visits == 5
        assert result.all_visits.n_patients == 2
        assert result.with_history.n_visits == 3
        assert result.with_history.n_skipped == 2
        assert len(result.outcomes) == 5
        for report in (result.all_visits, result.with_history):
            for value in (report.jaccard, report.f1, report.prauc, report.ddi_rate):
                assert 0.0 <= value <= 1.0

    def test_labels(self, model: VitaModel, records: list[PatientRecord]) -> None:
        default = evaluate_split(model, records)
        assert default.all_visits.variant == "full"
        assert default.all_visits.seed == model.config.seed
        labelled = evaluate_split(model, records, seed=9, variant="sharp@0.4")
        assert labelled.with_history.variant == "sharp@0.4"
        assert labelled.with_history.seed == 9

    def test_outcome_metrics_match_sets(
        self, model: VitaModel, records: list[PatientRecord]
    ) -> None:
        for o in evaluate_split(model, records).outcomes:
            union = o.predicted | o.truth
            expected = len(o.predicted & o.truth) / len(union) if union else 0.0
            assert o.jaccard == pytest.approx(expected)

    def test_evaluate_selects_scope(self, model: VitaModel, records: list[PatientRecord]) -> None:
        assert evaluate(model, records).n_visits == 5
        assert evaluate(model, records, include_first_visit=False).n_visits == 3

    def test_mean_step_scoring(
        self, vocab: Vocab, graphs: MedicationGraphs, records: list[PatientRecord]
    ) -> None:
        config = TrainConfig(dim=8).with_overrides(prauc_scoring=PraucScoring.MEAN_STEPS)
        model = VitaModel.initialise(vocab, config, graphs)
        report = evaluate_split(model, records).all_visits
        assert 0.0 <= report.prauc <= 1.0

    def test_deterministic(self, model: VitaModel, records: list[PatientRecord]) -> None:
        assert evaluate_split(model, records).all_visits == evaluate_split(
            model, records
        ).all_visits


class TestCheckVocab:
    """Tests for checkpoint/dataset vocabulary agreement."""

    def test_mismatch(self, model: VitaModel) -> None:
        with pytest.raises(EvaluationError, match="does not match"):
            check_vocab(model, Vocab(n_dx=6, n_px=4, n_rx=7))

    def test_match(self, model: VitaModel, vocab: Vocab) -> None:
        check_vocab(model, vocab)


class TestSelectedVisitAnalysis:
    """Tests for the similarity analysis of selected past visits."""

    def test_partitions_cover_every_past_visit(
        self, model: VitaModel, records: list[PatientRecord]
    ) -> None:
        report = selected_visit_analysis(model, records)
        assert report.overall.count == 4
        assert report.selected.count + report.unselected.count == 4
        assert report.variant == "full"

    def test_everything_selected(self, model: VitaModel, records: list[PatientRecord]) -> None:
        model.params["enc.w_s"].values[...] = 0.0
        model.params["enc.b_s"].values[...] = 5.0
        report = selected_visit_analysis(model, records)
        assert report.selected.count == 4
        assert report.unselected.is_empty
        assert report.mean_ratio is None

    def test_rejects_variant_without_selection(
        self, vocab: Vocab, graphs: MedicationGraphs, records: list[PatientRecord]
    ) -> None:
        config = TrainConfig(dim=8).with_overrides(variant="rs")
        model = VitaModel.initialise(vocab, config, graphs)
        with pytest.raises(EvaluationError, match="no relevant-visit selection"):
            selected_visit_analysis(model, records)

    def test_rejects_split_without_history(
        self, model: VitaModel, records: list[PatientRecord]
    ) -> None:
        single = [PatientRecord(id="s", visits=records[0].visits[:1])]
        with pytest.raises(EvaluationError, match="No past visits"):
            selected_visit_analysis(model, single)

    def test_similarities_in_unit_interval(
        self, model: VitaModel, records: list[PatientRecord]
    ) -> None:
        report = selected_visit_analysis(model, records)
        assert report.overall.min is not None and report.overall.max is not None
        assert 0.0 <= report.overall.min <= report.overall.max <= 1.0
        assert np.isfinite(report.overall.mean or 0.0)
