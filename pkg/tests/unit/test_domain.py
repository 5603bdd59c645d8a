"""Tests for domain entities, value objects and EHR services."""

from __future__ import annotations

import numpy as np
import pytest

from vita_rx.domain.ehr import (
    build_graphs,
    filter_history,
    graphs_from_edges,
    medication_frequency,
    normalize_adjacency,
    split_dataset,
    visit_similarity,
)
from vita_rx.domain.entities import (
    AnalysisReport,
    MedicationGraphs,
    MetricsReport,
    MetricsSummary,
    PatientRecord,
    SimilarityStats,
    Visit,
    Vocab,
)
from vita_rx.domain.exceptions import DatasetError
from vita_rx.domain.value_objects import EncoderVariant, HistoryFilter


def _report(variant: str, seed: int, jaccard: float) -> MetricsReport:
    return MetricsReport(
        jaccard=jaccard,
        f1=0.5,
        prauc=0.5,
        ddi_rate=0.0,
        n_patients=1,
        n_visits=2,
        seed=seed,
        variant=variant,
    )


def _patients(n: int) -> list[PatientRecord]:
    visit = Visit(dx=(0,), px=(0,), rx=(0,))
    return [PatientRecord(id=f"p{i}", visits=(visit, visit)) for i in range(n)]


class TestValueObjects:
    """Tests for enum parsing."""

    def test_variant_aliases(self) -> None:
        assert EncoderVariant.from_str("rs") is EncoderVariant.NO_SELECTION
        assert EncoderVariant.from_str("TA-RNN") is EncoderVariant.RNN
        assert EncoderVariant.from_str("std_attention") is EncoderVariant.STD_ATTENTION

    def test_unknown_variant_lists_choices(self) -> None:
        with pytest.raises(ValueError, match="Supported"):
            EncoderVariant.from_str("lstm")

    def test_selection_flag(self) -> None:
        assert EncoderVariant.FULL.uses_selection
        assert EncoderVariant.MEAN_POOL.uses_selection
        assert not EncoderVariant.NO_SELECTION.uses_selection
        assert not EncoderVariant.SHARP.uses_selection

    def test_display_names(self) -> None:
        assert EncoderVariant.FULL.display_name == "VITA"
        assert EncoderVariant.TOP1.display_name == "VITA-RS_Top-1"

    def test_history_filter_parsing(self) -> None:
        assert HistoryFilter.from_str("Top1") is HistoryFilter.TOP1
        assert HistoryFilter.TOP1.needs_history
        assert not HistoryFilter.ALL.needs_history
        with pytest.raises(ValueError, match="Unsupported history mode"):
            HistoryFilter.from_str("top2")


class TestEntities:
    """Tests for records and graphs."""

    def test_visit_codes_are_sorted_sets(self) -> None:
        visit = Visit(dx=(3, 1, 3), px=(2,), rx=(5, 0))
        assert visit.dx == (1, 3)
        assert visit.rx == (0, 5)

    def test_code_vector_offsets_procedures(self) -> None:
        vec = Visit(dx=(1,), px=(0,)).code_vector(Vocab(n_dx=2, n_px=2, n_rx=1))
        np.testing.assert_array_equal(vec, [0.0, 1.0, 1.0, 0.0])

    def test_vocab_rejects_empty(self) -> None:
        with pytest.raises(DatasetError, match="n_rx"):
            Vocab(n_dx=1, n_px=1, n_rx=0)

    def test_validate_single_visit(self, vocab: Vocab) -> None:
        record = PatientRecord(id="x", visits=(Visit(dx=(0,), px=(0,), rx=(0,)),))
        with pytest.raises(DatasetError, match="at least 2"):
            record.validate(vocab)

    def test_validate_names_patient_and_visit(self, vocab: Vocab) -> None:
        record = PatientRecord(
            id="x",
            visits=(Visit(dx=(0,), px=(0,), rx=(0,)), Visit(dx=(0,), px=(0,), rx=(9,))),
        )
        with pytest.raises(DatasetError, match="'x' visit 2: rx index 9"):
            record.validate(vocab)

    def test_validate_empty_codes(self, vocab: Vocab) -> None:
        record = PatientRecord(
            id="x",
            visits=(Visit(dx=(0,), px=(0,), rx=(0,)), Visit(dx=(0,), px=(), rx=(0,))),
        )
        with pytest.raises(DatasetError, match="nonempty"):
            record.validate(vocab)

    def test_graphs_must_be_symmetric(self) -> None:
        a = np.array([[0, 1], [0, 0]])
        with pytest.raises(DatasetError, match="symmetric"):
            MedicationGraphs(a_ehr=a, a_ddi=np.zeros((2, 2)))

    def test_edges_of_upper_triangle(self) -> None:
        a = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
        assert MedicationGraphs.edges_of(a) == [(0, 1), (0, 2)]


class TestBuildGraphs:
    """Tests for graph construction."""

    def test_co_prescription_edges(
        self, records: list[PatientRecord], graphs: MedicationGraphs
    ) -> None:
        assert MedicationGraphs.edges_of(graphs.a_ehr) == [
            (0, 1),
            (0, 4),
            (1, 4),
            (2, 3),
            (4, 5),
        ]
        assert MedicationGraphs.edges_of(graphs.a_ddi) == [(0, 2), (1, 4)]

    def test_ddi_self_loop_dropped(self, records: list[PatientRecord], vocab: Vocab) -> None:
        graphs = build_graphs(records, [(3, 3)], vocab)
        assert graphs.a_ddi.sum() == 0

    def test_ddi_out_of_range(self, records: list[PatientRecord], vocab: Vocab) -> None:
        with pytest.raises(DatasetError, match="out of range"):
            build_graphs(records, [(0, 6)], vocab)

    def test_matches_pair_enumeration_on_random_corpus(self) -> None:
        rng = np.random.default_rng(11)
        vocab = Vocab(n_dx=3, n_px=3, n_rx=9)

        def visit() -> Visit:
            k = int(rng.integers(1, 5))
            rx = tuple(int(m) for m in rng.choice(vocab.n_rx, size=k, replace=False))
            return Visit(dx=(0,), px=(0,), rx=rx)

        # 20 visits over 8 patients; the last 3 patients are held out
        sizes = [3, 2, 3, 2, 3, 2, 3, 2]
        corpus = [
            PatientRecord(id=f"p{i}", visits=tuple(visit() for _ in range(n)))
            for i, n in enumerate(sizes)
        ]
        train, held_out = corpus[:5], corpus[5:]
        ddi = [tuple(int(x) for x in rng.integers(0, vocab.n_rx, size=2)) for _ in range(12)]

        graphs = build_graphs(train, ddi, vocab)

        train_visits = [v for r in train for v in r.visits]
        for i in range(vocab.n_rx):
            for j in range(vocab.n_rx):
                co_prescribed = i != j and any(i in v.rx and j in v.rx for v in train_visits)
                interacting = i != j and ((i, j) in ddi or (j, i) in ddi)
                assert graphs.a_ehr[i, j] == int(co_prescribed), (i, j)
                assert graphs.a_ddi[i, j] == int(interacting), (i, j)

        held_only = {
            (i, j)
            for r in held_out
            for v in r.visits
            for i in v.rx
            for j in v.rx
            if i < j and not any(i in w.rx and j in w.rx for w in train_visits)
        }
        assert all(graphs.a_ehr[i, j] == 0 for i, j in held_only)

    def test_graphs_from_edges_round_trip(self, graphs: MedicationGraphs) -> None:
        rebuilt = graphs_from_edges(
            graphs.n_rx,
            MedicationGraphs.edges_of(graphs.a_ehr),
            MedicationGraphs.edges_of(graphs.a_ddi),
        )
        np.testing.assert_array_equal(rebuilt.a_ehr, graphs.a_ehr)
        np.testing.assert_array_equal(rebuilt.a_ddi, graphs.a_ddi)

    def test_medication_frequency(self, records: list[PatientRecord]) -> None:
        assert medication_frequency(records, 6) == [2, 2, 1, 1, 2, 2]


class TestNormalizeAdjacency:
    """Tests for the symmetric GCN normalisation."""

    def test_single_edge(self) -> None:
        a_hat = normalize_adjacency(np.array([[0, 1], [1, 0]]))
        np.testing.assert_allclose(a_hat, np.full((2, 2), 0.5))

    def test_isolated_node_keeps_self_loop(self) -> None:
        a_hat = normalize_adjacency(np.zeros((3, 3)))
        np.testing.assert_allclose(a_hat, np.eye(3))

    def test_path_graph(self) -> None:
        a_hat = normalize_adjacency(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]))
        assert a_hat[0, 1] == pytest.approx(1.0 / np.sqrt(2 * 3))
        assert a_hat[1, 1] == pytest.approx(1.0 / 3)
        np.testing.assert_allclose(a_hat, a_hat.T)


class TestSplitDataset:
    """Tests for patient-level splitting."""

    def test_split_sizes_and_disjointness(self) -> None:
        patients = _patients(13)
        train, val, test = split_dataset(patients, seed=3)
        assert (len(train), len(val), len(test)) == (9, 2, 2)
        ids = [p.id for p in [*train, *val, *test]]
        assert sorted(ids) == sorted(p.id for p in patients)

    def test_split_keeps_input_order(self) -> None:
        patients = _patients(12)
        for part in split_dataset(patients, seed=1):
            positions = [patients.index(p) for p in part]
            assert positions == sorted(positions)

    def test_split_is_deterministic(self) -> None:
        patients = _patients(12)
        assert split_dataset(patients, seed=5) == split_dataset(patients, seed=5)

    def test_too_few_patients(self) -> None:
        with pytest.raises(DatasetError, match="at least 6"):
            split_dataset(_patients(5), seed=0)


class TestVisitSimilarity:
    """Tests for code-set Jaccard similarity."""

    def test_partial_overlap(self) -> None:
        a = Visit(dx=(0, 1), px=(0,))
        b = Visit(dx=(0,), px=(0, 1))
        assert visit_similarity(a, b) == pytest.approx(0.5)

    def test_dx_and_px_codes_are_distinct(self) -> None:
        assert visit_similarity(Visit(dx=(0,), px=(1,)), Visit(dx=(1,), px=(0,))) == 0.0

    def test_medications_ignored(self) -> None:
        a = Visit(dx=(0,), px=(0,), rx=(1,))
        b = Visit(dx=(0,), px=(0,), rx=(2,))
        assert visit_similarity(a, b) == 1.0


class TestFilterHistory:
    """Tests for past-visit candidate filters."""

    def test_modes_on_three_visits(self, patient: PatientRecord) -> None:
        visits = patient.visits
        assert filter_history(visits, 2, HistoryFilter.ALL) == [0, 1]
        assert filter_history(visits, 2, HistoryFilter.NO) == []
        assert filter_history(visits, 2, HistoryFilter.TOP1) == [0]
        assert filter_history(visits, 2, HistoryFilter.BOT1) == [1]
        assert filter_history(visits, 2, HistoryFilter.MID1) == [1]

    @pytest.mark.parametrize(
        "mode", [HistoryFilter.ALL, HistoryFilter.TOP1, HistoryFilter.MID1, HistoryFilter.BOT1]
    )
    def test_single_past_visit_always_kept(
        self, patient: PatientRecord, mode: HistoryFilter
    ) -> None:
        assert filter_history(patient.visits, 1, mode) == [0]

    def test_first_visit_has_no_candidates(self, patient: PatientRecord) -> None:
        for mode in HistoryFilter:
            assert filter_history(patient.visits, 0, mode) == []

    def test_ties_go_to_most_recent(self) -> None:
        same = Visit(dx=(0,), px=(0,), rx=(0,))
        visits = [same, same, same, Visit(dx=(0,), px=(1,), rx=(0,))]
        assert filter_history(visits, 3, HistoryFilter.TOP1) == [2]
        assert filter_history(visits, 3, HistoryFilter.BOT1) == [2]


class TestReports:
    """Tests for report aggregates."""

    def test_summary_groups_in_first_seen_order(self) -> None:
        rows = [_report("b", 0, 0.2), _report("a", 0, 0.5), _report("b", 1, 0.4)]
        summaries = MetricsSummary.group(rows)
        assert [s.variant for s in summaries] == ["b", "a"]
        assert summaries[0].n_seeds == 2
        assert summaries[0].mean["jaccard"] == pytest.approx(0.3)
        assert summaries[0].std["jaccard"] == pytest.approx(0.1)
        assert summaries[1].std["jaccard"] == 0.0

    def test_similarity_stats(self) -> None:
        stats = SimilarityStats.from_values([0.0, 0.25, 0.5, 0.75, 1.0])
        assert stats.count == 5
        assert (stats.min, stats.q1, stats.median, stats.q3, stats.max) == (
            0.0,
            0.25,
            0.5,
            0.75,
            1.0,
        )
        assert SimilarityStats.from_values([]).is_empty

    def test_mean_ratio(self) -> None:
        report = AnalysisReport(
            selected=SimilarityStats.from_values([0.4]),
            unselected=SimilarityStats.from_values([0.2]),
            overall=SimilarityStats.from_values([0.4, 0.2]),
        )
        assert report.mean_ratio == pytest.approx(2.0)
        empty = AnalysisReport(
            selected=SimilarityStats.from_values([0.4]),
            unselected=SimilarityStats.from_values([]),
            overall=SimilarityStats.from_values([0.4]),
        )
        assert empty.mean_ratio is None
