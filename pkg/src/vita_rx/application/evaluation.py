"""
Evaluation — decode a split, score it, and analyse which past visits the
selection module keeps.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from vita_rx.application.metrics import (
    ddi_rate,
    f1_score,
    jaccard_score,
    patient_mean,
    prauc_score,
)
from vita_rx.domain.ehr import visit_similarity
from vita_rx.domain.entities import (
    AnalysisReport,
    MetricsReport,
    PatientRecord,
    SimilarityStats,
    Vocab,
)
from vita_rx.domain.exceptions import EvaluationError
from vita_rx.domain.value_objects import PraucScoring
from vita_rx.model.vita import VitaModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VisitOutcome:
    """Decoded set and ranking scores of one evaluated visit."""

    patient_id: str
    position: int
    predicted: frozenset[int]
    truth: frozenset[int]
    jaccard: float
    f1: float
    prauc: float


@dataclass(frozen=True)
class SplitEvaluation:
    """Metrics over every visit and over visits that have history."""

    all_visits: MetricsReport
    with_history: MetricsReport
    outcomes: tuple[VisitOutcome, ...] = ()


def check_vocab(model: VitaModel, vocab: Vocab) -> None:
    """Raises EvaluationError if the model and dataset vocabularies differ."""
    if model.vocab != vocab:
        raise EvaluationError(
            f"Checkpoint vocab (dx={model.vocab.n_dx}, px={model.vocab.n_px}, "
            f"rx={model.vocab.n_rx}) does not match dataset vocab "
            f"(dx={vocab.n_dx}, px={vocab.n_px}, rx={vocab.n_rx})"
        )


def _report(
    outcomes: Sequence[VisitOutcome],
    model: VitaModel,
    seed: int,
    variant: str,
    n_skipped: int,
) -> MetricsReport:
    by_patient: dict[str, list[VisitOutcome]] = {}
    for o in outcomes:
        by_patient.setdefault(o.patient_id, []).append(o)
    groups = list(by_patient.values())
    return MetricsReport(
        jaccard=patient_mean([[o.jaccard for o in g] for g in groups]),
        f1=patient_mean([[o.f1 for o in g] for g in groups]),
        prauc=patient_mean([[o.prauc for o in g] for g in groups]),
        ddi_rate=ddi_rate((o.predicted for o in outcomes), model.graphs.a_ddi),
        n_patients=len(groups),
        n_visits=len(outcomes),
        seed=seed,
        variant=variant,
        n_skipped=n_skipped,
    )


def evaluate_split(
    model: VitaModel,
    records: Sequence[PatientRecord],
    *,
    seed: int | None = None,
    variant: str | None = None,
) -> SplitEvaluation:
    """Decode every visit of every patient and aggregate both evaluation scopes.

    First visits have no history; they count in ``all_visits`` and are skipped
    (and counted) in ``with_history``.
    """
    seed = model.config.seed if seed is None else seed
    variant = model.config.encoder.variant.value if variant is None else variant
    scoring = model.config.evaluation.prauc_scoring
    fused = model.medication_embeddings()

    outcomes: list[VisitOutcome] = []
    for record in records:
        encodings = model.encode_patient(record, eval_mode=True)
        for current, visit in enumerate(record.visits):
            result = model.decode_visit(record, current, encodings, fused)
            scores = (
                result.mean_steps if scoring is PraucScoring.MEAN_STEPS else result.first_step
            )
            pred = frozenset(result.predicted)
            outcomes.append(
                VisitOutcome(
                    patient_id=record.id,
                    position=current,
                    predicted=pred,
                    truth=frozenset(visit.rx),
                    jaccard=jaccard_score(pred, visit.rx),
                    f1=f1_score(pred, visit.rx),
                    prauc=prauc_score(scores, visit.rx),
                )
            )

    history = [o for o in outcomes if o.position > 0]
    evaluation = SplitEvaluation(
        all_visits=_report(outcomes, model, seed, variant, n_skipped=0),
        with_history=_report(history, model, seed, variant, n_skipped=len(outcomes) - len(history)),
        outcomes=tuple(outcomes),
    )
    log.info(
        "📊 %s seed=%d: Jaccard %.4f, PRAUC %.4f, F1 %.4f, DDI %.4f over %d visits",
        variant,
        seed,
        evaluation.all_visits.jaccard,
        evaluation.all_visits.prauc,
        evaluation.all_visits.f1,
        evaluation.all_visits.ddi_rate,
        evaluation.all_visits.n_visits,
    )
    return evaluation


def evaluate(
    model: VitaModel,
    records: Sequence[PatientRecord],
    *,
    include_first_visit: bool = True,
    seed: int | None = None,
    variant: str | None = None,
) -> MetricsReport:
    """Metrics over ``records``; ``include_first_visit=False`` keeps visits with history."""
    result = evaluate_split(model, records, seed=seed, variant=variant)
    return result.all_visits if include_first_visit else result.with_history


def selected_visit_analysis(
    model: VitaModel, records: Sequence[PatientRecord], variant: str | None = None
) -> AnalysisReport:
    """Similarity to the current visit of selected vs. unselected past visits.

    Raises:
        EvaluationError: If the variant has no selection module or no visit has history.
    """
    enc_variant = model.config.encoder.variant
    if not enc_variant.uses_selection:
        raise EvaluationError(
            f"Variant '{enc_variant.value}' has no relevant-visit selection to analyse"
        )

    selected: list[float] = []
    unselected: list[float] = []
    for record in records:
        encodings = model.encode_patient(record, eval_mode=True)
        for current in range(1, len(record.visits)):
            mask = encodings[current].selection_mask
            target = record.visits[current]
            for t in range(current):
                sim = visit_similarity(record.visits[t], target)
                (selected if mask[t] else unselected).append(sim)

    if not selected and not unselected:
        raise EvaluationError("No past visits in the split; nothing to analyse")

    report = AnalysisReport(
        selected=SimilarityStats.from_values(selected),
        unselected=SimilarityStats.from_values(unselected),
        overall=SimilarityStats.from_values(selected + unselected),
        variant=variant or enc_variant.value,
    )
    for name, block in (("selected", report.selected), ("unselected", report.unselected)):
        if block.is_empty:
            log.warning("⚠️  No %s past visits in the analysis", name)
    log.info(
        "🔍 Selected %d / %d past visits, mean similarity %s vs %s",
        report.selected.count,
        report.overall.count,
        f"{report.selected.mean:.4f}" if report.selected.mean is not None else "n/a",
        f"{report.unselected.mean:.4f}" if report.unselected.mean is not None else "n/a",
    )
    return report
