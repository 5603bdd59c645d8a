"""
Set-prediction metrics: Jaccard, F1, average-precision PRAUC and DDI rate.

Accuracy metrics are computed per visit and aggregated patient-first: the
mean over a patient's evaluated visits, then the mean over patients. The DDI
rate is a single pooled ratio over all predicted medication pairs.
"""

from __future__ import annotations

from collections.abc import Collection, Iterable, Sequence
from itertools import combinations

import numpy as np


def jaccard_score(pred: Collection[int], truth: Collection[int]) -> float:
    """|pred ∩ truth| / |pred ∪ truth|."""
    p, t = set(pred), set(truth)
    union = p | t
    return len(p & t) / len(union) if union else 0.0


def f1_score(pred: Collection[int], truth: Collection[int]) -> float:
    """2PR / (P + R), computed as 2|pred ∩ truth| / (|pred| + |truth|); 0 without overlap."""
    p, t = set(pred), set(truth)
    hit = len(p & t)
    return 2 * hit / (len(p) + len(t)) if hit else 0.0


def prauc_score(scores: Sequence[float] | np.ndarray, truth: Collection[int]) -> float:
    """Average precision of ``scores`` over |M| against the true medication set.

    Medications are ranked by descending score with ties broken by index.
    """
    t = set(truth)
    if not t:
        return 0.0
    s = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(s.size), -s))
    relevant = np.isin(order, list(t)).astype(np.float64)
    precision_at_k = np.cumsum(relevant) / np.arange(1, s.size + 1)
    return float(np.sum(precision_at_k * relevant) / len(t))


def ddi_rate(pred_sets: Iterable[Collection[int]], a_ddi: np.ndarray) -> float:
    """Share of unordered predicted pairs, pooled over visits, that are DDI edges."""
    pairs = 0
    bad = 0
    for pred in pred_sets:
        for i, j in combinations(sorted(set(pred)), 2):
            pairs += 1
            bad += int(a_ddi[i, j] == 1 or a_ddi[j, i] == 1)
    return bad / pairs if pairs else 0.0


def patient_mean(per_patient: Sequence[Sequence[float]]) -> float:
    """Mean over patients of each patient's mean; patients with no visits are ignored."""
    means = [float(np.mean(v)) for v in per_patient if len(v)]
    return float(np.mean(means)) if means else 0.0
