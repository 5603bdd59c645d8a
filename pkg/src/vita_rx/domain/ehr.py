"""
EHR services — graph construction, adjacency normalisation, splitting and
visit similarity.

Pure functions over domain entities. Nothing here touches the filesystem or
the tensor engine.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from itertools import combinations

import numpy as np

from vita_rx.domain.entities import MedicationGraphs, PatientRecord, Visit, Vocab
from vita_rx.domain.exceptions import DatasetError
from vita_rx.domain.value_objects import HistoryFilter

log = logging.getLogger(__name__)

MIN_SPLIT_PATIENTS = 6


def build_graphs(
    train_records: Iterable[PatientRecord],
    ddi_edges: Iterable[tuple[int, int]],
    vocab: Vocab,
) -> MedicationGraphs:
    """Build the EHR co-prescription graph and the DDI graph.

    Args:
        train_records: Training split only; test prescriptions never enter A_EHR.
        ddi_edges: Undirected medication pairs. Self-loops are dropped.
        vocab: Vocabulary bounding every medication index.

    Returns:
        Symmetric, zero-diagonal binary adjacencies.

    Raises:
        DatasetError: If a DDI edge index is outside [0, n_rx).
    """
    n = vocab.n_rx
    a_ehr = np.zeros((n, n), dtype=np.int64)
    for record in train_records:
        for visit in record.visits:
            for i, j in combinations(visit.rx, 2):
                a_ehr[i, j] = a_ehr[j, i] = 1

    a_ddi = np.zeros((n, n), dtype=np.int64)
    for i, j in ddi_edges:
        if not (0 <= i < n and 0 <= j < n):
            raise DatasetError(f"DDI edge ({i}, {j}) out of range [0, {n})")
        if i == j:
            log.warning("⚠️  Dropping DDI self-loop on medication %d", i)
            continue
        a_ddi[i, j] = a_ddi[j, i] = 1

    return MedicationGraphs(a_ehr=a_ehr, a_ddi=a_ddi)


def graphs_from_edges(
    n_rx: int,
    ehr_edges: Iterable[tuple[int, int]],
    ddi_edges: Iterable[tuple[int, int]],
) -> MedicationGraphs:
    """Rebuild both adjacencies from stored edge lists."""
    mats = []
    for edges in (ehr_edges, ddi_edges):
        a = np.zeros((n_rx, n_rx), dtype=np.int64)
        for i, j in edges:
            if i != j:
                a[i, j] = a[j, i] = 1
        mats.append(a)
    return MedicationGraphs(a_ehr=mats[0], a_ddi=mats[1])


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """Symmetric GCN normalisation D̃^(-1/2) (A + I) D̃^(-1/2)."""
    a_tilde = np.asarray(a, dtype=np.float64) + np.eye(a.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return a_tilde * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def split_dataset(
    records: Sequence[PatientRecord], seed: int
) -> tuple[list[PatientRecord], list[PatientRecord], list[PatientRecord]]:
    """Patient-level 4/6, 1/6, 1/6 split; the rounding remainder goes to train.

    Each split keeps the input order of its patients.

    Raises:
        DatasetError: With fewer than 6 patients.
    """
    n = len(records)
    if n < MIN_SPLIT_PATIENTS:
        raise DatasetError(
            f"Need at least {MIN_SPLIT_PATIENTS} patients to split, got {n}"
        )
    n_eval = n // 6
    order = np.random.default_rng(seed).permutation(n)
    val_idx = sorted(order[:n_eval].tolist())
    test_idx = sorted(order[n_eval : 2 * n_eval].tolist())
    train_idx = sorted(order[2 * n_eval :].tolist())
    return (
        [records[i] for i in train_idx],
        [records[i] for i in val_idx],
        [records[i] for i in test_idx],
    )


def _tagged_codes(visit: Visit) -> set[tuple[str, int]]:
    return {("dx", c) for c in visit.dx} | {("px", c) for c in visit.px}


def visit_similarity(a: Visit, b: Visit) -> float:
    """Jaccard similarity of the diagnosis ⊎ procedure code sets.

    Medications are ignored. Two visits with no dx/px codes score 0.
    """
    sa, sb = _tagged_codes(a), _tagged_codes(b)
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


def filter_history(
    visits: Sequence[Visit], current: int, mode: HistoryFilter
) -> list[int]:
    """Positions (0-based, chronological) of the past visits that stay candidates.

    Args:
        visits: The patient's visits.
        current: 0-based position of the current visit.
        mode: ``all`` keeps every past visit, ``no`` none; ``top1``/``mid1``/``bot1``
            keep the single past visit with max/lower-median/min similarity to
            the current visit. Similarity ties go to the most recent visit.
    """
    past = list(range(current))
    if mode is HistoryFilter.ALL:
        return past
    if mode is HistoryFilter.NO or not past:
        return []

    target = visits[current]
    sims = {t: visit_similarity(visits[t], target) for t in past}
    if mode is HistoryFilter.TOP1:
        return [max(past, key=lambda t: (sims[t], t))]
    if mode is HistoryFilter.BOT1:
        return [min(past, key=lambda t: (sims[t], -t))]
    ranked = sorted(past, key=lambda t: (sims[t], t))
    return [ranked[(len(ranked) - 1) // 2]]


def medication_frequency(records: Iterable[PatientRecord], n_rx: int) -> list[int]:
    """Per-medication prescription count over every visit of ``records``."""
    counts = [0] * n_rx
    for record in records:
        for visit in record.visits:
            for m in visit.rx:
                counts[m] += 1
    return counts
