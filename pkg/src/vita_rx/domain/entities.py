"""
Domain Entities — patient records, graphs, reports and checkpoints.

Records are immutable after construction so they can be shared freely
between evaluation workers. Code sets are stored as sorted, deduplicated
tuples; ordering is only for determinism, the sets carry no order.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from vita_rx.domain.exceptions import DatasetError


def _as_code_tuple(codes: Any) -> tuple[int, ...]:
    return tuple(sorted({int(c) for c in codes}))


@dataclass(frozen=True)
class Vocab:
    """Code vocabulary sizes: |D| diagnoses, |P| procedures, |M| medications."""

    n_dx: int
    n_px: int
    n_rx: int

    def __post_init__(self) -> None:
        for name in ("n_dx", "n_px", "n_rx"):
            if getattr(self, name) < 1:
                raise DatasetError(f"Vocab.{name} must be >= 1, got {getattr(self, name)}")

    @property
    def n_codes(self) -> int:
        """Width of the concatenated diagnosis/procedure multi-hot vector."""
        return self.n_dx + self.n_px

    @property
    def end_token(self) -> int:
        """Class index of <END> in the |M|+1 output distribution."""
        return self.n_rx


@dataclass(frozen=True)
class Visit:
    """One encounter: diagnosis, procedure and medication code sets."""

    dx: tuple[int, ...]
    px: tuple[int, ...]
    rx: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "dx", _as_code_tuple(self.dx))
        object.__setattr__(self, "px", _as_code_tuple(self.px))
        object.__setattr__(self, "rx", _as_code_tuple(self.rx))

    def code_vector(self, vocab: Vocab) -> np.ndarray:
        """Multi-hot concat(d, p) over |D| + |P|."""
        vec = np.zeros(vocab.n_codes, dtype=np.float64)
        vec[list(self.dx)] = 1.0
        vec[[vocab.n_dx + p for p in self.px]] = 1.0
        return vec


@dataclass(frozen=True)
class PatientRecord:
    """A patient's chronological visits."""

    id: str
    visits: tuple[Visit, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "visits", tuple(self.visits))

    def __len__(self) -> int:
        return len(self.visits)

    def validate(self, vocab: Vocab) -> None:
        """Check every index against the vocabulary and the visit invariants.

        Raises:
            DatasetError: Naming the patient and the 1-based visit position.
        """
        if len(self.visits) < 2:
            raise DatasetError(
                f"Patient '{self.id}' has {len(self.visits)} visit(s); at least 2 are required"
            )
        limits = {"dx": vocab.n_dx, "px": vocab.n_px, "rx": vocab.n_rx}
        for pos, visit in enumerate(self.visits, 1):
            for kind, limit in limits.items():
                codes: tuple[int, ...] = getattr(visit, kind)
                bad = [c for c in codes if c < 0 or c >= limit]
                if bad:
                    raise DatasetError(
                        f"Patient '{self.id}' visit {pos}: {kind} index {bad[0]} "
                        f"out of range [0, {limit})"
                    )
            if not visit.dx or not visit.px:
                raise DatasetError(f"Patient '{self.id}' visit {pos}: dx and px must be nonempty")
            if not visit.rx:
                raise DatasetError(f"Patient '{self.id}' visit {pos}: rx must be nonempty")


@dataclass(frozen=True)
class EhrDataset:
    """Vocabulary, patients and the undirected DDI edge list."""

    vocab: Vocab
    patients: tuple[PatientRecord, ...]
    ddi_edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "patients", tuple(self.patients))
        object.__setattr__(
            self, "ddi_edges", tuple((int(i), int(j)) for i, j in self.ddi_edges)
        )


@dataclass(frozen=True, eq=False)
class MedicationGraphs:
    """Binary |M|×|M| adjacency matrices of the EHR and DDI graphs."""

    a_ehr: np.ndarray
    a_ddi: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a_ehr", "a_ddi"):
            a = getattr(self, name)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise DatasetError(f"{name} must be square, got shape {a.shape}")
            if not np.array_equal(a, a.T):
                raise DatasetError(f"{name} must be symmetric")
            if np.any(np.diag(a) != 0):
                raise DatasetError(f"{name} must have a zero diagonal")
            if not np.all((a == 0) | (a == 1)):
                raise DatasetError(f"{name} entries must be 0 or 1")
        if self.a_ehr.shape != self.a_ddi.shape:
            raise DatasetError(
                f"EHR graph shape {self.a_ehr.shape} != DDI graph shape {self.a_ddi.shape}"
            )

    @property
    def n_rx(self) -> int:
        return int(self.a_ehr.shape[0])

    @staticmethod
    def edges_of(a: np.ndarray) -> list[tuple[int, int]]:
        """Upper-triangle edge list (i < j) of a symmetric adjacency."""
        rows, cols = np.nonzero(np.triu(a, k=1))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated accuracy and safety metrics for one (variant, seed) run.

    Attributes:
        jaccard: Patient-then-visit mean Jaccard.
        f1: Patient-then-visit mean F1.
        prauc: Patient-then-visit mean average precision.
        ddi_rate: Fraction of predicted medication pairs that are DDI edges.
        n_patients: Patients contributing at least one visit.
        n_visits: Evaluated visits.
        seed: Seed of the run that produced the model.
        variant: Variant label (e.g. ``full``, ``sharp@0.4``, ``mode=top1``).
        n_skipped: Visits left out of the aggregate (e.g. first visits).
    """

    jaccard: float
    f1: float
    prauc: float
    ddi_rate: float
    n_patients: int
    n_visits: int
    seed: int
    variant: str
    n_skipped: int = 0

    def as_row(self) -> dict[str, Any]:
        return {
            "variant": self.variant,
            "seed": self.seed,
            "jaccard": self.jaccard,
            "prauc": self.prauc,
            "f1": self.f1,
            "ddi_rate": self.ddi_rate,
            "n_patients": self.n_patients,
            "n_visits": self.n_visits,
            "n_skipped": self.n_skipped,
        }


METRIC_NAMES: tuple[str, ...] = ("jaccard", "prauc", "f1", "ddi_rate")


@dataclass(frozen=True)
class MetricsSummary:
    """Mean and population std of each metric over the seeds of one variant label."""

    variant: str
    n_seeds: int
    mean: dict[str, float]
    std: dict[str, float]

    @classmethod
    def group(cls, reports: Sequence[MetricsReport]) -> list[MetricsSummary]:
        """One summary per variant label, in first-seen order."""
        groups: dict[str, list[MetricsReport]] = {}
        for report in reports:
            groups.setdefault(report.variant, []).append(report)
        summaries = []
        for label, members in groups.items():
            values = {
                m: np.array([getattr(r, m) for r in members], dtype=np.float64)
                for m in METRIC_NAMES
            }
            summaries.append(
                cls(
                    variant=label,
                    n_seeds=len(members),
                    mean={m: float(v.mean()) for m, v in values.items()},
                    std={m: float(v.std()) for m, v in values.items()},
                )
            )
        return summaries


@dataclass(frozen=True)
class SimilarityStats:
    """Five-number summary plus mean of a similarity sample."""

    count: int
    min: float | None = None
    q1: float | None = None
    median: float | None = None
    q3: float | None = None
    max: float | None = None
    mean: float | None = None

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    @classmethod
    def from_values(cls, values: list[float]) -> SimilarityStats:
        if not values:
            return cls(count=0)
        arr = np.asarray(values, dtype=np.float64)
        q1, median, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
        return cls(
            count=len(values),
            min=float(arr.min()),
            q1=float(q1),
            median=float(median),
            q3=float(q3),
            max=float(arr.max()),
            mean=float(arr.mean()),
        )


@dataclass(frozen=True)
class AnalysisReport:
    """Similarity of selected vs. unselected past visits to the current visit."""

    selected: SimilarityStats
    unselected: SimilarityStats
    overall: SimilarityStats
    variant: str = ""

    @property
    def mean_ratio(self) -> float | None:
        """mean(selected) / mean(unselected), None when undefined."""
        if self.selected.mean is None or not self.unselected.mean:
            return None
        return self.selected.mean / self.unselected.mean


@dataclass
class Checkpoint:
    """Serializable model state.

    Attributes:
        config: TrainConfig snapshot (JSON-compatible dict).
        params: Parameter name → array, one entry per registry name.
        best_val_jaccard: Validation Jaccard of the retained parameters.
        epoch: Epoch the parameters were taken from (0 = initialisation).
        vocab: Vocabulary the model was built for.
        ehr_edges / ddi_edges: Graph edge lists (i < j) used by the GCNs.
        med_frequency: Training-split prescription count per medication.
    """

    config: dict[str, Any]
    params: dict[str, np.ndarray]
    best_val_jaccard: float
    epoch: int
    vocab: Vocab
    ehr_edges: list[tuple[int, int]] = field(default_factory=list)
    ddi_edges: list[tuple[int, int]] = field(default_factory=list)
    med_frequency: list[int] = field(default_factory=list)
    format_version: int = 1


@dataclass(frozen=True)
class RunManifest:
    """Audit record written before any long computation starts."""

    command: str
    config: dict[str, Any]
    dataset_fingerprint: str
    seeds: list[int]
    output_dir: str
    tool_version: str
    created_at: str
