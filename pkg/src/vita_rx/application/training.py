"""
Training — teacher-forced cross-entropy over every visit of every training
patient, one Adam step per epoch on the summed loss, early stopping on
validation Jaccard.
"""

from __future__ import annotations

import logging
import zlib
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from vita_rx.application.metrics import jaccard_score, patient_mean
from vita_rx.core.config import TrainConfig
from vita_rx.core.timer import RunTimer
from vita_rx.domain.ehr import medication_frequency
from vita_rx.domain.entities import Checkpoint, MedicationGraphs, PatientRecord, Visit, Vocab
from vita_rx.domain.exceptions import DatasetError, NumericalError
from vita_rx.engine import ops
from vita_rx.engine.optim import AdamState, adam_step
from vita_rx.engine.tensor import Tape, Tensor
from vita_rx.model.vita import VitaModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    """One row of the per-epoch training log."""

    epoch: int
    train_loss: float
    val_jaccard: float

    def as_tuple(self) -> tuple[int, float, float]:
        return (self.epoch, self.train_loss, self.val_jaccard)


@dataclass
class TrainingResult:
    """Best checkpoint plus the model holding its parameters."""

    checkpoint: Checkpoint
    model: VitaModel
    history: list[EpochRecord] = field(default_factory=list)
    timer: RunTimer = field(default_factory=RunTimer)


def target_sequence(visit: Visit, frequency: Sequence[int], end_token: int) -> list[int]:
    """Medications by descending training frequency (ties: ascending index), then END."""
    if not visit.rx:
        raise DatasetError("target_sequence needs a visit with medications")
    ordered = sorted(visit.rx, key=lambda m: (-frequency[m], m))
    return [*ordered, end_token]


def patient_loss(
    model: VitaModel,
    record: PatientRecord,
    targets: Sequence[Sequence[int]],
    rng: np.random.Generator | None,
    tau_g: float | None = None,
) -> Tensor:
    """Summed visit losses of one patient; encodings are computed once and shared."""
    fused = model.medication_embeddings()
    encodings = model.encode_patient(record, eval_mode=False, rng=rng, tau_g=tau_g)
    total: Tensor | None = None
    for current, target in enumerate(targets):
        loss = model.visit_loss(record, current, target, encodings, fused)
        total = loss if total is None else ops.add(total, loss)
    assert total is not None
    return total


def _noise_rng(seed: int, epoch: int, record: PatientRecord) -> np.random.Generator:
    """Gumbel noise stream keyed by patient id, independent of patient order."""
    return np.random.default_rng((seed, 1, epoch, zlib.crc32(record.id.encode("utf-8"))))


def _epoch_update(
    model: VitaModel,
    train_records: Sequence[PatientRecord],
    targets: dict[str, list[list[int]]],
    state: AdamState,
    config: TrainConfig,
    epoch: int,
) -> float:
    """Accumulate every patient's gradient, take one Adam step, return the summed loss."""
    tau_g = config.tau_g_at(epoch)
    epoch_loss = 0.0
    summed = {name: np.zeros_like(p.values) for name, p in model.params.items()}
    for record in train_records:
        rng = _noise_rng(config.seed, epoch, record)
        with Tape() as tape:
            loss = patient_loss(model, record, targets[record.id], rng, tau_g)
        value = loss.item()
        if not np.isfinite(value):
            raise NumericalError(
                f"Non-finite loss {value} at epoch {epoch}, patient '{record.id}'",
                epoch=epoch,
                patient_id=record.id,
            )
        for name, grad in tape.gradient(loss, model.params).items():
            if not np.all(np.isfinite(grad)):
                raise NumericalError(
                    f"Non-finite gradient for parameter '{name}' "
                    f"at epoch {epoch}, patient '{record.id}'",
                    epoch=epoch,
                    patient_id=record.id,
                )
            summed[name] += grad
        epoch_loss += value
    adam_step(model.params, summed, state)
    return epoch_loss


def mean_jaccard(model: VitaModel, records: Sequence[PatientRecord]) -> float:
    """Patient-then-visit mean Jaccard of greedy decoding over all visits."""
    fused = model.medication_embeddings()
    per_patient: list[list[float]] = []
    for record in records:
        encodings = model.encode_patient(record, eval_mode=True)
        per_patient.append(
            [
                jaccard_score(model.decode_visit(record, c, encodings, fused).predicted, v.rx)
                for c, v in enumerate(record.visits)
            ]
        )
    return patient_mean(per_patient)


def train(
    train_records: Sequence[PatientRecord],
    val_records: Sequence[PatientRecord],
    graphs: MedicationGraphs,
    vocab: Vocab,
    config: TrainConfig,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> TrainingResult:
    """Fit a model and keep the parameters with the best validation Jaccard.

    Epoch 0 is the initialisation; with ``config.epochs == 0`` it is returned
    unchanged. Training stops once validation Jaccard has not improved for
    more than ``config.patience`` consecutive epochs.

    Raises:
        DatasetError: If the train or validation split is empty.
        NumericalError: On a non-finite loss or gradient, naming epoch and patient.
    """
    if not train_records or not val_records:
        raise DatasetError(
            f"Training needs nonempty splits (train={len(train_records)}, val={len(val_records)})"
        )

    model = VitaModel.initialise(vocab, config, graphs)
    frequency = medication_frequency(train_records, vocab.n_rx)
    targets = {
        r.id: [target_sequence(v, frequency, vocab.end_token) for v in r.visits]
        for r in train_records
    }
    state = AdamState.for_params(model.params, lr=config.learning_rate)

    best_val = mean_jaccard(model, val_records)
    best_params = model.params.state()
    best_epoch = 0
    stale = 0
    history: list[EpochRecord] = []
    log.info(
        "🚀 Training %s: %d train / %d val patients, epoch 0 val Jaccard %.4f",
        config.encoder.variant.display_name,
        len(train_records),
        len(val_records),
        best_val,
    )

    timer = RunTimer()
    for epoch in range(1, config.epochs + 1):
        with timer.step(f"epoch {epoch}", group="epoch") as timing:
            epoch_loss = _epoch_update(model, train_records, targets, state, config, epoch)
            val = mean_jaccard(model, val_records)
        row = EpochRecord(epoch=epoch, train_loss=epoch_loss, val_jaccard=val)
        history.append(row)
        if on_epoch is not None:
            on_epoch(row)
        log.info(
            "📈 Epoch %d: loss %.4f, val Jaccard %.4f (%.1fs)",
            epoch,
            epoch_loss,
            val,
            timing.seconds,
        )

        if val > best_val:
            best_val, best_epoch, stale = val, epoch, 0
            best_params = model.params.state()
        else:
            stale += 1
            if stale > config.patience:
                log.info("⏹️  Early stop at epoch %d (best epoch %d)", epoch, best_epoch)
                break

    model.params.load_state(best_params)
    checkpoint = model.to_checkpoint(best_val, best_epoch, frequency)
    log.info("✅ Best val Jaccard %.4f at epoch %d", best_val, best_epoch)
    return TrainingResult(checkpoint=checkpoint, model=model, history=history, timer=timer)
