"""
VitaModel — encoder and predictor composed over one parameter registry.

The model owns the normalised graph adjacencies and exposes the three paths
the application layer needs: per-patient encodings shared across visits,
teacher-forced distributions for the loss, and greedy decoding.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from vita_rx.core.config import TrainConfig, parse_train_config
from vita_rx.domain.ehr import filter_history, graphs_from_edges, normalize_adjacency
from vita_rx.domain.entities import Checkpoint, MedicationGraphs, PatientRecord, Vocab
from vita_rx.domain.exceptions import CheckpointError
from vita_rx.engine import ops
from vita_rx.engine.tensor import Tensor
from vita_rx.model.encoder import EncoderOutput, embed_visits, encode_from_vectors
from vita_rx.model.params import ModelParams, init_params
from vita_rx.model.predictor import (
    DecodeState,
    fuse,
    fuse_and_step,
    gcn_medication_embeddings,
    health_aware_representation,
    input_table,
    medication_level_relevance,
    past_medication_representation,
    sequence_nll,
    transformer_history,
    visit_level_relevance,
)

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class DecodeResult:
    """Decoded medication set plus the score surfaces used for PRAUC."""

    predicted: list[int]
    first_step: np.ndarray
    mean_steps: np.ndarray
    encoding: EncoderOutput

    @property
    def predicted_set(self) -> set[int]:
        return set(self.predicted)


class VitaModel:
    """Medication recommender over a fixed vocabulary and graph pair."""

    def __init__(
        self,
        vocab: Vocab,
        config: TrainConfig,
        params: ModelParams,
        graphs: MedicationGraphs,
    ) -> None:
        if graphs.n_rx != vocab.n_rx:
            raise ValueError(f"Graphs cover {graphs.n_rx} medications, vocab has {vocab.n_rx}")
        self.vocab = vocab
        self.config = config
        self.params = params
        self.graphs = graphs
        self.a_hat_ehr = normalize_adjacency(graphs.a_ehr)
        self.a_hat_ddi = normalize_adjacency(graphs.a_ddi)

    @classmethod
    def initialise(cls, vocab: Vocab, config: TrainConfig, graphs: MedicationGraphs) -> VitaModel:
        return cls(vocab, config, init_params(vocab, config), graphs)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> VitaModel:
        """Rebuild the model a checkpoint was taken from.

        Raises:
            CheckpointError: On a bad config snapshot or a parameter mismatch.
        """
        try:
            config = parse_train_config(checkpoint.config)
        except Exception as e:
            raise CheckpointError(f"Checkpoint config is invalid: {e}", cause=e) from e
        graphs = graphs_from_edges(
            checkpoint.vocab.n_rx, checkpoint.ehr_edges, checkpoint.ddi_edges
        )
        model = cls.initialise(checkpoint.vocab, config, graphs)
        model.params.load_state(checkpoint.params)
        return model

    def to_checkpoint(
        self, best_val_jaccard: float, epoch: int, med_frequency: Sequence[int]
    ) -> Checkpoint:
        return Checkpoint(
            format_version=CHECKPOINT_FORMAT_VERSION,
            config=self.config.snapshot(),
            params=self.params.state(),
            best_val_jaccard=float(best_val_jaccard),
            epoch=int(epoch),
            vocab=self.vocab,
            ehr_edges=MedicationGraphs.edges_of(self.graphs.a_ehr),
            ddi_edges=MedicationGraphs.edges_of(self.graphs.a_ddi),
            med_frequency=list(med_frequency),
        )

    @property
    def end_token(self) -> int:
        return self.vocab.end_token

    @property
    def max_decode_len(self) -> int:
        cap = self.config.max_decode_len
        return self.vocab.n_rx if cap is None else min(cap, self.vocab.n_rx)

    # ── forward pieces ─────────────────────────────────────────

    def medication_embeddings(self) -> Tensor:
        """Fused GCN embeddings (|M|, dim)."""
        return gcn_medication_embeddings(
            self.a_hat_ehr, self.a_hat_ddi, self.params, self.config.predictor.beta
        )

    def encode_patient(
        self,
        record: PatientRecord,
        upto: int | None = None,
        *,
        eval_mode: bool,
        rng: np.random.Generator | None = None,
        tau_g: float | None = None,
    ) -> list[EncoderOutput]:
        """q¹…q^upto, each visit encoded once with its own past as candidates."""
        n = len(record.visits) if upto is None else upto
        visits = record.visits[:n]
        if rng is None and eval_mode and self.config.encoder.stochastic_eval:
            rng = np.random.default_rng((self.config.seed, 2))
        vectors = embed_visits(visits, self.vocab, self.params)
        return [
            encode_from_vectors(
                vectors,
                visits,
                c,
                self.params,
                self.config.encoder,
                eval_mode=eval_mode,
                rng=rng,
                tau_g=tau_g,
            )
            for c in range(n)
        ]

    def visible_past(self, record: PatientRecord, current: int) -> list[int]:
        """Past visits the model may read for visit ``current`` (history filter applied)."""
        return filter_history(record.visits, current, self.config.encoder.history_filter)

    def position_states(
        self,
        record: PatientRecord,
        current: int,
        encodings: Sequence[EncoderOutput],
        fused: Tensor,
        prefix: Sequence[int],
    ) -> tuple[Tensor, Tensor]:
        """Per-position (p, p̄) for the decoded ``prefix`` after START.

        Returns:
            p with shape (len(prefix) + 1, dim) and p̄ with shape (len(prefix) + 1, |M|).
        """
        cfg = self.config.predictor
        n_rx = self.vocab.n_rx
        rows = [n_rx, *prefix]
        hidden = transformer_history(
            ops.take_rows(input_table(fused, self.params), rows),
            self.params,
            n_layers=cfg.n_layers,
            n_heads=cfg.n_heads,
        )
        q = encodings[current].q
        p = health_aware_representation(hidden, q)

        past = self.visible_past(record, current)
        r_v = visit_level_relevance(
            [encodings[t].q for t in past], q, self.params["enc.w_alpha"]
        )
        past_rx = [record.visits[t].rx for t in past]
        r_m = [medication_level_relevance(p, rx, fused) for rx in past_rx]
        p_bar = past_medication_representation(r_v, r_m, past_rx, n_rx, lead=(len(rows),))
        return p, p_bar

    def step_distributions(
        self,
        record: PatientRecord,
        current: int,
        encodings: Sequence[EncoderOutput],
        fused: Tensor,
        prefix: Sequence[int],
    ) -> Tensor:
        """Fused p̂ for every position of a teacher-forced prefix, (len(prefix) + 1, |M| + 1)."""
        p, p_bar = self.position_states(record, current, encodings, fused, prefix)
        return fuse(p, p_bar, self.params)

    def visit_loss(
        self,
        record: PatientRecord,
        current: int,
        target: Sequence[int],
        encodings: Sequence[EncoderOutput],
        fused: Tensor,
    ) -> Tensor:
        """Cross-entropy of the target sequence (ending in END) under teacher forcing."""
        p_hat = self.step_distributions(record, current, encodings, fused, target[:-1])
        return sequence_nll(p_hat, target)

    # ── inference ─────────────────────────────────────────────

    def decode_visit(
        self,
        record: PatientRecord,
        current: int,
        encodings: Sequence[EncoderOutput] | None = None,
        fused: Tensor | None = None,
        max_len: int | None = None,
    ) -> DecodeResult:
        """Greedy decoding of visit ``current`` (0-based) until END or the cap."""
        if encodings is None:
            encodings = self.encode_patient(record, current + 1, eval_mode=True)
        if fused is None:
            fused = self.medication_embeddings()
        cap = self.max_decode_len if max_len is None else max_len
        n_rx = self.vocab.n_rx

        state = DecodeState()
        steps: list[np.ndarray] = []
        while True:
            p, p_bar = self.position_states(record, current, encodings, fused, state.predicted)
            choice, p_hat = fuse_and_step(
                ops.take_rows(p, -1), ops.take_rows(p_bar, -1), self.params, state
            )
            steps.append(p_hat[:n_rx])
            if choice == self.end_token or len(state.predicted) >= cap:
                break
            state.emit(choice)

        return DecodeResult(
            predicted=list(state.predicted),
            first_step=steps[0],
            mean_steps=np.mean(steps, axis=0),
            encoding=encodings[current],
        )
