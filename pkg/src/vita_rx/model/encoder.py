"""
Encoder — patient representation for a visit via relevant-visit selection
and target-aware attention.

For the current visit T the encoder embeds every visit, lets a Gumbel gate
decide which past visits are relevant, and attends over the selected past
visits together with the current visit itself. Because the current visit
competes for attention weight, the past visits may collectively receive less
than 1. Ablation variants swap either half of the pipeline.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from vita_rx.core.config import EncoderSettings
from vita_rx.domain.ehr import filter_history, visit_similarity
from vita_rx.domain.entities import PatientRecord, Visit, Vocab
from vita_rx.domain.value_objects import EncoderVariant
from vita_rx.engine import ops
from vita_rx.engine.tensor import Tensor

PROB_EPS = 1e-6


@dataclass
class EncoderOutput:
    """Representation of one visit.

    Attributes:
        q: Patient representation (dim,).
        selection_mask: One flag per past visit: True if it reached aggregation.
        alpha: Aggregation weights over the selected past visits followed by
            the current visit (empty for the GRU and past-only attention
            variants when nothing is selected).
        probabilities: Selection probability s per past visit (NaN where no
            probability was computed).
    """

    q: Tensor
    selection_mask: np.ndarray
    alpha: np.ndarray
    probabilities: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def selected(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.selection_mask)]


@dataclass
class Selection:
    """Outcome of Gumbel selection over candidate past visits."""

    mask: np.ndarray
    gates: Tensor | None = None


# ── building blocks ───────────────────────────────────────────


def embed_visit(visit: Visit, vocab: Vocab, params: Mapping[str, Tensor]) -> Tensor:
    """v = concat(multi_hot(dx), multi_hot(px)) · W_e."""
    return ops.matmul(ops.constant(visit.code_vector(vocab)), params["enc.w_e"])


def embed_visits(visits: Sequence[Visit], vocab: Vocab, params: Mapping[str, Tensor]) -> Tensor:
    """Embeddings of several visits with one product, shape (n, dim)."""
    multi_hot = np.stack([v.code_vector(vocab) for v in visits])
    return ops.matmul(ops.constant(multi_hot), params["enc.w_e"])


def selection_probability(v_t: Tensor, v_T: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """s = sigmoid(concat(v_t, v_T) · W_s + b_s), scalar-shaped."""
    logit = ops.add(ops.matmul(ops.concat([v_t, v_T]), params["enc.w_s"]), params["enc.b_s"])
    return ops.reshape(ops.sigmoid(logit), ())


def gumbel_select(
    s: Tensor,
    tau_g: float,
    eval_mode: bool,
    rng: np.random.Generator | None,
    *,
    stochastic: bool = False,
    soft: bool = False,
) -> Selection:
    """Hard per-visit selection from probabilities ``s`` of shape (n,).

    Training draws two Gumbel(0, 1) samples per visit, takes o₁ from the
    tempered two-way softmax over (log s, log(1 − s)) and selects iff
    ⌊o₁ + 0.5⌋ = 1. The returned gates carry the hard value forward and the
    soft o₁ gradient backward. ``soft`` keeps every visit gated by o₁ itself.

    Evaluation selects iff s > 0.5 without noise, unless ``stochastic``.
    """
    n = s.shape[0]
    if n == 0:
        return Selection(mask=np.zeros(0, dtype=bool))
    if eval_mode and not stochastic:
        return Selection(mask=s.values > 0.5)
    if rng is None:
        raise ValueError("gumbel_select needs a random generator outside deterministic eval")

    one = ops.constant(np.ones(n))
    pi = ops.clamp(ops.stack([s, ops.sub(one, s)]), PROB_EPS, 1.0 - PROB_EPS)
    noise = -np.log(-np.log(rng.uniform(size=(2, n))))
    o = ops.take_rows(
        ops.softmax(ops.add(ops.log(pi), ops.constant(noise)), axis=0, temperature=tau_g), 0
    )
    if soft:
        return Selection(mask=np.ones(n, dtype=bool), gates=o)
    hard = np.floor(o.values + 0.5) >= 1.0
    if eval_mode:
        return Selection(mask=hard)
    return Selection(mask=hard, gates=ops.straight_through(hard.astype(np.float64), o))


def target_aware_attention(
    query: Tensor,
    keys: Tensor,
    w_alpha: Tensor,
    tau_a: float = 1.0,
) -> tuple[Tensor, Tensor]:
    """Relevance weights over ``keys`` (n, dim) and the weighted sum.

    ``keys`` holds the selected past visits followed by the current visit.
    logits_t = (v_T · W_α · v_tᵀ) / √dim, softmax with temperature ``tau_a``.
    """
    dim = query.shape[0]
    u = ops.matmul(query, w_alpha)
    logits = ops.scale(ops.matmul(keys, u), 1.0 / math.sqrt(dim))
    alpha = ops.softmax(logits, temperature=tau_a)
    return alpha, ops.matmul(alpha, keys)


def gru_cell(x: Tensor, h: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """h' = (1 − z) ⊙ h + z ⊙ n with update z, reset r and candidate n."""

    def gate(name: str, hidden: Tensor) -> Tensor:
        pre = ops.add(
            ops.matmul(x, params[f"enc.gru.w_{name}"]),
            ops.matmul(hidden, params[f"enc.gru.u_{name}"]),
        )
        return ops.add(pre, params[f"enc.gru.b_{name}"])

    z = ops.sigmoid(gate("z", h))
    r = ops.sigmoid(gate("r", h))
    n = ops.tanh(gate("h", ops.mul(r, h)))
    keep = ops.sub(ops.constant(np.ones(h.shape)), z)
    return ops.add(ops.mul(keep, h), ops.mul(z, n))


# ── composition ────────────────────────────────────────────────


def _candidates(
    visits: Sequence[Visit], current: int, settings: EncoderSettings
) -> list[int]:
    candidates = filter_history(visits, current, settings.history_filter)
    if settings.variant is EncoderVariant.TOP1 and len(candidates) > 1:
        target = visits[current]
        best = max(candidates, key=lambda t: (visit_similarity(visits[t], target), t))
        candidates = [best]
    return candidates


def encode_from_vectors(
    vectors: Tensor,
    visits: Sequence[Visit],
    current: int,
    params: Mapping[str, Tensor],
    settings: EncoderSettings,
    *,
    eval_mode: bool,
    rng: np.random.Generator | None = None,
    tau_g: float | None = None,
) -> EncoderOutput:
    """Encode visit ``current`` (0-based) from precomputed visit embeddings (n, dim)."""
    variant = settings.variant
    dim = vectors.shape[1]
    v_T = ops.take_rows(vectors, current)
    candidates = _candidates(visits, current, settings)
    probabilities = np.full(current, np.nan)

    kept: list[Tensor] = []
    kept_idx: list[int] = []
    if candidates and variant.uses_selection:
        cand_vecs = [ops.take_rows(vectors, t) for t in candidates]
        s = ops.stack([selection_probability(v, v_T, params) for v in cand_vecs])
        probabilities[candidates] = s.values
        sel = gumbel_select(
            s,
            settings.tau_g if tau_g is None else tau_g,
            eval_mode,
            rng,
            stochastic=settings.stochastic_eval,
            soft=settings.soft_selection and not eval_mode,
        )
        for j, t in enumerate(candidates):
            if not sel.mask[j]:
                continue
            v = cand_vecs[j]
            if sel.gates is not None:
                v = ops.scale(v, ops.take_rows(sel.gates, j))
            kept.append(v)
            kept_idx.append(t)
    else:
        kept = [ops.take_rows(vectors, t) for t in candidates]
        kept_idx = list(candidates)

    mask = np.zeros(current, dtype=bool)
    mask[kept_idx] = True

    q: Tensor
    alpha: np.ndarray
    if variant is EncoderVariant.MEAN_POOL:
        q = ops.mean(ops.stack([*kept, v_T]), axis=0)
        alpha = np.full(len(kept) + 1, 1.0 / (len(kept) + 1))
    elif variant in (EncoderVariant.RNN, EncoderVariant.STD_ATTENTION) and not kept:
        q, alpha = v_T, np.zeros(0)
    elif variant is EncoderVariant.RNN:
        h = ops.constant(np.zeros(dim))
        for v in [*kept, v_T]:
            h = gru_cell(v, h, params)
        q, alpha = h, np.zeros(0)
    elif variant is EncoderVariant.STD_ATTENTION:
        weights, context = target_aware_attention(v_T, ops.stack(kept), params["enc.w_alpha"])
        q, alpha = ops.add(v_T, context), weights.values
    else:
        tau_a = settings.tau_a if variant is EncoderVariant.SHARP else 1.0
        weights, q = target_aware_attention(
            v_T, ops.stack([*kept, v_T]), params["enc.w_alpha"], tau_a
        )
        alpha = weights.values

    return EncoderOutput(
        q=q, selection_mask=mask, alpha=np.asarray(alpha), probabilities=probabilities
    )


def encode(
    record: PatientRecord,
    t_index: int,
    params: Mapping[str, Tensor],
    settings: EncoderSettings,
    vocab: Vocab,
    *,
    eval_mode: bool = True,
    seed: int | None = None,
    tau_g: float | None = None,
) -> EncoderOutput:
    """Encode visit ``t_index`` (1-based) of ``record``; earlier visits are candidates.

    Raises:
        IndexError: If ``t_index`` is outside 1..len(record).
    """
    if not 1 <= t_index <= len(record.visits):
        raise IndexError(f"t_index {t_index} outside 1..{len(record.visits)} for '{record.id}'")
    visits = record.visits[:t_index]
    rng = None if seed is None else np.random.default_rng(seed)
    return encode_from_vectors(
        embed_visits(visits, vocab, params),
        visits,
        t_index - 1,
        params,
        settings,
        eval_mode=eval_mode,
        rng=rng,
        tau_g=tau_g,
    )
