"""
Predictor — sequential medication decoding.

Medication embeddings come from two GCNs (co-prescription and DDI graphs).
A causal transformer reads the medications decoded so far (starting from
START) and gates the patient representation. Two-level relevance over past
visits turns past prescriptions into a medication distribution that is
blended with the softmax head by a learned weight λ.

Functions accept either one decoding position (vectors) or every position
of a teacher-forced sequence at once (one row per position).
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from vita_rx.engine import ops
from vita_rx.engine.tensor import Tensor
from vita_rx.model.encoder import target_aware_attention

PROB_FLOOR = 1e-12


@dataclass
class DecodeState:
    """Medications emitted so far for the current visit."""

    predicted: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        """1-based index of the next decoding step."""
        return len(self.predicted) + 1

    def emit(self, med: int) -> None:
        if med in self.predicted:
            raise ValueError(f"Medication {med} already emitted")
        self.predicted.append(med)


# ── medication embeddings ──────────────────────────────────────


def _gcn(a_hat: np.ndarray, e: Tensor, w1: Tensor, w2: Tensor) -> Tensor:
    a = ops.constant(a_hat)
    hidden = ops.tanh(ops.matmul(ops.matmul(a, e), w1))
    return ops.matmul(ops.matmul(a, hidden), w2)


def gcn_medication_embeddings(
    a_hat_ehr: np.ndarray,
    a_hat_ddi: np.ndarray,
    params: Mapping[str, Tensor],
    beta: float,
) -> Tensor:
    """e'_i = H_EHR,i − β·H_DDI,i with H = Â · tanh(Â · E · W₁) · W₂ per graph."""
    n_rx = a_hat_ehr.shape[0]
    e = ops.take_rows(params["pred.e"], list(range(n_rx)))
    h_ehr = _gcn(a_hat_ehr, e, params["pred.gcn_ehr.w1"], params["pred.gcn_ehr.w2"])
    h_ddi = _gcn(a_hat_ddi, e, params["pred.gcn_ddi.w1"], params["pred.gcn_ddi.w2"])
    return ops.sub(h_ehr, ops.scale(h_ddi, beta))


def input_table(fused: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """Decoder input rows: fused medications, then raw START and END."""
    n_rx = fused.shape[0]
    return ops.concat([fused, ops.take_rows(params["pred.e"], [n_rx, n_rx + 1])], axis=0)


# ── decoding history ───────────────────────────────────────────


def causal_mask(n: int) -> np.ndarray:
    """True above the diagonal: position j may not attend to positions > j."""
    return np.triu(np.ones((n, n), dtype=bool), k=1)


def _columns(x: Tensor, start: int, stop: int) -> Tensor:
    return ops.transpose(ops.take_rows(ops.transpose(x), list(range(start, stop))))


def _bias(b: Tensor, rows: int) -> Tensor:
    return ops.repeat(b, rows)


def transformer_history(
    x: Tensor,
    params: Mapping[str, Tensor],
    n_layers: int = 1,
    n_heads: int = 1,
) -> Tensor:
    """Causal decoder blocks over the decoded sequence ``x`` (L, dim).

    Each block: masked multi-head self-attention scaled by 1/√(dim/heads),
    residual and layer norm, then a tanh feed-forward dim → 2·dim → dim,
    residual and layer norm. No positional encoding.
    """
    length, dim = x.shape
    head_dim = dim // n_heads
    mask = causal_mask(length)
    for layer in range(n_layers):
        p = f"pred.tf{layer}"
        q_all = ops.matmul(x, params[f"{p}.w_q"])
        k_all = ops.matmul(x, params[f"{p}.w_k"])
        v_all = ops.matmul(x, params[f"{p}.w_v"])
        heads = []
        for h in range(n_heads):
            lo, hi = h * head_dim, (h + 1) * head_dim
            qh, kh, vh = (_columns(t, lo, hi) for t in (q_all, k_all, v_all))
            scores = ops.scale(ops.matmul(qh, ops.transpose(kh)), 1.0 / math.sqrt(head_dim))
            weights = ops.softmax(ops.masked_fill(scores, mask, -np.inf), axis=-1)
            heads.append(ops.matmul(weights, vh))
        attended = heads[0] if n_heads == 1 else ops.concat(heads, axis=-1)
        attended = ops.matmul(attended, params[f"{p}.w_o"])
        x = ops.layer_norm(ops.add(x, attended), params[f"{p}.ln1.gain"], params[f"{p}.ln1.offset"])

        ff = ops.matmul(x, params[f"{p}.ff.w1"])
        ff = ops.tanh(ops.add(ff, _bias(params[f"{p}.ff.b1"], length)))
        ff = ops.add(ops.matmul(ff, params[f"{p}.ff.w2"]), _bias(params[f"{p}.ff.b2"], length))
        x = ops.layer_norm(ops.add(x, ff), params[f"{p}.ln2.gain"], params[f"{p}.ln2.offset"])
    return x


def health_aware_representation(hidden: Tensor, q: Tensor) -> Tensor:
    """p = softmax((h ⊙ q)/√dim) ⊙ q, the softmax taken across dimensions.

    ``hidden`` is one history state (dim,) or one state per position (L, dim).
    """
    dim = q.shape[0]
    q_b = q if hidden.ndim == 1 else ops.repeat(q, hidden.shape[0])
    gate = ops.softmax(ops.scale(ops.mul(hidden, q_b), 1.0 / math.sqrt(dim)), axis=-1)
    return ops.mul(gate, q_b)


# ── two-level relevance ────────────────────────────────────────


def medication_level_relevance(p: Tensor, rx: Sequence[int], fused: Tensor) -> Tensor:
    """Softmax over the medications ``rx`` of e_i · p / √dim (per position)."""
    dim = fused.shape[1]
    e_t = ops.take_rows(fused, list(rx))
    return ops.softmax(ops.scale(ops.matmul(p, ops.transpose(e_t)), 1.0 / math.sqrt(dim)), axis=-1)


def visit_level_relevance(
    past_q: Sequence[Tensor], q_T: Tensor, w_alpha: Tensor
) -> Tensor | None:
    """Target-aware attention of q^T over {q¹..q^(T−1), q^T}, past entries only.

    Returns None when there is no past visit.
    """
    if not past_q:
        return None
    alpha, _ = target_aware_attention(q_T, ops.stack([*past_q, q_T]), w_alpha)
    return ops.take_rows(alpha, list(range(len(past_q))))


def scatter_matrix(rx: Sequence[int], n_rx: int) -> np.ndarray:
    """One-hot rows mapping scores over ``rx`` onto the |M| axis."""
    out = np.zeros((len(rx), n_rx))
    out[np.arange(len(rx)), list(rx)] = 1.0
    return out


def past_medication_representation(
    r_v: Tensor | None,
    r_m: Sequence[Tensor],
    past_rx: Sequence[Sequence[int]],
    n_rx: int,
    lead: tuple[int, ...] = (),
) -> Tensor:
    """p̄ = Σ_t r_v^t · scatter(r_m^t) over |M| (one row per position if ``lead``)."""
    if r_v is None or not r_m:
        return ops.constant(np.zeros((*lead, n_rx)))
    total: Tensor | None = None
    for t, (scores, rx) in enumerate(zip(r_m, past_rx)):
        term = ops.scale(
            ops.matmul(scores, ops.constant(scatter_matrix(rx, n_rx))), ops.take_rows(r_v, t)
        )
        total = term if total is None else ops.add(total, term)
    assert total is not None
    return total


# ── output ─────────────────────────────────────────────────────


def fuse(p: Tensor, p_bar: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """p̂ = λ·softmax(p·W_p + b_p) + (1 − λ)·[p̄ ‖ 0]; END gets only the head term."""
    logits = ops.matmul(p, params["pred.w_p"])
    b_p = params["pred.b_p"]
    logits = ops.add(logits, b_p if p.ndim == 1 else _bias(b_p, p.shape[0]))
    head = ops.softmax(logits, axis=-1)
    end_col = np.zeros((*p_bar.shape[:-1], 1))
    padded = ops.concat([p_bar, ops.constant(end_col)], axis=-1)
    lam = ops.sigmoid(params["pred.lambda_raw"])
    rest = ops.sub(ops.constant(1.0), lam)
    return ops.add(ops.scale(head, lam), ops.scale(padded, rest))


def fuse_and_step(
    p: Tensor, p_bar: Tensor, params: Mapping[str, Tensor], state: DecodeState
) -> tuple[int, np.ndarray]:
    """Fuse one step and pick the arg-max class among not-yet-emitted ones.

    Returns:
        (chosen class, fused distribution over |M| + 1). The END class is |M|.
    """
    p_hat = fuse(p, p_bar, params).values
    masked = p_hat.copy()
    if state.predicted:
        masked[state.predicted] = -np.inf
    return int(np.argmax(masked)), p_hat


def sequence_nll(p_hat: Tensor, targets: Sequence[int]) -> Tensor:
    """−Σ_k log max(p̂_k[target_k], 1e-12) over a (L, C) distribution table."""
    length, classes = p_hat.shape
    if len(targets) != length:
        raise ValueError(f"{len(targets)} targets for {length} decoding positions")
    flat = ops.reshape(p_hat, (length * classes,))
    picked = ops.take_rows(flat, [k * classes + c for k, c in enumerate(targets)])
    return ops.scale(ops.sum(ops.log(ops.clamp(picked, lo=PROB_FLOOR))), -1.0)
