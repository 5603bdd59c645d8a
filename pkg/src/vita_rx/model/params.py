"""
Parameter registry — every learnable array of the encoder and predictor,
addressable by a dotted name for checkpointing and optimisation.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping

import numpy as np

from vita_rx.core.config import TrainConfig
from vita_rx.domain.entities import Vocab
from vita_rx.domain.exceptions import CheckpointError
from vita_rx.domain.value_objects import EncoderVariant
from vita_rx.engine.tensor import Tensor

GRU_GATES = ("z", "r", "h")


class ModelParams(Mapping[str, Tensor]):
    """Ordered name → Tensor map; insertion order is the initialisation order."""

    def __init__(self) -> None:
        self._tensors: dict[str, Tensor] = {}

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._tensors[name]
        except KeyError:
            raise KeyError(f"Unknown parameter '{name}'") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise ValueError(f"Parameter '{name}' registered twice")
        t = Tensor(values, requires_grad=True, name=name)
        self._tensors[name] = t
        return t

    def state(self) -> dict[str, np.ndarray]:
        """Copies of every array, in registry order."""
        return {name: t.values.copy() for name, t in self._tensors.items()}

    def load_state(self, arrays: Mapping[str, np.ndarray]) -> None:
        """Overwrite every parameter from ``arrays``.

        Raises:
            CheckpointError: If a registry name is missing, unknown or has the wrong shape.
        """
        for name, t in self._tensors.items():
            if name not in arrays:
                raise CheckpointError(f"Checkpoint is missing parameter '{name}'")
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.shape:
                raise CheckpointError(
                    f"Parameter '{name}' has shape {arr.shape}, model expects {t.shape}"
                )
        extra = sorted(set(arrays) - set(self._tensors))
        if extra:
            raise CheckpointError(f"Checkpoint has unknown parameter(s): {', '.join(extra)}")
        for name, t in self._tensors.items():
            t.values[...] = arrays[name]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(vocab: Vocab, config: TrainConfig) -> ModelParams:
    """Initialise the registry for ``vocab`` and ``config`` from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    d = config.dim
    m = vocab.n_rx
    p = ModelParams()

    p.add("enc.w_e", _glorot(rng, vocab.n_codes, d))
    p.add("enc.w_s", _glorot(rng, 2 * d, 1))
    p.add("enc.b_s", np.zeros(1))
    p.add("enc.w_alpha", _glorot(rng, d, d))
    if config.encoder.variant is EncoderVariant.RNN:
        for gate in GRU_GATES:
            p.add(f"enc.gru.w_{gate}", _glorot(rng, d, d))
            p.add(f"enc.gru.u_{gate}", _glorot(rng, d, d))
            p.add(f"enc.gru.b_{gate}", np.zeros(d))

    p.add("pred.e", rng.normal(0.0, 1.0 / np.sqrt(d), size=(m + 2, d)))
    for graph in ("ehr", "ddi"):
        p.add(f"pred.gcn_{graph}.w1", _glorot(rng, d, d))
        p.add(f"pred.gcn_{graph}.w2", _glorot(rng, d, d))
    for layer in range(config.predictor.n_layers):
        prefix = f"pred.tf{layer}"
        for proj in ("w_q", "w_k", "w_v", "w_o"):
            p.add(f"{prefix}.{proj}", _glorot(rng, d, d))
        p.add(f"{prefix}.ln1.gain", np.ones(d))
        p.add(f"{prefix}.ln1.offset", np.zeros(d))
        p.add(f"{prefix}.ff.w1", _glorot(rng, d, 2 * d))
        p.add(f"{prefix}.ff.b1", np.zeros(2 * d))
        p.add(f"{prefix}.ff.w2", _glorot(rng, 2 * d, d))
        p.add(f"{prefix}.ff.b2", np.zeros(d))
        p.add(f"{prefix}.ln2.gain", np.ones(d))
        p.add(f"{prefix}.ln2.offset", np.zeros(d))
    p.add("pred.w_p", _glorot(rng, d, m + 1))
    p.add("pred.b_p", np.zeros(m + 1))
    p.add("pred.lambda_raw", np.asarray(config.predictor.lambda_init))
    return p
