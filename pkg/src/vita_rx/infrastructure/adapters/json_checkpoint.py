"""
JSON Checkpoint Adapter — CheckpointStore implementation.

File layout::

    {"format_version": 1, "config": {...},
     "params": {name: {"shape": [...], "values": [...]}},
     "best_val_jaccard": float, "epoch": int,
     "vocab": {...}, "ehr_edges": [[i, j], ...], "ddi_edges": [...],
     "med_frequency": [...]}

Floats are written with Python's shortest round-trip repr, so a load
returns bit-identical float64 arrays.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from vita_rx.domain.entities import Checkpoint, Vocab
from vita_rx.domain.exceptions import CheckpointError
from vita_rx.domain.ports import CheckpointStore
from vita_rx.model.vita import CHECKPOINT_FORMAT_VERSION

log = logging.getLogger(__name__)


class _ParamBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape: list[int]
    values: list[float]


class _VocabBlock(BaseModel):
    n_dx: int
    n_px: int
    n_rx: int


class _CheckpointFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int
    config: dict[str, Any]
    params: dict[str, _ParamBlock]
    best_val_jaccard: float
    epoch: int
    vocab: _VocabBlock
    ehr_edges: list[tuple[int, int]] = []
    ddi_edges: list[tuple[int, int]] = []
    med_frequency: list[int] = []


def _describe(error: ValidationError) -> str:
    """``loc: msg`` per failing field, e.g. ``vocab: Field required``."""
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
        for err in error.errors()
    )


class JsonCheckpointStore(CheckpointStore):
    """Lossless JSON checkpoints."""

    def save(self, checkpoint: Checkpoint, path: Path) -> None:
        path = Path(path)
        payload = {
            "format_version": checkpoint.format_version,
            "config": checkpoint.config,
            "params": {
                name: {
                    "shape": list(arr.shape),
                    "values": [float(x) for x in np.asarray(arr, dtype=np.float64).ravel()],
                }
                for name, arr in sorted(checkpoint.params.items())
            },
            "best_val_jaccard": float(checkpoint.best_val_jaccard),
            "epoch": int(checkpoint.epoch),
            "vocab": {
                "n_dx": checkpoint.vocab.n_dx,
                "n_px": checkpoint.vocab.n_px,
                "n_rx": checkpoint.vocab.n_rx,
            },
            "ehr_edges": [list(e) for e in checkpoint.ehr_edges],
            "ddi_edges": [list(e) for e in checkpoint.ddi_edges],
            "med_frequency": list(checkpoint.med_frequency),
        }
        try:
            text = json.dumps(payload, allow_nan=False)
        except ValueError as e:
            raise CheckpointError(f"Checkpoint holds non-finite values: {e}", cause=e) from e
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        log.debug("💾 Checkpoint written: %s (%d parameters)", path, len(checkpoint.params))

    def load(self, path: Path) -> Checkpoint:
        path = Path(path)
        if not path.is_file():
            raise CheckpointError(f"Checkpoint not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise CheckpointError(f"Checkpoint {path} is not valid JSON: {e}", cause=e) from e
        if not isinstance(raw, dict):
            raise CheckpointError(f"Checkpoint {path} must hold a JSON object")

        version = raw.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(
                f"Checkpoint format_version {version} is not supported "
                f"(expected {CHECKPOINT_FORMAT_VERSION})"
            )

        try:
            data = _CheckpointFile.model_validate(raw)
        except ValidationError as e:
            raise CheckpointError(
                f"{path.name} is malformed: {_describe(e)}", cause=e
            ) from e

        params: dict[str, np.ndarray] = {}
        for name, block in data.params.items():
            expected = int(np.prod(block.shape)) if block.shape else 1
            if len(block.values) != expected:
                raise CheckpointError(
                    f"Parameter '{name}' has {len(block.values)} values for shape {block.shape}"
                )
            params[name] = np.array(block.values, dtype=np.float64).reshape(block.shape)

        return Checkpoint(
            format_version=data.format_version,
            config=data.config,
            params=params,
            best_val_jaccard=data.best_val_jaccard,
            epoch=data.epoch,
            vocab=Vocab(n_dx=data.vocab.n_dx, n_px=data.vocab.n_px, n_rx=data.vocab.n_rx),
            ehr_edges=list(data.ehr_edges),
            ddi_edges=list(data.ddi_edges),
            med_frequency=list(data.med_frequency),
        )
