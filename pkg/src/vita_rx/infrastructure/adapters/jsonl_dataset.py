"""
JSONL Dataset Adapter — DatasetRepository implementation.

A dataset directory holds three files:
  - ``meta.json``: ``{"n_dx", "n_px", "n_rx", "format_version": 1}``
  - ``patients.jsonl``: one ``{"id", "visits": [{"dx", "px", "rx"}, ...]}`` per line
  - ``ddi.csv``: header ``i,j`` then one undirected edge per line
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError

from vita_rx.domain.entities import EhrDataset, PatientRecord, Visit, Vocab
from vita_rx.domain.exceptions import DatasetError
from vita_rx.domain.ports import DatasetRepository

log = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
META_FILE = "meta.json"
PATIENTS_FILE = "patients.jsonl"
DDI_FILE = "ddi.csv"


class _Meta(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_dx: int
    n_px: int
    n_rx: int
    format_version: int = DATASET_FORMAT_VERSION


class _VisitLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dx: list[int]
    px: list[int]
    rx: list[int]


class _PatientLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    visits: list[_VisitLine]


class JsonlDatasetRepository(DatasetRepository):
    """Reads and writes dataset directories; every load is fully validated."""

    def load(self, path: Path) -> EhrDataset:
        path = Path(path)
        if not path.is_dir():
            raise DatasetError(f"Dataset directory not found: {path}")

        vocab = self._load_meta(path / META_FILE)
        patients = self._load_patients(path / PATIENTS_FILE, vocab)
        ddi_edges = self._load_ddi(path / DDI_FILE, vocab)
        log.info(
            "📂 Loaded %d patients (|D|=%d, |P|=%d, |M|=%d, %d DDI edges) from %s",
            len(patients),
            vocab.n_dx,
            vocab.n_px,
            vocab.n_rx,
            len(ddi_edges),
            path,
        )
        return EhrDataset(vocab=vocab, patients=tuple(patients), ddi_edges=tuple(ddi_edges))

    def save(self, dataset: EhrDataset, path: Path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)

        meta = _Meta(
            n_dx=dataset.vocab.n_dx, n_px=dataset.vocab.n_px, n_rx=dataset.vocab.n_rx
        )
        (path / META_FILE).write_text(
            json.dumps(meta.model_dump(), indent=2) + "\n", encoding="utf-8"
        )

        with (path / PATIENTS_FILE).open("w", encoding="utf-8", newline="\n") as f:
            for record in dataset.patients:
                line = {
                    "id": record.id,
                    "visits": [
                        {"dx": list(v.dx), "px": list(v.px), "rx": list(v.rx)}
                        for v in record.visits
                    ],
                }
                f.write(json.dumps(line, separators=(",", ":")) + "\n")

        with (path / DDI_FILE).open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["i", "j"])
            writer.writerows(sorted(dataset.ddi_edges))
        log.debug("💾 Dataset written to %s", path)

    def fingerprint(self, path: Path) -> str:
        digest = hashlib.sha256()
        for name in (META_FILE, PATIENTS_FILE, DDI_FILE):
            file = Path(path) / name
            if not file.is_file():
                raise DatasetError(f"Dataset file missing: {file}")
            digest.update(name.encode("utf-8"))
            digest.update(file.read_bytes())
        return digest.hexdigest()

    # ── readers ───────────────────────────────────────────────

    @staticmethod
    def _load_meta(file: Path) -> Vocab:
        if not file.is_file():
            raise DatasetError(f"Dataset file missing: {file}")
        try:
            meta = _Meta.model_validate_json(file.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise DatasetError(f"{file.name} is malformed: {e}", cause=e) from e
        if meta.format_version != DATASET_FORMAT_VERSION:
            raise DatasetError(
                f"{file.name} has format_version {meta.format_version}, "
                f"expected {DATASET_FORMAT_VERSION}"
            )
        return Vocab(n_dx=meta.n_dx, n_px=meta.n_px, n_rx=meta.n_rx)

    @staticmethod
    def _load_patients(file: Path, vocab: Vocab) -> list[PatientRecord]:
        if not file.is_file():
            raise DatasetError(f"Dataset file missing: {file}")

        patients: list[PatientRecord] = []
        seen: set[str] = set()
        with file.open(encoding="utf-8") as f:
            for lineno, raw in enumerate(f, 1):
                if not raw.strip():
                    continue
                try:
                    line = _PatientLine.model_validate_json(raw)
                except ValidationError as e:
                    raise DatasetError(
                        f"{file.name} line {lineno} is malformed: {e}", cause=e
                    ) from e
                if line.id in seen:
                    raise DatasetError(
                        f"{file.name} line {lineno}: duplicate patient id '{line.id}'"
                    )
                seen.add(line.id)
                record = PatientRecord(
                    id=line.id,
                    visits=tuple(Visit(dx=v.dx, px=v.px, rx=v.rx) for v in line.visits),
                )
                record.validate(vocab)
                patients.append(record)

        return patients

    @staticmethod
    def _load_ddi(file: Path, vocab: Vocab) -> list[tuple[int, int]]:
        if not file.is_file():
            raise DatasetError(f"Dataset file missing: {file}")

        edges: list[tuple[int, int]] = []
        with file.open(encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != ["i", "j"]:
                raise DatasetError(f"{file.name} must start with the header 'i,j', got {header}")
            for lineno, row in enumerate(reader, 2):
                if not row:
                    continue
                try:
                    i, j = (int(x) for x in row)
                except ValueError as e:
                    raise DatasetError(
                        f"{file.name} line {lineno} is malformed: {row}", cause=e
                    ) from e
                for m in (i, j):
                    if not 0 <= m < vocab.n_rx:
                        raise DatasetError(
                            f"{file.name} line {lineno}: medication {m} "
                            f"out of range [0, {vocab.n_rx})"
                        )
                edges.append((i, j))
        return edges
