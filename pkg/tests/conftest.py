"""Shared test fixtures."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from vita_rx.application.dto import DatasetSplits
from vita_rx.application.pipeline import prepare_splits
from vita_rx.application.synthetic import generate_synthetic
from vita_rx.core.config import SynthConfig, TrainConfig
from vita_rx.domain.ehr import build_graphs
from vita_rx.domain.entities import EhrDataset, MedicationGraphs, PatientRecord, Visit, Vocab
from vita_rx.infrastructure.adapters.jsonl_dataset import JsonlDatasetRepository
from vita_rx.model.vita import VitaModel


@pytest.fixture
def vocab() -> Vocab:
    return Vocab(n_dx=6, n_px=4, n_rx=6)


@pytest.fixture
def patient() -> PatientRecord:
    return PatientRecord(
        id="p1",
        visits=(
            Visit(dx=(0, 1), px=(0,), rx=(0, 1)),
            Visit(dx=(2, 3), px=(1, 2), rx=(2, 3)),
            Visit(dx=(0, 1, 4), px=(0, 3), rx=(0, 1, 4)),
        ),
    )


@pytest.fixture
def records(patient: PatientRecord) -> list[PatientRecord]:
    return [
        patient,
        PatientRecord(
            id="p2",
            visits=(
                Visit(dx=(5,), px=(3,), rx=(5,)),
                Visit(dx=(4, 5), px=(2, 3), rx=(4, 5)),
            ),
        ),
    ]


@pytest.fixture
def graphs(records: list[PatientRecord], vocab: Vocab) -> MedicationGraphs:
    return build_graphs(records, [(0, 2), (1, 4)], vocab)


@pytest.fixture
def small_config() -> TrainConfig:
    return TrainConfig(dim=8, epochs=2, patience=1, seed=0)


@pytest.fixture
def model(vocab: Vocab, small_config: TrainConfig, graphs: MedicationGraphs) -> VitaModel:
    return VitaModel.initialise(vocab, small_config, graphs)


@pytest.fixture
def tiny_synth() -> SynthConfig:
    return SynthConfig(
        n_patients=18,
        n_dx=12,
        n_px=8,
        n_rx=9,
        n_clusters=3,
        max_visits=4,
        ddi_density=0.1,
        seed=7,
    )


@pytest.fixture
def tiny_dataset(tiny_synth: SynthConfig) -> EhrDataset:
    return generate_synthetic(tiny_synth).dataset


@pytest.fixture
def tiny_splits(tiny_dataset: EhrDataset) -> DatasetSplits:
    return prepare_splits(tiny_dataset, seed=0)


@pytest.fixture
def dataset_dir(tmp_path: Path, tiny_dataset: EhrDataset) -> Path:
    path = tmp_path / "data"
    JsonlDatasetRepository().save(tiny_dataset, path)
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
