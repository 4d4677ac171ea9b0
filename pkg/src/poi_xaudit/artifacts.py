"""On-disk layout of a run directory and (de)serialisation of trained models."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

from . import checkpoint
from .compressor import CompressorConfig, CompressorState
from .errors import CheckpointError, MissingDataset
from .ingest import Dataset, dumps_dataset, read_dataset
from .recommender import ModelConfig, ModelState


class RunPaths:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def checkins(self) -> Path:
        return self.root / "checkins.txt"

    @property
    def dataset(self) -> Path:
        return self.root / "dataset.pxd"

    @property
    def recommender(self) -> Path:
        return self.root / "recommender.pxck"

    @property
    def compressor(self) -> Path:
        return self.root / "compressor.pxck"

    @property
    def clone_dataset(self) -> Path:
        return self.root / "clone_dataset.pxd"

    @property
    def clone_manifest(self) -> Path:
        return self.root / "clone_manifest.json"

    @property
    def clone_recommender(self) -> Path:
        return self.root / "clone_recommender.pxck"

    @property
    def clone_compressor(self) -> Path:
        return self.root / "clone_compressor.pxck"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    def report(self, name: str, ext: str) -> Path:
        return self.reports / f"{name}.{ext}"


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def dataset_hash(dataset: Dataset) -> str:
    return hashlib.sha256(dumps_dataset(dataset).encode("utf-8")).hexdigest()


def load_dataset(path: Path) -> Dataset:
    if not path.exists():
        raise MissingDataset(f"dataset {path} not found; run `ingest` first")
    return read_dataset(path)


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def save_recommender(path: Path, state: ModelState, extra: dict) -> str:
    meta = dict(extra)
    meta.update({
        "kind": "recommender",
        "model_config": dataclasses.asdict(state.config),
        "user_ids": state.user_ids,
        "poi_ids": state.registry.poi_ids,
    })
    return checkpoint.save(path, state.store.arrays(), meta)


def load_recommender(path: Path, dataset: Dataset) -> tuple[ModelState, dict, str]:
    tensors, meta, digest = checkpoint.load(path)
    if meta.get("kind") != "recommender":
        raise CheckpointError(f"{path} is not a recommender checkpoint")
    if meta["poi_ids"] != dataset.registry.poi_ids:
        raise CheckpointError("checkpoint POI ids do not match the dataset")
    state = ModelState.init(ModelConfig(**meta["model_config"]), meta["user_ids"], dataset.registry)
    state.store.load(tensors)
    return state, meta, digest


def save_compressor(path: Path, state: CompressorState, extra: dict) -> str:
    meta = dict(extra)
    meta.update({
        "kind": "compressor",
        "compressor_config": dataclasses.asdict(state.config),
        "d_in": state.d_in,
        "user_ids": state.user_ids,
    })
    return checkpoint.save(path, state.store.arrays(), meta)


def load_compressor(path: Path) -> tuple[CompressorState, dict, str]:
    tensors, meta, digest = checkpoint.load(path)
    if meta.get("kind") != "compressor":
        raise CheckpointError(f"{path} is not a compressor checkpoint")
    state = CompressorState.init(CompressorConfig(**meta["compressor_config"]), meta["d_in"], meta["user_ids"])
    state.store.load(tensors)
    return state, meta, digest
