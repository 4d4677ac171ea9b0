"""User compressor: pooled timestep embeddings -> 512 -> 16 -> one logit per user.

The 16-unit ReLU layer is the user vector.  Similar users for a query are
the other users with the largest logits when the query's own trajectory
embeddings are fed through the classifier.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import tensor as tc
from .errors import EmptyDataset, ShapeError, UnknownId
from .ingest import Dataset, split_last
from .recommender import ModelState, embed_trajectory
from .rng import derive

log = logging.getLogger(__name__)

HIDDEN = 512
USER_DIM = 16


@dataclass(frozen=True)
class CompressorConfig:
    epochs: int = 200
    lr: float = 1e-3
    seed: int = 0
    hidden: int = HIDDEN
    user_dim: int = USER_DIM


@dataclass(frozen=True)
class UserVector:
    user_id: int
    embedding: np.ndarray


@dataclass
class CompressorReport:
    epoch_loss: list[float] = field(default_factory=list)
    initial_loss: float = float("nan")
    accuracy: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


class CompressorState:
    def __init__(self, config: CompressorConfig, d_in: int, user_ids: Sequence[int]):
        self.config = config
        self.d_in = d_in
        self.user_ids = [int(u) for u in user_ids]
        self.user_index = {u: k for k, u in enumerate(self.user_ids)}
        self.store = tc.ParamStore()

    @classmethod
    def init(cls, config: CompressorConfig, d_in: int, user_ids: Sequence[int]) -> CompressorState:
        state = cls(config, d_in, user_ids)
        s, h, k, n = config.seed, config.hidden, config.user_dim, len(state.user_ids)
        state.store.add("w1", tc.glorot_uniform(derive(s, "compressor", "w1"), d_in, h))
        state.store.add("b1", np.zeros(h))
        state.store.add("w2", tc.glorot_uniform(derive(s, "compressor", "w2"), h, k))
        state.store.add("b2", np.zeros(k))
        state.store.add("w3", tc.glorot_uniform(derive(s, "compressor", "w3"), k, n))
        state.store.add("b3", np.zeros(n))
        return state

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    def param(self, name: str) -> tc.Tensor:
        return self.store[name]


def _layers(state: CompressorState, pooled: tc.Tensor) -> tuple[tc.Tensor, tc.Tensor]:
    h = tc.relu(tc.add(tc.matmul(pooled, state.param("w1")), state.param("b1")))
    z = tc.relu(tc.add(tc.matmul(h, state.param("w2")), state.param("b2")))
    return z, tc.add(tc.matmul(z, state.param("w3")), state.param("b3"))


def _pool(embeddings) -> tc.Tensor:
    x = embeddings if isinstance(embeddings, tc.Tensor) else tc.constant(embeddings)
    if x.data.ndim != 2 or x.shape[0] < 1:
        raise ShapeError(f"expected a (T, d) embedding matrix with T >= 1, got {x.shape}")
    return tc.mean_pool_rows(x)


def compress(state: CompressorState, user_timestep_embeddings, user_id: int | None = None) -> tuple[UserVector, np.ndarray]:
    """User vector (post-ReLU 16-unit layer) and the per-user logits."""
    with tc.no_grad():
        pooled = _pool(user_timestep_embeddings)
        if pooled.shape[0] != state.d_in:
            raise ShapeError(f"compressor expects width {state.d_in}, got {pooled.shape[0]}")
        z, logits = _layers(state, pooled)
    return UserVector(-1 if user_id is None else int(user_id), z.data.copy()), logits.data.copy()


def user_embeddings(recommender: ModelState, dataset: Dataset, user_id: int) -> np.ndarray:
    """Timestep embeddings of the user's model input (all but the last step)."""
    split = split_last(dataset.trajectory(user_id), recommender.config.t_max)
    with tc.no_grad():
        return embed_trajectory(recommender, user_id, split.input_steps).data.copy()


def pooled_inputs(recommender: ModelState, dataset: Dataset) -> dict[int, np.ndarray]:
    return {u: user_embeddings(recommender, dataset, u) for u in dataset.user_ids}


def classification_accuracy(state: CompressorState, inputs: dict[int, np.ndarray]) -> float:
    hits = 0
    for u, emb in inputs.items():
        _, logits = compress(state, emb, u)
        hits += int(np.argmax(logits)) == state.user_index[u]
    return hits / len(inputs)


def train_compressor(recommender: ModelState, dataset: Dataset, config: CompressorConfig = CompressorConfig()) -> tuple[CompressorState, CompressorReport]:
    """Fit the user classifier on the (frozen) recommender's timestep embeddings."""
    if len(dataset) == 0:
        raise EmptyDataset("nothing to train on")
    inputs = pooled_inputs(recommender, dataset)
    state = CompressorState.init(config, recommender.config.d_emb, dataset.user_ids)
    with tc.no_grad():
        pooled = {u: _pool(e).data for u, e in inputs.items()}
    report = CompressorReport()

    def example_loss(u: int) -> tc.Tensor:
        _, logits = _layers(state, tc.constant(pooled[u]))
        return tc.cross_entropy(logits, state.user_index[u])

    with tc.no_grad():
        report.initial_loss = float(np.mean([example_loss(u).item() for u in dataset.user_ids]))
    users = list(dataset.user_ids)
    for epoch in range(config.epochs):
        order = derive(config.seed, "compressor-order", epoch).permutation(len(users))
        total = 0.0
        for i in order:
            out = example_loss(users[i])
            total += out.item()
            tc.backward(out)
            tc.adam_step(state.store, config.lr)
        report.epoch_loss.append(total / len(users))
        if (epoch + 1) % 25 == 0:
            log.info("compressor epoch %d loss %.4f", epoch + 1, report.epoch_loss[-1])
    report.accuracy = classification_accuracy(state, inputs)
    return state, report


def rank_by_logits(logits: np.ndarray, user_ids: Sequence[int], exclude: int, k: int) -> list[tuple[int, float]]:
    """Top-``k`` users by logit, skipping ``exclude``; ties go to the smaller user id."""
    order = sorted((i for i, u in enumerate(user_ids) if u != exclude), key=lambda i: (-float(logits[i]), user_ids[i]))
    return [(int(user_ids[i]), float(logits[i])) for i in order[:k]]


def similar_users(state: CompressorState, user_timestep_embeddings, user_id: int, k: int = 2) -> list[tuple[int, float]]:
    if user_id not in state.user_index:
        raise UnknownId(f"unknown user {user_id}")
    if not 1 <= k < state.n_users:
        raise ValueError(f"k must be in [1, {state.n_users - 1}], got {k}")
    _, logits = compress(state, user_timestep_embeddings, user_id)
    return rank_by_logits(logits, state.user_ids, user_id, k)


def vector_distance(a: UserVector, b: UserVector) -> float:
    """Euclidean distance between user vectors; a diagnostic, not used by the audits."""
    return float(math.sqrt(np.sum((a.embedding.astype(np.float64) - b.embedding) ** 2)))


class SimilarityIndex:
    """Caches each user's recommender embeddings so repeated neighbour queries are cheap."""

    def __init__(self, recommender: ModelState, compressor: CompressorState, dataset: Dataset):
        self.compressor = compressor
        self.inputs = pooled_inputs(recommender, dataset)
        self._cache: dict[int, list[tuple[int, float]]] = {}

    def neighbours(self, user_id: int, k: int = 2) -> list[tuple[int, float]]:
        full = self._cache.get(user_id)
        if full is None:
            if user_id not in self.inputs:
                raise UnknownId(f"unknown user {user_id}")
            full = similar_users(self.compressor, self.inputs[user_id], user_id, self.compressor.n_users - 1)
            self._cache[user_id] = full
        return full[:k]
