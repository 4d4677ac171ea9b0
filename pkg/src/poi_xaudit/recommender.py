"""Spatio-temporal attention recommender.

Per timestep the user, POI and hour-of-week embeddings are summed.  A
self-attention layer whose logits are penalised by normalised haversine and
hour gaps aggregates the trajectory; a scalar projection of each aggregated
step gives the intermediate vector ``v``.  Every candidate POI attends over
the aggregated steps, which yields the ``L x T`` matching matrix ``W``, and
the candidate scores are ``W @ v``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import tensor as tc
from .errors import EmptyDataset, NumericError, UnknownId
from .geo import haversine_matrix
from .ingest import HOURS_PER_WEEK, Dataset, PoiRegistry, Step, split_last
from .rng import derive

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    d_emb: int = 50
    t_max: int = 100
    epochs: int = 30
    lr: float = 3e-3
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # also learn from every earlier step of the input, never from the held-out last step
    prefix_targets: bool = True

    def __post_init__(self):
        if self.d_emb < 2:
            raise ValueError("d_emb must be at least 2")
        if self.t_max < 2:
            raise ValueError("t_max must be at least 2")


@dataclass
class Prediction:
    scores: np.ndarray
    recommended_poi: int
    W: np.ndarray
    v: np.ndarray
    valid_T: int


@dataclass
class TrainReport:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_accuracy: list[float] = field(default_factory=list)
    initial_loss: float = float("nan")
    heldout_accuracy: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


class ModelState:
    """Learned tensors plus the id maps needed to run them."""

    def __init__(self, config: ModelConfig, user_ids: Sequence[int], registry: PoiRegistry):
        self.config = config
        self.user_ids = [int(u) for u in user_ids]
        self.user_index = {u: k for k, u in enumerate(self.user_ids)}
        self.registry = registry
        self.store = tc.ParamStore()

    @classmethod
    def init(cls, config: ModelConfig, user_ids: Sequence[int], registry: PoiRegistry) -> ModelState:
        state = cls(config, user_ids, registry)
        d = config.d_emb
        s = config.seed
        state.store.add("user_emb", tc.normal_table(derive(s, "init", "user_emb"), len(state.user_ids), d))
        state.store.add("poi_emb", tc.normal_table(derive(s, "init", "poi_emb"), len(registry), d))
        state.store.add("hour_emb", tc.normal_table(derive(s, "init", "hour_emb"), HOURS_PER_WEEK, d))
        for name in ("w_query", "w_key", "w_value"):
            state.store.add(name, tc.glorot_uniform(derive(s, "init", name), d, d))
        state.store.add("w_spatial", np.ones(1))
        state.store.add("w_temporal", np.ones(1))
        state.store.add("w_out", tc.glorot_uniform(derive(s, "init", "w_out"), d, 1).reshape(d))
        return state

    @property
    def n_pois(self) -> int:
        return len(self.registry)

    def param(self, name: str) -> tc.Tensor:
        return self.store[name]

    def user_row(self, user_id: int) -> int:
        try:
            return self.user_index[user_id]
        except KeyError:
            raise UnknownId(f"unknown user {user_id}") from None

    def poi_rows(self, steps: Sequence[Step]) -> np.ndarray:
        try:
            return np.array([self.registry.index(s.poi_id) for s in steps], dtype=np.int64)
        except KeyError as exc:
            raise UnknownId(f"unknown POI {exc.args[0]}") from None


def _check_steps(state: ModelState, steps: Sequence[Step]) -> None:
    if not 1 <= len(steps) <= state.config.t_max:
        raise tc.ShapeError(f"need between 1 and {state.config.t_max} input steps, got {len(steps)}")


def embed_trajectory(state: ModelState, user_id: int, steps: Sequence[Step]) -> tc.Tensor:
    """``e_user[u] + e_poi[poi_t] + e_hour[hour_t]`` for every step, shape ``(T, d)``."""
    _check_steps(state, steps)
    u = state.user_row(user_id)
    pois = state.poi_rows(steps)
    hours = np.array([s.hour_of_week for s in steps], dtype=np.int64)
    x = tc.embedding_lookup(state.param("user_emb"), np.full(len(steps), u))
    x = tc.add(x, tc.embedding_lookup(state.param("poi_emb"), pois))
    return tc.add(x, tc.embedding_lookup(state.param("hour_emb"), hours))


def relation_bias(state: ModelState, steps: Sequence[Step]) -> tc.Tensor | None:
    """Additive attention bias ``-w_s * dist/max_dist - w_t * gap/max_gap``.

    A term whose per-trajectory maximum is zero is dropped.
    """
    pois = state.poi_rows(steps)
    lat, lon = state.registry.lats[pois], state.registry.lons[pois]
    dist = haversine_matrix(lat, lon, lat, lon)
    hours = np.array([s.raw_hour for s in steps], dtype=np.float64)
    gap = np.abs(hours[:, None] - hours[None, :])
    bias = None
    for name, rel in (("w_spatial", dist), ("w_temporal", gap)):
        top = rel.max()
        if top <= 0:
            continue
        term = tc.scalar_times(state.param(name), -rel / top)
        bias = term if bias is None else tc.add(bias, term)
    return bias


def aggregate(state: ModelState, x: tc.Tensor, steps: Sequence[Step]) -> tc.Tensor:
    """Biased self-attention with a residual path and ReLU, shape ``(T, d)``."""
    inv = 1.0 / math.sqrt(state.config.d_emb)
    q = tc.matmul(x, state.param("w_query"))
    k = tc.matmul(x, state.param("w_key"))
    val = tc.matmul(x, state.param("w_value"))
    logits = tc.scale(tc.matmul(q, tc.transpose(k)), inv)
    bias = relation_bias(state, steps)
    if bias is not None:
        logits = tc.add(logits, bias)
    attn = tc.row_softmax(logits)
    return tc.relu(tc.add(x, tc.matmul(attn, val)))


def match(candidates: tc.Tensor, agg: tc.Tensor, v: tc.Tensor) -> tuple[tc.Tensor, tc.Tensor]:
    """Candidate-over-timestep softmax ``W`` and scores ``W @ v``."""
    d = agg.shape[1]
    W = tc.row_softmax(tc.scale(tc.matmul(candidates, tc.transpose(agg)), 1.0 / math.sqrt(d)))
    return W, tc.matmul(W, v)


def _forward_tensors(state: ModelState, user_id: int, steps: Sequence[Step]):
    x = embed_trajectory(state, user_id, steps)
    agg = aggregate(state, x, steps)
    v = tc.matmul(agg, state.param("w_out"))
    W, scores = match(state.param("poi_emb"), agg, v)
    return W, v, scores


def argmax_first(scores: np.ndarray) -> int:
    # np.argmax already returns the first maximal index
    return int(np.argmax(scores))


def forward(state: ModelState, user_id: int, steps: Sequence[Step]) -> Prediction:
    with tc.no_grad():
        W, v, scores = _forward_tensors(state, user_id, steps)
    T = len(steps)
    t_max = state.config.t_max
    W_full = np.zeros((W.shape[0], t_max), dtype=W.data.dtype)
    W_full[:, :T] = W.data
    v_full = np.zeros(t_max, dtype=v.data.dtype)
    v_full[:T] = v.data
    s = scores.data
    return Prediction(scores=s, recommended_poi=argmax_first(s), W=W_full, v=v_full, valid_T=T)


def recommend(state: ModelState, user_id: int, steps: Sequence[Step]) -> int:
    """Internal index of the recommended POI (no explanation artifacts)."""
    with tc.no_grad():
        _, _, scores = _forward_tensors(state, user_id, steps)
    return argmax_first(scores.data)


def scores_and_loss(state: ModelState, user_id: int, steps: Sequence[Step], target_poi: int) -> tuple[tc.Tensor, tc.Tensor]:
    _, _, scores = _forward_tensors(state, user_id, steps)
    return scores, tc.cross_entropy(scores, state.registry.index(target_poi))


def loss(state: ModelState, user_id: int, steps: Sequence[Step], target_poi: int) -> tc.Tensor:
    return scores_and_loss(state, user_id, steps, target_poi)[1]


def training_examples(dataset: Dataset, config: ModelConfig) -> list[tuple[int, tuple[Step, ...], int]]:
    """(user, input steps, target POI) triples; the last step of each trajectory is never a target."""
    out = []
    for tr in dataset.trajectories:
        split = split_last(tr, config.t_max)
        inputs = tr.steps[:-1]
        if config.prefix_targets:
            for end in range(1, len(inputs)):
                out.append((tr.user_id, inputs[max(0, end - config.t_max) : end], inputs[end].poi_id))
        else:
            out.append((split.user_id, split.input_steps, split.target_poi))
    return out


def heldout_accuracy(state: ModelState, dataset: Dataset) -> float:
    hits = 0
    for tr in dataset.trajectories:
        split = split_last(tr, state.config.t_max)
        hits += recommend(state, split.user_id, split.input_steps) == state.registry.index(split.target_poi)
    return hits / len(dataset.trajectories)


def mean_loss(state: ModelState, examples) -> float:
    with tc.no_grad():
        return float(np.mean([loss(state, u, s, t).item() for u, s, t in examples]))


def train(config: ModelConfig, dataset: Dataset, state: ModelState | None = None) -> tuple[ModelState, TrainReport]:
    """Adam on per-trajectory cross-entropy, one example per step, seeded shuffling."""
    if len(dataset) == 0:
        raise EmptyDataset("nothing to train on")
    if state is None:
        state = ModelState.init(config, dataset.user_ids, dataset.registry)
    examples = training_examples(dataset, config)
    if not examples:
        raise EmptyDataset("no training examples")
    report = TrainReport(initial_loss=mean_loss(state, examples))
    for epoch in range(config.epochs):
        order = derive(config.seed, "train-order", epoch).permutation(len(examples))
        total, hits = 0.0, 0
        for i in order:
            user, steps, target = examples[i]
            scores, out = scores_and_loss(state, user, steps, target)
            if not math.isfinite(out.item()):
                raise NumericError("non-finite training loss")
            total += out.item()
            hits += argmax_first(scores.data) == state.registry.index(target)
            tc.backward(out)
            tc.adam_step(state.store, config.lr, config.beta1, config.beta2, config.eps)
        report.epoch_loss.append(total / len(examples))
        report.epoch_accuracy.append(hits / len(examples))
        log.info("epoch %d loss %.4f acc %.4f", epoch + 1, report.epoch_loss[-1], report.epoch_accuracy[-1])
    report.heldout_accuracy = heldout_accuracy(state, dataset)
    return state, report
