"""Built-in explanations: influential input timesteps and similar users."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tc
from .compressor import CompressorState, similar_users
from .errors import BadK
from .ingest import Step
from .recommender import ModelState, Prediction, embed_trajectory, forward


@dataclass(frozen=True)
class Explanation:
    user_id: int
    recommended_poi: int
    timestep_ranking: list[tuple[int, float]]
    similar_users: list[tuple[int, float]]

    def to_dict(self, state: ModelState | None = None) -> dict:
        out = {
            "user": self.user_id,
            "recommended_poi_index": self.recommended_poi,
            "timesteps": [{"index": t, "weight": w} for t, w in self.timestep_ranking],
            "similar_users": [{"id": u, "score": s} for u, s in self.similar_users],
        }
        if state is not None:
            pid = state.registry.poi_id(self.recommended_poi)
            lat, lon = state.registry.coords(pid)
            out["recommended_poi"] = {"id": pid, "lat": lat, "lon": lon}
        return out


def top_k_columns(row: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Largest ``k`` entries of ``row``; equal weights keep the smaller index first."""
    order = sorted(range(len(row)), key=lambda t: (-float(row[t]), t))
    return [(t, float(row[t])) for t in order[:k]]


def important_timesteps(prediction: Prediction, k: int, row: int | None = None) -> list[tuple[int, float]]:
    """Top-``k`` timesteps of the matching row for the recommendation (or for ``row``)."""
    if not 1 <= k <= prediction.valid_T:
        raise BadK(f"k must be in [1, {prediction.valid_T}], got {k}")
    l = prediction.recommended_poi if row is None else row
    return top_k_columns(prediction.W[l, : prediction.valid_T], k)


def explain(recommender: ModelState, compressor: CompressorState, user_id: int, steps: list[Step] | tuple[Step, ...], k_steps: int = 2, k_users: int = 2, row: int | None = None) -> Explanation:
    pred = forward(recommender, user_id, steps)
    ranking = important_timesteps(pred, min(k_steps, pred.valid_T), row)
    with tc.no_grad():
        emb = embed_trajectory(recommender, user_id, steps).data
    neighbours = similar_users(compressor, emb, user_id, k_users)
    return Explanation(user_id, pred.recommended_poi, ranking, neighbours)
