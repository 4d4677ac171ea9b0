import numpy as np
import pytest

from conftest import toy_dataset, toy_model
from poi_xaudit.compressor import CompressorConfig, train_compressor
from poi_xaudit.errors import BadK
from poi_xaudit.explain import explain, important_timesteps, top_k_columns
from poi_xaudit.ingest import make_step, split_last
from poi_xaudit.recommender import Prediction, forward


def pred_with_row(row, t_max=6):
    W = np.zeros((2, t_max))
    W[1, : len(row)] = row
    return Prediction(scores=np.array([0.0, 1.0]), recommended_poi=1, W=W, v=np.zeros(t_max), valid_T=len(row))


def test_direct_argmax_and_ties():
    p = pred_with_row([0.1, 0.5, 0.2, 0.2])
    assert important_timesteps(p, 1) == [(1, 0.5)]
    assert important_timesteps(p, 2) == [(1, 0.5), (2, 0.2)]


def test_bad_k():
    p = pred_with_row([0.1, 0.5, 0.2, 0.2])
    for k in (0, 5):
        with pytest.raises(BadK):
            important_timesteps(p, k)


def test_brute_force_prefix():
    row = np.random.default_rng(3).random(30)
    row /= row.sum()
    brute = sorted(range(30), key=lambda t: (-row[t], t))
    for k in (1, 7, 30):
        assert [t for t, _ in top_k_columns(row, k)] == brute[:k]


def test_full_row_sums_to_one():
    ds = toy_dataset()
    m = toy_model(ds)
    sp = split_last(ds.trajectories[1], 3)
    p = forward(m, sp.user_id, sp.input_steps)
    assert sum(w for _, w in important_timesteps(p, p.valid_T)) == pytest.approx(1.0, abs=1e-5)


def test_constant_shift_keeps_ranking():
    logits = np.random.default_rng(1).normal(size=8)
    soft = lambda z: np.exp(z - z.max()) / np.exp(z - z.max()).sum()
    assert [t for t, _ in top_k_columns(soft(logits), 8)] == [t for t, _ in top_k_columns(soft(logits + 17.5), 8)]


@pytest.fixture(scope="module")
def models():
    ds = toy_dataset(n_users=6, length=6)
    rec = toy_model(ds)
    comp, _ = train_compressor(rec, ds, CompressorConfig(epochs=1, hidden=16))
    return ds, rec, comp


def test_explain_composition(models):
    ds, rec, comp = models
    sp = split_last(ds.trajectory(2), 3)
    e = explain(rec, comp, 2, sp.input_steps, 2, 2)
    assert e.recommended_poi == forward(rec, 2, sp.input_steps).recommended_poi
    assert len(e.timestep_ranking) == 2 and all(t < 3 for t, _ in e.timestep_ranking)
    assert all(0 <= w <= 1 for _, w in e.timestep_ranking)
    assert len(e.similar_users) == 2 and 2 not in [u for u, _ in e.similar_users]
    doc = e.to_dict(rec)
    assert doc["recommended_poi"]["id"] == rec.registry.poi_id(e.recommended_poi)


def test_explain_single_step(models):
    ds, rec, comp = models
    e = explain(rec, comp, 1, (make_step(2, 10),), 2, 2)
    assert e.timestep_ranking == [(0, 1.0)]
