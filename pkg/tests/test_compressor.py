import numpy as np
import pytest

from conftest import toy_dataset, toy_model
from poi_xaudit import tensor as tc
from poi_xaudit.compressor import (
    CompressorConfig,
    CompressorState,
    SimilarityIndex,
    _layers,
    compress,
    pooled_inputs,
    rank_by_logits,
    similar_users,
    train_compressor,
    vector_distance,
)
from poi_xaudit.errors import ShapeError, UnknownId

GRAD_TOL = 1e-4


def random_state(d_in=4, users=(1, 2, 3, 4, 5), seed=0, hidden=512):
    s = CompressorState.init(CompressorConfig(seed=seed, hidden=hidden), d_in, users)
    rng = np.random.default_rng(seed)
    for name in ("b1", "b2", "b3"):
        s.param(name).data[...] = rng.normal(0, 0.3, s.param(name).shape)
    return s


def test_shapes_and_non_negative_vector():
    s = random_state()
    uv, logits = compress(s, np.random.default_rng(1).normal(size=(7, 4)), 3)
    assert uv.embedding.shape == (16,) and np.all(uv.embedding >= 0)
    assert logits.shape == (5,) and uv.user_id == 3


def test_zero_input_scalar_oracle():
    s = random_state()
    w2, b1, b2 = s.param("w2").data.astype(float), s.param("b1").data.astype(float), s.param("b2").data.astype(float)
    h = [max(0.0, x) for x in b1]
    z = [max(0.0, sum(h[i] * w2[i][j] for i in range(len(h))) + b2[j]) for j in range(16)]
    uv, _ = compress(s, np.zeros((3, 4), dtype=np.float32))
    np.testing.assert_allclose(uv.embedding, z, rtol=1e-5, atol=1e-6)


def test_row_duplication_and_permutation_invariance():
    s = random_state()
    x = np.random.default_rng(2).normal(size=(9, 4)).astype(np.float32)
    base = compress(s, x)[0].embedding
    assert np.array_equal(compress(s, np.vstack([x, x]))[0].embedding, base)
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(9)
        assert np.array_equal(compress(s, x[perm])[0].embedding, base)


def test_shape_errors():
    s = random_state()
    with pytest.raises(ShapeError):
        compress(s, np.zeros((3, 5)))
    with pytest.raises(ShapeError):
        compress(s, np.zeros((0, 4)))


def test_gradient_check_toy():
    with tc.precision(np.float64):
        s = random_state(hidden=8)
        x = tc.constant(np.random.default_rng(4).normal(size=4))
        worst = tc.gradient_check(lambda: tc.cross_entropy(_layers(s, x)[1], 2), s.store)
    assert max(worst.values()) < GRAD_TOL, worst


def test_similar_users_contract():
    s = random_state(users=(10, 20, 30, 40, 50))
    x = np.random.default_rng(5).normal(size=(4, 4))
    top = similar_users(s, x, 30, 2)
    assert len(top) == 2 and 30 not in [u for u, _ in top]
    _, logits = compress(s, x)
    brute = sorted(((float(l), -u) for u, l in zip(s.user_ids, logits) if u != 30), reverse=True)
    assert [u for u, _ in similar_users(s, x, 30, 4)] == [-u for _, u in brute]
    full = similar_users(s, x, 30, 4)
    assert sorted(u for u, _ in full) == [10, 20, 40, 50]
    assert all(a[1] >= b[1] for a, b in zip(full, full[1:]))
    with pytest.raises(UnknownId):
        similar_users(s, x, 99, 2)
    with pytest.raises(ValueError):
        similar_users(s, x, 30, 5)


def test_rank_ties_prefer_smaller_id():
    assert rank_by_logits(np.array([1.0, 2.0, 2.0, 0.5]), [7, 9, 4, 1], exclude=1, k=3) == [(4, 2.0), (9, 2.0), (7, 1.0)]


def _mean_loss(state, rec, ds):
    inputs = pooled_inputs(rec, ds)
    with tc.no_grad():
        return np.mean([tc.cross_entropy(_layers(state, tc.mean_pool_rows(tc.constant(inputs[u])))[1], state.user_index[u]).item() for u in ds.user_ids])


def test_training_descends_and_is_deterministic():
    ds = toy_dataset(n_users=6, length=6)
    rec = toy_model(ds)
    one, r1 = train_compressor(rec, ds, CompressorConfig(epochs=1, hidden=32))
    assert _mean_loss(one, rec, ds) < r1.initial_loss
    cfg = CompressorConfig(epochs=3, hidden=32)
    a, ra = train_compressor(rec, ds, cfg)
    b, _ = train_compressor(rec, ds, cfg)
    for name, arr in a.store.arrays().items():
        assert np.array_equal(arr, b.store.arrays()[name])
    assert 0.0 <= ra.accuracy <= 1.0


def test_similarity_index_matches_direct_query():
    ds = toy_dataset(n_users=6, length=6)
    rec = toy_model(ds)
    comp, _ = train_compressor(rec, ds, CompressorConfig(epochs=1, hidden=16))
    idx = SimilarityIndex(rec, comp, ds)
    for u in ds.user_ids:
        assert idx.neighbours(u, 2) == similar_users(comp, idx.inputs[u], u, 2)


def test_vector_distance():
    s = random_state()
    a, _ = compress(s, np.ones((2, 4)))
    assert vector_distance(a, a) == 0.0
