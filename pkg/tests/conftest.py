from __future__ import annotations

import numpy as np
import pytest

from poi_xaudit.ingest import Dataset, PoiRegistry, Trajectory, make_step
from poi_xaudit.recommender import ModelConfig, ModelState

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def make_dataset(coords: dict[int, tuple[float, float]], users: dict[int, list[tuple[int, int]]]) -> Dataset:
    """Dataset from ``{poi: (lat, lon)}`` and ``{user: [(poi, raw_hour), ...]}``."""
    trajs = tuple(Trajectory(u, tuple(make_step(p, h) for p, h in steps)) for u, steps in sorted(users.items()))
    return Dataset(trajs, PoiRegistry(coords))


def toy_dataset(n_users: int = 5, n_pois: int = 5, length: int = 4, seed: int = 3) -> Dataset:
    rng = np.random.default_rng(seed)
    coords = {p: (40.5 + 0.4 * rng.random(), -74.2 + 0.5 * rng.random()) for p in range(1, n_pois + 1)}
    users = {}
    for u in range(1, n_users + 1):
        hours = np.cumsum(rng.integers(0, 30, size=length))
        users[u] = [(int(rng.integers(1, n_pois + 1)), int(h)) for h in hours]
    return make_dataset(coords, users)


def toy_model(dataset: Dataset, d_emb: int = 4, t_max: int = 3, seed: int = 0) -> ModelState:
    return ModelState.init(ModelConfig(d_emb=d_emb, t_max=t_max, seed=seed), dataset.user_ids, dataset.registry)


@pytest.fixture
def toy():
    ds = toy_dataset()
    return ds, toy_model(ds)


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """``acceptance(n, passed, detail)`` records one line for the end-of-run summary."""
    results = request.config.stash[ACCEPTANCE_KEY]

    def record(n: int, passed: bool, detail: str) -> None:
        line = f"criterion {n:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        results[n] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
