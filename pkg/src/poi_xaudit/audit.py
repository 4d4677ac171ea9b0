"""Perturbation audits of the timestep and similar-user explanations.

* Experiment 1 randomizes the most / 2nd most important timestep versus a
  random timestep (twice) and counts recommendation changes over 10 draws.
* Experiment 2 swaps the user id for the most / 2nd most similar user versus
  30 random users (twice) and records whether the recommendation survives.
* Experiment 3 asks whether similar users are geographically or temporally
  closer than 10 random users.
* Experiment 4 plants two almost-clones for each of users 1..100, retrains,
  and counts how often a clone shows up among the top-2 similar users.

Every random draw comes from ``derive(seed, experiment, condition, user,
trial)``, so reports do not depend on evaluation order or worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import tensor as tc
from .compressor import CompressorConfig, SimilarityIndex, train_compressor
from .errors import BadIndex, DataError, EmptySet, NotEnoughUsers
from .explain import important_timesteps
from .geo import haversine_matrix, nearest_other_poi
from .ingest import Dataset, PoiRegistry, Step, Trajectory, make_step, split_last
from .recommender import ModelConfig, ModelState, forward, recommend, train
from .rng import derive
from .stats import DEFAULT_THRESHOLD, TestResult, anova_one_way, t_test_one_sample, t_test_two_sample

Similarity = Callable[[int, int], list[tuple[int, float]]]

EXP1_CONDITIONS = ("top1", "top2", "random_a", "random_b")
EXP1_LABELS = {
    "top1": ("Randomizing the most important timestep", "Experiment 1/1"),
    "top2": ("Randomizing the 2nd most important timestep", "Experiment 1/2"),
    "random_a": ("Randomizing a random timestep (1st run)", "Experiment 1/3"),
    "random_b": ("Randomizing a random timestep (2nd run)", "Experiment 1/4"),
}
EXP1_PAIRS = (("top1", "top2"), ("random_a", "random_b"), ("top1", "random_a"), ("top2", "random_a"))

EXP2_CONDITIONS = ("most_similar", "second_similar", "random_a", "random_b")
EXP2_LABELS = {
    "most_similar": ("Assigning the most similar user ID", "Experiment 2/1"),
    "second_similar": ("Assigning the 2nd most similar user ID", "Experiment 2/2"),
    "random_a": ("Assigning random user IDs (1st run)", "Experiment 2/3"),
    "random_b": ("Assigning random user IDs (2nd run)", "Experiment 2/4"),
}
EXP2_PAIRS = (("most_similar", "random_a"), ("second_similar", "random_a"), ("random_a", "random_b"))

EXP3_VARIANTS = (
    ("distance_all", "POI distances (all pairs)", "Experiment 3/1/1"),
    ("time_all", "Timestamp differences (all pairs)", "Experiment 3/1/2"),
    ("distance_closest", "POI distances (10 closest pairs)", "Experiment 3/2/1"),
    ("time_closest", "Timestamp differences (10 closest pairs)", "Experiment 3/2/2"),
)
EXP3_RANKS = ("most_similar", "second_similar")

CLONE_SOURCES = 100


def _sub(label: str) -> str:
    return label.split()[-1]


def _pair_name(a: str, b: str) -> str:
    return f"{a}_vs_{b}"


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def _fmt_p(p: float) -> str:
    if p == 0.0:
        return "0"
    if p < 1e-3:
        mant, exp = f"{p:.3e}".split("e")
        return f"{mant} x 10^{int(exp)}"
    return f"{p:.3f}"


def _map(fn, items: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Experiment 1


def perturb_timestep(steps: Sequence[Step], t_index: int, registry: PoiRegistry, rng: np.random.Generator) -> tuple[Step, ...]:
    """Replace the POI at ``t_index`` by a different random POI and redraw its hour.

    The new raw hour is uniform over the integers between the neighbouring
    steps' raw hours (0 before the first step, the step's own hour + 168
    after the last one), so the sequence stays time-ordered.
    """
    n = len(steps)
    if not 0 <= t_index < n:
        raise BadIndex(f"timestep {t_index} outside 0..{n - 1}")
    if len(registry) < 2:
        raise DataError("need at least two POIs to draw a different one")
    old = steps[t_index]
    k = int(rng.integers(len(registry) - 1))
    if k >= registry.index(old.poi_id):
        k += 1
    lo = steps[t_index - 1].raw_hour if t_index > 0 else 0
    hi = steps[t_index + 1].raw_hour if t_index + 1 < n else old.raw_hour + 168
    hour = int(rng.integers(lo, hi + 1))
    out = list(steps)
    out[t_index] = make_step(registry.poi_id(k), hour)
    return tuple(out)


@dataclass
class Exp1Report:
    counts: dict[str, list[int]]
    means: dict[str, float]
    tests: dict[str, TestResult]
    users: list[int]
    trials: int
    seed: int
    threshold: float

    def to_dict(self) -> dict:
        return _jsonable({
            "experiment": 1,
            "seed": self.seed,
            "trials": self.trials,
            "threshold": self.threshold,
            "users": self.users,
            "conditions": {c: {"mean": self.means[c], "counts": self.counts[c]} for c in EXP1_CONDITIONS},
            "tests": {k: dict(t.to_dict(), kind="anova") for k, t in self.tests.items()},
        })

    def to_markdown(self) -> str:
        lines = [
            "### Average frequency of recommended-POI change (Experiment 1)",
            "",
            f"Each value is a mean over {len(self.users)} users of the number of changes in {self.trials} randomizations.",
            "",
            "| Experiment | Average Frequency |",
            "|---|---|",
        ]
        for c in EXP1_CONDITIONS:
            label, sub = EXP1_LABELS[c]
            lines.append(f"| {label} ({sub}) | {self.means[c]:.3f} |")
        lines += ["", "### One-way ANOVA p-values (Experiment 1)", "", "| Compared Sub-Experiments | p-value |", "|---|---|"]
        for a, b in EXP1_PAIRS:
            t = self.tests[_pair_name(a, b)]
            lines.append(f"| Experiments {_sub(EXP1_LABELS[a][1])} and {_sub(EXP1_LABELS[b][1])} | {_fmt_p(t.p_value)} |")
        return "\n".join(lines) + "\n"


def _exp1_user(model: ModelState, dataset: Dataset, user_id: int, trials: int, seed: int) -> dict[str, int]:
    split = split_last(dataset.trajectory(user_id), model.config.t_max)
    steps = split.input_steps
    with tc.no_grad():
        pred = forward(model, user_id, steps)
        top = important_timesteps(pred, 2)
        base = pred.recommended_poi
        out = {}
        for cond in EXP1_CONDITIONS:
            changes = 0
            for trial in range(trials):
                rng = derive(seed, "exp1", cond, user_id, trial)
                if cond == "top1":
                    t = top[0][0]
                elif cond == "top2":
                    t = top[1][0]
                else:
                    t = int(rng.integers(len(steps)))
                perturbed = perturb_timestep(steps, t, model.registry, rng)
                changes += recommend(model, user_id, perturbed) != base
            out[cond] = changes
    return out


def run_exp1(model: ModelState, dataset: Dataset, trials: int = 10, seed: int = 0, threshold: float = DEFAULT_THRESHOLD, workers: int = 1) -> Exp1Report:
    users = list(dataset.user_ids)
    rows = _map(lambda u: _exp1_user(model, dataset, u, trials, seed), users, workers)
    counts = {c: [r[c] for r in rows] for c in EXP1_CONDITIONS}
    means = {c: float(np.mean(v)) for c, v in counts.items()}
    tests = {_pair_name(a, b): anova_one_way([counts[a], counts[b]], threshold) for a, b in EXP1_PAIRS}
    return Exp1Report(counts, means, tests, users, trials, seed, threshold)


# ---------------------------------------------------------------------------
# Experiment 2


@dataclass
class Exp2Report:
    indicators: dict[str, list[float]]
    proportions: dict[str, float]
    tests: dict[str, TestResult]
    users: list[int]
    random_trials: int
    seed: int
    threshold: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable({
            "experiment": 2,
            "seed": self.seed,
            "random_trials": self.random_trials,
            "threshold": self.threshold,
            "users": self.users,
            "conditions": {c: {"proportion_unchanged": self.proportions[c], "indicators": self.indicators[c]} for c in EXP2_CONDITIONS},
            "tests": {k: dict(t.to_dict(), kind="student_t") for k, t in self.tests.items()},
            "notes": self.notes,
        })

    def to_markdown(self) -> str:
        lines = [
            "### Proportion of recommended POI being unchanged (Experiment 2)",
            "",
            "| Experiment | Proportion Unchanged |",
            "|---|---|",
        ]
        for c in EXP2_CONDITIONS:
            label, sub = EXP2_LABELS[c]
            if c.startswith("random"):
                label += f" {self.random_trials}x"
            lines.append(f"| {label} ({sub}) | {100 * self.proportions[c]:.3f}% |")
        lines += ["", "### Student's t-test p-values (Experiment 2)", "", "| Compared Sub-Experiments | p-value |", "|---|---|"]
        for a, b in EXP2_PAIRS:
            t = self.tests[_pair_name(a, b)]
            lines.append(f"| Experiments {_sub(EXP2_LABELS[a][1])} and {_sub(EXP2_LABELS[b][1])} | {_fmt_p(t.p_value)} |")
        if self.notes:
            lines += [""] + [f"- {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _exp2_user(model: ModelState, dataset: Dataset, similarity: Similarity, user_id: int, random_trials: int, seed: int) -> dict[str, float]:
    steps = split_last(dataset.trajectory(user_id), model.config.t_max).input_steps
    others = [u for u in dataset.user_ids if u != user_id]
    draws = min(random_trials, len(others))
    with tc.no_grad():
        base = recommend(model, user_id, steps)
        neighbours = [u for u, _ in similarity(user_id, 2)]
        out = {
            "most_similar": float(recommend(model, neighbours[0], steps) == base),
            "second_similar": float(recommend(model, neighbours[1], steps) == base),
        }
        for cond in ("random_a", "random_b"):
            rng = derive(seed, "exp2", cond, user_id)
            picks = rng.choice(len(others), size=draws, replace=False)
            same = sum(recommend(model, others[i], steps) == base for i in picks)
            out[cond] = same / draws
    return out


def run_exp2(model: ModelState, similarity: Similarity, dataset: Dataset, random_trials: int = 30, seed: int = 0, threshold: float = DEFAULT_THRESHOLD, workers: int = 1) -> Exp2Report:
    """``similarity(user, k)`` returns the ranked ``k`` most similar other users."""
    users = list(dataset.user_ids)
    rows = _map(lambda u: _exp2_user(model, dataset, similarity, u, random_trials, seed), users, workers)
    indicators = {c: [r[c] for r in rows] for c in EXP2_CONDITIONS}
    proportions = {c: float(np.mean(v)) for c, v in indicators.items()}
    tests = {_pair_name(a, b): t_test_two_sample(indicators[a], indicators[b], threshold) for a, b in EXP2_PAIRS}
    notes = [f"random replacement users drawn without replacement ({min(random_trials, len(users) - 1)} distinct per user)"]
    return Exp2Report(indicators, proportions, tests, users, random_trials, seed, threshold, notes)


# ---------------------------------------------------------------------------
# Experiment 3


def _mean_smallest(values: np.ndarray, closest_k: int | None) -> float:
    flat = np.asarray(values, dtype=np.float64).reshape(-1)
    if closest_k is None:
        return float(flat.sum() / flat.size)
    if closest_k < 1:
        raise ValueError("closest_k must be positive")
    k = min(closest_k, flat.size)
    return float(np.sort(flat)[:k].sum() / k)


def avg_poi_distance(traj_i: Trajectory, traj_j: Trajectory, registry: PoiRegistry, closest_k: int | None = None) -> float:
    """Mean haversine distance (km) over distinct-POI pairs, optionally over the ``closest_k`` nearest pairs."""
    pi = sorted(set(traj_i.poi_ids))
    pj = sorted(set(traj_j.poi_ids))
    if not pi or not pj:
        raise EmptySet("both users need at least one POI")
    a = np.array([registry.index(p) for p in pi])
    b = np.array([registry.index(p) for p in pj])
    d = haversine_matrix(registry.lats[a], registry.lons[a], registry.lats[b], registry.lons[b])
    return _mean_smallest(d, closest_k)


def avg_time_difference(traj_i: Trajectory, traj_j: Trajectory, closest_k: int | None = None) -> float:
    """Mean absolute hour-of-week difference over all timestamp pairs (no weekly wrap-around)."""
    ti = np.array([s.hour_of_week for s in traj_i.steps], dtype=np.float64)
    tj = np.array([s.hour_of_week for s in traj_j.steps], dtype=np.float64)
    if ti.size == 0 or tj.size == 0:
        raise EmptySet("both users need at least one timestamp")
    return _mean_smallest(np.abs(ti[:, None] - tj[None, :]), closest_k)


def _exp3_metrics(dataset: Dataset, u: int, v: int, closest_k: int) -> dict[str, float]:
    a, b = dataset.trajectory(u), dataset.trajectory(v)
    reg = dataset.registry
    return {
        "distance_all": avg_poi_distance(a, b, reg),
        "time_all": avg_time_difference(a, b),
        "distance_closest": avg_poi_distance(a, b, reg, closest_k),
        "time_closest": avg_time_difference(a, b, closest_k),
    }


def compare_to_random(deterministic: float, random_values: Sequence[float], threshold: float = DEFAULT_THRESHOLD) -> tuple[TestResult, bool]:
    """One-sample t-test of the random sample against the deterministic value, gated on direction."""
    res = t_test_one_sample(random_values, deterministic, threshold)
    closer = deterministic < float(np.mean(random_values))
    return res, bool(res.significant and closer)


@dataclass
class Exp3Report:
    proportions: dict[str, dict[str, float]]
    significant_counts: dict[str, dict[str, int]]
    n_users: int
    n_random: int
    closest_k: int
    seed: int
    threshold: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable({
            "experiment": 3,
            "seed": self.seed,
            "n_random": self.n_random,
            "closest_k": self.closest_k,
            "threshold": self.threshold,
            "n_users": self.n_users,
            "proportions": self.proportions,
            "significant_counts": self.significant_counts,
            "notes": self.notes,
        })

    def to_markdown(self) -> str:
        lines = [
            "### Proportion of statistically-significant differences (Experiment 3)",
            "",
            f"Similar user versus {self.n_random} random users, one-sample Student's t-test at {self.threshold}.",
            "",
            "| Experiment | Most Similar User | 2nd Most Similar User |",
            "|---|---|---|",
        ]
        for key, label, sub in EXP3_VARIANTS:
            p = self.proportions[key]
            lines.append(f"| {label} ({sub}) | {100 * p['most_similar']:.3f}% | {100 * p['second_similar']:.3f}% |")
        if self.notes:
            lines += [""] + [f"- {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _exp3_user(dataset: Dataset, similarity: Similarity, user_id: int, n_random: int, closest_k: int, seed: int, threshold: float) -> dict[str, dict[str, bool]]:
    others = [u for u in dataset.user_ids if u != user_id]
    rng = derive(seed, "exp3", user_id)
    picks = [others[i] for i in rng.choice(len(others), size=min(n_random, len(others)), replace=False)]
    random_metrics = [_exp3_metrics(dataset, user_id, r, closest_k) for r in picks]
    neighbours = [u for u, _ in similarity(user_id, 2)]
    out: dict[str, dict[str, bool]] = {}
    for rank, other in zip(EXP3_RANKS, neighbours):
        det = _exp3_metrics(dataset, user_id, other, closest_k)
        out[rank] = {key: compare_to_random(det[key], [m[key] for m in random_metrics], threshold)[1] for key, _, _ in EXP3_VARIANTS}
    return out


def run_exp3(similarity: Similarity, dataset: Dataset, n_random: int = 10, seed: int = 0, threshold: float = DEFAULT_THRESHOLD, closest_k: int = 10, workers: int = 1) -> Exp3Report:
    users = list(dataset.user_ids)
    if len(users) < 3:
        raise NotEnoughUsers("experiment 3 needs at least three users")
    rows = _map(lambda u: _exp3_user(dataset, similarity, u, n_random, closest_k, seed, threshold), users, workers)
    counts = {key: {rank: sum(r[rank][key] for r in rows) for rank in EXP3_RANKS} for key, _, _ in EXP3_VARIANTS}
    props = {key: {rank: counts[key][rank] / len(users) for rank in EXP3_RANKS} for key in counts}
    notes = [
        "one deterministic value versus the random-user sample: two-sided one-sample t-test, counted only when the similar user is closer",
        "timestamp differences use hour-of-week values without weekly wrap-around",
    ]
    return Exp3Report(props, counts, len(users), min(n_random, len(users) - 1), closest_k, seed, threshold, notes)


# ---------------------------------------------------------------------------
# Experiment 4


@dataclass(frozen=True)
class CloneRecord:
    clone_id: int
    source_id: int
    altered_index: int
    kind: str

    def to_dict(self) -> dict:
        return {"clone_id": self.clone_id, "source_id": self.source_id, "altered_index": self.altered_index, "kind": self.kind}


def reindex_users(dataset: Dataset) -> Dataset:
    """Renumber users 1..n in ascending order of their original ids."""
    ordered = sorted(dataset.trajectories, key=lambda t: t.user_id)
    return Dataset(tuple(Trajectory(k + 1, t.steps) for k, t in enumerate(ordered)), dataset.registry)


def _time_shift(steps: tuple[Step, ...], t: int) -> tuple[Step, ...] | None:
    raw = steps[t].raw_hour
    lo = steps[t - 1].raw_hour if t > 0 else 0
    hi = steps[t + 1].raw_hour if t + 1 < len(steps) else None
    for delta in (1, -1):
        new = raw + delta
        if new >= lo and (hi is None or new <= hi):
            out = list(steps)
            out[t] = make_step(steps[t].poi_id, new)
            return tuple(out)
    return None


def build_clone_dataset(dataset: Dataset, seed: int = 0, n_sources: int = CLONE_SOURCES) -> tuple[Dataset, list[CloneRecord]]:
    """Overwrite users ``i+100`` and ``i+200`` with one-step variants of user ``i`` for ``i`` in 1..100."""
    if len(dataset) < 3 * n_sources:
        raise NotEnoughUsers(f"need at least {3 * n_sources} users, got {len(dataset)}")
    base = reindex_users(dataset)
    trajs = {t.user_id: t for t in base.trajectories}
    manifest: list[CloneRecord] = []
    for i in range(1, n_sources + 1):
        src = trajs[i].steps
        rng = derive(seed, "clone", "poi", i)
        t = int(rng.integers(len(src)))
        poi_clone = list(src)
        poi_clone[t] = make_step(nearest_other_poi(base.registry, src[t].poi_id), src[t].raw_hour)
        trajs[i + n_sources] = Trajectory(i + n_sources, tuple(poi_clone))
        manifest.append(CloneRecord(i + n_sources, i, t, "poi"))

        rng = derive(seed, "clone", "time", i)
        shifted = None
        for t in rng.permutation(len(src)):
            shifted = _time_shift(src, int(t))
            if shifted is not None:
                break
        if shifted is None:
            raise DataError(f"user {i}: no timestep can move by one hour without breaking time order")
        trajs[i + 2 * n_sources] = Trajectory(i + 2 * n_sources, shifted)
        manifest.append(CloneRecord(i + 2 * n_sources, i, int(t), "time"))
    out = Dataset(tuple(trajs[u] for u in sorted(trajs)), base.registry)
    return out, manifest


def chance_baseline(n_users: int, n_sources: int = CLONE_SOURCES) -> float:
    return n_sources * 4 / (n_users - 1)


def trajectory_edit_distance(a: Trajectory, b: Trajectory) -> int:
    """Positionwise mismatches of (POI, raw hour) plus the length difference."""
    n = min(len(a.steps), len(b.steps))
    diff = sum((x.poi_id, x.raw_hour) != (y.poi_id, y.raw_hour) for x, y in zip(a.steps[:n], b.steps[:n]))
    return diff + abs(len(a.steps) - len(b.steps))


def edit_similarity(dataset: Dataset) -> Similarity:
    """Plug-in similarity ranking users by trajectory edit distance (smaller id on ties)."""

    def similarity(user_id: int, k: int) -> list[tuple[int, float]]:
        me = dataset.trajectory(user_id)
        scored = [(-trajectory_edit_distance(me, t), t.user_id) for t in dataset.trajectories if t.user_id != user_id]
        scored.sort(key=lambda s: (-s[0], s[1]))
        return [(u, float(s)) for s, u in scored[:k]]

    return similarity


@dataclass
class Exp4Report:
    hits: int
    hit_users: list[int]
    n_users: int
    chance: float
    manifest: list[CloneRecord]
    seed: int
    similarity: str
    train_summary: dict = field(default_factory=dict)
    # retrained (recommender, compressor) pair; kept out of the serialized report
    models: tuple | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return _jsonable({
            "experiment": 4,
            "seed": self.seed,
            "similarity": self.similarity,
            "count": self.hits,
            "hit_users": self.hit_users,
            "n_users": self.n_users,
            "chance_baseline": self.chance,
            "train_summary": self.train_summary,
            "manifest": [m.to_dict() for m in self.manifest],
        })

    def to_markdown(self) -> str:
        return "\n".join([
            "### Similar-user clone recovery (Experiment 4)",
            "",
            "| Note | Count |",
            "|---|---|",
            f"| Experiment 4 ({self.similarity}) | {self.hits} |",
            "",
            f"Chance level for {len(set(m.source_id for m in self.manifest))} source users among {self.n_users}: {self.chance:.3f}.",
        ]) + "\n"


def count_clone_hits(similarity: Similarity, manifest: Iterable[CloneRecord]) -> list[int]:
    clones: dict[int, set[int]] = {}
    for m in manifest:
        clones.setdefault(m.source_id, set()).add(m.clone_id)
    hits = []
    for src in sorted(clones):
        top = {u for u, _ in similarity(src, 2)}
        if top & clones[src]:
            hits.append(src)
    return hits


def run_exp4(clone_dataset: Dataset, manifest: list[CloneRecord], model_config: ModelConfig, compressor_config: CompressorConfig, similarity: Similarity | None = None) -> Exp4Report:
    """Retrain both networks on the clone dataset (unless a similarity is plugged in) and count clone hits."""
    summary: dict = {}
    models = None
    label = "trained compressor"
    if similarity is None:
        model, rep = train(model_config, clone_dataset)
        comp, crep = train_compressor(model, clone_dataset, compressor_config)
        summary = {"heldout_accuracy": rep.heldout_accuracy, "compressor_accuracy": crep.accuracy}
        similarity = SimilarityIndex(model, comp, clone_dataset).neighbours
        models = (model, comp)
    else:
        label = getattr(similarity, "label", "plug-in similarity")
    hits = count_clone_hits(similarity, manifest)
    return Exp4Report(len(hits), hits, len(clone_dataset), chance_baseline(len(clone_dataset)), manifest, model_config.seed, label, summary, models)
