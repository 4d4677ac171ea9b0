"""Check-in parsing, trajectory construction and the canonical dataset file.

A check-in line is ``user<TAB>iso8601-time<TAB>lat<TAB>lon<TAB>poi``.  Each
user yields exactly one trajectory, sorted by time, whose steps carry the raw
hour index (hours since the earliest check-in in the input) and the hour of the
week derived from it.
"""
from __future__ import annotations

import gzip
import io
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CorruptDataset, EmptyDataset, TrajectoryTooShort, UnknownPoi

log = logging.getLogger(__name__)

HOURS_PER_WEEK = 168
FORMAT_MAGIC = "PXD1"


@dataclass(frozen=True)
class BBox:
    lat_min: float = 40.40
    lat_max: float = 41.00
    lon_min: float = -74.30
    lon_max: float = -73.60

    def contains(self, lat: float, lon: float) -> bool:
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max


NYC_BBOX = BBox()


@dataclass(frozen=True)
class CheckIn:
    user_id: int
    utc_time: datetime
    lat: float
    lon: float
    poi_id: int

    def __post_init__(self):
        if self.user_id <= 0 or self.poi_id <= 0:
            raise ValueError("ids must be positive")
        if not -90.0 <= self.lat <= 90.0 or not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"coordinates out of range: ({self.lat}, {self.lon})")

    @property
    def epoch_seconds(self) -> int:
        return int(self.utc_time.timestamp())


class Step(NamedTuple):
    poi_id: int
    hour_of_week: int
    raw_hour: int


def make_step(poi_id: int, raw_hour: int) -> Step:
    return Step(int(poi_id), int(raw_hour) % HOURS_PER_WEEK, int(raw_hour))


@dataclass(frozen=True)
class Trajectory:
    user_id: int
    steps: tuple[Step, ...]

    def __post_init__(self):
        prev = -1
        for s in self.steps:
            if s.raw_hour < 0 or s.raw_hour < prev:
                raise ValueError(f"user {self.user_id}: raw_hour must be non-negative and non-decreasing")
            if s.hour_of_week != s.raw_hour % HOURS_PER_WEEK:
                raise ValueError(f"user {self.user_id}: hour_of_week inconsistent with raw_hour")
            prev = s.raw_hour

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def poi_ids(self) -> list[int]:
        return [s.poi_id for s in self.steps]

    @property
    def raw_hours(self) -> list[int]:
        return [s.raw_hour for s in self.steps]


class PoiRegistry:
    """POI id -> (lat, lon), with a contiguous internal index ordered by id."""

    def __init__(self, coords: dict[int, tuple[float, float]]):
        ids = sorted(coords)
        self.ids_array = np.array(ids, dtype=np.int64)
        self.lats = np.array([coords[i][0] for i in ids], dtype=np.float64)
        self.lons = np.array([coords[i][1] for i in ids], dtype=np.float64)
        self._index = {pid: k for k, pid in enumerate(ids)}

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, poi_id: int) -> bool:
        return poi_id in self._index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PoiRegistry)
            and np.array_equal(self.ids_array, other.ids_array)
            and np.array_equal(self.lats, other.lats)
            and np.array_equal(self.lons, other.lons)
        )

    def index(self, poi_id: int) -> int:
        try:
            return self._index[poi_id]
        except KeyError:
            raise UnknownPoi(poi_id) from None

    def poi_id(self, index: int) -> int:
        return int(self.ids_array[index])

    def coords(self, poi_id: int) -> tuple[float, float]:
        k = self.index(poi_id)
        return float(self.lats[k]), float(self.lons[k])

    @property
    def poi_ids(self) -> list[int]:
        return [int(i) for i in self.ids_array]


@dataclass(frozen=True)
class DatasetSplit:
    user_id: int
    input_steps: tuple[Step, ...]
    target_poi: int


@dataclass(frozen=True)
class Dataset:
    trajectories: tuple[Trajectory, ...]
    registry: PoiRegistry
    _by_user: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        by_user = {}
        for tr in self.trajectories:
            if tr.user_id in by_user:
                raise ValueError(f"duplicate trajectory for user {tr.user_id}")
            for s in tr.steps:
                if s.poi_id not in self.registry:
                    raise UnknownPoi(s.poi_id)
            by_user[tr.user_id] = tr
        object.__setattr__(self, "_by_user", by_user)

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def user_ids(self) -> list[int]:
        return [t.user_id for t in self.trajectories]

    def trajectory(self, user_id: int) -> Trajectory:
        return self._by_user[user_id]

    def __contains__(self, user_id: int) -> bool:
        return user_id in self._by_user


# ---------------------------------------------------------------------------
# raw check-ins


def parse_time(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def parse_line(line: str) -> CheckIn:
    parts = line.rstrip("\r\n").split("\t")
    if len(parts) != 5:
        raise ValueError(f"expected 5 fields, got {len(parts)}")
    user, when, lat, lon, poi = parts
    return CheckIn(int(user), parse_time(when), float(lat), float(lon), int(poi))


def parse_checkins(lines: Iterable[str]) -> list[CheckIn]:
    """Parse check-in lines in file order, skipping (and counting) malformed ones."""
    records: list[CheckIn] = []
    bad = 0
    total = 0
    for line in lines:
        if not line.strip():
            continue
        total += 1
        try:
            records.append(parse_line(line))
        except (ValueError, OverflowError):
            bad += 1
    if not records:
        raise EmptyDataset("no valid check-in lines")
    if bad * 2 > total:
        raise CorruptDataset(f"{bad} of {total} lines are malformed")
    if bad:
        log.warning("skipped %d malformed check-in lines out of %d", bad, total)
    return records


def open_text(path: str | os.PathLike) -> io.TextIOBase:
    with open(path, "rb") as fh:
        gz = fh.read(2) == b"\x1f\x8b"
    if gz:
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def read_checkins(path: str | os.PathLike) -> list[CheckIn]:
    with open_text(path) as fh:
        return parse_checkins(fh)


def build_trajectories(checkins: Sequence[CheckIn], bbox: BBox = NYC_BBOX, min_len: int = 10) -> tuple[list[Trajectory], PoiRegistry]:
    if min_len < 3:
        raise ValueError("min_len must be at least 3")
    kept: dict[int, list[CheckIn]] = {}
    seen: set[CheckIn] = set()
    for c in checkins:
        if not bbox.contains(c.lat, c.lon) or c in seen:
            continue
        seen.add(c)
        kept.setdefault(c.user_id, []).append(c)
    users = sorted(u for u, cs in kept.items() if len(cs) >= min_len)
    if not users:
        raise EmptyDataset("no user survives the filters")
    # anchored at the earliest input check-in, before any filtering
    origin = min(c.epoch_seconds for c in checkins)
    coords: dict[int, tuple[float, float]] = {}
    trajectories = []
    for u in users:
        # stable sort keeps file order for equal timestamps
        ordered = sorted(kept[u], key=lambda c: c.epoch_seconds)
        steps = []
        for c in ordered:
            coords.setdefault(c.poi_id, (c.lat, c.lon))
            steps.append(make_step(c.poi_id, (c.epoch_seconds - origin) // 3600))
        trajectories.append(Trajectory(u, tuple(steps)))
    return trajectories, PoiRegistry(coords)


def build_dataset(checkins: Sequence[CheckIn], bbox: BBox = NYC_BBOX, min_len: int = 10) -> Dataset:
    trajectories, registry = build_trajectories(checkins, bbox, min_len)
    return Dataset(tuple(trajectories), registry)


def split_last(trajectory: Trajectory, t_max: int = 100) -> DatasetSplit:
    """Hold out the last step as the target; keep at most ``t_max`` preceding steps."""
    if len(trajectory.steps) < 3:
        raise TrajectoryTooShort(f"user {trajectory.user_id} has {len(trajectory.steps)} steps")
    inputs = trajectory.steps[:-1][-t_max:]
    return DatasetSplit(trajectory.user_id, inputs, trajectory.steps[-1].poi_id)


# ---------------------------------------------------------------------------
# canonical dataset file


def dumps_dataset(dataset: Dataset) -> str:
    reg = dataset.registry
    out = [f"{FORMAT_MAGIC} {len(dataset.trajectories)} {len(reg)}"]
    for pid, lat, lon in zip(reg.ids_array, reg.lats, reg.lons):
        out.append(f"P {int(pid)} {float(lat)!r} {float(lon)!r}")
    for tr in dataset.trajectories:
        pairs = " ".join(f"{s.poi_id},{s.raw_hour}" for s in tr.steps)
        out.append(f"U {tr.user_id} {len(tr.steps)} {pairs}")
    return "\n".join(out) + "\n"


def loads_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines:
        raise CorruptDataset("empty dataset file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != FORMAT_MAGIC:
        raise CorruptDataset(f"bad header: {lines[0]!r}")
    n_users, n_pois = int(head[1]), int(head[2])
    coords: dict[int, tuple[float, float]] = {}
    trajectories = []
    try:
        for line in lines[1:]:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "P":
                coords[int(parts[1])] = (float(parts[2]), float(parts[3]))
            elif parts[0] == "U":
                k = int(parts[2])
                pairs = [p.split(",") for p in parts[3:]]
                if len(pairs) != k:
                    raise CorruptDataset(f"user {parts[1]}: declared {k} steps, found {len(pairs)}")
                steps = tuple(make_step(int(p), int(h)) for p, h in pairs)
                trajectories.append(Trajectory(int(parts[1]), steps))
            else:
                raise CorruptDataset(f"unknown record type {parts[0]!r}")
    except ValueError as exc:
        raise CorruptDataset(str(exc)) from exc
    if len(coords) != n_pois or len(trajectories) != n_users:
        raise CorruptDataset("record counts do not match the header")
    return Dataset(tuple(trajectories), PoiRegistry(coords))


def write_dataset(dataset: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_dataset(dataset))


def read_dataset(path: str | os.PathLike) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return loads_dataset(fh.read())
