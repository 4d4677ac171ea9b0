"""Synthetic check-in generator for desk-scale runs without the Gowalla dump.

Users belong to neighbourhood communities.  Each user revisits a few
favourite venues in their neighbourhood and now and then passes through one
of their transit hubs; what they do right after a hub depends on the hub and
on their community.  Trajectories end with a hub visit followed by the
held-out check-in.  Output uses the raw check-in line format so it goes
through the normal ingest path.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .ingest import NYC_BBOX, BBox, CheckIn
from .rng import derive

EPOCH = datetime(2010, 2, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 200
    n_communities: int = 8
    pois_per_community: int = 40
    n_hubs: int = 16
    hubs_per_user: int = 2
    favourites: int = 6
    min_len: int = 20
    max_len: int = 40
    hub_rate: float = 0.3
    follow_rate: float = 0.85
    explore_rate: float = 0.15
    seed: int = 0
    bbox: BBox = NYC_BBOX


def _place(rng: np.random.Generator, bbox: BBox, n: int, center=None, spread: float = 0.01):
    if center is None:
        lat = rng.uniform(bbox.lat_min + 0.05, bbox.lat_max - 0.05, size=n)
        lon = rng.uniform(bbox.lon_min + 0.05, bbox.lon_max - 0.05, size=n)
    else:
        lat = np.clip(center[0] + rng.normal(0, spread, size=n), bbox.lat_min, bbox.lat_max)
        lon = np.clip(center[1] + rng.normal(0, spread, size=n), bbox.lon_min, bbox.lon_max)
    return np.round(lat, 6), np.round(lon, 6)


def generate(config: SynthConfig = SynthConfig()) -> list[CheckIn]:
    s = config.seed
    rng = derive(s, "synth", "world")
    coords: dict[int, tuple[float, float]] = {}
    next_id = 1001

    hub_lat, hub_lon = _place(rng, config.bbox, config.n_hubs)
    hubs = []
    for la, lo in zip(hub_lat, hub_lon):
        coords[next_id] = (float(la), float(lo))
        hubs.append(next_id)
        next_id += 1

    centers_lat, centers_lon = _place(rng, config.bbox, config.n_communities)
    pools = []
    for c in range(config.n_communities):
        la, lo = _place(rng, config.bbox, config.pois_per_community, (centers_lat[c], centers_lon[c]))
        pool = []
        for a, b in zip(la, lo):
            coords[next_id] = (float(a), float(b))
            pool.append(next_id)
            next_id += 1
        pools.append(pool)

    # follow-up venue after each hub, per community
    follow = {(h, c): int(rng.choice(pools[c])) for h in hubs for c in range(config.n_communities)}

    records: list[CheckIn] = []
    for k in range(config.n_users):
        user_id = k + 1
        r = derive(s, "synth", "user", user_id)
        c = int(r.integers(config.n_communities))
        favs = r.choice(pools[c], size=config.favourites, replace=False)
        weights = 1.0 / np.arange(1, config.favourites + 1)
        weights /= weights.sum()
        my_hubs = r.choice(hubs, size=config.hubs_per_user, replace=False)
        length = int(r.integers(config.min_len, config.max_len + 1))

        visits: list[int] = []
        prev = None
        while len(visits) < length - 2:
            if prev in hubs and r.random() < config.follow_rate:
                nxt = follow[(prev, c)]
            elif r.random() < config.hub_rate:
                nxt = int(r.choice(my_hubs))
            elif r.random() < config.explore_rate:
                nxt = int(r.choice(pools[c]))
            else:
                nxt = int(r.choice(favs, p=weights))
            visits.append(nxt)
            prev = nxt
        last_hub = int(r.choice(my_hubs))
        visits.append(last_hub)
        visits.append(follow[(last_hub, c)] if r.random() < config.follow_rate else int(r.choice(favs, p=weights)))

        t = EPOCH + timedelta(hours=int(r.integers(0, 24 * 14)))
        for poi in visits:
            t += timedelta(hours=int(r.integers(1, 30)), minutes=int(r.integers(0, 60)))
            la, lo = coords[poi]
            records.append(CheckIn(user_id, t, la, lo, poi))
    return records


def format_line(c: CheckIn) -> str:
    return f"{c.user_id}\t{c.utc_time.strftime('%Y-%m-%dT%H:%M:%SZ')}\t{c.lat}\t{c.lon}\t{c.poi_id}"


def write_checkins(records: list[CheckIn], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in records:
            fh.write(format_line(c) + "\n")
