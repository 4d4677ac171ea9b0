import gzip
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset
from poi_xaudit.errors import CorruptDataset, EmptyDataset, TrajectoryTooShort
from poi_xaudit.ingest import (
    BBox,
    CheckIn,
    Trajectory,
    build_dataset,
    build_trajectories,
    dumps_dataset,
    loads_dataset,
    make_step,
    parse_checkins,
    read_checkins,
    read_dataset,
    split_last,
    write_dataset,
)

T0 = datetime(2010, 10, 19, 23, 55, 27, tzinfo=timezone.utc)


def ci(user, hours, poi, lat=40.6, lon=-74.0):
    return CheckIn(user, T0 + timedelta(hours=hours), lat, lon, poi)


def test_parse_line_fields():
    (c,) = parse_checkins(["7\t2010-10-19T23:55:27Z\t40.60\t-74.00\t16907"])
    assert (c.user_id, c.lat, c.lon, c.poi_id) == (7, 40.60, -74.00, 16907)
    assert c.utc_time == T0


def test_malformed_lines_are_skipped(caplog):
    lines = ["7\t2010-10-19T23:55:27Z\t40.60\t-74.00\t16907", "7\t2010-10-19T23:55:27Z\t91.2\t-74.00\t16907", "8\t2010-10-20T01:00:00Z\t40.7\t-73.9\t5"]
    out = parse_checkins(lines)
    assert [c.user_id for c in out] == [7, 8]
    assert "skipped 1 malformed" in caplog.text


def test_empty_and_corrupt_inputs():
    with pytest.raises(EmptyDataset):
        parse_checkins([])
    with pytest.raises(EmptyDataset):
        parse_checkins(["garbage"])
    with pytest.raises(CorruptDataset):
        parse_checkins(["1\t2010-10-19T23:55:27Z\t40\t-74\t1", "x", "y"])


def test_gzip_input(tmp_path):
    p = tmp_path / "c.txt.gz"
    with gzip.open(p, "wt", encoding="utf-8") as fh:
        fh.write("7\t2010-10-19T23:55:27Z\t40.60\t-74.00\t16907\n")
    assert read_checkins(p)[0].poi_id == 16907


def test_weekly_cycle():
    trajs, _ = build_trajectories([ci(1, 0, 1), ci(1, 5, 2), ci(1, 168, 3)], min_len=3)
    s = trajs[0].steps
    assert s[0].hour_of_week == s[2].hour_of_week
    assert [x.raw_hour for x in s] == [0, 5, 168]


def test_short_users_dropped_and_order():
    cs = [ci(2, 3, 1), ci(2, 1, 2), ci(2, 2, 3), ci(5, 0, 1), ci(5, 1, 1)]
    trajs, reg = build_trajectories(cs, min_len=3)
    assert [t.user_id for t in trajs] == [2]
    assert trajs[0].poi_ids == [2, 3, 1]
    assert trajs[0].raw_hours == [1, 2, 3]
    assert reg.poi_ids == [1, 2, 3]


def test_bbox_filter_and_exact_duplicates():
    cs = [ci(1, 0, 1), ci(1, 0, 1), ci(1, 1, 2), ci(1, 2, 3), ci(1, 3, 4, lat=10.0)]
    trajs, reg = build_trajectories(cs, BBox(), min_len=3)
    assert trajs[0].poi_ids == [1, 2, 3]
    assert 4 not in reg


def test_no_survivors():
    with pytest.raises(EmptyDataset):
        build_trajectories([ci(1, 0, 1), ci(1, 1, 2)], min_len=3)


def test_build_is_deterministic():
    cs = [ci(u, h * 7 + u, (u * h) % 9 + 1, 40.5 + 0.01 * h, -74.0 + 0.01 * u) for u in range(1, 6) for h in range(12)]
    a = build_dataset(cs, min_len=10)
    b = build_dataset(list(cs), min_len=10)
    assert dumps_dataset(a) == dumps_dataset(b)


def test_split_last():
    tr = Trajectory(1, tuple(make_step(p, h) for p, h in [(1, 0), (2, 1), (3, 2)]))
    sp = split_last(tr)
    assert [s.poi_id for s in sp.input_steps] == [1, 2] and sp.target_poi == 3
    long = Trajectory(1, tuple(make_step(k + 1, k) for k in range(150)))
    sp = split_last(long, t_max=100)
    assert len(sp.input_steps) == 100
    assert sp.input_steps[0].poi_id == 50 and sp.input_steps[-1].poi_id == 149
    with pytest.raises(TrajectoryTooShort):
        split_last(Trajectory(1, tr.steps[:2]))


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        Trajectory(1, (make_step(1, 5), make_step(2, 4)))
    Trajectory(1, (make_step(1, 5), make_step(2, 5)))  # ties are fine


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.tuples(st.integers(1, 9), st.integers(0, 500)), min_size=3, max_size=8), min_size=1, max_size=5),
       st.lists(st.tuples(st.floats(-90, 90), st.floats(-180, 180)), min_size=9, max_size=9))
def test_dataset_round_trip(users, coords):
    ds = make_dataset({p + 1: c for p, c in enumerate(coords)}, {u + 1: sorted(steps, key=lambda s: s[1]) for u, steps in enumerate(users)})
    text = dumps_dataset(ds)
    back = loads_dataset(text)
    assert back.trajectories == ds.trajectories
    assert back.registry == ds.registry
    assert dumps_dataset(back) == text


def test_dataset_file(tmp_path):
    ds = make_dataset({1: (40.1, -74.123456789), 2: (40.2, -74.0)}, {3: [(1, 0), (2, 4), (1, 170)]})
    write_dataset(ds, tmp_path / "d.pxd")
    assert (tmp_path / "d.pxd").read_text().splitlines()[0] == "PXD1 1 2"
    assert read_dataset(tmp_path / "d.pxd").trajectories == ds.trajectories


def test_corrupt_dataset_file():
    with pytest.raises(CorruptDataset):
        loads_dataset("PXD9 1 1\n")
    with pytest.raises(CorruptDataset):
        loads_dataset("PXD1 1 1\nP 1 0.0 0.0\nU 1 3 1,0 1,2\n")
