import json
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashsev.analytics import (
    count_by,
    severe_hourly_counts,
    severity_histogram,
    window_sums,
    write_table,
)
from crashsev.errors import UsageError
from crashsev.features import PRESSURE_BINS, TEMPERATURE_BINS, BinSpec, bin_index
from crashsev.ingest import partition_filter, read_store, write_store

from helpers import make_record, random_records


def test_count_by_state(tmp_path):
    recs = [make_record(i, state="CA") for i in range(3)] + [make_record(9, state="OH")]
    write_store(recs, tmp_path / "s")
    table = count_by(tmp_path / "s", "state")
    assert [(v, c) for v, c, _ in table.rows] == [("CA", 3), ("OH", 1)]
    assert table.total == 4 and table.other == 0


def test_count_by_hour(tmp_path):
    recs = [make_record(0, ts="2016-02-08 05:46:00"), make_record(1, ts="2016-02-08 17:10:00", severity=3)]
    write_store(recs, tmp_path / "s")
    table = count_by(tmp_path / "s", "hour")
    assert table.counts() == {5: 1, 17: 1}
    assert severe_hourly_counts(tmp_path / "s")[17] == 1
    assert severe_hourly_counts(tmp_path / "s").sum() == 1


def test_top_k_and_ties(tmp_path):
    recs = [make_record(i, weather=w) for i, w in enumerate(["Rain", "Fog", "Clear", "Clear", "Snow"])]
    write_store(recs, tmp_path / "s")
    table = count_by(tmp_path / "s", "weather", top_k=2)
    assert [v for v, _, _ in table.rows] == ["Clear", "Fog"]
    assert table.total == 5 and table.other == 2


def test_invalid_key(tmp_path):
    write_store([make_record(0)], tmp_path / "s")
    with pytest.raises(UsageError):
        count_by(tmp_path / "s", "severity")
    with pytest.raises(UsageError):
        severity_histogram(tmp_path / "s", "start_lat", TEMPERATURE_BINS)


def test_single_row_histogram(tmp_path):
    write_store([make_record(0, temperature_f=72.0, severity=2)], tmp_path / "s")
    h = severity_histogram(tmp_path / "s", "temperature_f", TEMPERATURE_BINS)
    i = TEMPERATURE_BINS.edges().index(70.0)
    assert h.counts[i, 1] == 1 and h.counts.sum() == 1 and h.out_of_range == 0


def test_all_out_of_range(tmp_path):
    recs = [make_record(i, pressure_in=p) for i, p in enumerate([10.0, 35.0, 27.99])]
    write_store(recs, tmp_path / "s")
    h = severity_histogram(tmp_path / "s", "pressure_in", PRESSURE_BINS)
    assert h.counts.sum() == 0 and h.out_of_range == 3 and h.total == 3


def test_window_sums():
    assert window_sums(np.array([1, 2, 3, 4]), 2).tolist() == [3, 5, 7]


@pytest.fixture(scope="module")
def random_store(tmp_path_factory):
    root = tmp_path_factory.mktemp("store") / "s"
    records = random_records(600, 11)
    write_store(records, root)
    return root, records


@pytest.mark.parametrize("key", ["state", "year", "hour", "weather"])
def test_counts_match_direct_tally(random_store, key):
    root, records = random_store
    table = count_by(root, key)
    want = Counter(getattr(r, key) for r in records)
    assert table.counts() == dict(want)
    assert table.total == len(records)
    for v, c, by_sev in table.rows:
        assert sum(by_sev) == c
        assert list(by_sev) == [sum(1 for r in records if getattr(r, key) == v and r.severity == s) for s in (1, 2, 3, 4)]
    counts = [c for _, c, _ in table.rows]
    assert counts == sorted(counts, reverse=True)


def test_histogram_matches_direct_binning(random_store):
    root, records = random_store
    for column, spec in (("temperature_f", TEMPERATURE_BINS), ("pressure_in", PRESSURE_BINS)):
        h = severity_histogram(root, column, spec)
        want = np.zeros((spec.n_bins, 4), dtype=int)
        oor = 0
        for r in records:
            i = bin_index(getattr(r, column), spec)
            if i is None:
                oor += 1
            else:
                want[i, r.severity - 1] += 1
        np.testing.assert_array_equal(h.counts, want)
        assert h.out_of_range == oor and h.total == len(records)


@settings(max_examples=25, deadline=None)
@given(st.sets(st.sampled_from(["AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC"]), max_size=4),
       st.sets(st.integers(2016, 2021), max_size=3))
def test_pruning_is_invisible(random_store, states, years):
    root, records = random_store
    where = partition_filter(states or None, years or None)
    keep = [r for r in records if (not states or r.state in states) and (not years or r.year in years)]
    for key in ("state", "hour"):
        assert count_by(root, key, where=where).counts() == dict(Counter(getattr(r, key) for r in keep))
    h = severity_histogram(root, "temperature_f", TEMPERATURE_BINS, where=where)
    assert h.total == len(keep)


def test_order_and_workers_do_not_matter(tmp_path, random_store):
    root, records = random_store
    shuffled = list(records)
    random.Random(3).shuffle(shuffled)
    write_store(shuffled, tmp_path / "shuffled")
    for key in ("state", "weather", "hour"):
        a = count_by(root, key)
        assert a == count_by(tmp_path / "shuffled", key)
        assert a == count_by(root, key, workers=4)


def test_tables_serialize(tmp_path, random_store):
    root, _ = random_store
    table = count_by(root, "state", top_k=3)
    write_table(table, tmp_path / "t.json")
    write_table(table, tmp_path / "t.csv")
    doc = json.loads((tmp_path / "t.json").read_text())
    assert doc["total"] == table.total and len(doc["rows"]) == 3
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "state,count,severity_1,severity_2,severity_3,severity_4" and len(lines) == 4
    hist = severity_histogram(root, "pressure_in", PRESSURE_BINS)
    write_table(hist, tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().splitlines()[-1].startswith("out_of_range")
