"""Churn statistics: commit counting, categorization, the dual filter,
hotspot-line selection, lifespans, and the descriptive-stats oracle."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linechurn.churn import (
    ADMINISTRATIVE,
    PROGRAMMING,
    DegenerateDistribution,
    EmptyInput,
    HotspotThresholds,
    categorize_file,
    churn_summary,
    count_file_commits,
    detect_hotspot_files,
    lifespan_days,
    select_hotspot_lines,
    summarize,
)
from linechurn.diffstream import CommitHeader, CommitStart, FileDiffHeader, FileStart
from linechurn.tracker import Revision, TrackedLine


def commit(n: int) -> CommitStart:
    return CommitStart(CommitHeader(f"{n:040x}", 1_700_000_000 + n, "A", "a@x", "A", "a@x"))


def touch(path: str) -> FileStart:
    return FileStart(FileDiffHeader(path, path))


def rename(old: str, new: str) -> FileStart:
    return FileStart(FileDiffHeader(old, new, is_rename_or_copy=True))


class TestCountFileCommits:
    def test_direct_count(self):
        events = [commit(1), touch("a.txt"), touch("b.txt"),
                  commit(2), touch("a.txt"),
                  commit(3), touch("b.txt")]
        assert count_file_commits(events) == {"a.txt": 2, "b.txt": 2}

    def test_multiple_hunks_one_commit_count_once(self):
        # The same file appearing repeatedly within one commit still counts 1.
        events = [commit(1), touch("b.txt"), touch("b.txt"), touch("b.txt")]
        assert count_file_commits(events) == {"b.txt": 1}

    def test_rename_accumulates_under_final_path(self):
        events = [commit(1), touch("a"),
                  commit(2), rename("a", "c"),
                  commit(3), touch("c")]
        assert count_file_commits(events) == {"c": 3}

    def test_copy_starts_fresh_count(self):
        events = [commit(1), touch("a"),
                  commit(2), FileStart(FileDiffHeader("a", "a2", is_rename_or_copy=True,
                                                      is_copy=True))]
        assert count_file_commits(events) == {"a": 1, "a2": 1}


class TestCategorizeFile:
    @pytest.mark.parametrize("path,expected", [
        ("src/main.c", PROGRAMMING),
        ("package.json", ADMINISTRATIVE),
        ("weird.xyzq", ADMINISTRATIVE),
        ("deep/path/to/module.py", PROGRAMMING),
        ("README", ADMINISTRATIVE),
        ("docs/guide.md", ADMINISTRATIVE),
        ("Makefile", ADMINISTRATIVE),
        ("data/formats-data.ts", ADMINISTRATIVE),  # generated data payload
        ("src/formats.ts", PROGRAMMING),
        ("requirements-dev.txt", ADMINISTRATIVE),
        ("noextension", ADMINISTRATIVE),
    ])
    def test_lookup(self, path, expected):
        assert categorize_file(path) == expected

    @given(st.text(min_size=1, max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_total_and_deterministic(self, path):
        first = categorize_file(path)
        assert first in (PROGRAMMING, ADMINISTRATIVE)
        assert categorize_file(path) == first


def brute_mean_std(values: list[float]) -> tuple[float, float]:
    """Independent mean/population-sigma written without numpy."""
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


class TestDetectHotspotFiles:
    def test_twenty_file_fixture_selects_only_outlier(self):
        counts = {f"f{i}": 2 for i in range(19)}
        counts["hot"] = 100
        mean, std = brute_mean_std(list(counts.values()))
        assert abs(mean - 6.9) < 1e-12
        assert counts["hot"] > mean + 3 * std
        assert all(c <= mean + 3 * std for p, c in counts.items() if p != "hot")
        selected = detect_hotspot_files(counts, lifetime_months=12.0)
        assert selected == {"hot"}

    def test_uniform_counts_select_nothing(self):
        counts = {f"f{i}": 5 for i in range(10)}
        with pytest.warns(DegenerateDistribution):
            assert detect_hotspot_files(counts, lifetime_months=1.0) == set()

    def test_rate_condition_excludes_slow_file(self):
        counts = {f"f{i}": 2 for i in range(19)}
        counts["hot"] = 80
        mean, std = brute_mean_std(list(counts.values()))
        assert counts["hot"] > mean + 3 * std  # passes sigma filter alone
        assert detect_hotspot_files(counts, lifetime_months=96.0) == set()

    def test_both_conditions_strict(self):
        # A count exactly at the rate cut is excluded ("exceeded" is strict).
        counts = {f"f{i}": 0 for i in range(50)}
        counts["edge"] = 12
        selected = detect_hotspot_files(counts, lifetime_months=12.0)
        assert "edge" not in selected

    def test_single_outlier_population_sigma_boundary(self):
        # With n-1 equal values and one larger, selection needs n >= 11.
        def fixture(n: int) -> dict[str, int]:
            counts = {f"f{i}": 10 for i in range(n - 1)}
            counts["out"] = 200
            return counts

        assert detect_hotspot_files(fixture(10), lifetime_months=1e-6) == set()
        assert detect_hotspot_files(fixture(20), lifetime_months=1e-6) == {"out"}

    def test_monotone_in_added_modifications(self):
        counts = {f"f{i}": 3 for i in range(15)}
        counts["x"] = 30
        base = detect_hotspot_files(counts, lifetime_months=1e-6)
        counts["x"] += 100
        more = detect_hotspot_files(counts, lifetime_months=1e-6)
        assert base <= more

    def test_empty_counts_raise(self):
        with pytest.raises(EmptyInput):
            detect_hotspot_files({}, lifetime_months=1.0)


def mk_line(mod_count: int, birth: int = 1_000_000, step: int = 86_400) -> TrackedLine:
    history = [Revision(f"{i:040x}", birth + i * step, f"v{i}".encode())
               for i in range(mod_count + 1)]
    return TrackedLine(slot_id=1, content=history[-1].content, birth_ts=birth,
                       history=history)


class TestSelectHotspotLines:
    def test_single_outlier_line(self):
        lines = [mk_line(0) for _ in range(19)] + [mk_line(12)]
        mean, std = brute_mean_std([ln.mod_count for ln in lines])
        assert 12 > mean + 3 * std
        selected = select_hotspot_lines(lines)
        assert [ln.mod_count for ln in selected] == [12]

    def test_min_line_mods_floor(self):
        lines = [mk_line(0) for _ in range(30)] + [mk_line(2)]
        assert select_hotspot_lines(lines) == []

    def test_all_zero_empty(self):
        lines = [mk_line(0) for _ in range(10)]
        assert select_hotspot_lines(lines) == []


class TestLifespanDays:
    def test_single_entry_history(self):
        assert lifespan_days(mk_line(0)) == 0.0

    def test_long_lived_line(self):
        line = TrackedLine(slot_id=1, content=b"x", birth_ts=1_000_000, history=[
            Revision("a" * 40, 1_000_000, b"x0"),
            Revision("b" * 40, 1_000_000 + 86_400 * 1198, b"x"),
        ])
        assert lifespan_days(line) == pytest.approx(1198.0)

    @given(st.lists(st.integers(0, 10 ** 6), min_size=1, max_size=6))
    def test_non_negative_for_sorted_history(self, deltas):
        ts = 1_000_000
        history = []
        for i, delta in enumerate(sorted(deltas)):
            history.append(Revision(f"{i:040x}", ts + delta, b"c"))
        line = TrackedLine(slot_id=1, content=b"c", birth_ts=ts, history=history)
        assert lifespan_days(line) >= 0.0


def brute_summary(values: list[float]) -> tuple[float, float, float, float, float]:
    """Sort-based min/median/mean/max/IQR with type-7 interpolation."""
    data = sorted(values)
    n = len(data)

    def quantile(p: float) -> float:
        h = (n - 1) * p
        lo = math.floor(h)
        hi = math.ceil(h)
        return data[lo] + (h - lo) * (data[hi] - data[lo])

    return (data[0], quantile(0.5), sum(data) / n, data[-1],
            quantile(0.75) - quantile(0.25))


class TestSummarize:
    def test_odd_length_median(self):
        assert summarize([1, 7, 100]).median == 7

    def test_even_length_median(self):
        assert summarize([1, 2, 3, 4]).median == 2.5

    def test_against_brute_force_oracle(self):
        rng = random.Random(99)
        values = [rng.uniform(-1000, 1000) for _ in range(1000)]
        stats = summarize(values)
        b_min, b_med, b_mean, b_max, b_iqr = brute_summary(values)
        assert abs(stats.min - b_min) < 1e-9
        assert abs(stats.median - b_med) < 1e-9
        assert abs(stats.mean - b_mean) < 1e-9
        assert abs(stats.max - b_max) < 1e-9
        assert abs(stats.iqr - b_iqr) < 1e-9

    def test_singleton(self):
        stats = summarize([42.0])
        assert stats.min == stats.median == stats.mean == stats.max == 42.0
        assert stats.iqr == 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            summarize([])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    @settings(max_examples=100, deadline=None)
    def test_ordering_invariants(self, values):
        stats = summarize(values)
        assert stats.min <= stats.median <= stats.max
        assert stats.iqr >= 0


def test_churn_summary_population_vs_sample():
    values = [2, 4, 4, 4, 5, 5, 7, 9]
    population = churn_summary(values, population=True)
    sample = churn_summary(values, population=False)
    assert population.stddev == pytest.approx(2.0)
    assert sample.stddev == pytest.approx(math.sqrt(32 / 7))


def test_thresholds_must_be_positive():
    with pytest.raises(ValueError):
        HotspotThresholds(sigma_multiplier=0.0)
    with pytest.raises(ValueError):
        HotspotThresholds(monthly_rate=-1.0)
