"""File-level churn counting, the dual-filter hotspot criterion, hotspot-line
selection, and descriptive statistics.

A file qualifies as a hotspot host when its commit-touch count both exceeds
the mean by a configurable number of standard deviations and exceeds a
minimum change rate over the project lifetime; either test alone produces
too many false positives.  Hotspot lines are then the outliers of the
modification-count distribution within each hotspot file.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from importlib import resources
from typing import Iterable

import numpy as np

from .diffstream import CommitStart, FileStart

SECONDS_PER_MONTH = 30.44 * 86400


class EmptyInput(ValueError):
    pass


class DegenerateDistribution(UserWarning):
    """All values identical: the sigma filter cannot select anything."""


PROGRAMMING = "programming"
ADMINISTRATIVE = "administrative"


@dataclass(frozen=True)
class FileChurn:
    path: str
    commit_touch_count: int
    category: str


@dataclass(frozen=True)
class ChurnSummary:
    mean: float
    stddev: float
    n_files: int


@dataclass(frozen=True)
class HotspotThresholds:
    sigma_multiplier: float = 3.0
    monthly_rate: float = 1.0  # required changes per month of project lifetime
    min_line_mods: int = 3
    population_sigma: bool = True

    def __post_init__(self) -> None:
        if self.sigma_multiplier <= 0 or self.monthly_rate <= 0 or self.min_line_mods <= 0:
            raise ValueError("all thresholds must be strictly positive")


@dataclass(frozen=True)
class DescriptiveStats:
    metric: str
    min: float
    median: float
    mean: float
    max: float
    iqr: float


class _CategoryTable:
    def __init__(self, text: str):
        self.fragments: list[tuple[str, str]] = []
        self.names: dict[str, str] = {}
        self.extensions: dict[str, str] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            kind, pattern, category = line.split("\t")
            if kind == "frag":
                self.fragments.append((pattern, category))
            elif kind == "name":
                self.names[pattern] = category
            elif kind == "ext":
                self.extensions[pattern] = category

    def lookup(self, path: str) -> str:
        basename = path.replace("\\", "/").rsplit("/", 1)[-1].lower()
        for fragment, category in self.fragments:
            if fragment in basename:
                return category
        if basename in self.names:
            return self.names[basename]
        stem = basename
        # requirements-dev.txt and friends count as the requirements manifest
        if re.match(r"requirements[-_.].*\.txt$", basename):
            return ADMINISTRATIVE
        if "." in stem:
            ext = "." + stem.rsplit(".", 1)[-1]
            if ext in self.extensions:
                return self.extensions[ext]
        return ADMINISTRATIVE


_TABLE: _CategoryTable | None = None


def _table() -> _CategoryTable:
    global _TABLE
    if _TABLE is None:
        text = resources.files("linechurn.data").joinpath("file_categories.txt").read_text("utf-8")
        _TABLE = _CategoryTable(text)
    return _TABLE


def categorize_file(path: str) -> str:
    """Deterministic programming/administrative lookup for a path.

    Resolution order: basename fragments, exact basenames, extension table;
    unknown extensions (and extensionless names) are administrative.
    """
    return _table().lookup(path)


def count_file_commits(events: Iterable[object]) -> dict[str, int]:
    """Count, per file, the number of commits that touched it.

    Consumes a parsed event stream (full patch or name-status based).  A file
    touched several times within one commit counts once; renames move the
    accumulated tally to the new path, and the rename commit itself counts as
    a touch.
    """
    counts: dict[str, int] = {}
    seen_this_commit: set[str] = set()
    for event in events:
        if isinstance(event, CommitStart):
            seen_this_commit = set()
        elif isinstance(event, FileStart):
            header = event.header
            path = header.new_path or header.old_path
            if path in seen_this_commit:
                continue
            seen_this_commit.add(path)
            if header.is_rename_or_copy and header.old_path != header.new_path and not header.is_copy:
                counts[path] = counts.pop(header.old_path, 0) + 1
            else:
                counts[path] = counts.get(path, 0) + 1
    return counts


def churn_summary(counts: Iterable[int], population: bool = True) -> ChurnSummary:
    values = np.asarray(list(counts), dtype=float)
    if values.size == 0:
        raise EmptyInput("no modification counts")
    ddof = 0 if population else 1
    std = float(values.std(ddof=ddof)) if values.size > ddof else 0.0
    return ChurnSummary(mean=float(values.mean()), stddev=std, n_files=int(values.size))


def detect_hotspot_files(
    counts: dict[str, int],
    lifetime_months: float,
    thresholds: HotspotThresholds = HotspotThresholds(),
) -> set[str]:
    """Paths passing both hotspot-host conditions (both strictly exceeded)."""
    if not counts:
        raise EmptyInput("no files counted")
    if lifetime_months <= 0:
        raise ValueError("lifetime_months must be positive")
    summary = churn_summary(counts.values(), population=thresholds.population_sigma)
    if summary.stddev == 0.0:
        warnings.warn(
            "all files share one modification count; sigma filter selects nothing",
            DegenerateDistribution,
            stacklevel=2,
        )
    sigma_cut = summary.mean + thresholds.sigma_multiplier * summary.stddev
    rate_cut = lifetime_months * thresholds.monthly_rate
    return {
        path
        for path, count in counts.items()
        if count > sigma_cut and count > rate_cut
    }


def select_hotspot_lines(lines: list, thresholds: HotspotThresholds = HotspotThresholds()) -> list:
    """Outlier lines of one file by modification count.

    A line qualifies when its mod_count strictly exceeds the sigma cutoff
    computed over this file's live lines and meets the absolute floor.
    """
    if not lines:
        return []
    mods = np.asarray([ln.mod_count for ln in lines], dtype=float)
    ddof = 0 if thresholds.population_sigma else 1
    std = float(mods.std(ddof=ddof)) if mods.size > ddof else 0.0
    cut = float(mods.mean()) + thresholds.sigma_multiplier * std
    return [
        ln
        for ln in lines
        if ln.mod_count > cut and ln.mod_count >= thresholds.min_line_mods
    ]


def lifespan_days(line, as_of: int | None = None) -> float:
    """Days between a line's first and last recorded modification.

    ``as_of`` is accepted for signature stability but does not enter the
    computation: lifespan is defined by the recorded history itself.
    """
    if not line.history:
        raise EmptyInput("line has no history")
    return (line.history[-1].timestamp - line.history[0].timestamp) / 86400.0


def summarize(values: Iterable[float], metric: str = "") -> DescriptiveStats:
    """Min/median/mean/max/IQR with linearly interpolated quartiles."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise EmptyInput("cannot summarize an empty list")
    q1, q3 = np.percentile(arr, [25, 75])
    return DescriptiveStats(
        metric=metric,
        min=float(arr.min()),
        median=float(np.median(arr)),
        mean=float(arr.mean()),
        max=float(arr.max()),
        iqr=float(q3 - q1),
    )
