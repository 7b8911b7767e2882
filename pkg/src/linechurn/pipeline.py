"""End-to-end analysis driver.

Stages: (1) a cheap name-status pass over the whole first-parent history
computes per-file churn and the dual-filter hotspot files; (2) only those
files get the expensive per-file patch log and line tracking, in a bounded
worker pool; (3) hotspot lines are selected, classified, and attributed to
bot or human committers; (4) all CSV/JSON artifacts are written, the run
manifest last.

A single file whose replay goes out of bounds is aborted and recorded; the
run completes and reports partial failure instead of dying.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import random
import shutil
import subprocess
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bots import BotConfig, BotShare, BotShareReport, CommitterIdentity, aggregate_committers, bot_share, flag_bot
from .churn import (
    SECONDS_PER_MONTH,
    FileChurn,
    HotspotThresholds,
    categorize_file,
    count_file_commits,
    detect_hotspot_files,
    lifespan_days,
    select_hotspot_lines,
    summarize,
)
from .diffstream import (
    CommitHeader,
    CommitStart,
    FileStart,
    log_command,
    parse_log_stream,
    parse_name_status_stream,
)
from .taxonomy import (
    PATTERN_CATEGORY,
    PatternLabel,
    chao1_curve,
    classify_history,
    load_label_overrides,
)
from .tracker import FileState, HistoryReplayer, LineReport, finalize, write_line_report

logger = logging.getLogger(__name__)


class RepoNotFound(Exception):
    pass


class GitUnavailable(Exception):
    pass


@dataclass
class AnalysisConfig:
    repo_path: Path
    output_dir: Path
    thresholds: HotspotThresholds = field(default_factory=HotspotThresholds)
    bot_config: BotConfig = field(default_factory=BotConfig)
    worker_count: int = 4
    file_sample: int | None = None
    sample_seed: int = 0
    emit_plot_data: bool = False
    labels_override: Path | None = None
    long_line_threshold: int = 120
    refactor_window_days: float = 14.0

    def __post_init__(self) -> None:
        self.repo_path = Path(self.repo_path)
        self.output_dir = Path(self.output_dir)
        if self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")

    def snapshot(self) -> dict:
        return {
            "repo_path": str(self.repo_path),
            "output_dir": str(self.output_dir),
            "sigma_multiplier": self.thresholds.sigma_multiplier,
            "monthly_rate": self.thresholds.monthly_rate,
            "min_line_mods": self.thresholds.min_line_mods,
            "population_sigma": self.thresholds.population_sigma,
            "worker_count": self.worker_count,
            "file_sample": self.file_sample,
            "sample_seed": self.sample_seed,
            "emit_plot_data": self.emit_plot_data,
            "labels_override": str(self.labels_override) if self.labels_override else None,
            "long_line_threshold": self.long_line_threshold,
            "refactor_window_days": self.refactor_window_days,
            "bot_keywords": list(self.bot_config.keywords),
            "bot_allowlist": list(self.bot_config.allowlist),
            "bot_denylist": list(self.bot_config.denylist),
            "history": "first-parent",  # merge side branches are excluded
        }


@dataclass
class RunManifest:
    tool_version: str
    config: dict
    repo_head: str
    started_at: str
    finished_at: str
    stage_counts: dict
    warnings: list[str]
    aborted: dict[str, str]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


@dataclass
class _TrackedFile:
    path: str
    category: str
    state: FileState
    reports: list[LineReport]
    hotspot_lines: list = field(default_factory=list)  # TrackedLine
    line_numbers: list[int] = field(default_factory=list)
    labels: list[PatternLabel] = field(default_factory=list)


@dataclass
class AnalysisResults:
    counts: dict[str, int]
    categories: dict[str, str]
    hotspot_files: set[str]
    lifetime_months: float
    tracked: list[_TrackedFile]
    commit_identities: dict[str, CommitterIdentity]  # hash -> flagged identity
    committers: list[CommitterIdentity]
    commit_share: BotShareReport
    edit_share: BotShareReport
    aborted: dict[str, str]
    warnings: list[str]
    n_commits: int


def _git_lines(repo: Path, cmd: list[str]):
    """Run a git command, streaming stdout lines; raise on failure."""
    proc = subprocess.Popen(cmd, cwd=repo, stdout=subprocess.PIPE,
                            stderr=subprocess.PIPE)
    assert proc.stdout is not None
    try:
        yield from proc.stdout
    finally:
        proc.stdout.close()
        stderr = proc.stderr.read() if proc.stderr else b""
        if proc.stderr:
            proc.stderr.close()
        code = proc.wait()
        if code != 0:
            raise RuntimeError(f"{' '.join(cmd)} failed ({code}): {stderr.decode('utf-8', 'replace').strip()}")


def _repo_head(repo: Path) -> str:
    if shutil.which("git") is None:
        raise GitUnavailable("git executable not found on PATH")
    if not repo.exists():
        raise RepoNotFound(f"{repo} does not exist")
    probe = subprocess.run(["git", "rev-parse", "--git-dir"], cwd=repo,
                           capture_output=True)
    if probe.returncode != 0:
        raise RepoNotFound(f"{repo} is not a git repository")
    head = subprocess.run(["git", "rev-parse", "HEAD"], cwd=repo, capture_output=True)
    if head.returncode != 0:
        raise RepoNotFound(f"{repo} has no commits (empty repository)")
    return head.stdout.decode().strip()


def _stage1_churn(repo: Path):
    """Whole-history name-status pass: counts, rename chains, time span."""
    chains: dict[str, list[str]] = {}
    span = {"first": None, "last": None, "n": 0}

    def observing(events):
        for event in events:
            if isinstance(event, CommitStart):
                ts = event.header.committer_timestamp
                span["first"] = ts if span["first"] is None else min(span["first"], ts)
                span["last"] = ts if span["last"] is None else max(span["last"], ts)
                span["n"] += 1
            elif isinstance(event, FileStart):
                header = event.header
                if header.is_rename_or_copy and not header.is_copy and header.old_path != header.new_path:
                    chains[header.new_path] = chains.pop(header.old_path, []) + [header.old_path]
            yield event

    lines = _git_lines(repo, log_command(name_status=True))
    counts = count_file_commits(observing(parse_name_status_stream(lines)))
    if span["n"] == 0:
        raise RepoNotFound(f"{repo} log produced no commits")
    months = max((span["last"] - span["first"]) / SECONDS_PER_MONTH, 1e-9)
    return counts, chains, months, span["n"]


def _track_one(repo: Path, path: str, chain: list[str]):
    """Stage 2 for one hotspot file: per-file patch log, replayed."""
    pathspecs = chain + [path]
    replayer = HistoryReplayer(track_paths=set(pathspecs))
    lines = _git_lines(repo, log_command(file_paths=pathspecs))
    replayer.run(parse_log_stream(lines))
    state = replayer.states.get(path)
    headers = {h.hash: h for h in replayer.commits_seen}
    aborted = {p: a.reason for p, a in replayer.aborted.items()}
    return state, headers, aborted


def analyze_repo(config: AnalysisConfig) -> RunManifest:
    """Run the full pipeline and write every artifact plus the manifest."""
    started = datetime.now(timezone.utc)
    head = _repo_head(config.repo_path)
    run_warnings: list[str] = []

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        counts, chains, lifetime_months, n_commits = _stage1_churn(config.repo_path)
        categories = {path: categorize_file(path) for path in counts}
        hotspot_files = detect_hotspot_files(counts, lifetime_months, config.thresholds)
    run_warnings.extend(str(w.message) for w in caught)

    selected_files = sorted(hotspot_files)
    if config.file_sample is not None and config.file_sample < len(selected_files):
        rng = random.Random(config.sample_seed)
        selected_files = sorted(rng.sample(selected_files, config.file_sample))

    # Stage 2: line tracking, hotspot files only.
    tracked: list[_TrackedFile] = []
    aborted: dict[str, str] = {}
    commit_headers: dict[str, CommitHeader] = {}

    def work(path: str):
        return path, _track_one(config.repo_path, path, chains.get(path, []))

    with ThreadPoolExecutor(max_workers=config.worker_count) as pool:
        for path, (state, headers, file_aborted) in pool.map(work, selected_files):
            commit_headers.update(headers)
            aborted.update(file_aborted)
            if state is None:
                continue
            tracked.append(_TrackedFile(
                path=path,
                category=categories.get(path, categorize_file(path)),
                state=state,
                reports=finalize(state),
            ))
    tracked.sort(key=lambda t: t.path)

    # Stage 3: hotspot lines, classification, bot attribution.
    overrides = load_label_overrides(config.labels_override) if config.labels_override else {}
    for entry in tracked:
        positions = {id(line): i + 1 for i, line in enumerate(entry.state.file_lines)}
        entry.hotspot_lines = select_hotspot_lines(entry.state.file_lines, config.thresholds)
        for line in entry.hotspot_lines:
            line_number = positions[id(line)]
            entry.line_numbers.append(line_number)
            label = classify_history(
                line, entry.category, entry.path,
                long_line_threshold=config.long_line_threshold,
                refactor_window_days=config.refactor_window_days,
            )
            override = overrides.get((entry.path, line_number))
            if override is not None:
                label = PatternLabel(override, PATTERN_CATEGORY[override], 1.0,
                                     heuristic=False)
            entry.labels.append(label)

    hotspot_hashes = {
        rev.commit_hash
        for entry in tracked
        for line in entry.hotspot_lines
        for rev in line.history
    }
    flagged = {
        (identity.name, identity.email): flag_bot(identity, config.bot_config)
        for identity in aggregate_committers(
            [h for h in commit_headers.values() if h.hash in hotspot_hashes]
        )
    }
    commit_identity = {
        h.hash: flagged[(h.committer_name, h.committer_email)]
        for h in commit_headers.values() if h.hash in hotspot_hashes
    }

    # Commit-level share: a commit counts once per pattern, and once overall.
    per_pattern_entries = sorted({
        (rev.commit_hash, label.label.value)
        for entry in tracked
        for line, label in zip(entry.hotspot_lines, entry.labels)
        for rev in line.history
    })
    commit_share = bot_share(
        (label, commit_identity[hash_]) for hash_, label in per_pattern_entries
    )
    overall_entries = {}
    for hash_, label in per_pattern_entries:
        overall_entries.setdefault(hash_, label)
    overall = bot_share((label, commit_identity[h]) for h, label in sorted(overall_entries.items()))
    commit_share = BotShareReport(overall=overall.overall, per_pattern=commit_share.per_pattern)

    # Edit-level share: every modification event counts.
    edit_entries = [
        (label.label.value, commit_identity[rev.commit_hash])
        for entry in tracked
        for line, label in zip(entry.hotspot_lines, entry.labels)
        for rev in line.history[1:]
    ]
    edit_share = bot_share(edit_entries)

    results = AnalysisResults(
        counts=counts,
        categories=categories,
        hotspot_files=hotspot_files,
        lifetime_months=lifetime_months,
        tracked=tracked,
        commit_identities=commit_identity,
        committers=sorted(flagged.values(), key=lambda i: (-i.commit_count, i.name, i.email)),
        commit_share=commit_share,
        edit_share=edit_share,
        aborted=aborted,
        warnings=run_warnings,
        n_commits=n_commits,
    )

    written = emit_reports(results, config.output_dir, config.emit_plot_data)
    logger.info("wrote %d artifacts to %s", len(written), config.output_dir)

    finished = datetime.now(timezone.utc)
    manifest = RunManifest(
        tool_version=__version__,
        config=config.snapshot(),
        repo_head=head,
        started_at=started.isoformat(),
        finished_at=finished.isoformat(),
        stage_counts={
            "commits_scanned": n_commits,
            "files_total": len(counts),
            "files_programming": sum(1 for c in categories.values() if c == "programming"),
            "files_administrative": sum(1 for c in categories.values() if c == "administrative"),
            "hotspot_files": len(hotspot_files),
            "files_selected_for_tracking": len(selected_files),
            "files_tracked": len(tracked),
            "files_aborted": len(aborted),
            "hotspot_lines": sum(len(t.hotspot_lines) for t in tracked),
            "hotspot_commits": len(overall_entries),
            "overlap_skips": sum(t.state.overlap_skips for t in tracked),
        },
        warnings=run_warnings,
        aborted=aborted,
    )
    manifest_path = config.output_dir / "manifest.json"
    manifest_path.write_text(manifest.to_json(), "utf-8")
    return manifest


def _csv_writer(path: Path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _safe_report_name(path: str) -> str:
    digest = hashlib.sha1(path.encode("utf-8", "surrogateescape")).hexdigest()[:8]
    safe = "".join(c if c.isalnum() or c in "._-" else "__" for c in path)
    return f"{safe[:120]}-{digest}.csv"


def emit_reports(results: AnalysisResults, output_dir: Path, emit_plot_data: bool) -> list[Path]:
    """Write every analysis artifact; returns the written paths."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    # Per-file line reports.
    reports_dir = output_dir / "line_reports"
    reports_dir.mkdir(exist_ok=True)
    for entry in results.tracked:
        report_path = reports_dir / _safe_report_name(entry.path)
        write_line_report(entry.reports, report_path)
        written.append(report_path)

    # file_churn.csv
    path = output_dir / "file_churn.csv"
    fh, writer = _csv_writer(path)
    with fh:
        writer.writerow(["path", "commit_touch_count", "category", "is_hotspot_file"])
        for file_path in sorted(results.counts):
            churn = FileChurn(file_path, results.counts[file_path],
                              results.categories[file_path])
            writer.writerow([
                churn.path,
                churn.commit_touch_count,
                churn.category,
                str(churn.path in results.hotspot_files).lower(),
            ])
    written.append(path)

    # labels.csv
    path = output_dir / "labels.csv"
    fh, writer = _csv_writer(path)
    with fh:
        writer.writerow(["path", "line_number", "label", "category", "confidence",
                         "heuristic", "diagnostics"])
        for entry in results.tracked:
            for line_number, label in zip(entry.line_numbers, entry.labels):
                writer.writerow([
                    entry.path,
                    line_number,
                    label.label.value,
                    label.category.value,
                    f"{label.confidence:.1f}",
                    str(label.heuristic).lower(),
                    label.diagnostics,
                ])
    written.append(path)

    # summary_stats.csv
    path = output_dir / "summary_stats.csv"
    fh, writer = _csv_writer(path)
    with fh:
        writer.writerow(["metric", "min", "median", "mean", "max", "iqr"])
        per_file = [len(t.hotspot_lines) for t in results.tracked if t.hotspot_lines]
        all_lines = [ln for t in results.tracked for ln in t.hotspot_lines]
        rows = []
        if per_file:
            rows.append(summarize(per_file, "hotspot_lines_per_file"))
        if all_lines:
            days = [lifespan_days(ln) for ln in all_lines]
            rows.append(summarize(days, "lifespan_days"))
            rows.append(summarize([d / 365.25 for d in days], "lifespan_years"))
            rows.append(summarize([ln.mod_count for ln in all_lines], "modification_count"))
        for stats in rows:
            writer.writerow([stats.metric] + [f"{v:.6f}" for v in
                                              (stats.min, stats.median, stats.mean,
                                               stats.max, stats.iqr)])
    written.append(path)

    # committers.csv
    path = output_dir / "committers.csv"
    fh, writer = _csv_writer(path)
    with fh:
        writer.writerow(["name", "email", "commit_count", "is_bot", "match_reason"])
        for identity in results.committers:
            writer.writerow([identity.name, identity.email, identity.commit_count,
                             str(identity.is_bot).lower(), identity.match_reason or ""])
    written.append(path)

    # bot_share.csv
    path = output_dir / "bot_share.csv"
    fh, writer = _csv_writer(path)
    with fh:
        writer.writerow(["pattern", "bot_commits", "human_commits", "ratio",
                         "bot_edits", "human_edits", "edit_ratio"])
        patterns = sorted(set(results.commit_share.per_pattern) | set(results.edit_share.per_pattern))
        for pattern in patterns:
            commit_stats = results.commit_share.per_pattern.get(pattern, BotShare(0, 0))
            edit_stats = results.edit_share.per_pattern.get(pattern, BotShare(0, 0))
            writer.writerow([
                pattern,
                commit_stats.bot, commit_stats.human, f"{commit_stats.ratio:.6f}",
                edit_stats.bot, edit_stats.human, f"{edit_stats.ratio:.6f}",
            ])
    written.append(path)

    # saturation.csv (plot data)
    if emit_plot_data:
        label_sequence = [
            label.label.value
            for entry in results.tracked
            for label in entry.labels
        ]
        path = output_dir / "saturation.csv"
        fh, writer = _csv_writer(path)
        with fh:
            writer.writerow(["k", "s_obs", "s_est"])
            if label_sequence:
                for k, s_obs, s_est in chao1_curve(label_sequence):
                    writer.writerow([k, s_obs, f"{s_est:.6f}"])
        written.append(path)

    # summary.json: the headline numbers in one machine-readable document.
    label_counts: dict[str, int] = {}
    for entry in results.tracked:
        for label in entry.labels:
            label_counts[label.label.value] = label_counts.get(label.label.value, 0) + 1
    summary = {
        "n_files": len(results.counts),
        "n_hotspot_files": len(results.hotspot_files),
        "n_tracked_files": len(results.tracked),
        "n_hotspot_lines": sum(len(t.hotspot_lines) for t in results.tracked),
        "hotspot_file_fraction": (len(results.hotspot_files) / len(results.counts)
                                  if results.counts else 0.0),
        "bot_commit_share": results.commit_share.overall.ratio,
        "bot_edit_share": results.edit_share.overall.ratio,
        "labels": dict(sorted(label_counts.items())),
        "lifetime_months": results.lifetime_months,
        "aborted_files": sorted(results.aborted),
    }
    path = output_dir / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", "utf-8")
    written.append(path)

    return written
