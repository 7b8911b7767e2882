"""Per-line history tracking over a replayed patch stream.

Maintains, for every tracked file, a dense vector of live canonical line
objects plus the running hunk-offset table, and applies each hunk by pairing
deletion runs with addition runs positionally.  Paired lines keep their
identity (slot id and birth timestamp) and gain a history entry; surplus
deletions die, surplus additions are born fresh.

Line identity is strictly positional: moving an unchanged block shows up as
deaths at the old location and fresh births at the new one.  No
content-similarity matching is attempted, which keeps replay deterministic.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .diffstream import (
    CommitHeader,
    CommitStart,
    FileDiffHeader,
    FileSkipped,
    FileStart,
    Hunk,
    HunkEvent,
    HunkLine,
    LineKind,
    StreamEnd,
    display_text,
)

logger = logging.getLogger(__name__)


class HunkOutOfBounds(Exception):
    """Hunk coordinates exceed the current tracked file length.

    Tracking of the affected file is aborted and reported, never silently
    clamped.
    """

    def __init__(self, path: str, hunk: Hunk, adjusted_start: int, live_count: int):
        self.path = path
        self.adjusted_start = adjusted_start
        self.live_count = live_count
        super().__init__(
            f"{path}: hunk @@ -{hunk.old_start},{hunk.old_count} "
            f"+{hunk.new_start},{hunk.new_count} @@ adjusted to start {adjusted_start} "
            f"but only {live_count} live lines"
        )


@dataclass
class Revision:
    commit_hash: str
    timestamp: int
    content: bytes


@dataclass
class TrackedLine:
    slot_id: int
    content: bytes
    birth_ts: int
    had_newline: bool = True
    death_ts: int | None = None
    history: list[Revision] = field(default_factory=list)

    @property
    def mod_count(self) -> int:
        return len(self.history) - 1


@dataclass
class EditPairing:
    pairs: list[tuple[TrackedLine, HunkLine]]
    deaths: list[TrackedLine]
    births: list[HunkLine]


def pair_edits(deletion_run: list, addition_run: list) -> EditPairing:
    """Pair the i-th deletion with the i-th addition of one change group.

    Surplus deletions become deaths, surplus additions become births.
    """
    n = min(len(deletion_run), len(addition_run))
    return EditPairing(
        pairs=list(zip(deletion_run[:n], addition_run[:n])),
        deaths=list(deletion_run[n:]),
        births=list(addition_run[n:]),
    )


def adjust_position(offsets: list[tuple[int, int]], raw_index: int) -> int:
    """Shift a raw hunk coordinate by all deltas recorded before it.

    ``offsets`` holds (position, delta) pairs from hunks already applied in
    the same commit; positions are in the commit's parent coordinates, so a
    strict ``<`` comparison keeps every hunk of one patch in one coordinate
    system.
    """
    return raw_index + sum(delta for pos, delta in offsets if pos < raw_index)


@dataclass
class FileState:
    """Mutable tracking state for a single file path."""

    path: str
    file_lines: list[TrackedLine] = field(default_factory=list)
    dead_lines: list[TrackedLine] = field(default_factory=list)
    line_offsets: list[tuple[int, int]] = field(default_factory=list)
    max_processed_index: int = 0
    current_commit: str | None = None
    births_total: int = 0
    deaths_total: int = 0
    overlap_skips: int = 0
    _next_slot: int = 0

    def _new_slot(self) -> int:
        self._next_slot += 1
        return self._next_slot

    def begin_commit(self, commit_hash: str) -> None:
        """Reset the within-commit offset table at a commit boundary.

        Hunk coordinates are relative to the commit's parent, which is
        exactly the state accumulated so far, so deltas never carry across
        commits.
        """
        if self.current_commit != commit_hash:
            self.line_offsets.clear()
            self.max_processed_index = 0
            self.current_commit = commit_hash


def apply_hunk(state: FileState, hunk: Hunk, commit: CommitHeader) -> FileState:
    """Apply one hunk to the tracked file state.

    Paired lines keep slot_id and birth_ts, gain a history entry and one
    modification; unmatched deletions get death_ts and move to dead_lines;
    unmatched additions are born fresh.  The offset table gains the hunk's
    length delta so later hunks of the same commit land correctly.
    """
    state.begin_commit(commit.hash)
    adj_start = adjust_position(state.line_offsets, hunk.old_start)
    live = len(state.file_lines)

    if hunk.old_count > 0:
        base = adj_start - 1
        if base < 0 or base + hunk.old_count > live:
            raise HunkOutOfBounds(state.path, hunk, adj_start, live)
    else:
        base = adj_start  # pure insertion goes after line adj_start
        if base < 0 or base > live:
            raise HunkOutOfBounds(state.path, hunk, adj_start, live)

    # Overlap with a previously processed hunk of this commit: skip that many
    # leading context lines.  Standard git patches never overlap; the branch
    # is defensive and counted.
    overlap = max(0, state.max_processed_index - adj_start + 1) if hunk.old_count > 0 else 0
    if overlap:
        state.overlap_skips += overlap
        base += overlap

    updated: list[TrackedLine] = []
    consumed = 0
    pending_dels: list[TrackedLine] = []
    pending_adds: list[HunkLine] = []

    def flush() -> None:
        if not pending_dels and not pending_adds:
            return
        pairing = pair_edits(pending_dels, pending_adds)
        for old_line, added in pairing.pairs:
            old_line.history.append(Revision(commit.hash, commit.committer_timestamp, added.text))
            old_line.content = added.text
            old_line.had_newline = added.had_newline
            updated.append(old_line)
        for old_line in pairing.deaths:
            old_line.death_ts = commit.committer_timestamp
            state.dead_lines.append(old_line)
            state.deaths_total += 1
        for added in pairing.births:
            born = TrackedLine(
                slot_id=state._new_slot(),
                content=added.text,
                birth_ts=commit.committer_timestamp,
                had_newline=added.had_newline,
                history=[Revision(commit.hash, commit.committer_timestamp, added.text)],
            )
            updated.append(born)
            state.births_total += 1
        pending_dels.clear()
        pending_adds.clear()

    skip_left = overlap
    for hl in hunk.lines:
        if hl.kind == LineKind.CONTEXT:
            flush()
            if skip_left > 0:
                skip_left -= 1
                continue
            existing = state.file_lines[base + consumed]
            existing.had_newline = hl.had_newline
            updated.append(existing)
            consumed += 1
        elif hl.kind == LineKind.DELETION:
            if pending_adds:
                flush()
            pending_dels.append(state.file_lines[base + consumed])
            consumed += 1
        else:  # addition
            pending_adds.append(hl)
    flush()

    state.file_lines[base : base + consumed] = updated
    state.max_processed_index = base + len(updated)
    state.line_offsets.append((hunk.old_start, hunk.new_count - hunk.old_count))
    return state


def reconstruct_snapshot(state: FileState) -> list[bytes]:
    """Content of all live lines in positional order."""
    return [ln.content for ln in state.file_lines]


def snapshot_bytes(state: FileState) -> bytes:
    """Byte-exact file image of the live lines, honouring final newlines."""
    return b"".join(
        ln.content + (b"\n" if ln.had_newline else b"") for ln in state.file_lines
    )


@dataclass(frozen=True)
class LineReport:
    line_number: int  # 1-based final position
    content: bytes
    mod_count: int
    birth_ts: int
    history: tuple[tuple[str, int], ...]  # (commit_hash, timestamp) incl. birth


def finalize(state: FileState) -> list[LineReport]:
    """One report row per live line; dead lines are excluded."""
    return [
        LineReport(
            line_number=i + 1,
            content=ln.content,
            mod_count=ln.mod_count,
            birth_ts=ln.birth_ts,
            history=tuple((rev.commit_hash, rev.timestamp) for rev in ln.history),
        )
        for i, ln in enumerate(state.file_lines)
    ]


LINE_REPORT_COLUMNS = ["line_number", "content", "mod_count", "birth_ts",
                       "commit_hashes", "timestamps"]


def write_line_report(rows: Iterable[LineReport], out_path: str | Path) -> None:
    """Write one file's line reports as CSV (history sub-fields '|'-joined)."""
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LINE_REPORT_COLUMNS)
        for row in rows:
            writer.writerow([
                row.line_number,
                display_text(row.content),
                row.mod_count,
                row.birth_ts,
                "|".join(h for h, _ in row.history),
                "|".join(str(t) for _, t in row.history),
            ])


def read_line_report(path: str | Path) -> list[LineReport]:
    """Parse a line-report CSV back into rows (content as displayed text)."""
    out: list[LineReport] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            hashes = rec["commit_hashes"].split("|") if rec["commit_hashes"] else []
            stamps = [int(t) for t in rec["timestamps"].split("|")] if rec["timestamps"] else []
            out.append(LineReport(
                line_number=int(rec["line_number"]),
                content=rec["content"].encode("utf-8", "surrogateescape"),
                mod_count=int(rec["mod_count"]),
                birth_ts=int(rec["birth_ts"]),
                history=tuple(zip(hashes, stamps)),
            ))
    return out


@dataclass
class AbortedFile:
    path: str
    reason: str


class HistoryReplayer:
    """Drives FileStates for every path seen in one parsed event stream.

    Renames carry the existing state forward under the new path; copies start
    fresh states (the copied lines are new births when the source is being
    tracked in the same stream, otherwise the copy target is aborted because
    its baseline is unknown).  A file whose hunks go out of bounds is aborted
    and reported; other files continue.
    """

    def __init__(self, track_paths: set[str] | None = None):
        self.track_paths = track_paths
        self.states: dict[str, FileState] = {}
        self.aborted: dict[str, AbortedFile] = {}
        self.commit_count = 0
        self.commits_seen: list[CommitHeader] = []

    def _wants(self, path: str) -> bool:
        return self.track_paths is None or path in self.track_paths

    def replay(self, events: Iterable[object]) -> Iterator[CommitHeader]:
        """Apply events commit by commit, yielding after each commit."""
        current_commit: CommitHeader | None = None
        current_path: str | None = None

        for event in events:
            if isinstance(event, CommitStart):
                if current_commit is not None:
                    yield current_commit
                current_commit = event.header
                self.commit_count += 1
                self.commits_seen.append(event.header)
                current_path = None
            elif isinstance(event, FileStart):
                current_path = self._on_file_start(event.header, current_commit)
            elif isinstance(event, HunkEvent):
                if current_commit is None:
                    raise ValueError("hunk event before any commit")
                if current_path is None or current_path in self.aborted:
                    continue
                state = self.states.setdefault(current_path, FileState(current_path))
                try:
                    apply_hunk(state, event.hunk, current_commit)
                except HunkOutOfBounds as exc:
                    logger.warning("aborting %s: %s", current_path, exc)
                    self.aborted[current_path] = AbortedFile(current_path, str(exc))
                    self.states.pop(current_path, None)
            elif isinstance(event, (FileSkipped, StreamEnd)):
                pass
        if current_commit is not None:
            yield current_commit

    def run(self, events: Iterable[object]) -> None:
        for _ in self.replay(events):
            pass

    def _on_file_start(self, header: FileDiffHeader, commit: CommitHeader | None) -> str | None:
        old, new = header.old_path, header.new_path
        if not self._wants(new) and not self._wants(old):
            return None
        if header.is_rename_or_copy and old != new:
            if header.is_copy:
                if old in self.states and commit is not None:
                    self.states[new] = _fresh_copy(self.states[old], new, commit)
                elif new not in self.states:
                    self.aborted[new] = AbortedFile(new, f"copy source {old!r} not in stream")
                    return new
            else:
                if old in self.states:
                    state = self.states.pop(old)
                    state.path = new
                    self.states[new] = state
                if old in self.aborted:
                    self.aborted[new] = self.aborted.pop(old)
        return new

    def finalize_all(self) -> dict[str, list[LineReport]]:
        return {path: finalize(state) for path, state in sorted(self.states.items())}


def _fresh_copy(source: FileState, new_path: str, commit: CommitHeader) -> FileState:
    """Copy a file's current content as brand-new lines (fresh identities)."""
    state = FileState(new_path)
    state.current_commit = commit.hash
    for src_line in source.file_lines:
        state.file_lines.append(TrackedLine(
            slot_id=state._new_slot(),
            content=src_line.content,
            birth_ts=commit.committer_timestamp,
            had_newline=src_line.had_newline,
            history=[Revision(commit.hash, commit.committer_timestamp, src_line.content)],
        ))
        state.births_total += 1
    return state
