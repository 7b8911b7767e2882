from __future__ import annotations

import io
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from linechurn.diffstream import log_command, parse_log_stream  # noqa: E402


def repo_log_events(repo: Path, paths: list[str] | None = None):
    """Parsed event list for a repository's patch log."""
    out = subprocess.run(log_command(file_paths=paths), cwd=repo,
                         capture_output=True, check=True).stdout
    return list(parse_log_stream(io.BytesIO(out)))


@pytest.fixture
def scratch_repo(tmp_path):
    """A small hand-scripted repository with a rename and a planted hotspot."""
    from repogen import RepoBuilder

    builder = RepoBuilder(tmp_path / "repo")
    builder.commit({"a.txt": b"alpha\nbeta\n", "b.txt": b"one\ntwo\nthree\n"}, "c1")
    builder.commit({"a.txt": b"alpha\nbeta2\n"}, "c2")
    builder.commit({"a.txt": b"alpha\nbeta3\n"}, "c3")
    hashes = builder.finish()
    return builder.path, hashes
