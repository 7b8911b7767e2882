"""Committer aggregation, bot flagging, and bot-vs-human churn shares.

Commits are grouped by the exact (committer name, committer email) pair; an
identity is flagged as a bot when a configured keyword appears in either
field, case-insensitively.  The manual-review step becomes a persisted
allowlist/denylist so audits are reproducible: allowlisted identities are
never bots regardless of keyword hits, denylisted ones always are.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .diffstream import CommitHeader

DEFAULT_KEYWORDS = ("bot", "auto")
# "Drobotov" is a human surname that happens to contain "bot".
DEFAULT_ALLOWLIST = ("Drobotov",)


@dataclass(frozen=True)
class CommitterIdentity:
    name: str
    email: str
    commit_count: int
    is_bot: bool = False
    match_reason: str | None = None


@dataclass(frozen=True)
class BotConfig:
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    allowlist: tuple[str, ...] = DEFAULT_ALLOWLIST
    denylist: tuple[str, ...] = ()

    @classmethod
    def from_file(cls, path: str | Path) -> "BotConfig":
        """Parse the line-oriented key=value config.

        Recognised keys (repeatable): ``keyword``, ``allow``, ``deny``.
        Blank lines and ``#`` comments are ignored.  Keywords given in the
        file replace the defaults; allow entries extend them.
        """
        keywords: list[str] = []
        allow: list[str] = list(DEFAULT_ALLOWLIST)
        deny: list[str] = []
        for raw in Path(path).read_text("utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"bad bot-config line (expected key=value): {raw!r}")
            key, value = key.strip().lower(), value.strip()
            if key == "keyword":
                keywords.append(value)
            elif key == "allow":
                allow.append(value)
            elif key == "deny":
                deny.append(value)
            else:
                raise ValueError(f"unknown bot-config key {key!r}")
        return cls(
            keywords=tuple(keywords) if keywords else DEFAULT_KEYWORDS,
            allowlist=tuple(allow),
            denylist=tuple(deny),
        )


def aggregate_committers(commit_headers: Iterable[CommitHeader]) -> list[CommitterIdentity]:
    """Group commits by exact (committer name, email); counts sum to input."""
    counts: Counter = Counter()
    for header in commit_headers:
        counts[(header.committer_name, header.committer_email)] += 1
    return [
        CommitterIdentity(name=name, email=email, commit_count=count)
        for (name, email), count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    ]


def flag_bot(identity: CommitterIdentity, config: BotConfig = BotConfig()) -> CommitterIdentity:
    """Attach the bot verdict: keyword hit minus allowlist, plus denylist."""
    def replace(is_bot: bool, reason: str | None) -> CommitterIdentity:
        return CommitterIdentity(identity.name, identity.email, identity.commit_count,
                                 is_bot, reason)

    if identity.name in config.denylist or identity.email in config.denylist:
        return replace(True, "denylist")
    if identity.name in config.allowlist or identity.email in config.allowlist:
        return replace(False, None)
    haystacks = (identity.name.lower(), identity.email.lower())
    for keyword in config.keywords:
        needle = keyword.lower()
        for hay in haystacks:
            if needle in hay:
                return replace(True, f"keyword:{keyword}")
    return replace(False, None)


@dataclass(frozen=True)
class BotShare:
    bot: int
    human: int

    @property
    def total(self) -> int:
        return self.bot + self.human

    @property
    def ratio(self) -> float:
        return self.bot / self.total if self.total else 0.0


@dataclass
class BotShareReport:
    overall: BotShare
    per_pattern: dict[str, BotShare] = field(default_factory=dict)


def bot_share(labeled_commits: Iterable[tuple[object, CommitterIdentity]]) -> BotShareReport:
    """Bot commit ratios overall and per pattern label.

    Each input element is one (pattern label, committer identity) commit
    attribution; patterns with zero commits simply do not appear.
    """
    overall_bot = 0
    overall_human = 0
    per: dict[str, list[int]] = {}
    for label, identity in labeled_commits:
        key = getattr(label, "value", label)
        bucket = per.setdefault(str(key), [0, 0])
        if identity.is_bot:
            overall_bot += 1
            bucket[0] += 1
        else:
            overall_human += 1
            bucket[1] += 1
    return BotShareReport(
        overall=BotShare(overall_bot, overall_human),
        per_pattern={k: BotShare(b, h) for k, (b, h) in sorted(per.items())},
    )
