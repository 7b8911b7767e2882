"""Candidate repository selection against a code-hosting metadata API.

Applies the inclusion criteria (popularity floor, minimum commit count,
continuous half-year activity) and draws a seeded stratified sample over
five popularity strata.  Metadata responses are cached on disk, one JSON
file per repository per query date, and rate-limit responses are retried
with the server-provided backoff.
"""

from __future__ import annotations

import json
import logging
import math
import random
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import requests

logger = logging.getLogger(__name__)

DEFAULT_API_BASE = "https://api.github.com"
HALF_YEAR_SECONDS = 6 * 30.44 * 86400
SECONDS_PER_MONTH = 30.44 * 86400

STRATA: tuple[tuple[int, int], ...] = (
    (11, 100),
    (101, 1_000),
    (1_001, 10_000),
    (10_001, 100_000),
    (100_001, 1_000_000),
)


class SelectorError(Exception):
    pass


class NotFound(SelectorError):
    pass


class RateLimited(SelectorError):
    def __init__(self, retry_after: float):
        self.retry_after = retry_after
        super().__init__(f"rate limited; retry after {retry_after:.0f}s")


class TransportError(SelectorError):
    pass


class EmptyStratumWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RepoMeta:
    owner_and_name: str
    stars: int
    forks: int
    total_commits: int
    created_at: int  # UTC epoch seconds
    half_year_commit_buckets: tuple[int, ...]
    archived: bool = False

    @property
    def popularity(self) -> int:
        return max(self.stars, self.forks)


@dataclass(frozen=True)
class InclusionCriteria:
    min_stars_or_forks: int = 11  # "more than ten": ten itself is excluded
    min_commits: int = 10_000
    require_commit_every_half_year: bool = True

    def __post_init__(self) -> None:
        if self.min_stars_or_forks <= 0 or self.min_commits <= 0:
            raise ValueError("thresholds must be strictly positive")


@dataclass(frozen=True)
class Stratum:
    lower: int
    upper: int

    def __contains__(self, popularity: int) -> bool:
        return self.lower <= popularity <= self.upper


def assign_stratum(popularity: int) -> Stratum | None:
    """The unique popularity stratum, or None outside [11, 1000000]."""
    if popularity < 0:
        raise ValueError("popularity must be non-negative")
    for lower, upper in STRATA:
        if lower <= popularity <= upper:
            return Stratum(lower, upper)
    return None


def passes_inclusion(meta: RepoMeta, criteria: InclusionCriteria = InclusionCriteria()
                     ) -> tuple[bool, list[str]]:
    """Evaluate every inclusion criterion; failed ones are named."""
    failed: list[str] = []
    if meta.popularity < criteria.min_stars_or_forks:
        failed.append("min_stars_or_forks")
    if meta.total_commits < criteria.min_commits:
        failed.append("min_commits")
    if criteria.require_commit_every_half_year and any(
        bucket == 0 for bucket in meta.half_year_commit_buckets
    ):
        failed.append("commit_every_half_year")
    return (not failed, failed)


def sample_stratified(candidates: list[tuple[RepoMeta, Stratum]], per_stratum: int,
                      seed: int) -> list[RepoMeta]:
    """Seeded draw of at most ``per_stratum`` repos from each stratum.

    Strata are processed in ascending order with a single seeded generator;
    the same seed and input order always reproduce the same selection.
    Empty strata are reported as warnings, never errors.
    """
    if per_stratum < 1:
        raise ValueError("per_stratum must be at least 1")
    buckets: dict[tuple[int, int], list[RepoMeta]] = {s: [] for s in STRATA}
    for meta, stratum in candidates:
        buckets[(stratum.lower, stratum.upper)].append(meta)
    rng = random.Random(seed)
    selected: list[RepoMeta] = []
    for bounds in STRATA:
        population = buckets[bounds]
        if not population:
            warnings.warn(
                f"stratum {bounds[0]}-{bounds[1]} has no candidates",
                EmptyStratumWarning,
                stacklevel=2,
            )
            continue
        if len(population) <= per_stratum:
            selected.extend(population)
        else:
            selected.extend(rng.sample(population, per_stratum))
    return selected


class MetadataClient:
    """Read-only metadata client with disk caching and backoff on 429/403."""

    def __init__(
        self,
        api_base: str = DEFAULT_API_BASE,
        auth_token: str | None = None,
        cache_dir: str | Path | None = None,
        max_retries: int = 3,
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        self.api_base = api_base.rstrip("/")
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.max_retries = max_retries
        self.timeout = timeout
        self.session = session or requests.Session()
        self.session.headers.update({
            "Accept": "application/vnd.github+json",
            "User-Agent": "linechurn-selector",
        })
        if auth_token:
            self.session.headers["Authorization"] = f"Bearer {auth_token}"

    # -- HTTP plumbing -----------------------------------------------------

    def _get(self, path: str, params: dict | None = None) -> requests.Response:
        url = f"{self.api_base}{path}"
        attempt = 0
        while True:
            try:
                response = self.session.get(url, params=params, timeout=self.timeout)
            except requests.RequestException as exc:
                raise TransportError(f"GET {url}: {exc}") from exc
            if response.status_code == 404:
                raise NotFound(f"{path} not found")
            if response.status_code in (403, 429):
                retry_after = _retry_after_seconds(response)
                if attempt >= self.max_retries:
                    raise RateLimited(retry_after)
                attempt += 1
                logger.warning("rate limited on %s; sleeping %.1fs (retry %d/%d)",
                               path, retry_after, attempt, self.max_retries)
                time.sleep(min(retry_after, 60.0))
                continue
            if response.status_code >= 500:
                raise TransportError(f"GET {url}: server error {response.status_code}")
            response.raise_for_status()
            return response

    def _get_json(self, path: str, params: dict | None = None):
        return self._get(path, params).json()

    def _count_via_pagination(self, path: str, params: dict) -> int:
        """Item count from the Link header's last-page number (per_page=1)."""
        response = self._get(path, {**params, "per_page": 1})
        link = response.headers.get("Link", "")
        for part in link.split(","):
            if 'rel="last"' in part:
                target = part[part.find("<") + 1 : part.find(">")]
                page = _query_param(target, "page")
                if page is not None:
                    return int(page)
        return len(response.json())

    # -- the fetch operation -------------------------------------------------

    def fetch_repo_meta(self, owner_and_name: str, now: int | None = None) -> RepoMeta:
        """Populate RepoMeta for one ``owner/repo``.

        Half-year buckets are presence samples aligned to the creation date:
        bucket k is 1 when at least one commit exists in the k-th half-year
        interval since creation, else 0.
        """
        if "/" not in owner_and_name or owner_and_name.count("/") != 1:
            raise ValueError(f"repository name must be 'owner/repo': {owner_and_name!r}")
        now_ts = int(time.time()) if now is None else now

        cached = self._cache_read(owner_and_name, now_ts)
        if cached is not None:
            return cached

        info = self._get_json(f"/repos/{owner_and_name}")
        created_at = _parse_iso8601(info["created_at"])
        total_commits = self._count_via_pagination(f"/repos/{owner_and_name}/commits", {})

        buckets: list[int] = []
        for start, end in _half_year_intervals(created_at, now_ts):
            commits = self._get_json(
                f"/repos/{owner_and_name}/commits",
                {
                    "since": _iso8601(start),
                    "until": _iso8601(end),
                    "per_page": 1,
                },
            )
            buckets.append(1 if commits else 0)

        meta = RepoMeta(
            owner_and_name=owner_and_name,
            stars=int(info.get("stargazers_count", 0)),
            forks=int(info.get("forks_count", 0)),
            total_commits=total_commits,
            created_at=created_at,
            half_year_commit_buckets=tuple(buckets),
            archived=bool(info.get("archived", False)),
        )
        self._cache_write(owner_and_name, now_ts, meta)
        return meta

    def fetch_many(self, names: list[str], workers: int = 4,
                   now: int | None = None) -> list[RepoMeta | Exception]:
        """Concurrent fetches, results merged back in input order."""
        def one(name: str):
            try:
                return self.fetch_repo_meta(name, now=now)
            except Exception as exc:  # surfaced to the caller per name
                return exc

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            return list(pool.map(one, names))

    # -- cache ----------------------------------------------------------------

    def _cache_path(self, owner_and_name: str, now_ts: int) -> Path | None:
        if self.cache_dir is None:
            return None
        day = datetime.fromtimestamp(now_ts, tz=timezone.utc).strftime("%Y-%m-%d")
        safe = owner_and_name.replace("/", "__")
        return self.cache_dir / f"{safe}__{day}.json"

    def _cache_read(self, owner_and_name: str, now_ts: int) -> RepoMeta | None:
        path = self._cache_path(owner_and_name, now_ts)
        if path is None or not path.exists():
            return None
        record = json.loads(path.read_text("utf-8"))
        record["half_year_commit_buckets"] = tuple(record["half_year_commit_buckets"])
        return RepoMeta(**record)

    def _cache_write(self, owner_and_name: str, now_ts: int, meta: RepoMeta) -> None:
        path = self._cache_path(owner_and_name, now_ts)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        record = {
            "owner_and_name": meta.owner_and_name,
            "stars": meta.stars,
            "forks": meta.forks,
            "total_commits": meta.total_commits,
            "created_at": meta.created_at,
            "half_year_commit_buckets": list(meta.half_year_commit_buckets),
            "archived": meta.archived,
        }
        path.write_text(json.dumps(record, sort_keys=True) + "\n", "utf-8")


def _half_year_intervals(created_at: int, now_ts: int) -> list[tuple[int, int]]:
    age = max(0, now_ts - created_at)
    n = max(1, math.ceil(age / HALF_YEAR_SECONDS))
    return [
        (
            int(created_at + k * HALF_YEAR_SECONDS),
            min(int(created_at + (k + 1) * HALF_YEAR_SECONDS), now_ts),
        )
        for k in range(n)
    ]


def _retry_after_seconds(response: requests.Response) -> float:
    retry_after = response.headers.get("Retry-After")
    if retry_after is not None:
        try:
            return max(0.0, float(retry_after))
        except ValueError:
            pass
    reset = response.headers.get("X-RateLimit-Reset")
    if reset is not None:
        try:
            return max(0.0, float(reset) - time.time())
        except ValueError:
            pass
    return 1.0


def _parse_iso8601(text: str) -> int:
    return int(datetime.fromisoformat(text.replace("Z", "+00:00")).timestamp())


def _iso8601(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _query_param(url: str, name: str) -> str | None:
    from urllib.parse import parse_qs, urlparse

    values = parse_qs(urlparse(url).query).get(name)
    return values[0] if values else None
