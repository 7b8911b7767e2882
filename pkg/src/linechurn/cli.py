"""Command-line entry points: ``analyze``, ``select``, and ``version``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bots import BotConfig
from .churn import HotspotThresholds
from .pipeline import AnalysisConfig, GitUnavailable, RepoNotFound, analyze_repo
from .selector import (
    InclusionCriteria,
    MetadataClient,
    SelectorError,
    assign_stratum,
    passes_inclusion,
    sample_stratified,
)

logger = logging.getLogger(__name__)


def _style(text: str, code: str) -> str:
    if os.environ.get("NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linechurn",
        description="Mine line-level code churn hotspots from git history.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze one repository work tree")
    analyze.add_argument("--repo", required=True, type=Path, help="path to the repository")
    analyze.add_argument("--out", required=True, type=Path, help="output directory")
    analyze.add_argument("--sigma", type=float, default=3.0,
                         help="standard-deviation multiplier of the outlier filter")
    analyze.add_argument("--monthly-rate", type=float, default=1.0,
                         help="required changes per month of project lifetime")
    analyze.add_argument("--min-line-mods", type=int, default=3,
                         help="absolute floor on a hotspot line's modification count")
    analyze.add_argument("--workers", type=int, default=4)
    analyze.add_argument("--file-sample", type=int, default=None,
                         help="cap on hotspot files to line-track")
    analyze.add_argument("--seed", type=int, default=0, help="sampling seed")
    analyze.add_argument("--bot-config", type=Path, default=None,
                         help="bot keyword/allowlist/denylist file (key=value lines)")
    analyze.add_argument("--labels-override", type=Path, default=None,
                         help="CSV of human labels (path,line_number,label)")
    analyze.add_argument("--emit-plot-data", action="store_true",
                         help="also write saturation.csv")
    analyze.add_argument("--sample-sigma", action="store_true",
                         help="use sample instead of population standard deviation")

    select = sub.add_parser("select", help="select candidate repositories via the metadata API")
    select.add_argument("repos", nargs="*", metavar="OWNER/NAME",
                        help="candidate repositories")
    select.add_argument("--candidates-file", type=Path, default=None,
                        help="file with one owner/name per line")
    select.add_argument("--min-commits", type=int, default=10_000)
    select.add_argument("--min-popularity", type=int, default=11,
                        help="minimum stars-or-forks (the default excludes ten)")
    select.add_argument("--per-stratum", type=int, required=True,
                        help="sample quota per popularity stratum")
    select.add_argument("--seed", type=int, default=0)
    select.add_argument("--cache-dir", type=Path, default=None,
                        help="directory for cached metadata responses")
    select.add_argument("--api-base", default=None, help="metadata API base URL")
    select.add_argument("--workers", type=int, default=4)
    select.add_argument("--out", type=Path, default=None,
                        help="write the selection CSV here instead of stdout")

    sub.add_parser("version", help="print the tool version")
    return parser


def _cmd_analyze(args: argparse.Namespace) -> int:
    thresholds = HotspotThresholds(
        sigma_multiplier=args.sigma,
        monthly_rate=args.monthly_rate,
        min_line_mods=args.min_line_mods,
        population_sigma=not args.sample_sigma,
    )
    bot_config = BotConfig.from_file(args.bot_config) if args.bot_config else BotConfig()
    config = AnalysisConfig(
        repo_path=args.repo,
        output_dir=args.out,
        thresholds=thresholds,
        bot_config=bot_config,
        worker_count=args.workers,
        file_sample=args.file_sample,
        sample_seed=args.seed,
        emit_plot_data=args.emit_plot_data,
        labels_override=args.labels_override,
    )
    try:
        manifest = analyze_repo(config)
    except (RepoNotFound, GitUnavailable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    counts = manifest.stage_counts
    print(f"files: {counts['files_total']}  hotspot files: {counts['hotspot_files']}  "
          f"hotspot lines: {counts['hotspot_lines']}")
    if manifest.aborted:
        print(_style(f"partial failure: {len(manifest.aborted)} file(s) aborted", "33"),
              file=sys.stderr)
        for path, reason in sorted(manifest.aborted.items()):
            print(f"  {path}: {reason}", file=sys.stderr)
        return 2
    print(_style("done", "32") + f" -> {args.out}")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    names = list(args.repos)
    if args.candidates_file:
        names.extend(
            line.strip()
            for line in args.candidates_file.read_text("utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        )
    if not names:
        print("error: no candidate repositories given", file=sys.stderr)
        return 1

    client = MetadataClient(
        api_base=args.api_base or os.environ.get("LINECHURN_API_BASE",
                                                 "https://api.github.com"),
        auth_token=os.environ.get("GITHUB_TOKEN"),
        cache_dir=args.cache_dir,
    )
    criteria = InclusionCriteria(
        min_stars_or_forks=args.min_popularity,
        min_commits=args.min_commits,
    )

    results = client.fetch_many(names, workers=args.workers)
    eligible = []
    for name, result in zip(names, results):
        if isinstance(result, SelectorError):
            print(f"skip {name}: {result}", file=sys.stderr)
            continue
        if isinstance(result, Exception):
            print(f"skip {name}: unexpected error: {result}", file=sys.stderr)
            continue
        ok, failed = passes_inclusion(result, criteria)
        if not ok:
            print(f"skip {name}: fails {','.join(failed)}", file=sys.stderr)
            continue
        stratum = assign_stratum(result.popularity)
        if stratum is None:
            print(f"skip {name}: popularity {result.popularity} outside strata", file=sys.stderr)
            continue
        eligible.append((result, stratum))

    chosen = sample_stratified(eligible, per_stratum=args.per_stratum, seed=args.seed)

    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["owner_and_name", "stars", "forks", "total_commits",
                     "stratum_lower", "stratum_upper"])
    for meta in chosen:
        stratum = assign_stratum(meta.popularity)
        assert stratum is not None
        writer.writerow([meta.owner_and_name, meta.stars, meta.forks,
                         meta.total_commits, stratum.lower, stratum.upper])
    if args.out:
        out.close()
        print(f"selected {len(chosen)} of {len(names)} candidates -> {args.out}",
              file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("LINECHURN_LOG", "WARNING"))
    args = _build_parser().parse_args(argv)
    if args.command == "version":
        print(f"linechurn {__version__}")
        return 0
    if args.command == "analyze":
        return _cmd_analyze(args)
    if args.command == "select":
        return _cmd_select(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
