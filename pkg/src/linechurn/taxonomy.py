"""Heuristic hotspot-pattern classification plus labeling-workflow statistics.

Each before/after revision pair of a hotspot line is matched against an
ordered list of rules; the first match wins.  More specific token-shape
rules (version bumps) fire before generic ones (long-line edits), and the
formatting rule runs first because normalization equality is decisive.  The
classifier is explicitly heuristic: downstream outputs carry a heuristic
flag so its labels are never mistaken for human ones.

Also implements the Chao1 richness estimator and Cohen's kappa, which
support the saturation / inter-rater workflow around manual labeling.
"""

from __future__ import annotations

import csv
import difflib
import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .churn import ADMINISTRATIVE, PROGRAMMING

DEFAULT_LONG_LINE_THRESHOLD = 120
DEFAULT_REFACTOR_WINDOW_DAYS = 14.0
_LONG_LINE_MIN_SIMILARITY = 0.3


class HistoryTooShort(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class DegenerateMarginals(ValueError):
    """Expected agreement is 1 while observed agreement is not."""


class Pattern(str, enum.Enum):
    PINNED_VERSION_BUMP = "pinned-version-bump"
    CONDITIONAL_VERSION_BUMP = "conditional-version-bump"
    RESOURCE_ID_MODIFICATION = "resource-id-modification"
    SERVICE_CONFIGURATION = "service-configuration"
    DEPENDENCY_SPECIFICATION = "dependency-specification"
    EXTERNAL_DATA_FLUCTUATIONS = "external-data-fluctuations"
    PATH_UPDATE = "path-update"
    DISTRO_BUMP = "distro-bump"
    DEBUG_CONFIGURATION = "debug-configuration"
    FUNCTION_CALL_CHANGE = "function-call-change"
    FORMATTING_PING_PONG = "formatting-ping-pong"
    LONG_LINE_CHANGE = "long-line-change"
    LICENSE_MODIFICATION = "license-modification"
    METADATA_CHANGE = "metadata-change"
    STEPWISE_REFACTORING = "stepwise-refactoring"
    NORMAL_SOFTWARE_EVOLUTION = "normal-software-evolution"
    UNCLASSIFIED = "unclassified"


class Category(str, enum.Enum):
    CONFIGURATION_MANAGEMENT = "configuration-management"
    DEVELOPMENT_ENVIRONMENT = "development-environment"
    CODE_QUALITY_AND_STYLE = "code-quality-and-style"
    ADMINISTRATIVE = "administrative"
    NONE = "none"


PATTERN_CATEGORY: dict[Pattern, Category] = {
    Pattern.PINNED_VERSION_BUMP: Category.CONFIGURATION_MANAGEMENT,
    Pattern.CONDITIONAL_VERSION_BUMP: Category.CONFIGURATION_MANAGEMENT,
    Pattern.RESOURCE_ID_MODIFICATION: Category.CONFIGURATION_MANAGEMENT,
    Pattern.SERVICE_CONFIGURATION: Category.CONFIGURATION_MANAGEMENT,
    Pattern.DEPENDENCY_SPECIFICATION: Category.CONFIGURATION_MANAGEMENT,
    Pattern.EXTERNAL_DATA_FLUCTUATIONS: Category.CONFIGURATION_MANAGEMENT,
    Pattern.PATH_UPDATE: Category.DEVELOPMENT_ENVIRONMENT,
    Pattern.DISTRO_BUMP: Category.DEVELOPMENT_ENVIRONMENT,
    Pattern.DEBUG_CONFIGURATION: Category.DEVELOPMENT_ENVIRONMENT,
    Pattern.FUNCTION_CALL_CHANGE: Category.CODE_QUALITY_AND_STYLE,
    Pattern.FORMATTING_PING_PONG: Category.CODE_QUALITY_AND_STYLE,
    Pattern.LONG_LINE_CHANGE: Category.CODE_QUALITY_AND_STYLE,
    Pattern.LICENSE_MODIFICATION: Category.ADMINISTRATIVE,
    Pattern.METADATA_CHANGE: Category.ADMINISTRATIVE,
    Pattern.STEPWISE_REFACTORING: Category.ADMINISTRATIVE,
    Pattern.NORMAL_SOFTWARE_EVOLUTION: Category.NONE,
    Pattern.UNCLASSIFIED: Category.NONE,
}

# Tie-break order for history aggregation: rule order, then the fallbacks.
PRECEDENCE: list[Pattern] = [
    Pattern.FORMATTING_PING_PONG,
    Pattern.PINNED_VERSION_BUMP,
    Pattern.CONDITIONAL_VERSION_BUMP,
    Pattern.DISTRO_BUMP,
    Pattern.RESOURCE_ID_MODIFICATION,
    Pattern.SERVICE_CONFIGURATION,
    Pattern.DEPENDENCY_SPECIFICATION,
    Pattern.PATH_UPDATE,
    Pattern.DEBUG_CONFIGURATION,
    Pattern.LICENSE_MODIFICATION,
    Pattern.METADATA_CHANGE,
    Pattern.FUNCTION_CALL_CHANGE,
    Pattern.LONG_LINE_CHANGE,
    Pattern.EXTERNAL_DATA_FLUCTUATIONS,
    Pattern.STEPWISE_REFACTORING,
    Pattern.NORMAL_SOFTWARE_EVOLUTION,
    Pattern.UNCLASSIFIED,
]


@dataclass(frozen=True)
class RevisionPair:
    before: bytes
    after: bytes
    ts_before: int = 0
    ts_after: int = 0
    file_category: str = PROGRAMMING
    path: str = ""


@dataclass
class PatternLabel:
    label: Pattern
    category: Category
    confidence: float = 1.0
    heuristic: bool = True
    returned_to_previous: bool = False
    diagnostics: str = ""


def _mklabel(pattern: Pattern, confidence: float = 1.0, **kw) -> PatternLabel:
    return PatternLabel(pattern, PATTERN_CATEGORY[pattern], confidence, **kw)


# --- text machinery -------------------------------------------------------

_WS_RUN = re.compile(r"[ \t\f\v]+")


def normalize_style(text: str) -> str:
    """Collapse blank runs, strip ends, casefold: the formatting equivalence."""
    return _WS_RUN.sub(" ", text).strip().casefold()


def _to_text(raw: bytes | str) -> str:
    return raw.decode("utf-8", "replace") if isinstance(raw, (bytes, bytearray)) else raw


def _word_diff(before: str, after: str) -> tuple[list[str], list[str]]:
    """Whitespace-word level diff: (removed words, added words)."""
    b, a = before.split(), after.split()
    removed: list[str] = []
    added: list[str] = []
    matcher = difflib.SequenceMatcher(a=b, b=a, autojunk=False)
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag in ("replace", "delete"):
            removed.extend(b[i1:i2])
        if tag in ("replace", "insert"):
            added.extend(a[j1:j2])
    return removed, added


_VERSION_TOKEN = re.compile(r"\d+(?:\.\d+)+")
_RANGE_OPS_2 = {">=", "<=", "~=", "!="}
_RANGE_OPS_1 = {">", "<", "^", "~"}


def _version_token_edit(before: str, after: str):
    """When the lines match outside dotted-numeric tokens, return the changed
    token positions as (index, old, new) plus the shared text parts."""
    parts_b = _VERSION_TOKEN.split(before)
    parts_a = _VERSION_TOKEN.split(after)
    if parts_b != parts_a:
        return None
    toks_b = _VERSION_TOKEN.findall(before)
    toks_a = _VERSION_TOKEN.findall(after)
    changed = [(i, tb, ta) for i, (tb, ta) in enumerate(zip(toks_b, toks_a)) if tb != ta]
    return changed, parts_b


def _range_op_adjacent(parts: list[str], index: int) -> bool:
    prefix = parts[index].rstrip()
    return prefix[-2:] in _RANGE_OPS_2 or (prefix[-1:] in _RANGE_OPS_1)


def _version_tuple(token: str) -> tuple[int, ...]:
    return tuple(int(p) for p in token.split("."))


def _version_increased(old: str, new: str) -> bool:
    a, b = _version_tuple(old), _version_tuple(new)
    width = max(len(a), len(b))
    return a + (0,) * (width - len(a)) < b + (0,) * (width - len(b))


_DISTRO_RE = re.compile(
    r"(?i)\b(ubuntu|debian|centos|rhel|redhat|rocky|alma(?:linux)?|fedora|alpine|"
    r"opensuse|suse|sles|archlinux|busybox|jessie|wheezy|stretch|buster|bullseye|"
    r"bookworm|trixie|precise|trusty|xenial|bionic|focal|jammy|noble)"
    r"[-_]?([0-9][0-9a-z.]*)?"
)

_RESOURCE_SHAPES = [
    re.compile(r"\bami-[0-9a-f]{8,17}\b"),
    re.compile(r"\bv?20\d{6}\b"),  # date-stamped image tags like v20141208
    re.compile(r"\bsha(?:1|256|512)?:[0-9a-fA-F]{6,}\b"),
    re.compile(r"\b[0-9a-f]{12,64}\b"),
]

_KEY_VALUE_RE = re.compile(
    r"""\s*(?:[-#*]\s*)?(?:"(?P<dq>[^"]+)"|'(?P<sq>[^']+)'|(?P<bare>[A-Za-z0-9_.\-$(){}]+))\s*[:=]\s*(?P<value>.*)$"""
)

_SERVICE_VOCAB = {
    "url", "uri", "host", "hostname", "ip", "port", "endpoint", "token",
    "secret", "password", "passwd", "addr", "address", "proxy", "dsn",
    "apikey", "ssh",
}

_MANIFEST_BASENAMES = {
    "package.json", "package-lock.json", "yarn.lock", "pnpm-lock.yaml",
    "pom.xml", "build.gradle", "build.gradle.kts", "settings.gradle",
    "cargo.toml", "cargo.lock", "go.mod", "go.sum", "requirements.txt",
    "pipfile", "pipfile.lock", "pyproject.toml", "setup.py", "setup.cfg",
    "gemfile", "gemfile.lock", "composer.json", "composer.lock",
    "makefile", "gnumakefile", "kbuild", "cmakelists.txt", "meson.build",
    "build", "build.bazel", "workspace", "conanfile.txt", "conanfile.py",
    "mix.exs", "project.clj", "stack.yaml", "dune-project",
}
_MANIFEST_EXT = {".mk", ".gradle", ".cmake", ".csproj", ".vcxproj", ".sln",
                 ".gemspec", ".podspec", ".cabal", ".bazel", ".bzl"}

_IMPORT_RE = re.compile(
    r"^\s*(?:import\b|from\s+\S+\s+import\b|#\s*include\b|require\b|use\b|using\b|include\b|load\b)"
)

_URL_RE = re.compile(r"(?:[a-z][a-z0-9+.-]*://|www\.)\S+", re.IGNORECASE)

_SHORT_FLAG_RE = re.compile(r"^-{1,2}[A-Za-z]{1,2}$")
_DEBUG_WORDS = re.compile(r"(?i)\b(debug|verbose|trace|loglevel|log[-_]level|quiet|silent)\b")

_LICENSE_VOCAB = re.compile(r"(?i)(copyright|licen[cs]e|all rights reserved|spdx|\(c\)|©)")
_YEAR_RE = re.compile(r"\b(?:19|20)\d{2}\b")
_NAME_TOKEN_RE = re.compile(r"^[A-Z][A-Za-z.&,'-]*$")

_METADATA_SHAPES = [
    re.compile(r"\b\d{4}-\d{2}-\d{2}(?:[T ]\d{2}:\d{2}(?::\d{2})?)?"),  # ISO dates
    re.compile(r"\b\d{2}:\d{2}:\d{2}\b"),
    re.compile(r"\b[0-9a-fA-F]{32,64}\b"),  # md5/sha digests
    re.compile(r"\b1\d{9}\b"),  # unix epoch seconds (2001--2033)
    re.compile(r"(?i)\bbuild[-_]?(?:id[-_:= ]?)?\d{2,}\b"),
    re.compile(r"\b[A-Za-z0-9+/]{40,}={0,2}\b"),  # base64 signature blobs
]

_CALLEE_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*\(")


_DIGESTISH_RE = re.compile(r"sha\d+[-:]|^[A-Za-z0-9+/]{40,}={0,2}$")


def _is_pathlike(token: str) -> bool:
    bare = token.strip("'\"`;,")
    if _DIGESTISH_RE.search(bare):
        return False  # base64 digests contain '/' but are not paths
    if _URL_RE.search(bare):
        return True
    return "/" in bare or bare.startswith("./") or bare.startswith("..")


def _callees(text: str) -> Counter:
    return Counter(_CALLEE_RE.findall(text))


def _call_arities(text: str) -> dict[str, list[int]]:
    """Top-level comma counts of each call's argument list (best effort)."""
    arities: dict[str, list[int]] = {}
    for m in _CALLEE_RE.finditer(text):
        depth = 0
        commas = 0
        saw_arg = False
        for ch in text[m.end():]:
            if ch in "([{":
                depth += 1
            elif ch in ")]}":
                if depth == 0:
                    break
                depth -= 1
            elif ch == "," and depth == 0:
                commas += 1
            elif not ch.isspace() and depth == 0:
                saw_arg = True
        arities.setdefault(m.group(1), []).append(commas + 1 if saw_arg or commas else 0)
    return arities


def _key_value(text: str):
    m = _KEY_VALUE_RE.match(text)
    if m is None:
        return None
    key = m.group("dq") or m.group("sq") or m.group("bare")
    return key, m.group("value").strip()


def _key_words(key: str) -> set[str]:
    return {w for w in re.split(r"[^a-z0-9]+", key.lower()) if w}


def _is_manifest_path(path: str) -> bool:
    basename = path.replace("\\", "/").rsplit("/", 1)[-1].lower()
    if basename in _MANIFEST_BASENAMES:
        return True
    if re.match(r"requirements[-_.].*\.txt$", basename):
        return True
    return "." in basename and "." + basename.rsplit(".", 1)[-1] in _MANIFEST_EXT


_DATA_VALUE_RE = re.compile(r"""^(?:"[^"]*"|'[^']*'|-?\d[\d_.eE+-]*|true|false|null|none|\[.*\]|\{.*\})[,;]?$""",
                            re.IGNORECASE)


# --- the ordered rules -----------------------------------------------------

def _rule_formatting_ping_pong(ctx) -> bool:
    return normalize_style(ctx.before) == normalize_style(ctx.after)


def _rule_pinned_version_bump(ctx) -> bool:
    edit = _version_token_edit(ctx.before, ctx.after)
    if not edit:
        return False
    changed, parts = edit
    if len(changed) != 1:
        return False
    index, old, new = changed[0]
    if _range_op_adjacent(parts, index):
        return False
    return _version_increased(old, new)


def _rule_conditional_version_bump(ctx) -> bool:
    edit = _version_token_edit(ctx.before, ctx.after)
    if not edit:
        return False
    changed, parts = edit
    return any(_range_op_adjacent(parts, index) for index, _, _ in changed)


def _distro_hits(text: str) -> set[tuple[str, str]]:
    return {(m.group(1).lower(), (m.group(2) or "").lower()) for m in _DISTRO_RE.finditer(text)}


def _rule_distro_bump(ctx) -> bool:
    hits_b, hits_a = _distro_hits(ctx.before), _distro_hits(ctx.after)
    return (hits_b or hits_a) and hits_b != hits_a


def _rule_resource_id(ctx) -> bool:
    for shape in _RESOURCE_SHAPES:
        ids_b = set(shape.findall(ctx.changed_before_text))
        ids_a = set(shape.findall(ctx.changed_after_text))
        if (ids_b or ids_a) and ids_b != ids_a:
            return True
    return False


def _rule_service_configuration(ctx) -> bool:
    kv_b, kv_a = _key_value(ctx.before), _key_value(ctx.after)
    if not kv_b or not kv_a:
        return False
    key_b, val_b = kv_b
    key_a, val_a = kv_a
    if key_b != key_a or val_b == val_a:
        return False
    return bool(_key_words(key_b) & _SERVICE_VOCAB)


def _rule_dependency_specification(ctx) -> bool:
    is_import = _IMPORT_RE.match(ctx.before) and _IMPORT_RE.match(ctx.after)
    if not (_is_manifest_path(ctx.path) or is_import):
        return False
    # Copyright headers inside manifests belong to the license rule.
    if _LICENSE_VOCAB.search(ctx.before) or _LICENSE_VOCAB.search(ctx.after):
        return False
    changed = ctx.removed + ctx.added
    if not changed:
        return False
    # Path-shaped changes defer to the path-update rule.
    return not all(_is_pathlike(tok) for tok in changed)


def _rule_path_update(ctx) -> bool:
    changed = ctx.removed + ctx.added
    return any(_is_pathlike(tok) for tok in changed)


def _rule_debug_configuration(ctx) -> bool:
    changed = ctx.removed + ctx.added
    if any(_SHORT_FLAG_RE.match(tok) for tok in changed):
        return True
    return bool(_DEBUG_WORDS.search(ctx.changed_text))


def _rule_license_modification(ctx) -> bool:
    if not (_LICENSE_VOCAB.search(ctx.before) or _LICENSE_VOCAB.search(ctx.after)):
        return False
    if _YEAR_RE.search(ctx.changed_text):
        return True
    changed = ctx.removed + ctx.added
    return bool(changed) and all(_NAME_TOKEN_RE.match(tok.strip(",.;")) for tok in changed)


def _rule_metadata_change(ctx) -> bool:
    return any(shape.search(ctx.changed_text) for shape in _METADATA_SHAPES)


def _rule_function_call_change(ctx) -> bool:
    calls_b, calls_a = _callees(ctx.before), _callees(ctx.after)
    if not calls_b and not calls_a:
        return False
    if calls_b != calls_a:
        return True
    arities_b, arities_a = _call_arities(ctx.before), _call_arities(ctx.after)
    return any(sorted(arities_b.get(name, [])) != sorted(arities_a.get(name, []))
               for name in calls_b)


def _rule_long_line_change(ctx) -> bool:
    length = max(len(ctx.before.rstrip()), len(ctx.after.rstrip()))
    if length <= ctx.long_line_threshold:
        return False
    similarity = difflib.SequenceMatcher(None, ctx.before, ctx.after, autojunk=False).ratio()
    return similarity >= _LONG_LINE_MIN_SIMILARITY


def _rule_external_data(ctx) -> bool:
    if ctx.file_category != ADMINISTRATIVE:
        return False
    kv_b, kv_a = _key_value(ctx.before), _key_value(ctx.after)
    if not kv_b or not kv_a:
        return False
    key_b, val_b = kv_b
    key_a, val_a = kv_a
    if key_b != key_a or val_b == val_a:
        return False
    return bool(_DATA_VALUE_RE.match(val_b)) and bool(_DATA_VALUE_RE.match(val_a))


_RULES: list[tuple[Pattern, object]] = [
    (Pattern.FORMATTING_PING_PONG, _rule_formatting_ping_pong),
    (Pattern.PINNED_VERSION_BUMP, _rule_pinned_version_bump),
    (Pattern.CONDITIONAL_VERSION_BUMP, _rule_conditional_version_bump),
    (Pattern.DISTRO_BUMP, _rule_distro_bump),
    (Pattern.RESOURCE_ID_MODIFICATION, _rule_resource_id),
    (Pattern.SERVICE_CONFIGURATION, _rule_service_configuration),
    (Pattern.DEPENDENCY_SPECIFICATION, _rule_dependency_specification),
    (Pattern.PATH_UPDATE, _rule_path_update),
    (Pattern.DEBUG_CONFIGURATION, _rule_debug_configuration),
    (Pattern.LICENSE_MODIFICATION, _rule_license_modification),
    (Pattern.METADATA_CHANGE, _rule_metadata_change),
    (Pattern.FUNCTION_CALL_CHANGE, _rule_function_call_change),
    (Pattern.LONG_LINE_CHANGE, _rule_long_line_change),
    (Pattern.EXTERNAL_DATA_FLUCTUATIONS, _rule_external_data),
]


class _PairContext:
    """Pre-computed views of one revision pair shared by all rules."""

    def __init__(self, pair: RevisionPair, long_line_threshold: int):
        self.before = _to_text(pair.before)
        self.after = _to_text(pair.after)
        self.file_category = pair.file_category
        self.path = pair.path
        self.long_line_threshold = long_line_threshold
        self.removed, self.added = _word_diff(self.before, self.after)
        self.changed_before_text = " ".join(self.removed)
        self.changed_after_text = " ".join(self.added)
        self.changed_text = " ".join(self.removed + self.added)


def classify_pair(pair: RevisionPair,
                  long_line_threshold: int = DEFAULT_LONG_LINE_THRESHOLD) -> PatternLabel:
    """Label one before/after revision pair.

    The first matching rule in precedence order wins; otherwise substantive
    code edits are normal software evolution and anything else is
    unclassified.  Identical before/after is a caller error.
    """
    if pair.before == pair.after:
        raise ValueError("classify_pair requires before != after")
    ctx = _PairContext(pair, long_line_threshold)
    winner: Pattern | None = None
    diagnostics = ""
    for pattern, rule in _RULES:
        if rule(ctx):
            winner = pattern
            break
    if winner is None:
        fallback = (Pattern.NORMAL_SOFTWARE_EVOLUTION
                    if pair.file_category == PROGRAMMING else Pattern.UNCLASSIFIED)
        return _mklabel(fallback)
    if winner is Pattern.METADATA_CHANGE and _rule_external_data(ctx):
        diagnostics = f"also-matches:{Pattern.EXTERNAL_DATA_FLUCTUATIONS.value}"
    return _mklabel(winner, diagnostics=diagnostics)


def classify_history(line, file_category: str, path: str,
                     long_line_threshold: int = DEFAULT_LONG_LINE_THRESHOLD,
                     refactor_window_days: float = DEFAULT_REFACTOR_WINDOW_DAYS) -> PatternLabel:
    """Aggregate per-pair votes of one line's history into a single label.

    Majority label wins with ties broken by rule precedence; confidence is
    the winning vote share.  When a programming-file line was modified at
    least twice in quick succession and the votes say plain evolution, the
    label is overridden to stepwise refactoring.
    """
    history = line.history
    if len(history) < 2:
        raise HistoryTooShort(f"history of length {len(history)} has no revision pairs")

    votes: Counter = Counter()
    total = 0
    for prev, curr in zip(history, history[1:]):
        if prev.content == curr.content:
            continue  # no byte-level edit to classify
        pair = RevisionPair(prev.content, curr.content, prev.timestamp,
                            curr.timestamp, file_category, path)
        votes[classify_pair(pair, long_line_threshold).label] += 1
        total += 1

    returned = _returned_to_previous([rev.content for rev in history])
    if total == 0:
        return _mklabel(Pattern.UNCLASSIFIED, confidence=0.0, returned_to_previous=returned)

    order = {p: i for i, p in enumerate(PRECEDENCE)}
    winner = min(votes.items(), key=lambda kv: (-kv[1], order[kv[0]]))[0]
    confidence = votes[winner] / total

    if (winner is Pattern.NORMAL_SOFTWARE_EVOLUTION
            and file_category == PROGRAMMING
            and _has_close_modifications(history, refactor_window_days)):
        return _mklabel(Pattern.STEPWISE_REFACTORING, confidence=confidence,
                        returned_to_previous=returned)
    return _mklabel(winner, confidence=confidence, returned_to_previous=returned)


def _has_close_modifications(history, window_days: float) -> bool:
    """True when two consecutive modification timestamps fall in the window."""
    mod_ts = [rev.timestamp for rev in history[1:]]
    window = window_days * 86400
    return any(b - a <= window for a, b in zip(mod_ts, mod_ts[1:]))


def _returned_to_previous(contents: list[bytes]) -> bool:
    for j in range(2, len(contents)):
        for i in range(j - 1):
            if contents[i] == contents[j] and any(
                contents[k] != contents[j] for k in range(i + 1, j)
            ):
                return True
    return False


# --- labeling-workflow statistics -----------------------------------------

@dataclass(frozen=True)
class Chao1Input:
    s_obs: int
    f1: int
    f2: int

    def __post_init__(self) -> None:
        if min(self.s_obs, self.f1, self.f2) < 0:
            raise ValueError("counts must be non-negative")
        if self.f1 + self.f2 > self.s_obs:
            raise ValueError("singletons plus doubletons cannot exceed observed richness")


def chao1(data: Chao1Input) -> float:
    """Chao1 lower-bound richness estimate.

    Classic form when doubletons exist; the bias-corrected form
    ``S + f1(f1-1) / (2(f2+1))`` otherwise.
    """
    if data.f2 > 0:
        return data.s_obs + data.f1 ** 2 / (2 * data.f2)
    return data.s_obs + data.f1 * (data.f1 - 1) / (2 * (data.f2 + 1))


def chao1_curve(label_sequence: Sequence) -> list[tuple[int, int, float]]:
    """Per-prefix (k, observed richness, Chao1 estimate) over a label stream."""
    if not label_sequence:
        raise ValueError("label sequence must be non-empty")
    freq: Counter = Counter()
    out: list[tuple[int, int, float]] = []
    for k, label in enumerate(label_sequence, start=1):
        freq[label] += 1
        s_obs = len(freq)
        f1 = sum(1 for c in freq.values() if c == 1)
        f2 = sum(1 for c in freq.values() if c == 2)
        out.append((k, s_obs, chao1(Chao1Input(s_obs, f1, f2))))
    return out


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    observed_agreement: float
    expected_agreement: float


def cohens_kappa(labels_a: Sequence, labels_b: Sequence) -> KappaResult:
    """Chance-corrected agreement between two equal-length label lists."""
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    if not labels_a:
        raise LengthMismatch("label lists must be non-empty")
    n = len(labels_a)
    p_o = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    marg_a, marg_b = Counter(labels_a), Counter(labels_b)
    p_e = sum(marg_a[label] * marg_b.get(label, 0) for label in marg_a) / (n * n)
    if p_e >= 1.0:
        if p_o == 1.0:
            return KappaResult(1.0, p_o, p_e)
        raise DegenerateMarginals("expected agreement is 1 but raters disagree")
    return KappaResult((p_o - p_e) / (1 - p_e), p_o, p_e)


# --- label file interchange -------------------------------------------------

def load_label_overrides(path: str | Path) -> dict[tuple[str, int], Pattern]:
    """Read a label CSV (path, line_number, label) into an override map."""
    overrides: dict[tuple[str, int], Pattern] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "line_number", "label"} <= set(reader.fieldnames):
            raise ValueError("override file needs columns: path, line_number, label")
        for rec in reader:
            overrides[(rec["path"], int(rec["line_number"]))] = Pattern(rec["label"])
    return overrides


def kappa_between_label_files(path_a: str | Path, path_b: str | Path) -> KappaResult:
    """Cohen's kappa over the (path, line) keys two label files share."""
    a = load_label_overrides(path_a)
    b = load_label_overrides(path_b)
    keys = sorted(a.keys() & b.keys())
    if not keys:
        raise LengthMismatch("label files share no (path, line_number) keys")
    return cohens_kappa([a[k] for k in keys], [b[k] for k in keys])
