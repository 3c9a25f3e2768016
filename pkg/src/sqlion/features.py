"""Pattern dictionary, occurrence counting, and corpus frequency analysis.

The dictionary holds 30 alphabetic patterns (matched on the l1 projection)
and 20 symbol patterns (matched on l2).  Counting both lists over one query
yields the 50-slot count vector; the risk label appended by the labeler makes
slot 51.

Matching is greedy, longest-pattern-first, left-to-right, non-overlapping:
characters consumed by one match are dead to every other pattern.  That is
what keeps ``unionselect`` from also incrementing ``select`` and ``or``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence
from urllib.parse import quote, unquote

from .normalize import NormalizedQuery, RawQuery, decode_once, is_normal_form, remove_whitespace

# The digit-class pattern: one occurrence per maximal run of ASCII digits.
DIGIT_CLASS = r"\d+"

ALPHA_PATTERN_COUNT = 30
SYMBOL_PATTERN_COUNT = 20
FEATURE_COUNT = ALPHA_PATTERN_COUNT + SYMBOL_PATTERN_COUNT

MODE_WORDS = "alphabetic-words"
MODE_SYMBOLS = "single-symbols"

# Alphabetic patterns that must be present, with their fixed base tiers.
# Tier 4 is exactly {unionselect}: nothing else may sit there.
REQUIRED_TIERS: Mapping[str, int] = {
    "unionselect": 4,
    "all": 3,
    "chr": 3,
    "and": 3,
    "=": 3,
    "where": 3,
    "or": 3,
    "select": 2,
    "as": 2,
    "from": 2,
    "like": 2,
}

# Symbol patterns that must be present, with their fixed modifier groups.
REQUIRED_GROUPS: Mapping[str, str] = {
    "\\x": "A",
    "0x": "A",
    "'": "A",
    '"': "A",
    ".": "B",
    "<": "B",
    ">": "B",
    "(": "B",
    ")": "B",
    DIGIT_CLASS: "B",
    "/*": "C",
    "*/": "C",
    "%": "C",
    "#": "C",
    "--": "C",
    ";": "C",
}

# Hex-encoding markers and the digit-class token are the only symbol entries
# allowed to carry letters in their spelling.
_LETTER_BEARING_SYMBOLS = frozenset({"\\x", "0x", DIGIT_CLASS})

_DIGIT_RUN_RE = re.compile(r"[0-9]+")
_WORD_RUN_RE = re.compile(r"[a-z]+")

VALID_TIERS = (2, 3, 4)
VALID_GROUPS = ("A", "B", "C")


class DictionaryError(ValueError):
    """A token dictionary violates its shape or content rules."""


class InsufficientCorpusError(DictionaryError):
    """Frequency reports cannot fill a full 30+20 dictionary."""


def canonical_alpha(pattern: str) -> str:
    """Match form of an alphabetic pattern: lowercase, whitespace removed."""
    return remove_whitespace(pattern.lower())


@dataclass(frozen=True)
class TokenDictionary:
    """30 alphabetic + 20 symbol patterns with tier / modifier assignments.

    Alphabetic patterns are stored in match form (see ``canonical_alpha``);
    their position defines feature indices 0-29.  Symbol patterns define
    indices 30-49.  Instances are immutable and safe to share across threads.
    """

    alpha_patterns: tuple[str, ...]
    symbol_patterns: tuple[str, ...]
    tiers: Mapping[str, int]
    groups: Mapping[str, str]

    def validate(self) -> None:
        """Raise DictionaryError on any violated invariant."""
        if len(self.alpha_patterns) != ALPHA_PATTERN_COUNT:
            raise DictionaryError(
                f"expected {ALPHA_PATTERN_COUNT} alphabetic patterns, got {len(self.alpha_patterns)}"
            )
        if len(self.symbol_patterns) != SYMBOL_PATTERN_COUNT:
            raise DictionaryError(
                f"expected {SYMBOL_PATTERN_COUNT} symbol patterns, got {len(self.symbol_patterns)}"
            )
        if len(set(self.alpha_patterns)) != len(self.alpha_patterns):
            raise DictionaryError("duplicate alphabetic pattern")
        if len(set(self.symbol_patterns)) != len(self.symbol_patterns):
            raise DictionaryError("duplicate symbol pattern")
        for p in self.alpha_patterns:
            if not p:
                raise DictionaryError("empty alphabetic pattern")
            if p != canonical_alpha(p):
                raise DictionaryError(f"alphabetic pattern not in match form: {p!r}")
            if p not in self.tiers or self.tiers[p] not in VALID_TIERS:
                raise DictionaryError(f"alphabetic pattern without valid tier: {p!r}")
        for p in self.symbol_patterns:
            if not p:
                raise DictionaryError("empty symbol pattern")
            if p not in _LETTER_BEARING_SYMBOLS and re.search(r"[a-z]", p):
                raise DictionaryError(f"symbol pattern contains letters: {p!r}")
            if p not in self.groups or self.groups[p] not in VALID_GROUPS:
                raise DictionaryError(f"symbol pattern without valid group: {p!r}")
        for pattern, tier in REQUIRED_TIERS.items():
            if pattern not in self.tiers or self.tiers[pattern] != tier:
                raise DictionaryError(f"required pattern missing or mis-tiered: {pattern!r}")
        extra_tier4 = {p for p in self.alpha_patterns if self.tiers[p] == 4} - {"unionselect"}
        if extra_tier4:
            raise DictionaryError(f"tier 4 must contain only 'unionselect', found {extra_tier4}")
        for pattern, group in REQUIRED_GROUPS.items():
            if pattern not in self.groups or self.groups[pattern] != group:
                raise DictionaryError(f"required symbol missing or mis-grouped: {pattern!r}")

    def alpha_with_tier(self, tier: int) -> tuple[str, ...]:
        return tuple(p for p in self.alpha_patterns if self.tiers[p] == tier)

    def symbols_in_group(self, group: str) -> tuple[str, ...]:
        return tuple(p for p in self.symbol_patterns if self.groups[p] == group)


def make_dictionary(
    alpha_entries: Sequence[tuple[str, int]],
    symbol_entries: Sequence[tuple[str, str]],
) -> TokenDictionary:
    """Build and validate a dictionary from (pattern, tier/group) pairs.

    Alphabetic patterns are canonicalized, so ``("union select", 4)`` and
    ``("unionselect", 4)`` are the same entry.
    """
    alpha = tuple(canonical_alpha(p) for p, _ in alpha_entries)
    symbols = tuple(p for p, _ in symbol_entries)
    d = TokenDictionary(
        alpha_patterns=alpha,
        symbol_patterns=symbols,
        tiers={canonical_alpha(p): t for p, t in alpha_entries},
        groups={p: g for p, g in symbol_entries},
    )
    d.validate()
    return d


# ---------------------------------------------------------------------------
# Greedy matching
# ---------------------------------------------------------------------------


def greedy_matches(text: str, patterns: Sequence[str]) -> list[tuple[int, int, int]]:
    """All accepted matches as (pattern index, start, end) triples.

    Candidates are every occurrence of every pattern (maximal digit runs for
    the digit-class); they are ranked longest first, ties by pattern position
    then by start offset, and accepted greedily when their span is still
    unconsumed.
    """
    candidates: list[tuple[int, int, int, int]] = []
    for idx, pattern in enumerate(patterns):
        if pattern == DIGIT_CLASS:
            for m in _DIGIT_RUN_RE.finditer(text):
                candidates.append((m.start() - m.end(), idx, m.start(), m.end()))
        else:
            start = text.find(pattern)
            while start != -1:
                candidates.append((-len(pattern), idx, start, start + len(pattern)))
                start = text.find(pattern, start + 1)
    candidates.sort()
    consumed = bytearray(len(text))
    accepted: list[tuple[int, int, int]] = []
    for _, idx, start, end in candidates:
        if any(consumed[start:end]):
            continue
        for i in range(start, end):
            consumed[i] = 1
        accepted.append((idx, start, end))
    return accepted


def count_matches(text: str, patterns: Sequence[str]) -> list[int]:
    counts = [0] * len(patterns)
    for idx, _, _ in greedy_matches(text, patterns):
        counts[idx] += 1
    return counts


# ---------------------------------------------------------------------------
# Feature vectors
# ---------------------------------------------------------------------------

UNLABELED = 0  # sentinel in the label slot; never written to datasets


@dataclass(frozen=True)
class FeatureVector:
    """50 occurrence counts plus the risk label (51 variables in total)."""

    counts: tuple[int, ...]
    label: int = UNLABELED

    def __post_init__(self) -> None:
        if len(self.counts) != FEATURE_COUNT:
            raise ValueError(f"expected {FEATURE_COUNT} counts, got {len(self.counts)}")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count")
        if self.label not in (0, 1, 2, 3, 4):
            raise ValueError(f"label out of range: {self.label}")

    def with_label(self, label: int) -> "FeatureVector":
        return FeatureVector(counts=self.counts, label=label)

    def alpha_counts(self) -> tuple[int, ...]:
        return self.counts[:ALPHA_PATTERN_COUNT]

    def symbol_counts(self) -> tuple[int, ...]:
        return self.counts[ALPHA_PATTERN_COUNT:]


def count_features(q: NormalizedQuery, dictionary: TokenDictionary) -> FeatureVector:
    """Count dictionary occurrences in a normalized query (label left unset).

    ``q`` must be in normal form; alphabetic patterns are counted on l1,
    symbol patterns on l2, both with greedy non-overlapping matching.
    """
    if not is_normal_form(q):
        raise ValueError("query is not in normal form; call normalize() first")
    alpha = count_matches(q.l1, dictionary.alpha_patterns)
    symbols = count_matches(q.l2, dictionary.symbol_patterns)
    return FeatureVector(counts=tuple(alpha + symbols), label=UNLABELED)


# ---------------------------------------------------------------------------
# Frequency analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyReport:
    """Token occurrence ranking, sorted by count descending then token."""

    entries: tuple[tuple[str, int], ...]
    mode: str

    def tokens(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.entries)


def frequency_analysis(corpus: Iterable[RawQuery | str], mode: str) -> FrequencyReport:
    """Rank token occurrences across a corpus.

    ``alphabetic-words`` counts maximal a-z runs of the lowercased text
    (before any whitespace removal); ``single-symbols`` counts each
    non-alphanumeric, non-whitespace character of the decoded text.
    """
    counts: dict[str, int] = {}
    if mode == MODE_WORDS:
        for raw in corpus:
            text = raw.text if isinstance(raw, RawQuery) else raw
            for m in _WORD_RUN_RE.finditer(text.lower()):
                token = m.group()
                counts[token] = counts.get(token, 0) + 1
    elif mode == MODE_SYMBOLS:
        for raw in corpus:
            text = raw.text if isinstance(raw, RawQuery) else raw
            for ch in decode_once(text):
                if not ch.isalnum() and not ch.isspace():
                    counts[ch] = counts.get(ch, 0) + 1
    else:
        raise ValueError(f"unknown frequency mode: {mode!r}")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return FrequencyReport(entries=tuple(ranked), mode=mode)


def build_dictionary(
    word_report: FrequencyReport, symbol_report: FrequencyReport
) -> TokenDictionary:
    """Derive a dictionary from frequency reports.

    Required patterns are always included (pinned to the head, in their
    canonical order); remaining slots are filled by report rank.  Entries not
    carrying a required assignment default to tier 2 / group C.
    """
    if word_report.mode != MODE_WORDS or symbol_report.mode != MODE_SYMBOLS:
        raise ValueError("build_dictionary needs one words report and one symbols report")
    if not word_report.entries or not symbol_report.entries:
        raise InsufficientCorpusError("empty frequency report")

    alpha_entries: list[tuple[str, int]] = [(p, t) for p, t in REQUIRED_TIERS.items()]
    seen = {p for p, _ in alpha_entries}
    for token, _ in word_report.entries:
        if len(alpha_entries) == ALPHA_PATTERN_COUNT:
            break
        token = canonical_alpha(token)
        if token and token not in seen:
            alpha_entries.append((token, 2))
            seen.add(token)
    if len(alpha_entries) < ALPHA_PATTERN_COUNT:
        raise InsufficientCorpusError(
            f"only {len(alpha_entries)} alphabetic candidates after forced inclusion"
        )

    symbol_entries: list[tuple[str, str]] = [(p, g) for p, g in REQUIRED_GROUPS.items()]
    seen = {p for p, _ in symbol_entries}
    for token, _ in symbol_report.entries:
        if len(symbol_entries) == SYMBOL_PATTERN_COUNT:
            break
        if token and token not in seen and not re.search(r"[a-z]", token):
            symbol_entries.append((token, "C"))
            seen.add(token)
    if len(symbol_entries) < SYMBOL_PATTERN_COUNT:
        raise InsufficientCorpusError(
            f"only {len(symbol_entries)} symbol candidates after forced inclusion"
        )

    return make_dictionary(alpha_entries, symbol_entries)


# ---------------------------------------------------------------------------
# Dictionary file format: one `<kind>,<pattern>,<tier-or-group>` per line,
# kind A (alphabetic) or S (symbol), pattern percent-encoded, digit-class
# spelled literally as \d+.
# ---------------------------------------------------------------------------

_PATTERN_SAFE = "\\+"  # keep backslash and plus literal so \d+ reads as-is


def dumps_dictionary(d: TokenDictionary) -> str:
    lines = [f"A,{quote(p, safe=_PATTERN_SAFE)},{d.tiers[p]}" for p in d.alpha_patterns]
    lines += [f"S,{quote(p, safe=_PATTERN_SAFE)},{d.groups[p]}" for p in d.symbol_patterns]
    return "\n".join(lines) + "\n"


def loads_dictionary(text: str) -> TokenDictionary:
    alpha_entries: list[tuple[str, int]] = []
    symbol_entries: list[tuple[str, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DictionaryError(f"line {lineno}: expected 3 comma-separated fields")
        kind, encoded, assignment = parts
        pattern = unquote(encoded, encoding="latin-1")
        if kind == "A":
            if assignment not in {"2", "3", "4"}:
                raise DictionaryError(f"line {lineno}: bad tier {assignment!r}")
            alpha_entries.append((pattern, int(assignment)))
        elif kind == "S":
            if assignment not in VALID_GROUPS:
                raise DictionaryError(f"line {lineno}: bad group {assignment!r}")
            symbol_entries.append((pattern, assignment))
        else:
            raise DictionaryError(f"line {lineno}: unknown kind {kind!r}")
    return make_dictionary(alpha_entries, symbol_entries)


def write_dictionary(d: TokenDictionary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(dumps_dictionary(d))


def read_dictionary(path) -> TokenDictionary:
    with open(path, "r", encoding="utf-8") as f:
        return loads_dictionary(f.read())


# ---------------------------------------------------------------------------
# Shipped default dictionary
# ---------------------------------------------------------------------------

_DEFAULT_ALPHA: tuple[tuple[str, int], ...] = (
    ("union select", 4),
    ("all", 3),
    ("chr", 3),
    ("and", 3),
    ("=", 3),
    ("where", 3),
    ("or", 3),
    ("select", 2),
    ("as", 2),
    ("from", 2),
    ("like", 2),
    ("insert", 2),
    ("update", 2),
    ("delete", 2),
    ("drop", 2),
    ("table", 2),
    ("order by", 2),
    ("group by", 2),
    ("having", 2),
    ("concat", 2),
    ("sleep", 2),
    ("benchmark", 2),
    ("cast", 2),
    ("null", 2),
    ("exec", 2),
    ("declare", 2),
    ("information", 2),
    ("char", 2),
    ("waitfor", 2),
    ("version", 2),
)

_DEFAULT_SYMBOLS: tuple[tuple[str, str], ...] = (
    ("/*", "C"),
    ("*/", "C"),
    ("--", "C"),
    ("#", "C"),
    ("%", "C"),
    (";", "C"),
    ("'", "A"),
    ('"', "A"),
    ("<", "B"),
    (">", "B"),
    ("(", "B"),
    (")", "B"),
    ("=", "C"),
    (".", "B"),
    (",", "C"),
    ("+", "C"),
    ("*", "C"),
    ("\\x", "A"),
    ("0x", "A"),
    (DIGIT_CLASS, "B"),
)


@lru_cache(maxsize=1)
def default_dictionary() -> TokenDictionary:
    """The shipped dictionary (also available as ``data/default_dictionary.txt``)."""
    text = resources.files("sqlion").joinpath("data/default_dictionary.txt").read_text("utf-8")
    return loads_dictionary(text)


def builtin_default_entries() -> tuple[tuple[tuple[str, int], ...], tuple[tuple[str, str], ...]]:
    """Source entries the shipped dictionary file is generated from."""
    return _DEFAULT_ALPHA, _DEFAULT_SYMBOLS
