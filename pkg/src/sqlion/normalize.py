"""Canonicalization of raw request text into the two matchable projections.

Every incoming query is reduced to:

* ``l1`` — the alphabetic form: lowercased, all whitespace removed, inline
  ``/*...*/`` comments stripped.  Keyword patterns are matched here, so case
  mixing and comment splicing (``uNiOn/**/all``) collapse to the plain
  keyword sequence.
* ``l2`` — the symbol form: percent-decoded once, HTML-entity-decoded once,
  then every ASCII letter and all whitespace removed.  Symbol patterns and
  digit runs are matched here; comment markers survive because l2 is taken
  from the pre-strip text.

Both projections are pure functions of the input, safe to call concurrently.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass
from urllib.parse import unquote

# /*...*/ spans; an unterminated /* swallows the rest of the string, matching
# SQL comment semantics.
_COMMENT_RE = re.compile(r"/\*.*?\*/|/\*.*$", re.DOTALL)
_WHITESPACE_RE = re.compile(r"\s+")
_ALPHA_RE = re.compile(r"[a-zA-Z]")


@dataclass(frozen=True)
class RawQuery:
    """One decoded query string (everything after ``?``, or a form body).

    ``text`` may be empty and may contain arbitrary byte values decoded as
    latin-1; attack payloads routinely carry control bytes.  ``source`` is a
    free-text provenance tag (corpus name, log file, ...).
    """

    text: str
    source: str = ""


@dataclass(frozen=True)
class NormalizedQuery:
    """The two canonical projections of one raw request."""

    l1: str
    l2: str


def strip_comments(text: str) -> str:
    """Remove ``/*...*/`` spans; an unterminated ``/*`` strips to the end.

    Runs to a fixpoint: removing a span can butt a ``/`` up against a ``*``
    and form a fresh comment opener, and normalization must be idempotent.
    """
    while True:
        stripped = _COMMENT_RE.sub("", text)
        if stripped == text:
            return stripped
        text = stripped


def remove_whitespace(text: str) -> str:
    return _WHITESPACE_RE.sub("", text)


def decode_once(text: str) -> str:
    """One round of percent-decoding, then one round of entity-decoding.

    Deliberately non-recursive: bounded work on adversarial input.  Malformed
    ``%``/entity sequences pass through verbatim.  latin-1 keeps decoded bytes
    one-to-one instead of substituting replacement characters.
    """
    return html.unescape(unquote(text, encoding="latin-1"))


def normalize(raw: RawQuery | str) -> NormalizedQuery:
    """Project raw request text onto its (l1, l2) canonical forms.

    Accepts a bare string for convenience.  Never raises: any input text maps
    to a well-formed result.
    """
    text = raw.text if isinstance(raw, RawQuery) else raw
    l1 = strip_comments(remove_whitespace(text.lower()))
    l2 = remove_whitespace(_ALPHA_RE.sub("", decode_once(text)))
    return NormalizedQuery(l1=l1, l2=l2)


def is_normal_form(q: NormalizedQuery) -> bool:
    """True iff re-normalizing ``q.l1`` leaves it unchanged."""
    return normalize(q.l1).l1 == q.l1
