"""Tokenization, n-grams, question counting, and a capitalization NER heuristic.

Everything here is pure and deterministic; the rest of the toolkit builds on
these primitives so a single tokenization rule governs all features and BLEU.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable, Sequence, Union

from .errors import DomainError

# A word is a run of letters/digits with internal apostrophes allowed
# ("that's" stays whole); any other non-space character is its own token.
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*|\S")


@dataclass(frozen=True)
class Token:
    surface: str
    position: int


TokenLike = Union[Token, str]


def _surface(token: TokenLike) -> str:
    return token.surface if isinstance(token, Token) else str(token)


def tokenize(text: str) -> list[Token]:
    """Split ``text`` on whitespace with punctuation detached as own tokens.

    Apostrophes stay inside words.  Re-tokenizing the space-joined surfaces
    reproduces the same token sequence (fixed point), which keeps every
    downstream n-gram computation insensitive to benign reformatting.
    """
    return [Token(m.group(), i) for i, m in enumerate(_TOKEN_RE.finditer(text))]


def ngrams(tokens: Sequence[TokenLike], n: int, casefold: bool = False) -> list[tuple[str, ...]]:
    """All contiguous length-``n`` surface windows, in order."""
    if n < 1:
        raise DomainError(f"n-gram order must be >= 1, got {n}")
    surfaces = [_surface(t) for t in tokens]
    if casefold:
        surfaces = [s.casefold() for s in surfaces]
    return [tuple(surfaces[i : i + n]) for i in range(len(surfaces) - n + 1)]


def count_questions(text: str) -> int:
    """Count question marks that terminate non-empty content.

    Runs collapse: ``"really??"`` counts once.  A ``?`` with no preceding
    non-whitespace content since the last counted run is ignored.
    """
    count = 0
    content_seen = False
    for ch in text:
        if ch == "?":
            if content_seen:
                count += 1
                content_seen = False
        elif not ch.isspace():
            content_seen = True
    return count


@lru_cache(maxsize=1)
def common_words() -> frozenset[str]:
    """Bundled list of frequent English words, lowercased, one per line."""
    data = resources.files("fluidity").joinpath("data/common_words.txt").read_text("utf-8")
    return frozenset(w.strip() for w in data.splitlines() if w.strip())


def has_named_entity(
    tokens: Sequence[TokenLike],
    word_list: frozenset[str] | None = None,
) -> bool:
    """Capitalization heuristic for named entities.

    True when a capitalized alphabetic token appears past position 0, or when
    the sentence-initial token is capitalized and not a common English word.
    Deliberately crude; callers may substitute a real tagger (see
    ``features.FeatureConfig.entity_detector``).
    """
    if word_list is None:
        word_list = common_words()
    for position, token in enumerate(tokens):
        s = _surface(token)
        if not s or not (s[0].isalpha() and s[0].isupper()):
            continue
        if position > 0:
            return True
        low = s.casefold()
        if low not in word_list and low.split("'", 1)[0] not in word_list:
            return True
    return False


EntityDetector = Callable[[Sequence[Token]], bool]
