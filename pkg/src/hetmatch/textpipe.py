"""Raw text to normalized sparse term vectors.

The pipeline is tokenize -> stem -> stopword removal -> synonym expansion
-> occurrence counting. All functions are pure and safe to call
concurrently.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from . import porter
from .errors import ConfigError

_APOSTROPHES = "'’"
# Maximal runs of Unicode letters/digits or apostrophes. Underscore,
# hyphens and all other punctuation act as separators.
_TOKEN_RUN = re.compile(r"(?:[^\W_]|['’])+")

StopwordList = frozenset[str]
SynonymMap = dict[str, tuple[str, ...]]

EMPTY_STOPWORDS: StopwordList = frozenset()
EMPTY_SYNONYMS: SynonymMap = {}


@dataclass(frozen=True)
class Token:
    """One lowercased token and its 0-based position in the stream."""

    text: str
    position: int


def tokenize(text: str) -> list[Token]:
    """Split raw text into lowercase tokens.

    Tokens are maximal runs of letters, digits and apostrophes; runs
    consisting only of apostrophes carry no content and are skipped.
    Input is NFC-normalized and case-folded first.
    """
    normalized = unicodedata.normalize("NFC", text).casefold()
    tokens: list[Token] = []
    for run in _TOKEN_RUN.findall(normalized):
        if all(ch in _APOSTROPHES for ch in run):
            continue
        tokens.append(Token(run, len(tokens)))
    return tokens


def stem(token: Token | str) -> str:
    """Normalize one token to its lexeme.

    Apostrophes are stripped first; pure ASCII-letter words go through the
    Porter stemmer, anything else (digits, other scripts) passes through
    unchanged.
    """
    text = token.text if isinstance(token, Token) else token
    bare = text.translate({ord(ch): None for ch in _APOSTROPHES})
    if bare.isascii() and bare.isalpha():
        return porter.stem(bare)
    return bare


def apply_stopwords(lexemes: list[str], stops: StopwordList) -> list[str]:
    """Drop stopword lexemes, preserving order. Idempotent."""
    if not stops:
        return list(lexemes)
    return [lex for lex in lexemes if lex not in stops]


def expand_synonyms(lexemes: list[str], synonyms: SynonymMap) -> list[str]:
    """Insert mapped synonyms after each occurrence of a source lexeme."""
    if not synonyms:
        return list(lexemes)
    out: list[str] = []
    for lex in lexemes:
        out.append(lex)
        out.extend(synonyms.get(lex, ()))
    return out


def vectorize(
    text: str,
    stops: StopwordList = EMPTY_STOPWORDS,
    synonyms: SynonymMap = EMPTY_SYNONYMS,
) -> dict[str, int]:
    """Run the full pipeline and count lexeme occurrences."""
    lexemes = [stem(tok) for tok in tokenize(text)]
    lexemes = apply_stopwords(lexemes, stops)
    lexemes = expand_synonyms(lexemes, synonyms)
    return dict(Counter(lexemes))


def load_stopwords(path: str | Path) -> StopwordList:
    """Read a stopword file: UTF-8, one word per line, '#' comments.

    Entries are matched against stemmed lexemes by exact string equality,
    so lists should contain stemmed forms to be effective.
    """
    words = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.add(line.casefold())
    return frozenset(words)


def load_synonyms(path: str | Path) -> SynonymMap:
    """Read a synonym file: UTF-8 lines of the form ``source: syn1, syn2``.

    Sources and synonyms must be already-stemmed lexemes; a source mapping
    to itself is rejected.
    """
    entries: dict[str, tuple[str, ...]] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'source: syn1, syn2'")
        source, _, rest = line.partition(":")
        source = source.strip().casefold()
        targets = tuple(
            sorted({t.strip().casefold() for t in rest.split(",") if t.strip()})
        )
        if not source or not targets:
            raise ConfigError(f"{path}:{lineno}: empty source or synonym list")
        if source in targets:
            raise ConfigError(f"{path}:{lineno}: {source!r} maps to itself")
        entries[source] = targets
    return entries
