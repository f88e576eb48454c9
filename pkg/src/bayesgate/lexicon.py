"""Admin-managed word lists: stopwords and spam words."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .textprep import normalize

DEFAULT_STOPWORDS: tuple[str, ...] = (
    "am", "is", "are", "he", "she", "it", "you", "we", "they", "i", "have",
    "has", "had", "and", "us", "do", "does", "did", "was", "were", "a", "an",
    "in", "on", "the", "to", "but", "of", "from", "them", "also", "their",
)

DEFAULT_SPAMWORDS: tuple[str, ...] = (
    "idiot", "stupid", "bad", "awful", "terrible", "disgusting", "silly",
    "freak", "fool", "rubbish", "ugly",
)


class LexiconKind(str, enum.Enum):
    STOPWORDS = "stopwords"
    SPAMWORDS = "spamwords"


class MultiTokenTerm(ValueError):
    """A lexicon term did not normalize to exactly one token."""

    def __init__(self, raw_term: str, tokens: list[str]):
        super().__init__(
            f"term {raw_term!r} normalizes to {len(tokens)} tokens {tokens!r}; expected exactly one"
        )
        self.raw_term = raw_term
        self.tokens = tokens


class LexiconFileError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def normalize_term(raw_term: str) -> str:
    tokens = normalize(raw_term)
    if len(tokens) != 1:
        raise MultiTokenTerm(raw_term, tokens)
    return tokens[0]


@dataclass(frozen=True)
class Lexicon:
    """Immutable, ordered snapshot of a term list.

    Mutators return a new snapshot; ``revision`` moves by one per real change
    and stays put for no-op edits.
    """

    kind: LexiconKind
    terms: tuple[str, ...] = ()
    revision: int = 0
    _lookup: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LexiconKind(self.kind))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "_lookup", frozenset(self.terms))
        if len(self._lookup) != len(self.terms):
            raise ValueError("lexicon terms must be distinct")
        for term in self.terms:
            if normalize(term) != [term]:
                raise ValueError(f"lexicon term {term!r} is not normalized")

    def __contains__(self, term: object) -> bool:
        return term in self._lookup

    def __iter__(self) -> Iterator[str]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def add(self, raw_term: str) -> Lexicon:
        return add_term(self, raw_term)

    def remove(self, term: str) -> Lexicon:
        return remove_term(self, term)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "terms": list(self.terms), "revision": self.revision}

    @classmethod
    def from_dict(cls, data: dict) -> Lexicon:
        return cls(LexiconKind(data["kind"]), tuple(data["terms"]), int(data["revision"]))


def default_stopwords() -> Lexicon:
    return Lexicon(LexiconKind.STOPWORDS, DEFAULT_STOPWORDS)


def default_spamwords() -> Lexicon:
    return Lexicon(LexiconKind.SPAMWORDS, DEFAULT_SPAMWORDS)


def default_lexicon(kind: LexiconKind | str) -> Lexicon:
    kind = LexiconKind(kind)
    return default_stopwords() if kind is LexiconKind.STOPWORDS else default_spamwords()


def add_term(lex: Lexicon, raw_term: str) -> Lexicon:
    """Insert the normalized form of ``raw_term``.

    Raises MultiTokenTerm when the input is empty or holds several words.
    """
    term = normalize_term(raw_term)
    if term in lex:
        return lex
    return replace(lex, terms=lex.terms + (term,), revision=lex.revision + 1)


def remove_term(lex: Lexicon, term: str) -> Lexicon:
    tokens = normalize(term)
    # Anything that is not a single token cannot be stored, so removing it is a no-op.
    if len(tokens) != 1 or tokens[0] not in lex:
        return lex
    target = tokens[0]
    return replace(lex, terms=tuple(t for t in lex.terms if t != target), revision=lex.revision + 1)


def replace_terms(lex: Lexicon, raw_terms: Iterable[str]) -> Lexicon:
    """Swap the whole term list in one revision (duplicates collapse)."""
    terms = tuple(dict.fromkeys(normalize_term(t) for t in raw_terms))
    if terms == lex.terms:
        return lex
    return replace(lex, terms=terms, revision=lex.revision + 1)


def parse_lexicon_text(text: str) -> list[str]:
    """Parse the one-term-per-line file format.

    Each line must normalize to exactly one token; the first offending line
    is reported by number (1-based).
    """
    terms = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        try:
            terms.append(normalize_term(line))
        except MultiTokenTerm as exc:
            raise LexiconFileError(line_no, str(exc)) from None
    return terms


def format_lexicon_text(lex: Lexicon) -> str:
    return "".join(f"{term}\n" for term in lex.terms)
