"""Text normalization, stopword elimination and token counting.

Everything here is a pure function over plain Python values so it can be
shared by the classifier, the HTTP service and the offline harness.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Collection, Sequence

# Runs of Unicode letters/digits. Underscore is a \w char but not alphanumeric.
_TOKEN_RE = re.compile(r"[^\W_]+")


def normalize(raw_text: str) -> list[str]:
    """Lowercase ``raw_text`` and split it on every non-alphanumeric character.

    >>> normalize("FrEe!!! $$$CaSh,now")
    ['free', 'cash', 'now']
    """
    return _TOKEN_RE.findall(raw_text.lower())


def _lookup(terms: Collection[str]) -> Collection[str]:
    # lists and tuples would make every membership test linear
    return frozenset(terms) if isinstance(terms, (list, tuple)) else terms


def remove_stopwords(tokens: Sequence[str], stopwords: Collection[str]) -> list[str]:
    """Drop every occurrence of a stopword, keeping the order of the rest."""
    stop = _lookup(stopwords)
    return [tok for tok in tokens if tok not in stop]


def frequency_map(tokens: Sequence[str]) -> dict[str, int]:
    """Occurrence count per distinct token, in first-seen order."""
    return dict(Counter(tokens))


def count_spam_tokens(tokens: Sequence[str], spam_lexicon: Collection[str]) -> int:
    """Number of token occurrences found in ``spam_lexicon``, with multiplicity.

    A word repeated three times counts three times.
    """
    spam = _lookup(spam_lexicon)
    return sum(1 for tok in tokens if tok in spam)


def content_tokens(raw_text: str, stopwords: Collection[str]) -> list[str]:
    return remove_stopwords(normalize(raw_text), stopwords)
