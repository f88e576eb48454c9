"""Bayesian comment-spam filtering with a small moderation service around it."""

__version__ = "0.1.0"

from .classifier import (
    CorpusStats,
    FilterConfig,
    Label,
    ScoreBreakdown,
    Verdict,
    classify,
    format_score,
    score,
    should_autolearn,
)
from .lexicon import Lexicon, LexiconKind, MultiTokenTerm, default_spamwords, default_stopwords
from .textprep import count_spam_tokens, frequency_map, normalize, remove_stopwords

__all__ = [
    "CorpusStats",
    "FilterConfig",
    "Label",
    "Lexicon",
    "LexiconKind",
    "MultiTokenTerm",
    "ScoreBreakdown",
    "Verdict",
    "classify",
    "count_spam_tokens",
    "default_spamwords",
    "default_stopwords",
    "format_score",
    "frequency_map",
    "normalize",
    "remove_stopwords",
    "score",
    "should_autolearn",
]
