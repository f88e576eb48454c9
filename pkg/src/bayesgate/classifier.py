"""Bayesian comment-spam score and the threshold / auto-learn decisions.

The score for a comment is

    P(spam | words) = P(words | spam) * P(spam) / P(words)

with

    P(words | spam) = spam tokens in the comment / content tokens in the comment
    P(spam)         = spam-labeled comments / all comments
    P(words)        = comments that contained a spam token / all comments

All arithmetic is exact (``fractions.Fraction``) and only rounded when a score
is rendered as a 12-digit decimal string.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, float, str, Rational, Decimal]

SCORE_DIGITS = 12
_QUANTUM = Decimal(1).scaleb(-SCORE_DIGITS)

BOOTSTRAP_PRIOR = Fraction(1, 2)
NEUTRAL_EVIDENCE = Fraction(1)


class CountInversion(ValueError):
    """More spam tokens than content tokens were reported."""


def as_fraction(value: Number) -> Fraction:
    """Exact rational for ``value``; floats are read by their shortest repr.

    ``as_fraction(0.35) == Fraction(7, 20)`` rather than the binary expansion,
    so a threshold typed as 0.35 behaves like the decimal 0.35.
    """
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        return Fraction(value)
    return Fraction(value)


def format_score(value: Number, digits: int = SCORE_DIGITS) -> str:
    """Render a probability with a fixed number of fractional digits.

    >>> format_score(Fraction(286, 885))
    '0.323163841808'
    """
    frac = as_fraction(value)
    quantum = _QUANTUM if digits == SCORE_DIGITS else Decimal(1).scaleb(-digits)
    with localcontext() as ctx:
        ctx.prec = 60
        dec = Decimal(frac.numerator) / Decimal(frac.denominator)
        return format(dec.quantize(quantum, rounding=ROUND_HALF_EVEN), "f")


class Label(str, enum.Enum):
    HAM = "ham"
    SPAM = "spam"


@dataclass(frozen=True)
class CorpusStats:
    """Running counters over every comment the store has ingested."""

    total_comments: int = 0
    spam_labeled: int = 0
    with_spam_words: int = 0
    total_content_tokens: int = 0

    def __post_init__(self) -> None:
        for name in ("total_comments", "spam_labeled", "with_spam_words", "total_content_tokens"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
        if self.spam_labeled > self.total_comments:
            raise ValueError("spam_labeled cannot exceed total_comments")
        if self.with_spam_words > self.total_comments:
            raise ValueError("with_spam_words cannot exceed total_comments")

    def to_dict(self) -> dict[str, int]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> CorpusStats:
        known = {k: int(v) for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True)
class ScoreBreakdown:
    likelihood: Fraction
    prior: Fraction
    evidence: Fraction
    score: Fraction
    spam_token_count: int
    content_token_count: int

    @property
    def score_str(self) -> str:
        return format_score(self.score)

    def to_dict(self) -> dict:
        return {
            "likelihood": format_score(self.likelihood),
            "prior": format_score(self.prior),
            "evidence": format_score(self.evidence),
            "score": format_score(self.score),
            "spam_token_count": self.spam_token_count,
            "content_token_count": self.content_token_count,
            # exact values so a replayed breakdown is identical to the original
            "exact": {
                "likelihood": str(self.likelihood),
                "prior": str(self.prior),
                "evidence": str(self.evidence),
                "score": str(self.score),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> ScoreBreakdown:
        exact = data.get("exact", data)
        return cls(
            likelihood=Fraction(exact["likelihood"]),
            prior=Fraction(exact["prior"]),
            evidence=Fraction(exact["evidence"]),
            score=Fraction(exact["score"]),
            spam_token_count=int(data["spam_token_count"]),
            content_token_count=int(data["content_token_count"]),
        )


@dataclass(frozen=True)
class FilterConfig:
    threshold: Fraction = Fraction(7, 20)
    autolearn_enabled: bool = False
    autolearn_threshold: Fraction = Fraction(7, 10)

    def __post_init__(self) -> None:
        object.__setattr__(self, "threshold", as_fraction(self.threshold))
        object.__setattr__(self, "autolearn_threshold", as_fraction(self.autolearn_threshold))
        if not isinstance(self.autolearn_enabled, bool):
            raise ValueError("autolearn_enabled must be a boolean")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {float(self.threshold)}")
        if not 0 < self.autolearn_threshold <= 1:
            raise ValueError(
                f"autolearn_threshold must lie in (0, 1], got {float(self.autolearn_threshold)}"
            )
        if self.autolearn_threshold < self.threshold:
            raise ValueError("autolearn_threshold must be >= threshold")

    def to_dict(self) -> dict:
        return {
            "threshold": float(self.threshold),
            "autolearn_enabled": self.autolearn_enabled,
            "autolearn_threshold": float(self.autolearn_threshold),
        }

    @classmethod
    def from_dict(cls, data: dict) -> FilterConfig:
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown filter setting(s): {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True)
class Verdict:
    label: Label
    breakdown: ScoreBreakdown

    @property
    def is_spam(self) -> bool:
        return self.label is Label.SPAM


def likelihood(spam_token_count: int, content_token_count: int) -> Fraction:
    if spam_token_count < 0 or content_token_count < 0:
        raise ValueError("token counts must be non-negative")
    if spam_token_count > content_token_count:
        raise CountInversion(
            f"spam_token_count {spam_token_count} exceeds content_token_count {content_token_count}"
        )
    if content_token_count == 0:
        return Fraction(0)
    return Fraction(spam_token_count, content_token_count)


def prior(stats: CorpusStats) -> Fraction:
    # Empty corpus: neutral prior so the comment's own words decide.
    if stats.total_comments == 0:
        return BOOTSTRAP_PRIOR
    return Fraction(stats.spam_labeled, stats.total_comments)


def evidence(stats: CorpusStats) -> Fraction:
    if stats.total_comments == 0 or stats.with_spam_words == 0:
        return NEUTRAL_EVIDENCE
    return Fraction(stats.with_spam_words, stats.total_comments)


def score(spam_token_count: int, content_token_count: int, stats: CorpusStats) -> ScoreBreakdown:
    """Compose likelihood, prior and evidence into a clamped posterior."""
    lik = likelihood(spam_token_count, content_token_count)
    pri = prior(stats)
    evi = evidence(stats)
    if spam_token_count == 0:
        posterior = Fraction(0)
    else:
        # one division over the integer cross-products
        posterior = Fraction(
            lik.numerator * pri.numerator * evi.denominator,
            lik.denominator * pri.denominator * evi.numerator,
        )
        posterior = min(posterior, Fraction(1))
    return ScoreBreakdown(
        likelihood=lik,
        prior=pri,
        evidence=evi,
        score=posterior,
        spam_token_count=spam_token_count,
        content_token_count=content_token_count,
    )


def classify(breakdown: ScoreBreakdown, config: FilterConfig) -> Verdict:
    """Spam when the score reaches the threshold (boundary included)."""
    label = Label.SPAM if breakdown.score >= config.threshold else Label.HAM
    return Verdict(label, breakdown)


def should_autolearn(breakdown: ScoreBreakdown, config: FilterConfig) -> bool:
    return config.autolearn_enabled and breakdown.score >= config.autolearn_threshold
