"""Offline threshold sweeps over a labeled corpus.

Each entry is scored once against fixed corpus statistics; rows for the
different thresholds are then just different cut points over the same
scores, so no learning happens during an evaluation.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .classifier import CorpusStats, Label, Number, as_fraction, format_score
from .lexicon import Lexicon, default_spamwords, default_stopwords
from .service import analyze_text

DEFAULT_THRESHOLDS: tuple[Fraction, ...] = tuple(Fraction(i, 10) for i in range(1, 10))

CSV_COLUMNS = ("threshold", "spam_identified_pct", "false_positive_pct", "false_negative_pct")


class EmptyCorpus(ValueError):
    pass


class CorpusFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class CorpusEntry:
    text: str
    label: Label


@dataclass(frozen=True)
class LabeledCorpus:
    entries: tuple[CorpusEntry, ...]
    stats: Optional[CorpusStats] = None


@dataclass(frozen=True)
class EvalRow:
    """Rates in percent, kept exact; round only for display."""

    threshold: Fraction
    spam_identified_pct: Fraction
    false_positive_pct: Fraction
    false_negative_pct: Fraction
    spam_total: int = 0
    ham_total: int = 0

    def as_floats(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in CSV_COLUMNS}


def parse_label(value: object) -> Label:
    if isinstance(value, str):
        try:
            return Label(value.strip().lower())
        except ValueError:
            pass
    raise ValueError(f"label must be 'ham' or 'spam', got {value!r}")


def parse_corpus(lines: Iterable[str]) -> LabeledCorpus:
    """Read JSON-lines entries ``{"text": ..., "label": "ham"|"spam"}``.

    Blank lines are skipped; anything else malformed is reported by line.
    """
    entries = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("entry must be a JSON object")
            text = obj["text"]
            if not isinstance(text, str):
                raise ValueError("text must be a string")
            entries.append(CorpusEntry(text, parse_label(obj["label"])))
        except KeyError as exc:
            raise CorpusFormatError(line_no, f"missing field {exc}") from None
        except ValueError as exc:
            raise CorpusFormatError(line_no, str(exc)) from None
    return LabeledCorpus(tuple(entries))


def load_corpus(path: Path | str) -> LabeledCorpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def _validate_threshold(threshold: Number) -> Fraction:
    t = as_fraction(threshold)
    if not 0 < t < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return t


def score_corpus(
    corpus: LabeledCorpus,
    stats: CorpusStats,
    stopwords: Optional[Lexicon] = None,
    spamwords: Optional[Lexicon] = None,
) -> list[tuple[Fraction, Label]]:
    if not corpus.entries:
        raise EmptyCorpus("empty corpus")
    stopwords = stopwords if stopwords is not None else default_stopwords()
    spamwords = spamwords if spamwords is not None else default_spamwords()
    return [
        (analyze_text(e.text, stopwords, spamwords, stats).breakdown.score, e.label) for e in corpus.entries
    ]


def rates_at(scored: Sequence[tuple[Fraction, Label]], threshold: Fraction) -> EvalRow:
    spam_total = sum(1 for _, lab in scored if lab is Label.SPAM)
    ham_total = len(scored) - spam_total
    caught = sum(1 for s, lab in scored if lab is Label.SPAM and s >= threshold)
    false_pos = sum(1 for s, lab in scored if lab is Label.HAM and s >= threshold)
    # With no spam entries nothing can be missed; with no ham nothing can be misflagged.
    identified = Fraction(100 * caught, spam_total) if spam_total else Fraction(100)
    fp = Fraction(100 * false_pos, ham_total) if ham_total else Fraction(0)
    return EvalRow(
        threshold=threshold,
        spam_identified_pct=identified,
        false_positive_pct=fp,
        false_negative_pct=100 - identified,
        spam_total=spam_total,
        ham_total=ham_total,
    )


def evaluate(
    corpus: LabeledCorpus,
    threshold: Number,
    stats: Optional[CorpusStats] = None,
    stopwords: Optional[Lexicon] = None,
    spamwords: Optional[Lexicon] = None,
) -> EvalRow:
    """Classify every entry at ``threshold`` against frozen ``stats``."""
    t = _validate_threshold(threshold)
    stats = stats if stats is not None else (corpus.stats or CorpusStats())
    return rates_at(score_corpus(corpus, stats, stopwords, spamwords), t)


def sweep(
    corpus: LabeledCorpus,
    thresholds: Sequence[Number] = DEFAULT_THRESHOLDS,
    stats: Optional[CorpusStats] = None,
    stopwords: Optional[Lexicon] = None,
    spamwords: Optional[Lexicon] = None,
) -> list[EvalRow]:
    ts = [_validate_threshold(t) for t in thresholds]
    if not ts:
        raise ValueError("at least one threshold is required")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("thresholds must be strictly increasing")
    stats = stats if stats is not None else (corpus.stats or CorpusStats())
    scored = score_corpus(corpus, stats, stopwords, spamwords)
    return [rates_at(scored, t) for t in ts]


def _pct(value: Fraction) -> str:
    return format_score(value, 2)


def _threshold(value: Fraction) -> str:
    return f"{float(value):g}"


def format_table(rows: Sequence[EvalRow]) -> str:
    header = ("Threshold value", "Spam identified (%)", "False positive (%)", "False negative (%)")
    body = [
        (_threshold(r.threshold), _pct(r.spam_identified_pct), _pct(r.false_positive_pct), _pct(r.false_negative_pct))
        for r in rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def to_csv(rows: Sequence[EvalRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [_threshold(r.threshold), _pct(r.spam_identified_pct), _pct(r.false_positive_pct), _pct(r.false_negative_pct)]
        )
    return buf.getvalue()
