from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesgate.classifier import (
    CorpusStats,
    CountInversion,
    FilterConfig,
    Label,
    as_fraction,
    classify,
    evidence,
    format_score,
    likelihood,
    prior,
    score,
    should_autolearn,
)

from .conftest import EXAMPLE_STATS
from .oracle import decimal_string, oracle_score

SECOND_STATS = CorpusStats(total_comments=359, spam_labeled=287, with_spam_words=296)


def test_likelihood():
    assert likelihood(4, 12) == Fraction(1, 3)
    assert likelihood(0, 7) == 0
    assert likelihood(0, 0) == 0
    with pytest.raises(CountInversion):
        likelihood(5, 4)


def test_prior():
    assert prior(EXAMPLE_STATS) == Fraction(286, 358)
    assert format_score(prior(EXAMPLE_STATS)) == "0.798882681564"
    assert prior(CorpusStats()) == Fraction(1, 2)
    assert prior(CorpusStats(10, 10, 0)) == 1


def test_evidence():
    assert evidence(EXAMPLE_STATS) == Fraction(295, 358)
    assert format_score(evidence(EXAMPLE_STATS)) == "0.824022346369"
    assert evidence(CorpusStats(50, 0, 50)) == 1
    assert evidence(CorpusStats()) == 1
    assert evidence(CorpusStats(10, 3, 0)) == 1


def test_restaurant_score_exact():
    b = score(4, 12, EXAMPLE_STATS)
    # oracle: (4/12)*(286/358)/(295/358) = 286/885
    assert b.score == Fraction(286, 885)
    assert b.score_str == "0.323163841808"
    assert b.spam_token_count == 4 and b.content_token_count == 12


def test_second_example_score_exact():
    b = score(7, 14, SECOND_STATS)
    assert b.score == Fraction(287, 592)
    assert b.score_str == "0.484797297297"


def test_score_zero_without_spam_tokens():
    assert score(0, 12, EXAMPLE_STATS).score == 0
    assert score(0, 0, CorpusStats()).score == 0


def test_score_clamped():
    # spam_labeled > with_spam_words pushes the raw ratio over 1
    b = score(5, 5, CorpusStats(100, 90, 10))
    assert b.score == 1


def test_count_inversion_propagates():
    with pytest.raises(CountInversion):
        score(3, 2, EXAMPLE_STATS)


def test_classify():
    cfg = FilterConfig()
    assert cfg.threshold == Fraction(7, 20)
    assert classify(score(4, 12, EXAMPLE_STATS), cfg).label is Label.HAM
    assert classify(score(7, 14, SECOND_STATS), cfg).label is Label.SPAM
    # boundary is inclusive: 7/20 exactly
    at_threshold = score(7, 20, CorpusStats(10, 10, 10))
    assert at_threshold.score == Fraction(7, 20)
    assert classify(at_threshold, cfg).label is Label.SPAM


def test_float_threshold_is_decimal_exact():
    # 0.55 as a binary float is slightly above 11/20
    cfg = FilterConfig(threshold=0.55, autolearn_threshold=0.7)
    assert cfg.threshold == Fraction(11, 20)
    assert classify(score(11, 20, CorpusStats(4, 4, 4)), cfg).is_spam


def test_should_autolearn():
    on = FilterConfig(threshold=0.35, autolearn_enabled=True, autolearn_threshold=0.70)
    high = score(9, 10, CorpusStats(10, 10, 10))
    mid = score(5, 10, CorpusStats(10, 10, 10))
    assert should_autolearn(high, on)
    assert not should_autolearn(mid, on)
    assert not should_autolearn(high, FilterConfig())


@pytest.mark.parametrize(
    "kwargs",
    [
        {"threshold": 0},
        {"threshold": 1},
        {"threshold": 1.5},
        {"threshold": 0.8},  # autolearn threshold 0.7 would undercut it
        {"autolearn_threshold": 0.2},
        {"autolearn_threshold": 1.01},
        {"autolearn_enabled": "yes"},
    ],
)
def test_filter_config_validation(kwargs):
    with pytest.raises(ValueError):
        FilterConfig(**kwargs)


def test_filter_config_round_trip():
    cfg = FilterConfig(threshold="0.45", autolearn_enabled=True, autolearn_threshold=0.9)
    assert FilterConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        FilterConfig.from_dict({"thresold": 0.4})


@pytest.mark.parametrize(
    "kwargs",
    [
        {"total_comments": -1},
        {"total_comments": 2, "spam_labeled": 3},
        {"total_comments": 2, "with_spam_words": 3},
        {"total_comments": 1.5},
    ],
)
def test_corpus_stats_validation(kwargs):
    with pytest.raises(ValueError):
        CorpusStats(**kwargs)


def test_format_score():
    assert format_score(0) == "0.000000000000"
    assert format_score(1) == "1.000000000000"
    assert format_score(Fraction(1, 3)) == "0.333333333333"
    assert format_score(Fraction(2, 3)) == "0.666666666667"
    assert as_fraction(0.35) == Fraction(7, 20)


def test_breakdown_round_trip():
    from bayesgate.classifier import ScoreBreakdown

    b = score(4, 12, EXAMPLE_STATS)
    assert ScoreBreakdown.from_dict(b.to_dict()) == b


@st.composite
def instances(draw):
    content = draw(st.integers(0, 50))
    spam = draw(st.integers(0, content))
    total = draw(st.integers(0, 10_000))
    labeled = draw(st.integers(0, total))
    with_spam = draw(st.integers(0, total))
    return spam, content, CorpusStats(total, labeled, with_spam)


@settings(max_examples=400, deadline=None)
@given(instances())
def test_score_matches_oracle(inst):
    spam, content, stats = inst
    b = score(spam, content, stats)
    expected = oracle_score(spam, content, stats.total_comments, stats.spam_labeled, stats.with_spam_words)
    assert b.score == Fraction(int(expected.p), int(expected.q))
    assert b.score_str == decimal_string(expected)
    assert 0 <= b.score <= 1
    if spam:
        assert b.score == min(Fraction(1), b.likelihood * b.prior / b.evidence)


@settings(max_examples=300, deadline=None)
@given(instances())
def test_score_monotone_in_spam_count(inst):
    _, content, stats = inst
    scores = [score(k, content, stats).score for k in range(content + 1)]
    assert scores == sorted(scores)
