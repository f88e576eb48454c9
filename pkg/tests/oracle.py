"""Independent reference arithmetic for the spam score (sympy rationals).

Deliberately written straight from the formulas, sharing no code with
``bayesgate.classifier``.
"""

from sympy import Rational


def oracle_score(spam_count, content_count, total, spam_labeled, with_spam):
    """Exact posterior with the documented fallbacks and the clamp to [0, 1]."""
    if spam_count == 0:
        return Rational(0)
    p_words_given_spam = Rational(spam_count, content_count)
    p_spam = Rational(1, 2) if total == 0 else Rational(spam_labeled, total)
    p_words = Rational(1) if total == 0 or with_spam == 0 else Rational(with_spam, total)
    raw = p_words_given_spam * p_spam / p_words
    return min(raw, Rational(1))


def decimal_string(value, digits=12):
    """Round-half-even to ``digits`` places using integer arithmetic only."""
    value = Rational(value)
    scaled = value * 10**digits
    q, r = divmod(scaled.p, scaled.q)
    twice = 2 * r
    if twice > scaled.q or (twice == scaled.q and q % 2 == 1):
        q += 1
    whole, frac = divmod(q, 10**digits)
    return f"{whole}.{frac:0{digits}d}"
