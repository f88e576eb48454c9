from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from bayesgate.classifier import CorpusStats, Label, score
from bayesgate.policy import Identity
from bayesgate.store import Store

RESTAURANT = (
    "yesterday I went to a restaurant it was a bad experience food were disgusting "
    "and also waiters were stupid but the view was not bad"
)
RESTAURANT_CONTENT = [
    "yesterday", "went", "restaurant", "bad", "experience", "food",
    "disgusting", "waiters", "stupid", "view", "not", "bad",
]
EXAMPLE_STATS = CorpusStats(total_comments=358, spam_labeled=286, with_spam_words=295)

T0 = datetime(2026, 3, 1, 12, 0, tzinfo=timezone.utc)


class FakeClock:
    def __init__(self, start: datetime = T0):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def advance(self, seconds: float = 0, **kw) -> datetime:
        self.now += timedelta(seconds=seconds, **kw)
        return self.now


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "comments.bgl", fsync=False)
    yield s
    s.close()


def seed_corpus(store: Store, total: int, spam: int, with_spam: int, at: datetime = T0 - timedelta(days=30)) -> None:
    """Ingest synthetic history so that stats() == (total, spam, with_spam)."""
    who = Identity(name="Seed", email="seed@example.com")
    for i in range(total):
        has_spam = i < with_spam
        label = Label.SPAM if i < spam else Label.HAM
        tokens = ["bad", "word"] if has_spam else ["nice", "word"]
        store.ingest(
            identity=who,
            ip="192.0.2.1",
            submitted_at=at + timedelta(seconds=i),
            raw_text=" ".join(tokens),
            content_tokens=tokens,
            frequency={t: 1 for t in tokens},
            breakdown=score(1 if has_spam else 0, 2, CorpusStats()),
            label=label,
        )


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
