import json
from datetime import timedelta

import pytest

from bayesgate.classifier import CorpusStats, FilterConfig, Label, score
from bayesgate.lexicon import LexiconKind, MultiTokenTerm
from bayesgate.policy import Identity, IpRecord, PolicyConfig, record_verdict
from bayesgate.store import (
    CommentStatus,
    CorruptLog,
    EventKind,
    StorageFailure,
    Store,
    StoreState,
    UnknownComment,
    replay,
    replay_file,
)

from .conftest import T0, seed_corpus

WHO = Identity(name="Ann", email="ann@example.com")


def ingest(store, spam_tokens, content_tokens, label, at=T0):
    tokens = ["bad"] * spam_tokens + ["fine"] * (content_tokens - spam_tokens)
    return store.ingest(
        identity=WHO,
        ip="10.0.0.1",
        submitted_at=at,
        raw_text=" ".join(tokens),
        content_tokens=tokens,
        frequency={},
        breakdown=score(spam_tokens, content_tokens, store.stats()),
        label=label,
    )


def test_first_append_is_seq_1(store):
    assert store.append(EventKind.IP_EVENT, {"record": IpRecord("10.0.0.1").to_dict()}, T0) == 1
    assert store.append(EventKind.IP_EVENT, {"record": IpRecord("10.0.0.2").to_dict()}, T0) == 2


def test_append_after_reopen_continues(tmp_path):
    path = tmp_path / "log.bgl"
    with Store(path, fsync=False) as s:
        ingest(s, 1, 2, Label.HAM)
        ingest(s, 0, 2, Label.HAM)
    with Store(path, fsync=False) as s:
        assert s.last_seq == 2
        assert s.append(EventKind.IP_EVENT, {"record": IpRecord("10.0.0.1").to_dict()}, T0) == 3
        assert ingest(s, 0, 1, Label.HAM).id == 3


def test_log_lines_are_json(store):
    ingest(store, 1, 3, Label.SPAM)
    lines = store.log_path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    event = json.loads(lines[0])
    assert set(event) == {"seq", "kind", "at", "payload"}
    assert event["kind"] == "CommentIngested"
    assert event["at"] == "2026-03-01T12:00:00+00:00"


def test_empty_replay():
    state = replay([])
    assert state.stats == CorpusStats()
    assert len(state.stopwords) == 32 and len(state.spamwords) == 11
    assert replay_file("/nonexistent/never.bgl").stats == CorpusStats()


def test_stats_counters(store):
    assert store.stats() == CorpusStats(0, 0, 0, 0)
    ingest(store, 4, 12, Label.HAM)
    assert store.stats() == CorpusStats(1, 0, 1, 12)


def test_stats_counters_independent(store):
    ingest(store, 0, 5, Label.SPAM)
    assert store.stats() == CorpusStats(1, 1, 0, 5)


def test_example_counters_from_log(store):
    seed_corpus(store, 358, 286, 295)
    stats = store.stats()
    assert (stats.total_comments, stats.spam_labeled, stats.with_spam_words) == (358, 286, 295)
    replayed = replay_file(store.log_path)
    assert replayed.stats == store.stats()


def test_relabel(store):
    c = ingest(store, 3, 4, Label.SPAM)
    assert c.status is CommentStatus.QUARANTINED
    before = store.stats()
    after = store.relabel(c.id, Label.HAM, T0)
    assert after.spam_labeled == before.spam_labeled - 1
    assert store.comment(c.id).status is CommentStatus.APPROVED
    assert store.comment(c.id).visible
    # same label again: nothing logged, nothing counted
    seq = store.last_seq
    assert store.relabel(c.id, Label.HAM, T0) == after
    assert store.last_seq == seq
    with pytest.raises(UnknownComment):
        store.relabel(999, Label.HAM, T0)


def test_relabel_posted_to_spam(store):
    c = ingest(store, 0, 4, Label.HAM)
    assert c.status is CommentStatus.POSTED
    stats = store.relabel(c.id, Label.SPAM, T0)
    assert stats.spam_labeled == 1
    assert store.comment(c.id).status is CommentStatus.REJECTED
    assert replay_file(store.log_path).stats == stats


def test_lexicon_changes_persist(tmp_path):
    path = tmp_path / "lex.bgl"
    with Store(path, fsync=False) as s:
        lex = s.change_lexicon(LexiconKind.SPAMWORDS, "add", ["Garbage"], T0)
        assert "garbage" in lex and lex.revision == 1
        # no-op changes are not logged
        assert s.change_lexicon(LexiconKind.SPAMWORDS, "add", ["garbage"], T0) is lex
        assert s.last_seq == 1
        s.change_lexicon(LexiconKind.STOPWORDS, "remove", ["the"], T0)
        with pytest.raises(MultiTokenTerm):
            s.change_lexicon(LexiconKind.SPAMWORDS, "add", ["two words"], T0)
        assert s.last_seq == 2
    state = replay_file(path)
    assert "garbage" in state.spamwords and state.spamwords.revision == 1
    assert "the" not in state.stopwords


def test_config_changes_persist(tmp_path):
    path = tmp_path / "cfg.bgl"
    with Store(path, fsync=False) as s:
        s.change_config(FilterConfig(threshold=0.55), PolicyConfig(min_interval_seconds=5), T0)
    f, p = Store(path, fsync=False).stored_config()
    assert f.threshold == FilterConfig(threshold=0.55).threshold
    assert p.min_interval_seconds == 5


def test_corrupt_line_reported(store):
    ingest(store, 1, 2, Label.HAM)
    ingest(store, 1, 2, Label.HAM)
    store.close()
    lines = store.log_path.read_text().splitlines(keepends=True)
    lines.insert(1, "{not json}\n")
    with pytest.raises(CorruptLog) as err:
        replay(lines)
    assert err.value.line_no == 2


def test_sequence_gap_reported(store):
    for _ in range(3):
        ingest(store, 0, 1, Label.HAM)
    store.close()
    lines = store.log_path.read_text().splitlines(keepends=True)
    with pytest.raises(CorruptLog) as err:
        replay([lines[0], lines[2]])
    assert err.value.line_no == 2
    assert "gap" in err.value.reason


def test_torn_final_line_reported(store):
    ingest(store, 0, 1, Label.HAM)
    store.close()
    text = store.log_path.read_text()
    with pytest.raises(CorruptLog) as err:
        replay([text, text[: len(text) // 2]])
    assert err.value.line_no == 2


def test_unknown_comment_in_log_is_corrupt():
    line = json.dumps(
        {"seq": 1, "kind": "LabelChanged", "at": T0.isoformat(), "payload": {"comment_id": 5, "label": "ham"}}
    )
    with pytest.raises(CorruptLog):
        replay([line + "\n"])


def test_truncation_at_any_boundary_replays(store):
    seed_corpus(store, 5, 2, 3)
    store.relabel(1, Label.HAM, T0)
    store.change_lexicon("spamwords", "add", ["junk"], T0)
    store.put_ip_record(record_verdict(IpRecord("10.0.0.1"), Label.SPAM, T0, PolicyConfig()), T0)
    store.close()
    lines = store.log_path.read_text().splitlines(keepends=True)
    for n in range(len(lines) + 1):
        state = replay(lines[:n])
        assert state.last_seq == n
        assert state.stats.spam_labeled <= state.stats.total_comments
        assert state.stats.with_spam_words <= state.stats.total_comments


def test_replay_is_deterministic(store):
    seed_corpus(store, 20, 7, 11)
    store.relabel(3, Label.HAM, T0)
    store.close()
    a = replay_file(store.log_path).to_dict()
    b = replay_file(store.log_path).to_dict()
    assert a == b


def test_snapshot_equivalence(tmp_path):
    path = tmp_path / "snap.bgl"
    s = Store(path, fsync=False)
    seed_corpus(s, 10, 4, 6)
    s.snapshot()
    s.relabel(2, Label.HAM, T0)
    s.change_lexicon("spamwords", "remove", ["bad"], T0)
    seed_corpus(s, 3, 1, 1, at=T0)
    live = s.state_dict()
    s.close()
    assert s.snapshot_path.exists()
    full = replay_file(path).to_dict()
    reopened = Store(path, fsync=False)
    assert reopened.state_dict() == full == live
    reopened.close()


def test_snapshot_round_trip_state(store):
    seed_corpus(store, 4, 1, 2)
    state = replay_file(store.log_path)
    assert StoreState.from_dict(state.to_dict()).to_dict() == state.to_dict()


def test_periodic_snapshot(tmp_path):
    s = Store(tmp_path / "p.bgl", fsync=False, snapshot_every=5)
    seed_corpus(s, 7, 0, 0)
    data = json.loads(s.snapshot_path.read_text())
    assert data["state"]["last_seq"] == 5
    s.close()
    assert Store(tmp_path / "p.bgl", fsync=False).last_seq == 7


class FailingFile:
    """Wraps the real log handle and fails the write after writing half of it."""

    def __init__(self, inner):
        self.inner = inner

    def write(self, data):
        self.inner.write(data[: len(data) // 2])
        raise OSError(28, "No space left on device")

    def __getattr__(self, name):
        return getattr(self.inner, name)


def test_failed_append_leaves_log_unchanged(store):
    ingest(store, 1, 2, Label.HAM)
    before_bytes = store.log_path.read_bytes()
    before_stats = store.stats()
    real = store._fh
    store._fh = FailingFile(real)
    with pytest.raises(StorageFailure):
        ingest(store, 1, 2, Label.SPAM)
    store._fh = real
    assert store.log_path.read_bytes() == before_bytes
    assert store.stats() == before_stats
    assert store.last_seq == 1
    # the store keeps working afterwards
    ingest(store, 0, 2, Label.HAM)
    assert replay_file(store.log_path).last_seq == 2


def test_invalid_event_is_not_written(store):
    with pytest.raises(UnknownComment):
        store.append(EventKind.LABEL_CHANGED, {"comment_id": 1, "label": "ham"}, T0)
    with pytest.raises(ValueError):
        store.append(EventKind.LEXICON_CHANGED, {"kind": "spamwords", "action": "zap", "terms": []}, T0)
    assert store.log_path.read_bytes() == b""


def test_unopenable_store(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(StorageFailure):
        Store(blocker / "sub" / "log.bgl")


def test_ip_records(store):
    rec = record_verdict(IpRecord("10.0.0.5"), Label.SPAM, T0, PolicyConfig())
    store.put_ip_record(rec, T0)
    assert store.ip_record("10.0.0.5") == rec
    assert store.ip_record("10.9.9.9") == IpRecord("10.9.9.9")
    assert replay_file(store.log_path).ips["10.0.0.5"] == rec


def test_comment_ids_sequential(store):
    ids = [ingest(store, 0, 1, Label.HAM, at=T0 + timedelta(seconds=i)).id for i in range(5)]
    assert ids == [1, 2, 3, 4, 5]
    with pytest.raises(UnknownComment):
        store.comment(99)
