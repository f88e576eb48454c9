"""Append-only event log with JSON snapshots.

The log (``*.bgl``) holds one JSON object per line::

    {"seq": 7, "kind": "LabelChanged", "at": "2026-01-01T00:00:00+00:00", "payload": {...}}

Sequence numbers start at 1 and have no gaps. State is rebuilt by folding
events in order; a snapshot is the same state serialized at some ``seq`` so
that reopening only has to fold the tail.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import tempfile
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

from .classifier import CorpusStats, FilterConfig, Label, ScoreBreakdown
from .lexicon import Lexicon, LexiconKind, add_term, default_lexicon, remove_term, replace_terms
from .policy import Identity, IpRecord, PolicyConfig, parse_timestamp

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = 1


class StoreError(Exception):
    pass


class StorageFailure(StoreError):
    """An I/O error while writing; the log is left as it was."""


class CorruptLog(StoreError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"corrupt event log at line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class UnknownComment(StoreError, KeyError):
    def __init__(self, comment_id: Any):
        super().__init__(f"no comment with id {comment_id!r}")
        self.comment_id = comment_id

    def __str__(self) -> str:
        return self.args[0]


class EventKind(str, enum.Enum):
    COMMENT_INGESTED = "CommentIngested"
    LABEL_CHANGED = "LabelChanged"
    LEXICON_CHANGED = "LexiconChanged"
    CONFIG_CHANGED = "ConfigChanged"
    IP_EVENT = "IpEvent"


class CommentStatus(str, enum.Enum):
    POSTED = "posted"
    QUARANTINED = "quarantined"
    REJECTED = "rejected"
    APPROVED = "approved"  # released from quarantine by an admin

    @property
    def visible(self) -> bool:
        return self in (CommentStatus.POSTED, CommentStatus.APPROVED)


def utc_iso(at: datetime) -> str:
    if at.tzinfo is None:
        at = at.replace(tzinfo=timezone.utc)
    return at.astimezone(timezone.utc).isoformat()


@dataclass(frozen=True)
class Event:
    seq: int
    kind: EventKind
    payload: dict
    at: datetime

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "kind": self.kind.value, "at": utc_iso(self.at), "payload": self.payload},
            ensure_ascii=False,
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> Event:
        data = json.loads(line)
        if not isinstance(data, dict):
            raise ValueError("event is not a JSON object")
        seq = data["seq"]
        if isinstance(seq, bool) or not isinstance(seq, int):
            raise ValueError("seq must be an integer")
        payload = data["payload"]
        if not isinstance(payload, dict):
            raise ValueError("payload must be an object")
        return cls(seq=seq, kind=EventKind(data["kind"]), payload=payload, at=parse_timestamp(data["at"]))


@dataclass(frozen=True)
class StoredComment:
    id: int
    identity: Identity
    ip: str
    submitted_at: datetime
    raw_text: str
    content_tokens: tuple[str, ...]
    frequency: dict
    breakdown: ScoreBreakdown
    status: CommentStatus
    label: Label

    @property
    def visible(self) -> bool:
        return self.status.visible

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "identity": self.identity.to_dict(),
            "ip": self.ip,
            "submitted_at": utc_iso(self.submitted_at),
            "raw_text": self.raw_text,
            "content_tokens": list(self.content_tokens),
            "frequency": dict(self.frequency),
            "breakdown": self.breakdown.to_dict(),
            "status": self.status.value,
            "label": self.label.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> StoredComment:
        return cls(
            id=int(data["id"]),
            identity=Identity.from_dict(data["identity"]),
            ip=str(data["ip"]),
            submitted_at=parse_timestamp(data["submitted_at"]),
            raw_text=str(data["raw_text"]),
            content_tokens=tuple(data["content_tokens"]),
            frequency={str(k): int(v) for k, v in data["frequency"].items()},
            breakdown=ScoreBreakdown.from_dict(data["breakdown"]),
            status=CommentStatus(data["status"]),
            label=Label(data["label"]),
        )


def relabeled_status(status: CommentStatus, new_label: Label) -> CommentStatus:
    if new_label is Label.HAM:
        return CommentStatus.APPROVED if status in (CommentStatus.QUARANTINED, CommentStatus.REJECTED) else status
    return CommentStatus.REJECTED if status in (CommentStatus.POSTED, CommentStatus.APPROVED) else status


@dataclass
class StoreState:
    """Everything the log encodes, folded up to ``last_seq``."""

    stats: CorpusStats = field(default_factory=CorpusStats)
    stopwords: Lexicon = field(default_factory=lambda: default_lexicon(LexiconKind.STOPWORDS))
    spamwords: Lexicon = field(default_factory=lambda: default_lexicon(LexiconKind.SPAMWORDS))
    ips: dict[str, IpRecord] = field(default_factory=dict)
    comments: dict[int, StoredComment] = field(default_factory=dict)
    filter_config: Optional[FilterConfig] = None
    policy_config: Optional[PolicyConfig] = None
    last_seq: int = 0
    max_comment_id: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self.max_comment_id = max(self.comments, default=0)

    def lexicon(self, kind: LexiconKind | str) -> Lexicon:
        return self.stopwords if LexiconKind(kind) is LexiconKind.STOPWORDS else self.spamwords

    def next_comment_id(self) -> int:
        return self.max_comment_id + 1

    def apply(self, event: Event) -> None:
        self.prepare(event)()

    def prepare(self, event: Event) -> Callable[[], None]:
        """Validate ``event`` against the current state.

        Returns a commit callback that cannot fail, so a caller can persist
        the event between validation and mutation.
        """
        if event.seq != self.last_seq + 1:
            raise ValueError(f"expected seq {self.last_seq + 1}, got {event.seq}")
        handler = {
            EventKind.COMMENT_INGESTED: self._prep_ingest,
            EventKind.LABEL_CHANGED: self._prep_label,
            EventKind.LEXICON_CHANGED: self._prep_lexicon,
            EventKind.CONFIG_CHANGED: self._prep_config,
            EventKind.IP_EVENT: self._prep_ip,
        }[event.kind]
        mutate = handler(event.payload)

        def commit() -> None:
            mutate()
            self.last_seq = event.seq

        return commit

    def _prep_ingest(self, payload: dict) -> Callable[[], None]:
        comment = StoredComment.from_dict(payload)
        if comment.id in self.comments:
            raise ValueError(f"duplicate comment id {comment.id}")
        b = comment.breakdown
        if b.spam_token_count > b.content_token_count:
            raise ValueError("spam_token_count exceeds content_token_count")
        s = self.stats
        stats = CorpusStats(
            total_comments=s.total_comments + 1,
            spam_labeled=s.spam_labeled + (comment.label is Label.SPAM),
            with_spam_words=s.with_spam_words + (b.spam_token_count > 0),
            total_content_tokens=s.total_content_tokens + b.content_token_count,
        )

        def mutate() -> None:
            self.comments[comment.id] = comment
            self.max_comment_id = max(self.max_comment_id, comment.id)
            self.stats = stats

        return mutate

    def _prep_label(self, payload: dict) -> Callable[[], None]:
        cid = int(payload["comment_id"])
        if cid not in self.comments:
            raise UnknownComment(cid)
        old = self.comments[cid]
        label = Label(payload["label"])
        status = CommentStatus(payload["status"]) if "status" in payload else relabeled_status(old.status, label)
        delta = (label is Label.SPAM) - (old.label is Label.SPAM)
        stats = replace(self.stats, spam_labeled=self.stats.spam_labeled + delta)
        updated = replace(old, label=label, status=status)

        def mutate() -> None:
            self.comments[cid] = updated
            self.stats = stats

        return mutate

    def _prep_lexicon(self, payload: dict) -> Callable[[], None]:
        kind = LexiconKind(payload["kind"])
        action = payload["action"]
        terms = payload["terms"]
        if not isinstance(terms, list):
            raise ValueError("terms must be a list")
        lex = self.lexicon(kind)
        if action == "add":
            for term in terms:
                lex = add_term(lex, term)
        elif action == "remove":
            for term in terms:
                lex = remove_term(lex, term)
        elif action == "replace":
            lex = replace_terms(lex, terms)
        else:
            raise ValueError(f"unknown lexicon action {action!r}")
        if "revision" in payload and payload["revision"] != lex.revision:
            raise ValueError(f"lexicon revision mismatch: log says {payload['revision']}, fold gives {lex.revision}")

        def mutate() -> None:
            if kind is LexiconKind.STOPWORDS:
                self.stopwords = lex
            else:
                self.spamwords = lex

        return mutate

    def _prep_config(self, payload: dict) -> Callable[[], None]:
        filt = FilterConfig.from_dict(payload["filter"]) if payload.get("filter") is not None else self.filter_config
        pol = PolicyConfig.from_dict(payload["policy"]) if payload.get("policy") is not None else self.policy_config

        def mutate() -> None:
            self.filter_config = filt
            self.policy_config = pol

        return mutate

    def _prep_ip(self, payload: dict) -> Callable[[], None]:
        record = IpRecord.from_dict(payload["record"])

        def mutate() -> None:
            self.ips[record.ip] = record

        return mutate

    def to_dict(self) -> dict:
        return {
            "last_seq": self.last_seq,
            "stats": self.stats.to_dict(),
            "lexicons": {
                LexiconKind.STOPWORDS.value: self.stopwords.to_dict(),
                LexiconKind.SPAMWORDS.value: self.spamwords.to_dict(),
            },
            "ips": {ip: rec.to_dict() for ip, rec in sorted(self.ips.items())},
            "comments": [c.to_dict() for _, c in sorted(self.comments.items())],
            "filter": self.filter_config.to_dict() if self.filter_config else None,
            "policy": self.policy_config.to_dict() if self.policy_config else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> StoreState:
        lex = data["lexicons"]
        return cls(
            stats=CorpusStats.from_dict(data["stats"]),
            stopwords=Lexicon.from_dict(lex[LexiconKind.STOPWORDS.value]),
            spamwords=Lexicon.from_dict(lex[LexiconKind.SPAMWORDS.value]),
            ips={ip: IpRecord.from_dict(rec) for ip, rec in data["ips"].items()},
            comments={c["id"]: StoredComment.from_dict(c) for c in data["comments"]},
            filter_config=FilterConfig.from_dict(data["filter"]) if data.get("filter") else None,
            policy_config=PolicyConfig.from_dict(data["policy"]) if data.get("policy") else None,
            last_seq=int(data["last_seq"]),
        )


def replay(lines: Iterable[str], state: Optional[StoreState] = None) -> StoreState:
    """Fold log lines into a state.

    Events at or below ``state.last_seq`` (already covered by a snapshot) are
    parsed but skipped. Any unparsable line, sequence gap or event that does
    not apply cleanly raises CorruptLog with its 1-based line number.
    """
    state = state if state is not None else StoreState()
    base = state.last_seq
    expected = 1
    for line_no, line in enumerate(lines, start=1):
        if not line.endswith("\n"):
            raise CorruptLog(line_no, "truncated line (no terminating newline)")
        try:
            event = Event.from_json(line)
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptLog(line_no, f"unparsable event: {exc}") from None
        if event.seq != expected:
            raise CorruptLog(line_no, f"sequence gap: expected {expected}, got {event.seq}")
        expected += 1
        if event.seq <= base:
            continue
        try:
            state.apply(event)
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptLog(line_no, f"event does not apply: {exc}") from None
    if expected - 1 < base:
        raise CorruptLog(expected, f"log ends at seq {expected - 1} but snapshot covers seq {base}")
    return state


def replay_file(path: Path | str) -> StoreState:
    path = Path(path)
    if not path.exists():
        return StoreState()
    with path.open("r", encoding="utf-8", newline="\n") as fh:
        return replay(fh)


def write_json_atomic(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(data, fh, ensure_ascii=False, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


class Store:
    """Single-writer system of record backed by an event log.

    All mutations go through :meth:`append`, which holds one lock, so events
    are totally ordered. Readers get frozen values (stats, lexicons, records).
    """

    def __init__(
        self,
        log_path: Path | str,
        snapshot_path: Path | str | None = None,
        *,
        fsync: bool = True,
        snapshot_every: int = 0,
    ):
        self.log_path = Path(log_path)
        self.snapshot_path = (
            Path(snapshot_path) if snapshot_path is not None else self.log_path.with_suffix(".snapshot.json")
        )
        self.fsync = fsync
        self.snapshot_every = snapshot_every
        self._lock = threading.RLock()
        try:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self._state = self._load()
            self._fh = open(self.log_path, "ab")
        except OSError as exc:
            raise StorageFailure(f"cannot open store at {self.log_path}: {exc}") from exc

    def _load(self) -> StoreState:
        state = None
        if self.snapshot_path.exists():
            with self.snapshot_path.open("r", encoding="utf-8") as fh:
                data = json.load(fh)
            if data.get("format") != SNAPSHOT_FORMAT:
                raise StoreError(f"unsupported snapshot format {data.get('format')!r}")
            state = StoreState.from_dict(data["state"])
            logger.info("loaded snapshot at seq %d from %s", state.last_seq, self.snapshot_path)
        if not self.log_path.exists():
            if state is not None and state.last_seq:
                raise CorruptLog(1, f"log missing but snapshot covers seq {state.last_seq}")
            return state or StoreState()
        with self.log_path.open("r", encoding="utf-8", newline="\n") as fh:
            return replay(fh, state)

    # -- writes ----------------------------------------------------------

    def append(self, kind: EventKind | str, payload: dict, at: datetime) -> int:
        """Durably append one event and fold it into the live state."""
        with self._lock:
            event = Event(seq=self._state.last_seq + 1, kind=EventKind(kind), payload=payload, at=at)
            commit = self._state.prepare(event)
            line = (event.to_json() + "\n").encode("utf-8")
            self._write(line)
            commit()
            if self.snapshot_every and event.seq % self.snapshot_every == 0:
                try:
                    self.snapshot()
                except StorageFailure:
                    # the log already holds the event; a stale snapshot only costs replay time
                    logger.exception("periodic snapshot failed")
            return event.seq

    def _write(self, line: bytes) -> None:
        fh = self._fh
        start = fh.tell()
        try:
            fh.write(line)
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())
        except OSError as exc:
            try:
                fh.seek(start)
                fh.truncate(start)
                fh.flush()
            except OSError:
                logger.exception("could not roll back partial write to %s", self.log_path)
            raise StorageFailure(f"append to {self.log_path} failed: {exc}") from exc

    def ingest(
        self,
        *,
        identity: Identity,
        ip: str,
        submitted_at: datetime,
        raw_text: str,
        content_tokens: Sequence[str],
        frequency: dict,
        breakdown: ScoreBreakdown,
        label: Label,
        status: Optional[CommentStatus] = None,
    ) -> StoredComment:
        with self._lock:
            if status is None:
                status = CommentStatus.QUARANTINED if label is Label.SPAM else CommentStatus.POSTED
            comment = StoredComment(
                id=self._state.next_comment_id(),
                identity=identity,
                ip=ip,
                submitted_at=submitted_at,
                raw_text=raw_text,
                content_tokens=tuple(content_tokens),
                frequency=dict(frequency),
                breakdown=breakdown,
                status=status,
                label=label,
            )
            self.append(EventKind.COMMENT_INGESTED, comment.to_dict(), submitted_at)
            return self._state.comments[comment.id]

    def relabel(self, comment_id: int, new_label: Label, at: datetime) -> CorpusStats:
        with self._lock:
            old = self._state.comments.get(comment_id)
            if old is None:
                raise UnknownComment(comment_id)
            new_label = Label(new_label)
            if old.label is new_label:
                return self._state.stats
            status = relabeled_status(old.status, new_label)
            self.append(
                EventKind.LABEL_CHANGED,
                {"comment_id": comment_id, "label": new_label.value, "status": status.value},
                at,
            )
            return self._state.stats

    def change_lexicon(self, kind: LexiconKind | str, action: str, terms: Sequence[str], at: datetime) -> Lexicon:
        """Apply add/remove/replace; no event is logged when nothing changes."""
        kind = LexiconKind(kind)
        with self._lock:
            current = self._state.lexicon(kind)
            probe = StoreState(stopwords=self._state.stopwords, spamwords=self._state.spamwords)
            payload = {"kind": kind.value, "action": action, "terms": list(terms)}
            # dry-run on a throwaway state to learn the resulting revision
            probe.apply(Event(1, EventKind.LEXICON_CHANGED, payload, at))
            result = probe.lexicon(kind)
            if result.revision == current.revision:
                return current
            payload["revision"] = result.revision
            self.append(EventKind.LEXICON_CHANGED, payload, at)
            return self._state.lexicon(kind)

    def change_config(
        self, filter_config: Optional[FilterConfig], policy_config: Optional[PolicyConfig], at: datetime
    ) -> None:
        payload = {
            "filter": filter_config.to_dict() if filter_config else None,
            "policy": policy_config.to_dict() if policy_config else None,
        }
        self.append(EventKind.CONFIG_CHANGED, payload, at)

    def put_ip_record(self, record: IpRecord, at: datetime) -> IpRecord:
        with self._lock:
            self.append(EventKind.IP_EVENT, {"record": record.to_dict()}, at)
            return self._state.ips[record.ip]

    def snapshot(self) -> Path:
        """Write the current state next to the log (atomic rename)."""
        with self._lock:
            data = {"format": SNAPSHOT_FORMAT, "state": self._state.to_dict()}
            try:
                write_json_atomic(self.snapshot_path, data)
            except OSError as exc:
                raise StorageFailure(f"snapshot to {self.snapshot_path} failed: {exc}") from exc
            logger.info("snapshot at seq %d written to %s", self._state.last_seq, self.snapshot_path)
            return self.snapshot_path

    def close(self, snapshot: bool = False) -> None:
        with self._lock:
            if self._fh.closed:
                return
            if snapshot:
                self.snapshot()
            self._fh.close()

    def __enter__(self) -> Store:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    # -- reads -----------------------------------------------------------

    @property
    def last_seq(self) -> int:
        return self._state.last_seq

    def stats(self) -> CorpusStats:
        return self._state.stats

    def lexicon(self, kind: LexiconKind | str) -> Lexicon:
        return self._state.lexicon(kind)

    def lexicons(self) -> tuple[Lexicon, Lexicon]:
        with self._lock:
            return self._state.stopwords, self._state.spamwords

    def ip_record(self, ip: str) -> IpRecord:
        with self._lock:
            return self._state.ips.get(ip) or IpRecord(ip=ip)

    def ip_records(self) -> dict[str, IpRecord]:
        with self._lock:
            return dict(self._state.ips)

    def comment(self, comment_id: int) -> StoredComment:
        with self._lock:
            try:
                return self._state.comments[comment_id]
            except KeyError:
                raise UnknownComment(comment_id) from None

    def comments(self) -> list[StoredComment]:
        with self._lock:
            return list(self._state.comments.values())

    def stored_config(self) -> tuple[Optional[FilterConfig], Optional[PolicyConfig]]:
        with self._lock:
            return self._state.filter_config, self._state.policy_config

    def state_dict(self) -> dict:
        with self._lock:
            return self._state.to_dict()
