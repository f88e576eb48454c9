"""Moderation pipeline: the submission path plus admin operations.

HTTP lives in :mod:`bayesgate.api`; this module only knows about the store,
the filter/policy configuration and an injectable clock.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional, Sequence

from . import classifier, policy, textprep
from .classifier import CorpusStats, FilterConfig, Label, ScoreBreakdown, Verdict
from .lexicon import Lexicon, LexiconKind
from .policy import IdentityError, PolicyConfig, TooSoon
from .store import CommentStatus, StorageFailure, Store, StoredComment, UnknownComment

logger = logging.getLogger(__name__)

Clock = Callable[[], datetime]

MAX_PER_PAGE = 100


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


class ServiceError(Exception):
    status_code = 500
    code = "internal_error"

    def __init__(self, message: str, **extra: object):
        super().__init__(message)
        self.message = message
        self.extra = extra


class BadRequest(ServiceError):
    status_code = 400
    code = "bad_request"


class Unauthorized(ServiceError):
    status_code = 401
    code = "unauthorized"


class IdentityRejected(ServiceError):
    status_code = 422
    code = "invalid_identity"


class IpBlocked(ServiceError):
    status_code = 403
    code = "ip_blocked"


class RateLimited(ServiceError):
    status_code = 429
    code = "too_soon"

    def __init__(self, message: str, retry_after: int):
        super().__init__(message, retry_after=retry_after)
        self.retry_after = retry_after


class NotFound(ServiceError):
    status_code = 404
    code = "not_found"


class Conflict(ServiceError):
    status_code = 409
    code = "conflict"


class StorageError(ServiceError):
    status_code = 500
    code = "storage_failure"


@dataclass(frozen=True)
class SubmissionRequest:
    name: str
    email: str
    text: str
    surname: Optional[str] = None
    age: Optional[int] = None


@dataclass(frozen=True)
class TextAnalysis:
    content_tokens: list[str]
    frequency: dict[str, int]
    breakdown: ScoreBreakdown


@dataclass(frozen=True)
class SubmissionResult:
    comment: StoredComment
    verdict: Verdict
    autolearned: bool

    @property
    def posted(self) -> bool:
        return not self.verdict.is_spam


def analyze_text(text: str, stopwords: Lexicon, spamwords: Lexicon, stats: CorpusStats) -> TextAnalysis:
    """Normalize, drop stopwords, count spam tokens and score against ``stats``."""
    content = textprep.content_tokens(text, stopwords)
    spam_count = textprep.count_spam_tokens(content, spamwords)
    breakdown = classifier.score(spam_count, len(content), stats)
    return TextAnalysis(content, textprep.frequency_map(content), breakdown)


def parse_page(page: Optional[str], per_page: Optional[str]) -> tuple[int, int]:
    try:
        p = 1 if page in (None, "") else int(page)
        n = 20 if per_page in (None, "") else int(per_page)
    except ValueError:
        raise BadRequest("page and per_page must be integers") from None
    if p < 1 or not 1 <= n <= MAX_PER_PAGE:
        raise BadRequest(f"page must be >= 1 and per_page in 1..{MAX_PER_PAGE}")
    return p, n


class ModerationService:
    """The comment pipeline over one :class:`Store`.

    Mutations are serialized on one lock, which also makes the rate check and
    the IP update for a submission atomic.
    """

    def __init__(
        self,
        store: Store,
        filter_config: Optional[FilterConfig] = None,
        policy_config: Optional[PolicyConfig] = None,
        clock: Clock = utcnow,
    ):
        self.store = store
        self.clock = clock
        stored_filter, stored_policy = store.stored_config()
        # settings changed through the admin API outlive restarts
        self.filter_config = stored_filter or filter_config or FilterConfig()
        self.policy_config = stored_policy or policy_config or PolicyConfig()
        self._lock = threading.RLock()

    # -- public pipeline ------------------------------------------------

    def submit(self, request: SubmissionRequest, ip: str) -> SubmissionResult:
        try:
            identity = policy.validate_identity(request.name, request.surname, request.age, request.email)
        except IdentityError as exc:
            raise IdentityRejected(str(exc), reason=exc.code) from None
        if not (request.text or "").strip():
            raise BadRequest("comment text must not be empty")
        ip = policy.canonical_ip(ip)

        with self._lock:
            now = self.clock()
            record = self.store.ip_record(ip)
            if policy.is_blocked(record, now):
                raise IpBlocked(f"address {ip} is blocked", blocked_until=record.blocked_until.isoformat())
            decision = policy.check_rate(record, now, self.policy_config)
            if isinstance(decision, TooSoon):
                raise RateLimited("please wait before commenting again", decision.retry_after_seconds)

            stopwords, spamwords = self.store.lexicons()
            stats = self.store.stats()
            analysis = analyze_text(request.text, stopwords, spamwords, stats)
            verdict = classifier.classify(analysis.breakdown, self.filter_config)
            try:
                comment = self.store.ingest(
                    identity=identity,
                    ip=ip,
                    submitted_at=now,
                    raw_text=request.text,
                    content_tokens=analysis.content_tokens,
                    frequency=analysis.frequency,
                    breakdown=analysis.breakdown,
                    label=verdict.label,
                )
                self.store.put_ip_record(policy.record_verdict(record, verdict, now, self.policy_config), now)
                learn = classifier.should_autolearn(analysis.breakdown, self.filter_config)
                if learn:
                    self.store.change_lexicon(LexiconKind.SPAMWORDS, "add", analysis.content_tokens, now)
            except StorageFailure as exc:
                logger.error("submission from %s not stored: %s", ip, exc)
                raise StorageError(str(exc)) from exc
        logger.info(
            "comment %d from %s scored %s -> %s", comment.id, ip, analysis.breakdown.score_str, verdict.label.value
        )
        return SubmissionResult(comment, verdict, learn)

    def score_text(self, text: str) -> TextAnalysis:
        """Score without storing anything, against the live stats and lexicons."""
        stopwords, spamwords = self.store.lexicons()
        return analyze_text(text, stopwords, spamwords, self.store.stats())

    def list_comments(
        self, status: Optional[str] = None, page: int = 1, per_page: int = 20, public: bool = True
    ) -> tuple[list[StoredComment], int]:
        """Page of comments, newest first, and the total matching count.

        The public view only ever contains visible comments.
        """
        wanted: Optional[CommentStatus] = None
        if status:
            try:
                wanted = CommentStatus(status)
            except ValueError:
                raise BadRequest(f"unknown status {status!r}") from None
            if public and not wanted.visible:
                raise BadRequest(f"status {status!r} is not public")
        items = [
            c
            for c in self.store.comments()
            if (wanted is None or c.status is wanted) and (not public or c.visible)
        ]
        items.sort(key=lambda c: (c.submitted_at, c.id), reverse=True)
        start = (page - 1) * per_page
        return items[start : start + per_page], len(items)

    # -- admin ------------------------------------------------------------

    def moderate(self, comment_id: int, action: str) -> StoredComment:
        with self._lock:
            try:
                comment = self.store.comment(comment_id)
            except UnknownComment:
                raise NotFound(f"no comment with id {comment_id}") from None
            if action == "approve":
                allowed, label = (CommentStatus.QUARANTINED, CommentStatus.REJECTED), Label.HAM
            elif action == "reject":
                allowed, label = (CommentStatus.POSTED, CommentStatus.APPROVED), Label.SPAM
            else:
                raise BadRequest(f"unknown moderation action {action!r}")
            if comment.status not in allowed:
                raise Conflict(f"cannot {action} a comment that is {comment.status.value}")
            try:
                self.store.relabel(comment_id, label, self.clock())
            except StorageFailure as exc:
                raise StorageError(str(exc)) from exc
            return self.store.comment(comment_id)

    def lexicon(self, kind: str) -> Lexicon:
        return self.store.lexicon(self._kind(kind))

    def change_lexicon(self, kind: str, action: str, terms: Sequence[str]) -> Lexicon:
        if action not in ("add", "remove", "replace"):
            raise BadRequest(f"unknown lexicon action {action!r}")
        if isinstance(terms, str) or not all(isinstance(t, str) for t in terms):
            raise BadRequest("terms must be a list of strings")
        with self._lock:
            try:
                return self.store.change_lexicon(self._kind(kind), action, list(terms), self.clock())
            except StorageFailure as exc:
                raise StorageError(str(exc)) from exc
            except ValueError as exc:  # MultiTokenTerm
                raise BadRequest(str(exc)) from None

    def config(self) -> dict:
        return {"filter": self.filter_config.to_dict(), "policy": self.policy_config.to_dict()}

    def update_config(self, changes: dict) -> dict:
        """Merge partial ``{"filter": {...}, "policy": {...}}`` changes and persist."""
        if not isinstance(changes, dict) or set(changes) - {"filter", "policy"}:
            raise BadRequest("config body may only contain 'filter' and 'policy' objects")
        with self._lock:
            try:
                filt = FilterConfig.from_dict({**self.filter_config.to_dict(), **(changes.get("filter") or {})})
                pol = PolicyConfig.from_dict({**self.policy_config.to_dict(), **(changes.get("policy") or {})})
            except (TypeError, ValueError) as exc:
                raise BadRequest(f"invalid config: {exc}") from None
            try:
                self.store.change_config(filt, pol, self.clock())
            except StorageFailure as exc:
                raise StorageError(str(exc)) from exc
            self.filter_config, self.policy_config = filt, pol
            return self.config()

    def stats(self) -> CorpusStats:
        return self.store.stats()

    @staticmethod
    def _kind(kind: str) -> LexiconKind:
        try:
            return LexiconKind(kind)
        except ValueError:
            raise NotFound(f"no lexicon named {kind!r}") from None


__all__ = [
    "BadRequest",
    "Conflict",
    "IdentityRejected",
    "IpBlocked",
    "ModerationService",
    "NotFound",
    "RateLimited",
    "ServiceError",
    "StorageError",
    "SubmissionRequest",
    "SubmissionResult",
    "TextAnalysis",
    "Unauthorized",
    "analyze_text",
    "parse_page",
]
