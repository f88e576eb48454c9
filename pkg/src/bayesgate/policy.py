"""Submitter identity checks and per-IP flood / repeat-offender policy.

Every function takes ``now`` explicitly; nothing here reads a clock.
"""

from __future__ import annotations

import ipaddress
import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Optional, Union

from .classifier import Label, Verdict

MAX_AGE = 150

# local-part@label.label[.label...]; syntax only, no DNS
_EMAIL_RE = re.compile(
    r"^[A-Za-z0-9.!#$%&'*+/=?^_`{|}~-]+"
    r"@(?:[A-Za-z0-9](?:[A-Za-z0-9-]{0,61}[A-Za-z0-9])?\.)+"
    r"[A-Za-z0-9](?:[A-Za-z0-9-]{0,61}[A-Za-z0-9])?$"
)


class IdentityError(ValueError):
    code = "invalid_identity"


class EmptyName(IdentityError):
    code = "empty_name"


class MalformedEmail(IdentityError):
    code = "malformed_email"


class InvalidAge(IdentityError):
    code = "invalid_age"


@dataclass(frozen=True)
class Identity:
    name: str
    email: str
    surname: Optional[str] = None
    age: Optional[int] = None

    def to_dict(self) -> dict:
        return {"name": self.name, "surname": self.surname, "age": self.age, "email": self.email}

    @classmethod
    def from_dict(cls, data: dict) -> Identity:
        return cls(name=data["name"], email=data["email"], surname=data.get("surname"), age=data.get("age"))


def validate_identity(
    name: str, surname: Optional[str], age: Optional[int], email: str
) -> Identity:
    """Check the submitter fields; no account or registration is involved."""
    name = (name or "").strip()
    if not name:
        raise EmptyName("name must not be empty")
    email = (email or "").strip()
    if len(email) > 254 or not _EMAIL_RE.match(email) or ".." in email.split("@", 1)[0]:
        raise MalformedEmail(f"not a mailbox address: {email!r}")
    if age is not None:
        if isinstance(age, bool) or not isinstance(age, int) or not 0 < age <= MAX_AGE:
            raise InvalidAge(f"age must be an integer in 1..{MAX_AGE}, got {age!r}")
    if surname is not None:
        surname = surname.strip() or None
    return Identity(name=name, email=email, surname=surname, age=age)


def canonical_ip(raw: str) -> str:
    """Canonical text form for v4/v6 addresses; other strings pass through trimmed."""
    raw = raw.strip()
    try:
        return str(ipaddress.ip_address(raw))
    except ValueError:
        return raw


@dataclass(frozen=True)
class PolicyConfig:
    min_interval_seconds: int = 30
    block_after_spam_count: int = 3
    spam_window_hours: int = 24
    block_duration_hours: int = 24

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def spam_window(self) -> timedelta:
        return timedelta(hours=self.spam_window_hours)

    @property
    def block_duration(self) -> timedelta:
        return timedelta(hours=self.block_duration_hours)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> PolicyConfig:
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown policy setting(s): {', '.join(sorted(unknown))}")
        return cls(**data)


def _ts(value: Optional[datetime]) -> Optional[str]:
    return None if value is None else value.isoformat()


def parse_timestamp(text: str) -> datetime:
    value = datetime.fromisoformat(text)
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value


@dataclass(frozen=True)
class IpRecord:
    ip: str
    last_submission: Optional[datetime] = None
    spam_events: tuple[datetime, ...] = field(default_factory=tuple)
    blocked_until: Optional[datetime] = None

    def to_dict(self) -> dict:
        return {
            "ip": self.ip,
            "last_submission": _ts(self.last_submission),
            "spam_events": [e.isoformat() for e in self.spam_events],
            "blocked_until": _ts(self.blocked_until),
        }

    @classmethod
    def from_dict(cls, data: dict) -> IpRecord:
        return cls(
            ip=data["ip"],
            last_submission=parse_timestamp(data["last_submission"]) if data.get("last_submission") else None,
            spam_events=tuple(parse_timestamp(e) for e in data.get("spam_events", ())),
            blocked_until=parse_timestamp(data["blocked_until"]) if data.get("blocked_until") else None,
        )


@dataclass(frozen=True)
class Allow:
    pass


@dataclass(frozen=True)
class TooSoon:
    retry_after_seconds: int


RateDecision = Union[Allow, TooSoon]


def check_rate(record: IpRecord, now: datetime, config: PolicyConfig) -> RateDecision:
    if record.last_submission is None:
        return Allow()
    elapsed = (now - record.last_submission).total_seconds()
    if elapsed < config.min_interval_seconds:
        return TooSoon(max(1, math.ceil(config.min_interval_seconds - elapsed)))
    return Allow()


def record_verdict(
    record: IpRecord, verdict: Union[Verdict, Label], now: datetime, config: PolicyConfig
) -> IpRecord:
    """Fold one classified submission into the IP's history.

    Reaching ``block_after_spam_count`` spam verdicts inside the trailing
    window blocks the address for ``block_duration_hours`` from ``now``.
    """
    label = verdict.label if isinstance(verdict, Verdict) else Label(verdict)
    cutoff = now - config.spam_window
    events = tuple(e for e in record.spam_events if e > cutoff)
    blocked_until = record.blocked_until
    if label is Label.SPAM:
        events = tuple(sorted(events + (now,)))
        if len(events) >= config.block_after_spam_count:
            blocked_until = now + config.block_duration
    return replace(record, last_submission=now, spam_events=events, blocked_until=blocked_until)


def is_blocked(record: IpRecord, now: datetime) -> bool:
    return record.blocked_until is not None and now < record.blocked_until
