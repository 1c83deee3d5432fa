"""The in-home gateway: short local buffer, strict clock window, batched sync.

The gateway is the only place sensed records exist before they reach the
study store, and it holds them for one month at most.  Sync is built to
survive a flaky uplink: a formed batch keeps its content and batch id
until the receiving side acknowledges it, so retransmissions are exact
duplicates the receiver can drop, and a run with outages converges to the
same stored state as a run without them.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from typing import Any, Callable

from .audit import AccessType, AuditLog
from .domain import (
    CognitiveReport,
    EntityRole,
    EnvEvent,
    InstallationNumber,
    Pid,
    SensedRecord,
    WearableDaily,
)
from .rbac import DIAGNOSTIC_READ, AccessDenied, DataClass, check

CLOCK_WINDOW = timedelta(hours=24)
RETENTION = timedelta(days=30)
DIAGNOSTIC_PEEK_CAP = 50


class HomeGwError(Exception):
    pass


class ClockSkew(HomeGwError):
    """Record timestamp is implausibly far from the gateway clock."""


@dataclass(frozen=True)
class RetentionPolicy:
    horizon_days: int = 30

    def __post_init__(self) -> None:
        if self.horizon_days < 1:
            raise HomeGwError("retention horizon must be at least one day")

    @property
    def horizon(self) -> timedelta:
        return timedelta(days=self.horizon_days)


def record_ts(record: SensedRecord) -> datetime:
    if isinstance(record, WearableDaily):
        return datetime.combine(record.date, time(0), tzinfo=timezone.utc)
    stamp = record.date_time if isinstance(record, CognitiveReport) else record.timestamp
    return stamp if stamp.tzinfo else stamp.replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class SyncBatch:
    batch_id: str
    pid: str
    produced_at: str                 # formation time, stable across retries
    messages: tuple[dict[str, Any], ...]

    def payload(self) -> dict[str, Any]:
        return {
            "parts": [
                {"type": "sync_meta", "fields": {"pid": self.pid, "batch_id": self.batch_id}},
                *self.messages,
            ]
        }


@dataclass(frozen=True)
class SyncOutcome:
    sent: bool
    acked: bool
    batch_id: str | None
    record_count: int


# transport contract: True = delivered and acknowledged, False = delivered
# but the acknowledgment was lost; raising OSError means nothing arrived
Transport = Callable[[SyncBatch], bool]


@dataclass
class _Entry:
    seq: int
    record: SensedRecord
    synced: bool = False

    def sort_key(self) -> tuple[str, str, int]:
        return (type(self.record).WIRE_TYPE, record_ts(self.record).isoformat(), self.seq)


class HomeGateway:
    def __init__(
        self,
        pid: Pid,
        i_number: InstallationNumber,
        audit: AuditLog,
        retention: RetentionPolicy = RetentionPolicy(),
    ):
        self.pid = pid
        self.i_number = i_number
        self.retention = retention
        self._audit = audit
        self._d1: dict[date, _Entry] = {}
        self._other: list[_Entry] = []
        self._seq = 0
        self._batch_seq = 0
        self._pending: SyncBatch | None = None
        self._pending_seqs: tuple[int, ...] = ()

    # -- local store --

    def ingest(self, record: SensedRecord, now: datetime) -> None:
        stamp = record_ts(record)
        if abs(now - stamp) > CLOCK_WINDOW:
            raise ClockSkew(
                f"record at {stamp.isoformat()} vs gateway clock {now.isoformat()}"
            )
        entry = _Entry(self._seq, record)
        self._seq += 1
        if isinstance(record, WearableDaily):
            # one merged row per day; a later arrival for the same day wins
            self._d1[record.date] = entry
        else:
            self._other.append(entry)

    def _entries(self) -> list[_Entry]:
        return sorted(list(self._d1.values()) + self._other, key=_Entry.sort_key)

    def records(self) -> list[SensedRecord]:
        return [e.record for e in self._entries()]

    def unsynced_count(self) -> int:
        return sum(1 for e in self._entries() if not e.synced)

    # -- retention --

    def purge_expired(self, now: datetime) -> int:
        horizon = now - self.retention.horizon
        stale_d1 = [d for d, e in self._d1.items() if record_ts(e.record) < horizon]
        for d in stale_d1:
            del self._d1[d]
        before = len(self._other)
        self._other = [e for e in self._other if record_ts(e.record) >= horizon]
        removed = len(stale_d1) + before - len(self._other)
        if removed:
            self._audit.append(
                f"homegw:{self.i_number.value}",
                AccessType.RETENTION_PURGE,
                f"gw:{self.i_number.value}:removed={removed}",
                now,
            )
        return removed

    # -- sync --

    def pending_batch(self) -> SyncBatch | None:
        return self._pending

    def sync(self, transport: Transport, now: datetime) -> SyncOutcome:
        if self._pending is None:
            unsynced = [e for e in self._entries() if not e.synced]
            if not unsynced:
                return SyncOutcome(sent=False, acked=False, batch_id=None, record_count=0)
            self._batch_seq += 1
            self._pending = SyncBatch(
                batch_id=f"{self.i_number.value}:b{self._batch_seq}",
                pid=self.pid.value,
                produced_at=now.isoformat(),
                messages=tuple(
                    {"type": type(e.record).WIRE_TYPE, "fields": e.record.as_fields()}
                    for e in unsynced
                ),
            )
            self._pending_seqs = tuple(e.seq for e in unsynced)
        batch = self._pending
        try:
            acked = transport(batch)
        except OSError:
            return SyncOutcome(sent=False, acked=False, batch_id=batch.batch_id,
                               record_count=len(batch.messages))
        if not acked:
            return SyncOutcome(sent=True, acked=False, batch_id=batch.batch_id,
                               record_count=len(batch.messages))
        delivered = set(self._pending_seqs)
        for entry in self._entries():
            if entry.seq in delivered:
                entry.synced = True
        self._pending = None
        self._pending_seqs = ()
        return SyncOutcome(sent=True, acked=True, batch_id=batch.batch_id,
                           record_count=len(batch.messages))

    # -- support access --

    def diagnostic_peek(
        self, actor_id: str, role: EntityRole, n: int, now: datetime
    ) -> list[dict[str, Any]]:
        """Last n environmental events, for remote troubleshooting only.

        Capped at 50 and limited to the ambient-sensor class: enough to
        judge whether the installation is alive, nothing resembling a
        health record. Every peek leaves its own audit type.
        """
        resource = f"gw:{self.i_number.value}:diagnostic"
        if not check(role, DIAGNOSTIC_READ, DataClass.D3):
            self._audit.append(actor_id, AccessType.ACCESS_DENIED, resource, now)
            raise AccessDenied(role, DIAGNOSTIC_READ, DataClass.D3)
        n = max(0, min(n, DIAGNOSTIC_PEEK_CAP))
        events = [e.record for e in self._entries() if isinstance(e.record, EnvEvent)]
        recent = events[-n:] if n else []
        out = [{"type": EnvEvent.WIRE_TYPE, "fields": r.as_fields()} for r in recent]
        self._audit.append(
            actor_id, AccessType.DIAGNOSTIC_READ, f"{resource}:n={len(out)}", now
        )
        return out
