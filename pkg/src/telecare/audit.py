"""Tamper-evident access log.

Every granted or refused access lands here as one TSV line whose digest
chains over the previous line, so editing, deleting or reordering history
is detectable by anyone holding the file. The log itself is ruled by the
same who-sees-what discipline: only the hospital role may read it, and
reading it is itself a logged access.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

from .domain import EntityRole

GENESIS = b"\x00" * 32


class AccessType(str, Enum):
    LOGIN = "login"
    ACCESS_ALLOWED = "access_allowed"
    ACCESS_DENIED = "access_denied"
    MAPPING_READ = "mapping_read"
    DATA_DOWNLOAD = "data_download"
    DIAGNOSTIC_READ = "diagnostic_read"
    RETENTION_PURGE = "retention_purge"
    ANONYMIZATION = "anonymization"


class AuditError(Exception):
    pass


class AuditQueryDenied(AuditError):
    pass


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    ts: str           # ISO 8601, always timezone-aware
    entity_id: str
    access_type: AccessType
    resource: str
    digest: str       # hex sha256 over this record and the previous digest

    def line(self) -> str:
        return "\t".join(
            [str(self.seq), self.ts, self.entity_id, self.access_type.value, self.resource, self.digest]
        )


@dataclass(frozen=True)
class ChainOk:
    length: int


@dataclass(frozen=True)
class FirstBadIndex:
    index: int


ChainStatus = ChainOk | FirstBadIndex


def _digest(seq: int, ts: str, entity_id: str, access_type: str, resource: str, prev: bytes) -> str:
    payload = f"{seq}\t{ts}\t{entity_id}\t{access_type}\t{resource}".encode("utf-8")
    return hashlib.sha256(payload + prev).hexdigest()


def _normalize_ts(ts: datetime | None) -> str:
    if ts is None:
        ts = datetime.now(timezone.utc)
    elif ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.isoformat()


def _check_field(value: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise ValueError(f"audit field may not contain separators: {value!r}")
    return value


class AuditLog:
    """Append-only, hash-chained log over a single TSV file."""

    def __init__(self, path: str):
        self.path = path
        self.recovered_torn_line = False
        self._records: list[AuditRecord] = []
        self._prev = GENESIS
        self._load()

    def _load(self) -> None:
        if not os.path.exists(self.path):
            return
        with open(self.path, "r", encoding="utf-8") as fh:
            raw = fh.read()
        lines = raw.split("\n")
        torn = None
        if lines and lines[-1] == "":
            lines.pop()
        elif lines:
            # file does not end in a newline: the last append was cut short
            torn = lines.pop()
        for line in lines:
            record = self._parse(line)
            if record is None:
                raise AuditError(f"unreadable audit line {len(self._records)} in {self.path}")
            self._records.append(record)
            self._prev = bytes.fromhex(record.digest)
        if torn is not None:
            self.recovered_torn_line = True
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.writelines(r.line() + "\n" for r in self._records)

    @staticmethod
    def _parse(line: str) -> AuditRecord | None:
        parts = line.split("\t")
        if len(parts) != 6:
            return None
        try:
            return AuditRecord(
                seq=int(parts[0]),
                ts=parts[1],
                entity_id=parts[2],
                access_type=AccessType(parts[3]),
                resource=parts[4],
                digest=parts[5],
            )
        except (ValueError, KeyError):
            return None

    def append(
        self,
        entity_id: str,
        access_type: AccessType,
        resource: str,
        ts: datetime | None = None,
    ) -> AuditRecord:
        record = AuditRecord(
            seq=len(self._records),
            ts=_normalize_ts(ts),
            entity_id=_check_field(entity_id),
            access_type=access_type,
            resource=_check_field(resource),
            digest="",
        )
        digest = _digest(record.seq, record.ts, record.entity_id, record.access_type.value, record.resource, self._prev)
        record = AuditRecord(record.seq, record.ts, record.entity_id, record.access_type, record.resource, digest)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(record.line() + "\n")
            fh.flush()
        self._records.append(record)
        self._prev = bytes.fromhex(digest)
        return record

    def records(self) -> list[AuditRecord]:
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def verify_chain(self) -> ChainStatus:
        return verify_chain_file(self.path)

    def query(
        self,
        requesting_entity: str,
        requesting_role: EntityRole | str,
        *,
        entity: str | None = None,
        access_type: AccessType | None = None,
        since: datetime | None = None,
        until: datetime | None = None,
        ts: datetime | None = None,
    ) -> list[AuditRecord]:
        """HOS-only read over the log; the read itself becomes a log entry."""
        try:
            role = EntityRole(requesting_role)
        except ValueError:
            role = None
        if role is not EntityRole.HOS:
            self.append(requesting_entity, AccessType.ACCESS_DENIED, "audit_log", ts)
            raise AuditQueryDenied(f"role {requesting_role} may not read the audit log")
        snapshot = list(self._records)
        self.append(requesting_entity, AccessType.ACCESS_ALLOWED, "audit_log", ts)
        out = []
        for record in snapshot:
            if entity is not None and record.entity_id != entity:
                continue
            if access_type is not None and record.access_type != access_type:
                continue
            if since is not None or until is not None:
                stamp = datetime.fromisoformat(record.ts)
                if since is not None and stamp < _as_aware(since):
                    continue
                if until is not None and stamp > _as_aware(until):
                    continue
            out.append(record)
        return out


def _as_aware(ts: datetime) -> datetime:
    return ts.replace(tzinfo=timezone.utc) if ts.tzinfo is None else ts


def verify_chain_file(path: str) -> ChainStatus:
    """Recompute the whole chain from disk; cheap relative to study sizes."""
    if not os.path.exists(path):
        return ChainOk(0)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().split("\n") if line]
    prev = GENESIS
    for index, line in enumerate(lines):
        record = AuditLog._parse(line)
        if record is None or record.seq != index:
            return FirstBadIndex(index)
        expected = _digest(record.seq, record.ts, record.entity_id, record.access_type.value, record.resource, prev)
        if expected != record.digest:
            return FirstBadIndex(index)
        prev = bytes.fromhex(record.digest)
    return ChainOk(len(lines))
