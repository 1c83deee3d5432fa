"""Central storage, split into a hospital enclave and a pseudonymous study side.

The hospital side holds the identity records and the mapping table; every
mapping row is sealed with a storage key and bound to its PID, so a row
copied next to a different PID fails to open.  The study side holds only
pseudonymous material: sensed records, subject profiles reduced to coarse
bands, and result reports.  Ending the study deletes the hospital side,
flips the state to anonymized, and reports the equivalence-class sizes of
what remains.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Callable, Iterable, Mapping

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .audit import AccessType, AuditLog
from .domain import (
    EntityRole,
    Pid,
    SubjectIdentity,
    SubjectRecordId,
    canonical_bytes,
    validate_d0,
)
from .pseudonym import MASTER_KEY_LEN, AuthFailure, KeyLoadError

ACTIVE = "active"
ANONYMIZED = "anonymized"


class CentralError(Exception):
    pass


class MappingAccessDenied(CentralError):
    pass


class StudyAnonymized(CentralError):
    pass


class UnknownSubject(CentralError):
    pass


def age_band(age: int) -> str:
    low = (age // 10) * 10
    return f"{low}-{low + 9}"


@dataclass(frozen=True)
class StoredRecord:
    pid: str
    wire_type: str
    fields: dict[str, Any]


@dataclass(frozen=True)
class BatchResult:
    accepted: bool
    duplicate: bool
    record_count: int


@dataclass(frozen=True)
class AnonymizationReport:
    mapping_rows_deleted: int
    identities_deleted: int
    equivalence_classes: list[dict[str, Any]]
    k: int
    singleton_classes: int


class CentralStore:
    def __init__(self, root: str, storage_key: bytes, audit: AuditLog,
                 nonce_source: Callable[[int], bytes] | None = None):
        if len(storage_key) != MASTER_KEY_LEN:
            raise KeyLoadError(f"storage key must be {MASTER_KEY_LEN} bytes")
        self.root = root
        self._aead = AESGCM(storage_key)
        self._audit = audit
        self._nonce_source = nonce_source or os.urandom
        self._hospital = os.path.join(root, "hospital")
        self._study = os.path.join(root, "study")
        os.makedirs(self._hospital, exist_ok=True)
        os.makedirs(self._study, exist_ok=True)

        self._identities: dict[int, dict[str, Any]] = {}
        self._mapping: dict[str, str] = {}            # pid -> sealed hex
        self._batches: set[tuple[str, str]] = set()
        self._d1: dict[tuple[str, str], StoredRecord] = {}   # (pid, date) -> record
        self._other_records: list[StoredRecord] = []
        self._profiles: dict[str, dict[str, Any]] = {}
        self._results: list[dict[str, Any]] = []
        self._state = ACTIVE
        self._load()

    # -- paths --

    def _path(self, side: str, name: str) -> str:
        return os.path.join(self._hospital if side == "hospital" else self._study, name)

    def study_files(self) -> list[str]:
        out = []
        for base, _dirs, files in os.walk(self._study):
            out.extend(os.path.join(base, f) for f in sorted(files))
        return sorted(out)

    # -- persistence --

    def _load(self) -> None:
        ident_path = self._path("hospital", "identities.jsonl")
        if os.path.exists(ident_path):
            for line in open(ident_path, encoding="utf-8"):
                row = json.loads(line)
                self._identities[int(row["record_id"])] = row["fields"]
        map_path = self._path("hospital", "mapping.tsv")
        if os.path.exists(map_path):
            for line in open(map_path, encoding="utf-8"):
                pid, sealed = line.rstrip("\n").split("\t")
                self._mapping[pid] = sealed
        batch_path = self._path("study", "batches.tsv")
        if os.path.exists(batch_path):
            for line in open(batch_path, encoding="utf-8"):
                pid, batch_id = line.rstrip("\n").split("\t")
                self._batches.add((pid, batch_id))
        rec_path = self._path("study", "records.jsonl")
        if os.path.exists(rec_path):
            for line in open(rec_path, encoding="utf-8"):
                row = json.loads(line)
                self._absorb(StoredRecord(row["pid"], row["type"], row["fields"]))
        prof_path = self._path("study", "profiles.jsonl")
        if os.path.exists(prof_path):
            for line in open(prof_path, encoding="utf-8"):
                row = json.loads(line)
                self._profiles[row["pid"]] = row
        res_path = self._path("study", "results.jsonl")
        if os.path.exists(res_path):
            self._results = [json.loads(line) for line in open(res_path, encoding="utf-8")]
        state_path = os.path.join(self.root, "state.json")
        if os.path.exists(state_path):
            self._state = json.load(open(state_path, encoding="utf-8"))["study_state"]

    def _append(self, side: str, name: str, line: str) -> None:
        with open(self._path(side, name), "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def _write_state(self) -> None:
        with open(os.path.join(self.root, "state.json"), "w", encoding="utf-8") as fh:
            json.dump({"study_state": self._state}, fh)

    # -- study state --

    @property
    def study_state(self) -> str:
        return self._state

    def _require_active(self) -> None:
        if self._state != ACTIVE:
            raise StudyAnonymized("the study has been anonymized")

    # -- hospital enclave --

    def store_identity(self, record_id: SubjectRecordId, identity: SubjectIdentity) -> None:
        self._require_active()
        fields = identity.as_fields()
        self._identities[record_id.value] = fields
        self._append("hospital", "identities.jsonl",
                     json.dumps({"record_id": record_id.value, "fields": fields}, sort_keys=True))

    def store_mapping(self, pid: Pid, record_id: SubjectRecordId, actor_id: str, ts: datetime) -> None:
        self._require_active()
        nonce = self._nonce_source(12)
        sealed = nonce + self._aead.encrypt(nonce, canonical_bytes(record_id), pid.value.encode("ascii"))
        self._mapping[pid.value] = sealed.hex()
        self._append("hospital", "mapping.tsv", f"{pid.value}\t{sealed.hex()}")
        self._audit.append(actor_id, AccessType.ACCESS_ALLOWED, "mapping_table", ts)

    def unseal(self, pid: Pid, actor_id: str, role: EntityRole, ts: datetime) -> SubjectRecordId:
        """The only road from a PID back to an enrollment record id."""
        if role is not EntityRole.HOS:
            self._audit.append(actor_id, AccessType.ACCESS_DENIED, f"mapping:{pid.value[:12]}", ts)
            raise MappingAccessDenied(f"{role.value} may not open the mapping table")
        self._require_active()
        sealed_hex = self._mapping.get(pid.value)
        if sealed_hex is None:
            raise UnknownSubject(f"no mapping row for pid {pid.value[:12]}…")
        sealed = bytes.fromhex(sealed_hex)
        try:
            plain = self._aead.decrypt(sealed[:12], sealed[12:], pid.value.encode("ascii"))
        except InvalidTag:
            raise AuthFailure("mapping row failed authentication") from None
        self._audit.append(actor_id, AccessType.MAPPING_READ, f"mapping:{pid.value[:12]}", ts)
        return SubjectRecordId(int.from_bytes(plain, "big"))

    def reassociate(self, pid: Pid, actor_id: str, role: EntityRole, ts: datetime) -> SubjectIdentity:
        record_id = self.unseal(pid, actor_id, role, ts)
        try:
            fields = self._identities[record_id.value]
        except KeyError:
            raise UnknownSubject(f"no identity record {record_id.value}") from None
        return validate_d0(fields)

    def identity_count(self) -> int:
        return len(self._identities)

    def mapping_count(self) -> int:
        return len(self._mapping)

    def pids(self) -> list[str]:
        return sorted(self._profiles)

    # -- study side: profiles --

    def store_profile(self, pid: Pid, alias: str, identity: SubjectIdentity, ts: datetime) -> None:
        self._require_active()
        row = {
            "pid": pid.value,
            "alias": alias,
            "age_band": age_band(identity.age),
            "gender_group": identity.gender.value,
            "notes": identity.general_notes,
        }
        self._profiles[pid.value] = row
        self._append("study", "profiles.jsonl", json.dumps(row, sort_keys=True))

    def profile(self, pid: Pid) -> dict[str, Any]:
        try:
            return dict(self._profiles[pid.value])
        except KeyError:
            raise UnknownSubject(f"no profile for pid {pid.value[:12]}…") from None

    # -- study side: sensed records --

    def _absorb(self, record: StoredRecord) -> None:
        if record.wire_type == "wearable_daily":
            self._d1[(record.pid, record.fields["date"])] = record
        else:
            self._other_records.append(record)

    def receive_batch(self, payload: Mapping[str, Any], ts: datetime) -> BatchResult:
        self._require_active()
        parts = payload["parts"]
        meta = parts[0]
        if meta.get("type") != "sync_meta":
            raise CentralError("batch payload must lead with sync_meta")
        pid = meta["fields"]["pid"]
        batch_id = meta["fields"]["batch_id"]
        if (pid, batch_id) in self._batches:
            return BatchResult(accepted=False, duplicate=True, record_count=0)
        count = 0
        for part in parts[1:]:
            record = StoredRecord(pid, part["type"], dict(part["fields"]))
            self._absorb(record)
            self._append("study", "records.jsonl",
                         json.dumps({"pid": pid, "type": record.wire_type, "fields": record.fields},
                                    sort_keys=True))
            count += 1
        self._batches.add((pid, batch_id))
        self._append("study", "batches.tsv", f"{pid}\t{batch_id}")
        return BatchResult(accepted=True, duplicate=False, record_count=count)

    def records_for(self, pid: Pid | str, wire_type: str | None = None) -> list[StoredRecord]:
        value = pid.value if isinstance(pid, Pid) else pid
        rows = [r for r in self._d1.values() if r.pid == value]
        rows += [r for r in self._other_records if r.pid == value]
        if wire_type is not None:
            rows = [r for r in rows if r.wire_type == wire_type]
        return sorted(rows, key=lambda r: (r.wire_type, json.dumps(r.fields, sort_keys=True)))

    def record_counts(self, pid: Pid | str) -> dict[str, int]:
        counts: dict[str, int] = {}
        for row in self.records_for(pid):
            counts[row.wire_type] = counts.get(row.wire_type, 0) + 1
        return counts

    def canonical_record_dump(self) -> str:
        """Stable serialization of all sensed records, for state comparison."""
        rows = sorted(
            ({"pid": r.pid, "type": r.wire_type, "fields": r.fields}
             for r in list(self._d1.values()) + self._other_records),
            key=lambda row: json.dumps(row, sort_keys=True),
        )
        return json.dumps(rows, sort_keys=True)

    # -- study side: results --

    def store_result(self, pid: Pid, result_type: str, fields: Mapping[str, Any], ts: datetime) -> None:
        if result_type not in ("mobility_report", "analysis_results"):
            raise CentralError(f"unknown result type {result_type!r}")
        row = {"pid": pid.value, "type": result_type, "fields": dict(fields), "stored_at": ts.isoformat()}
        self._results.append(row)
        self._append("study", "results.jsonl", json.dumps(row, sort_keys=True))

    def results_for(self, pid: Pid | str, result_type: str | None = None) -> list[dict[str, Any]]:
        value = pid.value if isinstance(pid, Pid) else pid
        rows = [r for r in self._results if r["pid"] == value]
        if result_type is not None:
            rows = [r for r in rows if r["type"] == result_type]
        return [dict(r) for r in rows]

    # -- end of study --

    def residual_risk(self) -> tuple[list[dict[str, Any]], int, int]:
        """Equivalence classes of the retained profiles over (age band, gender)."""
        groups: dict[tuple[str, str], int] = {}
        for row in self._profiles.values():
            key = (row["age_band"], row["gender_group"])
            groups[key] = groups.get(key, 0) + 1
        classes = [
            {"age_band": band, "gender_group": gender, "count": count}
            for (band, gender), count in sorted(groups.items())
        ]
        k = min(groups.values()) if groups else 0
        singletons = sum(1 for c in classes if c["count"] == 1)
        return classes, k, singletons

    def anonymize(self, actor_id: str, role: EntityRole, ts: datetime) -> AnonymizationReport:
        if role is not EntityRole.HOS:
            self._audit.append(actor_id, AccessType.ACCESS_DENIED, "anonymization", ts)
            raise MappingAccessDenied(f"{role.value} may not end the study")
        self._require_active()
        mapping_rows = len(self._mapping)
        identities = len(self._identities)

        self._mapping.clear()
        self._identities.clear()
        for name in ("mapping.tsv", "identities.jsonl"):
            path = self._path("hospital", name)
            if os.path.exists(path):
                os.remove(path)
        self._state = ANONYMIZED
        self._write_state()

        classes, k, singletons = self.residual_risk()
        report = AnonymizationReport(
            mapping_rows_deleted=mapping_rows,
            identities_deleted=identities,
            equivalence_classes=classes,
            k=k,
            singleton_classes=singletons,
        )
        with open(self._path("study", "residual_risk.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "mapping_rows_deleted": mapping_rows,
                    "identities_deleted": identities,
                    "equivalence_classes": classes,
                    "k": k,
                    "singleton_classes": singletons,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
        self._audit.append(actor_id, AccessType.ANONYMIZATION, f"study:deleted={mapping_rows}", ts)
        return report

    # -- leak scanning --

    def scan_study_bytes(self, needles: Iterable[str]) -> list[tuple[str, str]]:
        """Substring-search every study-side file for the given identity strings."""
        hits: list[tuple[str, str]] = []
        blobs = {path: open(path, "rb").read() for path in self.study_files()}
        for needle in needles:
            raw = needle.encode("utf-8")
            for path, blob in blobs.items():
                if raw and raw in blob:
                    hits.append((path, needle))
        return hits
