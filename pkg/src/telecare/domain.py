"""Record types for the study's data classes and pseudonymous handles.

The identity record (D0) is the only type in the whole package that may
carry a name, address or phone number.  The sensed-data records (D1-D3)
are plain value types keyed by pseudonym at the storage layer; the outdoor
mobility types (D4) live in `telecare.mobility`.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from datetime import date, datetime, time
from enum import Enum
from typing import Any, ClassVar, Mapping

AGE_MIN = 18
AGE_MAX = 120

# Validation issue codes (stable strings, used in API error payloads).
EMPTY_FIELD = "EmptyField"
AGE_OUT_OF_RANGE = "AgeOutOfRange"
NO_CONTACTS = "NoContacts"
INVALID_FIELD = "InvalidField"


class DomainError(Exception):
    """Base class for domain validation failures."""


@dataclass(frozen=True)
class FieldIssue:
    code: str
    field: str

    def __str__(self) -> str:
        return f"{self.code}({self.field})"


class D0ValidationError(DomainError):
    def __init__(self, issues: list[FieldIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


class EntityRole(str, Enum):
    """The parties of the study, one role per principal."""

    HOS = "HOS"          # hospital, data controller
    UNIMI = "UniMi"      # data-analysis lab
    IIT = "IIT"          # infrastructure installation team
    IMT = "IMT"          # infrastructure monitoring team
    TELMED = "TelMed"    # blind storage/auth operator
    EXTERNAL = "External"


class Gender(str, Enum):
    FEMALE = "F"
    MALE = "M"
    OTHER = "other"

    @classmethod
    def parse(cls, raw: str) -> "Gender":
        norm = str(raw).strip().lower()
        if norm in ("f", "female"):
            return cls.FEMALE
        if norm in ("m", "male"):
            return cls.MALE
        if norm == "other":
            return cls.OTHER
        raise ValueError(f"unknown gender value: {raw!r}")


@dataclass(frozen=True)
class SubjectRecordId:
    """Internal enrollment sequence number; never leaves HOS-scoped responses."""

    value: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or self.value <= 0:
            raise DomainError(f"subject record id must be a positive integer, got {self.value!r}")


def canonical_bytes(record_id: SubjectRecordId) -> bytes:
    """Fixed-width 8-byte big-endian encoding; injective by construction."""
    return struct.pack(">Q", record_id.value)


@dataclass(frozen=True)
class Contact:
    name: str
    phone: str


@dataclass(frozen=True)
class SubjectIdentity:
    """D0: the identifying record, held by the hospital and the installers only."""

    WIRE_TYPE: ClassVar[str] = "subject_identity"

    first_name: str
    last_name: str
    age: int
    gender: Gender
    address: str
    contacts: tuple[Contact, ...]
    general_notes: str = ""
    apartment_map: str | None = None  # attachment reference, not the drawing itself

    def as_fields(self) -> dict[str, Any]:
        return {
            "first_name": self.first_name,
            "last_name": self.last_name,
            "age": self.age,
            "gender": self.gender.value,
            "address": self.address,
            "contacts": [{"name": c.name, "phone": c.phone} for c in self.contacts],
            "general_notes": self.general_notes,
            "apartment_map": self.apartment_map,
        }

    def identity_strings(self) -> list[str]:
        """Every string that would identify the subject if leaked verbatim."""
        out = [self.first_name, self.last_name, f"{self.first_name} {self.last_name}", self.address]
        for c in self.contacts:
            out.extend([c.name, c.phone])
        return [s for s in out if s]


def validate_d0(candidate: Mapping[str, Any] | SubjectIdentity) -> SubjectIdentity:
    """Validate a raw D0 field map, returning the typed record.

    Collects every violated invariant instead of stopping at the first, and
    raises D0ValidationError carrying the full issue list.  Validating an
    already-valid record is the identity.
    """
    if isinstance(candidate, SubjectIdentity):
        raw: Mapping[str, Any] = candidate.as_fields()
    else:
        raw = candidate

    issues: list[FieldIssue] = []

    def text(name: str) -> str:
        value = raw.get(name)
        if value is None or not str(value).strip():
            issues.append(FieldIssue(EMPTY_FIELD, name))
            return ""
        return str(value).strip()

    first_name = text("first_name")
    last_name = text("last_name")
    address = text("address")

    age_raw = raw.get("age")
    age = 0
    try:
        age = int(age_raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        issues.append(FieldIssue(INVALID_FIELD, "age"))
    else:
        if not AGE_MIN <= age <= AGE_MAX:
            issues.append(FieldIssue(AGE_OUT_OF_RANGE, "age"))

    gender = Gender.OTHER
    try:
        gender = Gender.parse(raw.get("gender", ""))
    except ValueError:
        issues.append(FieldIssue(INVALID_FIELD, "gender"))

    contacts: list[Contact] = []
    raw_contacts = raw.get("contacts") or []
    if not raw_contacts:
        issues.append(FieldIssue(NO_CONTACTS, "contacts"))
    else:
        for entry in raw_contacts:
            try:
                if isinstance(entry, Contact):
                    name, phone = entry.name, entry.phone
                elif isinstance(entry, Mapping):
                    name, phone = str(entry["name"]), str(entry["phone"])
                else:
                    name, phone = str(entry[0]), str(entry[1])
            except (KeyError, IndexError, TypeError):
                issues.append(FieldIssue(INVALID_FIELD, "contacts"))
                continue
            if not name.strip() or not phone.strip():
                issues.append(FieldIssue(INVALID_FIELD, "contacts"))
                continue
            contacts.append(Contact(name.strip(), phone.strip()))
        if raw_contacts and not contacts and not any(i.code == NO_CONTACTS for i in issues):
            issues.append(FieldIssue(NO_CONTACTS, "contacts"))

    if issues:
        raise D0ValidationError(issues)

    return SubjectIdentity(
        first_name=first_name,
        last_name=last_name,
        age=age,
        gender=gender,
        address=address,
        contacts=tuple(contacts),
        general_notes=str(raw.get("general_notes") or ""),
        apartment_map=raw.get("apartment_map"),
    )


class BreathingQuality(str, Enum):
    NORMAL = "normal"
    SNORING = "snoring"
    APNEA = "apnea"


@dataclass(frozen=True)
class WearableDaily:
    """D1: one merged row per day from the wearable, sleep and brushing sources."""

    WIRE_TYPE: ClassVar[str] = "wearable_daily"

    date: date
    steps: int
    avg_heart_rate: float
    sleep_duration: int        # minutes
    sleep_quality: int         # 0-100
    breathing_quality: BreathingQuality
    brushing_time: time
    brushing_duration: int     # seconds

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise DomainError("steps must be non-negative")
        if not 0 <= self.sleep_duration <= 1440:
            raise DomainError("sleep_duration must be within one day")
        if not 0 <= self.sleep_quality <= 100:
            raise DomainError("sleep_quality must be a 0-100 score")
        if self.brushing_duration < 0:
            raise DomainError("brushing_duration must be non-negative")

    def as_fields(self) -> dict[str, Any]:
        return {
            "date": self.date.isoformat(),
            "steps": self.steps,
            "avg_heart_rate": self.avg_heart_rate,
            "sleep_duration": self.sleep_duration,
            "sleep_quality": self.sleep_quality,
            "breathing_quality": self.breathing_quality.value,
            "brushing_time": self.brushing_time.isoformat(),
            "brushing_duration": self.brushing_duration,
        }

    @classmethod
    def from_fields(cls, fields: Mapping[str, Any]) -> "WearableDaily":
        return cls(
            date=date.fromisoformat(fields["date"]),
            steps=int(fields["steps"]),
            avg_heart_rate=float(fields["avg_heart_rate"]),
            sleep_duration=int(fields["sleep_duration"]),
            sleep_quality=int(fields["sleep_quality"]),
            breathing_quality=BreathingQuality(fields["breathing_quality"]),
            brushing_time=time.fromisoformat(fields["brushing_time"]),
            brushing_duration=int(fields["brushing_duration"]),
        )


class ReportKind(str, Enum):
    MONTHLY_MMSE = "monthly_mmse"
    WEEKLY_TEST = "weekly_test"
    COMPLIANCE = "compliance"


@dataclass(frozen=True)
class CognitiveReport:
    """D2: tablet-administered cognitive test reports and compliance entries."""

    WIRE_TYPE: ClassVar[str] = "cognitive_report"

    kind: ReportKind
    date_time: datetime
    payload: str
    completed: bool

    def as_fields(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "date_time": self.date_time.isoformat(),
            "payload": self.payload,
            "completed": self.completed,
        }

    @classmethod
    def from_fields(cls, fields: Mapping[str, Any]) -> "CognitiveReport":
        return cls(
            kind=ReportKind(fields["kind"]),
            date_time=datetime.fromisoformat(fields["date_time"]),
            payload=str(fields["payload"]),
            completed=bool(fields["completed"]),
        )


class EnvEventKind(str, Enum):
    PRESENCE = "presence"
    APPLIANCE_ON = "appliance_on"
    APPLIANCE_OFF = "appliance_off"
    TEMP_HUMIDITY = "temp_humidity"
    OPEN = "open"
    CLOSE = "close"


@dataclass(frozen=True)
class EnvEvent:
    """D3: a single environmental sensor reading."""

    WIRE_TYPE: ClassVar[str] = "env_event"

    timestamp: datetime
    sensor_id: str
    kind: EnvEventKind
    value: float | None = None

    def as_fields(self) -> dict[str, Any]:
        return {
            "timestamp": self.timestamp.isoformat(),
            "sensor_id": self.sensor_id,
            "kind": self.kind.value,
            "value": self.value,
        }

    @classmethod
    def from_fields(cls, fields: Mapping[str, Any]) -> "EnvEvent":
        value = fields.get("value")
        return cls(
            timestamp=datetime.fromisoformat(fields["timestamp"]),
            sensor_id=str(fields["sensor_id"]),
            kind=EnvEventKind(fields["kind"]),
            value=None if value is None else float(value),
        )


SensedRecord = WearableDaily | CognitiveReport | EnvEvent

_RECORD_TYPES: dict[str, type] = {
    WearableDaily.WIRE_TYPE: WearableDaily,
    CognitiveReport.WIRE_TYPE: CognitiveReport,
    EnvEvent.WIRE_TYPE: EnvEvent,
}


def sensed_record_from_wire(wire_type: str, fields: Mapping[str, Any]) -> SensedRecord:
    try:
        record_cls = _RECORD_TYPES[wire_type]
    except KeyError:
        raise DomainError(f"unknown sensed record type: {wire_type!r}") from None
    return record_cls.from_fields(fields)


_PID_RE = re.compile(r"^[0-9a-f]+$")
_INSTALLATION_RE = re.compile(r"^I-\d{4,}$")


@dataclass(frozen=True)
class Pid:
    """Pseudonym handle: lowercase hex of nonce || ciphertext || auth tag."""

    value: str

    def __post_init__(self) -> None:
        if not self.value or len(self.value) % 2 or not _PID_RE.match(self.value):
            raise DomainError("pid must be non-empty lowercase hex of even length")


@dataclass(frozen=True)
class Alias:
    """Short proper-name surrogate for a PID, for human-facing views."""

    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise DomainError("alias must be non-empty")


@dataclass(frozen=True)
class InstallationNumber:
    """Handle for one home installation, shared between installers and monitors."""

    value: str

    def __post_init__(self) -> None:
        if not _INSTALLATION_RE.match(self.value):
            raise DomainError(f"installation number must look like I-0001, got {self.value!r}")
