"""Who may touch which class of data, decided the same way everywhere.

The matrix below is the single source of truth for the separation of
duties: the analysis lab never sees identities, the installers never see
sensed data, the monitors see infrastructure metadata plus a logged
diagnostic peek at environmental events, and the storage operator sees
nothing at all.  Every authorization decision leaves exactly one audit
record; unattributable requests (bad tokens) raise without logging since
there is no entity to charge them to.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping

from .audit import AccessType, AuditLog
from .domain import EntityRole


class DataClass(str, Enum):
    D0_IDENTITY = "D0_identity"
    D0_NOTES = "D0_notes"
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"
    D4_RAW = "D4_raw"
    D4_RESULTS = "D4_results"
    ANALYSIS_RESULTS = "AnalysisResults"
    INFRA_META = "InfraMeta"
    MAPPING_TABLE = "MappingTable"


ALL_CLASSES = frozenset(DataClass)

READ = "read"
WRITE = "write"
DIAGNOSTIC_READ = "diagnostic_read"
_ACTIONS = (READ, WRITE, DIAGNOSTIC_READ)

# role -> action -> readable/writable classes; absence means denied
_MATRIX: dict[EntityRole, dict[str, frozenset[DataClass]]] = {
    EntityRole.HOS: {
        READ: ALL_CLASSES,
        WRITE: ALL_CLASSES,
        DIAGNOSTIC_READ: frozenset(),
    },
    EntityRole.UNIMI: {
        READ: frozenset(
            {DataClass.D1, DataClass.D2, DataClass.D3, DataClass.D0_NOTES, DataClass.D4_RESULTS}
        ),
        WRITE: frozenset({DataClass.ANALYSIS_RESULTS}),
        DIAGNOSTIC_READ: frozenset(),
    },
    EntityRole.IIT: {
        READ: frozenset({DataClass.D0_IDENTITY, DataClass.D0_NOTES, DataClass.INFRA_META}),
        WRITE: frozenset({DataClass.D0_IDENTITY, DataClass.D0_NOTES, DataClass.INFRA_META}),
        DIAGNOSTIC_READ: frozenset(),
    },
    EntityRole.IMT: {
        READ: frozenset({DataClass.INFRA_META}),
        WRITE: frozenset({DataClass.INFRA_META}),
        DIAGNOSTIC_READ: frozenset({DataClass.D3}),
    },
    EntityRole.TELMED: {READ: frozenset(), WRITE: frozenset(), DIAGNOSTIC_READ: frozenset()},
    EntityRole.EXTERNAL: {READ: frozenset(), WRITE: frozenset(), DIAGNOSTIC_READ: frozenset()},
}


class RbacError(Exception):
    pass


class AccessDenied(RbacError):
    def __init__(self, role: EntityRole, action: str, data_class: DataClass):
        self.role, self.action, self.data_class = role, action, data_class
        super().__init__(f"{role.value} may not {action} {data_class.value}")


class TokenInvalid(RbacError):
    pass


class TokenExpired(RbacError):
    pass


class UnclassifiedField(RbacError):
    pass


def check(role: EntityRole, action: str, data_class: DataClass) -> bool:
    """Pure matrix lookup; deny anything the matrix does not spell out."""
    if action not in _ACTIONS:
        raise ValueError(f"unknown action {action!r}")
    return data_class in _MATRIX[role][action]


def can_read(role: EntityRole, data_class: DataClass) -> bool:
    # diagnostic read still exposes the bytes, it just gets logged louder
    return check(role, READ, data_class) or check(role, DIAGNOSTIC_READ, data_class)


def can_write(role: EntityRole, data_class: DataClass) -> bool:
    return check(role, WRITE, data_class)


def permitted_classes(role: EntityRole, action: str) -> frozenset[DataClass]:
    if action not in _ACTIONS:
        raise ValueError(f"unknown action {action!r}")
    return _MATRIX[role][action]


# --- tokens ------------------------------------------------------------------

@dataclass(frozen=True)
class Claims:
    entity_id: str
    role: EntityRole
    expires_at: datetime


def _b64(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode("ascii").rstrip("=")


def _unb64(text: str) -> bytes:
    padded = text + "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(padded.encode("ascii"))


def issue_token(secret: bytes, entity_id: str, role: EntityRole, expires_at: datetime) -> str:
    if expires_at.tzinfo is None:
        expires_at = expires_at.replace(tzinfo=timezone.utc)
    claims = {"entity_id": entity_id, "role": role.value, "exp": int(expires_at.timestamp())}
    payload = _b64(json.dumps(claims, sort_keys=True, separators=(",", ":")).encode("utf-8"))
    signature = _b64(hmac.new(secret, payload.encode("ascii"), hashlib.sha256).digest())
    return f"{payload}.{signature}"


def verify_token(secret: bytes, token: str, now: datetime) -> Claims:
    try:
        payload, signature = token.split(".")
    except ValueError:
        raise TokenInvalid("token must be payload.signature") from None
    expected = _b64(hmac.new(secret, payload.encode("ascii"), hashlib.sha256).digest())
    if not hmac.compare_digest(expected, signature):
        raise TokenInvalid("bad signature")
    try:
        claims = json.loads(_unb64(payload))
        entity_id = str(claims["entity_id"])
        role = EntityRole(claims["role"])
        exp = int(claims["exp"])
    except (ValueError, KeyError, TypeError) as exc:
        raise TokenInvalid(f"unreadable claims: {exc}") from None
    if now.tzinfo is None:
        now = now.replace(tzinfo=timezone.utc)
    expires_at = datetime.fromtimestamp(exp, tz=timezone.utc)
    if now >= expires_at:
        raise TokenExpired(f"token for {entity_id} expired at {expires_at.isoformat()}")
    return Claims(entity_id=entity_id, role=role, expires_at=expires_at)


def authorize(
    token: str,
    *,
    secret: bytes,
    audit: AuditLog,
    action: str,
    data_class: DataClass,
    resource: str,
    now: datetime,
) -> Claims:
    """Verify the token, consult the matrix, and log exactly one decision.

    Token failures raise before anything is logged: a forged token names no
    trustworthy entity to attribute the attempt to.
    """
    claims = verify_token(secret, token, now)
    allowed = check(claims.role, action, data_class)
    if not allowed:
        audit.append(claims.entity_id, AccessType.ACCESS_DENIED, resource, now)
        raise AccessDenied(claims.role, action, data_class)
    if data_class is DataClass.MAPPING_TABLE:
        access_type = AccessType.MAPPING_READ
    elif action == DIAGNOSTIC_READ:
        access_type = AccessType.DIAGNOSTIC_READ
    else:
        access_type = AccessType.ACCESS_ALLOWED
    audit.append(claims.entity_id, access_type, resource, now)
    return claims


# --- field-level views --------------------------------------------------------

_D0 = DataClass.D0_IDENTITY
_NOTES = DataClass.D0_NOTES
_META = DataClass.INFRA_META

RECORD_CLASSES: dict[str, dict[str, DataClass]] = {
    "subject_identity": {
        "first_name": _D0,
        "last_name": _D0,
        "age": _D0,
        "gender": _D0,
        "address": _D0,
        "contacts": _D0,
        "apartment_map": _D0,
        "general_notes": _NOTES,
    },
    "subject_profile": {
        "pid": _META,
        "alias": _META,
        "age_band": _NOTES,
        "gender_group": _NOTES,
        "notes": _NOTES,
    },
    "wearable_daily": {
        "date": DataClass.D1,
        "steps": DataClass.D1,
        "avg_heart_rate": DataClass.D1,
        "sleep_duration": DataClass.D1,
        "sleep_quality": DataClass.D1,
        "breathing_quality": DataClass.D1,
        "brushing_time": DataClass.D1,
        "brushing_duration": DataClass.D1,
    },
    "cognitive_report": {
        "kind": DataClass.D2,
        "date_time": DataClass.D2,
        "payload": DataClass.D2,
        "completed": DataClass.D2,
    },
    "env_event": {
        "timestamp": DataClass.D3,
        "sensor_id": DataClass.D3,
        "kind": DataClass.D3,
        "value": DataClass.D3,
    },
    "mobility_log": {
        "visited_places": DataClass.D4_RAW,
        "activity_segments": DataClass.D4_RAW,
    },
    "mobility_report": {
        "pid": _META,
        "window": DataClass.D4_RESULTS,
        "daily_outside": DataClass.D4_RESULTS,
        "place_changes": DataClass.D4_RESULTS,
        "route_deviations": DataClass.D4_RESULTS,
        "wandering_episodes": DataClass.D4_RESULTS,
    },
    "analysis_results": {
        "pid": _META,
        "summary": DataClass.ANALYSIS_RESULTS,
        "generated_at": DataClass.ANALYSIS_RESULTS,
    },
    "mapping_entry": {
        "pid": DataClass.MAPPING_TABLE,
        "record_id": DataClass.MAPPING_TABLE,
        "sealed": DataClass.MAPPING_TABLE,
    },
    "ticket": {
        "ticket_id": _META,
        "kind": _META,
        "state": _META,
        "i_number": _META,
        "alias": _META,
        "notes": _NOTES,
        "map_ref": _NOTES,
        "history": _META,
        "chat": _META,
    },
    "enrollment_receipt": {
        "pid": _META,
        "alias": _META,
        "i_number": _META,
        "ticket_id": _META,
        "cohort": _NOTES,
    },
    # envelope types used on the inter-party channels
    "install_ref": {"i_number": _META},
    "monitor_ref": {"pid": _META, "alias": _META, "i_number": _META},
    "chat_message": {"i_number": _META, "chat": _META},
    "sync_meta": {"pid": _META, "batch_id": _META},
    "installation_status": {
        "i_number": _META,
        "alias": _META,
        "pid": _META,
        "ticket_state": _META,
        "bound": _META,
        "records_held": _META,
        "unsynced": _META,
    },
}


def field_class(record_type: str, field: str) -> DataClass:
    try:
        per_type = RECORD_CLASSES[record_type]
    except KeyError:
        raise UnclassifiedField(f"unknown record type {record_type!r}") from None
    try:
        return per_type[field]
    except KeyError:
        raise UnclassifiedField(f"{record_type}.{field} has no data class") from None


def redact_view(record_type: str, fields: Mapping[str, Any], role: EntityRole) -> dict[str, Any]:
    """Strip every field whose data class the role may not read.

    Unknown fields are an error rather than a silent passthrough: a field
    nobody classified is a field nobody argued about.
    """
    visible: dict[str, Any] = {}
    for name, value in fields.items():
        if can_read(role, field_class(record_type, name)):
            visible[name] = value
    return visible
