"""Role-scoped HTTP facade over the study backend.

One process hosts every institution's view at desk scale. Two guards
stack on each handler: an endpoint role list (which views exist for a
role at all, mirroring the separate per-role web apps) and the class
matrix (which fields survive in a response, applied through
redact_view so the check is end to end, not per call site). Device
endpoints — gateway ingest and the monthly location drop — carry a
provisioning key instead of a user token, since appliances are not
principals in the access matrix.

Transport encryption is a deployment concern: run the service behind a
TLS terminator. The guarantees tested here are the token layer and the
field classes.
"""

from __future__ import annotations

import hmac
import json
import os
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Any, Callable

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse

from .audit import AccessType, AuditLog
from .central import CentralStore, StudyAnonymized, UnknownSubject
from .domain import (
    D0ValidationError,
    DomainError,
    EntityRole,
    InstallationNumber,
    Pid,
    sensed_record_from_wire,
)
from .homegw import ClockSkew, RetentionPolicy
from .mobility import MobilityConfig, MobilityError, build_report, parse_location_history
from .pseudonym import AliasDirectory, InstallationSequence, PseudonymEngine
from .rbac import (
    READ,
    WRITE,
    AccessDenied,
    DataClass,
    RbacError,
    TokenExpired,
    TokenInvalid,
    authorize,
    can_read,
    issue_token,
    redact_view,
    verify_token,
)
from .scenario import derive_int
from .workflow import (
    TRUSTED_SERVER,
    UNIMI,
    AcquisitionNotVerified,
    ChatRejected,
    DuplicateSubject,
    EnrollmentResult,
    InvalidTransition,
    MessageBus,
    RoleNotAllowed,
    UnknownInstallation,
    UnknownTicket,
    WorkflowEngine,
    WorkflowError,
)

DEFAULT_TOKEN_TTL_S = 3600


class ServiceError(Exception):
    pass


class ConfigError(ServiceError):
    pass


class BadCredential(ServiceError):
    """The presented bootstrap credential does not match."""


@dataclass(frozen=True)
class ServiceConfig:
    master_key_path: str
    storage_key_path: str
    token_key_path: str
    admin_credential_path: str
    data_root: str
    host: str = "127.0.0.1"
    port: int = 8000
    retention_days: int = 30
    seed: int = 0
    alias_dictionary_path: str | None = None
    mobility: MobilityConfig = field(default_factory=MobilityConfig)


def load_config(path: str) -> ServiceConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    required = (
        "master_key_path",
        "storage_key_path",
        "token_key_path",
        "admin_credential_path",
        "data_root",
    )
    missing = [k for k in required if k not in raw]
    if missing:
        raise ConfigError(f"config lacks required keys: {', '.join(missing)}")

    listen = raw.get("listen", {})
    try:
        mobility = MobilityConfig(**raw.get("mobility", {}))
    except TypeError as exc:
        raise ConfigError(f"bad mobility settings: {exc}") from exc

    config = ServiceConfig(
        master_key_path=raw["master_key_path"],
        storage_key_path=raw["storage_key_path"],
        token_key_path=raw["token_key_path"],
        admin_credential_path=raw["admin_credential_path"],
        data_root=raw["data_root"],
        host=listen.get("host", "127.0.0.1"),
        port=int(listen.get("port", 8000)),
        retention_days=int(raw.get("retention_days", 30)),
        seed=int(raw.get("seed", 0)),
        alias_dictionary_path=raw.get("alias_dictionary_path"),
        mobility=mobility,
    )
    check_paths(config)
    return config


def check_paths(config: ServiceConfig) -> None:
    # every input path must exist before anything starts; data_root is output
    paths = [
        config.master_key_path,
        config.storage_key_path,
        config.token_key_path,
        config.admin_credential_path,
    ]
    if config.alias_dictionary_path is not None:
        paths.append(config.alias_dictionary_path)
    absent = [p for p in paths if not os.path.exists(p)]
    if absent:
        raise ConfigError(f"missing files: {', '.join(absent)}")


def _read_bytes(path: str, *, minimum: int) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < minimum:
        raise ConfigError(f"{path} holds {len(data)} bytes, need at least {minimum}")
    return data


class ServiceState:
    """Every long-lived component, wired once per process."""

    def __init__(self, config: ServiceConfig, *, clock: Callable[[], datetime] | None = None):
        check_paths(config)
        self.config = config
        self.now = clock or (lambda: datetime.now(timezone.utc))
        os.makedirs(config.data_root, exist_ok=True)

        self.audit = AuditLog(os.path.join(config.data_root, "audit.log"))
        master_key = _read_bytes(config.master_key_path, minimum=32)[:32]
        storage_key = _read_bytes(config.storage_key_path, minimum=32)[:32]
        self.token_secret = _read_bytes(config.token_key_path, minimum=16)
        self.admin_credential = _read_bytes(config.admin_credential_path, minimum=16).decode(
            "utf-8", "surrogateescape"
        ).strip()

        # the seed pins every nonce draw, so a rebuilt service over the same
        # data_root reproduces its handles
        nonce_rng = random.Random(derive_int(config.seed, "nonce"))
        store_rng = random.Random(derive_int(config.seed, "store-nonce"))
        names = None
        if config.alias_dictionary_path is not None:
            with open(config.alias_dictionary_path, encoding="utf-8") as fh:
                names = [line.strip() for line in fh if line.strip()]
        self.bus = MessageBus()
        self.engine = WorkflowEngine(
            PseudonymEngine(master_key, nonce_source=nonce_rng.randbytes),
            AliasDirectory(names),
            InstallationSequence(),
            self.audit,
            self.bus,
            gateway_retention=RetentionPolicy(config.retention_days),
        )
        self.store = CentralStore(
            os.path.join(config.data_root, "central"),
            storage_key,
            self.audit,
            nonce_source=store_rng.randbytes,
        )
        # enrollment directory, ordered; keyed views for joins
        self.enrollments: list[EnrollmentResult] = []
        self.by_i_number: dict[str, EnrollmentResult] = {}
        self.by_pid: dict[str, EnrollmentResult] = {}

    def register(self, result: EnrollmentResult, ts: datetime) -> None:
        self.store.store_identity(result.record_id, result.identity)
        self.store.store_mapping(result.pid, result.record_id, "service", ts)
        self.store.store_profile(result.pid, result.alias.value, result.identity, ts)
        self.enrollments.append(result)
        self.by_i_number[result.i_number.value] = result
        self.by_pid[result.pid.value] = result

    def issue_token(self, credential: str, entity_id: str, role: EntityRole, ttl_s: int) -> tuple[str, datetime]:
        if not hmac.compare_digest(credential, self.admin_credential):
            raise BadCredential("credential mismatch")
        now = self.now()
        expires = now + timedelta(seconds=ttl_s)
        token = issue_token(self.token_secret, entity_id, role, expires)
        self.audit.append(entity_id, AccessType.LOGIN, "auth", now)
        return token, expires

    def check_device_key(self, presented: str | None) -> None:
        if not presented or not hmac.compare_digest(presented, self.admin_credential):
            raise BadCredential("device key mismatch")


def _require(body: dict[str, Any], name: str) -> Any:
    if not isinstance(body, dict) or name not in body:
        raise HTTPException(status_code=422, detail=f"missing field {name!r}")
    return body[name]


def _record(record_type: str, fields: dict[str, Any], role: EntityRole) -> dict[str, Any]:
    return {"type": record_type, "fields": redact_view(record_type, fields, role)}


def build_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="tele-monitoring backend", docs_url=None, redoc_url=None)

    def claims_for(
        authorization: str | None,
        *,
        action: str,
        data_class: DataClass,
        resource: str,
        roles: tuple[EntityRole, ...] | None = None,
    ):
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = authorization[len("Bearer "):]
        now = state.now()
        try:
            claims = verify_token(state.token_secret, token, now)
        except (TokenInvalid, TokenExpired):
            raise HTTPException(status_code=401, detail="invalid or expired token") from None
        if roles is not None and claims.role not in roles:
            # the matrix may allow the classes, but this view does not exist
            # for the role: the deployment has one frontend per institution
            state.audit.append(claims.entity_id, AccessType.ACCESS_DENIED, resource, now)
            raise HTTPException(status_code=403, detail="no such view for this role")
        try:
            authorize(
                token,
                secret=state.token_secret,
                audit=state.audit,
                action=action,
                data_class=data_class,
                resource=resource,
                now=now,
            )
        except AccessDenied:
            raise HTTPException(
                status_code=403,
                detail=f"{claims.role.value} may not {action} {data_class.value}",
            ) from None
        return claims, now

    # -- authentication ----------------------------------------------------------

    @app.post("/auth/token")
    def auth_token(body: dict[str, Any]):
        credential = str(_require(body, "credential"))
        entity_id = str(_require(body, "entity_id"))
        try:
            role = EntityRole(str(_require(body, "role")))
        except ValueError:
            raise HTTPException(status_code=422, detail="unknown role") from None
        ttl_s = int(body.get("ttl_seconds", DEFAULT_TOKEN_TTL_S))
        try:
            token, expires = state.issue_token(credential, entity_id, role, ttl_s)
        except BadCredential:
            raise HTTPException(status_code=401, detail="bad credential") from None
        return {"token": token, "expires_at": expires.isoformat(), "role": role.value}

    # -- enrollment and subject views ---------------------------------------------

    @app.post("/subjects", status_code=201)
    def enroll_subject(body: dict[str, Any], authorization: str | None = Header(default=None)):
        claims, now = claims_for(
            authorization,
            action=WRITE,
            data_class=DataClass.D0_IDENTITY,
            resource="subjects",
            roles=(EntityRole.HOS,),
        )
        identity = _require(body, "identity")
        cohort = str(_require(body, "cohort"))
        try:
            result = state.engine.enroll_subject(identity, cohort, claims.entity_id, claims.role, now)
        except DuplicateSubject as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except D0ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except (RoleNotAllowed, WorkflowError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        state.register(result, now)
        receipt = {
            "pid": result.pid.value,
            "alias": result.alias.value,
            "i_number": result.i_number.value,
            "ticket_id": result.ticket_id,
            "cohort": result.cohort,
        }
        return _record("enrollment_receipt", receipt, claims.role)

    @app.get("/subjects")
    def list_subjects(authorization: str | None = Header(default=None)):
        claims, _now = claims_for(
            authorization,
            action=READ,
            data_class=DataClass.D0_IDENTITY,
            resource="subjects",
            roles=(EntityRole.HOS,),
        )
        subjects = []
        for result in state.enrollments:
            subjects.append(
                {
                    "parts": [
                        _record("subject_identity", result.identity.as_fields(), claims.role),
                        _record(
                            "monitor_ref",
                            {
                                "pid": result.pid.value,
                                "alias": result.alias.value,
                                "i_number": result.i_number.value,
                            },
                            claims.role,
                        ),
                    ]
                }
            )
        return {"subjects": subjects}

    @app.get("/subjects/{pid}/dashboard")
    def subject_dashboard(pid: str, authorization: str | None = Header(default=None)):
        claims, _now = claims_for(
            authorization,
            action=READ,
            data_class=DataClass.ANALYSIS_RESULTS,
            resource=f"subject:{pid[:12]}",
            roles=(EntityRole.HOS,),
        )
        try:
            profile = state.store.profile(Pid(pid))
        except DomainError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except UnknownSubject:
            raise HTTPException(status_code=404, detail="unknown subject") from None
        parts = [_record("subject_profile", profile, claims.role)]
        for row in state.store.results_for(pid, "analysis_results"):
            parts.append(_record("analysis_results", {"pid": row["pid"], **row["fields"]}, claims.role))
        for row in state.store.results_for(pid, "mobility_report"):
            parts.append(_record("mobility_report", {"pid": row["pid"], **row["fields"]}, claims.role))
        return {"parts": parts}

    # -- tickets --------------------------------------------------------------------

    @app.get("/tickets")
    def list_tickets(authorization: str | None = Header(default=None)):
        claims, _now = claims_for(
            authorization,
            action=READ,
            data_class=DataClass.INFRA_META,
            resource="tickets",
        )
        out = []
        for ticket in state.engine.tickets():
            parts = [_record("ticket", ticket.fields(), claims.role)]
            # the installers already hold the identity from the enrollment
            # hand-off; this re-serves what their channel delivered
            if can_read(claims.role, DataClass.D0_IDENTITY):
                result = state.by_i_number.get(ticket.i_number.value)
                if result is not None:
                    parts.append(
                        _record("subject_identity", result.identity.as_fields(), claims.role)
                    )
            out.append({"parts": parts})
        return {"tickets": out}

    @app.post("/tickets", status_code=201)
    def open_intervention(body: dict[str, Any], authorization: str | None = Header(default=None)):
        claims, now = claims_for(
            authorization,
            action=WRITE,
            data_class=DataClass.INFRA_META,
            resource="tickets",
        )
        try:
            i_number = InstallationNumber(str(_require(body, "i_number")))
        except DomainError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        description = str(_require(body, "description"))
        try:
            ticket = state.engine.open_intervention(
                i_number, description, claims.entity_id, claims.role, now
            )
        except UnknownInstallation:
            raise HTTPException(status_code=404, detail="unknown installation") from None
        except RoleNotAllowed as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        except InvalidTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except ChatRejected as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return _record("ticket", ticket.fields(), claims.role)

    @app.post("/tickets/{ticket_id}/transition")
    def transition_ticket(
        ticket_id: int, body: dict[str, Any], authorization: str | None = Header(default=None)
    ):
        claims, now = claims_for(
            authorization,
            action=WRITE,
            data_class=DataClass.INFRA_META,
            resource=f"ticket:{ticket_id}",
        )
        verb = str(_require(body, "verb"))
        try:
            ticket = state.engine.transition(
                ticket_id,
                verb,
                claims.entity_id,
                claims.role,
                now,
                notes=body.get("notes"),
                map_ref=body.get("map_ref"),
            )
        except UnknownTicket:
            raise HTTPException(status_code=404, detail="unknown ticket") from None
        except RoleNotAllowed as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        except AcquisitionNotVerified as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except InvalidTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return _record("ticket", ticket.fields(), claims.role)

    @app.post("/tickets/{ticket_id}/chat")
    def post_chat(
        ticket_id: int, body: dict[str, Any], authorization: str | None = Header(default=None)
    ):
        claims, now = claims_for(
            authorization,
            action=WRITE,
            data_class=DataClass.INFRA_META,
            resource=f"ticket:{ticket_id}:chat",
        )
        text = str(_require(body, "text"))
        try:
            state.engine.chat(ticket_id, claims.entity_id, claims.role, text, now)
        except UnknownTicket:
            raise HTTPException(status_code=404, detail="unknown ticket") from None
        except RoleNotAllowed as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        except ChatRejected as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        ticket = state.engine.get_ticket(ticket_id)
        return _record("ticket", ticket.fields(), claims.role)

    # -- installations -----------------------------------------------------------------

    @app.get("/installations")
    def list_installations(authorization: str | None = Header(default=None)):
        claims, _now = claims_for(
            authorization,
            action=READ,
            data_class=DataClass.INFRA_META,
            resource="installations",
            roles=(EntityRole.IMT,),
        )
        rows = []
        for result in state.enrollments:
            number = result.i_number.value
            install_tickets = [
                t
                for t in state.engine.tickets_for_installation(result.i_number)
                if t.kind == "installation"
            ]
            fields: dict[str, Any] = {
                "i_number": number,
                "alias": result.alias.value,
                "pid": result.pid.value,
                "ticket_state": install_tickets[0].state if install_tickets else "Requested",
            }
            try:
                gateway = state.engine.gateway_for(number)
            except UnknownInstallation:
                fields.update(bound=False, records_held=0, unsynced=0)
            else:
                fields.update(
                    bound=True,
                    records_held=len(gateway.records()),
                    unsynced=gateway.unsynced_count(),
                )
            rows.append(_record("installation_status", fields, claims.role))
        return {"installations": rows}

    # -- device-side ingestion ------------------------------------------------------------

    @app.post("/gateways/{i_number}/events")
    def gateway_events(
        i_number: str,
        body: dict[str, Any],
        x_device_key: str | None = Header(default=None),
    ):
        try:
            state.check_device_key(x_device_key)
        except BadCredential:
            raise HTTPException(status_code=401, detail="unknown device key") from None
        try:
            gateway = state.engine.gateway_for(i_number)
        except UnknownInstallation:
            raise HTTPException(status_code=404, detail="unknown installation") from None
        records = _require(body, "records")
        if "now" in body:
            try:
                now = datetime.fromisoformat(str(body["now"]))
            except ValueError:
                raise HTTPException(status_code=422, detail="bad clock value") from None
        else:
            now = state.now()
        count = 0
        for wire in records:
            try:
                record = sensed_record_from_wire(
                    str(_require(wire, "type")), _require(wire, "fields")
                )
                gateway.ingest(record, now)
            except ClockSkew as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
            except (DomainError, KeyError, TypeError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=f"bad record: {exc}") from None
            count += 1
        return {"ingested": count}

    @app.post("/d4/{pid}")
    async def ingest_location_month(
        pid: str,
        request: Request,
        start: str | None = None,
        days: int = 30,
        x_device_key: str | None = Header(default=None),
    ):
        try:
            state.check_device_key(x_device_key)
        except BadCredential:
            raise HTTPException(status_code=401, detail="unknown device key") from None
        if pid not in state.by_pid:
            raise HTTPException(status_code=404, detail="unknown subject") from None
        raw = await request.body()
        try:
            log = parse_location_history(raw)
        except MobilityError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        if start is not None:
            try:
                window_start = datetime.fromisoformat(start)
            except ValueError:
                raise HTTPException(status_code=422, detail="bad start date") from None
            if window_start.tzinfo is None:
                window_start = window_start.replace(tzinfo=timezone.utc)
        elif log.visited_places:
            first = min(p.start_ts for p in log.visited_places)
            window_start = datetime.combine(
                first.date(), datetime.min.time(), tzinfo=timezone.utc
            )
        else:
            raise HTTPException(status_code=422, detail="empty log and no start date")
        window_end = window_start + timedelta(days=days)
        now = state.now()
        try:
            report = build_report(pid, log, window_start, window_end, state.config.mobility)
        except MobilityError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        state.bus.send(TRUSTED_SERVER, UNIMI, {"type": "mobility_report", "fields": report}, now)
        state.store.store_result(
            Pid(pid), "mobility_report", {k: v for k, v in report.items() if k != "pid"}, now
        )
        return {"stored": "mobility_report", "window": report["window"]}

    # -- administration ---------------------------------------------------------------------

    @app.post("/admin/retention")
    def run_retention(
        body: dict[str, Any] | None = None,
        x_admin_credential: str | None = Header(default=None),
    ):
        try:
            state.check_device_key(x_admin_credential)
        except BadCredential:
            raise HTTPException(status_code=401, detail="bad credential") from None
        body = body or {}
        if "now" in body:
            try:
                now = datetime.fromisoformat(str(body["now"]))
            except ValueError:
                raise HTTPException(status_code=422, detail="bad clock value") from None
        else:
            now = state.now()
        purged = []
        for result in state.enrollments:
            try:
                gateway = state.engine.gateway_for(result.i_number.value)
            except UnknownInstallation:
                continue
            removed = gateway.purge_expired(now)
            purged.append({"i_number": result.i_number.value, "removed": removed})
        return {"purged": purged}

    @app.post("/admin/anonymize")
    def anonymize_study(authorization: str | None = Header(default=None)):
        claims, now = claims_for(
            authorization,
            action=WRITE,
            data_class=DataClass.D0_IDENTITY,
            resource="study",
            roles=(EntityRole.HOS,),
        )
        try:
            report = state.store.anonymize(claims.entity_id, claims.role, now)
        except StudyAnonymized:
            raise HTTPException(status_code=410, detail="study already anonymized") from None
        return {
            "mapping_rows_deleted": report.mapping_rows_deleted,
            "identities_deleted": report.identities_deleted,
            "equivalence_classes": report.equivalence_classes,
            "k": report.k,
            "singleton_classes": report.singleton_classes,
        }

    @app.get("/audit")
    def read_audit(limit: int = 500, authorization: str | None = Header(default=None)):
        # the trail is governance material, not a matrix class: the study
        # coordinator alone reviews it
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        now = state.now()
        try:
            claims = verify_token(state.token_secret, authorization[len("Bearer "):], now)
        except (TokenInvalid, TokenExpired):
            raise HTTPException(status_code=401, detail="invalid or expired token") from None
        if claims.role is not EntityRole.HOS:
            state.audit.append(claims.entity_id, AccessType.ACCESS_DENIED, "audit", now)
            raise HTTPException(status_code=403, detail="no such view for this role")
        state.audit.append(claims.entity_id, AccessType.ACCESS_ALLOWED, "audit", now)
        kept = state.audit.records()
        if limit > 0:
            kept = kept[-limit:]
        rows = [
            {
                "seq": r.seq,
                "ts": r.ts,
                "entity_id": r.entity_id,
                "access_type": r.access_type.value,
                "resource": r.resource,
            }
            for r in kept
        ]
        return {"records": rows, "total": len(state.audit)}

    @app.exception_handler(RbacError)
    def rbac_error(_request: Request, _exc: RbacError) -> JSONResponse:
        return JSONResponse(status_code=403, content={"detail": "forbidden"})

    return app
