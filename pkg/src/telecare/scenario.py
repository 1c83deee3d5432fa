"""Closed-loop simulation: enrollment through anonymization on a scripted clock.

Drives every production component end to end with seeded synthetic data:
enrolls two cohorts, walks each installation ticket through its full
protocol, streams a month-plus of sensed records through the home
gateways (with optional injected transport faults), runs retention
purges, compiles monthly mobility and analysis results, and leaves an
auditable trail plus a machine-readable message trace behind.

Everything observable is a function of (plan, seed): data streams draw
from rngs derived from the seed alone, so a faulty and a fault-free run
generate identical records and must converge to the same central store.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any

from .audit import AuditLog
from .central import CentralStore
from .domain import EntityRole
from .generators import (
    PROFILES,
    SIM_BASE,
    commissioning_records,
    day_records,
    generate_d4,
    make_identities,
)
from .homegw import HomeGateway, SyncBatch
from .mobility import MobilityConfig, build_report, parse_location_history
from .pseudonym import AliasDirectory, InstallationSequence, PseudonymEngine
from .rbac import field_class
from .workflow import (
    HOMEGW,
    HOS,
    TRUSTED_SERVER,
    UNIMI,
    Delivery,
    EnrollmentResult,
    MessageBus,
    WorkflowEngine,
)

HOS_ACTOR = "hos-coordinator"
IIT_ACTOR = "iit-installer"
IMT_ACTOR = "imt-monitor"
UNIMI_ACTOR = "unimi-analyst"

MONTH_DAYS = 30


def derive_int(seed: int, label: str) -> int:
    return int.from_bytes(hashlib.sha256(f"{label}:{seed}".encode()).digest()[:8], "big")


def derive_key(seed: int, label: str) -> bytes:
    return hashlib.sha256(f"key:{label}:{seed}".encode()).digest()


@dataclass(frozen=True)
class FaultPlan:
    """Transport faults keyed by (subject index, day index)."""

    down: frozenset[tuple[int, int]] = frozenset()
    ack_lost: frozenset[tuple[int, int]] = frozenset()

    @classmethod
    def none(cls) -> "FaultPlan":
        return cls()


def default_fault_plan(subjects: int, days: int, fault_seed: int) -> FaultPlan:
    """A few outages and lost acks per subject, away from the run's edges."""
    if days < 12:
        return FaultPlan.none()
    rng = random.Random(fault_seed)
    down, lost = set(), set()
    for s in range(subjects):
        picks = rng.sample(range(5, days - 5), 5)
        down.update((s, d) for d in picks[:3])
        lost.update((s, d) for d in picks[3:])
    return FaultPlan(frozenset(down), frozenset(lost))


@dataclass(frozen=True)
class ScenarioPlan:
    group_a: int = 15
    group_b: int = 15
    days: int = 90
    interventions: int = 2
    anonymize: bool = False
    fault_plan: FaultPlan = FaultPlan()

    @property
    def subject_count(self) -> int:
        return self.group_a + self.group_b


@dataclass
class SubjectRun:
    index: int
    group: str
    enrollment: EnrollmentResult
    gateway: HomeGateway
    profile: str
    stream_rng: random.Random


@dataclass
class ScenarioOutcome:
    plan: ScenarioPlan
    seed: int
    root: str
    store: CentralStore
    audit: AuditLog
    engine: WorkflowEngine
    bus: MessageBus
    subjects: list[SubjectRun]
    trace: list[dict[str, Any]]
    trace_hash: str
    metrics: dict[str, Any]
    runtime_s: float = 0.0

    @property
    def gateways(self) -> dict[str, HomeGateway]:
        return {s.enrollment.i_number.value: s.gateway for s in self.subjects}


def message_manifest(delivery: Delivery) -> dict[str, Any]:
    """Record types and data classes carried by one delivery, no payloads."""
    types: list[str] = []
    classes: set[str] = set()

    def walk(msg: dict[str, Any]) -> None:
        if "parts" in msg:
            for part in msg["parts"]:
                walk(part)
            return
        types.append(msg["type"])
        for name in msg["fields"]:
            classes.add(field_class(msg["type"], name).value)

    walk(delivery.message)
    return {
        "seq": delivery.seq,
        "ts": delivery.ts,
        "sender": delivery.sender,
        "receiver": delivery.receiver,
        "types": types,
        "classes": sorted(classes),
    }


def run_scenario(plan: ScenarioPlan, seed: int, root: str) -> ScenarioOutcome:
    import time as _time

    started = _time.monotonic()
    if plan.subject_count < 1:
        raise ValueError("a scenario needs at least one subject")
    os.makedirs(root, exist_ok=True)

    audit = AuditLog(os.path.join(root, "audit.log"))
    nonce_rng = random.Random(derive_int(seed, "nonce"))
    pseudonyms = PseudonymEngine(derive_key(seed, "master"), nonce_source=nonce_rng.randbytes)
    bus = MessageBus()
    engine = WorkflowEngine(pseudonyms, AliasDirectory(), InstallationSequence(), audit, bus)
    store = CentralStore(
        os.path.join(root, "central"),
        derive_key(seed, "storage"),
        audit,
        nonce_source=random.Random(derive_int(seed, "store-nonce")).randbytes,
    )
    fault = plan.fault_plan

    def clock(day: int, hour: int = 0, minute: int = 0) -> datetime:
        return SIM_BASE + timedelta(days=day, hours=hour, minutes=minute)

    metrics: dict[str, Any] = {
        "subjects": plan.subject_count,
        "ingested": {},       # day -> i_number -> record count
        "purges": [],         # {day, i_number, removed}
        "sync": {"batches_delivered": 0, "duplicates": 0, "failed_sends": 0, "lost_acks": 0},
        "reports": 0,
        "reassociations": 0,
        "interventions_closed": 0,
    }

    # -- day 0: enrollment and the installation protocol --
    identities = make_identities(random.Random(derive_int(seed, "identities")), plan.subject_count)
    enrollments = []
    for i, fields in enumerate(identities):
        ts = clock(0, 9, 2 * i)
        cohort = "mci_neurodegenerative" if i < plan.group_a else "mci_other"
        enrollment = engine.enroll_subject(fields, cohort, HOS_ACTOR, EntityRole.HOS, ts)
        store.store_identity(enrollment.record_id, enrollment.identity)
        store.store_mapping(enrollment.pid, enrollment.record_id, HOS_ACTOR, ts)
        store.store_profile(enrollment.pid, enrollment.alias.value, enrollment.identity, ts)
        enrollments.append(enrollment)

    subjects: list[SubjectRun] = []
    for i, enrollment in enumerate(enrollments):
        t0 = clock(0, 13, i)
        tid = enrollment.ticket_id
        engine.plan_visit(tid, IIT_ACTOR, t0, notes="sensor positions agreed during the call")
        engine.prepare_infra(tid, IMT_ACTOR, t0 + timedelta(minutes=10))
        engine.install(tid, IIT_ACTOR, t0 + timedelta(minutes=25))
        gateway = engine.gateway_for(enrollment.i_number)
        for record in commissioning_records(clock(0).date()):
            gateway.ingest(record, t0 + timedelta(minutes=30))
        engine.verify_close(tid, IMT_ACTOR, t0 + timedelta(minutes=40))
        subjects.append(
            SubjectRun(
                index=i,
                group="A" if i < plan.group_a else "B",
                enrollment=enrollment,
                gateway=gateway,
                profile=PROFILES[i % len(PROFILES)],
                stream_rng=random.Random(derive_int(seed, f"stream:{i}")),
            )
        )

    def deliver(batch: SyncBatch, ts: datetime) -> None:
        payload = batch.payload()
        bus.send(HOMEGW, UNIMI, payload, ts)
        result = store.receive_batch(payload, ts)
        if result.duplicate:
            metrics["sync"]["duplicates"] += 1
        else:
            metrics["sync"]["batches_delivered"] += 1

    def transport_for(sub: SubjectRun, day: int, ts: datetime):
        def transport(batch: SyncBatch) -> bool:
            if (sub.index, day) in fault.down:
                metrics["sync"]["failed_sends"] += 1
                raise OSError("uplink down")
            deliver(batch, ts)
            if (sub.index, day) in fault.ack_lost:
                metrics["sync"]["lost_acks"] += 1
                return False
            return True

        return transport

    # -- the daily loop --
    for day in range(plan.days):
        date_d = clock(day).date()
        per_gw: dict[str, int] = {}
        for sub in subjects:
            gw = sub.gateway
            records = day_records(sub.stream_rng, day, date_d)
            for record in records:
                if hasattr(record, "date_time"):
                    now = record.date_time
                elif hasattr(record, "timestamp"):
                    now = record.timestamp
                else:
                    now = clock(day, 23, 45)
                gw.ingest(record, now)
            per_gw[gw.i_number.value] = len(records)
        metrics["ingested"][day] = per_gw

        for sub in subjects:
            sub.gateway.sync(transport_for(sub, day, clock(day, 23, 50)), clock(day, 23, 50))

        if day == 10 and plan.days > 11 and plan.interventions > 0:
            _run_interventions(engine, subjects, plan, metrics, clock)

        if (day + 1) % MONTH_DAYS == 0:
            month = (day + 1) // MONTH_DAYS - 1
            _month_end(store, bus, subjects, seed, month, metrics, clock(day, 23, 57))

        for sub in subjects:
            removed = sub.gateway.purge_expired(clock(day, 23, 59))
            if removed:
                metrics["purges"].append(
                    {"day": day, "i_number": sub.enrollment.i_number.value, "removed": removed}
                )

    # -- drain: flush every still-buffered batch so delivery faults leave no residue --
    if plan.days > 0:
        for sub in subjects:
            gw = sub.gateway
            minute = 0
            while gw.pending_batch() is not None or gw.unsynced_count() > 0:
                ts = clock(plan.days, 8, minute)
                gw.sync(lambda batch, _ts=ts: (deliver(batch, _ts), True)[1], ts)
                minute += 1

    if plan.anonymize:
        report = store.anonymize(HOS_ACTOR, EntityRole.HOS, clock(plan.days, 12))
        metrics["anonymization"] = {
            "mapping_rows_deleted": report.mapping_rows_deleted,
            "identities_deleted": report.identities_deleted,
            "k": report.k,
            "singleton_classes": report.singleton_classes,
        }

    trace = [message_manifest(d) for d in bus.trace()]
    trace_hash = hashlib.sha256(
        json.dumps(trace, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    metrics["trace_messages"] = len(trace)
    metrics["tickets"] = {
        "installation": sum(1 for t in engine.tickets() if t.kind == "installation"),
        "intervention": sum(1 for t in engine.tickets() if t.kind == "intervention"),
        "closed": sum(1 for t in engine.tickets() if t.state == "Closed"),
    }

    with open(os.path.join(root, "trace.json"), "w", encoding="utf-8") as fh:
        json.dump(trace, fh, sort_keys=True)
    with open(os.path.join(root, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, sort_keys=True, default=str)

    return ScenarioOutcome(
        plan=plan,
        seed=seed,
        root=root,
        store=store,
        audit=audit,
        engine=engine,
        bus=bus,
        subjects=subjects,
        trace=trace,
        trace_hash=trace_hash,
        metrics=metrics,
        runtime_s=_time.monotonic() - started,
    )


def _run_interventions(engine, subjects, plan, metrics, clock) -> None:
    for k, sub in enumerate(subjects[: plan.interventions]):
        open_ts = clock(10, 10, 5 * k)
        ticket = engine.open_intervention(
            sub.enrollment.i_number,
            "gateway unreachable since the nightly sync",
            IMT_ACTOR,
            EntityRole.IMT,
            open_ts,
        )
        engine.chat(
            ticket.ticket_id, IIT_ACTOR, EntityRole.IIT,
            "will check the router on site tomorrow", open_ts + timedelta(minutes=3),
        )
        engine.notify_fixed(ticket.ticket_id, IIT_ACTOR, clock(11, 9, 5 * k))
        engine.close_intervention(ticket.ticket_id, IMT_ACTOR, clock(11, 16, 5 * k))
        metrics["interventions_closed"] += 1


def _month_end(store, bus, subjects, seed, month, metrics, ts) -> None:
    win_start = SIM_BASE + timedelta(days=month * MONTH_DAYS)
    win_end = win_start + timedelta(days=MONTH_DAYS)
    for sub in subjects:
        payload, _labels = generate_d4(
            derive_int(seed, f"d4:{sub.index}:{month}"), sub.profile,
            start=win_start, days=MONTH_DAYS,
        )
        log = parse_location_history(payload)
        report = build_report(
            sub.enrollment.pid.value, log, win_start, win_end, MobilityConfig()
        )
        bus.send(TRUSTED_SERVER, UNIMI, {"type": "mobility_report", "fields": report}, ts)
        store.store_result(
            sub.enrollment.pid, "mobility_report",
            {k: v for k, v in report.items() if k != "pid"}, ts,
        )
        summary = (
            f"month {month + 1}: outside time, place habits and route "
            f"timing compiled from {MONTH_DAYS} days"
        )
        fields = {
            "pid": sub.enrollment.pid.value,
            "summary": summary,
            "generated_at": ts.isoformat(),
        }
        bus.send(UNIMI, HOS, {"type": "analysis_results", "fields": fields}, ts)
        store.store_result(
            sub.enrollment.pid, "analysis_results",
            {"summary": summary, "generated_at": ts.isoformat()}, ts,
        )
        metrics["reports"] += 1
    for sub in subjects[:3]:
        store.reassociate(sub.enrollment.pid, HOS_ACTOR, EntityRole.HOS, ts)
        metrics["reassociations"] += 1
