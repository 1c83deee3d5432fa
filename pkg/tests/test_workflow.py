import random
from datetime import datetime, timezone

import pytest

from telecare.audit import AccessType, AuditLog
from telecare.domain import EntityRole, InstallationNumber
from telecare.generators import commissioning_records
from telecare.pseudonym import AliasDirectory, InstallationSequence, PseudonymEngine
from telecare.rbac import UnclassifiedField, redact_view
from telecare.workflow import (
    CLOSED,
    COHORTS,
    EDGE_POLICY,
    FIX_NOTIFIED,
    HOMEGW,
    HOS,
    IIT,
    IMT,
    INFRA_READY,
    INSTALLATION,
    INSTALLED,
    INTERVENTION,
    OPENED,
    REQUESTED,
    TRANSITIONS,
    TRUSTED_SERVER,
    UNIMI,
    VISIT_PLANNED,
    AcquisitionNotVerified,
    ChatRejected,
    DuplicateSubject,
    EdgeViolation,
    InvalidTransition,
    MessageBus,
    RoleNotAllowed,
    UnknownInstallation,
    WorkflowEngine,
    WorkflowError,
    check_edge,
)

T0 = datetime(2025, 1, 6, 9, 0, tzinfo=timezone.utc)

IDENTITY = {
    "first_name": "Maria",
    "last_name": "Rossi",
    "age": 74,
    "gender": "F",
    "address": "Via Roma 1, Milano",
    "contacts": [{"name": "Luca Rossi", "phone": "+39 333 1234567"}],
}


def seeded_nonce_source(seed: int):
    rng = random.Random(seed)
    return lambda n: bytes(rng.randrange(256) for _ in range(n))


@pytest.fixture
def engine(tmp_path):
    audit = AuditLog(str(tmp_path / "audit.tsv"))
    return WorkflowEngine(
        pseudonyms=PseudonymEngine(b"\x00" * 32, nonce_source=seeded_nonce_source(1)),
        aliases=AliasDirectory(),
        installations=InstallationSequence(),
        audit=audit,
        bus=MessageBus(),
    )


def enroll(engine, identity=IDENTITY, cohort=COHORTS[0]):
    return engine.enroll_subject(identity, cohort, "hos-1", EntityRole.HOS, T0)


def seed_acquisition(engine, i_number):
    gateway = engine.gateway_for(i_number)
    for record in commissioning_records(T0.date()):
        gateway.ingest(record, T0)


def close_installation(engine, result):
    engine.plan_visit(result.ticket_id, "iit-1", T0)
    engine.prepare_infra(result.ticket_id, "imt-1", T0)
    seed_acquisition(engine, result.i_number)
    engine.install(result.ticket_id, "iit-1", T0)
    return engine.verify_close(result.ticket_id, "imt-1", T0)


# --- installation protocol -----------------------------------------------------

def test_full_installation_protocol(engine):
    result = enroll(engine)
    ticket = close_installation(engine, result)

    assert [h.state for h in ticket.history] == [
        REQUESTED, VISIT_PLANNED, INFRA_READY, INSTALLED, CLOSED,
    ]
    assert len(ticket.history) == 5
    assert ticket.history[-1].role is EntityRole.IMT  # always closed by the monitors
    assert ticket.state == CLOSED


def test_enroll_requires_hos(engine):
    for role in (EntityRole.IIT, EntityRole.IMT, EntityRole.UNIMI, EntityRole.TELMED):
        with pytest.raises(RoleNotAllowed):
            engine.enroll_subject(IDENTITY, COHORTS[0], "x", role, T0)
    assert engine._audit.records()[-1].access_type == AccessType.ACCESS_DENIED


def test_unknown_cohort_rejected(engine):
    with pytest.raises(WorkflowError):
        engine.enroll_subject(IDENTITY, "control_group", "hos-1", EntityRole.HOS, T0)


def test_cohort_recorded(engine):
    a = enroll(engine, cohort=COHORTS[0])
    b = enroll(engine, dict(IDENTITY, first_name="Anna"), cohort=COHORTS[1])
    assert a.cohort == "mci_neurodegenerative"
    assert b.cohort == "mci_other"


def test_duplicate_subject_rejected(engine):
    enroll(engine)
    with pytest.raises(DuplicateSubject):
        enroll(engine)
    # same name at another address is someone else
    enroll(engine, dict(IDENTITY, address="Via Po 9, Pavia"))


def test_enrollment_assigns_handles_in_sequence(engine):
    first = enroll(engine)
    second = enroll(engine, dict(IDENTITY, first_name="Anna"))
    assert first.i_number == InstallationNumber("I-0001")
    assert second.i_number == InstallationNumber("I-0002")
    assert first.record_id.value == 1 and second.record_id.value == 2
    assert first.pid != second.pid
    assert first.alias != second.alias


def test_enrollment_notifications_split_knowledge(engine):
    result = enroll(engine)
    trace = engine._bus.trace()
    assert [(d.sender, d.receiver) for d in trace] == [(HOS, IIT), (HOS, IMT)]

    to_installers = trace[0].message
    flat = str(to_installers)
    assert "Maria" in flat and "Via Roma 1" in flat and result.i_number.value in flat
    assert result.pid.value not in flat  # installers never see the pseudonym

    to_monitors = trace[1].message
    assert to_monitors["fields"] == {
        "pid": result.pid.value,
        "alias": result.alias.value,
        "i_number": result.i_number.value,
    }
    for identifying in ("Maria", "Rossi", "Via Roma"):
        assert identifying not in str(to_monitors)


def test_enrollment_hook_fires(tmp_path):
    seen = []
    engine = WorkflowEngine(
        pseudonyms=PseudonymEngine(b"\x00" * 32, nonce_source=seeded_nonce_source(2)),
        aliases=AliasDirectory(),
        installations=InstallationSequence(),
        audit=AuditLog(str(tmp_path / "a.tsv")),
        bus=MessageBus(),
        on_enrolled=seen.append,
    )
    result = enroll(engine)
    assert seen == [result]


def test_wrong_role_is_refused_and_logged(engine):
    result = enroll(engine)
    before = len(engine._audit)
    with pytest.raises(RoleNotAllowed):
        engine.transition(result.ticket_id, "plan_visit", "imt-1", EntityRole.IMT, T0)
    assert len(engine._audit) == before + 1
    assert engine._audit.records()[-1].access_type == AccessType.ACCESS_DENIED
    assert engine.get_ticket(result.ticket_id).state == REQUESTED


def test_out_of_order_step_is_refused_without_audit_noise(engine):
    result = enroll(engine)
    before = len(engine._audit)
    with pytest.raises(InvalidTransition):
        engine.prepare_infra(result.ticket_id, "imt-1", T0)  # visit not yet planned
    assert len(engine._audit) == before


def test_protocol_writes_five_allowed_audit_records(engine):
    result = enroll(engine)
    close_installation(engine, result)
    ticket_records = [
        r
        for r in engine._audit.records()
        if r.resource == f"ticket:{result.ticket_id}"
        and r.access_type == AccessType.ACCESS_ALLOWED
    ]
    assert len(ticket_records) == 5


def test_prepare_infra_binds_gateway(engine):
    result = enroll(engine)
    with pytest.raises(UnknownInstallation):
        engine.gateway_for(result.i_number)
    engine.plan_visit(result.ticket_id, "iit-1", T0)
    engine.prepare_infra(result.ticket_id, "imt-1", T0)
    gateway = engine.gateway_for(result.i_number)
    assert gateway.pid == result.pid
    assert gateway.i_number == result.i_number


def test_verify_close_requires_one_record_of_each_class(engine):
    result = enroll(engine)
    engine.plan_visit(result.ticket_id, "iit-1", T0)
    engine.prepare_infra(result.ticket_id, "imt-1", T0)
    engine.install(result.ticket_id, "iit-1", T0)

    with pytest.raises(AcquisitionNotVerified):
        engine.verify_close(result.ticket_id, "imt-1", T0)

    gateway = engine.gateway_for(result.i_number)
    wearable, cognitive, env = commissioning_records(T0.date())
    gateway.ingest(wearable, T0)
    gateway.ingest(env, T0)
    with pytest.raises(AcquisitionNotVerified) as err:
        engine.verify_close(result.ticket_id, "imt-1", T0)
    assert "cognitive_report" in str(err.value)
    assert engine.get_ticket(result.ticket_id).state == INSTALLED

    gateway.ingest(cognitive, T0)
    assert engine.verify_close(result.ticket_id, "imt-1", T0).state == CLOSED


def test_plan_visit_stores_notes_as_restricted_class(engine):
    result = enroll(engine)
    ticket = engine.plan_visit(
        result.ticket_id, "iit-1", T0,
        notes="two motion sensors in the hallway", map_ref="plan-204.pdf",
    )
    fields = ticket.fields()
    assert fields["notes"] == "two motion sensors in the hallway"
    assert fields["map_ref"] == "plan-204.pdf"
    # the monitoring team gets the ticket without the visit notes
    monitor_view = redact_view("ticket", fields, EntityRole.IMT)
    assert "notes" not in monitor_view and "map_ref" not in monitor_view
    assert monitor_view["i_number"] == result.i_number.value
    installer_view = redact_view("ticket", fields, EntityRole.IIT)
    assert installer_view["notes"] == "two motion sensors in the hallway"


INSTALLATION_STATES = [REQUESTED, VISIT_PLANNED, INFRA_READY, INSTALLED, CLOSED]
INTERVENTION_STATES = [OPENED, FIX_NOTIFIED, CLOSED]


def make_ticket(engine, kind):
    if kind == INSTALLATION:
        result = enroll(engine)
        # bind and feed the gateway so verify_close is reachable, then put
        # the ticket back at the start for the state matrix
        engine.plan_visit(result.ticket_id, "iit-1", T0)
        engine.prepare_infra(result.ticket_id, "imt-1", T0)
        seed_acquisition(engine, result.i_number)
        ticket = engine.get_ticket(result.ticket_id)
        ticket.state = REQUESTED
        return result.ticket_id
    result = enroll(engine)
    close_installation(engine, result)
    return engine.open_intervention(
        result.i_number, "router down", "imt-1", EntityRole.IMT, T0
    ).ticket_id


def test_every_transition_only_fires_from_its_source_state(tmp_path):
    for kind, states in ((INSTALLATION, INSTALLATION_STATES), (INTERVENTION, INTERVENTION_STATES)):
        for op, (from_state, to_state, role) in TRANSITIONS[kind].items():
            for state in states:
                engine = WorkflowEngine(
                    pseudonyms=PseudonymEngine(b"\x00" * 32, nonce_source=seeded_nonce_source(9)),
                    aliases=AliasDirectory(),
                    installations=InstallationSequence(),
                    audit=AuditLog(str(tmp_path / f"{kind}-{op}-{state}.tsv")),
                    bus=MessageBus(),
                )
                ticket_id = make_ticket(engine, kind)
                engine.get_ticket(ticket_id).state = state
                if state == from_state:
                    assert engine.transition(ticket_id, op, "actor", role, T0).state == to_state
                else:
                    with pytest.raises(InvalidTransition):
                        engine.transition(ticket_id, op, "actor", role, T0)


def test_every_transition_rejects_every_other_role(engine):
    ticket_id = make_ticket(engine, INSTALLATION)
    for op, (from_state, _to, required) in TRANSITIONS[INSTALLATION].items():
        engine.get_ticket(ticket_id).state = from_state
        for role in EntityRole:
            if role is required:
                continue
            with pytest.raises(RoleNotAllowed):
                engine.transition(ticket_id, op, "actor", role, T0)
        assert engine.get_ticket(ticket_id).state == from_state


def test_unknown_op_and_unknown_ticket(engine):
    ticket_id = make_ticket(engine, INSTALLATION)
    with pytest.raises(InvalidTransition):
        engine.transition(ticket_id, "notify_fixed", "iit-1", EntityRole.IIT, T0)
    from telecare.workflow import UnknownTicket
    with pytest.raises(UnknownTicket):
        engine.get_ticket(999)


# --- intervention protocol -------------------------------------------------------

def test_intervention_protocol(engine):
    enrolled = enroll(engine)
    close_installation(engine, enrolled)
    ticket = engine.open_intervention(enrolled.i_number, "sensor offline", "imt-1", EntityRole.IMT, T0)
    assert ticket.kind == INTERVENTION and ticket.state == OPENED
    assert ticket.chat[0].text == "sensor offline"

    engine.notify_fixed(ticket.ticket_id, "iit-1", T0)
    closed = engine.close_intervention(ticket.ticket_id, "imt-1", T0)
    assert closed.state == CLOSED
    assert closed.history[-1].role is EntityRole.IMT

    senders = [(d.sender, d.receiver) for d in engine._bus.trace()]
    assert (IMT, IIT) in senders and (IIT, IMT) in senders


def test_only_monitors_open_interventions(engine):
    enrolled = enroll(engine)
    close_installation(engine, enrolled)
    with pytest.raises(RoleNotAllowed):
        engine.open_intervention(enrolled.i_number, "broken", "iit-1", EntityRole.IIT, T0)


def test_intervention_needs_known_closed_installation(engine):
    with pytest.raises(UnknownInstallation):
        engine.open_intervention(InstallationNumber("I-0042"), "dead", "imt-1", EntityRole.IMT, T0)
    enrolled = enroll(engine)
    with pytest.raises(InvalidTransition):
        engine.open_intervention(enrolled.i_number, "dead", "imt-1", EntityRole.IMT, T0)


# --- chat ------------------------------------------------------------------------

def test_chat_between_infrastructure_teams(engine):
    ticket_id = make_ticket(engine, INSTALLATION)
    engine.chat(ticket_id, "iit-1", EntityRole.IIT, "doorbell code?", T0)
    engine.chat(ticket_id, "imt-1", EntityRole.IMT, "1234", T0)
    ticket = engine.get_ticket(ticket_id)
    assert [c.text for c in ticket.chat] == ["doorbell code?", "1234"]
    chat_deliveries = [d for d in engine._bus.trace() if d.message.get("type") == "chat_message"]
    assert [(d.sender, d.receiver) for d in chat_deliveries] == [(IIT, IMT), (IMT, IIT)]


def test_chat_refused_for_other_roles(engine):
    ticket_id = make_ticket(engine, INSTALLATION)
    for role in (EntityRole.HOS, EntityRole.UNIMI, EntityRole.TELMED):
        with pytest.raises(RoleNotAllowed):
            engine.chat(ticket_id, "x", role, "hello", T0)


def test_chat_rejects_enrolled_identity_strings(engine):
    ticket_id = make_ticket(engine, INSTALLATION)
    before = len(engine._audit)
    for leak in ("is Maria home?", "ask Luca Rossi", "call +39 333 1234567",
                 "address is Via Roma 1, Milano"):
        with pytest.raises(ChatRejected):
            engine.chat(ticket_id, "iit-1", EntityRole.IIT, leak, T0)
    assert engine.get_ticket(ticket_id).chat == []
    denied = [r for r in engine._audit.records()[before:]
              if r.access_type == AccessType.ACCESS_DENIED]
    assert len(denied) == 4


def test_chat_rejects_pseudonym_shaped_tokens(engine):
    ticket_id = make_ticket(engine, INSTALLATION)
    with pytest.raises(ChatRejected):
        engine.chat(ticket_id, "imt-1", EntityRole.IMT, f"subject {'ab' * 36} acting up", T0)
    # short hex fragments are ordinary technical chatter
    engine.chat(ticket_id, "imt-1", EntityRole.IMT, "mac is 00aabbccddee", T0)


def test_intervention_description_is_guarded(engine):
    enrolled = enroll(engine)
    close_installation(engine, enrolled)
    with pytest.raises(ChatRejected):
        engine.open_intervention(
            enrolled.i_number, "Maria reported a power cut", "imt-1", EntityRole.IMT, T0
        )


# --- edge policy ------------------------------------------------------------------

def identity_msg():
    return {"type": "subject_identity", "fields": dict(IDENTITY)}


def test_identity_never_rides_the_gateway_channel():
    with pytest.raises(EdgeViolation):
        check_edge(HOMEGW, UNIMI, identity_msg())


def test_enrollment_edges_allow_their_payloads():
    check_edge(HOS, IIT, {"parts": [identity_msg(), {"type": "install_ref", "fields": {"i_number": "I-0001"}}]})
    check_edge(HOS, IMT, {"type": "monitor_ref", "fields": {"pid": "ab" * 36, "alias": "Nova", "i_number": "I-0001"}})


def test_pid_never_reaches_installers():
    with pytest.raises(EdgeViolation) as err:
        check_edge(HOS, IIT, {"type": "monitor_ref", "fields": {"pid": "ab" * 36, "i_number": "I-0001"}})
    assert "monitor_ref.pid" in err.value.offending


def test_identity_never_reaches_monitors():
    with pytest.raises(EdgeViolation):
        check_edge(HOS, IMT, identity_msg())


def test_gateway_sync_payload_passes():
    check_edge(
        HOMEGW,
        UNIMI,
        {
            "parts": [
                {"type": "sync_meta", "fields": {"pid": "ab" * 36, "batch_id": "b-1"}},
                {"type": "wearable_daily", "fields": {"date": "2025-01-06", "steps": 4200}},
                {"type": "env_event", "fields": {"timestamp": "t", "kind": "presence"}},
                {"type": "cognitive_report", "fields": {"kind": "weekly_test", "completed": True}},
            ]
        },
    )


def test_raw_mobility_never_leaves_by_any_edge():
    raw = {"type": "mobility_log", "fields": {"visited_places": []}}
    for sender, receiver in list(EDGE_POLICY) + [(TRUSTED_SERVER, UNIMI), (UNIMI, HOS)]:
        with pytest.raises(EdgeViolation):
            check_edge(sender, receiver, raw)


def test_results_edges():
    report = {
        "type": "mobility_report",
        "fields": {"pid": "ab" * 36, "daily_outside": [], "window": {"start": "2025-01-06"}},
    }
    check_edge(TRUSTED_SERVER, UNIMI, report)
    with pytest.raises(EdgeViolation):
        check_edge(HOMEGW, UNIMI, report)

    summary = {"type": "analysis_results", "fields": {"pid": "ab" * 36, "summary": "stable"}}
    check_edge(UNIMI, HOS, summary)
    with pytest.raises(EdgeViolation):
        check_edge(HOS, UNIMI, summary)  # no return channel for results


def test_undeclared_edges_carry_nothing():
    msg = {"type": "chat_message", "fields": {"i_number": "I-0001"}}
    with pytest.raises(EdgeViolation):
        check_edge(IIT, UNIMI, msg)
    with pytest.raises(EdgeViolation):
        check_edge("TelMed", HOS, msg)


def test_unclassified_fields_blow_up_loudly():
    with pytest.raises(UnclassifiedField):
        check_edge(HOS, IIT, {"type": "subject_identity", "fields": {"ssn": "123"}})


def test_bus_keeps_an_ordered_trace(engine):
    enroll(engine)
    enroll(engine, dict(IDENTITY, first_name="Anna"))
    trace = engine._bus.trace()
    assert [d.seq for d in trace] == [0, 1, 2, 3]
    assert len(engine._bus.inbox(IIT)) == 2
    assert len(engine._bus.inbox(IMT)) == 2


def test_bus_refuses_violating_sends(engine):
    bus = MessageBus()
    with pytest.raises(EdgeViolation):
        bus.send(HOMEGW, UNIMI, identity_msg(), T0)
    assert bus.trace() == []
