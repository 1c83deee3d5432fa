"""Installation and intervention protocols, and the rules for what may
travel on each inter-party channel.

Tickets move through fixed state machines with a required role per step;
the monitoring team always performs the final close.  Direct messages
between parties pass an edge policy that pins, per sender-receiver pair,
which data classes and which infrastructure fields are allowed, so a
payload that would let two parties pool their knowledge into an identity
mapping is refused at send time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Callable, Mapping

from .audit import AccessType, AuditLog
from .domain import (
    Alias,
    EntityRole,
    InstallationNumber,
    Pid,
    SubjectIdentity,
    SubjectRecordId,
    validate_d0,
)
from .homegw import HomeGateway, RetentionPolicy
from .pseudonym import AliasDirectory, InstallationSequence, PseudonymEngine
from .rbac import DataClass, field_class

# Channel endpoints. Roles reuse their role names; the two machines that
# talk on their own behalf get names of their own.
HOS = "HOS"
UNIMI = "UniMi"
IIT = "IIT"
IMT = "IMT"
HOMEGW = "HomeGW"
TRUSTED_SERVER = "TrustedServer"


class WorkflowError(Exception):
    pass


class InvalidTransition(WorkflowError):
    pass


class RoleNotAllowed(WorkflowError):
    pass


class EdgeViolation(WorkflowError):
    def __init__(self, sender: str, receiver: str, offending: list[str]):
        self.sender, self.receiver, self.offending = sender, receiver, offending
        super().__init__(f"{sender}->{receiver} may not carry: {', '.join(offending)}")


class UnknownTicket(WorkflowError):
    pass


class UnknownInstallation(WorkflowError):
    pass


class DuplicateSubject(WorkflowError):
    pass


class AcquisitionNotVerified(WorkflowError):
    """The bound gateway has not yet sensed all three data classes."""


class ChatRejected(WorkflowError):
    """The message would carry identifying content between the teams."""


COHORTS = ("mci_neurodegenerative", "mci_other")

# anything shaped like a pseudonym must never ride the shared chat
_PID_SHAPE = re.compile(r"[0-9a-fA-F]{64,}")


# --- edge policy ---------------------------------------------------------------

@dataclass(frozen=True)
class EdgeRule:
    classes: frozenset[DataClass]
    infra_fields: frozenset[str]


_NO_EDGE = EdgeRule(frozenset(), frozenset())

EDGE_POLICY: dict[tuple[str, str], EdgeRule] = {
    (HOS, IIT): EdgeRule(
        frozenset({DataClass.D0_IDENTITY, DataClass.D0_NOTES}), frozenset({"i_number"})
    ),
    (HOS, IMT): EdgeRule(frozenset(), frozenset({"pid", "alias", "i_number"})),
    (IIT, IMT): EdgeRule(frozenset(), frozenset({"i_number", "chat"})),
    (IMT, IIT): EdgeRule(frozenset(), frozenset({"i_number", "chat"})),
    (HOMEGW, UNIMI): EdgeRule(
        frozenset({DataClass.D1, DataClass.D2, DataClass.D3}), frozenset({"pid", "batch_id"})
    ),
    (TRUSTED_SERVER, UNIMI): EdgeRule(frozenset({DataClass.D4_RESULTS}), frozenset({"pid"})),
    (UNIMI, HOS): EdgeRule(frozenset({DataClass.ANALYSIS_RESULTS}), frozenset({"pid"})),
}


def check_edge(sender: str, receiver: str, message: Mapping[str, Any]) -> None:
    """Refuse any field the directed edge is not explicitly cleared for."""
    rule = EDGE_POLICY.get((sender, receiver), _NO_EDGE)
    offending: list[str] = []

    def walk(msg: Mapping[str, Any]) -> None:
        if "parts" in msg:
            for part in msg["parts"]:
                walk(part)
            return
        record_type = msg["type"]
        for name in msg["fields"]:
            data_class = field_class(record_type, name)
            if data_class is DataClass.INFRA_META:
                if name not in rule.infra_fields:
                    offending.append(f"{record_type}.{name}")
            elif data_class not in rule.classes:
                offending.append(f"{record_type}.{name}")

    walk(message)
    if offending:
        raise EdgeViolation(sender, receiver, offending)


@dataclass(frozen=True)
class Delivery:
    seq: int
    ts: str
    sender: str
    receiver: str
    message: dict[str, Any]


class MessageBus:
    """In-memory channel with a full delivery trace; every send is edge-checked."""

    def __init__(self) -> None:
        self._deliveries: list[Delivery] = []
        self._inboxes: dict[str, list[Delivery]] = {}

    def send(self, sender: str, receiver: str, message: Mapping[str, Any], ts: datetime) -> Delivery:
        check_edge(sender, receiver, message)
        delivery = Delivery(
            seq=len(self._deliveries),
            ts=ts.isoformat(),
            sender=sender,
            receiver=receiver,
            message=dict(message),
        )
        self._deliveries.append(delivery)
        self._inboxes.setdefault(receiver, []).append(delivery)
        return delivery

    def inbox(self, receiver: str) -> list[Delivery]:
        return list(self._inboxes.get(receiver, []))

    def trace(self) -> list[Delivery]:
        return list(self._deliveries)


# --- tickets ---------------------------------------------------------------------

INSTALLATION = "installation"
INTERVENTION = "intervention"

REQUESTED = "Requested"
VISIT_PLANNED = "VisitPlanned"
INFRA_READY = "InfraReady"
INSTALLED = "Installed"
OPENED = "Opened"
FIX_NOTIFIED = "FixNotified"
CLOSED = "Closed"

# op -> (from_state, to_state, required_role)
_INSTALLATION_OPS: dict[str, tuple[str, str, EntityRole]] = {
    "plan_visit": (REQUESTED, VISIT_PLANNED, EntityRole.IIT),
    "prepare_infra": (VISIT_PLANNED, INFRA_READY, EntityRole.IMT),
    "install": (INFRA_READY, INSTALLED, EntityRole.IIT),
    "verify_close": (INSTALLED, CLOSED, EntityRole.IMT),
}
_INTERVENTION_OPS: dict[str, tuple[str, str, EntityRole]] = {
    "notify_fixed": (OPENED, FIX_NOTIFIED, EntityRole.IIT),
    "close": (FIX_NOTIFIED, CLOSED, EntityRole.IMT),
}
TRANSITIONS: dict[str, dict[str, tuple[str, str, EntityRole]]] = {
    INSTALLATION: _INSTALLATION_OPS,
    INTERVENTION: _INTERVENTION_OPS,
}


@dataclass(frozen=True)
class TransitionEntry:
    state: str
    actor_id: str
    role: EntityRole
    ts: str


@dataclass(frozen=True)
class ChatMessage:
    author_id: str
    role: EntityRole
    text: str
    ts: str


@dataclass
class Ticket:
    ticket_id: int
    kind: str
    state: str
    i_number: InstallationNumber
    alias: Alias
    notes: str = ""              # visit notes, data class D0_notes
    map_ref: str | None = None   # apartment-map attachment reference, D0_notes
    history: list[TransitionEntry] = field(default_factory=list)
    chat: list[ChatMessage] = field(default_factory=list)

    def fields(self) -> dict[str, Any]:
        return {
            "ticket_id": self.ticket_id,
            "kind": self.kind,
            "state": self.state,
            "i_number": self.i_number.value,
            "alias": self.alias.value,
            "notes": self.notes,
            "map_ref": self.map_ref,
            "history": [
                {"state": h.state, "actor_id": h.actor_id, "role": h.role.value, "ts": h.ts}
                for h in self.history
            ],
            "chat": [
                {"author_id": c.author_id, "role": c.role.value, "text": c.text, "ts": c.ts}
                for c in self.chat
            ],
        }


@dataclass(frozen=True)
class EnrollmentResult:
    record_id: SubjectRecordId
    pid: Pid
    alias: Alias
    i_number: InstallationNumber
    ticket_id: int
    identity: SubjectIdentity
    cohort: str


class WorkflowEngine:
    """Runs the enrollment, installation and intervention protocols."""

    def __init__(
        self,
        pseudonyms: PseudonymEngine,
        aliases: AliasDirectory,
        installations: InstallationSequence,
        audit: AuditLog,
        bus: MessageBus,
        on_enrolled: Callable[[EnrollmentResult], None] | None = None,
        gateway_retention: RetentionPolicy = RetentionPolicy(),
    ):
        self._pseudonyms = pseudonyms
        self._aliases = aliases
        self._installations = installations
        self._audit = audit
        self._bus = bus
        self._on_enrolled = on_enrolled
        self._gateway_retention = gateway_retention
        self._tickets: dict[int, Ticket] = {}
        self._next_record_id = 1
        self._i_number_alias: dict[str, Alias] = {}
        self._i_number_pid: dict[str, Pid] = {}
        self._gateways: dict[str, HomeGateway] = {}
        self._seen_subjects: set[tuple[str, str, str]] = set()
        self._identity_needles: list[str] = []

    # -- enrollment (protocol step 1) --

    def enroll_subject(
        self,
        identity_fields: Mapping[str, Any],
        cohort: str,
        actor_id: str,
        role: EntityRole,
        ts: datetime,
    ) -> EnrollmentResult:
        if role is not EntityRole.HOS:
            self._audit.append(actor_id, AccessType.ACCESS_DENIED, "enroll", ts)
            raise RoleNotAllowed(f"{role.value} may not enroll subjects")
        if cohort not in COHORTS:
            raise WorkflowError(f"unknown cohort {cohort!r}")
        identity = validate_d0(identity_fields)
        subject_key = (
            identity.first_name.casefold(),
            identity.last_name.casefold(),
            identity.address.casefold(),
        )
        if subject_key in self._seen_subjects:
            raise DuplicateSubject(
                f"{identity.first_name} {identity.last_name} is already enrolled"
            )
        record_id = SubjectRecordId(self._next_record_id)
        self._next_record_id += 1
        pid = self._pseudonyms.new_pid(record_id)
        alias = self._aliases.assign(pid)
        i_number = self._installations.next()
        self._i_number_alias[i_number.value] = alias
        self._i_number_pid[i_number.value] = pid
        self._seen_subjects.add(subject_key)
        self._identity_needles.extend(identity.identity_strings())

        ticket = self._new_ticket(INSTALLATION, REQUESTED, i_number, alias, actor_id, EntityRole.HOS, ts)

        # the installers get who and where; the monitors get the handles
        self._bus.send(
            HOS,
            IIT,
            {
                "parts": [
                    {"type": "subject_identity", "fields": identity.as_fields()},
                    {"type": "install_ref", "fields": {"i_number": i_number.value}},
                ]
            },
            ts,
        )
        self._bus.send(
            HOS,
            IMT,
            {
                "type": "monitor_ref",
                "fields": {"pid": pid.value, "alias": alias.value, "i_number": i_number.value},
            },
            ts,
        )

        result = EnrollmentResult(record_id, pid, alias, i_number, ticket.ticket_id, identity, cohort)
        if self._on_enrolled is not None:
            self._on_enrolled(result)
        return result

    # -- intervention opening --

    def open_intervention(
        self, i_number: InstallationNumber, description: str, actor_id: str, role: EntityRole, ts: datetime
    ) -> Ticket:
        if role is not EntityRole.IMT:
            self._audit.append(actor_id, AccessType.ACCESS_DENIED, f"installation:{i_number.value}", ts)
            raise RoleNotAllowed(f"{role.value} may not open interventions")
        installs = [
            t for t in self.tickets()
            if t.kind == INSTALLATION and t.i_number == i_number
        ]
        if not installs:
            raise UnknownInstallation(f"no installation {i_number.value}")
        if installs[-1].state != CLOSED:
            raise InvalidTransition(
                f"installation {i_number.value} is not closed yet"
            )
        self._guard_text(description, actor_id, f"installation:{i_number.value}", ts)
        alias = self._i_number_alias[i_number.value]
        ticket = self._new_ticket(INTERVENTION, OPENED, i_number, alias, actor_id, role, ts)
        ticket.chat.append(ChatMessage(actor_id, role, description, ts.isoformat()))
        self._bus.send(
            IMT,
            IIT,
            {"type": "chat_message", "fields": {"i_number": i_number.value, "chat": description}},
            ts,
        )
        return ticket

    def _new_ticket(
        self,
        kind: str,
        state: str,
        i_number: InstallationNumber,
        alias: Alias,
        actor_id: str,
        role: EntityRole,
        ts: datetime,
    ) -> Ticket:
        ticket = Ticket(
            ticket_id=len(self._tickets) + 1,
            kind=kind,
            state=state,
            i_number=i_number,
            alias=alias,
            history=[TransitionEntry(state, actor_id, role, ts.isoformat())],
        )
        self._tickets[ticket.ticket_id] = ticket
        self._audit.append(actor_id, AccessType.ACCESS_ALLOWED, f"ticket:{ticket.ticket_id}", ts)
        return ticket

    # -- transitions --

    def transition(
        self,
        ticket_id: int,
        op: str,
        actor_id: str,
        role: EntityRole,
        ts: datetime,
        *,
        notes: str | None = None,
        map_ref: str | None = None,
    ) -> Ticket:
        ticket = self.get_ticket(ticket_id)
        ops = TRANSITIONS[ticket.kind]
        if op not in ops:
            raise InvalidTransition(f"{ticket.kind} tickets have no operation {op!r}")
        from_state, to_state, required_role = ops[op]
        if role is not required_role:
            self._audit.append(actor_id, AccessType.ACCESS_DENIED, f"ticket:{ticket_id}", ts)
            raise RoleNotAllowed(f"{op} is performed by {required_role.value}, not {role.value}")
        if ticket.state != from_state:
            raise InvalidTransition(
                f"{op} needs state {from_state}, ticket {ticket_id} is {ticket.state}"
            )
        if op == "verify_close":
            self._check_acquisition(ticket)
        ticket.state = to_state
        ticket.history.append(TransitionEntry(to_state, actor_id, role, ts.isoformat()))
        self._audit.append(actor_id, AccessType.ACCESS_ALLOWED, f"ticket:{ticket_id}", ts)
        if op == "plan_visit":
            if notes:
                ticket.notes = notes
            if map_ref:
                ticket.map_ref = map_ref
        elif op == "prepare_infra":
            self._bind_gateway(ticket)
        return ticket

    def _bind_gateway(self, ticket: Ticket) -> None:
        number = ticket.i_number.value
        if number not in self._gateways:
            self._gateways[number] = HomeGateway(
                self._i_number_pid[number], ticket.i_number, self._audit,
                retention=self._gateway_retention,
            )

    def _check_acquisition(self, ticket: Ticket) -> None:
        # closing requires proof that every sensed class actually arrives
        gateway = self._gateways.get(ticket.i_number.value)
        sensed = {type(r).WIRE_TYPE for r in gateway.records()} if gateway else set()
        missing = {"wearable_daily", "cognitive_report", "env_event"} - sensed
        if missing:
            raise AcquisitionNotVerified(
                f"installation {ticket.i_number.value} has no data yet for: "
                + ", ".join(sorted(missing))
            )

    def gateway_for(self, i_number: InstallationNumber | str) -> HomeGateway:
        number = i_number.value if isinstance(i_number, InstallationNumber) else i_number
        try:
            return self._gateways[number]
        except KeyError:
            raise UnknownInstallation(f"no gateway bound for {number}") from None

    def plan_visit(
        self,
        ticket_id: int,
        actor_id: str,
        ts: datetime,
        notes: str = "",
        map_ref: str | None = None,
    ) -> Ticket:
        return self.transition(
            ticket_id, "plan_visit", actor_id, EntityRole.IIT, ts, notes=notes, map_ref=map_ref
        )

    def prepare_infra(self, ticket_id: int, actor_id: str, ts: datetime) -> Ticket:
        return self.transition(ticket_id, "prepare_infra", actor_id, EntityRole.IMT, ts)

    def install(self, ticket_id: int, actor_id: str, ts: datetime) -> Ticket:
        return self.transition(ticket_id, "install", actor_id, EntityRole.IIT, ts)

    def verify_close(self, ticket_id: int, actor_id: str, ts: datetime) -> Ticket:
        return self.transition(ticket_id, "verify_close", actor_id, EntityRole.IMT, ts)

    def notify_fixed(self, ticket_id: int, actor_id: str, ts: datetime) -> Ticket:
        ticket = self.transition(ticket_id, "notify_fixed", actor_id, EntityRole.IIT, ts)
        self._bus.send(
            IIT,
            IMT,
            {"type": "chat_message", "fields": {"i_number": ticket.i_number.value, "chat": "fixed"}},
            ts,
        )
        return ticket

    def close_intervention(self, ticket_id: int, actor_id: str, ts: datetime) -> Ticket:
        return self.transition(ticket_id, "close", actor_id, EntityRole.IMT, ts)

    # -- chat --

    def _guard_text(self, text: str, author_id: str, resource: str, ts: datetime) -> None:
        """Refuse messages carrying identity strings or pseudonym-shaped tokens.

        The shared chat is the one channel where the team that knows names
        and the team that knows pseudonyms could pool their knowledge, so
        both vocabularies are banned from it.
        """
        if _PID_SHAPE.search(text):
            self._audit.append(author_id, AccessType.ACCESS_DENIED, resource, ts)
            raise ChatRejected("message contains a pseudonym-shaped token")
        for needle in self._identity_needles:
            if needle in text:
                self._audit.append(author_id, AccessType.ACCESS_DENIED, resource, ts)
                raise ChatRejected("message contains enrolled identifying data")

    def chat(self, ticket_id: int, author_id: str, role: EntityRole, text: str, ts: datetime) -> ChatMessage:
        ticket = self.get_ticket(ticket_id)
        if role not in (EntityRole.IIT, EntityRole.IMT):
            self._audit.append(author_id, AccessType.ACCESS_DENIED, f"ticket:{ticket_id}", ts)
            raise RoleNotAllowed("ticket chat is for the infrastructure teams")
        self._guard_text(text, author_id, f"ticket:{ticket_id}", ts)
        message = ChatMessage(author_id, role, text, ts.isoformat())
        ticket.chat.append(message)
        self._audit.append(author_id, AccessType.ACCESS_ALLOWED, f"ticket:{ticket_id}", ts)
        counterpart = IMT if role is EntityRole.IIT else IIT
        self._bus.send(
            role.value,
            counterpart,
            {"type": "chat_message", "fields": {"i_number": ticket.i_number.value, "chat": text}},
            ts,
        )
        return message

    # -- views --

    def get_ticket(self, ticket_id: int) -> Ticket:
        try:
            return self._tickets[ticket_id]
        except KeyError:
            raise UnknownTicket(f"no ticket {ticket_id}") from None

    def tickets(self) -> list[Ticket]:
        return [self._tickets[k] for k in sorted(self._tickets)]

    def tickets_for_installation(self, i_number: InstallationNumber) -> list[Ticket]:
        return [t for t in self.tickets() if t.i_number == i_number]

    def installations(self) -> list[dict[str, str]]:
        return [
            {"i_number": number, "alias": alias.value}
            for number, alias in sorted(self._i_number_alias.items())
        ]
