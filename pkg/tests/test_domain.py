import dataclasses
from datetime import date, datetime, time, timezone

import pytest

from telecare.domain import (
    AGE_OUT_OF_RANGE,
    EMPTY_FIELD,
    NO_CONTACTS,
    BreathingQuality,
    CognitiveReport,
    Contact,
    D0ValidationError,
    DomainError,
    EnvEvent,
    EnvEventKind,
    Gender,
    InstallationNumber,
    Pid,
    ReportKind,
    SubjectIdentity,
    SubjectRecordId,
    WearableDaily,
    canonical_bytes,
    sensed_record_from_wire,
    validate_d0,
)

VALID_D0 = {
    "first_name": "Maria",
    "last_name": "Rossi",
    "age": 74,
    "gender": "F",
    "address": "Via Roma 1, Milano",
    "contacts": [{"name": "Luca Rossi", "phone": "+39 333 1234567"}],
}


def test_valid_record_accepted():
    identity = validate_d0(VALID_D0)
    assert identity.first_name == "Maria"
    assert identity.last_name == "Rossi"
    assert identity.age == 74
    assert identity.gender is Gender.FEMALE
    assert identity.contacts == (Contact("Luca Rossi", "+39 333 1234567"),)


def test_validation_is_idempotent():
    once = validate_d0(VALID_D0)
    twice = validate_d0(once)
    assert once == twice


def test_empty_last_name_rejected():
    record = dict(VALID_D0, last_name="")
    with pytest.raises(D0ValidationError) as err:
        validate_d0(record)
    assert any(i.code == EMPTY_FIELD and i.field == "last_name" for i in err.value.issues)


def test_age_seventeen_rejected():
    record = dict(VALID_D0, age=17)
    with pytest.raises(D0ValidationError) as err:
        validate_d0(record)
    assert any(i.code == AGE_OUT_OF_RANGE for i in err.value.issues)


def test_missing_contacts_rejected():
    record = dict(VALID_D0, contacts=[])
    with pytest.raises(D0ValidationError) as err:
        validate_d0(record)
    assert any(i.code == NO_CONTACTS for i in err.value.issues)


def test_all_issues_collected_not_just_first():
    record = dict(VALID_D0, first_name=" ", age=150, contacts=[])
    with pytest.raises(D0ValidationError) as err:
        validate_d0(record)
    codes = {i.code for i in err.value.issues}
    assert codes == {EMPTY_FIELD, AGE_OUT_OF_RANGE, NO_CONTACTS}


def test_canonical_bytes_fixed_width_big_endian():
    assert canonical_bytes(SubjectRecordId(1)) == b"\x00" * 7 + b"\x01"
    assert canonical_bytes(SubjectRecordId(256)) == b"\x00" * 6 + b"\x01\x00"
    assert len(canonical_bytes(SubjectRecordId(2**63))) == 8


def test_canonical_bytes_injective_on_sample():
    sample = list(range(1, 2000)) + [10**6, 10**9, 2**40]
    encoded = {canonical_bytes(SubjectRecordId(n)) for n in sample}
    assert len(encoded) == len(sample)


def test_record_id_must_be_positive():
    with pytest.raises(DomainError):
        SubjectRecordId(0)
    with pytest.raises(DomainError):
        SubjectRecordId(-3)


def test_sensed_record_types_carry_no_identity_fields():
    # The separation argument rests on D1-D3 being structurally incapable of
    # holding identifying strings, so the field lists themselves are checked.
    banned = {"first_name", "last_name", "address", "phone", "contacts", "name"}
    for record_cls in (WearableDaily, CognitiveReport, EnvEvent):
        names = {f.name for f in dataclasses.fields(record_cls)}
        assert not names & banned, record_cls


def test_wearable_daily_roundtrip_and_bounds():
    record = WearableDaily(
        date=date(2025, 1, 6),
        steps=4200,
        avg_heart_rate=71.5,
        sleep_duration=433,
        sleep_quality=80,
        breathing_quality=BreathingQuality.SNORING,
        brushing_time=time(7, 55),
        brushing_duration=95,
    )
    assert WearableDaily.from_fields(record.as_fields()) == record
    with pytest.raises(DomainError):
        dataclasses.replace(record, sleep_duration=1441)
    with pytest.raises(DomainError):
        dataclasses.replace(record, steps=-1)


def test_cognitive_and_env_roundtrip():
    report = CognitiveReport(
        kind=ReportKind.MONTHLY_MMSE,
        date_time=datetime(2025, 1, 20, 10, 0, tzinfo=timezone.utc),
        payload="score=27",
        completed=True,
    )
    event = EnvEvent(
        timestamp=datetime(2025, 1, 6, 8, 30, tzinfo=timezone.utc),
        sensor_id="kitchen-presence",
        kind=EnvEventKind.PRESENCE,
    )
    assert sensed_record_from_wire("cognitive_report", report.as_fields()) == report
    assert sensed_record_from_wire("env_event", event.as_fields()) == event
    assert event.as_fields()["value"] is None


def test_handle_shapes():
    Pid("ab12" * 18)  # any even-length lowercase hex is shape-valid
    with pytest.raises(DomainError):
        Pid("AB12")
    with pytest.raises(DomainError):
        Pid("abc")  # odd length
    InstallationNumber("I-0001")
    with pytest.raises(DomainError):
        InstallationNumber("I-17")


def test_unknown_wire_type_rejected():
    with pytest.raises(DomainError):
        sensed_record_from_wire("identity_dump", {})
