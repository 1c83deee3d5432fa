"""Seeded synthetic subjects, sensor streams and location histories.

Every function draws from an injected or seed-built random.Random, so the
same seed always yields byte-identical output.  Subject name pools are
deliberately substring-disjoint from the alias dictionary: the at-rest
leak scan searches study files for identity strings, and a subject named
like somebody's alias would be a false alarm.

Location histories are built from pure-latitude offsets, which haversine
maps to exact metre distances, so planted path lengths and tortuosities
are hand-checkable.
"""

from __future__ import annotations

import json
import math
import random
from datetime import date, datetime, time, timedelta, timezone
from typing import Any

from .domain import (
    BreathingQuality,
    CognitiveReport,
    EnvEvent,
    EnvEventKind,
    ReportKind,
    WearableDaily,
)

SIM_BASE = datetime(2025, 1, 6, tzinfo=timezone.utc)

PROFILES = ("stable", "place_shift", "slow_routes", "wanderer")

# screened against data/alias_names.txt: none of these tokens occurs
# inside any alias (tests re-verify)
FIRST_NAMES = (
    "Elsa", "Nilde", "Orazio", "Quirino", "Velia", "Zeno", "Assunta", "Benito",
    "Delia", "Fosca", "Gildo", "Learco", "Mafalda", "Palmira", "Romolo", "Santina",
    "Tosca", "Vanda", "Edda", "Ferruccio", "Medea", "Nerina", "Priamo", "Rosetta",
)
LAST_NAMES = (
    "Rossi", "Bianchi", "Ferrari", "Esposito", "Colombo", "Ricci", "Marino", "Greco",
    "Gallo", "Conti", "Mancini", "Costa", "Rizzo", "Lombardi", "Moretti", "Barbieri",
    "Fontana", "Santoro", "Mariani", "Rinaldi", "Caruso", "Ferrara", "Gatti",
    "Pellegrini", "Palumbo", "Farina", "Gentile", "Martini", "Vitale", "Longo",
    "Marchetti", "Valentini",
)
STREETS = (
    "Volta", "Garibaldi", "Manzoni", "Verdi", "Galvani", "Meucci", "Cavour",
    "Foscolo", "Carducci", "Pascoli", "Marconi", "Petrarca", "Vespucci", "Leopardi",
    "Alfieri", "Torricelli", "Duse", "Tiziano", "Bramante", "Donizetti",
)
CITIES = ("Milano", "Monza", "Pavia", "Varese", "Lecco", "Bergamo", "Brescia", "Cremona")

NOTE_TEMPLATES = (
    "",
    "Prefers morning visits.",
    "Hard of hearing; ring twice.",
    "Uses a walking stick.",
    "Lives on the third floor, no elevator.",
    "Cat in the apartment.",
)


def make_identities(rng: random.Random, count: int) -> list[dict[str, Any]]:
    """Distinct D0 candidate dicts ready for enrollment."""
    pairs = rng.sample([(f, ln) for f in FIRST_NAMES for ln in LAST_NAMES], count)
    out = []
    for first, last in pairs:
        contacts = [
            {
                "name": f"{rng.choice(FIRST_NAMES)} {last}",
                "phone": f"+39 3{rng.randint(10, 99)} {rng.randint(100, 999)} {rng.randint(1000, 9999)}",
            }
            for _ in range(rng.randint(1, 2))
        ]
        out.append(
            {
                "first_name": first,
                "last_name": last,
                "age": rng.randint(65, 89),
                "gender": rng.choice(("F", "M")),
                "address": f"Via {rng.choice(STREETS)} {rng.randint(1, 120)}, {rng.choice(CITIES)}",
                "contacts": contacts,
                "general_notes": rng.choice(NOTE_TEMPLATES),
                "apartment_map": f"plan-{rng.randint(100, 999)}.pdf" if rng.random() < 0.5 else None,
            }
        )
    return out


# --- daily sensor streams ------------------------------------------------------

def wearable_day(rng: random.Random, day: date) -> WearableDaily:
    return WearableDaily(
        date=day,
        steps=rng.randint(1500, 11000),
        avg_heart_rate=round(rng.uniform(58.0, 88.0), 1),
        sleep_duration=rng.randint(330, 560),
        sleep_quality=rng.randint(40, 98),
        breathing_quality=rng.choices(
            (BreathingQuality.NORMAL, BreathingQuality.SNORING, BreathingQuality.APNEA),
            weights=(16, 3, 1),
        )[0],
        brushing_time=time(hour=rng.choice((7, 8, 21, 22)), minute=rng.randrange(60)),
        brushing_duration=rng.randint(45, 200),
    )


def cognitive_reports(rng: random.Random, day_index: int, day: date) -> list[CognitiveReport]:
    """Weekly tablet test, a monthly questionnaire, occasional skipped sessions."""
    midday = datetime(day.year, day.month, day.day, 10, 0, tzinfo=timezone.utc)
    out = []
    if day_index % 7 == 3:
        out.append(
            CognitiveReport(
                kind=ReportKind.WEEKLY_TEST,
                date_time=midday + timedelta(minutes=rng.randrange(0, 180)),
                payload=f"speed={rng.randint(40, 95)};errors={rng.randint(0, 6)}",
                completed=rng.random() >= 0.08,
            )
        )
    if day_index % 28 == 10:
        out.append(
            CognitiveReport(
                kind=ReportKind.MONTHLY_MMSE,
                date_time=midday + timedelta(hours=4, minutes=rng.randrange(0, 90)),
                payload=f"mmse={rng.randint(18, 30)}",
                completed=True,
            )
        )
    if rng.random() < 0.06:
        out.append(
            CognitiveReport(
                kind=ReportKind.COMPLIANCE,
                date_time=midday + timedelta(hours=8, minutes=rng.randrange(0, 60)),
                payload="session skipped",
                completed=False,
            )
        )
    return out


_PRESENCE_SENSORS = ("pir-kitchen", "pir-bedroom", "pir-bathroom")


def env_events(rng: random.Random, day: date) -> list[EnvEvent]:
    midnight = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
    minutes = sorted(rng.sample(range(6 * 60, 23 * 60), rng.randint(8, 20)))
    out = []
    for m in minutes:
        stamp = midnight + timedelta(minutes=m)
        roll = rng.random()
        if roll < 0.5:
            out.append(EnvEvent(stamp, rng.choice(_PRESENCE_SENSORS), EnvEventKind.PRESENCE))
        elif roll < 0.65:
            out.append(
                EnvEvent(
                    stamp,
                    "plug-kettle",
                    rng.choice((EnvEventKind.APPLIANCE_ON, EnvEventKind.APPLIANCE_OFF)),
                )
            )
        elif roll < 0.85:
            out.append(
                EnvEvent(stamp, "th-livingroom", EnvEventKind.TEMP_HUMIDITY, round(rng.uniform(17.5, 26.5), 1))
            )
        else:
            out.append(
                EnvEvent(stamp, "door-main", rng.choice((EnvEventKind.OPEN, EnvEventKind.CLOSE)))
            )
    return out


def day_records(rng: random.Random, day_index: int, day: date):
    """Everything one subject's gateway senses in one day, in ingest order."""
    records: list[Any] = [wearable_day(rng, day)]
    records.extend(cognitive_reports(rng, day_index, day))
    records.extend(env_events(rng, day))
    return records


def commissioning_records(day: date) -> list[Any]:
    """One record of each sensed class, proving acquisition before close.

    Deterministic on purpose: the wearable entry shares its date with the
    day's real reading and is replaced by it on ingest.
    """
    noon = datetime(day.year, day.month, day.day, 12, 0, tzinfo=timezone.utc)
    return [
        WearableDaily(
            date=day, steps=200, avg_heart_rate=72.0, sleep_duration=420,
            sleep_quality=70, breathing_quality=BreathingQuality.NORMAL,
            brushing_time=time(hour=12, minute=0), brushing_duration=90,
        ),
        CognitiveReport(
            kind=ReportKind.COMPLIANCE, date_time=noon,
            payload="installation check", completed=True,
        ),
        EnvEvent(noon + timedelta(minutes=1), "door-main", EnvEventKind.OPEN),
    ]


# --- location histories ----------------------------------------------------------

_METERS_PER_DEG_LAT = math.pi * 6_371_000.0 / 180.0
_HOME_LAT, _HOME_LON = 45.46, 9.19
_PLACE_OFFSETS_M = (600.0, 1300.0, 2100.0, 3000.0)

# zig-zag with path 4000 m and net 200 m over 45 minutes: tortuosity 20
_ZIGZAG_LEGS_M = (1050.0, -950.0, 1050.0, -950.0)
_ZIGZAG_MINUTES = (11, 11, 11, 12)
_ZIGZAG_START_MIN = 15 * 60


class _MonthBuilder:
    def __init__(self, rng: random.Random, start: datetime):
        self.rng = rng
        self.start = start
        self.home_lat = _HOME_LAT + rng.uniform(-0.01, 0.01)
        self.home_lon = _HOME_LON + rng.uniform(-0.01, 0.01)
        self.places: list[dict[str, Any]] = []
        self.segments: list[dict[str, Any]] = []

    def lat_at(self, meters_north: float) -> float:
        return self.home_lat + meters_north / _METERS_PER_DEG_LAT

    def iso(self, day: int, minute: int) -> str:
        return (self.start + timedelta(days=day, minutes=minute)).isoformat()

    def home_visit(self, day: int, start_min: int, end_min: int) -> None:
        if end_min > start_min:
            self.places.append(
                {
                    "lat": self.home_lat,
                    "lon": self.home_lon,
                    "start_ts": self.iso(day, start_min),
                    "end_ts": self.iso(day, end_min),
                }
            )

    def errand(self, day: int, depart_min: int, place_id: int,
               travel_out: int, dwell: int, travel_back: int) -> int:
        """Walk to a place and back; returns the minute home is re-entered."""
        dest_lat = self.lat_at(_PLACE_OFFSETS_M[place_id])
        arrive = depart_min + travel_out
        leave = arrive + dwell
        back = leave + travel_back
        self.segments.append(
            {
                "start_lat": self.home_lat, "start_lon": self.home_lon,
                "end_lat": dest_lat, "end_lon": self.home_lon,
                "start_ts": self.iso(day, depart_min), "end_ts": self.iso(day, arrive),
            }
        )
        self.places.append(
            {
                "lat": dest_lat, "lon": self.home_lon,
                "start_ts": self.iso(day, arrive), "end_ts": self.iso(day, leave),
            }
        )
        self.segments.append(
            {
                "start_lat": dest_lat, "start_lon": self.home_lon,
                "end_lat": self.home_lat, "end_lon": self.home_lon,
                "start_ts": self.iso(day, leave), "end_ts": self.iso(day, back),
            }
        )
        return back

    def zigzag(self, day: int) -> tuple[int, int]:
        """The planted wandering episode; returns its minute bounds."""
        t = _ZIGZAG_START_MIN
        pos = 0.0
        for dist, dur in zip(_ZIGZAG_LEGS_M, _ZIGZAG_MINUTES):
            nxt = pos + dist
            self.segments.append(
                {
                    "start_lat": self.lat_at(pos), "start_lon": self.home_lon,
                    "end_lat": self.lat_at(nxt), "end_lon": self.home_lon,
                    "start_ts": self.iso(day, t), "end_ts": self.iso(day, t + dur),
                }
            )
            pos, t = nxt, t + dur
        return _ZIGZAG_START_MIN, t


def _habit_for_day(profile: str, day: int, half: int) -> list[int]:
    if profile == "slow_routes":
        return [0]
    if profile == "place_shift" and day >= half:
        return [1, 2]
    return [0, 1]


def generate_d4(
    seed: int, profile: str, start: datetime = SIM_BASE, days: int = 30
) -> tuple[bytes, dict[str, Any]]:
    """One month of location history plus its planted ground-truth labels."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    rng = random.Random(seed)
    b = _MonthBuilder(rng, start)
    half = days // 2

    slow_day = half + 2 + rng.randrange(max(1, half - 4)) if profile == "slow_routes" else None
    wander_days = (
        sorted((rng.randrange(2, half), half + rng.randrange(2, half - 2)))
        if profile == "wanderer"
        else []
    )

    visit_counts: dict[tuple[bool, int], int] = {}
    flagged_dates: list[str] = []
    # 3 visits make a place frequent in a half; slow_routes needs 6 early
    # trips so the first-fortnight baseline always holds at least 5
    need = 6 if profile == "slow_routes" else 3

    for day in range(days):
        habit = _habit_for_day(profile, day, half)
        day_in_half = day if day < half else day - half
        dest = habit[day_in_half % len(habit)]
        secured = all(
            visit_counts.get((day >= half, p), 0) >= need for p in habit
        )
        skip = secured and day != slow_day and rng.random() < 0.15
        cursor = 0
        if not skip:
            depart = 8 * 60 + rng.randrange(0, 120)
            if profile == "slow_routes":
                if day == slow_day:
                    travel_out, dwell, travel_back = 17, 5, 8
                    flagged_dates.append((start + timedelta(days=day)).date().isoformat())
                else:
                    travel_out = rng.randint(9, 11)
                    travel_back = rng.randint(8, 10)
                    # keep the whole bout at 30 min or less, under the
                    # round-trip wandering gate
                    dwell = rng.randint(4, 30 - travel_out - travel_back)
            else:
                travel_out = rng.randint(8, 10)
                dwell, travel_back = rng.randint(5, 9), rng.randint(8, 10)
            b.home_visit(day, cursor, depart)
            cursor = b.errand(day, depart, dest, travel_out, dwell, travel_back)
            visit_counts[(day >= half, dest)] = visit_counts.get((day >= half, dest), 0) + 1
        if day in wander_days:
            z_start, z_end = b.zigzag(day)
            b.home_visit(day, cursor, z_start)
            cursor = z_end
        b.home_visit(day, cursor, 24 * 60)

    doc = {"visited_places": b.places, "activity_segments": b.segments}
    payload = json.dumps(doc, sort_keys=True).encode()

    if profile == "place_shift":
        changes = {"jaccard_distance": round(1.0 - 1.0 / 3.0, 4), "appeared": 1, "disappeared": 1}
    else:
        changes = {"jaccard_distance": 0.0, "appeared": 0, "disappeared": 0}
    labels = {
        "profile": profile,
        "window": {
            "start": start.date().isoformat(),
            "end": (start + timedelta(days=days)).date().isoformat(),
        },
        "place_changes": changes,
        "flagged_trip_dates": flagged_dates,
        "wandering_dates": [
            (start + timedelta(days=d)).date().isoformat() for d in wander_days
        ],
    }
    return payload, labels
