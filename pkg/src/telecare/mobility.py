"""Outdoor mobility analytics that never let a coordinate out.

The raw location history (visited places and movement segments) stays
inside the trusted boundary.  Everything that leaves is derived: counts,
durations, ratios and opaque place indices.  A structural linter
double-checks outgoing reports for banned key names and for anything
shaped like a latitude-longitude pair.

All analyses share one clustering of visits into places and one minute
labeling with precedence home > outside > unknown.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Any, Iterable, Mapping, Sequence

EARTH_RADIUS_M = 6_371_000.0

BANNED_KEYS = frozenset({"lat", "lon", "latitude", "longitude", "location"})


class MobilityError(Exception):
    pass


class ParseError(MobilityError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path


class CoordinateOutOfRange(MobilityError):
    pass


class IntervalOverlap(MobilityError):
    pass


class NoData(MobilityError):
    pass


class NoBaseline(MobilityError):
    pass


class LeakDetected(MobilityError):
    pass


@dataclass(frozen=True)
class MobilityConfig:
    cluster_radius_m: float = 100.0
    min_visits: int = 3
    baseline_days: int = 14
    min_baseline_trips: int = 5
    deviation_ratio: float = 1.5
    tortuosity_threshold: float = 3.0
    wandering_min_duration_min: float = 30.0
    net_displacement_floor_m: float = 50.0


@dataclass(frozen=True)
class VisitedPlace:
    lat: float
    lon: float
    start_ts: datetime
    end_ts: datetime


@dataclass(frozen=True)
class ActivitySegment:
    start_lat: float
    start_lon: float
    end_lat: float
    end_lon: float
    start_ts: datetime
    end_ts: datetime

    def length_m(self) -> float:
        return haversine_m(self.start_lat, self.start_lon, self.end_lat, self.end_lon)


@dataclass(frozen=True)
class MobilityLog:
    visited_places: tuple[VisitedPlace, ...]
    activity_segments: tuple[ActivitySegment, ...]


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


# --- parsing -----------------------------------------------------------------

def _parse_ts(raw: Any, path: str) -> datetime:
    try:
        stamp = datetime.fromisoformat(str(raw))
    except ValueError:
        raise ParseError(path, f"bad timestamp {raw!r}") from None
    return stamp if stamp.tzinfo else stamp.replace(tzinfo=timezone.utc)


def _check_coord(lat: Any, lon: Any, path: str) -> tuple[float, float]:
    try:
        lat_f, lon_f = float(lat), float(lon)
    except (TypeError, ValueError):
        raise ParseError(path, "coordinates must be numbers") from None
    if not -90.0 <= lat_f <= 90.0 or not -180.0 <= lon_f <= 180.0:
        raise CoordinateOutOfRange(f"{path}: ({lat_f}, {lon_f})")
    return lat_f, lon_f


def _check_interval(start: datetime, end: datetime, path: str) -> None:
    if not start < end:
        raise ParseError(path, "interval must start before it ends")


def _reject_overlap(
    intervals: Sequence[tuple[datetime, datetime]], what: str
) -> None:
    for i, ((s1, e1), (s2, _)) in enumerate(zip(intervals, intervals[1:])):
        if s2 < s1:
            raise IntervalOverlap(f"{what}[{i + 1}] starts before {what}[{i}]")
        if s2 < e1:
            raise IntervalOverlap(f"{what}[{i + 1}] overlaps {what}[{i}]")


def parse_location_history(data: bytes) -> MobilityLog:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError("$", f"not valid JSON: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ParseError("$", "top level must be an object")
    places = []
    for i, raw in enumerate(doc.get("visited_places", [])):
        path = f"visited_places[{i}]"
        if not isinstance(raw, Mapping):
            raise ParseError(path, "must be an object")
        lat, lon = _check_coord(raw.get("lat"), raw.get("lon"), path)
        start = _parse_ts(raw.get("start_ts"), path)
        end = _parse_ts(raw.get("end_ts"), path)
        _check_interval(start, end, path)
        places.append(VisitedPlace(lat, lon, start, end))
    segments = []
    for i, raw in enumerate(doc.get("activity_segments", [])):
        path = f"activity_segments[{i}]"
        if not isinstance(raw, Mapping):
            raise ParseError(path, "must be an object")
        s_lat, s_lon = _check_coord(raw.get("start_lat"), raw.get("start_lon"), path)
        e_lat, e_lon = _check_coord(raw.get("end_lat"), raw.get("end_lon"), path)
        start = _parse_ts(raw.get("start_ts"), path)
        end = _parse_ts(raw.get("end_ts"), path)
        _check_interval(start, end, path)
        segments.append(ActivitySegment(s_lat, s_lon, e_lat, e_lon, start, end))
    _reject_overlap([(p.start_ts, p.end_ts) for p in places], "visited_places")
    _reject_overlap([(s.start_ts, s.end_ts) for s in segments], "activity_segments")
    return MobilityLog(tuple(places), tuple(segments))


def serialize_location_history(log: MobilityLog) -> bytes:
    doc = {
        "visited_places": [
            {
                "lat": p.lat,
                "lon": p.lon,
                "start_ts": p.start_ts.isoformat(),
                "end_ts": p.end_ts.isoformat(),
            }
            for p in log.visited_places
        ],
        "activity_segments": [
            {
                "start_lat": s.start_lat,
                "start_lon": s.start_lon,
                "end_lat": s.end_lat,
                "end_lon": s.end_lon,
                "start_ts": s.start_ts.isoformat(),
                "end_ts": s.end_ts.isoformat(),
            }
            for s in log.activity_segments
        ],
    }
    return json.dumps(doc, sort_keys=True).encode()


# --- place clustering --------------------------------------------------------

@dataclass
class PlaceCluster:
    index: int
    lat_sum: float = 0.0
    lon_sum: float = 0.0
    visits: list[VisitedPlace] = field(default_factory=list)

    @property
    def centroid(self) -> tuple[float, float]:
        n = len(self.visits)
        return (self.lat_sum / n, self.lon_sum / n)

    def add(self, visit: VisitedPlace) -> None:
        self.visits.append(visit)
        self.lat_sum += visit.lat
        self.lon_sum += visit.lon

    @property
    def total_dwell_min(self) -> float:
        return sum((v.end_ts - v.start_ts).total_seconds() for v in self.visits) / 60.0

    @property
    def visit_count(self) -> int:
        return len(self.visits)


def cluster_places(
    visits: Sequence[VisitedPlace], radius_m: float = MobilityConfig.cluster_radius_m
) -> list[PlaceCluster]:
    """One pass in visit order; the first centroid within the radius wins."""
    clusters: list[PlaceCluster] = []
    for visit in sorted(visits, key=lambda v: (v.start_ts, v.end_ts)):
        target: PlaceCluster | None = None
        for cluster in clusters:
            c_lat, c_lon = cluster.centroid
            if haversine_m(visit.lat, visit.lon, c_lat, c_lon) <= radius_m:
                target = cluster
                break
        if target is None:
            target = PlaceCluster(index=len(clusters))
            clusters.append(target)
        target.add(visit)
    return clusters


def detect_home(clusters: Sequence[PlaceCluster]) -> PlaceCluster:
    if not clusters:
        raise NoData("no visited places, so no home to anchor the analyses")
    return max(clusters, key=lambda c: (c.total_dwell_min, -c.index))


# --- minute labeling ----------------------------------------------------------

def _minute_range(start: datetime, end: datetime) -> tuple[int, int]:
    s = int(start.timestamp())
    e = int(end.timestamp())
    return (s // 60, -(-e // 60))


def _merge(ranges: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for lo, hi in sorted(r for r in ranges if r[1] > r[0]):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _subtract(base: list[tuple[int, int]], minus: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    j = 0
    for lo, hi in base:
        cursor = lo
        while j < len(minus) and minus[j][1] <= cursor:
            j += 1
        k = j
        while k < len(minus) and minus[k][0] < hi:
            m_lo, m_hi = minus[k]
            if m_lo > cursor:
                out.append((cursor, m_lo))
            cursor = max(cursor, m_hi)
            if cursor >= hi:
                break
            k += 1
        if cursor < hi:
            out.append((cursor, hi))
    return out


def _overlap_len(ranges: Sequence[tuple[int, int]], lo: int, hi: int) -> int:
    total = 0
    for r_lo, r_hi in ranges:
        total += max(0, min(hi, r_hi) - max(lo, r_lo))
    return total


@dataclass(frozen=True)
class MinuteLabels:
    """Merged minute ranges per label; outside already excludes home minutes."""

    home: tuple[tuple[int, int], ...]
    outside: tuple[tuple[int, int], ...]


def label_minutes(log: MobilityLog, config: MobilityConfig = MobilityConfig()) -> MinuteLabels:
    clusters = cluster_places(log.visited_places, config.cluster_radius_m)
    home = detect_home(clusters)
    home_ranges = _merge(_minute_range(v.start_ts, v.end_ts) for v in home.visits)
    raw_outside = [
        _minute_range(v.start_ts, v.end_ts)
        for c in clusters
        if c is not home
        for v in c.visits
    ]
    raw_outside += [_minute_range(s.start_ts, s.end_ts) for s in log.activity_segments]
    outside_ranges = _subtract(_merge(raw_outside), home_ranges)
    return MinuteLabels(home=tuple(home_ranges), outside=tuple(outside_ranges))


def _minute_to_date(minute: int) -> str:
    return datetime.fromtimestamp(minute * 60, tz=timezone.utc).date().isoformat()


@dataclass(frozen=True)
class Outing:
    """A maximal stretch between two home presences with evidence of being out."""

    start_minute: int
    end_minute: int

    @property
    def date(self) -> str:
        return _minute_to_date(self.start_minute)

    @property
    def duration_min(self) -> int:
        return self.end_minute - self.start_minute


def detect_outings(log: MobilityLog, config: MobilityConfig = MobilityConfig()) -> list[Outing]:
    """Gaps between consecutive home presences holding at least one outside minute.

    Time before the first home presence and after the last is unbounded on
    one side, so it counts toward outside minutes but never as an outing.
    Gaps that are pure unknown (no place, no movement) are sensing dropouts,
    not outings.
    """
    labels = label_minutes(log, config)
    outings = []
    for (_, prev_end), (next_start, _) in zip(labels.home, labels.home[1:]):
        if _overlap_len(labels.outside, prev_end, next_start) > 0:
            outings.append(Outing(prev_end, next_start))
    return outings


def daily_outside(
    log: MobilityLog, start: datetime, end: datetime, config: MobilityConfig = MobilityConfig()
) -> list[dict[str, Any]]:
    """Per UTC day in [start, end): outside minutes and outings begun that day."""
    try:
        labels = label_minutes(log, config)
        outings = detect_outings(log, config)
    except NoData:
        labels, outings = MinuteLabels((), ()), []
    started: dict[str, int] = {}
    for outing in outings:
        started[outing.date] = started.get(outing.date, 0) + 1
    rows = []
    day = datetime(start.year, start.month, start.day, tzinfo=timezone.utc)
    while day < end:
        lo = int(day.timestamp()) // 60
        key = day.date().isoformat()
        rows.append(
            {
                "date": key,
                "minutes_outside": _overlap_len(labels.outside, lo, lo + 1440),
                "outing_count": started.get(key, 0),
            }
        )
        day += timedelta(days=1)
    return rows


# --- place habits -------------------------------------------------------------

def frequent_places(
    clusters: Sequence[PlaceCluster],
    window: tuple[datetime, datetime],
    min_visits: int = MobilityConfig.min_visits,
) -> set[int]:
    """Indices of non-home clusters visited often enough inside the window."""
    if not clusters:
        return set()
    home = detect_home(clusters)
    start, end = window
    out = set()
    for cluster in clusters:
        if cluster is home:
            continue
        visits = sum(1 for v in cluster.visits if start <= v.start_ts < end)
        if visits >= min_visits:
            out.add(cluster.index)
    return out


def jaccard_distance(a: set[int], b: set[int]) -> float:
    if not a and not b:
        return 0.0
    return 1.0 - len(a & b) / len(a | b)


def detect_place_changes(window_a: set[int], window_b: set[int]) -> dict[str, Any]:
    return {
        "jaccard_distance": round(jaccard_distance(window_a, window_b), 4),
        "appeared": len(window_b - window_a),
        "disappeared": len(window_a - window_b),
    }


# --- route deviation -----------------------------------------------------------

@dataclass(frozen=True)
class Trip:
    destination: int        # cluster index
    departed: datetime      # leaving home
    arrived: datetime       # reaching the place

    @property
    def duration_min(self) -> float:
        return (self.arrived - self.departed).total_seconds() / 60.0


def extract_trips(log: MobilityLog, config: MobilityConfig = MobilityConfig()) -> list[Trip]:
    """Home-to-place journeys between consecutive visits."""
    clusters = cluster_places(log.visited_places, config.cluster_radius_m)
    if not clusters:
        return []
    home = detect_home(clusters)
    cluster_of: dict[VisitedPlace, PlaceCluster] = {
        visit: cluster for cluster in clusters for visit in cluster.visits
    }
    ordered = sorted(log.visited_places, key=lambda v: (v.start_ts, v.end_ts))
    trips = []
    for prev, nxt in zip(ordered, ordered[1:]):
        if cluster_of[prev] is home and cluster_of[nxt] is not home:
            trips.append(
                Trip(
                    destination=cluster_of[nxt].index,
                    departed=prev.end_ts,
                    arrived=nxt.start_ts,
                )
            )
    return trips


def _median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def route_deviation(
    trips: Sequence[Trip],
    baseline: tuple[datetime, datetime],
    config: MobilityConfig = MobilityConfig(),
) -> list[dict[str, Any]]:
    """Every trip's duration against the median of the baseline-window trips."""
    base_start, base_end = baseline
    baseline_durations = [
        t.duration_min for t in trips if base_start <= t.departed < base_end
    ]
    if len(baseline_durations) < config.min_baseline_trips:
        raise NoBaseline(
            f"{len(baseline_durations)} baseline trips, "
            f"need {config.min_baseline_trips}"
        )
    median = _median(baseline_durations)
    rows = []
    for trip in sorted(trips, key=lambda t: t.departed):
        ratio = trip.duration_min / median
        rows.append(
            {
                "date": trip.departed.date().isoformat(),
                "duration_ratio": round(ratio, 4),
                "flagged": ratio > config.deviation_ratio,
            }
        )
    return rows


# --- wandering -----------------------------------------------------------------

def detect_wandering(
    segments: Sequence[ActivitySegment], config: MobilityConfig = MobilityConfig()
) -> dict[str, Any] | None:
    """Path length vs. net displacement over one outing's ordered segments."""
    if len(segments) < 2:
        return None
    path = sum(s.length_m() for s in segments)
    first, last = segments[0], segments[-1]
    net = haversine_m(first.start_lat, first.start_lon, last.end_lat, last.end_lon)
    tortuosity = path / max(net, config.net_displacement_floor_m)
    duration = (last.end_ts - first.start_ts).total_seconds() / 60.0
    if tortuosity > config.tortuosity_threshold and duration > config.wandering_min_duration_min:
        return {
            "date": first.start_ts.date().isoformat(),
            "tortuosity": round(tortuosity, 2),
            "duration_minutes": round(duration, 1),
        }
    return None


def wandering_episodes(
    log: MobilityLog, config: MobilityConfig = MobilityConfig()
) -> list[dict[str, Any]]:
    try:
        labels = label_minutes(log, config)
    except NoData:
        return []
    episodes = []
    for (_, prev_end), (next_start, _) in zip(labels.home, labels.home[1:]):
        gap_start = datetime.fromtimestamp(prev_end * 60, tz=timezone.utc)
        gap_end = datetime.fromtimestamp(next_start * 60, tz=timezone.utc)
        span = [
            s for s in log.activity_segments
            if s.start_ts >= gap_start and s.end_ts <= gap_end
        ]
        episode = detect_wandering(span, config)
        if episode is not None:
            episodes.append(episode)
    return episodes


# --- report assembly -------------------------------------------------------------

def build_report(
    pid: str,
    log: MobilityLog,
    window_start: datetime,
    window_end: datetime,
    config: MobilityConfig = MobilityConfig(),
) -> dict[str, Any]:
    """The full geolocation-free result bundle for one reporting window.

    Place habits are compared between the window's two halves; route
    baselines come from the first baseline_days of the window.  Places
    without enough baseline trips are silently absent from the deviation
    section.
    """
    clusters = cluster_places(log.visited_places, config.cluster_radius_m)
    mid = window_start + (window_end - window_start) / 2
    habits_a = frequent_places(clusters, (window_start, mid), config.min_visits)
    habits_b = frequent_places(clusters, (mid, window_end), config.min_visits)
    habits_all = frequent_places(clusters, (window_start, window_end), config.min_visits)

    trips = extract_trips(log, config)
    baseline = (window_start, window_start + timedelta(days=config.baseline_days))
    deviations: list[dict[str, Any]] = []
    for place_index in sorted(habits_all):
        place_trips = [t for t in trips if t.destination == place_index]
        try:
            rows = route_deviation(place_trips, baseline, config)
        except NoBaseline:
            continue
        deviations.extend({"place": place_index, **row} for row in rows)

    report = {
        "pid": pid,
        "window": {
            "start": window_start.date().isoformat(),
            "end": window_end.date().isoformat(),
        },
        "daily_outside": daily_outside(log, window_start, window_end, config),
        "place_changes": detect_place_changes(habits_a, habits_b),
        "route_deviations": deviations,
        "wandering_episodes": wandering_episodes(log, config),
    }
    assert_no_coordinate_leak(report)
    return report


# --- leak linter -------------------------------------------------------------------

def find_coordinate_leaks(obj: Any, path: str = "$") -> list[str]:
    leaks: list[str] = []
    if isinstance(obj, Mapping):
        for key, value in obj.items():
            if str(key).lower() in BANNED_KEYS:
                leaks.append(f"{path}.{key}: banned key")
            leaks.extend(find_coordinate_leaks(value, f"{path}.{key}"))
    elif isinstance(obj, (list, tuple)):
        if (
            len(obj) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj)
            and -90.0 <= obj[0] <= 90.0
            and -180.0 <= obj[1] <= 180.0
        ):
            leaks.append(f"{path}: looks like a coordinate pair {list(obj)}")
        for i, value in enumerate(obj):
            leaks.extend(find_coordinate_leaks(value, f"{path}[{i}]"))
    return leaks


def assert_no_coordinate_leak(obj: Any) -> None:
    leaks = find_coordinate_leaks(obj)
    if leaks:
        raise LeakDetected("; ".join(leaks))
