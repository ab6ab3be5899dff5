"""Business rules over confirmed tracks: intrusion, line crossing,
loitering, and occupancy, with per-rule debounced alert emission.

Geometry uses the same anchor convention as the analytics layer (bottom
center of the box).  Intrusion is edge-triggered on the outside-to-inside
transition; a track first observed already inside does not fire until it
leaves and re-enters.  Loitering accrues while the anchor stays inside
continuously and fires once the dwell reaches the threshold, re-firing
only after the debounce window.  Occupancy compares the in-zone track
count against a threshold and fires on the frame the comparison first
becomes true, re-arming when it stops holding.
"""

from __future__ import annotations

import json
import logging
import socket
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError, DataError
from .geometry import FrameMeta, point_in_polygon, polygon_is_simple, segment_side
from .tracker import Track, TrackStatus

log = logging.getLogger(__name__)

DEFAULT_DEBOUNCE_MS = 30_000

_COMPARATORS = {
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
    "==": lambda a, b: a == b,
}


@dataclass(frozen=True)
class Zone:
    id: str
    polygon: tuple  # ((x, y), ...) with >= 3 vertices
    class_filter: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "polygon",
                           tuple((float(x), float(y)) for x, y in self.polygon))
        if len(self.polygon) < 3:
            raise ConfigError(f"zone {self.id!r}: polygon needs >= 3 vertices")
        if not polygon_is_simple(list(self.polygon)):
            raise ConfigError(f"zone {self.id!r}: polygon self-intersects")

    def contains(self, point) -> bool:
        return point_in_polygon(point, list(self.polygon))


@dataclass(frozen=True)
class TripLine:
    id: str
    p: tuple[float, float]
    q: tuple[float, float]
    direction: str = "any"  # any | left-to-right | right-to-left

    def __post_init__(self):
        object.__setattr__(self, "p", (float(self.p[0]), float(self.p[1])))
        object.__setattr__(self, "q", (float(self.q[0]), float(self.q[1])))
        if self.p == self.q:
            raise ConfigError(f"line {self.id!r}: endpoints coincide")
        if self.direction not in ("any", "left-to-right", "right-to-left"):
            raise ConfigError(f"line {self.id!r}: bad direction {self.direction!r}")


def crossing(prev, curr, line: TripLine) -> Optional[str]:
    """Direction ('left-to-right' / 'right-to-left') if the motion segment
    crosses the finite trip line, else None.

    Requires strictly opposite signed sides of the infinite line, plus the
    intersection point falling within the segment (endpoints inclusive).
    """
    s_prev = segment_side(line.p, line.q, prev)
    s_curr = segment_side(line.p, line.q, curr)
    if s_prev == 0.0 or s_curr == 0.0 or (s_prev > 0) == (s_curr > 0):
        return None
    # intersection parameter along p->q, from similar triangles
    t = s_prev / (s_prev - s_curr)  # position along the motion, in (0, 1)
    ix = prev[0] + t * (curr[0] - prev[0])
    iy = prev[1] + t * (curr[1] - prev[1])
    px, py = line.p
    qx, qy = line.q
    dx, dy = qx - px, qy - py
    u = ((ix - px) * dx + (iy - py) * dy) / (dx * dx + dy * dy)
    if not 0.0 <= u <= 1.0:
        return None
    # positive side = left of the directed line p->q
    return "left-to-right" if s_prev > 0 else "right-to-left"


@dataclass(frozen=True)
class Rule:
    id: str
    kind: str  # Intrusion | LineCross | Loiter | Occupancy
    zone: Optional[Zone] = None
    line: Optional[TripLine] = None
    class_filter: Optional[frozenset] = None
    debounce_ms: int = DEFAULT_DEBOUNCE_MS
    threshold_ms: Optional[int] = None      # Loiter
    min_count: Optional[int] = None         # Occupancy
    comparator: str = ">="                  # Occupancy

    def __post_init__(self):
        if self.kind not in ("Intrusion", "LineCross", "Loiter", "Occupancy"):
            raise ConfigError(f"rule {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "LineCross":
            if self.line is None:
                raise ConfigError(f"rule {self.id!r}: LineCross needs a line")
        elif self.zone is None:
            raise ConfigError(f"rule {self.id!r}: {self.kind} needs a zone")
        if self.debounce_ms < 0:
            raise ConfigError(f"rule {self.id!r}: debounce_ms must be >= 0")
        if self.kind == "Loiter" and (self.threshold_ms is None
                                      or self.threshold_ms <= 0):
            raise ConfigError(f"rule {self.id!r}: Loiter needs threshold_ms > 0")
        if self.kind == "Occupancy":
            if self.min_count is None or self.min_count <= 0:
                raise ConfigError(f"rule {self.id!r}: Occupancy needs min_count > 0")
            if self.comparator not in _COMPARATORS:
                raise ConfigError(
                    f"rule {self.id!r}: comparator must be one of "
                    f"{sorted(_COMPARATORS)}")

    def applies_to(self, class_label: str) -> bool:
        if self.class_filter is not None and class_label not in self.class_filter:
            return False
        if self.zone is not None and self.zone.class_filter is not None:
            return class_label in self.zone.class_filter
        return True


@dataclass(frozen=True)
class AlertEvent:
    rule_id: str
    track_id: Optional[int]  # None for Occupancy
    frame_id: int
    timestamp_ms: int
    kind: str
    payload: dict = field(default_factory=dict)


def alert_record(event: AlertEvent) -> dict:
    """One JSONL output row (fixed key order)."""
    return {
        "rule_id": event.rule_id,
        "track_id": event.track_id,
        "frame_id": event.frame_id,
        "timestamp_ms": event.timestamp_ms,
        "kind": event.kind,
        "payload": event.payload,
    }


class RuleEngine:
    """Per-source rule state machine; evaluate() must see frames in order."""

    def __init__(self, rules: list[Rule]):
        ids = [r.id for r in rules]
        if len(set(ids)) != len(ids):
            raise ConfigError("rule ids must be unique")
        self.rules = list(rules)
        self._last_frame: Optional[int] = None
        self._inside: dict = {}        # (rule_id, track_id) -> bool
        self._prev_anchor: dict = {}   # (rule_id, track_id) -> last anchor
        self._loiter_start: dict = {}  # (rule_id, track_id) -> entry ts
        self._last_emit: dict = {}     # (rule_id, track_id|None) -> ts
        self._occupancy_on: dict = {r.id: False for r in rules
                                    if r.kind == "Occupancy"}

    def zones(self) -> list[tuple[str, list]]:
        """(zone_id, polygon) pairs for dwell attribution downstream."""
        out = []
        seen = set()
        for rule in self.rules:
            if rule.zone is not None and rule.zone.id not in seen:
                seen.add(rule.zone.id)
                out.append((rule.zone.id, list(rule.zone.polygon)))
        return out

    def _debounced(self, key, ts: int, debounce_ms: int) -> bool:
        last = self._last_emit.get(key)
        return last is not None and ts - last < debounce_ms

    def evaluate(self, frame: FrameMeta, tracks: list[Track]) -> list[AlertEvent]:
        if self._last_frame is not None and frame.frame_id <= self._last_frame:
            raise DataError(
                f"out-of-order frame_id {frame.frame_id} after {self._last_frame}")
        self._last_frame = frame.frame_id
        ts = frame.timestamp_ms
        confirmed = [t for t in tracks if t.status is TrackStatus.CONFIRMED]
        events: list[AlertEvent] = []

        for rule in self.rules:
            relevant = [t for t in confirmed if rule.applies_to(t.class_label)]
            if rule.kind == "Occupancy":
                self._occupancy(rule, frame, ts, relevant, events)
                continue
            for track in relevant:
                anchor = track.bbox.anchor
                key = (rule.id, track.track_id)
                if rule.kind == "LineCross":
                    self._line_cross(rule, frame, ts, track, anchor, key, events)
                else:
                    self._zone_rule(rule, frame, ts, track, anchor, key, events)

        for ev in events:
            self._last_emit[(ev.rule_id, ev.track_id)] = ev.timestamp_ms
        return events

    def _emit(self, events, rule, frame, ts, track_id, payload):
        if self._debounced((rule.id, track_id), ts, rule.debounce_ms):
            return
        events.append(AlertEvent(rule.id, track_id, frame.frame_id, ts,
                                 rule.kind, payload))

    def _zone_rule(self, rule, frame, ts, track, anchor, key, events):
        inside = rule.zone.contains(anchor)
        was_inside = self._inside.get(key)
        self._inside[key] = inside

        if rule.kind == "Intrusion":
            if inside and was_inside is False:
                self._emit(events, rule, frame, ts, track.track_id,
                           {"anchor": [anchor[0], anchor[1]]})
            return

        # Loiter: track continuous in-zone time
        if inside:
            start = self._loiter_start.setdefault(key, ts)
            dwell = ts - start
            if dwell >= rule.threshold_ms:
                self._emit(events, rule, frame, ts, track.track_id,
                           {"dwell_ms": dwell})
        else:
            self._loiter_start.pop(key, None)

    def _line_cross(self, rule, frame, ts, track, anchor, key, events):
        prev = self._prev_anchor.get(key)
        self._prev_anchor[key] = anchor
        if prev is None:
            return
        direction = crossing(prev, anchor, rule.line)
        if direction is None:
            return
        if rule.line.direction != "any" and direction != rule.line.direction:
            return
        self._emit(events, rule, frame, ts, track.track_id,
                   {"direction": direction})

    def _occupancy(self, rule, frame, ts, tracks, events):
        count = sum(1 for t in tracks if rule.zone.contains(t.bbox.anchor))
        holds = _COMPARATORS[rule.comparator](count, rule.min_count)
        armed = not self._occupancy_on[rule.id]
        self._occupancy_on[rule.id] = holds
        if holds and armed:
            self._emit(events, rule, frame, ts, None, {"count": count})


# ---------------------------------------------------------------------------
# config loading


def _parse_zone(doc, rule_id: str) -> Zone:
    if isinstance(doc, dict):
        zid = doc.get("id", f"{rule_id}.zone")
        poly = doc.get("polygon")
        filt = doc.get("classes")
    else:
        zid, poly, filt = f"{rule_id}.zone", doc, None
    if not isinstance(poly, (list, tuple)):
        raise ConfigError(f"rule {rule_id!r}: zone polygon must be [[x,y],...]")
    return Zone(zid, tuple((p[0], p[1]) for p in poly),
                frozenset(filt) if filt else None)


def rules_from_doc(doc) -> list[Rule]:
    if not isinstance(doc, list):
        raise ConfigError("rules config must be a JSON array")
    rules = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise ConfigError(f"rule #{i}: must be a JSON object")
        rid = entry.get("id")
        if not rid:
            raise ConfigError(f"rule #{i}: missing id")
        kind = entry.get("kind")
        try:
            zone = _parse_zone(entry["zone"], rid) if "zone" in entry else None
            line = None
            if "line" in entry:
                ld = entry["line"]
                line = TripLine(ld.get("id", f"{rid}.line"),
                                tuple(ld["p"]), tuple(ld["q"]),
                                ld.get("direction", "any"))
            rules.append(Rule(
                id=rid,
                kind=kind,
                zone=zone,
                line=line,
                class_filter=frozenset(entry["classes"]) if entry.get("classes") else None,
                debounce_ms=entry.get("debounce_ms", DEFAULT_DEBOUNCE_MS),
                threshold_ms=entry.get("threshold_ms"),
                min_count=entry.get("min_count"),
                comparator=entry.get("comparator", ">="),
            ))
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"rule {rid!r}: malformed: {exc!r}") from exc
    return rules


def load_rules(path) -> list[Rule]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"rules file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
    return rules_from_doc(doc)


# ---------------------------------------------------------------------------
# real-time delivery


class TcpAlertSink:
    """Line-delimited TCP mirror for alerts; lossy-by-buffering, never blocks.

    Failed sends stash lines in a bounded deque and retry on the next
    call; connection errors are logged, not raised.
    """

    def __init__(self, host: str, port: int, buffer_limit: int = 10_000,
                 timeout: float = 0.25):
        self.host = host
        self.port = port
        self.timeout = timeout
        self._buffer: deque = deque(maxlen=buffer_limit)
        self._sock: Optional[socket.socket] = None

    def _connect(self) -> bool:
        if self._sock is not None:
            return True
        try:
            self._sock = socket.create_connection(
                (self.host, self.port), timeout=self.timeout)
            return True
        except OSError as exc:
            log.warning("alert sink %s:%d unreachable: %s",
                        self.host, self.port, exc)
            self._sock = None
            return False

    def send(self, event: AlertEvent) -> None:
        line = json.dumps(alert_record(event)) + "\n"
        self._buffer.append(line.encode("utf-8"))
        if not self._connect():
            return
        try:
            while self._buffer:
                self._sock.sendall(self._buffer[0])
                self._buffer.popleft()
        except OSError as exc:
            log.warning("alert sink send failed, buffering: %s", exc)
            self.close()

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None
