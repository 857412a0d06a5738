"""Scenario ingestion: SUMO floating-car-data traces and synthetic scenes.

A scenario is a time-ordered list of ticks, each holding the states of
every vehicle present at that instant.  Trace identifiers are mapped to
a pseudonym and a number plate drawn once per run from a seeded
generator, so two loads with the same seed agree byte for byte.

Accepted inputs:

* SUMO FCD XML export: ``<fcd-export><timestep time=".."><vehicle
  id=".." x=".." y=".." angle=".." speed=".." [type=".."]/>``
* the equivalent CSV with header ``time,id,x,y,angle,speed``

Only sedan-like vehicles participate; rows whose SUMO type says
otherwise (trucks, buses, ...) are dropped and counted.
"""

from __future__ import annotations

import csv
import io
import math
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from ..crypto import PSEUDONYM_LEN, NumberPlate, Pseudonym

LANE_WIDTH_M = 3.5
SYNTH_SPEED_MPS = 10.0

_PLATE_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_PLATE_DIGITS = "0123456789"

# SUMO vClass / vType prefixes treated as sedans; everything else is dropped.
_SEDAN_TYPE_PREFIXES = ("passenger", "sedan", "car", "default")


class ParseError(ValueError):
    pass


class NonMonotonicTime(ParseError):
    pass


class BadParams(ValueError):
    pass


@dataclass(frozen=True)
class VehicleState:
    vehicle_key: str
    pseudonym: Pseudonym
    plate: NumberPlate
    x_m: float
    y_m: float
    heading_deg: float
    speed_mps: float


@dataclass(frozen=True)
class Tick:
    t_s: float
    vehicles: tuple[VehicleState, ...]


@dataclass
class Scenario:
    ticks: list[Tick]
    identities: dict[str, tuple[Pseudonym, NumberPlate]] = field(default_factory=dict)
    dropped_vehicles: int = 0  # non-sedan rows filtered out

    @property
    def n_ticks(self) -> int:
        return len(self.ticks)


class IdentityPool:
    """Seeded pseudonym/plate assignment, stable for a whole run."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)
        self._by_key: dict[str, tuple[Pseudonym, NumberPlate]] = {}
        self._used_pseudonyms: set[bytes] = set()
        self._used_plates: set[str] = set()

    def identity(self, vehicle_key: str) -> tuple[Pseudonym, NumberPlate]:
        got = self._by_key.get(vehicle_key)
        if got is None:
            got = (self._new_pseudonym(), self._new_plate())
            self._by_key[vehicle_key] = got
        return got

    def _new_pseudonym(self) -> Pseudonym:
        while True:
            raw = self._rng.randbytes(PSEUDONYM_LEN)
            if raw != bytes(PSEUDONYM_LEN) and raw not in self._used_pseudonyms:
                self._used_pseudonyms.add(raw)
                return Pseudonym(raw)

    def _new_plate(self) -> NumberPlate:
        while True:
            text = "".join(
                (
                    self._rng.choice(_PLATE_LETTERS),
                    self._rng.choice(_PLATE_LETTERS),
                    self._rng.choice(_PLATE_DIGITS),
                    self._rng.choice(_PLATE_DIGITS),
                    self._rng.choice(_PLATE_DIGITS),
                    self._rng.choice(_PLATE_LETTERS),
                    self._rng.choice(_PLATE_LETTERS),
                )
            )
            if text not in self._used_plates:
                self._used_plates.add(text)
                return NumberPlate(text)

    def mapping(self) -> dict[str, tuple[Pseudonym, NumberPlate]]:
        return dict(self._by_key)


def _is_sedan(vtype: str | None) -> bool:
    if not vtype:
        return True
    return vtype.lower().startswith(_SEDAN_TYPE_PREFIXES)


def load_fcd(source, seed: int = 0) -> Scenario:
    """Parse an FCD trace (XML or CSV, path or file object) into a Scenario."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    stripped = text.lstrip()
    if not stripped:
        raise ParseError("empty FCD input")
    if stripped.startswith("<"):
        return _load_fcd_xml(text, seed)
    return _load_fcd_csv(text, seed)


def _finish(raw_ticks, pool: IdentityPool, dropped: int) -> Scenario:
    ticks = [Tick(t_s=t, vehicles=tuple(vehicles)) for t, vehicles in raw_ticks]
    return Scenario(ticks=ticks, identities=pool.mapping(), dropped_vehicles=dropped)


def _make_state(pool, key, x, y, angle, speed) -> VehicleState:
    pseudonym, plate = pool.identity(key)
    return VehicleState(
        vehicle_key=key,
        pseudonym=pseudonym,
        plate=plate,
        x_m=x,
        y_m=y,
        heading_deg=angle % 360.0,
        speed_mps=speed,
    )


def _load_fcd_xml(text: str, seed: int) -> Scenario:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed FCD XML: {exc}") from None
    pool = IdentityPool(seed)
    raw_ticks = []
    dropped = 0
    last_t = None
    for step in root.iter("timestep"):
        t_attr = step.get("time")
        if t_attr is None:
            raise ParseError("timestep element without time attribute")
        try:
            t = float(t_attr)
        except ValueError:
            raise ParseError(f"timestep time is not a number: {t_attr!r}") from None
        if last_t is not None and t <= last_t:
            raise NonMonotonicTime(f"timestep {t} follows {last_t}")
        last_t = t
        vehicles = []
        for veh in step.iter("vehicle"):
            vid = veh.get("id")
            if vid is None:
                raise ParseError(f"timestep {t}: vehicle element without id")
            if not _is_sedan(veh.get("type")):
                dropped += 1
                continue
            try:
                x = float(veh.get("x"))
                y = float(veh.get("y"))
                angle = float(veh.get("angle"))
                speed = float(veh.get("speed", "0"))
            except (TypeError, ValueError):
                raise ParseError(f"timestep {t}: vehicle {vid!r}: bad numeric attribute") from None
            vehicles.append(_make_state(pool, vid, x, y, angle, speed))
        raw_ticks.append((t, vehicles))
    return _finish(raw_ticks, pool, dropped)


def _load_fcd_csv(text: str, seed: int) -> Scenario:
    reader = csv.DictReader(io.StringIO(text))
    required = {"time", "id", "x", "y", "angle", "speed"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise ParseError(f"FCD CSV must have columns {sorted(required)}, got {reader.fieldnames}")
    pool = IdentityPool(seed)
    raw_ticks = []
    dropped = 0
    last_t = None
    for lineno, row in enumerate(reader, start=2):
        try:
            t = float(row["time"])
            x = float(row["x"])
            y = float(row["y"])
            angle = float(row["angle"])
            speed = float(row["speed"])
        except (TypeError, ValueError):
            raise ParseError(f"line {lineno}: bad numeric field") from None
        vid = row["id"]
        if not vid:
            raise ParseError(f"line {lineno}: empty vehicle id")
        if not _is_sedan(row.get("type")):
            dropped += 1
            continue
        if last_t is None or t > last_t:
            raw_ticks.append((t, []))
            last_t = t
        elif t < last_t:
            raise NonMonotonicTime(f"line {lineno}: time {t} follows {last_t}")
        raw_ticks[-1][1].append(_make_state(pool, vid, x, y, angle, speed))
    return _finish(raw_ticks, pool, dropped)


def write_fcd_csv(scenario: Scenario, fh) -> None:
    """Emit a scenario as FCD CSV, the inverse of the CSV loader."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["time", "id", "x", "y", "angle", "speed"])
    for tick in scenario.ticks:
        for v in tick.vehicles:
            writer.writerow(
                [f"{tick.t_s:g}", v.vehicle_key, f"{v.x_m:.3f}", f"{v.y_m:.3f}",
                 f"{v.heading_deg:.3f}", f"{v.speed_mps:.3f}"]
            )


def synth_scenario(kind: str, n_vehicles: int, spacing_m: float, ticks: int, seed: int = 0) -> Scenario:
    """Deterministic formation scenarios: ``line``, ``grid`` or ``ring``.

    * line: single file on one eastbound lane, ``spacing_m`` apart.
    * grid: ~sqrt(n) lanes of alternating direction, vehicles
      ``spacing_m`` apart along each lane with a little seeded jitter
      so sight lines never graze footprint corners exactly.
    * ring: evenly spaced around a circle, driving clockwise.

    All vehicles move at a constant 10 m/s; ticks are 1 s apart.
    """
    if n_vehicles < 1:
        raise BadParams("n_vehicles must be >= 1")
    if spacing_m <= 0:
        raise BadParams("spacing_m must be positive")
    if ticks < 1:
        raise BadParams("ticks must be >= 1")
    if kind not in ("line", "grid", "ring"):
        raise BadParams(f"unknown scenario kind {kind!r}")
    pool = IdentityPool(seed)
    # Fixed jitter stream: the seed deals identities only, never geometry.
    rng = random.Random(0x5CE9A410)
    base: list[tuple[str, float, float, float]] = []  # key, x, y, heading
    if kind == "line":
        for i in range(n_vehicles):
            base.append((f"line{i}", i * spacing_m, 0.0, 90.0))
    elif kind == "grid":
        rows = max(1, round(math.sqrt(n_vehicles)))
        for i in range(n_vehicles):
            row, col = divmod(i, math.ceil(n_vehicles / rows))
            eastbound = row % 2 == 0
            x = col * spacing_m + rng.uniform(-0.5, 0.5)
            y = row * LANE_WIDTH_M + rng.uniform(-0.3, 0.3)
            base.append((f"grid{i}", x, y, 90.0 if eastbound else 270.0))
    else:
        radius = n_vehicles * spacing_m / (2.0 * math.pi)
        for i in range(n_vehicles):
            theta = 2.0 * math.pi * i / n_vehicles
            x = radius * math.cos(theta)
            y = radius * math.sin(theta)
            heading = (180.0 - math.degrees(theta)) % 360.0  # clockwise tangent
            base.append((f"ring{i}", x, y, heading))
    raw_ticks = []
    for k in range(ticks):
        vehicles = []
        for key, x, y, heading in base:
            if kind == "ring":
                radius = n_vehicles * spacing_m / (2.0 * math.pi)
                omega = SYNTH_SPEED_MPS / radius  # rad per second, clockwise
                theta0 = math.atan2(y, x)
                theta = theta0 - omega * k
                px = radius * math.cos(theta)
                py = radius * math.sin(theta)
                heading_k = (180.0 - math.degrees(theta)) % 360.0
            else:
                ux, uy = math.sin(math.radians(heading)), math.cos(math.radians(heading))
                # Cardinal headings should advance on exact coordinates.
                ux = 0.0 if abs(ux) < 1e-12 else ux
                uy = 0.0 if abs(uy) < 1e-12 else uy
                px = x + ux * SYNTH_SPEED_MPS * k
                py = y + uy * SYNTH_SPEED_MPS * k
                heading_k = heading
            vehicles.append(_make_state(pool, key, px, py, heading_k, SYNTH_SPEED_MPS))
        raw_ticks.append((float(k), vehicles))
    return _finish(raw_ticks, pool, 0)
