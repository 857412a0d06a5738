"""Deterministic tick loop: perception, proof exchange, cross-confirmation.

Each tick runs the same fixed sequence so that identical inputs always
produce identical metrics and event logs:

1. every vehicle computes its observations (plate visible and target
   heard) and registers them with its own verifier;
2. provers emit due proof entries; each sender's message is wire
   encoded and decoded once (the codec stays on the hot path);
3. messages are delivered to every other vehicle in communication
   range (the 1 ms delay rounds to same-tick delivery at 1 s ticks);
4. every verifier ingests what it received, then garbage-collects;
5. the tick metrics row is computed.

"Confirmed" is counted globally: a target counts as confirmed while
any station currently holds a confirmation for its key, and a proof
entry counts as confirmed when its key group is confirmed by the end
of the tick it was emitted in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..crypto import canonicalize_shared_secret, derive_public_key
from ..station import Observation, Prover, Verifier
from ..wire import Cpm, PerceivedObject, decode_cpm, encode_cpm
from . import geometry
from .scenario import Scenario, VehicleState


@dataclass(frozen=True)
class SimParams:
    """Knobs of the perception and communication model.

    Defaults are the evaluation settings: 65 m camera range, 120 degree
    field of view, 300 m communication range, 1 ms delay, 4.0 x 1.8 m
    vehicle footprint, proofs every 3 s.
    """

    perception_m: float = 65.0
    fov_deg: float = 120.0
    comm_range_m: float = 300.0
    comm_delay_ms: int = 1
    cadence_ms: int = 3000
    work_factor: int = 1
    seed: int = 0
    vehicle_length_m: float = 4.0
    vehicle_width_m: float = 1.8
    quota_limit: int = 8
    ttl_ms: int = 5000
    ttl_confirmed_ms: int = 10000
    confirm_threshold: int = 2
    local_counts: bool = True

    def __post_init__(self):
        if min(self.perception_m, self.fov_deg, self.comm_range_m,
               self.vehicle_length_m, self.vehicle_width_m) <= 0:
            raise ValueError("geometry parameters must be positive")
        if self.fov_deg > 360.0:
            raise ValueError("fov_deg cannot exceed 360")
        if min(self.cadence_ms, self.work_factor) < 1 or self.comm_delay_ms < 0:
            raise ValueError("timing parameters out of range")


# Keys accepted in a `key = value` parameter file; evaluation-table
# names map onto the dataclass fields.
PARAM_FILE_KEYS = {
    "perception_distance": ("perception_m", float),
    "camera_sensing_angle": ("fov_deg", float),
    "communication_range": ("comm_range_m", float),
    "communication_delay": ("comm_delay_ms", int),
    "vehicle_length": ("vehicle_length_m", float),
    "vehicle_width": ("vehicle_width_m", float),
    "cadence_ms": ("cadence_ms", int),
    "work_factor": ("work_factor", int),
    "seed": ("seed", int),
    "quota_limit": ("quota_limit", int),
    "ttl_ms": ("ttl_ms", int),
    "ttl_confirmed_ms": ("ttl_confirmed_ms", int),
    "confirm_threshold": ("confirm_threshold", int),
}


def load_params_file(path, base: SimParams | None = None) -> SimParams:
    """Read `key = value` lines; unknown keys are rejected."""
    params = base or SimParams()
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key not in PARAM_FILE_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
            field_name, cast = PARAM_FILE_KEYS[key]
            try:
                overrides[field_name] = cast(value.strip())
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: bad value for {key}: {value.strip()!r}"
                ) from None
    return replace(params, **overrides)


@dataclass(frozen=True)
class TickMetrics:
    t_s: float
    total_vehicles: int
    observed_vehicles: int
    confirmed_vehicles: int
    proofs_generated: int
    proofs_confirmed: int
    confirmed_vehicle_rate: float
    confirmed_proof_rate: float


METRICS_HEADER = "t_s,total,observed,confirmed,proofs,proofs_confirmed,cv_rate,cp_rate"


def metrics_csv_lines(metrics: list[TickMetrics]) -> list[str]:
    lines = [METRICS_HEADER]
    for m in metrics:
        lines.append(
            f"{m.t_s:g},{m.total_vehicles},{m.observed_vehicles},{m.confirmed_vehicles},"
            f"{m.proofs_generated},{m.proofs_confirmed},"
            f"{m.confirmed_vehicle_rate:.6f},{m.confirmed_proof_rate:.6f}"
        )
    return lines


@dataclass
class SimResult:
    metrics: list[TickMetrics]
    events: list[str]  # "time_ms  station_hex  kind  key_hex  provers" lines
    station_confirmations: dict[str, int]

    def aggregate_confirmed_proof_rate(self) -> float:
        generated = sum(m.proofs_generated for m in self.metrics)
        confirmed = sum(m.proofs_confirmed for m in self.metrics)
        return confirmed / generated if generated else 0.0


def plate_visible(
    observer: VehicleState,
    target: VehicleState,
    others: list[VehicleState],
    p: SimParams,
) -> bool:
    """Can the observer's camera see one of the target's plates?

    True when some plate point is within ``perception_m`` of the
    observer's front bumper, inside its field of view, and the sight
    segment is not blocked by any other vehicle's footprint or by the
    target's own body (shrunk 1 cm so a plate cannot occlude itself).
    """
    cam = (observer.x_m, observer.y_m)
    forward = geometry.heading_vector(observer.heading_deg)
    target_rect = geometry.footprint(
        target.x_m, target.y_m, target.heading_deg, p.vehicle_length_m, p.vehicle_width_m
    )
    occluders = [
        geometry.footprint(o.x_m, o.y_m, o.heading_deg, p.vehicle_length_m, p.vehicle_width_m)
        for o in others
        if o.vehicle_key not in (observer.vehicle_key, target.vehicle_key)
    ]
    limit_sq = p.perception_m * p.perception_m
    for point in geometry.plate_points(
        target.x_m, target.y_m, target.heading_deg, p.vehicle_length_m
    ):
        dx = point[0] - cam[0]
        dy = point[1] - cam[1]
        if dx * dx + dy * dy > limit_sq:
            continue
        if not geometry.in_field_of_view(cam, forward, point, p.fov_deg):
            continue
        if geometry.segment_hits_rect(cam, point, target_rect, shrink=geometry.PLATE_SHRINK_M):
            continue
        if any(geometry.segment_hits_rect(cam, point, rect) for rect in occluders):
            continue
        return True
    return False


def hearing_set(observer: VehicleState, all_vehicles: list[VehicleState], p: SimParams) -> set:
    """Pseudonyms of every other vehicle within communication range."""
    limit_sq = p.comm_range_m * p.comm_range_m
    heard = set()
    for v in all_vehicles:
        if v.vehicle_key == observer.vehicle_key:
            continue
        dx = v.x_m - observer.x_m
        dy = v.y_m - observer.y_m
        if dx * dx + dy * dy <= limit_sq:
            heard.add(v.pseudonym)
    return heard


class _CellIndex:
    """Uniform-grid spatial hash for radius and segment-corridor queries."""

    def __init__(self, vehicles, cell_m: float):
        self.cell_m = cell_m
        self.cells: dict[tuple[int, int], list[VehicleState]] = {}
        for v in vehicles:
            key = (int(math.floor(v.x_m / cell_m)), int(math.floor(v.y_m / cell_m)))
            self.cells.setdefault(key, []).append(v)

    def near(self, x: float, y: float, radius: float) -> list[VehicleState]:
        c = self.cell_m
        out = []
        for cx in range(int(math.floor((x - radius) / c)), int(math.floor((x + radius) / c)) + 1):
            for cy in range(int(math.floor((y - radius) / c)), int(math.floor((y + radius) / c)) + 1):
                got = self.cells.get((cx, cy))
                if got:
                    out.extend(got)
        return out

    def along(self, x0, y0, x1, y1, margin: float) -> list[VehicleState]:
        c = self.cell_m
        lo_x = int(math.floor((min(x0, x1) - margin) / c))
        hi_x = int(math.floor((max(x0, x1) + margin) / c))
        lo_y = int(math.floor((min(y0, y1) - margin) / c))
        hi_y = int(math.floor((max(y0, y1) + margin) / c))
        out = []
        for cx in range(lo_x, hi_x + 1):
            for cy in range(lo_y, hi_y + 1):
                got = self.cells.get((cx, cy))
                if got:
                    out.extend(got)
        return out


class _Station:
    __slots__ = ("vehicle_key", "pseudonym", "prover", "verifier", "first_seen", "confirmations")

    def __init__(self, vehicle_key: str, pseudonym, p: SimParams):
        self.vehicle_key = vehicle_key
        self.pseudonym = pseudonym
        self.prover = Prover(pseudonym, wf=p.work_factor, cadence_ms=p.cadence_ms)
        self.verifier = Verifier(
            pseudonym,
            quota_limit=p.quota_limit,
            ttl_ms=p.ttl_ms,
            ttl_confirmed_ms=p.ttl_confirmed_ms,
            confirm_threshold=p.confirm_threshold,
            local_counts=p.local_counts,
        )
        self.first_seen: dict[bytes, int] = {}
        self.confirmations = 0


_OCCLUDER_CELL_M = 12.0


def _tick_ms(t_s: float) -> int:
    return int(round(t_s * 1000.0))


def run_simulation(scenario: Scenario, p: SimParams) -> SimResult:
    """Drive per-vehicle stations over the scenario; see the module doc."""
    if not scenario.ticks:
        raise ValueError("scenario has no ticks")
    stations: dict[str, _Station] = {}
    metrics: list[TickMetrics] = []
    event_lines: list[str] = []
    # Whole-tick delivery delay; 1 ms at 1 s ticks floors to zero.
    tick_ms0 = _tick_ms(scenario.ticks[0].t_s)
    tick_duration_ms = _tick_ms(scenario.ticks[1].t_s) - tick_ms0 if len(scenario.ticks) > 1 else 0
    delay_ticks = p.comm_delay_ms // tick_duration_ms if tick_duration_ms > 0 else 0
    pending: dict[int, list] = {}
    # Vehicles are indexed by front-bumper position, so the corridor
    # margin is bumper-to-farthest-footprint-corner, not half a diagonal.
    occluder_margin = (
        math.sqrt(p.vehicle_length_m**2 + 0.25 * p.vehicle_width_m**2) + 0.05
    )

    for tick_index, tick in enumerate(scenario.ticks):
        now_ms = _tick_ms(tick.t_s)
        vehicles = tick.vehicles
        states = {v.vehicle_key: v for v in vehicles}
        key_by_pseudonym = {v.pseudonym: v.vehicle_key for v in vehicles}
        for v in vehicles:
            if v.vehicle_key not in stations:
                stations[v.vehicle_key] = _Station(v.vehicle_key, v.pseudonym, p)
        range_index = _CellIndex(vehicles, cell_m=max(p.perception_m, p.vehicle_length_m, 1.0))
        occ_index = _CellIndex(vehicles, cell_m=_OCCLUDER_CELL_M)

        # 1. Perception: build observations, register local knowledge.
        observations: dict[str, list[Observation]] = {}
        observed_targets: set[str] = set()
        for observer in vehicles:
            st = stations[observer.vehicle_key]
            heard = hearing_set(
                observer, range_index.near(observer.x_m, observer.y_m, p.comm_range_m), p
            )
            candidates = range_index.near(
                observer.x_m, observer.y_m, p.perception_m + p.vehicle_length_m
            )
            candidates.sort(key=lambda v: v.vehicle_key)
            obs_list = []
            for target in candidates:
                if target.vehicle_key == observer.vehicle_key:
                    continue
                if target.pseudonym not in heard:
                    continue
                if not _plate_visible_indexed(observer, target, occ_index, p, occluder_margin):
                    continue
                first = st.first_seen.setdefault(bytes(target.pseudonym), now_ms)
                obs_list.append(
                    Observation(
                        target_id=target.pseudonym,
                        plate=target.plate,
                        object_id=len(obs_list),
                        first_seen_ms=first,
                        last_seen_ms=now_ms,
                    )
                )
                observed_targets.add(target.vehicle_key)
            observations[observer.vehicle_key] = obs_list
            for obs in obs_list:
                ss = canonicalize_shared_secret(obs.target_id, obs.plate)
                event = st.verifier.note_local(ss, p.work_factor, now_ms)
                if event is not None:
                    st.confirmations += 1
                    event_lines.append(_sim_event_line(st, event))

        # 2./3. Prove, run the codec, queue for delivery.
        emitted_targets: list[bytes] = []  # target public key per emitted entry
        for sender in vehicles:
            st = stations[sender.vehicle_key]
            obs_list = observations[sender.vehicle_key]
            if not obs_list:
                continue
            entries = st.prover.step(obs_list, now_ms)
            objects = tuple(
                _perceived_object(obs, states[key_by_pseudonym[obs.target_id]])
                for obs in obs_list
            )
            cpm = Cpm(
                sender=sender.pseudonym,
                timestamp_ms=now_ms,
                objects=objects,
                proofs=tuple(entries),
            )
            decoded = decode_cpm(encode_cpm(cpm))
            by_object = {obs.object_id: obs for obs in obs_list}
            for entry in entries:
                obs = by_object[entry.object_id]
                ss = canonicalize_shared_secret(obs.target_id, obs.plate)
                emitted_targets.append(derive_public_key(ss, p.work_factor))
            receivers = [
                v.vehicle_key
                for v in vehicles
                if v.vehicle_key != sender.vehicle_key and _within(sender, v, p.comm_range_m)
            ]
            pending.setdefault(tick_index + delay_ticks, []).append((receivers, decoded))

        # 4. Deliver and ingest, then gc.
        for receivers, cpm in pending.pop(tick_index, []):
            for receiver_key in receivers:
                st = stations.get(receiver_key)
                if st is None or receiver_key not in states:
                    continue
                for event in st.verifier.ingest(cpm, now_ms):
                    st.confirmations += 1
                    event_lines.append(_sim_event_line(st, event))
        for v in vehicles:
            stations[v.vehicle_key].verifier.gc(now_ms)

        # 5. Metrics.
        confirmed_keys = set()
        for v in vehicles:
            confirmed_keys.update(stations[v.vehicle_key].verifier.confirmed.keys())
        confirmed_vehicles = 0
        for target_key in observed_targets:
            target = states[target_key]
            ss = canonicalize_shared_secret(target.pseudonym, target.plate)
            if derive_public_key(ss, p.work_factor) in confirmed_keys:
                confirmed_vehicles += 1
        proofs_generated = len(emitted_targets)
        proofs_confirmed = sum(1 for pk in emitted_targets if pk in confirmed_keys)
        observed = len(observed_targets)
        metrics.append(
            TickMetrics(
                t_s=tick.t_s,
                total_vehicles=len(vehicles),
                observed_vehicles=observed,
                confirmed_vehicles=confirmed_vehicles,
                proofs_generated=proofs_generated,
                proofs_confirmed=proofs_confirmed,
                confirmed_vehicle_rate=confirmed_vehicles / observed if observed else 0.0,
                confirmed_proof_rate=(
                    proofs_confirmed / proofs_generated if proofs_generated else 0.0
                ),
            )
        )

    station_confirmations = {
        st.pseudonym.hex(): st.confirmations for st in stations.values() if st.confirmations
    }
    return SimResult(
        metrics=metrics, events=event_lines, station_confirmations=station_confirmations
    )


def _sim_event_line(station: _Station, event) -> str:
    time_ms, kind, key_hex, provers = event.log_line().split("\t")
    return "\t".join((time_ms, station.pseudonym.hex(), kind, key_hex, provers))


def _within(a: VehicleState, b: VehicleState, range_m: float) -> bool:
    dx = a.x_m - b.x_m
    dy = a.y_m - b.y_m
    return dx * dx + dy * dy <= range_m * range_m


def _perceived_object(obs: Observation, target: VehicleState) -> PerceivedObject:
    return PerceivedObject(
        object_id=obs.object_id,
        x_cm=int(round(target.x_m * 100.0)),
        y_cm=int(round(target.y_m * 100.0)),
        speed_cms=max(0, min(0xFFFF, int(round(target.speed_mps * 100.0)))),
        heading_cdeg=int(round(target.heading_deg * 100.0)) % 36000,
    )


def _plate_visible_indexed(
    observer: VehicleState,
    target: VehicleState,
    occ_index: _CellIndex,
    p: SimParams,
    margin: float,
) -> bool:
    # Same decision as plate_visible(); occluder candidates come from the
    # spatial index plus a line-distance gate instead of a full scan.
    cam_x, cam_y = observer.x_m, observer.y_m
    forward = geometry.heading_vector(observer.heading_deg)
    target_rect = geometry.footprint(
        target.x_m, target.y_m, target.heading_deg, p.vehicle_length_m, p.vehicle_width_m
    )
    limit_sq = p.perception_m * p.perception_m
    for point in geometry.plate_points(
        target.x_m, target.y_m, target.heading_deg, p.vehicle_length_m
    ):
        dx = point[0] - cam_x
        dy = point[1] - cam_y
        seg_len_sq = dx * dx + dy * dy
        if seg_len_sq > limit_sq:
            continue
        if not geometry.in_field_of_view((cam_x, cam_y), forward, point, p.fov_deg):
            continue
        if geometry.segment_hits_rect(
            (cam_x, cam_y), point, target_rect, shrink=geometry.PLATE_SHRINK_M
        ):
            continue
        seg_len = math.sqrt(seg_len_sq)
        blocked = False
        for other in occ_index.along(cam_x, cam_y, point[0], point[1], margin):
            if other.vehicle_key == observer.vehicle_key:
                continue
            if other.vehicle_key == target.vehicle_key:
                continue
            # A footprint can only reach the segment if its center is
            # within half a diagonal of the supporting line.
            ox = other.x_m - cam_x
            oy = other.y_m - cam_y
            if seg_len > 0.0 and abs(dx * oy - dy * ox) > margin * seg_len:
                continue
            rect = geometry.footprint(
                other.x_m, other.y_m, other.heading_deg, p.vehicle_length_m, p.vehicle_width_m
            )
            if geometry.segment_hits_rect((cam_x, cam_y), point, rect):
                blocked = True
                break
        if not blocked:
            return True
    return False
