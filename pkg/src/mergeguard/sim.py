"""Deterministic fixed-tick simulation of the merge-moderation deployment.

A scenario (JSON, ``schema_version`` 1) describes one run: the road is a
single axis with the robot at the merge gate, infrastructure cameras
looking outward along the approaches, scripted vehicles, an optional
roadworks RSU and windows during which a merging vehicle waits at the
gate.  The engine advances in fixed ticks (default 0.05 s) and drives
the full pipeline:

    trajectories -> camera detections -> perception/CPMs -> channel ->
    robot fusion -> Zone-of-Danger decision -> actuation

while logging every observable event.  All randomness (sensor draws,
channel loss and jitter, CAM generation jitter) comes from streams
spawned off one seed, so a given (scenario, seed) pair always produces a
byte-identical event log.

Scenario layout (see docs/scenario_schema.md for the field-by-field
reference)::

    {
      "schema_version": 1,
      "name": "...",
      "duration_s": 24.0, "tick_s": 0.05, "rng_seed": 7,
      "channel":  {"comm_range_m": 150.0, "loss_prob": 0.0, ...},
      "robot":    {"station_id": 1, "position": [0,0], "zod": {...},
                   "moderator": {...}, "merging_detect_range_m": 15.0},
      "infra":    {"station_id": 100, "position": [0, 6],
                   "perception": {...}, "sensor": {...},
                   "cpm_processing_delay_s": 0.0, "cameras": [...]},
      "entities": [{"station_id": 7, "object_class": 1,
                    "v2x_equipped": true, "cam_period_s": 0.5,
                    "trajectory": [{"start_time_s": 0.0, "start_x_m": -82.8,
                                    "speed_mps": 22.0, "accel_mps2": 0.0}, ...]}],
      "rsu":      {"station_id": 200, "position": [134.3, 0], "denm": {...}},
      "merging_windows": [{"start_s": 1.2, "end_s": 16.0, "distance_m": 0.0}]
    }
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .calibration import CalibrationError, CalibrationModel, ReferenceLine
from .channel import Channel, ChannelConfig
from .decision import Action, DecisionState, Mode, ZodConfig, step
from .fusion import FusedObject, FusionConfig, Source, fuse
from .messages import (CamPayload, CpmPayload, DenmPayload, Message, MsgType,
                       StationType, decode_message, encode_message)
from .moderator import Moderator, ModeratorConfig, RobotPose
from .perception import (CameraSetup, Detection, PerceptionConfig,
                         PerceptionError, PerceptionPipeline,
                         camera_speed_to_road)

SCHEMA_VERSION = 1
LOG_FORMAT_VERSION = 1

EVENT_TYPES = frozenset({
    "msg_tx", "msg_rx", "detection", "cpm_gen", "cam_gen", "denm_relay",
    "fusion_out", "decision", "actuation", "zod_enter", "zod_exit",
})

_TIME_EPS = 1e-9


class ScenarioError(Exception):
    pass


class ParseError(ScenarioError):
    """Scenario file is not valid JSON."""


class ValidationError(ScenarioError):
    """Scenario JSON parses but violates a schema rule."""


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class TrajectorySegment:
    start_time_s: float
    start_x_m: float
    speed_mps: float
    accel_mps2: float


def eval_trajectory(segments: Sequence[TrajectorySegment], t_s: float) -> tuple[float, float]:
    """Position and signed velocity at time t (piecewise constant acceleration)."""
    seg = segments[0]
    for cand in segments:
        if cand.start_time_s <= t_s + _TIME_EPS:
            seg = cand
        else:
            break
    dt = t_s - seg.start_time_s
    x = seg.start_x_m + seg.speed_mps * dt + 0.5 * seg.accel_mps2 * dt * dt
    v = seg.speed_mps + seg.accel_mps2 * dt
    return x, v


def trajectory_summary(segments: Sequence[TrajectorySegment],
                       duration_s: float) -> tuple[float, float, float]:
    """(time until final stop, path length, mean speed while tracked).

    The stop time is the end of the last piece with any motion in it;
    a vehicle still moving at the end of the run stops "at" duration_s.
    """
    stop_time = 0.0
    path = 0.0
    for i, seg in enumerate(segments):
        t_end = segments[i + 1].start_time_s if i + 1 < len(segments) else duration_s
        t_end = min(t_end, duration_s)
        dt = t_end - seg.start_time_s
        if dt <= 0:
            continue
        v0, a = seg.speed_mps, seg.accel_mps2
        if v0 == 0.0 and a == 0.0:
            continue
        stop_time = t_end
        v1 = v0 + a * dt
        if a != 0.0 and v0 * v1 < 0.0:
            # velocity reverses inside the piece: split at the turning point,
            # where the speed is exactly zero
            t_turn = -v0 / a
            path += abs(v0 * t_turn + 0.5 * a * t_turn * t_turn)
            dt2 = dt - t_turn
            path += abs(0.5 * a * dt2 * dt2)
        else:
            path += abs(v0 * dt + 0.5 * a * dt * dt)
    mean = path / stop_time if stop_time > 0 else 0.0
    return stop_time, path, mean


# ---------------------------------------------------------------------------
# scenario model


@dataclass(frozen=True)
class Entity:
    station_id: int  # 0 = not V2X equipped
    object_class: int
    v2x_equipped: bool
    cam_period_s: float
    trajectory: tuple[TrajectorySegment, ...]


@dataclass(frozen=True)
class RobotSetup:
    moderator: ModeratorConfig
    zod: ZodConfig
    fusion: FusionConfig
    position: tuple[float, float]
    merging_detect_range_m: float = 15.0
    decision_period_s: float = 0.2


@dataclass(frozen=True)
class SensorConfig:
    max_detect_mean_m: float = 110.1
    max_detect_std_m: float = 6.5
    detect_min_m: float = 80.0
    detect_max_m: float = 130.0
    detect_near_m: float = 5.0
    pixel_noise_std: float = 2.0


@dataclass(frozen=True)
class InfraSetup:
    station_id: int
    position: tuple[float, float]
    perception: PerceptionConfig
    sensor: SensorConfig
    cameras: tuple[CameraSetup, ...]
    cpm_processing_delay_s: float = 0.0


@dataclass(frozen=True)
class RsuSetup:
    station_id: int
    position: tuple[float, float]
    cause_code: int = 3  # roadworks
    period_s: float = 1.0
    start_s: float = 0.0
    end_s: float = math.inf
    validity_s: int = 60
    # DENMs are commonly repeated for reliability; every notification is
    # sent repeat_count times, repeat_gap_s apart, under one sequence number
    repeat_count: int = 1
    repeat_gap_s: float = 0.1


@dataclass(frozen=True)
class MergingWindow:
    start_s: float
    end_s: float
    distance_m: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    tick_s: float
    rng_seed: int
    channel: ChannelConfig
    robot: RobotSetup
    entities: tuple[Entity, ...]
    infra: InfraSetup | None = None
    rsu: RsuSetup | None = None
    merging_windows: tuple[MergingWindow, ...] = ()

    def merging_seen(self, now_s: float) -> bool:
        return any(w.start_s <= now_s < w.end_s
                   and w.distance_m <= self.robot.merging_detect_range_m
                   for w in self.merging_windows)


def _require(cond: bool, why: str) -> None:
    if not cond:
        raise ValidationError(why)


def _get(obj: dict, key: str, kind, why: str):
    _require(key in obj, f"missing field: {why}")
    val = obj[key]
    if kind is float:
        _require(isinstance(val, (int, float)) and not isinstance(val, bool),
                 f"{why} must be a number")
        return float(val)
    _require(isinstance(val, kind), f"{why} has wrong type")
    return val


def _position(raw, why: str) -> tuple[float, float]:
    _require(isinstance(raw, (list, tuple)) and len(raw) == 2,
             f"{why} must be [x, y]")
    return (float(raw[0]), float(raw[1]))


def _divisible(period: float, tick: float) -> bool:
    ratio = period / tick
    return abs(ratio - round(ratio)) < 1e-9 and round(ratio) >= 1


def _trajectory_from_list(raw: list, why: str) -> tuple[TrajectorySegment, ...]:
    _require(len(raw) >= 1, f"{why}: empty trajectory")
    segs = []
    for i, item in enumerate(raw):
        segs.append(TrajectorySegment(
            start_time_s=_get(item, "start_time_s", float, f"{why}[{i}].start_time_s"),
            start_x_m=_get(item, "start_x_m", float, f"{why}[{i}].start_x_m"),
            speed_mps=_get(item, "speed_mps", float, f"{why}[{i}].speed_mps"),
            accel_mps2=_get(item, "accel_mps2", float, f"{why}[{i}].accel_mps2"),
        ))
    _require(segs[0].start_time_s == 0.0, f"{why}: first segment must start at 0")
    for prev, nxt in zip(segs, segs[1:]):
        _require(nxt.start_time_s > prev.start_time_s,
                 f"{why}: overlapping segments at t={nxt.start_time_s}")
        dt = nxt.start_time_s - prev.start_time_s
        x_end = prev.start_x_m + prev.speed_mps * dt + 0.5 * prev.accel_mps2 * dt * dt
        v_end = prev.speed_mps + prev.accel_mps2 * dt
        _require(abs(x_end - nxt.start_x_m) <= 1e-6,
                 f"{why}: position discontinuity at t={nxt.start_time_s}")
        _require(abs(v_end - nxt.speed_mps) <= 1e-6,
                 f"{why}: speed discontinuity at t={nxt.start_time_s}")
    return tuple(segs)


def _camera_from_dict(raw: dict, idx: int) -> CameraSetup:
    why = f"infra.cameras[{idx}]"
    line_raw = _get(raw, "line", dict, f"{why}.line")
    calib = _get(raw, "calibration", dict, f"{why}.calibration")
    order = _get(calib, "order", int, f"{why}.calibration.order")
    weights = calib.get("weights")
    _require(isinstance(weights, list) and len(weights) == order + 1,
             f"{why}.calibration.weights must hold order+1 numbers")
    try:
        line = ReferenceLine(_position(line_raw.get("p0"), f"{why}.line.p0"),
                             _position(line_raw.get("p1"), f"{why}.line.p1"))
        model = CalibrationModel(order, tuple(float(w) for w in weights))
        cam = CameraSetup(
            camera_id=_get(raw, "camera_id", int, f"{why}.camera_id"),
            line=line,
            model=model,
            road_position_m=_get(raw, "road_position_m", float,
                                 f"{why}.road_position_m"),
            direction_sign=_get(raw, "direction_sign", int, f"{why}.direction_sign"),
        )
    except (CalibrationError, PerceptionError, ValueError) as exc:
        raise ValidationError(f"{why}: {exc}") from None
    # the sensor model inverts the polynomial, so it must be increasing
    grid = np.linspace(0.0, line.s_max, 101)
    vals = [model.raw(s) for s in grid]
    _require(all(b > a for a, b in zip(vals, vals[1:])),
             f"{why}: calibration polynomial must increase over [0, s_max]")
    return cam


def scenario_from_dict(obj: dict) -> Scenario:
    _require(isinstance(obj, dict), "scenario root must be an object")
    version = obj.get("schema_version")
    _require(version == SCHEMA_VERSION,
             f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    name = obj.get("name", "unnamed")
    duration = _get(obj, "duration_s", float, "duration_s")
    tick = float(obj.get("tick_s", 0.05))
    _require(duration > 0, "duration_s must be positive")
    _require(tick > 0, "tick_s must be positive")
    _require(_divisible(duration, tick), "tick_s must divide duration_s")
    seed = _get(obj, "rng_seed", int, "rng_seed")
    _require(seed >= 0, "rng_seed must be non-negative")

    try:
        chan = ChannelConfig(**obj.get("channel", {}))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"channel: {exc}") from None

    robot_raw = _get(obj, "robot", dict, "robot")
    try:
        moderator = ModeratorConfig(**robot_raw.get("moderator", {}))
        zod = ZodConfig(**robot_raw.get("zod", {}))
        fus = FusionConfig(**robot_raw.get("fusion", {}))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"robot: {exc}") from None
    robot = RobotSetup(
        moderator=moderator, zod=zod, fusion=fus,
        position=_position(robot_raw.get("position", [0.0, 0.0]), "robot.position"),
        merging_detect_range_m=float(robot_raw.get("merging_detect_range_m", 15.0)),
        decision_period_s=float(robot_raw.get("decision_period_s", 0.2)),
    )
    _require(_divisible(robot.decision_period_s, tick),
             "tick_s must divide robot.decision_period_s")

    infra = None
    if obj.get("infra") is not None:
        infra_raw = obj["infra"]
        try:
            perception = PerceptionConfig(**infra_raw.get("perception", {}))
            sensor = SensorConfig(**infra_raw.get("sensor", {}))
        except TypeError as exc:
            raise ValidationError(f"infra: {exc}") from None
        cameras_raw = _get(infra_raw, "cameras", list, "infra.cameras")
        _require(len(cameras_raw) >= 1, "infra.cameras must not be empty")
        cameras = tuple(_camera_from_dict(c, i) for i, c in enumerate(cameras_raw))
        _require(len({c.camera_id for c in cameras}) == len(cameras),
                 "infra camera ids must be unique")
        _require(_divisible(perception.cpm_period_s, tick),
                 "tick_s must divide infra.perception.cpm_period_s")
        infra = InfraSetup(
            station_id=_get(infra_raw, "station_id", int, "infra.station_id"),
            position=_position(infra_raw.get("position", [0.0, 0.0]), "infra.position"),
            perception=perception, sensor=sensor, cameras=cameras,
            cpm_processing_delay_s=float(infra_raw.get("cpm_processing_delay_s", 0.0)),
        )
        _require(infra.cpm_processing_delay_s >= 0,
                 "infra.cpm_processing_delay_s must be non-negative")

    entities = []
    for i, raw in enumerate(obj.get("entities", [])):
        why = f"entities[{i}]"
        station_id = int(raw.get("station_id", 0))
        v2x = bool(raw.get("v2x_equipped", station_id != 0))
        _require(not (v2x and station_id == 0),
                 f"{why}: v2x_equipped requires a non-zero station_id")
        cam_period = float(raw.get("cam_period_s", 0.5))
        if v2x:
            _require(_divisible(cam_period, tick),
                     f"{why}: tick_s must divide cam_period_s")
        entities.append(Entity(
            station_id=station_id,
            object_class=int(raw.get("object_class", 1)),
            v2x_equipped=v2x,
            cam_period_s=cam_period,
            trajectory=_trajectory_from_list(
                _get(raw, "trajectory", list, f"{why}.trajectory"), why),
        ))

    rsu = None
    if obj.get("rsu") is not None:
        rsu_raw = obj["rsu"]
        denm_raw = rsu_raw.get("denm", {})
        rsu = RsuSetup(
            station_id=_get(rsu_raw, "station_id", int, "rsu.station_id"),
            position=_position(rsu_raw.get("position", [0.0, 0.0]), "rsu.position"),
            cause_code=int(denm_raw.get("cause_code", 3)),
            period_s=float(denm_raw.get("period_s", 1.0)),
            start_s=float(denm_raw.get("start_s", 0.0)),
            end_s=float(denm_raw.get("end_s", duration)),
            validity_s=int(denm_raw.get("validity_s", 60)),
            repeat_count=int(denm_raw.get("repeat_count", 1)),
            repeat_gap_s=float(denm_raw.get("repeat_gap_s", 0.1)),
        )
        _require(rsu.period_s > 0, "rsu.denm.period_s must be positive")
        _require(rsu.start_s <= rsu.end_s, "rsu.denm start must precede end")
        _require(rsu.repeat_count >= 1, "rsu.denm.repeat_count must be at least 1")
        _require(rsu.repeat_gap_s >= 0, "rsu.denm.repeat_gap_s must be non-negative")

    windows = []
    for i, raw in enumerate(obj.get("merging_windows", [])):
        w = MergingWindow(start_s=_get(raw, "start_s", float, f"merging_windows[{i}].start_s"),
                          end_s=_get(raw, "end_s", float, f"merging_windows[{i}].end_s"),
                          distance_m=float(raw.get("distance_m", 0.0)))
        _require(w.start_s < w.end_s, f"merging_windows[{i}]: start must precede end")
        _require(w.distance_m >= 0, f"merging_windows[{i}]: distance must be non-negative")
        windows.append(w)

    station_ids = [robot.moderator.station_id]
    if infra:
        station_ids.append(infra.station_id)
    if rsu:
        station_ids.append(rsu.station_id)
    station_ids += [e.station_id for e in entities if e.station_id != 0]
    _require(len(set(station_ids)) == len(station_ids),
             "station ids must be unique across robot, infra, rsu and entities")

    return Scenario(name=name, duration_s=duration, tick_s=tick, rng_seed=seed,
                    channel=chan, robot=robot, entities=tuple(entities),
                    infra=infra, rsu=rsu, merging_windows=tuple(windows))


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    OSError passes through untouched (the caller decides how to report
    I/O trouble); bad JSON raises ParseError, schema violations
    ValidationError.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return scenario_from_dict(obj)


# ---------------------------------------------------------------------------
# sensor model


class SensorModel:
    """Per-vehicle acquisition range plus pixel noise on the line coordinate.

    Each vehicle's maximum detection range is drawn once from
    N(mean, std) truncated to [detect_min, detect_max]; a camera sees the
    vehicle whenever its distance lies between the near cutoff and that
    range.  The reported image point is the true line coordinate plus
    Gaussian pixel noise.
    """

    def __init__(self, config: SensorConfig, cameras: Sequence[CameraSetup],
                 n_entities: int, rng: np.random.Generator):
        self.config = config
        self.cameras = sorted(cameras, key=lambda c: c.camera_id)
        self.rng = rng
        self.ranges = [self._draw_range() for _ in range(n_entities)]
        self._near = {cam.camera_id: max(config.detect_near_m, cam.model.raw(0.0))
                      for cam in self.cameras}

    def _draw_range(self) -> float:
        cfg = self.config
        if cfg.max_detect_std_m == 0.0:
            return min(max(cfg.max_detect_mean_m, cfg.detect_min_m), cfg.detect_max_m)
        while True:
            r = float(self.rng.normal(cfg.max_detect_mean_m, cfg.max_detect_std_m))
            if cfg.detect_min_m <= r <= cfg.detect_max_m:
                return r

    @staticmethod
    def _invert(model: CalibrationModel, s_max: float, target_m: float) -> float:
        lo, hi = 0.0, s_max
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if model.raw(mid) < target_m:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def observe(self, now_s: float, positions: Sequence[float],
                classes: Sequence[int]) -> list[Detection]:
        """Detections for this tick, cameras in id order, entities in index order."""
        out = []
        for cam in self.cameras:
            far_limit = cam.model.raw(cam.line.s_max)
            for idx, x in enumerate(positions):
                dist = cam.direction_sign * (x - cam.road_position_m)
                if dist < self._near[cam.camera_id] or dist > self.ranges[idx]:
                    continue
                if dist > far_limit:
                    continue
                s_true = self._invert(cam.model, cam.line.s_max, dist)
                s_noisy = s_true
                if self.config.pixel_noise_std > 0.0:
                    s_noisy += float(self.rng.normal(0.0, self.config.pixel_noise_std))
                    s_noisy = min(max(s_noisy, 0.0), cam.line.s_max)
                ux, uy = cam.line.direction
                point = (cam.line.p0[0] + s_noisy * ux, cam.line.p0[1] + s_noisy * uy)
                out.append(Detection(camera_id=cam.camera_id, track_id=idx,
                                     bottom_center=point, object_class=classes[idx],
                                     time_s=now_s))
        return out


# ---------------------------------------------------------------------------
# event log


@dataclass
class EventLog:
    events: list[dict] = field(default_factory=list)

    def append(self, time_s: float, event_type: str, actor: str, **payload: Any) -> None:
        assert event_type in EVENT_TYPES, event_type
        if self.events:
            assert time_s >= self.events[-1]["t"] - _TIME_EPS, (
                f"event log time regression: {time_s} after {self.events[-1]['t']}")
        self.events.append({"t": round(time_s, 9), "type": event_type,
                            "actor": actor, **payload})

    def of_type(self, event_type: str) -> list[dict]:
        return [e for e in self.events if e["type"] == event_type]


def log_to_jsonl(header: dict, log: EventLog) -> str:
    lines = [json.dumps(header, separators=(",", ":"))]
    lines += [json.dumps(e, separators=(",", ":")) for e in log.events]
    return "\n".join(lines) + "\n"


def log_from_jsonl(text: str) -> tuple[dict, list[dict]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty log")
    header = json.loads(lines[0])
    return header, [json.loads(ln) for ln in lines[1:]]


# ---------------------------------------------------------------------------
# engine


@dataclass
class RunResult:
    header: dict
    log: EventLog
    series: list[dict] | None = None

    def to_jsonl(self) -> str:
        return log_to_jsonl(self.header, self.log)


class _Pending:
    """Time-ordered queue of scheduled transmissions and deliveries."""

    def __init__(self):
        self._heap: list = []
        self._seq = 0

    def push(self, time_s: float, kind: str, data: tuple) -> None:
        heapq.heappush(self._heap, (time_s, self._seq, kind, data))
        self._seq += 1

    def pop_due(self, now_s: float):
        while self._heap and self._heap[0][0] <= now_s + _TIME_EPS:
            yield heapq.heappop(self._heap)


def run(scenario: Scenario, seed: int | None = None,
        collect_series: bool = False) -> RunResult:
    """Execute one scenario and return its event log.

    ``seed`` overrides the scenario's rng_seed; the seed actually used is
    echoed in the returned header.
    """
    eff_seed = scenario.rng_seed if seed is None else seed
    ss = np.random.SeedSequence(eff_seed)
    chan_ss, sensor_ss, jitter_ss = ss.spawn(3)

    robot_cfg = scenario.robot
    robot_id = robot_cfg.moderator.station_id
    channel = Channel(scenario.channel, chan_ss)
    moderator = Moderator(robot_cfg.moderator, jitter_seed=jitter_ss)
    perception = None
    sensor = None
    if scenario.infra is not None:
        perception = PerceptionPipeline(scenario.infra.station_id,
                                        list(scenario.infra.cameras),
                                        scenario.infra.perception)
        sensor = SensorModel(scenario.infra.sensor, scenario.infra.cameras,
                             len(scenario.entities), np.random.default_rng(sensor_ss))

    log = EventLog()
    header = {
        "log_format": LOG_FORMAT_VERSION,
        "scenario": scenario.name,
        "schema_version": SCHEMA_VERSION,
        "seed": eff_seed,
        "tick_s": scenario.tick_s,
        "duration_s": scenario.duration_s,
    }

    # station labels and radio positions
    labels: dict[int, str] = {robot_id: "robot"}
    positions: dict[int, tuple[float, float]] = {robot_id: robot_cfg.position}
    if scenario.infra:
        labels[scenario.infra.station_id] = "infra"
        positions[scenario.infra.station_id] = scenario.infra.position
    if scenario.rsu:
        labels[scenario.rsu.station_id] = "rsu"
        positions[scenario.rsu.station_id] = scenario.rsu.position
    veh_label = {}
    for idx, ent in enumerate(scenario.entities):
        veh_label[idx] = f"veh{idx}"
        if ent.v2x_equipped:
            labels[ent.station_id] = veh_label[idx]

    listener_ids = [robot_id] + [e.station_id for e in scenario.entities if e.v2x_equipped]

    pending = _Pending()
    cam_store: dict[int, CamPayload] = {}
    cam_store_time: dict[int, float] = {}
    cpm_store: tuple[float, CpmPayload] | None = None
    denm_seen: dict[int, set[tuple[int, int]]] = {lid: set() for lid in listener_ids}

    state = DecisionState()
    last_action: Action | None = None
    entity_x = [0.0] * len(scenario.entities)
    entity_v = [0.0] * len(scenario.entities)
    in_zone = [False] * len(scenario.entities)
    first_detected = [False] * len(scenario.entities)
    rsu_next_idx = 0
    rsu_seq = 0
    series: list[dict] | None = [] if collect_series else None

    max_hops = robot_cfg.moderator.max_hops
    tick = scenario.tick_s
    n_ticks = int(round(scenario.duration_s / tick))
    cpm_every = (int(round(scenario.infra.perception.cpm_period_s / tick))
                 if scenario.infra else 0)
    decision_every = int(round(robot_cfg.decision_period_s / tick))
    cam_every = {idx: int(round(ent.cam_period_s / tick))
                 for idx, ent in enumerate(scenario.entities) if ent.v2x_equipped}

    def entity_pos2d(idx: int) -> tuple[float, float]:
        return (entity_x[idx], 0.0)

    def station_pos(sid: int) -> tuple[float, float]:
        if sid in positions:
            return positions[sid]
        for idx, ent in enumerate(scenario.entities):
            if ent.v2x_equipped and ent.station_id == sid:
                return entity_pos2d(idx)
        raise KeyError(sid)

    def transmit(msg: Message, sender_id: int, tx_time: float) -> None:
        data = encode_message(msg, max_hops=max_hops)
        log.append(tx_time, "msg_tx", labels.get(sender_id, str(sender_id)),
                   msg_type=msg.msg_type.name, station_id=msg.station_id,
                   timestamp_ms=msg.timestamp_ms, size_b=len(data))
        receivers = [(rid, station_pos(rid)) for rid in listener_ids if rid != sender_id]
        for d in channel.broadcast(station_pos(sender_id), tx_time, receivers):
            pending.push(d.delivery_time_s, "rx", (d.receiver_id, sender_id, data))

    def deliver(rx_time: float, receiver_id: int, sender_id: int, data: bytes) -> None:
        msg = decode_message(data, max_hops=max_hops)
        extra: dict[str, Any] = {}
        if msg.msg_type is MsgType.DENM:
            key = (msg.payload.origin_station_id, msg.payload.sequence_number)
            extra["origin"] = key[0]
            extra["sequence"] = key[1]
            extra["hop_count"] = msg.payload.hop_count
            extra["duplicate"] = key in denm_seen[receiver_id]
            denm_seen[receiver_id].add(key)
        log.append(rx_time, "msg_rx", labels.get(receiver_id, str(receiver_id)),
                   msg_type=msg.msg_type.name, from_station=msg.station_id,
                   timestamp_ms=msg.timestamp_ms,
                   latency_s=round(rx_time - msg.timestamp_ms / 1000.0, 9), **extra)
        if receiver_id != robot_id:
            return
        nonlocal cpm_store
        if msg.msg_type is MsgType.CAM:
            cam_store[msg.station_id] = msg.payload
            cam_store_time[msg.station_id] = msg.timestamp_ms / 1000.0
        elif msg.msg_type is MsgType.CPM:
            ts = msg.timestamp_ms / 1000.0
            if cpm_store is None or ts >= cpm_store[0]:
                cpm_store = (ts, msg.payload)
        else:
            relayed = moderator.relay_denm(msg)
            if relayed is not None:
                log.append(rx_time, "denm_relay", "robot",
                           origin=relayed.payload.origin_station_id,
                           sequence=relayed.payload.sequence_number,
                           hop_count=relayed.payload.hop_count)
                transmit(relayed, robot_id, rx_time)

    def flush(now_s: float) -> None:
        for time_s, _, kind, data in pending.pop_due(now_s):
            if kind == "tx":
                msg, sender_id = data
                transmit(msg, sender_id, time_s)
            else:
                deliver(time_s, *data)

    def fused_inputs(now_s: float) -> tuple[list[FusedObject], list[FusedObject]]:
        staleness = robot_cfg.zod.staleness_s
        v2x = []
        for sid in sorted(cam_store):
            meas_t = cam_store_time[sid]
            if now_s - meas_t > staleness:
                continue
            p = cam_store[sid]
            heading_rad = math.radians(p.heading_cdeg / 100.0)
            v2x.append(FusedObject(
                source=Source.V2X, ref_id=sid, road_x_m=p.pos_x_cm / 100.0,
                speed_mps=(p.speed_cms / 100.0) * math.cos(heading_rad),
                object_class=1, last_update_s=meas_t))
        cam_objs = []
        if cpm_store is not None:
            ts, payload = cpm_store
            for obj in payload.objects:
                meas_t = ts - obj.meas_delta_ms / 1000.0
                if now_s - meas_t > staleness:
                    continue
                road_x = obj.pos_x_cm / 100.0
                cam_objs.append(FusedObject(
                    source=Source.CAMERA, ref_id=obj.object_id, road_x_m=road_x,
                    speed_mps=camera_speed_to_road(road_x, obj.speed_cms / 100.0),
                    object_class=obj.object_class, last_update_s=meas_t))
        return v2x, cam_objs

    for i in range(n_ticks + 1):
        now = i * tick
        flush(now)

        # world truth and ground-truth zone bookkeeping
        for idx, ent in enumerate(scenario.entities):
            x, v = eval_trajectory(ent.trajectory, now)
            entity_x[idx], entity_v[idx] = x, v
            inside = robot_cfg.zod.contains(x)
            if inside and not in_zone[idx]:
                log.append(now, "zod_enter", veh_label[idx],
                           station_id=ent.station_id, road_x_m=round(x, 6))
            elif not inside and in_zone[idx]:
                log.append(now, "zod_exit", veh_label[idx],
                           station_id=ent.station_id, road_x_m=round(x, 6))
            in_zone[idx] = inside

        # infrastructure perception
        if sensor is not None:
            for det in sensor.observe(now, entity_x,
                                      [e.object_class for e in scenario.entities]):
                cam = perception.cameras[det.camera_id]
                truth_dist = cam.direction_sign * (entity_x[det.track_id]
                                                   - cam.road_position_m)
                log.append(now, "detection", "infra",
                           camera_id=det.camera_id, track_id=det.track_id,
                           station_id=scenario.entities[det.track_id].station_id,
                           cam_distance_m=round(truth_dist, 6),
                           road_x_m=round(entity_x[det.track_id], 6),
                           first=not first_detected[det.track_id])
                first_detected[det.track_id] = True
                perception.ingest(det)
            if cpm_every and i % cpm_every == 0:
                cpm = perception.assemble_cpm(now)
                log.append(now, "cpm_gen", "infra",
                           timestamp_ms=cpm.timestamp_ms,
                           n_objects=len(cpm.payload.objects))
                pending.push(now + scenario.infra.cpm_processing_delay_s, "tx",
                             (cpm, scenario.infra.station_id))

        # vehicle CAMs at their configured period
        for idx, every in cam_every.items():
            if i % every == 0:
                ent = scenario.entities[idx]
                v = entity_v[idx]
                cam_msg = Message(ent.station_id, int(round(now * 1000.0)), CamPayload(
                    station_type=StationType.PASSENGER_CAR,
                    pos_x_cm=int(round(entity_x[idx] * 100.0)), pos_y_cm=0,
                    speed_cms=int(round(abs(v) * 100.0)),
                    heading_cdeg=0 if v >= 0 else 18000))
                log.append(now, "cam_gen", veh_label[idx],
                           station_id=ent.station_id, pos_x_m=round(entity_x[idx], 6),
                           speed_mps=round(v, 6), timestamp_ms=cam_msg.timestamp_ms)
                pending.push(now, "tx", (cam_msg, ent.station_id))

        # robot CAM (ETSI-rule generation)
        pose = RobotPose(robot_cfg.position[0], robot_cfg.position[1], 0.0, 0.0)
        robot_cam = moderator.cam_tick(now, pose)
        if robot_cam is not None:
            log.append(now, "cam_gen", "robot", station_id=robot_id,
                       pos_x_m=round(pose.pos_x_m, 6), speed_mps=0.0,
                       timestamp_ms=robot_cam.timestamp_ms)
            pending.push(now, "tx", (robot_cam, robot_id))

        # RSU hazard notifications
        if scenario.rsu is not None:
            r = scenario.rsu
            while True:
                sched = r.start_s + rsu_next_idx * r.period_s
                if sched > min(r.end_s, scenario.duration_s) or sched > now + _TIME_EPS:
                    break
                denm = Message(r.station_id, int(round(now * 1000.0)), DenmPayload(
                    cause_code=r.cause_code, sequence_number=rsu_seq % 65536,
                    event_pos_x_cm=int(round(r.position[0] * 100.0)),
                    event_pos_y_cm=int(round(r.position[1] * 100.0)),
                    validity_s=r.validity_s, hop_count=0,
                    origin_station_id=r.station_id))
                for rep in range(r.repeat_count):
                    pending.push(now + rep * r.repeat_gap_s, "tx", (denm, r.station_id))
                rsu_seq += 1
                rsu_next_idx += 1

        # fusion + decision
        if i % decision_every == 0:
            v2x_objs, cam_objs = fused_inputs(now)
            fused = fuse(v2x_objs, cam_objs, robot_cfg.fusion)
            log.append(now, "fusion_out", "robot",
                       n_v2x=len(v2x_objs), n_camera=len(cam_objs),
                       objects=[{"src": o.source.value, "id": o.ref_id,
                                 "x": round(o.road_x_m, 3), "v": round(o.speed_mps, 3)}
                                for o in fused])
            merging = scenario.merging_seen(now)
            state, action = step(state, fused, merging, now, robot_cfg.zod)
            if action is not last_action and action in (Action.STOP, Action.PASS):
                log.append(now, "decision", "robot", mode=state.mode.value,
                           action=action.value, merging_seen=merging,
                           blocking=list(state.blocking_key) if state.blocking_key else None)
                for ev in moderator.actuate(action, now):
                    log.append(now, "actuation", "robot",
                               phase=f"{action.value}_issued", completes_at=round(ev.due_s, 9))
            last_action = action

        for ev in moderator.due_actuations(now):
            log.append(now, "actuation", "robot", phase=ev.phase)

        if series is not None:
            row: dict[str, Any] = {"time_s": round(now, 9),
                                   "mode": state.mode.value,
                                   "merging": int(scenario.merging_seen(now))}
            for idx in range(len(scenario.entities)):
                row[f"x_{veh_label[idx]}"] = round(entity_x[idx], 6)
                row[f"v_{veh_label[idx]}"] = round(entity_v[idx], 6)
            series.append(row)

        flush(now)

    return RunResult(header=header, log=log, series=series)


# ---------------------------------------------------------------------------
# scenario generator for randomized constant-speed passes


def make_pass_scenario(seed: int, *, v2x: bool = False,
                       merging_offset_s: float | None = None,
                       direction: int = -1, pixel_noise_std: float = 2.0,
                       tau_th_s: float = 5.0) -> dict:
    """One randomized constant-speed pass scenario, as a schema dict.

    A single vehicle starts beyond everyone's detection range on the
    ``direction`` side (-1 = negative x) and drives through the gate at a
    speed drawn uniformly from [8, 18] m/s.  When ``merging_offset_s`` is
    given, a merging vehicle appears at the gate that many seconds before
    the pass vehicle's ground-truth zone entry.
    """
    rng = np.random.default_rng(seed)
    speed = float(rng.uniform(8.0, 18.0))
    start_gap = float(rng.uniform(135.0, 155.0))  # distance from the camera
    cam_pos = 24.0 * direction
    start_x = cam_pos + direction * start_gap
    travel = abs(start_x) + 40.0
    duration = round(math.ceil((travel / speed + 4.0) / 0.5) * 0.5, 2)
    entry_time = (abs(start_x) - 25.0) / speed

    windows = []
    if merging_offset_s is not None:
        start = max(0.0, entry_time - merging_offset_s)
        windows.append({"start_s": round(start, 3),
                        "end_s": round(duration, 3), "distance_m": 0.0})

    line = {"p0": [60.0, 420.0], "p1": [820.0, 80.0]}  # 832.33 px long
    calibration = {"order": 2, "weights": [5.0, 0.1, 0.0001]}
    camera = {"camera_id": 0 if direction < 0 else 1,
              "road_position_m": cam_pos, "direction_sign": direction,
              "line": line, "calibration": calibration}

    return {
        "schema_version": 1,
        "name": f"pass_{seed}",
        "duration_s": duration,
        "tick_s": 0.05,
        "rng_seed": int(seed),
        "channel": {"comm_range_m": 400.0, "loss_prob": 0.0,
                    "latency_base_s": 0.01, "latency_jitter_s": 0.005},
        "robot": {"station_id": 1, "position": [0.0, 0.0],
                  "zod": {"half_extent_m": 25.0, "tau_th_s": tau_th_s},
                  "moderator": {"station_id": 1},
                  "merging_detect_range_m": 15.0},
        "infra": {"station_id": 100, "position": [0.0, 6.0],
                  "cameras": [camera],
                  "sensor": {"pixel_noise_std": pixel_noise_std}},
        "entities": [{"station_id": 7 if v2x else 0, "object_class": 1,
                      "v2x_equipped": v2x,
                      "trajectory": [{"start_time_s": 0.0, "start_x_m": round(start_x, 6),
                                      "speed_mps": round(-direction * speed, 6),
                                      "accel_mps2": 0.0}]}],
        "merging_windows": windows,
    }
