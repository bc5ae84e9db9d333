"""Infrastructure vision pipeline: detections -> tracks -> CPMs.

Each roadside camera reports detections as image points; calibration
turns them into metric distances from the camera, and a short sliding
window turns distances into speed.  Speed over the last three samples is
the mean of the two segment slopes:

    v_bar = 1/2 * [ (d2 - d1)/(t2 - t1) + (d3 - d2)/(t3 - t2) ]

Negative v_bar means the object approaches the camera.  An object is
labelled moving only when |v_bar| exceeds the threshold (default 3 m/s,
strict), which suppresses apparent motion from camera shake.

assemble_cpm packs every live track from all cameras of one
infrastructure station into a single collective-perception message in
the shared road frame (robot at x=0).  Tracks that do not yet have a
full window are reported with speed 0; the measurement age rides along
in meas_delta_ms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .calibration import CalibrationModel, ReferenceLine, estimate_distance, project_to_line
from .messages import (CpmPayload, Message, PerceivedObject, SensorInfo, SensorType)

WINDOW_SIZE = 3

# Per-camera track ids are folded into the CPM object_id (u16): the top
# two bits carry the camera index so two cameras tracking the same
# vehicle never collide within one message.
_TRACK_ID_BITS = 14
_TRACK_ID_MASK = (1 << _TRACK_ID_BITS) - 1


class PerceptionError(Exception):
    pass


class StaleDetection(PerceptionError):
    """A detection's timestamp regressed behind its track's last sample."""


class InsufficientSamples(PerceptionError):
    """Velocity requested from a window with fewer than three samples."""


class MotionClass(Enum):
    APPROACHING = "approaching"
    RECEDING = "receding"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class PerceptionConfig:
    moving_threshold_mps: float = 3.0
    cpm_period_s: float = 0.2
    track_expiry_s: float = 1.0
    # minimum spacing between kept window samples; frame-rate detections
    # arriving faster than this are dropped so the two-slope estimate runs
    # over a baseline long enough to beat pixel noise
    sample_gap_s: float = 0.2


@dataclass(frozen=True)
class CameraSetup:
    """Mounting of one camera: image-space line plus road-frame pose.

    road_position_m is where the camera sits on the road axis and
    direction_sign which way it looks (+1 toward positive x), so a
    detection at camera distance d maps to

        road_x = road_position_m + direction_sign * d
    """

    camera_id: int
    line: ReferenceLine
    model: CalibrationModel
    road_position_m: float
    direction_sign: int

    def __post_init__(self):
        if self.direction_sign not in (-1, 1):
            raise PerceptionError("direction_sign must be -1 or +1")
        if not 0 <= self.camera_id < 4:
            raise PerceptionError("camera_id must fit the object_id namespace (0..3)")


@dataclass(frozen=True)
class Detection:
    camera_id: int
    track_id: int
    bottom_center: tuple[float, float]  # pixels
    object_class: int
    time_s: float


@dataclass
class TrackWindow:
    """Ring of the most recent distance samples for one camera track."""

    camera_id: int
    track_id: int
    object_class: int
    times: list[float] = field(default_factory=list)
    distances: list[float] = field(default_factory=list)
    extrapolation_suspect: bool = False

    @property
    def last_time(self) -> float:
        return self.times[-1]

    @property
    def last_distance(self) -> float:
        return self.distances[-1]

    def push(self, time_s: float, distance_m: float,
             min_gap_s: float = 0.0) -> None:
        if self.times and time_s < self.last_time:
            raise StaleDetection(
                f"track {self.track_id}: sample at {time_s} after {self.last_time}")
        if self.times and time_s == self.last_time:
            # one sample per instant: a same-time detection replaces the last
            self.distances[-1] = distance_m
            return
        if self.times and time_s - self.last_time < min_gap_s - 1e-9:
            return  # too close to the previous kept sample
        self.times.append(time_s)
        self.distances.append(distance_m)
        if len(self.times) > WINDOW_SIZE:
            del self.times[0]
            del self.distances[0]


def estimate_velocity(window: TrackWindow) -> float:
    """Two-slope average speed over the window, m/s; negative = approaching."""
    if len(window.times) < WINDOW_SIZE:
        raise InsufficientSamples(
            f"track {window.track_id} has {len(window.times)} samples")
    t1, t2, t3 = window.times
    d1, d2, d3 = window.distances
    return 0.5 * ((d2 - d1) / (t2 - t1) + (d3 - d2) / (t3 - t2))


def classify_motion(v_bar: float, config: PerceptionConfig) -> MotionClass:
    """Label a two-slope speed; |v_bar| must strictly exceed the threshold to move."""
    if abs(v_bar) <= config.moving_threshold_mps:
        return MotionClass.STATIONARY
    return MotionClass.APPROACHING if v_bar < 0 else MotionClass.RECEDING


class PerceptionPipeline:
    """Track store plus CPM assembly for one infrastructure station."""

    def __init__(self, station_id: int, cameras: list[CameraSetup],
                 config: PerceptionConfig | None = None):
        if len(cameras) > 4:
            raise PerceptionError("at most 4 cameras per station")
        self.station_id = station_id
        self.cameras = {cam.camera_id: cam for cam in cameras}
        if len(self.cameras) != len(cameras):
            raise PerceptionError("camera ids must be unique")
        self.config = config or PerceptionConfig()
        self.tracks: dict[tuple[int, int], TrackWindow] = {}

    def ingest(self, detection: Detection) -> TrackWindow:
        """Project, estimate distance and append to the detection's track window."""
        cam = self.cameras[detection.camera_id]
        s = project_to_line(detection.bottom_center, cam.line)
        est = estimate_distance(cam.model, s)
        key = (detection.camera_id, detection.track_id)
        window = self.tracks.get(key)
        if window is None:
            window = TrackWindow(detection.camera_id, detection.track_id,
                                 detection.object_class)
            self.tracks[key] = window
        window.push(detection.time_s, est.meters,
                    min_gap_s=self.config.sample_gap_s)
        window.object_class = detection.object_class
        # a projection pinned to either end of the line means the point sat
        # outside the calibrated span
        window.extrapolation_suspect = (
            est.extrapolation_suspect or s <= 0.0 or s >= cam.line.s_max)
        return window

    def expire_tracks(self, now_s: float) -> None:
        expired = [key for key, w in self.tracks.items()
                   if now_s - w.last_time > self.config.track_expiry_s]
        for key in expired:
            del self.tracks[key]

    def assemble_cpm(self, now_s: float) -> Message:
        """Build one CPM covering all cameras and all live tracks."""
        self.expire_tracks(now_s)
        sensors = tuple(
            SensorInfo(sensor_id=cam.camera_id, sensor_type=SensorType.CAMERA,
                       range_dm=int(round(cam.model.raw(cam.line.s_max) * 10)))
            for cam in sorted(self.cameras.values(), key=lambda c: c.camera_id))
        objects = []
        for (camera_id, track_id), window in sorted(self.tracks.items()):
            cam = self.cameras[camera_id]
            road_x = cam.road_position_m + cam.direction_sign * window.last_distance
            try:
                v_bar = estimate_velocity(window)
            except InsufficientSamples:
                v_bar = 0.0
            if classify_motion(v_bar, self.config) is MotionClass.STATIONARY:
                v_bar = 0.0
            objects.append(PerceivedObject(
                object_id=(camera_id << _TRACK_ID_BITS) | (track_id & _TRACK_ID_MASK),
                object_class=window.object_class,
                pos_x_cm=int(round(road_x * 100.0)),
                pos_y_cm=0,
                speed_cms=_clamp_i16(int(round(v_bar * 100.0))),
                meas_delta_ms=max(0, int(round((now_s - window.last_time) * 1000.0))),
            ))
        return Message(station_id=self.station_id,
                       timestamp_ms=int(round(now_s * 1000.0)),
                       payload=CpmPayload(sensors, tuple(objects)))


def _clamp_i16(value: int) -> int:
    return max(-32768, min(32767, value))


def camera_speed_to_road(pos_x_m: float, speed_cam_mps: float) -> float:
    """Convert a camera-convention speed to a signed road-axis velocity.

    Cameras face away from the robot, so every tracked object lies on the
    far side of its camera: approaching the camera (negative) means moving
    toward the robot origin.  The object's own road position fixes the sign:

        road_v = sign(pos_x) * speed_cam
    """
    return math.copysign(1.0, pos_x_m) * speed_cam_mps if pos_x_m != 0.0 else 0.0
