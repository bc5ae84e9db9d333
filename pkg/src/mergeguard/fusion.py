"""V2X-priority fusion of self-reported and camera-perceived objects.

Vehicles that announce themselves over V2X are ground truth as far as
the robot is concerned: every V2X object is kept.  A camera object is
kept only if it is not a duplicate of some V2X object, judged by joint
position/velocity distance on the road axis:

    keep camera j  iff  min_i || (x_j - x_i, v_j - v_i) || >= epsilon

Ties at exactly epsilon are kept (the camera object is far enough to be
something else).  With no V2X objects the minimum is vacuous and every
camera object passes.  Output order is deterministic: V2X objects by
station id, then surviving camera objects by track id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

DEFAULT_EPSILON = 5.0


class Source(Enum):
    V2X = "v2x"
    CAMERA = "camera"


@dataclass(frozen=True)
class FusedObject:
    source: Source
    ref_id: int  # station id for V2X, CPM object id for camera tracks
    road_x_m: float
    speed_mps: float  # signed road-axis velocity, dx/dt
    object_class: int
    last_update_s: float


@dataclass(frozen=True)
class FusionConfig:
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


def joint_distance(a: FusedObject, b: FusedObject) -> float:
    return math.hypot(a.road_x_m - b.road_x_m, a.speed_mps - b.speed_mps)


def fuse(v2x_objects: Sequence[FusedObject], camera_objects: Sequence[FusedObject],
         config: FusionConfig | None = None) -> list[FusedObject]:
    config = config or FusionConfig()
    v2x_sorted = sorted(v2x_objects, key=lambda o: o.ref_id)
    kept = list(v2x_sorted)
    for cam_obj in sorted(camera_objects, key=lambda o: o.ref_id):
        if all(joint_distance(cam_obj, v) >= config.epsilon for v in v2x_sorted):
            kept.append(cam_obj)
    return kept
