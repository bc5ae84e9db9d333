"""Fusing V2X and camera pictures, then deciding STOP / HOLD / PASS.

The robot sees each vehicle up to twice: through its own CAM (V2X) and
through the infrastructure cameras (CPM).  Fusion keeps every V2X
object and admits a camera object only when it is at least epsilon away
from all V2X objects in joint position-velocity distance — V2X is the
trusted self-report, the camera fills in the unequipped rest.

The fused picture feeds the Zone-of-Danger (ZoD) rule: a STOP is
ordered only when BOTH a hazard is present (an object inside the zone,
or predicted to enter it within the time horizon tau) AND a merging
vehicle is waiting at the gate.  Once in DANGER the robot holds until
the blocking object is demonstrably harmless — or, if it vanishes from
view, until a grace period of staleness + tau has passed.

Run from anywhere:  python3 demos/04_fusion_and_decision.py
"""

from mergeguard import (Action, DecisionState, FusedObject, FusionConfig,
                        Mode, Source, ZodConfig, fuse, joint_distance,
                        predict_crossing, step)

ZOD = ZodConfig()  # zone [-25, +25], tau 5 s, staleness 1 s


def v2x(ref_id: int, x: float, v: float, t: float) -> FusedObject:
    return FusedObject(Source.V2X, ref_id, x, v, 1, t)


def cam(ref_id: int, x: float, v: float, t: float) -> FusedObject:
    return FusedObject(Source.CAMERA, ref_id, x, v, 1, t)


def main() -> None:
    print("=== fusion: V2X wins, camera fills the gaps ===")
    v2x_objs = [v2x(7, -60.0, 9.0, 0.0)]
    cam_objs = [
        cam(3, -60.8, 8.7, 0.0),   # the same vehicle, seen by camera 0
        cam(8, 35.0, 0.0, 0.0),    # an unequipped parked car
    ]
    for c in cam_objs:
        gap = min(joint_distance(c, v) for v in v2x_objs)
        print(f"  camera track {c.ref_id} at x={c.road_x_m:+6.1f}:"
              f"  joint distance to nearest V2X = {gap:5.2f}"
              f"  ({'dropped' if gap < FusionConfig().epsilon else 'kept'})")
    fused = fuse(v2x_objs, cam_objs)
    print("  fused picture:", [(o.source.value, o.ref_id) for o in fused])

    print("\n=== crossing prediction for one approaching vehicle ===")
    for t in (0.0, 2.0, 4.0):
        obj = v2x(7, -100.0 + 10.0 * t, 10.0, t)
        crossing = predict_crossing(obj, t, ZOD)
        print(f"  t = {t:4.1f}  x = {obj.road_x_m:+7.1f}  "
              f"enters zone in {crossing.t_enter_s - t:4.1f} s"
              f"  (hazard horizon tau = {ZOD.tau_th_s})")

    print("\n=== timeline: approach, conjunction, release ===")
    run_timeline("vehicle stays visible throughout",
                 lambda t: [v2x(7, -100.0 + 10.0 * t, 10.0, t)])

    print("\n=== timeline: the hazard vanishes mid-zone ===")

    def vanishing(t: float) -> list[FusedObject]:
        if t <= 8.0:
            return [v2x(7, -100.0 + 10.0 * t, 10.0, t)]
        return []  # out of sight from 8.05 s on, last seen inside the zone

    run_timeline("occlusion at t = 8; release waits out the grace period",
                 vanishing)


def run_timeline(title, fused_at) -> None:
    print(f"  [{title}]")
    state = DecisionState()
    last_action = None
    t = 0.0
    while t <= 20.0 + 1e-9:
        merging_seen = t >= 3.0  # a merging vehicle reaches the gate at 3 s
        result = step(state, fused_at(t), merging_seen, t, ZOD)
        state = result.state
        if result.action != last_action:
            blocker = state.blocking_key if state.mode is Mode.DANGER else None
            print(f"    t = {t:5.2f}  action {result.action.value.upper():<4}"
                  f"  mode {state.mode.value:<6}"
                  f"  blocking {blocker}")
            last_action = result.action
        t = round(t + 0.05, 9)
    assert last_action is Action.PASS, "every timeline here ends released"


if __name__ == "__main__":
    main()
