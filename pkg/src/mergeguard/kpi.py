"""KPI extraction from simulation event logs.

Every metric is recomputed from the event stream alone, so a report can
be rebuilt from a stored JSONL log without re-running the scenario:

* ari_igg_s        mean gap between the robot's own CAM generations
* vw_ipg_s         mean gap between subject-vehicle CAM receptions at
                   the robot
* cpm_latency_s    mean generation-to-reception delay of CPMs at the
                   robot
* vw_zod_time_s    total ground-truth Zone-of-Danger occupancy of the
                   subject vehicle
* ari_stop_time_s  total time the robot spent in DANGER (stop issued ..
                   pass issued)
* rsu_ipg_s        mean gap between distinct RSU hazard notifications as
                   received by the robot (hop 0, duplicates ignored)

Intervals still open when the log ends are closed at the log's end time
and flagged, never silently dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else math.nan

def _mean_gap(times: list[float]) -> float:
    if len(times) < 2:
        return math.nan
    return (times[-1] - times[0]) / (len(times) - 1)


@dataclass(frozen=True)
class KpiReport:
    ari_igg_s: float
    vw_ipg_s: float
    cpm_latency_s: float
    vw_zod_time_s: float
    ari_stop_time_s: float
    rsu_ipg_s: float
    first_detect_distances_m: tuple[float, ...]
    n_msg_tx: int
    n_msg_rx: int
    n_detections: int
    n_stops: int
    n_relays: int
    zod_interval_open: bool
    stop_interval_open: bool
    extras: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def scrub(v):
            if isinstance(v, float) and math.isnan(v):
                return None
            return v
        out = {
            "ari_igg_s": scrub(self.ari_igg_s),
            "vw_ipg_s": scrub(self.vw_ipg_s),
            "cpm_latency_s": scrub(self.cpm_latency_s),
            "vw_zod_time_s": scrub(self.vw_zod_time_s),
            "ari_stop_time_s": scrub(self.ari_stop_time_s),
            "rsu_ipg_s": scrub(self.rsu_ipg_s),
            "first_detect_distances_m": list(self.first_detect_distances_m),
            "n_msg_tx": self.n_msg_tx,
            "n_msg_rx": self.n_msg_rx,
            "n_detections": self.n_detections,
            "n_stops": self.n_stops,
            "n_relays": self.n_relays,
            "zod_interval_open": self.zod_interval_open,
            "stop_interval_open": self.stop_interval_open,
        }
        out.update(self.extras)
        return out

    def to_csv(self) -> str:
        lines = ["Metric,Value"]
        for name, value in self.to_json_dict().items():
            if isinstance(value, float):
                text = f"{value:.6f}"
            elif isinstance(value, (list, tuple)):
                text = "" if not value else ";".join(f"{v:.6f}" for v in value)
            elif value is None:
                text = ""
            else:
                text = str(value)
            lines.append(f"{name},{text}")
        return "\n".join(lines) + "\n"


def compute(events: list[dict], *, subject_station: int | None = None,
            end_time_s: float | None = None) -> KpiReport:
    """Distill one event log into a KpiReport.

    subject_station selects whose CAMs/zone crossings the vw_* metrics
    describe; None means "any station".  end_time_s closes intervals
    still open when the log stops (defaults to the last event time).
    """
    if end_time_s is None:
        end_time_s = events[-1]["t"] if events else 0.0

    def is_subject(ev: dict, key: str = "station_id") -> bool:
        return subject_station is None or ev.get(key) == subject_station

    robot_cam_times = [e["t"] for e in events
                       if e["type"] == "cam_gen" and e["actor"] == "robot"]

    subject_cam_rx = [e["t"] for e in events
                      if e["type"] == "msg_rx" and e["actor"] == "robot"
                      and e["msg_type"] == "CAM" and is_subject(e, "from_station")]

    cpm_latencies = [e["latency_s"] for e in events
                     if e["type"] == "msg_rx" and e["actor"] == "robot"
                     and e["msg_type"] == "CPM"]

    # ground-truth zone occupancy of the subject
    zod_time = 0.0
    zod_open = False
    entered: dict[str, float] = {}
    for e in events:
        if e["type"] == "zod_enter" and is_subject(e):
            entered[e["actor"]] = e["t"]
        elif e["type"] == "zod_exit" and is_subject(e) and e["actor"] in entered:
            zod_time += e["t"] - entered.pop(e["actor"])
    for t_in in entered.values():
        zod_time += end_time_s - t_in
        zod_open = True

    # DANGER intervals from decision transitions
    stop_time = 0.0
    stop_open = False
    n_stops = 0
    stop_since: float | None = None
    for e in events:
        if e["type"] != "decision":
            continue
        if e["action"] == "stop" and stop_since is None:
            stop_since = e["t"]
            n_stops += 1
        elif e["action"] == "pass" and stop_since is not None:
            stop_time += e["t"] - stop_since
            stop_since = None
    if stop_since is not None:
        stop_time += end_time_s - stop_since
        stop_open = True

    # distinct RSU notifications as seen by the robot: first copies only
    rsu_rx_ts = {}
    for e in events:
        if (e["type"] == "msg_rx" and e["actor"] == "robot"
                and e["msg_type"] == "DENM" and e.get("hop_count") == 0
                and not e.get("duplicate", False)):
            rsu_rx_ts[(e["origin"], e["sequence"])] = e["timestamp_ms"] / 1000.0
    rsu_times = sorted(rsu_rx_ts.values())

    first_detects = tuple(e["cam_distance_m"] for e in events
                          if e["type"] == "detection" and e.get("first")
                          and is_subject(e))

    return KpiReport(
        ari_igg_s=_mean_gap(robot_cam_times),
        vw_ipg_s=_mean_gap(subject_cam_rx),
        cpm_latency_s=_mean(cpm_latencies),
        vw_zod_time_s=zod_time,
        ari_stop_time_s=stop_time,
        rsu_ipg_s=_mean_gap(rsu_times),
        first_detect_distances_m=first_detects,
        n_msg_tx=sum(1 for e in events if e["type"] == "msg_tx"),
        n_msg_rx=sum(1 for e in events if e["type"] == "msg_rx"),
        n_detections=sum(1 for e in events if e["type"] == "detection"),
        n_stops=n_stops,
        n_relays=sum(1 for e in events if e["type"] == "denm_relay"),
        zod_interval_open=zod_open,
        stop_interval_open=stop_open,
    )


def stop_lead_times(events: list[dict], subject_station: int | None = None) -> list[float]:
    """Ground-truth zone entry minus preceding stop decision, per entry.

    Only entries with a stop already in force are counted; the lead time
    is how much margin the intervention bought.
    """
    stops = [e["t"] for e in events if e["type"] == "decision" and e["action"] == "stop"]
    passes = [e["t"] for e in events if e["type"] == "decision" and e["action"] == "pass"]
    leads = []
    for e in events:
        if e["type"] != "zod_enter":
            continue
        if subject_station is not None and e.get("station_id") != subject_station:
            continue
        t_in = e["t"]
        active = [t for t in stops if t <= t_in
                  and not any(t < p <= t_in for p in passes)]
        if active:
            leads.append(t_in - active[-1])
    return leads
