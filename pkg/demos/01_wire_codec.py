"""Round-trip tour of the wire codec: CAM, CPM and DENM frames.

Every frame is a 17-byte big-endian header — magic 0x56, protocol
version, message type, station id, millisecond timestamp, payload
length — followed by a fixed-point payload (centimetres, cm/s,
centidegrees).  This script encodes one message of each type, hex-dumps
the bytes, decodes them back, and then corrupts frames on purpose to
show the decode-side contract: arbitrary input raises nothing outside
the CodecError family.

Run from anywhere:  python3 demos/01_wire_codec.py
"""

from collections import Counter

import numpy as np

from mergeguard import (CamPayload, CodecError, CpmPayload, DenmPayload,
                        Message, PerceivedObject, SensorInfo, decode_message,
                        encode_message, to_json_dict)


def hexdump(data: bytes) -> str:
    return " ".join(f"{b:02x}" for b in data)


def show(label: str, msg: Message) -> bytes:
    wire = encode_message(msg)
    decoded = decode_message(wire)
    assert decoded == msg, "round trip must be lossless"
    print(f"\n{label} — {len(wire)} bytes on the wire")
    print(f"  {hexdump(wire)}")
    print(f"  decodes to {to_json_dict(decoded)}")
    return wire


def expect_error(label: str, data: bytes) -> None:
    try:
        decode_message(data)
    except CodecError as exc:
        print(f"  {label:<28} -> {type(exc).__name__}: {exc}")
    else:
        raise AssertionError(f"{label}: decode unexpectedly succeeded")


def main() -> None:
    print("=== one frame of each type ===")

    # periodic self-report of a vehicle at (-86 m, 0), doing 9.5 m/s due east
    cam = show("CAM, station 7", Message(
        station_id=7, timestamp_ms=12_000,
        payload=CamPayload(station_type=5, pos_x_cm=-8600, pos_y_cm=0,
                           speed_cms=950, heading_cdeg=9000)))

    # what the roadside camera station saw: one camera, two tracked objects
    show("CPM, station 10", Message(
        station_id=10, timestamp_ms=12_050,
        payload=CpmPayload(
            sensors=(SensorInfo(sensor_id=0, sensor_type=1, range_dm=1101),),
            objects=(
                PerceivedObject(object_id=3, object_class=1, pos_x_cm=-5000,
                                pos_y_cm=0, speed_cms=-800, meas_delta_ms=100),
                PerceivedObject(object_id=4, object_class=1, pos_x_cm=-3500,
                                pos_y_cm=0, speed_cms=0, meas_delta_ms=40),
            ))))

    # roadworks notification from the RSU, not yet relayed (hop 0)
    show("DENM, station 200", Message(
        station_id=200, timestamp_ms=11_990,
        payload=DenmPayload(cause_code=3, sequence_number=17,
                            event_pos_x_cm=13_430, event_pos_y_cm=0,
                            validity_s=60, hop_count=0,
                            origin_station_id=200)))

    print("\n=== deliberate corruption, one error class each ===")
    expect_error("wrong magic byte", bytes([0x99]) + cam[1:])
    expect_error("wrong protocol version", cam[:1] + bytes([9]) + cam[2:])
    expect_error("unknown message type", cam[:2] + bytes([9]) + cam[3:])
    expect_error("frame cut short", cam[:-3])
    expect_error("trailing junk", cam + b"\x00")
    # heading lives in the last two payload bytes; 0xffff centidegrees
    # is far past the 36000 limit
    expect_error("heading out of range", cam[:-2] + b"\xff\xff")

    print("\n=== {:,} random buffers, total decode ===".format(20_000))
    rng = np.random.default_rng(0)
    blob = rng.integers(0, 256, size=1 << 16, dtype=np.uint8).tobytes()
    tally: Counter[str] = Counter()
    for i in range(20_000):
        start = int(rng.integers(0, len(blob) - 64))
        length = int(rng.integers(0, 64))
        try:
            decode_message(blob[start:start + length])
            tally["decoded"] += 1
        except CodecError as exc:
            tally[type(exc).__name__] += 1
    for name, count in tally.most_common():
        print(f"  {name:<20} {count:>6}")
    print("  nothing escaped the CodecError family")


if __name__ == "__main__":
    main()
