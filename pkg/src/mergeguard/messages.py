"""Binary wire codec for the V2X message set (CAM / CPM / DENM).

Every message is a fixed header followed by one type-specific payload,
all fields big-endian:

    header   magic=0x56 u8 | version=1 u8 | msg_type u8 | station_id u32
             | timestamp_ms u64 | payload_len u16                (17 bytes)
    CAM      station_type u8 | pos_x_cm i32 | pos_y_cm i32
             | speed_cms u16 | heading_cdeg u16                  (13 bytes)
    CPM      sensor_count u8 | sensors... | object_count u8 | objects...
             sensor   sensor_id u8 | sensor_type u8 | range_dm u16
             object   object_id u16 | object_class u8 | pos_x_cm i32
                      | pos_y_cm i32 | speed_cms i16 | meas_delta_ms u16
    DENM     cause_code u8 | sequence_number u16 | event_pos_x_cm i32
             | event_pos_y_cm i32 | validity_s u16 | hop_count u8
             | origin_station_id u32

Positions are centimetres in the shared road frame.  CAM speed is an
unsigned magnitude (heading gives direction); CPM object speed is signed
with negative meaning the object approaches the reporting camera.  The
DENM carries the originating station explicitly so relayed copies can be
de-duplicated by (origin_station_id, sequence_number).

``decode_message`` is total: any byte string either decodes to a valid
``Message`` or raises one of the classified errors below, never anything
else.  ``encode_message`` refuses to emit an invalid message.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Union

MAGIC = 0x56
PROTOCOL_VERSION = 1

HEADER_FORMAT = "!BBBIQH"
HEADER_SIZE = struct.calcsize(HEADER_FORMAT)  # 17

CAM_FORMAT = "!BiiHH"
CAM_SIZE = struct.calcsize(CAM_FORMAT)  # 13

SENSOR_FORMAT = "!BBH"
SENSOR_SIZE = struct.calcsize(SENSOR_FORMAT)  # 4

OBJECT_FORMAT = "!HBiihH"
OBJECT_SIZE = struct.calcsize(OBJECT_FORMAT)  # 15

DENM_FORMAT = "!BHiiHBI"
DENM_SIZE = struct.calcsize(DENM_FORMAT)  # 18

DEFAULT_MAX_HOPS = 1

_U8 = 0xFF
_U16 = 0xFFFF
_U32 = 0xFFFFFFFF
_U64 = 0xFFFFFFFFFFFFFFFF
_I16_MIN, _I16_MAX = -(1 << 15), (1 << 15) - 1
_I32_MIN, _I32_MAX = -(1 << 31), (1 << 31) - 1


class CodecError(Exception):
    """Base class for every error the codec can raise."""


class InvalidMessage(CodecError):
    """Encode was asked to serialize a message violating an invariant."""


class BadMagic(CodecError):
    """First byte is not 0x56."""


class BadVersion(CodecError):
    """Protocol version is not supported."""


class UnknownType(CodecError):
    """msg_type is not CAM/CPM/DENM."""


class TruncatedPayload(CodecError):
    """Input ends before the declared structure is complete."""


class InvariantViolation(CodecError):
    """Structurally complete input carries an invalid field value."""


class MsgType(IntEnum):
    CAM = 1
    CPM = 2
    DENM = 3


class StationType(IntEnum):
    PEDESTRIAN = 1  # used by the robot moderator
    PASSENGER_CAR = 5
    ROADSIDE_UNIT = 15


class ObjectClass(IntEnum):
    CAR = 1
    TRUCK_BUS = 2
    CYCLIST = 3


class SensorType(IntEnum):
    CAMERA = 1


@dataclass(frozen=True)
class CamPayload:
    station_type: int
    pos_x_cm: int
    pos_y_cm: int
    speed_cms: int  # unsigned magnitude
    heading_cdeg: int  # [0, 36000)


@dataclass(frozen=True)
class SensorInfo:
    sensor_id: int
    sensor_type: int
    range_dm: int


@dataclass(frozen=True)
class PerceivedObject:
    object_id: int
    object_class: int
    pos_x_cm: int
    pos_y_cm: int
    speed_cms: int  # signed; negative = approaching the camera
    meas_delta_ms: int


@dataclass(frozen=True)
class CpmPayload:
    sensors: tuple[SensorInfo, ...]
    objects: tuple[PerceivedObject, ...]


@dataclass(frozen=True)
class DenmPayload:
    cause_code: int
    sequence_number: int
    event_pos_x_cm: int
    event_pos_y_cm: int
    validity_s: int
    hop_count: int
    origin_station_id: int


Payload = Union[CamPayload, CpmPayload, DenmPayload]

_PAYLOAD_TYPES = {
    CamPayload: MsgType.CAM,
    CpmPayload: MsgType.CPM,
    DenmPayload: MsgType.DENM,
}


@dataclass(frozen=True)
class Message:
    station_id: int
    timestamp_ms: int
    payload: Payload

    @property
    def msg_type(self) -> MsgType:
        return _PAYLOAD_TYPES[type(self.payload)]


def _check(cond: bool, error: type[CodecError], detail: str) -> None:
    if not cond:
        raise error(detail)


def _validate_cam(p: CamPayload, error: type[CodecError]) -> None:
    _check(p.station_type in (1, 5, 15), error, f"station_type {p.station_type}")
    _check(_I32_MIN <= p.pos_x_cm <= _I32_MAX, error, "pos_x_cm out of range")
    _check(_I32_MIN <= p.pos_y_cm <= _I32_MAX, error, "pos_y_cm out of range")
    _check(0 <= p.speed_cms <= _U16, error, "speed_cms out of range")
    _check(0 <= p.heading_cdeg < 36000, error, f"heading_cdeg {p.heading_cdeg}")


def _validate_cpm(p: CpmPayload, error: type[CodecError]) -> None:
    _check(len(p.sensors) <= _U8, error, "too many sensors")
    _check(len(p.objects) <= _U8, error, "too many objects")
    for s in p.sensors:
        _check(0 <= s.sensor_id <= _U8, error, "sensor_id out of range")
        _check(s.sensor_type == SensorType.CAMERA, error, f"sensor_type {s.sensor_type}")
        _check(0 <= s.range_dm <= _U16, error, "range_dm out of range")
    seen: set[int] = set()
    for o in p.objects:
        _check(0 <= o.object_id <= _U16, error, "object_id out of range")
        _check(o.object_id not in seen, error, f"duplicate object_id {o.object_id}")
        seen.add(o.object_id)
        _check(o.object_class in (1, 2, 3), error, f"object_class {o.object_class}")
        _check(_I32_MIN <= o.pos_x_cm <= _I32_MAX, error, "pos_x_cm out of range")
        _check(_I32_MIN <= o.pos_y_cm <= _I32_MAX, error, "pos_y_cm out of range")
        _check(_I16_MIN <= o.speed_cms <= _I16_MAX, error, "speed_cms out of range")
        _check(0 <= o.meas_delta_ms <= _U16, error, "meas_delta_ms out of range")


def _validate_denm(p: DenmPayload, error: type[CodecError], max_hops: int) -> None:
    _check(0 <= p.cause_code <= _U8, error, "cause_code out of range")
    _check(0 <= p.sequence_number <= _U16, error, "sequence_number out of range")
    _check(_I32_MIN <= p.event_pos_x_cm <= _I32_MAX, error, "event_pos_x_cm out of range")
    _check(_I32_MIN <= p.event_pos_y_cm <= _I32_MAX, error, "event_pos_y_cm out of range")
    _check(0 <= p.validity_s <= _U16, error, "validity_s out of range")
    _check(0 <= p.hop_count <= max_hops, error, f"hop_count {p.hop_count} > max_hops {max_hops}")
    _check(0 <= p.origin_station_id <= _U32, error, "origin_station_id out of range")


def _validate_message(msg: Message, error: type[CodecError], max_hops: int) -> None:
    _check(0 <= msg.station_id <= _U32, error, "station_id out of range")
    _check(0 <= msg.timestamp_ms <= _U64, error, "timestamp_ms out of range")
    p = msg.payload
    if isinstance(p, CamPayload):
        _validate_cam(p, error)
    elif isinstance(p, CpmPayload):
        _validate_cpm(p, error)
    elif isinstance(p, DenmPayload):
        _validate_denm(p, error, max_hops)
    else:  # pragma: no cover - unreachable through the public API
        raise error(f"unknown payload type {type(p)!r}")


def _encode_payload(p: Payload) -> bytes:
    if isinstance(p, CamPayload):
        return struct.pack(CAM_FORMAT, p.station_type, p.pos_x_cm, p.pos_y_cm,
                           p.speed_cms, p.heading_cdeg)
    if isinstance(p, CpmPayload):
        parts = [struct.pack("!B", len(p.sensors))]
        for s in p.sensors:
            parts.append(struct.pack(SENSOR_FORMAT, s.sensor_id, s.sensor_type, s.range_dm))
        parts.append(struct.pack("!B", len(p.objects)))
        for o in p.objects:
            parts.append(struct.pack(OBJECT_FORMAT, o.object_id, o.object_class,
                                     o.pos_x_cm, o.pos_y_cm, o.speed_cms, o.meas_delta_ms))
        return b"".join(parts)
    return struct.pack(DENM_FORMAT, p.cause_code, p.sequence_number,
                       p.event_pos_x_cm, p.event_pos_y_cm, p.validity_s,
                       p.hop_count, p.origin_station_id)


def encode_message(msg: Message, *, max_hops: int = DEFAULT_MAX_HOPS) -> bytes:
    """Serialize to wire bytes; raises InvalidMessage on any bad field."""
    _validate_message(msg, InvalidMessage, max_hops)
    payload = _encode_payload(msg.payload)
    header = struct.pack(HEADER_FORMAT, MAGIC, PROTOCOL_VERSION, int(msg.msg_type),
                         msg.station_id, msg.timestamp_ms, len(payload))
    return header + payload


def _decode_cam(data: bytes) -> CamPayload:
    if len(data) != CAM_SIZE:
        raise (TruncatedPayload if len(data) < CAM_SIZE else InvariantViolation)(
            f"CAM payload is {len(data)} bytes, expected {CAM_SIZE}")
    return CamPayload(*struct.unpack(CAM_FORMAT, data))


def _decode_cpm(data: bytes) -> CpmPayload:
    off = 0
    if len(data) < 1:
        raise TruncatedPayload("CPM missing sensor count")
    n_sensors = data[0]
    off = 1
    sensors = []
    for _ in range(n_sensors):
        if len(data) < off + SENSOR_SIZE:
            raise TruncatedPayload("CPM sensor list truncated")
        sensors.append(SensorInfo(*struct.unpack_from(SENSOR_FORMAT, data, off)))
        off += SENSOR_SIZE
    if len(data) < off + 1:
        raise TruncatedPayload("CPM missing object count")
    n_objects = data[off]
    off += 1
    objects = []
    for _ in range(n_objects):
        if len(data) < off + OBJECT_SIZE:
            raise TruncatedPayload("CPM object list truncated")
        objects.append(PerceivedObject(*struct.unpack_from(OBJECT_FORMAT, data, off)))
        off += OBJECT_SIZE
    if off != len(data):
        raise InvariantViolation(f"{len(data) - off} trailing bytes in CPM payload")
    return CpmPayload(tuple(sensors), tuple(objects))


def _decode_denm(data: bytes) -> DenmPayload:
    if len(data) != DENM_SIZE:
        raise (TruncatedPayload if len(data) < DENM_SIZE else InvariantViolation)(
            f"DENM payload is {len(data)} bytes, expected {DENM_SIZE}")
    return DenmPayload(*struct.unpack(DENM_FORMAT, data))


def decode_message(data: bytes, *, max_hops: int = DEFAULT_MAX_HOPS) -> Message:
    """Parse wire bytes back into the unique Message that encodes to them.

    Raises BadMagic, BadVersion, UnknownType, TruncatedPayload or
    InvariantViolation; arbitrary input can produce nothing else.
    """
    if len(data) < 1:
        raise TruncatedPayload("empty input")
    if data[0] != MAGIC:
        raise BadMagic(f"magic byte 0x{data[0]:02X}")
    if len(data) < 2:
        raise TruncatedPayload("input ends before version byte")
    if data[1] != PROTOCOL_VERSION:
        raise BadVersion(f"version {data[1]}")
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload(f"header is {len(data)} bytes, expected {HEADER_SIZE}")
    _, _, msg_type, station_id, timestamp_ms, payload_len = struct.unpack_from(
        HEADER_FORMAT, data, 0)
    try:
        mtype = MsgType(msg_type)
    except ValueError:
        raise UnknownType(f"msg_type {msg_type}") from None
    if len(data) < HEADER_SIZE + payload_len:
        raise TruncatedPayload(
            f"payload_len says {payload_len}, only {len(data) - HEADER_SIZE} bytes follow")
    if len(data) > HEADER_SIZE + payload_len:
        raise InvariantViolation(
            f"{len(data) - HEADER_SIZE - payload_len} trailing bytes after payload")
    body = data[HEADER_SIZE:]
    if mtype is MsgType.CAM:
        payload: Payload = _decode_cam(body)
    elif mtype is MsgType.CPM:
        payload = _decode_cpm(body)
    else:
        payload = _decode_denm(body)
    msg = Message(station_id, timestamp_ms, payload)
    _validate_message(msg, InvariantViolation, max_hops)
    return msg


def to_json_dict(msg: Message) -> dict:
    """Canonical JSON form; field names match the wire layout exactly."""
    p = msg.payload
    if isinstance(p, CamPayload):
        body = {"station_type": p.station_type, "pos_x_cm": p.pos_x_cm,
                "pos_y_cm": p.pos_y_cm, "speed_cms": p.speed_cms,
                "heading_cdeg": p.heading_cdeg}
    elif isinstance(p, CpmPayload):
        body = {
            "sensors": [{"sensor_id": s.sensor_id, "sensor_type": s.sensor_type,
                         "range_dm": s.range_dm} for s in p.sensors],
            "objects": [{"object_id": o.object_id, "object_class": o.object_class,
                         "pos_x_cm": o.pos_x_cm, "pos_y_cm": o.pos_y_cm,
                         "speed_cms": o.speed_cms, "meas_delta_ms": o.meas_delta_ms}
                        for o in p.objects],
        }
    else:
        body = {"cause_code": p.cause_code, "sequence_number": p.sequence_number,
                "event_pos_x_cm": p.event_pos_x_cm, "event_pos_y_cm": p.event_pos_y_cm,
                "validity_s": p.validity_s, "hop_count": p.hop_count,
                "origin_station_id": p.origin_station_id}
    return {"msg_type": msg.msg_type.name, "station_id": msg.station_id,
            "timestamp_ms": msg.timestamp_ms, "payload": body}


def from_json_dict(obj: dict) -> Message:
    """Inverse of to_json_dict."""
    mtype = MsgType[obj["msg_type"]]
    body = obj["payload"]
    if mtype is MsgType.CAM:
        payload: Payload = CamPayload(body["station_type"], body["pos_x_cm"],
                                      body["pos_y_cm"], body["speed_cms"],
                                      body["heading_cdeg"])
    elif mtype is MsgType.CPM:
        payload = CpmPayload(
            tuple(SensorInfo(s["sensor_id"], s["sensor_type"], s["range_dm"])
                  for s in body["sensors"]),
            tuple(PerceivedObject(o["object_id"], o["object_class"], o["pos_x_cm"],
                                  o["pos_y_cm"], o["speed_cms"], o["meas_delta_ms"])
                  for o in body["objects"]),
        )
    else:
        payload = DenmPayload(body["cause_code"], body["sequence_number"],
                              body["event_pos_x_cm"], body["event_pos_y_cm"],
                              body["validity_s"], body["hop_count"],
                              body["origin_station_id"])
    return Message(obj["station_id"], obj["timestamp_ms"], payload)
