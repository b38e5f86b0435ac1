"""Protobuf wire-format primitives.

ONNX model files are protobuf messages.  No protobuf runtime is assumed:
this module reads and writes the wire format directly, which needs only
four wire types:

  0  varint               (int64/uint64/enum/bool)
  1  fixed 64-bit         (double/fixed64)
  2  length-delimited     (bytes/string/sub-message/packed repeated)
  5  fixed 32-bit         (float/fixed32)

A parsed message is a dict: field number -> list of (wire_type, value),
preserving arrival order per field, which is all the ONNX schema needs.
"""

from __future__ import annotations

import struct

WIRE_VARINT = 0
WIRE_FIXED64 = 1
WIRE_BYTES = 2
WIRE_FIXED32 = 5


class WireError(ValueError):
    pass


def read_varint(buf: memoryview, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise WireError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise WireError("varint longer than 64 bits")


def write_varint(value: int) -> bytes:
    if value < 0:
        value &= (1 << 64) - 1  # int64 two's complement
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def to_signed64(value: int) -> int:
    return value - (1 << 64) if value >= (1 << 63) else value


def parse_message(data: bytes | memoryview) -> dict[int, list[tuple[int, object]]]:
    """Decode one message level; sub-messages stay as raw bytes."""
    buf = memoryview(data)
    fields: dict[int, list[tuple[int, object]]] = {}
    pos = 0
    while pos < len(buf):
        tag, pos = read_varint(buf, pos)
        field_no = tag >> 3
        wire_type = tag & 0x7
        if wire_type == WIRE_VARINT:
            value, pos = read_varint(buf, pos)
        elif wire_type == WIRE_FIXED64:
            if pos + 8 > len(buf):
                raise WireError("truncated fixed64")
            value = bytes(buf[pos : pos + 8])
            pos += 8
        elif wire_type == WIRE_BYTES:
            length, pos = read_varint(buf, pos)
            if pos + length > len(buf):
                raise WireError("truncated length-delimited field")
            value = bytes(buf[pos : pos + length])
            pos += length
        elif wire_type == WIRE_FIXED32:
            if pos + 4 > len(buf):
                raise WireError("truncated fixed32")
            value = bytes(buf[pos : pos + 4])
            pos += 4
        else:
            raise WireError(f"unsupported wire type {wire_type} for field {field_no}")
        fields.setdefault(field_no, []).append((wire_type, value))
    return fields


def get_varints(fields, field_no: int) -> list[int]:
    """All varint values of a field, unpacking packed encodings."""
    values: list[int] = []
    for wire_type, value in fields.get(field_no, []):
        if wire_type == WIRE_VARINT:
            values.append(value)
        elif wire_type == WIRE_BYTES:  # packed repeated
            buf = memoryview(value)
            pos = 0
            while pos < len(buf):
                v, pos = read_varint(buf, pos)
                values.append(v)
        else:
            raise WireError(f"field {field_no}: expected varint(s)")
    return values


def get_varint(fields, field_no: int, default: int = 0) -> int:
    values = get_varints(fields, field_no)
    return values[-1] if values else default


def get_bytes_list(fields, field_no: int) -> list[bytes]:
    out = []
    for wire_type, value in fields.get(field_no, []):
        if wire_type != WIRE_BYTES:
            raise WireError(f"field {field_no}: expected length-delimited")
        out.append(value)
    return out


def get_bytes(fields, field_no: int, default: bytes = b"") -> bytes:
    values = get_bytes_list(fields, field_no)
    return values[-1] if values else default


def get_string(fields, field_no: int, default: str = "") -> str:
    raw = get_bytes(fields, field_no, None)
    return default if raw is None else raw.decode("utf-8")


def get_float(fields, field_no: int, default: float = 0.0) -> float:
    for wire_type, value in reversed(fields.get(field_no, [])):
        if wire_type == WIRE_FIXED32:
            return struct.unpack("<f", value)[0]
    return default


def get_floats(fields, field_no: int) -> list[float]:
    values: list[float] = []
    for wire_type, value in fields.get(field_no, []):
        if wire_type == WIRE_FIXED32:
            values.append(struct.unpack("<f", value)[0])
        elif wire_type == WIRE_BYTES:  # packed
            values.extend(struct.unpack(f"<{len(value) // 4}f", value))
        else:
            raise WireError(f"field {field_no}: expected float(s)")
    return values


def get_doubles(fields, field_no: int) -> list[float]:
    values: list[float] = []
    for wire_type, value in fields.get(field_no, []):
        if wire_type == WIRE_FIXED64:
            values.append(struct.unpack("<d", value)[0])
        elif wire_type == WIRE_BYTES:
            values.extend(struct.unpack(f"<{len(value) // 8}d", value))
        else:
            raise WireError(f"field {field_no}: expected double(s)")
    return values


# --- writer helpers -------------------------------------------------------------

def field_varint(field_no: int, value: int) -> bytes:
    return write_varint(field_no << 3 | WIRE_VARINT) + write_varint(value)


def field_bytes(field_no: int, payload: bytes) -> bytes:
    return write_varint(field_no << 3 | WIRE_BYTES) + write_varint(len(payload)) + payload


def field_string(field_no: int, text: str) -> bytes:
    return field_bytes(field_no, text.encode("utf-8"))


def field_float(field_no: int, value: float) -> bytes:
    return write_varint(field_no << 3 | WIRE_FIXED32) + struct.pack("<f", value)
