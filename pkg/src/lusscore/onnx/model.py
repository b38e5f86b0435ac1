"""Minimal ONNX model structures: parse from and serialize to .onnx files.

Field numbers follow the upstream onnx.proto schema.  Only the pieces a
feed-forward inference graph needs are materialized: nodes, attributes,
initializers, and graph input/output signatures.  External (out-of-file)
tensor data is not supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ModelFileUnreadable
from . import wire

# TensorProto.DataType
TENSOR_DTYPES: dict[int, np.dtype] = {
    1: np.dtype(np.float32),
    2: np.dtype(np.uint8),
    3: np.dtype(np.int8),
    4: np.dtype(np.uint16),
    5: np.dtype(np.int16),
    6: np.dtype(np.int32),
    7: np.dtype(np.int64),
    9: np.dtype(np.bool_),
    10: np.dtype(np.float16),
    11: np.dtype(np.float64),
    12: np.dtype(np.uint32),
    13: np.dtype(np.uint64),
}
DTYPE_CODES = {dt: code for code, dt in TENSOR_DTYPES.items()}


@dataclass
class Node:
    op_type: str
    inputs: list[str]
    outputs: list[str]
    name: str = ""
    attrs: dict[str, object] = field(default_factory=dict)


@dataclass
class ValueInfo:
    name: str
    elem_type: int = 1
    shape: tuple[int | None, ...] | None = None  # None when no shape declared


@dataclass
class Graph:
    nodes: list[Node]
    inputs: list[ValueInfo]
    outputs: list[ValueInfo]
    initializers: dict[str, np.ndarray]
    name: str = "graph"


@dataclass
class Model:
    graph: Graph
    opset: int = 13
    ir_version: int = 8
    producer: str = ""


def _parse_tensor(data: bytes) -> tuple[str, np.ndarray]:
    fields = wire.parse_message(data)
    dims = tuple(wire.get_varints(fields, 1))
    data_type = wire.get_varint(fields, 2, 1)
    name = wire.get_string(fields, 8)
    if data_type not in TENSOR_DTYPES:
        raise ModelFileUnreadable(f"tensor {name!r}: unsupported data type {data_type}")
    dtype = TENSOR_DTYPES[data_type]

    raw = wire.get_bytes(fields, 9, None)
    if raw is not None:
        array = np.frombuffer(raw, dtype=dtype.newbyteorder("<")).astype(dtype)
    elif data_type == 1:
        array = np.asarray(wire.get_floats(fields, 4), dtype=np.float32)
    elif data_type == 11:
        array = np.asarray(wire.get_doubles(fields, 10), dtype=np.float64)
    elif data_type == 7:
        array = np.asarray(
            [wire.to_signed64(v) for v in wire.get_varints(fields, 7)], dtype=np.int64
        )
    elif data_type in (2, 3, 4, 5, 6, 9):
        values = [wire.to_signed64(v) for v in wire.get_varints(fields, 5)]
        array = np.asarray(values).astype(dtype)
    else:
        raise ModelFileUnreadable(f"tensor {name!r}: no raw or typed data present")
    return name, array.reshape(dims)


def _parse_attribute(data: bytes) -> tuple[str, object]:
    fields = wire.parse_message(data)
    name = wire.get_string(fields, 1)
    attr_type = wire.get_varint(fields, 20, 0)
    if attr_type == 1 or (attr_type == 0 and 2 in fields):
        return name, wire.get_float(fields, 2)
    if attr_type == 2 or (attr_type == 0 and 3 in fields):
        return name, wire.to_signed64(wire.get_varint(fields, 3))
    if attr_type == 3 or (attr_type == 0 and 4 in fields):
        return name, wire.get_bytes(fields, 4).decode("utf-8")
    if attr_type == 4 or (attr_type == 0 and 5 in fields):
        return name, _parse_tensor(wire.get_bytes(fields, 5))[1]
    if attr_type == 6 or (attr_type == 0 and 7 in fields):
        return name, [float(v) for v in wire.get_floats(fields, 7)]
    if attr_type == 7 or (attr_type == 0 and 8 in fields):
        return name, [wire.to_signed64(v) for v in wire.get_varints(fields, 8)]
    if attr_type == 8 or (attr_type == 0 and 9 in fields):
        return name, [b.decode("utf-8") for b in wire.get_bytes_list(fields, 9)]
    # graph/tensor-list attributes are unused by the supported ops; keep raw
    return name, None


def _parse_value_info(data: bytes) -> ValueInfo:
    fields = wire.parse_message(data)
    name = wire.get_string(fields, 1)
    type_raw = wire.get_bytes(fields, 2, None)
    if type_raw is None:
        return ValueInfo(name=name)
    type_fields = wire.parse_message(type_raw)
    tensor_raw = wire.get_bytes(type_fields, 1, None)
    if tensor_raw is None:
        return ValueInfo(name=name)
    tensor_fields = wire.parse_message(tensor_raw)
    elem_type = wire.get_varint(tensor_fields, 1, 1)
    shape_raw = wire.get_bytes(tensor_fields, 2, None)
    if shape_raw is None:
        return ValueInfo(name=name, elem_type=elem_type)
    dims: list[int | None] = []
    for dim_bytes in wire.get_bytes_list(wire.parse_message(shape_raw), 1):
        dim_fields = wire.parse_message(dim_bytes)
        if 1 in dim_fields:
            dims.append(wire.get_varint(dim_fields, 1))
        else:
            dims.append(None)  # symbolic (dim_param)
    return ValueInfo(name=name, elem_type=elem_type, shape=tuple(dims))


def _parse_node(data: bytes) -> Node:
    fields = wire.parse_message(data)
    attrs = {}
    for attr_bytes in wire.get_bytes_list(fields, 5):
        key, value = _parse_attribute(attr_bytes)
        attrs[key] = value
    return Node(
        op_type=wire.get_string(fields, 4),
        inputs=[b.decode("utf-8") for b in wire.get_bytes_list(fields, 1)],
        outputs=[b.decode("utf-8") for b in wire.get_bytes_list(fields, 2)],
        name=wire.get_string(fields, 3),
        attrs=attrs,
    )


def load_model(source: str | Path | bytes) -> Model:
    """Parse an .onnx file (or raw bytes) into a Model."""
    if isinstance(source, (str, Path)):
        try:
            data = Path(source).read_bytes()
        except OSError as exc:
            raise ModelFileUnreadable(f"cannot read model file {source}: {exc}") from exc
    else:
        data = source
    try:
        fields = wire.parse_message(data)
        graph_raw = wire.get_bytes(fields, 7, None)
        if graph_raw is None:
            raise ModelFileUnreadable("model has no graph")
        opset = 0
        for opset_bytes in wire.get_bytes_list(fields, 8):
            opset_fields = wire.parse_message(opset_bytes)
            if wire.get_string(opset_fields, 1) in ("", "ai.onnx"):
                opset = max(opset, wire.get_varint(opset_fields, 2, 0))
        graph_fields = wire.parse_message(graph_raw)
        initializers = dict(
            _parse_tensor(t) for t in wire.get_bytes_list(graph_fields, 5)
        )
        inputs = [_parse_value_info(v) for v in wire.get_bytes_list(graph_fields, 11)]
        outputs = [_parse_value_info(v) for v in wire.get_bytes_list(graph_fields, 12)]
        nodes = [_parse_node(n) for n in wire.get_bytes_list(graph_fields, 1)]
    except wire.WireError as exc:
        raise ModelFileUnreadable(f"not a readable ONNX file: {exc}") from exc
    graph = Graph(
        nodes=nodes,
        inputs=[v for v in inputs if v.name not in initializers],
        outputs=outputs,
        initializers=initializers,
        name=wire.get_string(graph_fields, 2, "graph"),
    )
    return Model(
        graph=graph,
        opset=opset or 13,
        ir_version=wire.get_varint(fields, 1, 0),
        producer=wire.get_string(fields, 2),
    )


# --- serialization ---------------------------------------------------------------

def _tensor_bytes(name: str, array: np.ndarray) -> bytes:
    # note: ascontiguousarray would promote 0-d scalars to 1-d
    array = np.asarray(array, order="C")
    if array.dtype not in DTYPE_CODES:
        raise ValueError(f"unsupported tensor dtype {array.dtype}")
    out = bytearray()
    for dim in array.shape:
        out += wire.field_varint(1, dim)
    out += wire.field_varint(2, DTYPE_CODES[array.dtype])
    out += wire.field_string(8, name)
    out += wire.field_bytes(9, array.astype(array.dtype.newbyteorder("<")).tobytes())
    return bytes(out)


def _attribute_bytes(name: str, value) -> bytes:
    out = bytearray(wire.field_string(1, name))
    if isinstance(value, bool):
        out += wire.field_varint(3, int(value)) + wire.field_varint(20, 2)
    elif isinstance(value, int):
        out += wire.field_varint(3, value if value >= 0 else value + (1 << 64))
        out += wire.field_varint(20, 2)
    elif isinstance(value, float):
        out += wire.field_float(2, value) + wire.field_varint(20, 1)
    elif isinstance(value, str):
        out += wire.field_string(4, value) + wire.field_varint(20, 3)
    elif isinstance(value, np.ndarray):
        out += wire.field_bytes(5, _tensor_bytes("", value)) + wire.field_varint(20, 4)
    elif isinstance(value, (list, tuple)) and all(isinstance(v, int) for v in value):
        for v in value:
            out += wire.field_varint(8, v if v >= 0 else v + (1 << 64))
        out += wire.field_varint(20, 7)
    elif isinstance(value, (list, tuple)) and all(isinstance(v, float) for v in value):
        for v in value:
            out += wire.field_float(7, v)
        out += wire.field_varint(20, 6)
    else:
        raise ValueError(f"unsupported attribute value for {name!r}: {value!r}")
    return bytes(out)


def _node_bytes(node: Node) -> bytes:
    out = bytearray()
    for name in node.inputs:
        out += wire.field_string(1, name)
    for name in node.outputs:
        out += wire.field_string(2, name)
    if node.name:
        out += wire.field_string(3, node.name)
    out += wire.field_string(4, node.op_type)
    for key in sorted(node.attrs):
        out += wire.field_bytes(5, _attribute_bytes(key, node.attrs[key]))
    return bytes(out)


def _value_info_bytes(info: ValueInfo) -> bytes:
    shape_out = bytearray()
    if info.shape is not None:
        for dim in info.shape:
            if dim is None:
                dim_msg = wire.field_string(2, "N")
            else:
                dim_msg = wire.field_varint(1, dim)
            shape_out += wire.field_bytes(1, dim_msg)
    tensor_msg = wire.field_varint(1, info.elem_type) + wire.field_bytes(2, bytes(shape_out))
    type_msg = wire.field_bytes(1, tensor_msg)
    return wire.field_string(1, info.name) + wire.field_bytes(2, type_msg)


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_bytes(model_bytes(model))


def model_bytes(model: Model) -> bytes:
    graph = model.graph
    g = bytearray()
    for node in graph.nodes:
        g += wire.field_bytes(1, _node_bytes(node))
    g += wire.field_string(2, graph.name)
    for name, array in graph.initializers.items():
        g += wire.field_bytes(5, _tensor_bytes(name, array))
    for info in graph.inputs:
        g += wire.field_bytes(11, _value_info_bytes(info))
    for info in graph.outputs:
        g += wire.field_bytes(12, _value_info_bytes(info))

    out = bytearray()
    out += wire.field_varint(1, model.ir_version)
    if model.producer:
        out += wire.field_string(2, model.producer)
    out += wire.field_bytes(7, bytes(g))
    opset_msg = wire.field_string(1, "") + wire.field_varint(2, model.opset)
    out += wire.field_bytes(8, opset_msg)
    return bytes(out)
