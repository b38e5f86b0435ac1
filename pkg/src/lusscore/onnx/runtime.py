"""Numpy executor for the ONNX operator subset used by CNN feature stacks.

Covers the graphs produced for VGG/ResNet/Xception-style backbones by the
common exporters: 2-D convolutions (grouped and dilated), batch norm,
pooling, elementwise math, and the shape-plumbing ops (Shape/Gather/
Concat/Reshape) those exporters emit.  Anything else raises
UnsupportedOperator naming the offending op at load time.

Execution is single-threaded over nodes in file order (ONNX graphs are
topologically sorted); intermediate tensors are freed as soon as their
last consumer has run.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InferenceFailure, UnsupportedOperator
from .model import Model, Node, TENSOR_DTYPES


def _ints(node: Node, key: str, default):
    value = node.attrs.get(key, default)
    return None if value is None else [int(v) for v in value]


def _resolve_pads(node: Node, in_hw, ek_hw, strides):
    """Return (top, left, bottom, right) honouring pads/auto_pad."""
    auto_pad = node.attrs.get("auto_pad", "NOTSET")
    if auto_pad in ("NOTSET", ""):
        pads = _ints(node, "pads", [0, 0, 0, 0])
        return pads[0], pads[1], pads[2], pads[3]
    if auto_pad == "VALID":
        return 0, 0, 0, 0
    out = [None, None]
    total = [0, 0]
    for i in range(2):
        out[i] = -(-in_hw[i] // strides[i])  # ceil division
        total[i] = max((out[i] - 1) * strides[i] + ek_hw[i] - in_hw[i], 0)
    if auto_pad == "SAME_UPPER":
        top, left = total[0] // 2, total[1] // 2
    elif auto_pad == "SAME_LOWER":
        top, left = total[0] - total[0] // 2, total[1] - total[1] // 2
    else:
        raise UnsupportedOperator(f"auto_pad mode {auto_pad!r}")
    return top, left, total[0] - top, total[1] - left


def _windows(x_padded: np.ndarray, ek_hw, strides, dilations):
    """(N, C, Ho, Wo, kh, kw) tap view of a padded NCHW tensor."""
    view = sliding_window_view(x_padded, (ek_hw[0], ek_hw[1]), axis=(2, 3))
    view = view[:, :, :: strides[0], :: strides[1]]
    return view[:, :, :, :, :: dilations[0], :: dilations[1]]


def _op_conv(node: Node, args, ctx):
    x, w = args[0], args[1]
    bias = args[2] if len(args) > 2 else None
    if x.ndim != 4:
        raise UnsupportedOperator(f"Conv supports 2-D only, got input rank {x.ndim}")
    group = int(node.attrs.get("group", 1))
    strides = _ints(node, "strides", [1, 1])
    dilations = _ints(node, "dilations", [1, 1])
    kh, kw = w.shape[2], w.shape[3]
    ek = ((kh - 1) * dilations[0] + 1, (kw - 1) * dilations[1] + 1)
    top, left, bottom, right = _resolve_pads(node, x.shape[2:], ek, strides)
    x_p = np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)))
    taps = _windows(x_p, ek, strides, dilations)
    n, c = x.shape[0], x.shape[1]
    m = w.shape[0]
    ho, wo = taps.shape[2], taps.shape[3]
    taps = taps.reshape(n, group, c // group, ho, wo, kh, kw)
    wg = w.reshape(group, m // group, c // group, kh, kw)
    y = np.einsum("ngchwkl,gmckl->ngmhw", taps, wg, optimize=True)
    y = y.reshape(n, m, ho, wo)
    if bias is not None:
        y = y + bias.reshape(1, -1, 1, 1)
    return y.astype(x.dtype, copy=False)


def _op_batchnorm(node: Node, args, ctx):
    x, scale, offset, mean, var = args[:5]
    eps = float(node.attrs.get("epsilon", 1e-5))
    shape = (1, -1) + (1,) * (x.ndim - 2)
    mult = (scale / np.sqrt(var + eps)).reshape(shape)
    add = (offset - mean * scale / np.sqrt(var + eps)).reshape(shape)
    return (x * mult + add).astype(x.dtype, copy=False)


def _pool_prepare(node: Node, x):
    kernel = _ints(node, "kernel_shape", None)
    strides = _ints(node, "strides", [1] * len(kernel))
    dilations = _ints(node, "dilations", [1] * len(kernel))
    if x.ndim != 4 or len(kernel) != 2:
        raise UnsupportedOperator("only 2-D pooling is supported")
    ek = ((kernel[0] - 1) * dilations[0] + 1, (kernel[1] - 1) * dilations[1] + 1)
    top, left, bottom, right = _resolve_pads(node, x.shape[2:], ek, strides)
    if int(node.attrs.get("ceil_mode", 0)):
        for i, (pad_b, pad_e) in enumerate(((top, bottom), (left, right))):
            span = x.shape[2 + i] + pad_b + pad_e - ek[i]
            extra = (-span) % strides[i]
            if i == 0:
                bottom += extra
            else:
                right += extra
    return kernel, strides, dilations, ek, (top, left, bottom, right)


def _op_maxpool(node: Node, args, ctx):
    x = args[0]
    kernel, strides, dilations, ek, pads = _pool_prepare(node, x)
    fill = -np.inf if np.issubdtype(x.dtype, np.floating) else np.iinfo(x.dtype).min
    x_p = np.pad(
        x, ((0, 0), (0, 0), (pads[0], pads[2]), (pads[1], pads[3])),
        constant_values=fill,
    )
    taps = _windows(x_p, ek, strides, dilations)
    return taps.max(axis=(4, 5))


def _op_averagepool(node: Node, args, ctx):
    x = args[0]
    kernel, strides, dilations, ek, pads = _pool_prepare(node, x)
    include_pad = int(node.attrs.get("count_include_pad", 0))
    x_p = np.pad(x, ((0, 0), (0, 0), (pads[0], pads[2]), (pads[1], pads[3])))
    taps = _windows(x_p, ek, strides, dilations)
    total = taps.sum(axis=(4, 5), dtype=np.float64)
    if include_pad:
        count = kernel[0] * kernel[1]
    else:
        ones = np.ones((1, 1) + x.shape[2:], dtype=np.float64)
        ones_p = np.pad(ones, ((0, 0), (0, 0), (pads[0], pads[2]), (pads[1], pads[3])))
        count = _windows(ones_p, ek, strides, dilations).sum(axis=(4, 5))
    return (total / count).astype(x.dtype, copy=False)


def _op_global_average_pool(node: Node, args, ctx):
    x = args[0]
    axes = tuple(range(2, x.ndim))
    return x.mean(axis=axes, keepdims=True, dtype=np.float64).astype(x.dtype, copy=False)


def _op_reduce_mean(node: Node, args, ctx):
    x = args[0]
    if "axes" in node.attrs:
        axes = node.attrs["axes"]
    elif len(args) > 1 and args[1] is not None:
        axes = args[1].tolist()
    else:
        axes = None
    keepdims = bool(int(node.attrs.get("keepdims", 1)))
    axes = tuple(int(a) for a in axes) if axes else None
    return x.mean(axis=axes, keepdims=keepdims, dtype=np.float64).astype(x.dtype, copy=False)


def _op_gemm(node: Node, args, ctx):
    a, b = args[0], args[1]
    c = args[2] if len(args) > 2 else None
    alpha = float(node.attrs.get("alpha", 1.0))
    beta = float(node.attrs.get("beta", 1.0))
    if int(node.attrs.get("transA", 0)):
        a = a.T
    if int(node.attrs.get("transB", 0)):
        b = b.T
    y = alpha * (a @ b)
    if c is not None and beta != 0.0:
        y = y + beta * c
    return y


def _op_clip(node: Node, args, ctx):
    x = args[0]
    lo = node.attrs.get("min")
    hi = node.attrs.get("max")
    if lo is None and len(args) > 1 and args[1] is not None:
        lo = float(np.reshape(args[1], -1)[0])
    if hi is None and len(args) > 2 and args[2] is not None:
        hi = float(np.reshape(args[2], -1)[0])
    return np.clip(x, lo, hi)


def _op_pad(node: Node, args, ctx):
    x = args[0]
    mode = node.attrs.get("mode", "constant")
    if "pads" in node.attrs:
        pads = node.attrs["pads"]
        value = float(node.attrs.get("value", 0.0))
    else:
        pads = args[1].tolist()
        value = float(args[2]) if len(args) > 2 and args[2] is not None else 0.0
    rank = x.ndim
    width = [(int(pads[i]), int(pads[i + rank])) for i in range(rank)]
    if mode == "constant":
        return np.pad(x, width, constant_values=value)
    if mode in ("reflect", "edge"):
        return np.pad(x, width, mode=mode)
    raise UnsupportedOperator(f"Pad mode {mode!r}")


def _op_reshape(node: Node, args, ctx):
    x, shape = args[0], args[1]
    target = [int(v) for v in shape]
    if not int(node.attrs.get("allowzero", 0)):
        target = [x.shape[i] if v == 0 else v for i, v in enumerate(target)]
    return x.reshape(target)


def _op_flatten(node: Node, args, ctx):
    x = args[0]
    axis = int(node.attrs.get("axis", 1)) % (x.ndim + 1)
    lead = int(np.prod(x.shape[:axis], dtype=np.int64)) if axis else 1
    return x.reshape(lead, -1)


def _op_squeeze(node: Node, args, ctx):
    x = args[0]
    axes = node.attrs.get("axes")
    if axes is None and len(args) > 1 and args[1] is not None:
        axes = args[1].tolist()
    if axes is None:
        return x.squeeze()
    return x.squeeze(axis=tuple(int(a) % x.ndim for a in axes))


def _op_unsqueeze(node: Node, args, ctx):
    x = args[0]
    axes = node.attrs.get("axes")
    if axes is None and len(args) > 1 and args[1] is not None:
        axes = args[1].tolist()
    out_rank = x.ndim + len(axes)
    axes = sorted(int(a) % out_rank for a in axes)
    for a in axes:
        x = np.expand_dims(x, a)
    return x


def _op_transpose(node: Node, args, ctx):
    x = args[0]
    perm = node.attrs.get("perm")
    return np.transpose(x, axes=None if perm is None else [int(p) for p in perm])


def _op_concat(node: Node, args, ctx):
    axis = int(node.attrs["axis"])
    return np.concatenate([a for a in args if a is not None], axis=axis)


def _op_slice(node: Node, args, ctx):
    x = args[0]
    if "starts" in node.attrs:
        starts = node.attrs["starts"]
        ends = node.attrs["ends"]
        axes = node.attrs.get("axes", list(range(len(starts))))
        steps = [1] * len(starts)
    else:
        starts = args[1].tolist()
        ends = args[2].tolist()
        axes = args[3].tolist() if len(args) > 3 and args[3] is not None else list(range(len(starts)))
        steps = args[4].tolist() if len(args) > 4 and args[4] is not None else [1] * len(starts)
    slices = [slice(None)] * x.ndim
    for s, e, a, st in zip(starts, ends, axes, steps):
        slices[int(a) % x.ndim] = slice(int(s), int(e), int(st))
    return x[tuple(slices)]


def _op_shape(node: Node, args, ctx):
    x = args[0]
    start = int(node.attrs.get("start", 0)) % (x.ndim + 1) if node.attrs.get("start") else 0
    end = node.attrs.get("end")
    end = x.ndim if end is None else int(end) % (x.ndim + 1)
    return np.asarray(x.shape[start:end], dtype=np.int64)


def _op_gather(node: Node, args, ctx):
    x, indices = args[0], args[1]
    axis = int(node.attrs.get("axis", 0))
    return np.take(x, indices.astype(np.int64), axis=axis)


def _op_cast(node: Node, args, ctx):
    to = int(node.attrs["to"])
    if to not in TENSOR_DTYPES:
        raise UnsupportedOperator(f"Cast to data type {to}")
    return args[0].astype(TENSOR_DTYPES[to])


def _op_constant(node: Node, args, ctx):
    for key in ("value", "value_float", "value_int", "value_ints", "value_floats"):
        if key in node.attrs:
            value = node.attrs[key]
            if key == "value":
                return value
            if key == "value_int":
                return np.asarray(int(value), dtype=np.int64)
            if key == "value_float":
                return np.asarray(float(value), dtype=np.float32)
            if key == "value_ints":
                return np.asarray(value, dtype=np.int64)
            return np.asarray(value, dtype=np.float32)
    raise UnsupportedOperator("Constant node without a supported value attribute")


def _op_constant_of_shape(node: Node, args, ctx):
    shape = [int(v) for v in args[0]]
    value = node.attrs.get("value")
    if value is None:
        return np.zeros(shape, dtype=np.float32)
    return np.full(shape, value.reshape(-1)[0], dtype=value.dtype)


def _op_expand(node: Node, args, ctx):
    x, shape = args[0], args[1]
    target = np.broadcast_shapes(x.shape, tuple(int(v) for v in shape))
    return np.broadcast_to(x, target).copy()


def _op_softmax(node: Node, args, ctx):
    x = args[0]
    axis = int(node.attrs.get("axis", -1))
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _op_dropout(node: Node, args, ctx):
    x = args[0]
    if len(node.outputs) > 1 and node.outputs[1]:
        return x, np.ones(x.shape, dtype=bool)
    return x


OP_HANDLERS = {
    "Conv": _op_conv,
    "BatchNormalization": _op_batchnorm,
    "Relu": lambda node, args, ctx: np.maximum(args[0], 0),
    "LeakyRelu": lambda node, args, ctx: np.where(
        args[0] >= 0, args[0], args[0] * np.asarray(node.attrs.get("alpha", 0.01), args[0].dtype)
    ),
    "Sigmoid": lambda node, args, ctx: 1.0 / (1.0 + np.exp(-args[0])),
    "Tanh": lambda node, args, ctx: np.tanh(args[0]),
    "Softmax": _op_softmax,
    "Clip": _op_clip,
    "MaxPool": _op_maxpool,
    "AveragePool": _op_averagepool,
    "GlobalAveragePool": _op_global_average_pool,
    "ReduceMean": _op_reduce_mean,
    "Add": lambda node, args, ctx: args[0] + args[1],
    "Sub": lambda node, args, ctx: args[0] - args[1],
    "Mul": lambda node, args, ctx: args[0] * args[1],
    "Div": lambda node, args, ctx: args[0] / args[1],
    "Pow": lambda node, args, ctx: np.power(args[0], args[1]),
    "Sqrt": lambda node, args, ctx: np.sqrt(args[0]),
    "Pad": _op_pad,
    "Concat": _op_concat,
    "Flatten": _op_flatten,
    "Reshape": _op_reshape,
    "Squeeze": _op_squeeze,
    "Unsqueeze": _op_unsqueeze,
    "Transpose": _op_transpose,
    "Gemm": _op_gemm,
    "MatMul": lambda node, args, ctx: args[0] @ args[1],
    "Identity": lambda node, args, ctx: args[0],
    "Dropout": _op_dropout,
    "Cast": _op_cast,
    "Constant": _op_constant,
    "ConstantOfShape": _op_constant_of_shape,
    "Expand": _op_expand,
    "Shape": _op_shape,
    "Gather": _op_gather,
    "Slice": _op_slice,
}


class GraphExecutor:
    """Run a parsed ONNX model on numpy inputs."""

    def __init__(self, model: Model):
        self.graph = model.graph
        self.opset = model.opset
        unsupported = sorted(
            {n.op_type for n in self.graph.nodes} - set(OP_HANDLERS)
        )
        if unsupported:
            raise UnsupportedOperator(
                f"model uses unimplemented operator(s): {', '.join(unsupported)}"
            )
        self._last_use: dict[str, int] = {}
        for i, node in enumerate(self.graph.nodes):
            for name in node.inputs:
                if name:
                    self._last_use[name] = i

    @property
    def input_infos(self):
        return self.graph.inputs

    @property
    def output_infos(self):
        return self.graph.outputs

    def run(self, feeds: dict[str, np.ndarray]) -> list[np.ndarray]:
        values: dict[str, np.ndarray] = dict(self.graph.initializers)
        values.update(feeds)
        keep = set(values) | {o.name for o in self.graph.outputs}
        for i, node in enumerate(self.graph.nodes):
            args = []
            for name in node.inputs:
                if not name:
                    args.append(None)
                elif name in values:
                    args.append(values[name])
                else:
                    raise InferenceFailure(
                        f"node {node.name or node.op_type}: missing input {name!r}"
                    )
            try:
                outs = OP_HANDLERS[node.op_type](node, args, self)
            except (InferenceFailure, UnsupportedOperator):
                raise
            except Exception as exc:
                raise InferenceFailure(
                    f"node {node.name or node.op_type} ({node.op_type}) failed: {exc}"
                ) from exc
            if not isinstance(outs, tuple):
                outs = (outs,)
            for name, value in zip(node.outputs, outs):
                if name:
                    values[name] = value
            # free tensors whose last consumer has now run
            for name in node.inputs:
                if name and name not in keep and self._last_use.get(name) == i:
                    values.pop(name, None)
        missing = [o.name for o in self.graph.outputs if o.name not in values]
        if missing:
            raise InferenceFailure(f"graph outputs never produced: {missing}")
        return [values[o.name] for o in self.graph.outputs]
