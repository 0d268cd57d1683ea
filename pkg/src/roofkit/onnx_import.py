"""Import an ONNX model (protobuf wire format, opset >= 13) as a ModelGraph.

Only the structure matters for costing, so this reads the handful of
message fields that carry graph topology, tensor dims and node
attributes, with a small self-contained protobuf scanner; weight values
are never materialized. Ops outside the mapping table fail loudly,
listing every offender.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import DecodeError, MissingShape, SchemaError, UnsupportedOp
from .ir import LayerKind, LayerSpec, ModelGraph, Precision, TensorShape, build_graph

# --- protobuf wire scanner ---


def _read_varint(buf: bytes, i: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if i >= len(buf):
            raise DecodeError("truncated varint")
        b = buf[i]
        i += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, i
        shift += 7
        if shift > 70:
            raise DecodeError("varint too long")


def _signed(v: int) -> int:
    return v - (1 << 64) if v >= (1 << 63) else v


def _fields(buf: bytes):
    """Yield (field_number, wire_type, value); length-delimited values are bytes."""
    i = 0
    while i < len(buf):
        tag, i = _read_varint(buf, i)
        fno, wt = tag >> 3, tag & 7
        if wt == 0:
            v, i = _read_varint(buf, i)
        elif wt == 1:
            if i + 8 > len(buf):
                raise DecodeError("truncated fixed64")
            v = struct.unpack_from("<Q", buf, i)[0]
            i += 8
        elif wt == 2:
            ln, i = _read_varint(buf, i)
            if i + ln > len(buf):
                raise DecodeError("truncated length-delimited field")
            v = buf[i:i + ln]
            i += ln
        elif wt == 5:
            if i + 4 > len(buf):
                raise DecodeError("truncated fixed32")
            v = struct.unpack_from("<I", buf, i)[0]
            i += 4
        else:
            raise DecodeError(f"unsupported wire type {wt}")
        yield fno, wt, v


def _packed_varints(data: bytes) -> list[int]:
    out = []
    i = 0
    while i < len(data):
        v, i = _read_varint(data, i)
        out.append(_signed(v))
    return out


# --- typed views over the messages we care about ---


@dataclass
class _Tensor:
    name: str = ""
    dims: tuple[int, ...] = ()
    data_type: int = 0
    int_values: tuple[int, ...] = ()   # decoded only for small integer tensors


def _parse_tensor(buf: bytes) -> _Tensor:
    t = _Tensor()
    dims: list[int] = []
    ints: list[int] = []
    raw = b""
    for fno, wt, v in _fields(buf):
        if fno == 1:
            dims.append(_signed(v) if wt == 0 else 0)
        elif fno == 2 and wt == 0:
            t.data_type = v
        elif fno == 7:
            ints.extend(_packed_varints(v) if wt == 2 else [_signed(v)])
        elif fno == 5:
            ints.extend(_packed_varints(v) if wt == 2 else [_signed(v)])
        elif fno == 8 and wt == 2:
            t.name = v.decode("utf-8", "replace")
        elif fno == 9 and wt == 2:
            raw = v
    t.dims = tuple(dims)
    if not ints and raw:
        n = 1
        for d in dims:
            n *= max(d, 1)
        if t.data_type == 7 and len(raw) == 8 * n and n <= 64:
            ints = list(struct.unpack(f"<{n}q", raw))
        elif t.data_type == 6 and len(raw) == 4 * n and n <= 64:
            ints = list(struct.unpack(f"<{n}i", raw))
    t.int_values = tuple(ints)
    return t


@dataclass
class _Attr:
    name: str = ""
    i: int | None = None
    f: float | None = None
    s: bytes | None = None
    ints: tuple[int, ...] = ()
    tensor: _Tensor | None = None


def _parse_attr(buf: bytes) -> _Attr:
    a = _Attr()
    ints: list[int] = []
    for fno, wt, v in _fields(buf):
        if fno == 1 and wt == 2:
            a.name = v.decode("utf-8", "replace")
        elif fno == 3 and wt == 0:
            a.i = _signed(v)
        elif fno == 2 and wt == 5:
            a.f = struct.unpack("<f", struct.pack("<I", v))[0]
        elif fno == 4 and wt == 2:
            a.s = v
        elif fno == 8:
            ints.extend(_packed_varints(v) if wt == 2 else [_signed(v)])
        elif fno == 5 and wt == 2:
            a.tensor = _parse_tensor(v)
    a.ints = tuple(ints)
    return a


@dataclass
class _Node:
    op_type: str = ""
    name: str = ""
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    attrs: dict[str, _Attr] = field(default_factory=dict)

    def attr_ints(self, name: str, default=()) -> tuple[int, ...]:
        a = self.attrs.get(name)
        return a.ints if a is not None and a.ints else tuple(default)

    def attr_int(self, name: str, default: int | None = None) -> int | None:
        a = self.attrs.get(name)
        return a.i if a is not None and a.i is not None else default


def _parse_node(buf: bytes) -> _Node:
    n = _Node()
    for fno, wt, v in _fields(buf):
        if wt != 2:
            continue
        if fno == 1:
            n.inputs.append(v.decode("utf-8", "replace"))
        elif fno == 2:
            n.outputs.append(v.decode("utf-8", "replace"))
        elif fno == 3:
            n.name = v.decode("utf-8", "replace")
        elif fno == 4:
            n.op_type = v.decode("utf-8", "replace")
        elif fno == 5:
            a = _parse_attr(v)
            n.attrs[a.name] = a
    return n


def _parse_value_info(buf: bytes) -> tuple[str, tuple[int, ...] | None, int]:
    """(tensor name, static dims or None, elem_type)."""
    name = ""
    dims: list[int] | None = None
    elem = 0
    for fno, wt, v in _fields(buf):
        if fno == 1 and wt == 2:
            name = v.decode("utf-8", "replace")
        elif fno == 2 and wt == 2:
            for f2, w2, v2 in _fields(v):          # TypeProto
                if f2 == 1 and w2 == 2:            # tensor_type
                    for f3, w3, v3 in _fields(v2):
                        if f3 == 1 and w3 == 0:
                            elem = v3
                        elif f3 == 2 and w3 == 2:  # shape
                            dims = []
                            for f4, w4, v4 in _fields(v3):
                                if f4 == 1 and w4 == 2:   # dim
                                    dv = None
                                    for f5, w5, v5 in _fields(v4):
                                        if f5 == 1 and w5 == 0:
                                            dv = _signed(v5)
                                    dims.append(dv if dv is not None else 0)
    static = tuple(dims) if dims is not None and all(d > 0 for d in dims) else None
    return name, static, elem


@dataclass
class _Graph:
    name: str = ""
    nodes: list[_Node] = field(default_factory=list)
    initializers: dict[str, _Tensor] = field(default_factory=dict)
    inputs: list[tuple[str, tuple[int, ...] | None, int]] = field(default_factory=list)


def _parse_graph(buf: bytes) -> _Graph:
    g = _Graph()
    for fno, wt, v in _fields(buf):
        if wt != 2:
            continue
        if fno == 1:
            g.nodes.append(_parse_node(v))
        elif fno == 2:
            g.name = v.decode("utf-8", "replace")
        elif fno == 5:
            t = _parse_tensor(v)
            g.initializers[t.name] = t
        elif fno == 11:
            g.inputs.append(_parse_value_info(v))
    return g


def _parse_model(data: bytes) -> tuple[_Graph, int]:
    graph = None
    opset = 0
    try:
        for fno, wt, v in _fields(data):
            if fno == 7 and wt == 2:
                graph = _parse_graph(v)
            elif fno == 8 and wt == 2:
                domain, version = "", 0
                for f2, w2, v2 in _fields(v):
                    if f2 == 1 and w2 == 2:
                        domain = v2.decode("utf-8", "replace")
                    elif f2 == 2 and w2 == 0:
                        version = _signed(v2)
                if domain in ("", "ai.onnx"):
                    opset = max(opset, version)
    except DecodeError:
        raise
    except Exception as e:
        raise DecodeError(f"malformed ONNX protobuf: {e}") from None
    if graph is None:
        raise DecodeError("no graph found; input is not an ONNX model")
    return graph, opset


# --- op mapping ---

_ACT_OPS = {"Relu": "relu", "Sigmoid": "sigmoid", "Tanh": "tanh", "HardSwish": "hardswish"}
_ELEMENTWISE_OPS = {"Add": "add", "Mul": "mul"}

_SUPPORTED_OPS = frozenset(
    ["Conv", "Gemm", "MatMul", "MaxPool", "AveragePool", "GlobalAveragePool",
     "BatchNormalization", "Softmax", "LayerNormalization", "Gather", "LSTM",
     "Transpose", "Reshape", "Flatten", "Concat", "Constant"]
    + list(_ACT_OPS) + list(_ELEMENTWISE_OPS))

_ELEM_TYPE_PRECISION = {1: Precision.FP32, 10: Precision.FP16, 3: Precision.INT8, 2: Precision.INT8}


def _square(vals: tuple[int, ...], what: str, node: str) -> int:
    if not vals:
        raise SchemaError(f"node {node!r}: missing {what}")
    if any(v != vals[0] for v in vals):
        raise SchemaError(f"node {node!r}: non-uniform {what} {list(vals)} unsupported")
    return vals[0]


class _Importer:
    def __init__(self, g: _Graph):
        self.g = g
        self.producer: dict[str, str] = {}       # tensor name -> layer id
        self.const: dict[str, _Tensor] = dict(g.initializers)
        self.ext_inputs: dict[str, tuple[int, ...]] = {}
        self.layers: list[LayerSpec] = []
        self.input_shapes: dict[str, TensorShape] = {}
        self.unsupported: list[str] = []
        self.poisoned: set[str] = set()
        self.used_ids: set[str] = set()

    def layer_id(self, node: _Node, idx: int) -> str:
        base = node.name or (node.outputs[0] if node.outputs else f"{node.op_type}_{idx}")
        lid = base
        n = 1
        while lid in self.used_ids:
            n += 1
            lid = f"{base}_{n}"
        self.used_ids.add(lid)
        return lid

    def dynamic_inputs(self, node: _Node) -> list[str]:
        return [t for t in node.inputs if t and t not in self.const]

    def resolve(self, lid: str, names: list[str]) -> tuple[list[str], TensorShape | None]:
        """Map tensor names to producing layers; external graph inputs make
        this layer a source with the external shape attached."""
        refs = []
        ext_shape = None
        for t in names:
            if t in self.producer:
                refs.append(self.producer[t])
            elif t in self.ext_inputs:
                if refs or ext_shape is not None:
                    raise SchemaError(
                        f"node {lid!r} mixes graph inputs with layer inputs; "
                        "unsupported graph shape")
                ext_shape = TensorShape(self.ext_inputs[t])
            else:
                raise SchemaError(f"node {lid!r} consumes unknown tensor {t!r}")
        return refs, ext_shape

    def emit(self, node: _Node, idx: int, kind: LayerKind, params: dict,
             dyn: list[str] | None = None) -> None:
        lid = self.layer_id(node, idx)
        dyn = self.dynamic_inputs(node) if dyn is None else dyn
        refs, ext_shape = self.resolve(lid, dyn)
        self.layers.append(LayerSpec(lid, kind, params, tuple(refs)))
        if ext_shape is not None:
            self.input_shapes[lid] = ext_shape
        for t in node.outputs:
            if t:
                self.producer[t] = lid

    def import_graph(self) -> tuple[list[LayerSpec], dict, Precision, int]:
        unknown = sorted({n.op_type for n in self.g.nodes
                          if n.op_type not in _SUPPORTED_OPS})
        if unknown:
            raise UnsupportedOp(unknown)
        precision = Precision.FP32
        batch = 1
        for name, dims, elem in self.g.inputs:
            if name in self.const:
                continue
            if dims is None:
                raise MissingShape(f"graph input {name!r} has no static shape")
            self.ext_inputs[name] = dims
            if elem in _ELEM_TYPE_PRECISION:
                precision = _ELEM_TYPE_PRECISION[elem]
            batch = dims[0]
        for idx, node in enumerate(self.g.nodes):
            if any(t in self.poisoned for t in node.inputs):
                self.poisoned.update(t for t in node.outputs if t)
                continue
            self.visit(node, idx)
        if self.unsupported:
            raise UnsupportedOp(self.unsupported)
        return self.layers, self.input_shapes, precision, batch

    def visit(self, node: _Node, idx: int) -> None:
        op = node.op_type
        if op == "Constant":
            a = node.attrs.get("value")
            if a is not None and a.tensor is not None and node.outputs:
                self.const[node.outputs[0]] = a.tensor
            return

        if op == "Conv":
            w = self.const.get(node.inputs[1]) if len(node.inputs) > 1 else None
            if w is None or len(w.dims) != 4:
                raise SchemaError(f"node {node.name or idx}: Conv needs a 4-D weight "
                                  "initializer")
            auto_pad = node.attrs.get("auto_pad")
            if auto_pad is not None and auto_pad.s not in (None, b"", b"NOTSET"):
                raise SchemaError(f"node {node.name or idx}: auto_pad "
                                  f"{auto_pad.s!r} unsupported; use explicit pads")
            k = _square(node.attr_ints("kernel_shape", w.dims[2:]), "kernel_shape",
                        node.name or op)
            params = {
                "filters": w.dims[0],
                "K": k,
                "s": _square(node.attr_ints("strides", (1,)), "strides", node.name or op),
                "p": max(node.attr_ints("pads", (0,))),
                "dl": _square(node.attr_ints("dilations", (1,)), "dilations", node.name or op),
                "g": node.attr_int("group", 1),
                "bias": 1 if len(node.inputs) > 2 and node.inputs[2] else 0,
            }
            self.emit(node, idx, LayerKind.Conv2d, params, dyn=[node.inputs[0]])
        elif op == "Gemm":
            b = self.const.get(node.inputs[1]) if len(node.inputs) > 1 else None
            if b is None or len(b.dims) != 2:
                raise SchemaError(f"node {node.name or idx}: Gemm needs a 2-D weight "
                                  "initializer")
            trans_b = node.attr_int("transB", 0)
            d_out = b.dims[0] if trans_b else b.dims[1]
            params = {"d_out": d_out,
                      "bias": 1 if len(node.inputs) > 2 and node.inputs[2] else 0}
            self.emit(node, idx, LayerKind.Linear, params, dyn=[node.inputs[0]])
        elif op == "MatMul":
            b = self.const.get(node.inputs[1]) if len(node.inputs) > 1 else None
            if b is not None:
                if len(b.dims) < 2:
                    raise SchemaError(f"node {node.name or idx}: MatMul weight must have "
                                      "rank >= 2")
                self.emit(node, idx, LayerKind.Linear,
                          {"d_out": b.dims[-1], "bias": 0}, dyn=[node.inputs[0]])
            else:
                self.emit(node, idx, LayerKind.Linear, {"bias": 0})
        elif op in _ACT_OPS:
            self.emit(node, idx, LayerKind.Activation, {"act": _ACT_OPS[op]})
        elif op in ("MaxPool", "AveragePool"):
            params = {
                "mode": "max" if op == "MaxPool" else "avg",
                "K": _square(node.attr_ints("kernel_shape"), "kernel_shape", node.name or op),
                "s": _square(node.attr_ints("strides", (1,)), "strides", node.name or op),
                "p": max(node.attr_ints("pads", (0,))),
            }
            self.emit(node, idx, LayerKind.Pool2d, params)
        elif op == "GlobalAveragePool":
            self.emit(node, idx, LayerKind.Pool2d, {"mode": "global"})
        elif op == "BatchNormalization":
            self.emit(node, idx, LayerKind.BatchNorm, {}, dyn=[node.inputs[0]])
        elif op in _ELEMENTWISE_OPS:
            params: dict = {"op": _ELEMENTWISE_OPS[op]}
            dyn = self.dynamic_inputs(node)
            if len(dyn) == 1 and len(node.inputs) == 2:
                const_name = node.inputs[0] if node.inputs[1] == dyn[0] else node.inputs[1]
                t = self.const[const_name]
                params["operand"] = tuple(d for d in t.dims) or (1,)
            self.emit(node, idx, LayerKind.Elementwise, params, dyn=dyn)
        elif op == "Softmax":
            self.emit(node, idx, LayerKind.Softmax, {})
        elif op == "LayerNormalization":
            self.emit(node, idx, LayerKind.LayerNorm, {}, dyn=[node.inputs[0]])
        elif op == "Gather":
            data = self.const.get(node.inputs[0]) if node.inputs else None
            if data is None or len(data.dims) != 2:
                self.unsupported.append("Gather (non-embedding)")
                self.poisoned.update(t for t in node.outputs if t)
                return
            self.emit(node, idx, LayerKind.Embedding, {"d": data.dims[1]},
                      dyn=[node.inputs[1]])
        elif op == "LSTM":
            h = node.attr_int("hidden_size")
            if h is None:
                raise SchemaError(f"node {node.name or idx}: LSTM needs hidden_size")
            direction = node.attrs.get("direction")
            if direction is not None and direction.s == b"bidirectional":
                raise SchemaError(f"node {node.name or idx}: bidirectional LSTM "
                                  "unsupported")
            layout = node.attr_int("layout", 0)
            self.emit(node, idx, LayerKind.LSTMCell,
                      {"h": h, "seq_first": 0 if layout else 1}, dyn=[node.inputs[0]])
        elif op == "Transpose":
            perm = node.attr_ints("perm")
            self.emit(node, idx, LayerKind.Transpose,
                      {"perm": tuple(perm)} if perm else {})
        elif op == "Reshape":
            shape = None
            if len(node.inputs) > 1 and node.inputs[1] in self.const:
                shape = list(self.const[node.inputs[1]].int_values)
            if not shape:
                raise SchemaError(f"node {node.name or idx}: Reshape target shape is not "
                                  "a constant")
            if shape[0] != -1:
                shape[0] = 0  # re-batching keeps the leading dim symbolic
            self.emit(node, idx, LayerKind.Reshape, {"shape": tuple(shape)},
                      dyn=[node.inputs[0]])
        elif op == "Flatten":
            self.emit(node, idx, LayerKind.Reshape, {"shape": (0, -1)})
        elif op == "Concat":
            axis = node.attr_int("axis", 1)
            if axis < 0:
                raise SchemaError(f"node {node.name or idx}: negative concat axis "
                                  "unsupported")
            self.emit(node, idx, LayerKind.Concat, {"axis": axis})
        else:
            self.unsupported.append(op)


def import_onnx(data: bytes, name: str | None = None) -> ModelGraph:
    """Decode ONNX bytes into a ModelGraph equivalent for costing."""
    if not isinstance(data, (bytes, bytearray)):
        raise DecodeError("import_onnx expects raw ONNX bytes")
    graph, opset = _parse_model(bytes(data))
    if opset and opset < 13:
        raise DecodeError(f"opset {opset} unsupported; need >= 13")
    imp = _Importer(graph)
    layers, input_shapes, precision, batch = imp.import_graph()
    return build_graph(name or graph.name or "onnx-model", precision,
                       max(batch, 1), layers, input_shapes)
