"""Stand-alone ONNX protobuf writer used to build test fixtures.

Encodes the wire format directly from the public onnx.proto field
layout; intentionally independent of the package's decoder so the two
sides cross-check each other.
"""

from __future__ import annotations

import struct


def _varint(v: int) -> bytes:
    if v < 0:
        v += 1 << 64
    out = bytearray()
    while True:
        b = v & 0x7F
        v >>= 7
        if v:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _tag(field_no: int, wire_type: int) -> bytes:
    return _varint((field_no << 3) | wire_type)


def _ld(field_no: int, payload: bytes) -> bytes:
    return _tag(field_no, 2) + _varint(len(payload)) + payload


def _str(field_no: int, s: str) -> bytes:
    return _ld(field_no, s.encode("utf-8"))


def _int(field_no: int, v: int) -> bytes:
    return _tag(field_no, 0) + _varint(v)


def tensor(name: str, dims, data_type: int = 1, int64_data=None,
           raw_float_zeros: bool = False) -> bytes:
    out = b""
    for d in dims:
        out += _int(1, d)
    out += _int(2, data_type)
    if int64_data is not None:
        for v in int64_data:
            out += _int(7, v)
    if raw_float_zeros:
        n = 1
        for d in dims:
            n *= d
        out += _ld(9, b"\x00" * (4 * n))
    out += _str(8, name)
    return out


def value_info(name: str, dims, elem_type: int = 1, dim_params=None) -> bytes:
    shape = b""
    for i, d in enumerate(dims):
        if dim_params and i in dim_params:
            dim = _str(2, dim_params[i])
        else:
            dim = _int(1, d)
        shape += _ld(1, dim)
    tensor_type = _int(1, elem_type) + _ld(2, shape)
    return _str(1, name) + _ld(2, _ld(1, tensor_type))


def attr_int(name: str, v: int) -> bytes:
    return _str(1, name) + _int(3, v) + _int(20, 2)


def attr_ints(name: str, vals) -> bytes:
    out = _str(1, name)
    for v in vals:
        out += _int(8, v)
    return out + _int(20, 7)


def attr_float(name: str, v: float) -> bytes:
    return _str(1, name) + _tag(2, 5) + struct.pack("<f", v) + _int(20, 1)


def attr_tensor(name: str, t: bytes) -> bytes:
    return _str(1, name) + _ld(5, t) + _int(20, 4)


def node(op_type: str, inputs, outputs, name: str = "", attrs=()) -> bytes:
    out = b""
    for i in inputs:
        out += _str(1, i)
    for o in outputs:
        out += _str(2, o)
    if name:
        out += _str(3, name)
    out += _str(4, op_type)
    for a in attrs:
        out += _ld(5, a)
    return out


def graph(nodes, inputs, outputs, initializers=(), name: str = "g") -> bytes:
    out = b""
    for n in nodes:
        out += _ld(1, n)
    out += _str(2, name)
    for t in initializers:
        out += _ld(5, t)
    for vi in inputs:
        out += _ld(11, vi)
    for vo in outputs:
        out += _ld(12, vo)
    return out


def model(graph_bytes: bytes, opset: int = 13) -> bytes:
    opset_entry = _str(1, "") + _int(2, opset)
    return _int(1, 8) + _ld(7, graph_bytes) + _ld(8, opset_entry)


# --- ready-made fixture models ---


def tiny_conv_onnx() -> bytes:
    """3x8x8 input, 8 filters of 3x3, stride 1, pad 1, bias, relu."""
    nodes = [
        node("Conv", ["input", "w", "b"], ["conv_out"], name="conv1", attrs=[
            attr_ints("kernel_shape", [3, 3]), attr_ints("strides", [1, 1]),
            attr_ints("pads", [1, 1, 1, 1]), attr_ints("dilations", [1, 1]),
            attr_int("group", 1)]),
        node("Relu", ["conv_out"], ["output"], name="relu1"),
    ]
    g = graph(nodes,
              inputs=[value_info("input", [1, 3, 8, 8])],
              outputs=[value_info("output", [1, 8, 8, 8])],
              initializers=[tensor("w", [8, 3, 3, 3], raw_float_zeros=True),
                            tensor("b", [8], raw_float_zeros=True)],
              name="tiny-conv")
    return model(g)


def _resnet_stage_cfg():
    return ((64, 256, 3, 1), (128, 512, 4, 2), (256, 1024, 6, 2), (512, 2048, 3, 2))


def resnet50_onnx(image: int = 224) -> bytes:
    """Structure-only ResNet-50 export: bias-free convs, separate BN/ReLU,
    residual Adds, GAP, Flatten and the final Gemm. Initializers carry dims
    but no weight data."""
    nodes = []
    inits = []

    def conv(name, src, dst, c_in, c_out, k, s, p):
        inits.append(tensor(f"{name}_w", [c_out, c_in, k, k]))
        nodes.append(node("Conv", [src, f"{name}_w"], [dst], name=name, attrs=[
            attr_ints("kernel_shape", [k, k]), attr_ints("strides", [s, s]),
            attr_ints("pads", [p, p, p, p])]))

    def bn(name, src, dst, c):
        for suffix in ("scale", "bias", "mean", "var"):
            inits.append(tensor(f"{name}_{suffix}", [c]))
        nodes.append(node("BatchNormalization",
                          [src] + [f"{name}_{sfx}" for sfx in ("scale", "bias", "mean", "var")],
                          [dst], name=name, attrs=[attr_float("epsilon", 1e-5)]))

    def relu(name, src, dst):
        nodes.append(node("Relu", [src], [dst], name=name))

    conv("conv1", "input", "c1", 3, 64, 7, 2, 3)
    bn("bn1", "c1", "b1", 64)
    relu("relu1", "b1", "r1")
    nodes.append(node("MaxPool", ["r1"], ["mp"], name="maxpool", attrs=[
        attr_ints("kernel_shape", [3, 3]), attr_ints("strides", [2, 2]),
        attr_ints("pads", [1, 1, 1, 1])]))

    prev, prev_c = "mp", 64
    for si, (width, out_c, blocks, stride) in enumerate(_resnet_stage_cfg(), start=1):
        for bi in range(blocks):
            t = f"s{si}b{bi}"
            s = stride if bi == 0 else 1
            conv(f"{t}_conv1", prev, f"{t}_c1", prev_c, width, 1, 1, 0)
            bn(f"{t}_bn1", f"{t}_c1", f"{t}_b1", width)
            relu(f"{t}_relu1", f"{t}_b1", f"{t}_r1")
            conv(f"{t}_conv2", f"{t}_r1", f"{t}_c2", width, width, 3, s, 1)
            bn(f"{t}_bn2", f"{t}_c2", f"{t}_b2", width)
            relu(f"{t}_relu2", f"{t}_b2", f"{t}_r2")
            conv(f"{t}_conv3", f"{t}_r2", f"{t}_c3", width, out_c, 1, 1, 0)
            bn(f"{t}_bn3", f"{t}_c3", f"{t}_b3", out_c)
            if bi == 0:
                conv(f"{t}_down_conv", prev, f"{t}_dc", prev_c, out_c, 1, s, 0)
                bn(f"{t}_down_bn", f"{t}_dc", f"{t}_db", out_c)
                shortcut = f"{t}_db"
            else:
                shortcut = prev
            nodes.append(node("Add", [f"{t}_b3", shortcut], [f"{t}_sum"], name=f"{t}_add"))
            relu(f"{t}_relu3", f"{t}_sum", f"{t}_out")
            prev, prev_c = f"{t}_out", out_c

    nodes.append(node("GlobalAveragePool", [prev], ["gap"], name="gap"))
    nodes.append(node("Flatten", ["gap"], ["flat"], name="flatten",
                      attrs=[attr_int("axis", 1)]))
    inits.append(tensor("fc_w", [1000, 2048]))
    inits.append(tensor("fc_b", [1000]))
    nodes.append(node("Gemm", ["flat", "fc_w", "fc_b"], ["logits"], name="fc", attrs=[
        attr_int("transB", 1), attr_float("alpha", 1.0), attr_float("beta", 1.0)]))

    g = graph(nodes, inputs=[value_info("input", [1, 3, image, image])],
              outputs=[value_info("logits", [1, 1000])],
              initializers=inits, name="resnet50")
    return model(g)


def mixed_ops_onnx(seq: int = 6, d: int = 4, vocab: int = 10) -> bytes:
    """Covers Gather/MatMul/Add-bias/Mul/Softmax/Transpose/Reshape/Concat
    plus a dynamic (two-operand) MatMul."""
    inits = [
        tensor("emb_table", [vocab, d]),
        tensor("w1", [d, d]),
        tensor("b1", [d]),
        tensor("reshape_shape", [3], data_type=7, int64_data=[1, seq, d]),
    ]
    nodes = [
        node("Gather", ["emb_table", "ids"], ["emb"], name="embed"),
        node("MatMul", ["emb", "w1"], ["mm1"], name="proj"),
        node("Add", ["mm1", "b1"], ["proj_out"], name="proj_bias"),
        node("Transpose", ["proj_out"], ["proj_t"], name="swap",
             attrs=[attr_ints("perm", [0, 2, 1])]),
        node("MatMul", ["proj_out", "proj_t"], ["scores"], name="scores"),
        node("Softmax", ["scores"], ["probs"], name="probs",
             attrs=[attr_int("axis", -1)]),
        node("MatMul", ["probs", "proj_out"], ["ctx"], name="ctx"),
        node("Mul", ["ctx", "ctx"], ["sq"], name="square"),
        node("Reshape", ["sq", "reshape_shape"], ["flat"], name="reshape"),
        node("Concat", ["flat", "emb"], ["both"], name="concat",
             attrs=[attr_int("axis", 2)]),
    ]
    g = graph(nodes, inputs=[value_info("ids", [1, seq], elem_type=7)],
              outputs=[value_info("both", [1, seq, 2 * d])],
              initializers=inits, name="mixed")
    return model(g)


def lstm_onnx(seq: int = 5, batch: int = 1, d: int = 8, hidden: int = 16) -> bytes:
    inits = [
        tensor("w", [1, 4 * hidden, d]),
        tensor("r", [1, 4 * hidden, hidden]),
        tensor("b", [1, 8 * hidden]),
    ]
    nodes = [node("LSTM", ["x", "w", "r", "b"], ["y", "y_h", "y_c"], name="rnn",
                  attrs=[attr_int("hidden_size", hidden)])]
    g = graph(nodes, inputs=[value_info("x", [seq, batch, d])],
              outputs=[value_info("y", [seq, 1, batch, hidden])],
              initializers=inits, name="lstm")
    return model(g)


def unsupported_op_onnx() -> bytes:
    nodes = [node("Erf", ["input"], ["output"], name="erf")]
    g = graph(nodes, inputs=[value_info("input", [1, 4])],
              outputs=[value_info("output", [1, 4])], name="erf-model")
    return model(g)


def dynamic_shape_onnx() -> bytes:
    nodes = [node("Relu", ["input"], ["output"], name="relu")]
    g = graph(nodes, inputs=[value_info("input", [0, 4], dim_params={0: "N"})],
              outputs=[value_info("output", [0, 4], dim_params={0: "N"})],
              name="dynamic")
    return model(g)


def old_opset_onnx() -> bytes:
    nodes = [node("Relu", ["input"], ["output"], name="relu")]
    g = graph(nodes, inputs=[value_info("input", [1, 4])],
              outputs=[value_info("output", [1, 4])], name="old")
    return model(g, opset=9)
