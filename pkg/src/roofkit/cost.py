"""Per-layer and whole-workload FLOP/byte cost estimation.

Counting conventions, applied uniformly:
  * one FLOP per multiply, add, compare, or activation-table entry;
    a multiply-accumulate is 2 FLOP;
  * memory traffic counts every tensor a layer touches exactly once
    (streaming model, no cache reuse): inputs and weights read, outputs
    written, in bytes of the element type.

All counts are exact integers; arithmetic intensity becomes a float only
at the boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .errors import SchemaError, ShapeMissing, UnsupportedKind, ZeroMemory
from .ir import LayerKind, LayerSpec, ModelGraph, Precision
from .shapes import LayerShapes, ShapedGraph, infer_shapes


class CostMode(Enum):
    Inference = "inference"
    Training = "training"


_DEFAULT_ACT_COSTS = {
    "relu": 1,
    "sigmoid": 4,
    "tanh": 4,
    "hardswish": 3,
    "gelu": 8,
    "erf": 4,
    "exp": 2,
    "scale": 1,   # multiply/divide by a constant
    "shift": 1,   # add a constant
}


@dataclass(frozen=True)
class ActivationCostTable:
    """FLOP charged per element for each named activation function."""

    costs: Mapping[str, int] = field(default_factory=lambda: dict(_DEFAULT_ACT_COSTS))

    def __post_init__(self):
        for name, c in self.costs.items():
            if not isinstance(c, int) or isinstance(c, bool) or c < 0:
                raise SchemaError(f"activation cost for {name!r} must be a non-negative "
                                  f"integer, got {c!r}")
        if self.costs.get("relu", 1) != 1:
            raise SchemaError("the relu activation cost is fixed at 1")

    def cost(self, name: str) -> int:
        try:
            return self.costs[name.lower()]
        except KeyError:
            raise UnsupportedKind(f"no FLOP cost configured for activation {name!r}") from None

    @property
    def c_exp(self) -> int:
        return self.costs["exp"]

    @classmethod
    def from_file(cls, path) -> "ActivationCostTable":
        with open(path, "rb") as f:
            try:
                overrides = json.load(f)
            except json.JSONDecodeError as e:
                raise SchemaError(f"activation cost file {path}: {e}") from None
        if not isinstance(overrides, dict):
            raise SchemaError("activation cost file must be a JSON object")
        merged = dict(_DEFAULT_ACT_COSTS)
        merged.update({str(k).lower(): v for k, v in overrides.items()})
        return cls(merged)


DEFAULT_ACTS = ActivationCostTable()


@dataclass(frozen=True)
class CostBreakdown:
    """FLOP (W) and memory bytes (Q) with their component sub-counts.

    W components: main arithmetic, bias adds, activation evaluations.
    Q components: input reads, weight reads, bias reads, output writes —
    weight and bias bytes are batch-constant, input/output bytes scale
    with batch.
    """

    w_main: int = 0
    w_bias: int = 0
    w_act: int = 0
    q_input: int = 0
    q_weight: int = 0
    q_bias: int = 0
    q_output: int = 0

    @property
    def flop(self) -> int:
        return self.w_main + self.w_bias + self.w_act

    @property
    def mop(self) -> int:
        return self.q_input + self.q_weight + self.q_bias + self.q_output

    @property
    def mop_io(self) -> int:
        """Batch-scaling traffic: input reads plus output writes."""
        return self.q_input + self.q_output

    @property
    def mop_weight(self) -> int:
        """Batch-constant traffic: weight plus bias bytes."""
        return self.q_weight + self.q_bias

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(
            self.w_main + other.w_main, self.w_bias + other.w_bias,
            self.w_act + other.w_act, self.q_input + other.q_input,
            self.q_weight + other.q_weight, self.q_bias + other.q_bias,
            self.q_output + other.q_output)

    def scaled_bytes(self, d: int) -> "CostBreakdown":
        return CostBreakdown(self.w_main, self.w_bias, self.w_act,
                             self.q_input * d, self.q_weight * d,
                             self.q_bias * d, self.q_output * d)


def arithmetic_intensity(cost: CostBreakdown) -> float:
    """FLOP per byte, W/Q."""
    if cost.mop <= 0:
        raise ZeroMemory("arithmetic intensity undefined for zero memory traffic")
    return cost.flop / cost.mop


def _conv_dims(layer: LayerSpec, shapes: LayerShapes):
    (x,) = shapes.inputs
    out = shapes.output
    n, c_in, h_in, w_in = x.dims
    _, c_out, h_out, w_out = out.dims
    k = layer.param("K")
    g = layer.param("g")
    return n, c_in, h_in, w_in, c_out, h_out, w_out, k, g


def conv_forward_cost(layer: LayerSpec, shapes: LayerShapes,
                      precision: Precision,
                      acts: ActivationCostTable = DEFAULT_ACTS) -> CostBreakdown:
    """Inference cost of one Conv2d layer.

    Per output element the convolution performs 2*(C_in/g)*K^2 FLOP of
    multiply-accumulate, one bias add, and c_act activation FLOP; it reads
    the input map, the filter weights and biases once, and writes the
    output map.
    """
    if shapes is None:
        raise ShapeMissing(f"layer {layer.id!r} has no inferred shapes")
    n, c_in, h_in, w_in, c_out, h_out, w_out, k, g = _conv_dims(layer, shapes)
    taps = (c_in // g) * k * k
    out_el = n * c_out * h_out * w_out
    has_bias = bool(layer.param("bias"))
    act = layer.param("act")
    elems = CostBreakdown(
        w_main=2 * out_el * taps,
        w_bias=out_el if has_bias else 0,
        w_act=out_el * acts.cost(act) if act else 0,
        q_input=n * c_in * h_in * w_in,
        q_weight=c_out * taps,
        q_bias=c_out if has_bias else 0,
        q_output=out_el,
    )
    return elems.scaled_bytes(precision.bytes_per_element)


def conv_backward_cost(layer: LayerSpec, shapes: LayerShapes,
                       precision: Precision,
                       acts: ActivationCostTable = DEFAULT_ACTS) -> CostBreakdown:
    """Backward-pass cost of one Conv2d layer: the input-gradient and
    weight-gradient computations, each re-touching activations, gradients
    and weights."""
    if shapes is None:
        raise ShapeMissing(f"layer {layer.id!r} has no inferred shapes")
    n, c_in, h_in, w_in, c_out, h_out, w_out, k, g = _conv_dims(layer, shapes)
    in_el = n * c_in * h_in * w_in
    out_el = n * c_out * h_out * w_out
    has_bias = bool(layer.param("bias"))
    elems = CostBreakdown(
        w_main=2 * in_el * (c_out * k * k) // g + 2 * out_el * ((c_in // g) * k * k),
        q_input=2 * in_el,
        q_weight=2 * c_out * (c_in // g) * k * k,
        q_bias=c_out if has_bias else 0,
        q_output=2 * out_el,
    )
    return elems.scaled_bytes(precision.bytes_per_element)


def _linear_forward(layer: LayerSpec, shapes: LayerShapes, acts: ActivationCostTable) -> CostBreakdown:
    out = shapes.output
    d_out = out.dims[-1]
    rows = out.elements // d_out
    if len(shapes.inputs) == 2:
        x, y = shapes.inputs
        d_in = x.dims[-1]
        act = layer.param("act")
        return CostBreakdown(
            w_main=2 * out.elements * d_in,
            w_act=out.elements * acts.cost(act) if act else 0,
            q_input=x.elements + y.elements,
            q_output=out.elements,
        )
    (x,) = shapes.inputs
    d_in = x.dims[-1]
    has_bias = bool(layer.param("bias"))
    act = layer.param("act")
    return CostBreakdown(
        w_main=2 * rows * d_in * d_out,
        w_bias=rows * d_out if has_bias else 0,
        w_act=rows * d_out * acts.cost(act) if act else 0,
        q_input=x.elements,
        q_weight=d_in * d_out,
        q_bias=d_out if has_bias else 0,
        q_output=out.elements,
    )


def _linear_backward(layer: LayerSpec, shapes: LayerShapes, acts: ActivationCostTable) -> CostBreakdown:
    out = shapes.output
    d_out = out.dims[-1]
    rows = out.elements // d_out
    if len(shapes.inputs) == 2:
        fwd = _linear_forward(layer, shapes, acts)
        return CostBreakdown(
            w_main=2 * fwd.w_main,
            q_input=2 * fwd.q_input,
            q_output=2 * fwd.q_output,
        )
    (x,) = shapes.inputs
    d_in = x.dims[-1]
    has_bias = bool(layer.param("bias"))
    return CostBreakdown(
        w_main=4 * rows * d_in * d_out,
        q_input=2 * x.elements,
        q_weight=2 * d_in * d_out,
        q_bias=d_out if has_bias else 0,
        q_output=2 * out.elements,
    )


def _lstm_dims(layer: LayerSpec, shapes: LayerShapes):
    (x,) = shapes.inputs
    if x.rank == 2:
        n, d = x.dims
        steps = 1
    elif layer.param("seq_first"):
        steps, n, d = x.dims
    else:
        n, steps, d = x.dims
    return n, steps, d, layer.param("h"), layer.param("u")


def _lstm_forward(layer: LayerSpec, shapes: LayerShapes, acts: ActivationCostTable) -> CostBreakdown:
    n, steps, d, h, u = _lstm_dims(layer, shapes)
    c_gate = 3 * acts.cost("sigmoid") + acts.cost("tanh")
    return CostBreakdown(
        w_main=steps * n * (8 * h * (h + d) + 4 * h),
        w_act=steps * n * c_gate * h,
        q_input=steps * n * (d + h),
        q_weight=steps * u * 4 * h * (h + d),
        q_bias=steps * 4 * h,
        q_output=steps * n * 2 * h,
    )


def _attention_forward(layer: LayerSpec, shapes: LayerShapes, acts: ActivationCostTable) -> CostBreakdown:
    (x,) = shapes.inputs
    n, seq, d = x.dims
    heads = layer.param("heads")
    has_bias = bool(layer.param("bias"))
    tokens = n * seq
    scores = n * heads * seq * seq
    proj = CostBreakdown(
        w_main=4 * 2 * tokens * d * d,
        w_bias=4 * tokens * d if has_bias else 0,
        q_input=4 * tokens * d,
        q_weight=4 * d * d,
        q_bias=4 * d if has_bias else 0,
        q_output=4 * tokens * d,
    )
    # score/context matmuls plus a softmax over the score matrix, which is
    # written and re-read on both sides of the softmax
    mix = CostBreakdown(
        w_main=2 * 2 * tokens * seq * d,
        w_act=(acts.c_exp + 2) * scores,
        q_input=2 * scores,
        q_output=2 * scores,
    )
    return proj + mix


def _parameter_free_forward(layer: LayerSpec, shapes: LayerShapes,
                            acts: ActivationCostTable) -> CostBreakdown:
    kind = layer.kind
    out = shapes.output
    in_el = sum(s.elements for s in shapes.inputs)

    if kind is LayerKind.Activation:
        return CostBreakdown(w_act=out.elements * acts.cost(layer.param("act")),
                             q_input=in_el, q_output=out.elements)
    if kind is LayerKind.Pool2d:
        if layer.param("mode") == "global":
            (x,) = shapes.inputs
            window = x.dims[2] * x.dims[3]
        else:
            window = layer.param("K") ** 2
        return CostBreakdown(w_main=out.elements * window,
                             q_input=in_el, q_output=out.elements)
    if kind is LayerKind.Elementwise:
        operand = layer.param("operand")
        if operand is not None:
            # broadcast constant operand: batch-constant bytes
            const_el = 1
            for v in operand:
                const_el *= v
            return CostBreakdown(w_main=out.elements, q_input=in_el,
                                 q_weight=const_el, q_output=out.elements)
        return CostBreakdown(w_main=out.elements, q_input=in_el, q_output=out.elements)
    if kind is LayerKind.Softmax:
        return CostBreakdown(w_main=(acts.c_exp + 2) * out.elements,
                             q_input=in_el, q_output=out.elements)
    if kind is LayerKind.Transpose:
        return CostBreakdown(q_input=in_el, q_output=out.elements)
    if kind is LayerKind.Reshape:
        return CostBreakdown()
    if kind is LayerKind.Concat:
        return CostBreakdown(q_input=in_el, q_output=out.elements)
    raise AssertionError(kind)


_PARAMETER_FREE = {LayerKind.Activation, LayerKind.Pool2d, LayerKind.Elementwise,
                   LayerKind.Softmax, LayerKind.Transpose, LayerKind.Reshape,
                   LayerKind.Concat}


def _forward_elems(layer: LayerSpec, shapes: LayerShapes,
                   acts: ActivationCostTable) -> CostBreakdown:
    kind = layer.kind
    if kind is LayerKind.Linear:
        return _linear_forward(layer, shapes, acts)
    if kind is LayerKind.BatchNorm:
        el = shapes.output.elements
        c = shapes.output.dims[1]
        return CostBreakdown(w_main=2 * el, q_input=el, q_weight=2 * c, q_output=el)
    if kind is LayerKind.LayerNorm:
        el = shapes.output.elements
        d = shapes.output.dims[-1]
        return CostBreakdown(w_main=8 * el, q_input=el, q_weight=2 * d, q_output=el)
    if kind is LayerKind.Embedding:
        el = shapes.output.elements
        return CostBreakdown(q_input=el, q_output=el)
    if kind is LayerKind.LSTMCell:
        return _lstm_forward(layer, shapes, acts)
    if kind is LayerKind.Attention:
        return _attention_forward(layer, shapes, acts)
    if kind in _PARAMETER_FREE:
        return _parameter_free_forward(layer, shapes, acts)
    raise UnsupportedKind(f"layer {layer.id!r}: no cost formula for kind {kind.value}")


def _backward_elems(layer: LayerSpec, shapes: LayerShapes,
                    acts: ActivationCostTable) -> CostBreakdown:
    kind = layer.kind
    if kind is LayerKind.Linear:
        return _linear_backward(layer, shapes, acts)
    if kind is LayerKind.Embedding:
        # gradient rows are read and scattered back into the table
        fwd = _forward_elems(layer, shapes, acts)
        return CostBreakdown(q_input=fwd.q_input, q_output=fwd.q_output)
    if kind in (LayerKind.BatchNorm, LayerKind.LayerNorm, LayerKind.LSTMCell,
                LayerKind.Attention):
        # input-gradient plus weight-gradient passes, each about the size
        # of the forward pass
        fwd = _forward_elems(layer, shapes, acts)
        return CostBreakdown(
            w_main=2 * fwd.w_main, w_bias=2 * fwd.w_bias, w_act=2 * fwd.w_act,
            q_input=2 * fwd.q_input, q_weight=2 * fwd.q_weight,
            q_bias=2 * fwd.q_bias, q_output=2 * fwd.q_output)
    if kind in _PARAMETER_FREE:
        # one gradient op per element; activation traffic doubles
        fwd = _forward_elems(layer, shapes, acts)
        return CostBreakdown(
            w_main=fwd.w_main, w_act=fwd.w_act,
            q_input=2 * fwd.q_input, q_output=2 * fwd.q_output)
    raise UnsupportedKind(f"layer {layer.id!r}: no backward formula for kind {kind.value}")


def layer_cost(layer: LayerSpec, shapes: LayerShapes, mode: CostMode,
               precision: Precision,
               acts: ActivationCostTable = DEFAULT_ACTS) -> CostBreakdown:
    """Cost of one shaped layer; Training adds the backward pass."""
    if shapes is None:
        raise ShapeMissing(f"layer {layer.id!r} has no inferred shapes")
    if not isinstance(layer.kind, LayerKind):
        raise UnsupportedKind(f"layer {layer.id!r}: unknown kind {layer.kind!r}")
    if layer.kind is LayerKind.Conv2d:
        cost = conv_forward_cost(layer, shapes, precision, acts)
        if mode is CostMode.Training:
            cost = cost + conv_backward_cost(layer, shapes, precision, acts)
        return cost
    elems = _forward_elems(layer, shapes, acts)
    if mode is CostMode.Training:
        elems = elems + _backward_elems(layer, shapes, acts)
    return elems.scaled_bytes(precision.bytes_per_element)


@dataclass(frozen=True)
class WorkloadCost:
    per_layer: Mapping[str, CostBreakdown]
    total: CostBreakdown
    mode: CostMode
    batch: int
    precision: Precision

    @property
    def ai(self) -> float:
        return arithmetic_intensity(self.total)


def aggregate_workload(shaped: ShapedGraph, mode: CostMode = CostMode.Inference,
                       precision: Precision | None = None,
                       acts: ActivationCostTable = DEFAULT_ACTS) -> WorkloadCost:
    """Sum exact per-layer costs over the whole graph."""
    if precision is None:
        precision = shaped.graph.precision
    per_layer: dict[str, CostBreakdown] = {}
    total = CostBreakdown()
    for layer in shaped.graph.layers:
        try:
            c = layer_cost(layer, shaped.shapes[layer.id], mode, precision, acts)
        except KeyError:
            raise ShapeMissing(f"layer {layer.id!r} has no inferred shapes") from None
        except UnsupportedKind as e:
            raise UnsupportedKind(f"layer {layer.id!r}: {e}") from None
        per_layer[layer.id] = c
        total = total + c
    return WorkloadCost(per_layer=per_layer, total=total, mode=mode,
                        batch=shaped.batch, precision=precision)


@dataclass(frozen=True)
class BatchSweepRow:
    batch: int
    ai: float
    flop: int
    mop: int


@dataclass(frozen=True)
class BatchSweep:
    rows: tuple[BatchSweepRow, ...]
    ai_limit: float
    weight_fraction: float

    def __iter__(self):
        return iter(self.rows)


def batch_ai_sweep(graph: ModelGraph, batches: Sequence[int],
                   mode: CostMode = CostMode.Inference,
                   precision: Precision | None = None,
                   acts: ActivationCostTable = DEFAULT_ACTS) -> BatchSweep:
    """AI as a function of batch size.

    The reported limit is the large-batch asymptote: per-sample FLOP over
    per-sample input/output bytes, with batch-constant weight bytes
    excluded. weight_fraction is the weight share of all traffic at
    batch 1.
    """
    if not batches:
        raise SchemaError("batches must be a non-empty list")
    for b in batches:
        if not isinstance(b, int) or b < 1:
            raise SchemaError(f"batch sizes must be positive integers, got {b!r}")
    unit = aggregate_workload(infer_shapes(graph, 1), mode, precision, acts).total
    if unit.mop_io <= 0:
        raise ZeroMemory("AI limit undefined: workload moves no per-sample bytes")
    ai_limit = unit.flop / unit.mop_io
    weight_fraction = unit.mop_weight / unit.mop
    rows = []
    for b in batches:
        total = aggregate_workload(infer_shapes(graph, b), mode, precision, acts).total
        rows.append(BatchSweepRow(batch=b, ai=arithmetic_intensity(total),
                                  flop=total.flop, mop=total.mop))
    return BatchSweep(rows=tuple(rows), ai_limit=ai_limit, weight_fraction=weight_fraction)
