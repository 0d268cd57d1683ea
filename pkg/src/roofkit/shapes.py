"""Shape inference over a ModelGraph.

Propagates static tensor shapes through the layer DAG for a given batch
size, using the cross-correlation output-size rule for convolutions and
pools: out = floor((in + 2p - dl*(K-1) - 1)/s) + 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import NonPositiveOutput, SchemaError, ShapeMismatch
from .ir import LayerKind, LayerSpec, ModelGraph, TensorShape, topological_order


@dataclass(frozen=True)
class LayerShapes:
    inputs: tuple[TensorShape, ...]
    output: TensorShape


@dataclass(frozen=True)
class ShapedGraph:
    graph: ModelGraph
    batch: int
    shapes: Mapping[str, LayerShapes]

    def layer_shapes(self, layer_id: str) -> LayerShapes:
        return self.shapes[layer_id]


def conv_out_extent(extent: int, k: int, s: int, p: int, dl: int) -> int:
    out = (extent + 2 * p - dl * (k - 1) - 1) // s + 1
    if out < 1:
        raise NonPositiveOutput(
            f"kernel K={k} (dilation {dl}) does not fit input extent {extent} with padding {p}")
    return out


def _require_rank(layer: LayerSpec, shape: TensorShape, rank: int) -> None:
    if shape.rank != rank:
        raise ShapeMismatch(f"layer {layer.id!r} ({layer.kind.value}) needs a rank-{rank} "
                            f"input, got {shape.dims}")


def _broadcast(layer: LayerSpec, a: TensorShape, b: TensorShape) -> TensorShape:
    ra, rb = list(a.dims), list(b.dims)
    while len(ra) < len(rb):
        ra.insert(0, 1)
    while len(rb) < len(ra):
        rb.insert(0, 1)
    out = []
    for x, y in zip(ra, rb):
        if x == y or y == 1:
            out.append(x)
        elif x == 1:
            out.append(y)
        else:
            raise ShapeMismatch(f"layer {layer.id!r}: inputs {a.dims} and {b.dims} "
                                "are not broadcast-compatible")
    return TensorShape(tuple(out))


def _infer_one(layer: LayerSpec, ins: tuple[TensorShape, ...]) -> TensorShape:
    kind = layer.kind

    def need(n):
        if len(ins) != n:
            raise ShapeMismatch(f"layer {layer.id!r} ({kind.value}) takes {n} input(s), got {len(ins)}")

    if kind is LayerKind.Conv2d:
        need(1)
        x = ins[0]
        _require_rank(layer, x, 4)
        n, c_in, h, w = x.dims
        g = layer.param("g")
        filters = layer.param("filters")
        if c_in % g or filters % g:
            raise ShapeMismatch(f"layer {layer.id!r}: groups {g} must divide "
                                f"C_in={c_in} and filters={filters}")
        k, s, p, dl = (layer.param(n_) for n_ in ("K", "s", "p", "dl"))
        return TensorShape((n, filters, conv_out_extent(h, k, s, p, dl),
                            conv_out_extent(w, k, s, p, dl)))

    if kind is LayerKind.Pool2d:
        need(1)
        x = ins[0]
        _require_rank(layer, x, 4)
        n, c, h, w = x.dims
        if layer.param("mode") == "global":
            return TensorShape((n, c, 1, 1))
        k = layer.param("K")
        if k is None:
            raise SchemaError(f"layer {layer.id!r}: Pool2d requires K unless mode is 'global'")
        s, p = layer.param("s"), layer.param("p")
        return TensorShape((n, c, conv_out_extent(h, k, s, p, 1),
                            conv_out_extent(w, k, s, p, 1)))

    if kind is LayerKind.Linear:
        if len(ins) == 1:
            x = ins[0]
            d_out = layer.param("d_out")
            if d_out is None:
                raise SchemaError(f"layer {layer.id!r}: Linear with one input requires d_out")
            return TensorShape(x.dims[:-1] + (d_out,))
        need(2)
        x, y = ins
        if layer.param("d_out") is not None:
            raise SchemaError(f"layer {layer.id!r}: two-input Linear derives d_out from "
                              "its second input")
        if y.rank < 2:
            raise ShapeMismatch(f"layer {layer.id!r}: matmul operand must have rank >= 2, "
                                f"got {y.dims}")
        if x.dims[-1] != y.dims[-2]:
            raise ShapeMismatch(f"layer {layer.id!r}: contraction mismatch "
                                f"{x.dims} x {y.dims}")
        if y.rank > 2 and y.dims[:-2] != x.dims[:y.rank - 2]:
            raise ShapeMismatch(f"layer {layer.id!r}: batched matmul leading dims differ: "
                                f"{x.dims} x {y.dims}")
        return TensorShape(x.dims[:-1] + (y.dims[-1],))

    if kind in (LayerKind.Activation, LayerKind.BatchNorm, LayerKind.Softmax,
                LayerKind.LayerNorm):
        need(1)
        if kind is LayerKind.BatchNorm:
            _require_rank(layer, ins[0], 4)
        return ins[0]

    if kind is LayerKind.Elementwise:
        operand = layer.param("operand")
        if operand is not None:
            need(1)
            return _broadcast(layer, ins[0], TensorShape(tuple(operand)))
        need(2)
        return _broadcast(layer, ins[0], ins[1])

    if kind is LayerKind.Embedding:
        need(1)
        x = ins[0]
        return TensorShape(x.dims + (layer.param("d"),))

    if kind is LayerKind.LSTMCell:
        need(1)
        x = ins[0]
        if x.rank not in (2, 3):
            raise ShapeMismatch(f"layer {layer.id!r}: LSTMCell input must be (N, d) or "
                                f"(N, L, d), got {x.dims}")
        h = layer.param("h")
        if x.rank == 2:
            return TensorShape((x.dims[0], h))
        # seq_first keeps the (L, N, d) layout of sequence-major graphs
        return TensorShape((x.dims[0], x.dims[1], h))

    if kind is LayerKind.Attention:
        need(1)
        x = ins[0]
        _require_rank(layer, x, 3)
        heads = layer.param("heads")
        if x.dims[2] % heads:
            raise ShapeMismatch(f"layer {layer.id!r}: heads {heads} must divide "
                                f"model dim {x.dims[2]}")
        return x

    if kind is LayerKind.Transpose:
        need(1)
        x = ins[0]
        perm = layer.param("perm")
        if perm is None:
            perm = tuple(reversed(range(x.rank)))
        if len(perm) != x.rank:
            raise ShapeMismatch(f"layer {layer.id!r}: perm {perm} does not match rank {x.rank}")
        return TensorShape(tuple(x.dims[i] for i in perm))

    if kind is LayerKind.Reshape:
        need(1)
        x = ins[0]
        target = list(layer.param("shape"))
        resolved = []
        wildcard = None
        for i, v in enumerate(target):
            if v == 0:
                if i >= x.rank:
                    raise ShapeMismatch(f"layer {layer.id!r}: reshape dim {i} copies a "
                                        f"missing input dim")
                resolved.append(x.dims[i])
            elif v == -1:
                wildcard = i
                resolved.append(1)
            else:
                resolved.append(v)
        known = 1
        for v in resolved:
            known *= v
        if wildcard is not None:
            if x.elements % known:
                raise ShapeMismatch(f"layer {layer.id!r}: cannot reshape {x.dims} to {target}")
            resolved[wildcard] = x.elements // known
            known = x.elements
        if known != x.elements:
            raise ShapeMismatch(f"layer {layer.id!r}: reshape {x.dims} -> {target} changes "
                                "element count")
        return TensorShape(tuple(resolved))

    if kind is LayerKind.Concat:
        if len(ins) < 2:
            raise ShapeMismatch(f"layer {layer.id!r}: Concat takes at least 2 inputs")
        axis = layer.param("axis")
        base = ins[0]
        if axis >= base.rank:
            raise ShapeMismatch(f"layer {layer.id!r}: concat axis {axis} out of range "
                                f"for rank {base.rank}")
        total = 0
        for s in ins:
            if s.rank != base.rank or any(
                    i != axis and a != b for i, (a, b) in enumerate(zip(s.dims, base.dims))):
                raise ShapeMismatch(f"layer {layer.id!r}: concat inputs disagree off-axis: "
                                    f"{[t.dims for t in ins]}")
            total += s.dims[axis]
        dims = list(base.dims)
        dims[axis] = total
        return TensorShape(tuple(dims))

    raise AssertionError(f"unhandled kind {kind}")


def infer_shapes(graph: ModelGraph, batch: int | None = None) -> ShapedGraph:
    """Propagate shapes through the graph with dims[0] of every external
    input replaced by `batch` (default: the graph's default batch)."""
    if batch is None:
        batch = graph.default_batch
    if not isinstance(batch, int) or batch < 1:
        raise SchemaError("batch must be a positive integer")
    out_shape: dict[str, TensorShape] = {}
    shapes: dict[str, LayerShapes] = {}
    for lid in topological_order(graph):
        layer = graph.layer(lid)
        if layer.inputs:
            ins = tuple(out_shape[i] for i in layer.inputs)
        else:
            ins = (graph.input_shapes[lid].with_batch(batch),)
        out = _infer_one(layer, ins)
        shapes[lid] = LayerShapes(inputs=ins, output=out)
        out_shape[lid] = out
    return ShapedGraph(graph=graph, batch=batch, shapes=shapes)
