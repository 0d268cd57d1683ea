"""DNN workload graphs: types, the native JSON IR, and graph ordering.

A ModelGraph is a DAG of typed layers plus the shapes of its external
inputs. Graphs are immutable after construction and carry no weight
values; only shape parameters matter for costing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .errors import CyclicGraph, DanglingInput, SchemaError, UnknownKind


class Precision(Enum):
    """Arithmetic precision and its byte width per element."""

    FP32 = 4
    TF32 = 4
    FP16 = 2
    INT8 = 1

    @property
    def bytes_per_element(self) -> int:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "Precision":
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise SchemaError(f"unknown precision {name!r}; expected one of "
                              f"{', '.join(p.name for p in cls)}") from None


class LayerKind(Enum):
    Conv2d = "Conv2d"
    Linear = "Linear"
    Activation = "Activation"
    Pool2d = "Pool2d"
    BatchNorm = "BatchNorm"
    Elementwise = "Elementwise"
    Softmax = "Softmax"
    LayerNorm = "LayerNorm"
    Embedding = "Embedding"
    LSTMCell = "LSTMCell"
    Attention = "Attention"
    Transpose = "Transpose"
    Reshape = "Reshape"
    Concat = "Concat"


@dataclass(frozen=True)
class TensorShape:
    """Ordered positive extents; dims[0] is the batch dimension."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) < 1:
            raise SchemaError("tensor shape needs rank >= 1")
        for d in self.dims:
            if not isinstance(d, int) or d < 1:
                raise SchemaError(f"tensor extents must be positive integers, got {self.dims}")

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def elements(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    def with_batch(self, batch: int) -> "TensorShape":
        return TensorShape((batch,) + self.dims[1:])


# Parameters each kind must carry; everything else kind-specific is optional
# with the defaults below.
_REQUIRED_PARAMS = {
    LayerKind.Conv2d: ("filters", "K"),
    LayerKind.Activation: ("act",),
    LayerKind.Embedding: ("d",),
    LayerKind.LSTMCell: ("h",),
    LayerKind.Attention: ("heads",),
    LayerKind.Reshape: ("shape",),
}

_PARAM_DEFAULTS = {
    LayerKind.Conv2d: {"s": 1, "p": 0, "dl": 1, "g": 1, "bias": 1, "act": None},
    LayerKind.Linear: {"bias": 1, "act": None},
    LayerKind.Pool2d: {"mode": "max", "s": 1, "p": 0},
    LayerKind.Elementwise: {"op": "add", "operand": None},
    LayerKind.LSTMCell: {"u": 1, "seq_first": 0},
    LayerKind.Attention: {"bias": 1},
    LayerKind.Concat: {"axis": 1},
    LayerKind.Transpose: {"perm": None},
}

_ALLOWED_PARAMS = {
    LayerKind.Conv2d: {"filters", "K", "s", "p", "dl", "g", "bias", "act"},
    LayerKind.Linear: {"d_out", "bias", "act"},
    LayerKind.Activation: {"act"},
    LayerKind.Pool2d: {"K", "s", "p", "mode"},
    LayerKind.BatchNorm: set(),
    LayerKind.Elementwise: {"op", "operand"},
    LayerKind.Softmax: set(),
    LayerKind.LayerNorm: set(),
    LayerKind.Embedding: {"d"},
    LayerKind.LSTMCell: {"h", "u", "seq_first"},
    LayerKind.Attention: {"heads", "bias"},
    LayerKind.Transpose: {"perm"},
    LayerKind.Reshape: {"shape"},
    LayerKind.Concat: {"axis"},
}


@dataclass(frozen=True)
class LayerSpec:
    """One layer: unique id, kind, kind-specific params, producer ids."""

    id: str
    kind: LayerKind
    params: Mapping[str, object] = field(default_factory=dict)
    inputs: tuple[str, ...] = ()

    def param(self, name: str, default=None):
        return self.params.get(name, default)


@dataclass(frozen=True)
class ModelGraph:
    name: str
    precision: Precision
    default_batch: int
    layers: tuple[LayerSpec, ...]
    input_shapes: Mapping[str, TensorShape]

    def layer(self, layer_id: str) -> LayerSpec:
        return self._by_id[layer_id]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {l.id: l for l in self.layers})


def _validate_params(layer_id: str, kind: LayerKind, params: dict) -> dict:
    allowed = _ALLOWED_PARAMS[kind]
    unknown = set(params) - allowed
    if unknown:
        raise SchemaError(f"layer {layer_id!r}: unknown param(s) {sorted(unknown)} for {kind.value}")
    for req in _REQUIRED_PARAMS.get(kind, ()):
        if req not in params:
            raise SchemaError(f"layer {layer_id!r}: {kind.value} requires param {req!r}")
    merged = dict(_PARAM_DEFAULTS.get(kind, {}))
    merged.update(params)

    def _check_int(name, minimum):
        if name in merged and merged[name] is not None:
            v = merged[name]
            if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
                raise SchemaError(f"layer {layer_id!r}: param {name!r} must be an integer >= {minimum}")

    for name, minimum in (("filters", 1), ("K", 1), ("s", 1), ("p", 0), ("dl", 1),
                          ("g", 1), ("d", 1), ("d_out", 1), ("h", 1), ("heads", 1),
                          ("u", 1), ("axis", 0), ("seq_first", 0)):
        _check_int(name, minimum)
    if kind is LayerKind.Elementwise and merged.get("operand") is not None:
        dims = merged["operand"]
        if (not isinstance(dims, (list, tuple)) or not dims
                or not all(isinstance(v, int) and v >= 1 for v in dims)):
            raise SchemaError(f"layer {layer_id!r}: Elementwise operand must be a list "
                              "of positive extents")
        merged["operand"] = tuple(dims)
    if kind is LayerKind.Reshape:
        shape = merged["shape"]
        if (not isinstance(shape, (list, tuple)) or not shape
                or not all(isinstance(v, int) for v in shape)):
            raise SchemaError(f"layer {layer_id!r}: Reshape shape must be a list of integers")
        if sum(1 for v in shape if v == -1) > 1:
            raise SchemaError(f"layer {layer_id!r}: Reshape shape allows at most one -1")
        if shape[0] not in (0, -1):
            raise SchemaError(f"layer {layer_id!r}: Reshape leading dim must be 0 (keep batch) or -1")
        merged["shape"] = tuple(shape)
    if kind is LayerKind.Transpose and merged.get("perm") is not None:
        perm = merged["perm"]
        if not isinstance(perm, (list, tuple)) or sorted(perm) != list(range(len(perm))):
            raise SchemaError(f"layer {layer_id!r}: Transpose perm must be a permutation of 0..rank-1")
        merged["perm"] = tuple(perm)
    return merged


def _check_acyclic_and_resolved(layers: Sequence[LayerSpec], input_shapes) -> None:
    ids = [l.id for l in layers]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise SchemaError(f"duplicate layer id(s): {dup}")
    known = set(ids)
    for l in layers:
        for ref in l.inputs:
            if ref not in known:
                raise DanglingInput(f"layer {l.id!r} references undefined input {ref!r}")
        if l.inputs and l.id in input_shapes:
            raise SchemaError(f"layer {l.id!r} has both graph inputs and an external input shape")
    topological_order_of(layers)  # raises CyclicGraph
    sources = [l for l in layers if not l.inputs]
    if layers and not any(l.id in input_shapes for l in sources):
        raise SchemaError("no source layer has an external input shape")
    for l in sources:
        if l.id not in input_shapes:
            raise SchemaError(f"source layer {l.id!r} has no external input shape")
    for ext in input_shapes:
        if ext not in known:
            raise SchemaError(f"input shape given for unknown layer {ext!r}")


def topological_order_of(layers: Sequence[LayerSpec]) -> list[str]:
    """Topological layer ids; ties broken by declaration order."""
    pos = {l.id: i for i, l in enumerate(layers)}
    consumers: dict[str, list[str]] = {l.id: [] for l in layers}
    indeg = {l.id: 0 for l in layers}
    for l in layers:
        for ref in dict.fromkeys(l.inputs):
            consumers[ref].append(l.id)
            indeg[l.id] += 1
    ready = sorted((i for i in indeg if indeg[i] == 0), key=pos.__getitem__)
    order: list[str] = []
    while ready:
        nxt = min(ready, key=pos.__getitem__)
        ready.remove(nxt)
        order.append(nxt)
        for c in consumers[nxt]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) != len(layers):
        stuck = sorted(set(indeg) - set(order))
        raise CyclicGraph(f"dependency cycle through layer(s): {stuck}")
    return order


def topological_order(graph: ModelGraph) -> list[str]:
    return topological_order_of(graph.layers)


_TOP_FIELDS = {"name", "precision", "default_batch", "inputs", "layers"}
_LAYER_FIELDS = {"id", "kind", "params", "inputs"}


def build_graph(name: str, precision: Precision, default_batch: int,
                layers: Sequence[LayerSpec], input_shapes: Mapping[str, TensorShape]) -> ModelGraph:
    """Validate and assemble a ModelGraph from already-typed pieces."""
    if not isinstance(default_batch, int) or default_batch < 1:
        raise SchemaError("default_batch must be a positive integer")
    checked = tuple(
        LayerSpec(l.id, l.kind, _validate_params(l.id, l.kind, dict(l.params)), tuple(l.inputs))
        for l in layers
    )
    shapes = dict(input_shapes)
    _check_acyclic_and_resolved(checked, shapes)
    return ModelGraph(name=name, precision=precision, default_batch=default_batch,
                      layers=checked, input_shapes=shapes)


def parse_model(text: str | bytes | dict) -> ModelGraph:
    """Parse the native JSON IR document into a validated ModelGraph."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaError(f"not valid JSON: {e}") from None
    else:
        doc = text
    if not isinstance(doc, dict):
        raise SchemaError("IR document must be a JSON object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise SchemaError(f"unknown top-level field(s): {sorted(unknown)}")
    missing = _TOP_FIELDS - set(doc)
    if missing:
        raise SchemaError(f"missing top-level field(s): {sorted(missing)}")

    precision = Precision.parse(doc["precision"])
    if not isinstance(doc["inputs"], dict):
        raise SchemaError("'inputs' must map layer ids to shape lists")
    input_shapes = {}
    for lid, dims in doc["inputs"].items():
        if not isinstance(dims, list):
            raise SchemaError(f"input shape for {lid!r} must be a list of extents")
        input_shapes[lid] = TensorShape(tuple(dims))

    if not isinstance(doc["layers"], list):
        raise SchemaError("'layers' must be a list")
    layers = []
    for raw in doc["layers"]:
        if not isinstance(raw, dict):
            raise SchemaError("each layer must be an object")
        unknown = set(raw) - _LAYER_FIELDS
        if unknown:
            raise SchemaError(f"layer has unknown field(s): {sorted(unknown)}")
        if "id" not in raw or "kind" not in raw:
            raise SchemaError("each layer needs 'id' and 'kind'")
        if not isinstance(raw["id"], str) or not raw["id"]:
            raise SchemaError("layer id must be a non-empty string")
        try:
            kind = LayerKind(raw["kind"])
        except ValueError:
            raise UnknownKind(f"layer {raw['id']!r}: unsupported kind {raw['kind']!r}") from None
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise SchemaError(f"layer {raw['id']!r}: params must be an object")
        inputs = raw.get("inputs", [])
        if not isinstance(inputs, list) or not all(isinstance(i, str) for i in inputs):
            raise SchemaError(f"layer {raw['id']!r}: inputs must be a list of ids")
        # lists arrive from JSON; canonicalize tuples inside _validate_params
        layers.append(LayerSpec(raw["id"], kind, params, tuple(inputs)))

    name = doc["name"]
    if not isinstance(name, str):
        raise SchemaError("'name' must be a string")
    return build_graph(name, precision, doc["default_batch"], layers, input_shapes)


def serialize(graph: ModelGraph) -> str:
    """Inverse of parse_model; emits the native JSON IR."""
    doc = {
        "name": graph.name,
        "precision": graph.precision.name,
        "default_batch": graph.default_batch,
        "inputs": {lid: list(shape.dims) for lid, shape in graph.input_shapes.items()},
        "layers": [
            {
                "id": l.id,
                "kind": l.kind.value,
                "params": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in l.params.items() if v is not None},
                "inputs": list(l.inputs),
            }
            for l in graph.layers
        ],
    }
    return json.dumps(doc, indent=2)
