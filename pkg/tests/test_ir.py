import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roofkit.errors import (CyclicGraph, DanglingInput, SchemaError, UnknownKind)
from roofkit.ir import (LayerKind, LayerSpec, ModelGraph, Precision, TensorShape,
                        build_graph, parse_model, serialize, topological_order)


def conv_doc(**overrides):
    doc = {
        "name": "tiny",
        "precision": "FP32",
        "default_batch": 1,
        "inputs": {"conv1": [1, 3, 8, 8]},
        "layers": [
            {"id": "conv1", "kind": "Conv2d",
             "params": {"filters": 8, "K": 3, "s": 1, "p": 1}, "inputs": []},
        ],
    }
    doc.update(overrides)
    return doc


def test_parse_minimal_conv():
    g = parse_model(json.dumps(conv_doc()))
    assert len(g.layers) == 1
    layer = g.layer("conv1")
    assert layer.kind is LayerKind.Conv2d
    assert layer.param("filters") == 8
    assert layer.param("g") == 1  # default materialized
    assert g.input_shapes["conv1"].dims == (1, 3, 8, 8)
    assert g.precision is Precision.FP32


def test_parse_rejects_unknown_top_level_field():
    with pytest.raises(SchemaError):
        parse_model(json.dumps(conv_doc(extra_field=1)))


def test_parse_rejects_unknown_layer_field():
    doc = conv_doc()
    doc["layers"][0]["comment"] = "nope"
    with pytest.raises(SchemaError):
        parse_model(json.dumps(doc))


def test_parse_rejects_unknown_kind():
    doc = conv_doc()
    doc["layers"][0]["kind"] = "FancyConv"
    with pytest.raises(UnknownKind):
        parse_model(json.dumps(doc))


def test_parse_rejects_unknown_param():
    doc = conv_doc()
    doc["layers"][0]["params"]["window"] = 3
    with pytest.raises(SchemaError):
        parse_model(json.dumps(doc))


def test_parse_rejects_missing_required_param():
    doc = conv_doc()
    del doc["layers"][0]["params"]["K"]
    with pytest.raises(SchemaError):
        parse_model(json.dumps(doc))


def test_dangling_input():
    doc = conv_doc()
    doc["layers"].append({"id": "B", "kind": "Activation",
                          "params": {"act": "relu"}, "inputs": ["Z"]})
    with pytest.raises(DanglingInput):
        parse_model(json.dumps(doc))


def test_two_cycle():
    doc = conv_doc()
    doc["inputs"] = {}
    doc["layers"] = [
        {"id": "a", "kind": "Activation", "params": {"act": "relu"}, "inputs": ["b"]},
        {"id": "b", "kind": "Activation", "params": {"act": "relu"}, "inputs": ["a"]},
    ]
    with pytest.raises(CyclicGraph):
        parse_model(json.dumps(doc))


def test_duplicate_ids_rejected():
    doc = conv_doc()
    doc["layers"].append(dict(doc["layers"][0]))
    with pytest.raises(SchemaError):
        parse_model(json.dumps(doc))


def test_source_layer_needs_input_shape():
    doc = conv_doc(inputs={})
    with pytest.raises(SchemaError):
        parse_model(json.dumps(doc))


def test_not_json():
    with pytest.raises(SchemaError):
        parse_model("{broken")


def test_bad_precision():
    with pytest.raises(SchemaError):
        parse_model(json.dumps(conv_doc(precision="FP64")))


def test_tensor_shape_invariants():
    with pytest.raises(SchemaError):
        TensorShape(())
    with pytest.raises(SchemaError):
        TensorShape((1, 0, 3))
    assert TensorShape((2, 3, 4)).elements == 24


def test_roundtrip_identity():
    g = parse_model(json.dumps(conv_doc()))
    g2 = parse_model(serialize(g))
    assert g2 == g
    assert serialize(g2) == serialize(g)


def chain(ids):
    layers = [LayerSpec(ids[0], LayerKind.Activation, {"act": "relu"})]
    for prev, cur in zip(ids, ids[1:]):
        layers.append(LayerSpec(cur, LayerKind.Activation, {"act": "relu"}, (prev,)))
    return build_graph("chain", Precision.FP32, 1, layers,
                       {ids[0]: TensorShape((1, 4))})


def test_topo_chain():
    g = chain(["A", "B", "C"])
    assert topological_order(g) == ["A", "B", "C"]


def test_topo_diamond_tie_break():
    layers = [
        LayerSpec("A", LayerKind.Activation, {"act": "relu"}),
        LayerSpec("B", LayerKind.Activation, {"act": "relu"}, ("A",)),
        LayerSpec("C", LayerKind.Activation, {"act": "relu"}, ("A",)),
        LayerSpec("D", LayerKind.Elementwise, {}, ("B", "C")),
    ]
    g = build_graph("diamond", Precision.FP32, 1, layers, {"A": TensorShape((1, 4))})
    assert topological_order(g) == ["A", "B", "C", "D"]
    # declaration order decides ties: declare C before B
    layers2 = [layers[0], layers[2], layers[1], layers[3]]
    g2 = build_graph("diamond", Precision.FP32, 1, layers2, {"A": TensorShape((1, 4))})
    assert topological_order(g2) == ["A", "C", "B", "D"]


@st.composite
def random_dags(draw):
    n = draw(st.integers(min_value=1, max_value=12))
    ids = [f"n{i}" for i in range(n)]
    layers = []
    shapes = {}
    for i, lid in enumerate(ids):
        # edges only point backward in declaration order: acyclic by construction
        candidates = ids[:i]
        inputs = draw(st.lists(st.sampled_from(candidates), unique=True, max_size=3)) \
            if candidates else []
        if not inputs:
            shapes[lid] = TensorShape((1, 4))
        layers.append(LayerSpec(lid, LayerKind.Concat if len(inputs) > 1
                                else LayerKind.Activation,
                                {"axis": 1} if len(inputs) > 1 else {"act": "relu"},
                                tuple(inputs)))
    return build_graph("dag", Precision.FP32, 1, layers, shapes)


@settings(max_examples=60, deadline=None)
@given(random_dags())
def test_topo_order_respects_edges(g: ModelGraph):
    order = topological_order(g)
    assert sorted(order) == sorted(l.id for l in g.layers)
    pos = {lid: i for i, lid in enumerate(order)}
    for layer in g.layers:
        for ref in layer.inputs:
            assert pos[ref] < pos[layer.id]


@settings(max_examples=40, deadline=None)
@given(random_dags())
def test_roundtrip_random_graphs(g: ModelGraph):
    assert parse_model(serialize(g)) == g
