"""Built-in workload graphs for demos, tests and anchors.

The CNN/transformer builders mirror the op-level decomposition a framework
export produces (convolutions without bias followed by separate batch-norm
and activation nodes, matmul + bias-add pairs, erf-based gelu), because
that is the granularity at which traffic is costed.
"""

from __future__ import annotations

from .ir import LayerKind, LayerSpec, ModelGraph, Precision, TensorShape, build_graph


class _Builder:
    def __init__(self, name: str, precision=Precision.FP32, batch: int = 1):
        self.name = name
        self.precision = precision
        self.batch = batch
        self.layers: list[LayerSpec] = []
        self.inputs: dict[str, TensorShape] = {}

    def add(self, lid: str, kind: LayerKind, params: dict | None = None,
            inputs: tuple[str, ...] | list[str] = ()) -> str:
        self.layers.append(LayerSpec(lid, kind, params or {}, tuple(inputs)))
        return lid

    def source(self, lid: str, kind: LayerKind, params: dict, dims: tuple[int, ...]) -> str:
        self.inputs[lid] = TensorShape(dims)
        return self.add(lid, kind, params)

    def build(self) -> ModelGraph:
        return build_graph(self.name, self.precision, self.batch, self.layers, self.inputs)


def tiny_cnn() -> ModelGraph:
    """One 3x3 same-padding conv with bias and relu on a 1x3x8x8 input."""
    b = _Builder("tiny-cnn")
    b.source("conv1", LayerKind.Conv2d,
             {"filters": 8, "K": 3, "s": 1, "p": 1, "act": "relu"}, (1, 3, 8, 8))
    return b.build()


def weight_heavy() -> ModelGraph:
    """Synthetic model whose traffic is ~87% weight bytes at batch 1."""
    b = _Builder("weight-heavy")
    b.source("fc", LayerKind.Linear, {"d_out": 11}, (1, 16))
    return b.build()


def weight_light() -> ModelGraph:
    """Synthetic model whose traffic is ~2% weight bytes at batch 1."""
    b = _Builder("weight-light")
    b.source("conv", LayerKind.Conv2d,
             {"filters": 8, "K": 3, "s": 1, "p": 1, "bias": 1, "act": "relu"},
             (1, 8, 40, 40))
    return b.build()


def resnet50(image: int = 224) -> ModelGraph:
    """The 53-conv bottleneck CNN: bias-free convs, separate BN/ReLU nodes,
    residual adds, global average pool and a 1000-way classifier."""
    b = _Builder("resnet50")
    b.source("conv1", LayerKind.Conv2d,
             {"filters": 64, "K": 7, "s": 2, "p": 3, "bias": 0}, (1, 3, image, image))
    b.add("bn1", LayerKind.BatchNorm, {}, ["conv1"])
    b.add("relu1", LayerKind.Activation, {"act": "relu"}, ["bn1"])
    prev = b.add("maxpool", LayerKind.Pool2d, {"mode": "max", "K": 3, "s": 2, "p": 1},
                 ["relu1"])

    stages = ((64, 256, 3, 1), (128, 512, 4, 2), (256, 1024, 6, 2), (512, 2048, 3, 2))
    for si, (width, out_c, blocks, stride) in enumerate(stages, start=1):
        for bi in range(blocks):
            tag = f"s{si}b{bi}"
            block_in = prev
            s = stride if bi == 0 else 1
            c1 = b.add(f"{tag}_conv1", LayerKind.Conv2d,
                       {"filters": width, "K": 1, "bias": 0}, [block_in])
            n1 = b.add(f"{tag}_bn1", LayerKind.BatchNorm, {}, [c1])
            r1 = b.add(f"{tag}_relu1", LayerKind.Activation, {"act": "relu"}, [n1])
            c2 = b.add(f"{tag}_conv2", LayerKind.Conv2d,
                       {"filters": width, "K": 3, "s": s, "p": 1, "bias": 0}, [r1])
            n2 = b.add(f"{tag}_bn2", LayerKind.BatchNorm, {}, [c2])
            r2 = b.add(f"{tag}_relu2", LayerKind.Activation, {"act": "relu"}, [n2])
            c3 = b.add(f"{tag}_conv3", LayerKind.Conv2d,
                       {"filters": out_c, "K": 1, "bias": 0}, [r2])
            n3 = b.add(f"{tag}_bn3", LayerKind.BatchNorm, {}, [c3])
            if bi == 0:
                dc = b.add(f"{tag}_down_conv", LayerKind.Conv2d,
                           {"filters": out_c, "K": 1, "s": s, "bias": 0}, [block_in])
                shortcut = b.add(f"{tag}_down_bn", LayerKind.BatchNorm, {}, [dc])
            else:
                shortcut = block_in
            a = b.add(f"{tag}_add", LayerKind.Elementwise, {"op": "add"}, [n3, shortcut])
            prev = b.add(f"{tag}_relu3", LayerKind.Activation, {"act": "relu"}, [a])

    g = b.add("gap", LayerKind.Pool2d, {"mode": "global"}, [prev])
    f = b.add("flatten", LayerKind.Reshape, {"shape": [0, -1]}, [g])
    b.add("fc", LayerKind.Linear, {"d_out": 1000, "bias": 1}, [f])
    return b.build()


def lstm_lm(hidden: int = 128, embed: int = 128, seq: int = 28) -> ModelGraph:
    """Two stacked recurrent layers over an embedded token sequence."""
    b = _Builder("lstm-lm")
    b.source("embed", LayerKind.Embedding, {"d": embed}, (1, seq))
    b.add("lstm1", LayerKind.LSTMCell, {"h": hidden}, ["embed"])
    b.add("lstm2", LayerKind.LSTMCell, {"h": hidden}, ["lstm1"])
    return b.build()


def bert_large(seq: int = 128, layers: int = 24, d_model: int = 1024,
               heads: int = 16, d_ffn: int = 4096) -> ModelGraph:
    """Encoder stack at export granularity: matmul + bias-add pairs,
    per-head reshape/transpose, explicit score scaling and erf-gelu."""
    b = _Builder("bert-large")
    d_head = d_model // heads

    b.source("word_embed", LayerKind.Embedding, {"d": d_model}, (1, seq))
    p = b.add("pos_add", LayerKind.Elementwise,
              {"op": "add", "operand": [1, seq, d_model]}, ["word_embed"])
    t = b.add("type_add", LayerKind.Elementwise,
              {"op": "add", "operand": [1, seq, d_model]}, [p])
    x = b.add("embed_ln", LayerKind.LayerNorm, {}, [t])

    def linear(tag: str, src: str, d_out: int) -> str:
        mm = b.add(f"{tag}_mm", LayerKind.Linear, {"d_out": d_out, "bias": 0}, [src])
        return b.add(f"{tag}_bias", LayerKind.Elementwise,
                     {"op": "add", "operand": [d_out]}, [mm])

    for i in range(layers):
        tag = f"l{i}"
        heads_view = [0, seq, heads, d_head]
        q = linear(f"{tag}_q", x, d_model)
        k = linear(f"{tag}_k", x, d_model)
        v = linear(f"{tag}_v", x, d_model)
        qh = b.add(f"{tag}_q_heads", LayerKind.Reshape, {"shape": heads_view}, [q])
        qt = b.add(f"{tag}_q_t", LayerKind.Transpose, {"perm": [0, 2, 1, 3]}, [qh])
        kh = b.add(f"{tag}_k_heads", LayerKind.Reshape, {"shape": heads_view}, [k])
        kt = b.add(f"{tag}_k_t", LayerKind.Transpose, {"perm": [0, 2, 1, 3]}, [kh])
        kt2 = b.add(f"{tag}_k_t2", LayerKind.Transpose, {"perm": [0, 1, 3, 2]}, [kt])
        vh = b.add(f"{tag}_v_heads", LayerKind.Reshape, {"shape": heads_view}, [v])
        vt = b.add(f"{tag}_v_t", LayerKind.Transpose, {"perm": [0, 2, 1, 3]}, [vh])
        scores = b.add(f"{tag}_scores", LayerKind.Linear, {"bias": 0}, [qt, kt2])
        scaled = b.add(f"{tag}_scale", LayerKind.Activation, {"act": "scale"}, [scores])
        probs = b.add(f"{tag}_probs", LayerKind.Softmax, {}, [scaled])
        ctx = b.add(f"{tag}_ctx", LayerKind.Linear, {"bias": 0}, [probs, vt])
        ctx_t = b.add(f"{tag}_ctx_t", LayerKind.Transpose, {"perm": [0, 2, 1, 3]}, [ctx])
        merged = b.add(f"{tag}_ctx_merge", LayerKind.Reshape,
                       {"shape": [0, seq, d_model]}, [ctx_t])
        attn_out = linear(f"{tag}_attn_out", merged, d_model)
        res1 = b.add(f"{tag}_res1", LayerKind.Elementwise, {"op": "add"}, [attn_out, x])
        ln1 = b.add(f"{tag}_ln1", LayerKind.LayerNorm, {}, [res1])

        ff1 = linear(f"{tag}_ffn_in", ln1, d_ffn)
        g1 = b.add(f"{tag}_gelu_div", LayerKind.Activation, {"act": "scale"}, [ff1])
        g2 = b.add(f"{tag}_gelu_erf", LayerKind.Activation, {"act": "erf"}, [g1])
        g3 = b.add(f"{tag}_gelu_shift", LayerKind.Activation, {"act": "shift"}, [g2])
        g4 = b.add(f"{tag}_gelu_mul", LayerKind.Elementwise, {"op": "mul"}, [ff1, g3])
        g5 = b.add(f"{tag}_gelu_half", LayerKind.Activation, {"act": "scale"}, [g4])
        ff2 = linear(f"{tag}_ffn_out", g5, d_model)
        res2 = b.add(f"{tag}_res2", LayerKind.Elementwise, {"op": "add"}, [ff2, ln1])
        x = b.add(f"{tag}_ln2", LayerKind.LayerNorm, {}, [res2])
    return b.build()


def tiny_transformer(seq: int = 16, d_model: int = 32, heads: int = 4) -> ModelGraph:
    """Small single-block model using the aggregate attention kind."""
    b = _Builder("tiny-transformer")
    b.source("embed", LayerKind.Embedding, {"d": d_model}, (1, seq))
    a = b.add("attn", LayerKind.Attention, {"heads": heads}, ["embed"])
    b.add("ln", LayerKind.LayerNorm, {}, [a])
    return b.build()


ZOO = {
    "tiny-cnn": tiny_cnn,
    "weight-heavy": weight_heavy,
    "weight-light": weight_light,
    "resnet50": resnet50,
    "lstm-lm": lstm_lm,
    "bert-large": bert_large,
    "tiny-transformer": tiny_transformer,
}
