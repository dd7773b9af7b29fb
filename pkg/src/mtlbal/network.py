"""Hard-parameter-sharing MLP: a shared dense trunk feeding K task heads.

Forward/backward are written out explicitly in numpy (float64 throughout),
with gradients that are exact derivatives of the weighted total
sum_k weight(k) * loss(k), the weights held constant. The backward pass also
records each task's gradient contribution at the LAST trunk layer, which is
the designated parameter subset for gradient-norm balancing.

Parameters are single-owner during training; reductions happen in a fixed
order, so a fixed seed gives a bitwise-identical trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64, derive
from .tasks import Batch, loss_and_grad

ACTIVATIONS = ("linear", "relu", "sigmoid", "tanh", "softmax")

#: Output activation used for each task kind.
OUTPUT_ACTIVATION = {
    "regression-mse": "linear",
    "binary-bce": "sigmoid",
    "multiclass-ce": "softmax",
}

#: Purpose tag for deriving the parameter-init stream from the run seed.
INIT_STREAM_TAG = 0x1217


def activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "linear":
        return z
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if kind == "tanh":
        return np.tanh(z)
    if kind == "softmax":
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    raise ValueError(f"unknown activation {kind!r}")


def _backprop_activation(upstream: np.ndarray, z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    """Gradient with respect to z given the gradient with respect to a."""
    if kind == "linear":
        return upstream
    if kind == "relu":
        return np.where(z > 0, upstream, 0.0)
    if kind == "sigmoid":
        return upstream * a * (1.0 - a)
    if kind == "tanh":
        return upstream * (1.0 - a * a)
    if kind == "softmax":
        dot = np.sum(upstream * a, axis=1, keepdims=True)
        return a * (upstream - dot)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class DenseLayer:
    """One affine layer: (fan_in, fan_out) weights, bias, activation tag."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ValueError(
                f"layer shapes inconsistent: weight {self.weight.shape}, bias {self.bias.shape}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def fan_in(self) -> int:
        return self.weight.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[1]


@dataclass
class ModelParams:
    """One shared trunk (list of layers) and K per-task head layer lists."""

    trunk: list
    heads: list

    def __post_init__(self):
        if not self.trunk:
            raise ValueError("trunk must have at least one layer")
        if not self.heads or not all(self.heads):
            raise ValueError("need at least one head, each with at least one layer")
        chains = [self.trunk] + [[self.trunk[-1]] + head for head in self.heads]
        for chain in chains:
            for prev, nxt in zip(chain, chain[1:]):
                if prev.fan_out != nxt.fan_in:
                    raise ValueError(
                        f"layer dimension mismatch: {prev.fan_out} feeds {nxt.fan_in}"
                    )

    @property
    def n_tasks(self) -> int:
        return len(self.heads)

    @property
    def input_dim(self) -> int:
        return self.trunk[0].fan_in

    def n_parameters(self) -> int:
        layers = list(self.trunk) + [l for head in self.heads for l in head]
        return sum(l.weight.size + l.bias.size for l in layers)


@dataclass
class LayerGrads:
    weight: np.ndarray
    bias: np.ndarray


@dataclass
class Gradients:
    """Shape-congruent gradients, plus per-task last-trunk-layer contributions."""

    trunk: list
    heads: list
    last_trunk_per_task: list  # K LayerGrads, each already scaled by its weight


def init_params(seed: int, input_dim: int, trunk_sizes, head_hidden, specs) -> ModelParams:
    """He-scaled random init (std sqrt(2/fan_in)), zero biases.

    Draw order: trunk layers first, then each head's layers in task order,
    all from the stream derived from (seed, INIT_STREAM_TAG). Trunk and head
    hidden layers are relu; each head ends in a task-kind output layer.
    """
    stream = SplitMix64(derive(seed, INIT_STREAM_TAG))

    def dense(fan_in: int, fan_out: int, activation: str) -> DenseLayer:
        w = stream.normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        return DenseLayer(w, np.zeros(fan_out), activation)

    trunk = []
    width = input_dim
    for size in trunk_sizes:
        trunk.append(dense(width, size, "relu"))
        width = size
    heads = []
    for spec in specs:
        head = []
        h_width = width
        for size in head_hidden:
            head.append(dense(h_width, size, "relu"))
            h_width = size
        head.append(dense(h_width, spec.output_dim, OUTPUT_ACTIVATION[spec.kind]))
        heads.append(head)
    return ModelParams(trunk=trunk, heads=heads)


@dataclass
class ForwardCache:
    """Every pre-activation and activation from one forward pass."""

    inputs: np.ndarray
    trunk_z: list
    trunk_a: list
    head_z: list  # per task: list of z per layer
    head_a: list

    @property
    def shared(self) -> np.ndarray:
        return self.trunk_a[-1]

    def output(self, task: int) -> np.ndarray:
        return self.head_a[task][-1]


def forward_cache(params: ModelParams, inputs: np.ndarray) -> ForwardCache:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ValueError(f"inputs {x.shape} do not match input_dim {params.input_dim}")
    trunk_z, trunk_a = [], []
    a = x
    for layer in params.trunk:
        z = a @ layer.weight + layer.bias
        a = activate(z, layer.activation)
        trunk_z.append(z)
        trunk_a.append(a)
    head_z, head_a = [], []
    for head in params.heads:
        zs, as_ = [], []
        h = a
        for layer in head:
            z = h @ layer.weight + layer.bias
            h = activate(z, layer.activation)
            zs.append(z)
            as_.append(h)
        head_z.append(zs)
        head_a.append(as_)
    return ForwardCache(inputs=x, trunk_z=trunk_z, trunk_a=trunk_a, head_z=head_z, head_a=head_a)


def forward(params: ModelParams, inputs: np.ndarray):
    """Shared trunk representation and the K task outputs."""
    cache = forward_cache(params, inputs)
    return cache.shared, [cache.output(k) for k in range(params.n_tasks)]


def compute_losses(cache: ForwardCache, batch: Batch) -> list:
    """Raw (unweighted) per-task losses from a forward cache."""
    return [
        loss_and_grad(spec.kind, cache.output(k), batch.targets[k], spec.loss_scale)[0]
        for k, spec in enumerate(batch.specs)
    ]


def losses_and_pred_grads(cache: ForwardCache, batch: Batch):
    """Per-task (loss, d loss / d prediction) pairs from one forward cache."""
    losses, grads = [], []
    for k, spec in enumerate(batch.specs):
        loss_k, g = loss_and_grad(spec.kind, cache.output(k), batch.targets[k], spec.loss_scale)
        losses.append(loss_k)
        grads.append(g)
    return losses, grads


def _check_grad_finite(arr: np.ndarray, where: str) -> None:
    # Sum-based probe: NaN anywhere poisons the sum; avoids a bool temp.
    s = float(arr.sum())
    if s != s:
        raise ValueError(f"NaN gradient in {where}")


def _head_backward(params: ModelParams, cache: ForwardCache, task: int, upstream: np.ndarray):
    """Backprop one head; returns (per-layer LayerGrads, gradient at head input)."""
    head = params.heads[task]
    grads = [None] * len(head)
    g = upstream
    for i in range(len(head) - 1, -1, -1):
        layer = head[i]
        z = cache.head_z[task][i]
        a = cache.head_a[task][i]
        delta = _backprop_activation(g, z, a, layer.activation)
        below = cache.head_a[task][i - 1] if i > 0 else cache.shared
        gw = below.T @ delta
        gb = delta.sum(axis=0)
        _check_grad_finite(gw, f"head[{task}][{i}].weight")
        _check_grad_finite(gb, f"head[{task}][{i}].bias")
        grads[i] = LayerGrads(gw, gb)
        g = delta @ layer.weight.T
    return grads, g


def backward(
    params: ModelParams,
    batch: Batch,
    weights,
    cache: ForwardCache | None = None,
    pred_grads=None,
):
    """Per-task raw losses and exact gradients of the weighted total.

    Losses are returned UNWEIGHTED (balancers consume raw magnitudes); the
    gradients differentiate sum_k weight(k) * loss(k) with the weights as
    constants. Trunk gradients are the sum of per-task contributions; the
    last trunk layer's per-task pieces are kept separately in the result.
    `pred_grads` may carry (losses, d/d prediction) pairs precomputed from
    the same cache via `losses_and_pred_grads`.
    """
    w = np.asarray(getattr(weights, "values", weights), dtype=np.float64)
    if w.shape != (params.n_tasks,):
        raise ValueError(f"need {params.n_tasks} weights, got shape {w.shape}")
    if cache is None:
        cache = forward_cache(params, batch.inputs)
    if pred_grads is None:
        pred_grads = losses_and_pred_grads(cache, batch)
    losses, dpreds = pred_grads

    head_grads = []
    shared_deltas = []
    for k in range(params.n_tasks):
        grads_k, at_input = _head_backward(params, cache, k, w[k] * dpreds[k])
        head_grads.append(grads_k)
        shared_deltas.append(at_input)

    # Last trunk layer: keep per-task contributions before summing.
    last = params.trunk[-1]
    z_last = cache.trunk_z[-1]
    a_last = cache.trunk_a[-1]
    below = cache.trunk_a[-2] if len(params.trunk) > 1 else cache.inputs
    per_task = []
    delta_sum = None
    for k, g in enumerate(shared_deltas):
        delta = _backprop_activation(g, z_last, a_last, last.activation)
        gw = below.T @ delta
        gb = delta.sum(axis=0)
        _check_grad_finite(gw, f"trunk[{len(params.trunk) - 1}].weight (task {k})")
        _check_grad_finite(gb, f"trunk[{len(params.trunk) - 1}].bias (task {k})")
        per_task.append(LayerGrads(gw, gb))
        delta_sum = delta if delta_sum is None else delta_sum + delta
    trunk_grads = [None] * len(params.trunk)
    trunk_grads[-1] = LayerGrads(
        sum(p.weight for p in per_task), sum(p.bias for p in per_task)
    )

    g = delta_sum @ last.weight.T
    for i in range(len(params.trunk) - 2, -1, -1):
        layer = params.trunk[i]
        delta = _backprop_activation(g, cache.trunk_z[i], cache.trunk_a[i], layer.activation)
        below = cache.trunk_a[i - 1] if i > 0 else cache.inputs
        gw = below.T @ delta
        gb = delta.sum(axis=0)
        _check_grad_finite(gw, f"trunk[{i}].weight")
        _check_grad_finite(gb, f"trunk[{i}].bias")
        trunk_grads[i] = LayerGrads(gw, gb)
        g = delta @ layer.weight.T

    grads = Gradients(trunk=trunk_grads, heads=head_grads, last_trunk_per_task=per_task)
    return list(losses), grads


def shared_layer_grad_norms(
    params: ModelParams, batch: Batch, weights, cache: ForwardCache | None = None
) -> np.ndarray:
    """L2 norm of each task's weighted gradient at the last trunk layer.

    Norms cover the layer's weight matrix only (the designated parameter
    subset); each equals ||d(weight(k) * loss(k)) / d W_last||_2 and scales
    linearly in weight(k).
    """
    w = np.asarray(getattr(weights, "values", weights), dtype=np.float64)
    if w.shape != (params.n_tasks,):
        raise ValueError(f"need {params.n_tasks} weights, got shape {w.shape}")
    if cache is None:
        cache = forward_cache(params, batch.inputs)
    last = params.trunk[-1]
    z_last = cache.trunk_z[-1]
    a_last = cache.trunk_a[-1]
    below = cache.trunk_a[-2] if len(params.trunk) > 1 else cache.inputs
    norms = np.empty(params.n_tasks)
    for k, spec in enumerate(batch.specs):
        _, dpred = loss_and_grad(spec.kind, cache.output(k), batch.targets[k], spec.loss_scale)
        _, at_input = _head_backward(params, cache, k, w[k] * dpred)
        delta = _backprop_activation(at_input, z_last, a_last, last.activation)
        norms[k] = np.linalg.norm(below.T @ delta)
    return norms


# ---------------------------------------------------------------------------
# Optimizers.
# ---------------------------------------------------------------------------


def _layer_lists(params: ModelParams):
    return [params.trunk] + params.heads


def _grad_lists(grads: Gradients):
    return [grads.trunk] + grads.heads


def sgd_step(params: ModelParams, grads: Gradients, lr: float) -> ModelParams:
    """Plain gradient descent; returns updated parameters."""
    new_lists = []
    for layers, glayers in zip(_layer_lists(params), _grad_lists(grads)):
        new_lists.append(
            [
                DenseLayer(l.weight - lr * g.weight, l.bias - lr * g.bias, l.activation)
                for l, g in zip(layers, glayers)
            ]
        )
    return ModelParams(trunk=new_lists[0], heads=new_lists[1:])


@dataclass
class AdamMoments:
    """First/second moment estimates, shape-parallel to the parameters."""

    m: list  # nested like [trunk] + heads, each a list of LayerGrads
    v: list
    t: int = 0


def init_moments(params: ModelParams) -> AdamMoments:
    def zeros_like_layers(lists):
        return [
            [LayerGrads(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in layers]
            for layers in lists
        ]

    lists = _layer_lists(params)
    return AdamMoments(m=zeros_like_layers(lists), v=zeros_like_layers(lists), t=0)


def adam_step(
    params: ModelParams,
    grads: Gradients,
    moments: AdamMoments,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """Bias-corrected Adam update; returns (params, moments) with t advanced.

    The moment buffers are updated in place (the returned AdamMoments is the
    advanced view of the same arrays); parameters get fresh arrays.
    """
    t = moments.t + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t

    def advance(m: np.ndarray, v: np.ndarray, g: np.ndarray, p: np.ndarray) -> np.ndarray:
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        return p - lr * (m / c1) / (np.sqrt(v / c2) + eps)

    new_lists = []
    for layers, glayers, ms, vs in zip(
        _layer_lists(params), _grad_lists(grads), moments.m, moments.v
    ):
        new_lists.append(
            [
                DenseLayer(
                    advance(m.weight, v.weight, g.weight, l.weight),
                    advance(m.bias, v.bias, g.bias, l.bias),
                    l.activation,
                )
                for l, g, m, v in zip(layers, glayers, ms, vs)
            ]
        )
    return (
        ModelParams(trunk=new_lists[0], heads=new_lists[1:]),
        AdamMoments(m=moments.m, v=moments.v, t=t),
    )


# ---------------------------------------------------------------------------
# Parameter checkpoints: structured text, exact round-trip.
# ---------------------------------------------------------------------------

_CHECKPOINT_HEADER = "model-checkpoint v1"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def params_to_text(params: ModelParams) -> str:
    lines = [_CHECKPOINT_HEADER, f"heads = {params.n_tasks}"]

    def emit(prefix: str, layers):
        lines.append(f"{prefix}.layers = {len(layers)}")
        for i, l in enumerate(layers):
            lines.append(f"{prefix}{i} = {l.activation} {l.fan_in} {l.fan_out}")
            lines.append(f"{prefix}{i}.weight = " + ",".join(_fmt(v) for v in l.weight.ravel()))
            lines.append(f"{prefix}{i}.bias = " + ",".join(_fmt(v) for v in l.bias))

    emit("trunk", params.trunk)
    for k, head in enumerate(params.heads):
        emit(f"head{k}.", head)
    return "\n".join(lines) + "\n"


def params_from_text(text: str) -> ModelParams:
    lines = text.splitlines()
    if not lines or lines[0] != _CHECKPOINT_HEADER:
        raise ValueError("not a model checkpoint (missing header)")
    fields: dict[str, str] = {}
    for ln in lines[1:]:
        if not ln:
            continue
        if " = " not in ln:
            raise ValueError(f"malformed checkpoint line: {ln!r}")
        key, value = ln.split(" = ", 1)
        fields[key] = value

    def read(prefix: str):
        layers = []
        for i in range(int(fields[f"{prefix}.layers"])):
            activation, fan_in, fan_out = fields[f"{prefix}{i}"].split()
            shape = (int(fan_in), int(fan_out))
            w = np.array(
                [float(v) for v in fields[f"{prefix}{i}.weight"].split(",")]
            ).reshape(shape)
            b = np.array([float(v) for v in fields[f"{prefix}{i}.bias"].split(",")])
            layers.append(DenseLayer(w, b, activation))
        return layers

    trunk = read("trunk")
    heads = [read(f"head{k}.") for k in range(int(fields["heads"]))]
    return ModelParams(trunk=trunk, heads=heads)
