"""Synthetic multi-task problems with a controllable loss-scale imbalance.

A shared nonlinear map feeds every task: inputs x are standard normal, the
latent representation is tanh(x @ B), and task k's pre-activation targets are
latent @ W_k plus Gaussian noise. `relatedness` linearly interpolates W_k
between one matrix common to all tasks (1.0) and fully independent matrices
(0.0). Regression targets are then multiplied by the task's `loss_scale`
(the dominance knob); binary targets are thresholded at zero; multiclass
targets are the argmax column.

Everything is drawn from one splitmix64 stream in a fixed, documented order
(inputs, B, W_common, each W_indep, noise, split permutation), so a Dataset
is a pure function of its arguments. Datasets are immutable after creation
and freely shareable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .rng import SplitMix64, derive

TASK_KINDS = ("regression-mse", "binary-bce", "multiclass-ce")

#: Noise std as a fraction of each task's pre-activation target std.
NOISE_FRACTION = 0.1

#: Purpose tag for deriving the data-generation stream from the run seed.
DATA_STREAM_TAG = 0xDA7A


@dataclass(frozen=True)
class TaskSpec:
    """One task: its loss kind, output width, dominance multiplier, and label."""

    kind: str
    output_dim: int = 1
    loss_scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"kind must be one of {TASK_KINDS}, got {self.kind!r}")
        if self.output_dim < 1:
            raise ValueError(f"output_dim must be positive, got {self.output_dim}")
        if self.kind == "multiclass-ce" and self.output_dim < 2:
            raise ValueError("multiclass-ce needs output_dim >= 2")
        if not (np.isfinite(self.loss_scale) and self.loss_scale > 0):
            raise ValueError(f"loss_scale must be positive, got {self.loss_scale}")
        bad = set(self.name) & set(":;,= \t\n")
        if bad:
            raise ValueError(f"task name {self.name!r} contains reserved characters {bad}")


class Batch(NamedTuple):
    """A slice of a Dataset: inputs, per-task target blocks, and their specs."""

    inputs: np.ndarray
    targets: list
    specs: tuple


@dataclass
class Dataset:
    """Sampled inputs/targets for K tasks plus a train/test index split."""

    inputs: np.ndarray
    targets: list
    train_index: np.ndarray
    test_index: np.ndarray
    seed: int
    specs: tuple
    relatedness: float
    latent_dim: int
    noise: float = NOISE_FRACTION

    def batch(self, index: np.ndarray) -> Batch:
        return Batch(self.inputs[index], [t[index] for t in self.targets], self.specs)

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]


def generate_mtl(
    seed: int,
    input_dim: int,
    n_samples: int,
    specs,
    relatedness: float,
    latent_dim: int | None = None,
    noise: float = NOISE_FRACTION,
) -> Dataset:
    """Generate a synthetic multi-task dataset; see the module docstring.

    The noise block is drawn once with one column per output unit of the
    widest task and shared across tasks (task k reads its first output_dim
    columns), so tasks with identical specs receive identical noise, and at
    relatedness 1 their target blocks are identical before scaling.
    """
    specs = tuple(specs)
    k = len(specs)
    if k < 1:
        raise ValueError("need at least one task spec")
    if input_dim < 2:
        raise ValueError(f"input_dim must be >= 2, got {input_dim}")
    if n_samples < 10 * k:
        raise ValueError(f"need n_samples >= 10*K = {10 * k}, got {n_samples}")
    if not 0.0 <= relatedness <= 1.0:
        raise ValueError(f"relatedness must be in [0, 1], got {relatedness}")
    if latent_dim is None:
        latent_dim = input_dim
    if latent_dim < 1:
        raise ValueError(f"latent_dim must be positive, got {latent_dim}")

    stream = SplitMix64(derive(seed, DATA_STREAM_TAG))
    x = stream.normal((n_samples, input_dim))
    b = stream.normal((input_dim, latent_dim)) / np.sqrt(input_dim)
    max_out = max(s.output_dim for s in specs)
    w_common = stream.normal((latent_dim, max_out)) / np.sqrt(latent_dim)
    w_indep = [stream.normal((latent_dim, s.output_dim)) / np.sqrt(latent_dim) for s in specs]
    noise_block = stream.normal((n_samples, max_out))

    latent = np.tanh(x @ b)
    targets = []
    for spec, w_k in zip(specs, w_indep):
        w = relatedness * w_common[:, : spec.output_dim] + (1.0 - relatedness) * w_k
        pre = latent @ w
        sigma = noise * float(pre.std())
        noisy = pre + sigma * noise_block[:, : spec.output_dim]
        if spec.kind == "regression-mse":
            targets.append(noisy * spec.loss_scale)
        elif spec.kind == "binary-bce":
            targets.append((noisy > 0).astype(np.float64))
        else:
            targets.append(np.argmax(noisy, axis=1).astype(np.int64))

    perm = stream.permutation(n_samples)
    n_train = int(0.8 * n_samples)
    train_index = np.sort(perm[:n_train])
    test_index = np.sort(perm[n_train:])
    return Dataset(
        inputs=x,
        targets=targets,
        train_index=train_index,
        test_index=test_index,
        seed=seed,
        specs=specs,
        relatedness=relatedness,
        latent_dim=latent_dim,
        noise=noise,
    )


_CLAMP = 1e-12


def loss_and_grad(kind: str, predictions: np.ndarray, targets: np.ndarray, loss_scale: float = 1.0):
    """Mean-over-batch loss times loss_scale, and its gradient in predictions.

    The unscaled loss and gradient are computed first and multiplied by
    loss_scale at the end, so scaling is exactly linear. Probabilities are
    clamped to [1e-12, 1 - 1e-12] before any logarithm or reciprocal.

    - regression-mse: mean squared error over all elements
    - binary-bce: per-element binary cross entropy on (0,1) probabilities
    - multiclass-ce: cross entropy of row-simplex predictions against
      integer class targets (one label per row)
    """
    p = np.asarray(predictions, dtype=np.float64)
    if kind == "regression-mse":
        y = np.asarray(targets, dtype=np.float64)
        if p.shape != y.shape:
            raise ValueError(f"shape mismatch: predictions {p.shape} vs targets {y.shape}")
        diff = p - y
        base = float(np.mean(diff * diff))
        grad = (2.0 / diff.size) * diff
    elif kind == "binary-bce":
        y = np.asarray(targets, dtype=np.float64)
        if p.shape != y.shape:
            raise ValueError(f"shape mismatch: predictions {p.shape} vs targets {y.shape}")
        pc = np.clip(p, _CLAMP, 1.0 - _CLAMP)
        base = float(np.mean(-(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))))
        grad = (-y / pc + (1.0 - y) / (1.0 - pc)) / pc.size
    elif kind == "multiclass-ce":
        y = np.asarray(targets).reshape(-1)
        if p.ndim != 2 or p.shape[0] != y.size:
            raise ValueError(f"predictions {p.shape} do not match {y.size} class labels")
        if y.min() < 0 or y.max() >= p.shape[1]:
            raise ValueError("class labels out of range")
        rows = np.arange(p.shape[0])
        picked = np.clip(p[rows, y], _CLAMP, 1.0 - _CLAMP)
        base = float(np.mean(-np.log(picked)))
        grad = np.zeros_like(p)
        grad[rows, y] = -1.0 / (p.shape[0] * picked)
    else:
        raise ValueError(f"unknown loss kind {kind!r}")
    return loss_scale * base, loss_scale * grad


# ---------------------------------------------------------------------------
# Dataset export/import: header block then comma-delimited rows.
# ---------------------------------------------------------------------------

_DATASET_HEADER = "mtl-dataset v1"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _spec_to_text(spec: TaskSpec) -> str:
    return f"{spec.kind}:{spec.output_dim}:{_fmt(spec.loss_scale)}:{spec.name}"


def _spec_from_text(text: str) -> TaskSpec:
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"malformed task spec {text!r}")
    return TaskSpec(parts[0], int(parts[1]), float(parts[2]), parts[3])


def specs_to_text(specs) -> str:
    return "; ".join(_spec_to_text(s) for s in specs)


def specs_from_text(text: str) -> tuple:
    return tuple(_spec_from_text(p.strip()) for p in text.split(";") if p.strip())


def dataset_to_text(data: Dataset) -> str:
    """Serialize a Dataset to delimited text, exact at 17 significant digits."""
    lines = [
        _DATASET_HEADER,
        f"seed = {data.seed}",
        f"input_dim = {data.input_dim}",
        f"n_samples = {data.n_samples}",
        f"relatedness = {_fmt(data.relatedness)}",
        f"latent_dim = {data.latent_dim}",
        f"noise = {_fmt(data.noise)}",
        f"tasks = {specs_to_text(data.specs)}",
        "train_index = " + ",".join(str(i) for i in data.train_index),
        "test_index = " + ",".join(str(i) for i in data.test_index),
        "data:",
    ]
    for i in range(data.n_samples):
        cells = [_fmt(v) for v in data.inputs[i]]
        for spec, block in zip(data.specs, data.targets):
            if spec.kind == "multiclass-ce":
                cells.append(str(int(block[i])))
            else:
                cells.extend(_fmt(v) for v in np.atleast_1d(block[i]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def dataset_from_text(text: str) -> Dataset:
    """Rebuild a Dataset from `dataset_to_text` output."""
    lines = text.splitlines()
    if not lines or lines[0] != _DATASET_HEADER:
        raise ValueError("not a dataset export (missing header)")
    header: dict[str, str] = {}
    row_start = None
    for idx, ln in enumerate(lines[1:], start=1):
        if ln == "data:":
            row_start = idx + 1
            break
        if " = " not in ln:
            raise ValueError(f"malformed dataset header line: {ln!r}")
        key, value = ln.split(" = ", 1)
        header[key] = value
    if row_start is None:
        raise ValueError("dataset export has no data section")

    try:
        specs = specs_from_text(header["tasks"])
        n_samples = int(header["n_samples"])
        input_dim = int(header["input_dim"])
    except KeyError as exc:
        raise ValueError(f"dataset header missing key {exc}") from exc
    rows = [ln.split(",") for ln in lines[row_start:] if ln]
    if len(rows) != n_samples:
        raise ValueError(f"expected {n_samples} rows, found {len(rows)}")

    inputs = np.empty((n_samples, input_dim))
    targets = [
        np.empty(n_samples, dtype=np.int64)
        if s.kind == "multiclass-ce"
        else np.empty((n_samples, s.output_dim))
        for s in specs
    ]
    for i, cells in enumerate(rows):
        inputs[i] = [float(c) for c in cells[:input_dim]]
        pos = input_dim
        for spec, block in zip(specs, targets):
            if spec.kind == "multiclass-ce":
                block[i] = int(cells[pos])
                pos += 1
            else:
                block[i] = [float(c) for c in cells[pos : pos + spec.output_dim]]
                pos += spec.output_dim
        if pos != len(cells):
            raise ValueError(f"row {i} has {len(cells)} cells, expected {pos}")

    try:
        return Dataset(
            inputs=inputs,
            targets=targets,
            train_index=np.array(
                [int(v) for v in header["train_index"].split(",")], dtype=np.int64
            ),
            test_index=np.array(
                [int(v) for v in header["test_index"].split(",")], dtype=np.int64
            ),
            seed=int(header["seed"]),
            specs=specs,
            relatedness=float(header["relatedness"]),
            latent_dim=int(header["latent_dim"]),
            noise=float(header["noise"]),
        )
    except KeyError as exc:
        raise ValueError(f"dataset header missing key {exc}") from exc
