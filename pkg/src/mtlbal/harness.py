"""Experiment orchestration: configure, train, trace, evaluate, compare.

A run is fully determined by its config: the dataset comes from the seed,
parameter init and batch order come from purpose-derived sub-streams of the
same seed, and every emitted byte is reproducible (wall-clock duration is
kept only on the in-memory result). Weights for iteration t are computed
from the losses measured at t, before the optimizer step.

Distinct (config, seed) runs are independent; each run is sequential over
iterations. Comparison tables are assembled in (config, seed) order.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import network
from .balancers import (
    BALANCER_NAMES,
    EPS_FLOOR,
    LossVector,
    combine,
    make_balancer,
    snapshot,
)
from .metrics import (
    Trace,
    TraceRow,
    ccc,
    coefficient_spikiness,
    composite_score,
    f1_binary,
    f1_macro,
)
from .rng import SplitMix64, derive
from .tasks import Dataset, TaskSpec, generate_mtl, loss_and_grad, specs_from_text, specs_to_text

#: Purpose tag for the batch-sampling stream.
BATCH_STREAM_TAG = 0xBA7C


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


class NumericalAbort(RuntimeError):
    """A run produced a non-finite total loss (CLI exit code 2)."""

    def __init__(self, iteration: int, balancer_snapshot: str, detail: str = ""):
        self.iteration = iteration
        self.balancer_snapshot = balancer_snapshot
        msg = f"non-finite loss at iteration {iteration}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


# Built-in scenarios. celeb-mini: eight binary tasks, one loss-scaled x50,
# mirroring a many-binary-attribute workload with a single dominating task.
# va-mini: an 8-class task plus two regression tasks with one scaled x20,
# mirroring a categorical + two-continuous-output workload.
SCENARIOS = {
    "celeb-mini": tuple(
        TaskSpec("binary-bce", 1, 50.0 if i == 7 else 1.0, f"attr{i}") for i in range(8)
    ),
    "va-mini": (
        TaskSpec("multiclass-ce", 8, 1.0, "emotion"),
        TaskSpec("regression-mse", 1, 1.0, "valence"),
        TaskSpec("regression-mse", 1, 20.0, "arousal"),
    ),
}

OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on; see README for the config-file schema."""

    # Dataset defaults are sized so loss-scale domination is visible at desk
    # scale: independent tasks (relatedness 0) contest the trunk, and 8000
    # samples keep single-task references out of the overfitting regime.
    scenario: str | None = None
    tasks: tuple = ()
    input_dim: int = 32
    n_samples: int = 8000
    relatedness: float = 0.0
    latent_dim: int | None = None
    balancer: str = "ema"
    beta: float = 0.1
    temperature: float = 0.5
    alpha: float = 1.5
    balancer_lr: float = 0.025
    dwema_mode: str = "divide"
    trunk: tuple = (64, 64)
    head_hidden: tuple = (32,)
    optimizer: str = "adam"
    lr: float = 1e-3
    iterations: int = 2000
    batch_size: int = 64
    seed: int = 1
    log_cadence: int = 10
    out_dir: str = "out"
    name: str | None = None

    def validate(self) -> None:
        if self.balancer not in BALANCER_NAMES:
            raise ConfigError(f"balancer must be one of {BALANCER_NAMES}, got {self.balancer!r}")
        if bool(self.scenario) == bool(self.tasks):
            raise ConfigError("exactly one of 'scenario' or 'tasks' must be set")
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; have {sorted(SCENARIOS)}")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta must be in (0, 1], got {self.beta}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if self.balancer_lr <= 0 or self.lr <= 0:
            raise ConfigError("learning rates must be positive")
        if self.dwema_mode not in ("divide", "multiply"):
            raise ConfigError(f"dwema_mode must be 'divide' or 'multiply', got {self.dwema_mode!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if self.batch_size < 1 or self.log_cadence < 1:
            raise ConfigError("batch_size and log_cadence must be >= 1")
        if not self.trunk or any(s < 1 for s in self.trunk):
            raise ConfigError("trunk needs at least one positive layer size")
        if any(s < 1 for s in self.head_hidden):
            raise ConfigError("head_hidden sizes must be positive")
        if self.input_dim < 2 or self.n_samples < 1:
            raise ConfigError("input_dim must be >= 2 and n_samples positive")
        if not 0.0 <= self.relatedness <= 1.0:
            raise ConfigError(f"relatedness must be in [0, 1], got {self.relatedness}")

    @property
    def label(self) -> str:
        return self.name if self.name is not None else self.balancer

    def resolved_tasks(self) -> tuple:
        return SCENARIOS[self.scenario] if self.scenario else tuple(self.tasks)


def metric_group(spec: TaskSpec, index: int) -> str:
    """Composite-score group for a task: regressions pool into one mean-CCC
    group, binaries pool into one mean-F1 group, each multiclass task is its
    own F1 group."""
    if spec.kind == "regression-mse":
        return "ccc"
    if spec.kind == "binary-bce":
        return "binary_f1"
    return f"f1_{spec.name or f'task{index}'}"


@dataclass
class TaskResult:
    name: str
    kind: str
    metric: float
    test_loss: float
    group: str


@dataclass
class RunResult:
    """Outcome of one training run."""

    config: ExperimentConfig
    task_results: list
    composite: float
    trace: Trace
    duration_s: float  # in-memory only; never written to output files
    params: network.ModelParams | None = None


def _make_balancer(config: ExperimentConfig):
    return make_balancer(
        config.balancer,
        beta=config.beta,
        temperature=config.temperature,
        alpha=config.alpha,
        learning_rate=config.balancer_lr,
        dwema_mode=config.dwema_mode,
    )


def _generate(config: ExperimentConfig, specs) -> Dataset:
    return generate_mtl(
        seed=config.seed,
        input_dim=config.input_dim,
        n_samples=config.n_samples,
        specs=specs,
        relatedness=config.relatedness,
        latent_dim=config.latent_dim,
    )


def _train(config: ExperimentConfig, data: Dataset, params, balancer):
    """The inner loop shared by multi-task and single-task runs."""
    k = len(data.specs)
    names = tuple(s.name or f"task{i}" for i, s in enumerate(data.specs))
    trace = Trace(task_names=names)
    batch_stream = SplitMix64(derive(config.seed, BATCH_STREAM_TAG))
    moments = network.init_moments(params) if config.optimizer == "adam" else None
    prev_losses: np.ndarray | None = None
    prev2_losses: np.ndarray | None = None

    for t in range(config.iterations):
        index = data.train_index[batch_stream.below(data.train_index.size, config.batch_size)]
        batch = data.batch(index)
        # Divergence shows up as inf/nan and is caught explicitly below, so
        # the float overflow that precedes it is expected, not a warning.
        with np.errstate(over="ignore", invalid="ignore"):
            cache = network.forward_cache(params, batch.inputs)
            loss_list, pred_grads = network.losses_and_pred_grads(cache, batch)
        losses = np.array(loss_list)
        if not np.isfinite(losses).all():
            raise NumericalAbort(t, snapshot(balancer), "per-task loss not finite")

        loss_vec = LossVector(losses, iteration=t)
        grad_norms = None
        if balancer.requires_grad_norms:
            grad_norms = network.shared_layer_grad_norms(
                params, batch, balancer.coefficients(k), cache
            )
        weights = balancer.step(loss_vec, grad_norms)
        total = combine(weights, loss_vec)
        if not np.isfinite(total):
            raise NumericalAbort(t, snapshot(balancer), "weighted total not finite")

        try:
            with np.errstate(over="ignore", invalid="ignore"):
                _, grads = network.backward(
                    params, batch, weights, cache, pred_grads=(loss_list, pred_grads)
                )
                if config.optimizer == "adam":
                    params, moments = network.adam_step(params, grads, moments, config.lr)
                else:
                    params = network.sgd_step(params, grads, config.lr)
        except ValueError as exc:
            raise NumericalAbort(t, snapshot(balancer), str(exc)) from exc

        if t % config.log_cadence == 0 or t == config.iterations - 1:
            if prev_losses is not None and prev2_losses is not None:
                rates = prev_losses / np.maximum(prev2_losses, EPS_FLOOR)
            else:
                rates = np.ones(k)
            trace.append(
                TraceRow(
                    iteration=t,
                    losses=losses,
                    weights=weights.values.copy(),
                    rates=rates,
                    rate_std=float(rates.std()),
                    weighted_total=total,
                )
            )
        prev2_losses = prev_losses
        prev_losses = losses
    return params, trace


def evaluate_model(params, data: Dataset):
    """Per-task test metrics/losses and the composite score.

    Runs with float overflow silenced: a diverged model produces non-finite
    metrics here, which the caller turns into a NumericalAbort.
    """
    test_x = data.inputs[data.test_index]
    results = []
    with np.errstate(over="ignore", invalid="ignore"):
        cache = network.forward_cache(params, test_x)
        for k, spec in enumerate(data.specs):
            out = cache.output(k)
            target = data.targets[k][data.test_index]
            loss_k = loss_and_grad(spec.kind, out, target, spec.loss_scale)[0]
            if spec.kind == "binary-bce":
                metric = f1_binary((out >= 0.5).astype(np.float64), target)
            elif spec.kind == "multiclass-ce":
                metric = f1_macro(np.argmax(out, axis=1), target, spec.output_dim)
            else:
                cols = [ccc(out[:, j], target[:, j]) for j in range(spec.output_dim)]
                metric = float(np.mean(cols))
            results.append(
                TaskResult(
                    name=spec.name or f"task{k}",
                    kind=spec.kind,
                    metric=metric,
                    test_loss=loss_k,
                    group=metric_group(spec, k),
                )
            )
    composite = composite_score([(r.metric, r.group) for r in results])
    return results, composite


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Train with the configured balancer and evaluate on the test split.

    Bitwise deterministic in (config, seed). Raises NumericalAbort with the
    offending iteration and a balancer snapshot if the total loss leaves the
    finite range.
    """
    config.validate()
    started = time.perf_counter()
    specs = config.resolved_tasks()
    data = _generate(config, specs)
    params = network.init_params(
        config.seed, config.input_dim, config.trunk, config.head_hidden, specs
    )
    balancer = _make_balancer(config)
    params, trace = _train(config, data, params, balancer)
    task_results, composite = evaluate_model(params, data)
    if not np.isfinite(composite):
        raise NumericalAbort(config.iterations, snapshot(balancer), "non-finite test metrics")
    return RunResult(
        config=config,
        task_results=task_results,
        composite=composite,
        trace=trace,
        duration_s=time.perf_counter() - started,
        params=params,
    )


def run_single_task(config: ExperimentConfig, task_index: int) -> RunResult:
    """Train a clone of the architecture with only one head attached.

    The dataset and the full-model init come from the same seed streams as
    the multi-task run, so trunk and head k start from identical values; the
    balancer is equal-weights (a single task needs no balancing). Results
    serve as per-task reference losses for normalized-spread evaluation.
    """
    config.validate()
    specs = config.resolved_tasks()
    if not 0 <= task_index < len(specs):
        raise ConfigError(f"task index {task_index} out of range for {len(specs)} tasks")
    started = time.perf_counter()
    data = _generate(config, specs)
    single = Dataset(
        inputs=data.inputs,
        targets=[data.targets[task_index]],
        train_index=data.train_index,
        test_index=data.test_index,
        seed=data.seed,
        specs=(specs[task_index],),
        relatedness=data.relatedness,
        latent_dim=data.latent_dim,
        noise=data.noise,
    )
    full = network.init_params(
        config.seed, config.input_dim, config.trunk, config.head_hidden, specs
    )
    params = network.ModelParams(trunk=full.trunk, heads=[full.heads[task_index]])
    balancer = make_balancer("baseline")
    params, trace = _train(config, single, params, balancer)
    task_results, composite = evaluate_model(params, single)
    if not np.isfinite(composite) or not np.isfinite(task_results[0].test_loss):
        raise NumericalAbort(config.iterations, snapshot(balancer), "non-finite test metrics")
    return RunResult(
        config=config,
        task_results=task_results,
        composite=composite,
        trace=trace,
        duration_s=time.perf_counter() - started,
        params=params,
    )


# ---------------------------------------------------------------------------
# Comparison across balancers and hyperparameter sweeps.
# ---------------------------------------------------------------------------

#: Config fields the methods under comparison must agree on.
_SHARED_FIELDS = (
    "scenario",
    "tasks",
    "input_dim",
    "n_samples",
    "relatedness",
    "latent_dim",
    "trunk",
    "head_hidden",
    "optimizer",
    "lr",
    "iterations",
    "batch_size",
    "log_cadence",
)


@dataclass
class RunRecord:
    """One (method, seed) cell of a comparison."""

    method: str
    seed: int
    status: str  # "ok" or "failed"
    composite: float | None = None
    task_metrics: list = field(default_factory=list)
    test_losses: list = field(default_factory=list)
    norm_spread: float | None = None
    dominated_norm_loss: float | None = None
    spikiness: float | None = None
    error: str = ""


@dataclass
class MethodSummary:
    method: str
    n_seeds: int
    n_failed: int
    wins: int
    composite_mean: float | None
    composite_std: float | None
    spikiness_mean: float | None
    norm_spread_median: float | None
    dominated_norm_loss_median: float | None
    task_metric_means: list


@dataclass
class ComparisonReport:
    methods: list
    task_names: tuple
    rows: list  # RunRecords in (config, seed) order
    summaries: list
    spread_enabled: bool

    def summary(self, method: str) -> MethodSummary:
        for s in self.summaries:
            if s.method == method:
                return s
        raise KeyError(method)

    def records(self, method: str) -> list:
        return [r for r in self.rows if r.method == method]

    def to_table_text(self) -> str:
        """Stable column order (see README): method, n_seeds, n_failed, wins,
        composite_mean, composite_std, spikiness_mean, norm_spread_median,
        dominated_norm_loss_median, then metric_<task>_mean per task."""
        header = [
            "method",
            "n_seeds",
            "n_failed",
            "wins",
            "composite_mean",
            "composite_std",
            "spikiness_mean",
            "norm_spread_median",
            "dominated_norm_loss_median",
        ] + [f"metric_{n}_mean" for n in self.task_names]
        lines = [",".join(header)]
        for s in self.summaries:
            cells = [
                s.method,
                str(s.n_seeds),
                str(s.n_failed),
                str(s.wins),
                _opt(s.composite_mean),
                _opt(s.composite_std),
                _opt(s.spikiness_mean),
                _opt(s.norm_spread_median),
                _opt(s.dominated_norm_loss_median),
            ] + [_opt(v) for v in s.task_metric_means]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _opt(value) -> str:
    return "" if value is None else f"{float(value):.17g}"


def _dominant_index(specs) -> int | None:
    """Index of the unique largest loss_scale, or None if there is a tie."""
    scales = [s.loss_scale for s in specs]
    top = max(scales)
    holders = [i for i, s in enumerate(scales) if s == top]
    return holders[0] if len(holders) == 1 else None


def compare(configs, seeds, normalized_spread: bool = True) -> ComparisonReport:
    """Run every (config, seed) pair and tabulate per-method statistics.

    The configs must differ only in balancer settings (enforced). With
    `normalized_spread`, single-task reference runs are trained once per
    (seed, task) and each method's final per-task test losses are divided by
    them; the spread is max/min of those normalized losses and the dominated
    statistic is the worst normalized loss among non-dominant tasks. A run
    that aborts numerically is marked failed and the comparison proceeds.
    """
    configs = list(configs)
    seeds = list(seeds)
    if not configs or not seeds:
        raise ConfigError("compare needs at least one config and one seed")
    for cfg in configs:
        cfg.validate()
    base = configs[0]
    for cfg in configs[1:]:
        for fld in _SHARED_FIELDS:
            if getattr(cfg, fld) != getattr(base, fld):
                raise ConfigError(
                    f"configs must differ only in balancer settings; {fld!r} differs"
                )
    labels = [cfg.label for cfg in configs]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"config labels must be unique, got {labels}")

    specs = base.resolved_tasks()
    task_names = tuple(s.name or f"task{i}" for i, s in enumerate(specs))
    dominant = _dominant_index(specs)

    # Reference runs follow the same failed-run policy: a seed whose
    # single-task references abort simply has no spread statistics.
    references: dict[int, np.ndarray | None] = {}
    if normalized_spread:
        for seed in seeds:
            ref_cfg = dataclasses.replace(base, seed=seed)
            try:
                refs = [
                    run_single_task(ref_cfg, k).task_results[0].test_loss
                    for k in range(len(specs))
                ]
            except NumericalAbort:
                references[seed] = None
                continue
            references[seed] = np.maximum(np.array(refs), EPS_FLOOR)

    rows = []
    for cfg, label in zip(configs, labels):
        for seed in seeds:
            run_cfg = dataclasses.replace(cfg, seed=seed)
            try:
                result = run_experiment(run_cfg)
            except NumericalAbort as exc:
                rows.append(RunRecord(method=label, seed=seed, status="failed", error=str(exc)))
                continue
            losses = np.array([t.test_loss for t in result.task_results])
            record = RunRecord(
                method=label,
                seed=seed,
                status="ok",
                composite=result.composite,
                task_metrics=[t.metric for t in result.task_results],
                test_losses=losses.tolist(),
                spikiness=coefficient_spikiness(result.trace),
            )
            if normalized_spread and references[seed] is not None:
                norm = losses / references[seed]
                record.norm_spread = float(norm.max() / max(norm.min(), EPS_FLOOR))
                others = np.delete(norm, dominant) if dominant is not None else norm
                if others.size == 0:  # single-task comparison has no "others"
                    others = norm
                record.dominated_norm_loss = float(others.max())
            rows.append(record)

    summaries = []
    wins = {label: 0 for label in labels}
    for seed in seeds:
        ok = [r for r in rows if r.seed == seed and r.status == "ok"]
        if ok:
            best = max(r.composite for r in ok)
            for r in ok:
                if r.composite == best:
                    wins[r.method] += 1
    for label in labels:
        recs = [r for r in rows if r.method == label]
        ok = [r for r in recs if r.status == "ok"]
        comp = np.array([r.composite for r in ok])
        spreads = [r.norm_spread for r in ok if r.norm_spread is not None]
        dominated = [r.dominated_norm_loss for r in ok if r.dominated_norm_loss is not None]
        summaries.append(
            MethodSummary(
                method=label,
                n_seeds=len(recs),
                n_failed=len(recs) - len(ok),
                wins=wins[label],
                composite_mean=float(comp.mean()) if ok else None,
                composite_std=float(comp.std()) if ok else None,
                spikiness_mean=float(np.mean([r.spikiness for r in ok])) if ok else None,
                norm_spread_median=float(np.median(spreads)) if spreads else None,
                dominated_norm_loss_median=float(np.median(dominated)) if dominated else None,
                task_metric_means=[
                    float(np.mean([r.task_metrics[i] for r in ok])) if ok else None
                    for i in range(len(task_names))
                ],
            )
        )
    return ComparisonReport(
        methods=labels,
        task_names=task_names,
        rows=rows,
        summaries=summaries,
        spread_enabled=normalized_spread,
    )


SWEEPABLE = {"beta": "beta", "temperature": "temperature", "alpha": "alpha", "lr": "balancer_lr"}


@dataclass
class SweepReport:
    parameter: str
    values: list
    comparison: ComparisonReport

    def to_table_text(self) -> str:
        """Columns: parameter, value, n_seeds, n_failed, wins, composite_mean,
        composite_std, spikiness_mean."""
        lines = ["parameter,value,n_seeds,n_failed,wins,composite_mean,composite_std,spikiness_mean"]
        for value, summary in zip(self.values, self.comparison.summaries):
            lines.append(
                ",".join(
                    [
                        self.parameter,
                        f"{float(value):.17g}",
                        str(summary.n_seeds),
                        str(summary.n_failed),
                        str(summary.wins),
                        _opt(summary.composite_mean),
                        _opt(summary.composite_std),
                        _opt(summary.spikiness_mean),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def sweep(config: ExperimentConfig, parameter: str, values, seeds) -> SweepReport:
    """Grid the config over one balancer hyperparameter and compare the cells.

    Normalized-spread references are skipped (sweeps measure performance and
    coefficient spikiness per cell, not transfer).
    """
    if parameter not in SWEEPABLE:
        raise ConfigError(f"parameter must be one of {sorted(SWEEPABLE)}, got {parameter!r}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    fld = SWEEPABLE[parameter]
    variants = [
        dataclasses.replace(config, **{fld: v}, name=f"{parameter}={float(v):g}") for v in values
    ]
    report = compare(variants, seeds, normalized_spread=False)
    return SweepReport(parameter=parameter, values=values, comparison=report)


# ---------------------------------------------------------------------------
# Config-file schema (key = value text) and run outputs.
# ---------------------------------------------------------------------------

_INT_KEYS = {"input_dim", "n_samples", "iterations", "batch_size", "seed", "log_cadence", "latent_dim"}
_FLOAT_KEYS = {"relatedness", "beta", "temperature", "alpha", "balancer_lr", "lr"}
_STR_KEYS = {"scenario", "balancer", "dwema_mode", "optimizer", "out_dir", "name"}
_TUPLE_KEYS = {"trunk", "head_hidden"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse key = value config text; unknown keys are rejected."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key == "tasks":
                values[key] = specs_from_text(val)
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _TUPLE_KEYS:
                values[key] = tuple(int(p) for p in val.split(",") if p.strip()) if val else ()
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    config = ExperimentConfig(**values)
    config.validate()
    return config


def config_to_text(config: ExperimentConfig) -> str:
    """Canonical echo of a config; parse_config inverts it."""
    lines = []
    if config.scenario is not None:
        lines.append(f"scenario = {config.scenario}")
    if config.tasks:
        lines.append(f"tasks = {specs_to_text(config.tasks)}")
    lines += [
        f"input_dim = {config.input_dim}",
        f"n_samples = {config.n_samples}",
        f"relatedness = {config.relatedness:.17g}",
    ]
    if config.latent_dim is not None:
        lines.append(f"latent_dim = {config.latent_dim}")
    lines += [
        f"balancer = {config.balancer}",
        f"beta = {config.beta:.17g}",
        f"temperature = {config.temperature:.17g}",
        f"alpha = {config.alpha:.17g}",
        f"balancer_lr = {config.balancer_lr:.17g}",
        f"dwema_mode = {config.dwema_mode}",
        "trunk = " + ",".join(str(s) for s in config.trunk),
        "head_hidden = " + ",".join(str(s) for s in config.head_hidden),
        f"optimizer = {config.optimizer}",
        f"lr = {config.lr:.17g}",
        f"iterations = {config.iterations}",
        f"batch_size = {config.batch_size}",
        f"seed = {config.seed}",
        f"log_cadence = {config.log_cadence}",
        f"out_dir = {config.out_dir}",
    ]
    if config.name is not None:
        lines.append(f"name = {config.name}")
    return "\n".join(lines) + "\n"


def result_to_json(result: RunResult) -> str:
    """Structured run summary; deterministic bytes (no wall-clock)."""
    payload = {
        "balancer": result.config.balancer,
        "scenario": result.config.scenario,
        "seed": result.config.seed,
        "iterations": result.config.iterations,
        "composite": result.composite,
        "trace_rows": len(result.trace),
        "tasks": [
            {
                "name": t.name,
                "kind": t.kind,
                "group": t.group,
                "metric": t.metric,
                "test_loss": t.test_loss,
            }
            for t in result.task_results
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
