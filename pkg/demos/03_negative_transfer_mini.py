"""Desk-scale look at loss-scale domination and its mitigation.

Trains the celeb-mini scenario (eight binary tasks, one loss-scaled x50)
with equal weights and with inverse-average weighting, then normalizes each
task's final test loss by a single-task reference trained from the same
initialization. Values above 1 mean joint training hurt that task.

A shortened run (one seed, 600 iterations) so the demo finishes in ~30 s;
the full-scale version is the AC-5 acceptance test.
"""

import dataclasses

import numpy as np

from mtlbal.harness import ExperimentConfig, run_experiment, run_single_task

cfg = ExperimentConfig(scenario="celeb-mini", balancer="baseline", iterations=600, seed=1)

print("training 8 single-task references...")
refs = np.array(
    [run_single_task(cfg, k).task_results[0].test_loss for k in range(8)]
)

rows = {}
for method in ("baseline", "ema"):
    print(f"training multi-task with {method} weighting...")
    res = run_experiment(dataclasses.replace(cfg, balancer=method))
    rows[method] = np.array([t.test_loss for t in res.task_results]) / refs

names = [f"attr{i}" for i in range(8)]
print(f"\nnormalized final test losses (task loss / single-task reference)")
print(f"{'task':>8} {'scale':>6} {'baseline':>9} {'ema':>9}")
for i, name in enumerate(names):
    scale = 50.0 if i == 7 else 1.0
    print(f"{name:>8} {scale:>6.0f} {rows['baseline'][i]:>9.3f} {rows['ema'][i]:>9.3f}")

spread = {m: v.max() / v.min() for m, v in rows.items()}
print(f"\nspread (max/min): baseline {spread['baseline']:.2f}, ema {spread['ema']:.2f}")
worst = {m: v[:7].max() for m, v in rows.items()}
print(f"most-hurt unscaled task: baseline {worst['baseline']:.3f}, ema {worst['ema']:.3f}")
print("equal weighting lets the x50 task starve the rest; inverse-average")
print("weighting keeps every task near its single-task reference.")
