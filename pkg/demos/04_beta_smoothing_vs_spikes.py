"""How the smoothing factor tames weight spikes on a noisy loss stream.

One fixed noisy stream runs through the inverse-average balancer at three
smoothing settings. Larger beta tracks the noise faster, so the mean weight
jumps harder between steps; the spikiness statistic is the largest relative
jump of the mean coefficient.
"""

import numpy as np

from mtlbal.balancers import EmaState, LossVector, ema_update
from mtlbal.metrics import coefficient_spikiness
from mtlbal.rng import SplitMix64

stream = SplitMix64(606)
STEPS = 300
base = np.array([0.5, 5.0, 50.0])
losses = base * (1.0 + stream.uniform((STEPS, 3)) * 2.0)

print(f"one noisy stream, 3 tasks, {STEPS} steps\n")
print(f"{'beta':>6} {'spikiness':>10} {'mean weight range':>24}")
for beta in (0.5, 0.2, 0.1):
    state = EmaState(beta=beta)
    means = np.array(
        [ema_update(state, LossVector(row, t)).values.mean() for t, row in enumerate(losses)]
    )
    spike = coefficient_spikiness(means)
    print(f"{beta:>6} {spike:>10.3f} {means.min():>11.3f} .. {means.max():.3f}")

print("\nsmaller beta = slower-moving average = visibly calmer coefficients.")
