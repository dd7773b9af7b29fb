"""Temperature of the softmax-of-rates balancer vs weight uniformity.

For a fixed pair of training-rate ratios, sweep the temperature and print
the resulting weights: high temperature flattens them toward 1, low
temperature exaggerates the gap, and they always sum to the task count.
"""

import numpy as np

from mtlbal.balancers import dwa_coefficients

rates = np.array([1.0, 0.5])
print(f"training-rate ratios: {rates.tolist()}\n")
print(f"{'T':>6} {'weights':>22} {'max-min':>9} {'sum':>6}")
for temp in (0.25, 0.5, 1.0, 2.0, 4.0, 16.0):
    w = dwa_coefficients(rates, temp)
    print(f"{temp:>6} {w[0]:>10.4f} {w[1]:>10.4f} {w.max() - w.min():>9.4f} {w.sum():>6.3f}")

print("\nhigher temperature -> closer coefficients; the sum stays at K.")
