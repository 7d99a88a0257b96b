"""
How full do prefix spaces get?
==============================

Nodes of one type are spread over ``m`` prefix spaces by ``hash_code mod m``.
A space holds ``V`` suffixes. The chance that one space receives more than
``V`` of ``n`` nodes follows a normal tail, and it is exactly one half when
the spaces are sized with no spare room at all.
"""

import numpy as np

from ifcnorm.ids import IdConfig, overflow_probability, space_count

V = 256
for k in (1.0001, 1.25, 1.5, 2.0):
    config = IdConfig(capacity=V, spare_rate=k, scaling="linear")
    n = 10_000
    m = space_count(n, config)
    print(f"k={k:<7} m={m:<4} P(overflow of one space) = {overflow_probability(n, m, V):.3e}")

# %%
# With no room to spare the tail is one half, whatever m is.
for m in (2, 8, 64):
    print(f"m={m:<3} n=mV: {overflow_probability(m * V, m, V):.6f}")

# %%
# A quick simulation agrees with the formula when overflow is likely.
rng = np.random.default_rng(0)
n, m, v = 1000, 4, 260
loads = rng.multinomial(n, [1 / m] * m, size=20_000)[:, 0]
print(f"simulated {np.mean(loads > v):.4f} vs formula {overflow_probability(n, m, v):.4f}")
