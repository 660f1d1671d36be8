"""Exact versus sampled joint selection probability.

An arm's chance of being played depends on which other arms are awake. The
exact version sums over all 2^N availability sets; the sampled version draws
sets from the estimated availability rates.
"""
# %%
import numpy as np

from sleeping_exp3 import AvailabilityEstimate, exact_joint_probability, monte_carlo_joint_probability

rng = np.random.default_rng(3)
n, k = 8, 2
rates = np.linspace(0.3, 0.95, n)
log_w = rng.normal(scale=1.5, size=n)

est = AvailabilityEstimate.empty(n)
for row in rng.random((2000, n)) < rates:
    est = est.record(np.flatnonzero(row))

exact = exact_joint_probability(est, log_w, k)
print("exact       ", np.round(exact, 4))

# %% [markdown]
# The sampled estimate tightens as the number of draws grows.

# %%
for samples in (10, 100, 1000, 10_000, 100_000):
    mc = monte_carlo_joint_probability(est, log_w, k, samples, rng)
    print(f"{samples:>7} draws, max gap {np.abs(mc - exact).max():.4f}")
