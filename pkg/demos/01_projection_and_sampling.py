"""From weights to a set of k arms.

Exponential weights give a distribution over the available arms. To play k
arms at once we need marginals that sum to k and never exceed 1, and a way to
draw a k-subset that has exactly those marginals.
"""
# %%
import numpy as np

from sleeping_exp3 import decompose, sample_corner, scaled_probabilities

# %% [markdown]
# Arm 0 is much heavier than the rest. With k = 2 its share of the mass would
# be above 1/2, so it gets pinned at the cap and the remaining mass is spread
# over the others in proportion to their weights.

# %%
log_w = np.log(np.array([20.0, 3.0, 2.0, 1.0, 1.0]))
available = (0, 1, 2, 4)  # arm 3 is asleep this round
q = scaled_probabilities(log_w, available, k=2)
print("marginals  ", np.round(q.q, 4), "sum", q.q.sum())
print("pinned arms", q.n_pinned)

# %% [markdown]
# The marginals are a convex combination of k-subsets. At most N subsets are
# needed.

# %%
d = decompose(q)
for coef, corner in d:
    print(f"{coef:.4f}  {corner}")

# %%
rng = np.random.default_rng(0)
draws = 50_000
counts = np.zeros(5)
for _ in range(draws):
    counts[list(sample_corner(d, rng))] += 1
print("empirical  ", np.round(counts / draws, 4))
print("target     ", np.round(q.q, 4))
