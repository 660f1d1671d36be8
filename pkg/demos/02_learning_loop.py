"""Driving the learner by hand.

The policy only ever sees the available set and the losses of the arms it
played. Everything else (availability rates, joint selection probability,
loss estimate) is built internally.
"""
# %%
import numpy as np

from sleeping_exp3 import SleepingExp3MP

n_arms, k, horizon = 6, 2, 3000
availability = np.array([0.9, 0.9, 0.6, 0.6, 0.3, 0.3])
means = np.array([0.8, 0.6, 0.5, 0.4, 0.2, 0.1])  # the rarely available arms are best

policy = SleepingExp3MP(n_arms, k, horizon, seed=1)
rng = np.random.default_rng(2)

# %%
plays = np.zeros(n_arms)
for t in range(horizon):
    s = np.flatnonzero(rng.random(n_arms) < availability)
    sel = policy.select(s)
    losses = {i: float(rng.random() < means[i]) for i in sel.chosen}
    policy.feedback(losses)
    plays[list(sel.chosen)] += 1

# %% [markdown]
# Normalised weights and play counts. Weights concentrate on the low-loss arms
# even though arms 4 and 5 are awake less than a third of the time.

# %%
print("weights", np.round(policy.weights, 3))
print("plays  ", plays.astype(int))
print("estimated availability", np.round(policy.avail.rates, 3))

# %% [markdown]
# State can be saved between rounds and restored later, RNG included.

# %%
policy.save("/tmp/sleeping_exp3_state.json")
restored = SleepingExp3MP.load("/tmp/sleeping_exp3_state.json")
s = (0, 2, 3, 5)
assert policy.select(s).chosen == restored.select(s).chosen
print("restored policy makes the same draw")
