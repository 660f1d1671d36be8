"""A small regret experiment and the hindsight comparator.

The comparator picks, for every availability set that occurred, the k arms
with the least total loss over the rounds in which that set was available.
"""
# %%
import tempfile

import numpy as np

from sleeping_exp3 import EnvironmentConfig, ExperimentSpec, LossGeneratorSpec, run_experiment
from sleeping_exp3.runner import check_sublinear

env = EnvironmentConfig(
    n_arms=5,
    k=2,
    horizon=4000,
    availability=(0.9, 0.8, 0.7, 0.6, 0.5),
    loss=LossGeneratorSpec(kind="periodic-swap", period=1500),
)
out = tempfile.mkdtemp()
spec = ExperimentSpec(environment=env, seeds=(0, 1, 2, 3), output_dir=out)
report = run_experiment(spec)

# %%
for t in (1000, 2000, 4000):
    row = report.at(t)
    print(f"t={t:>5}  regret {row.mean_regret:8.2f} +/- {row.std_error:.2f}  regret/t {row.mean_regret / t:.4f}")

# %%
for name, ok, detail in check_sublinear(report, env.n_arms, env.k, env.horizon):
    print("PASS" if ok else "FAIL", name, detail)
print("traces in", out)
