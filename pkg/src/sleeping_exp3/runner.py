"""Seed-replicated experiments, estimator comparison and oracle self-checks."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import combinations
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .core import ConfigError
from .environment import (
    Environment,
    EnvironmentConfig,
    LossGeneratorSpec,
    RoundRecord,
    run_episode,
    seed_streams,
    write_trace_csv,
)
from .estimator import AvailabilityEstimate, joint_probability_from_rates, monte_carlo_joint_probability
from .oracle import best_policy, exhaustive_comparator_loss, regret, regret_curve
from .policy import SleepingExp3MP

EXACT_LIMIT = 16


@dataclass(frozen=True)
class ExperimentSpec:
    environment: EnvironmentConfig
    estimator_variant: str = "exact"
    mc_sample_cap: int | None = 2000
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "out"
    checkpoint_every: int | None = None

    def validate(self) -> None:
        self.environment.validate()
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        for j, s in enumerate(self.seeds):
            if not 0 <= s < 2**64:
                raise ConfigError(f"seeds[{j}]", "must be a 64-bit unsigned integer")
        if self.estimator_variant not in ("exact", "monte_carlo"):
            raise ConfigError("estimator_variant", "must be 'exact' or 'monte_carlo'")
        if self.estimator_variant == "monte_carlo" and self.mc_sample_cap is not None and self.mc_sample_cap < 1:
            raise ConfigError("mc_sample_cap", "must be >= 1")
        if self.estimator_variant == "exact" and self.environment.n_arms > EXACT_LIMIT:
            raise ConfigError("environment.n_arms", f"exact estimator requires N <= {EXACT_LIMIT}")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every", "must be >= 1")

    @property
    def checkpoints(self) -> list[int]:
        horizon = self.environment.horizon
        step = self.checkpoint_every or max(1, horizon // 100)
        pts = set(range(step, horizon + 1, step)) | {horizon}
        pts |= {t for t in (horizon // 4, horizon // 2) if t >= 1}
        return sorted(pts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d["environment"]["availability"] = list(self.environment.availability)
        return d


def _check_keys(data: Mapping, allowed: Sequence[str], prefix: str) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(prefix or "<root>", "expected an object")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}" if prefix else key, "unknown key")


def spec_from_dict(data: Mapping[str, Any]) -> ExperimentSpec:
    """Build and validate a spec; unknown keys are rejected with their path."""
    _check_keys(data, [f.name for f in fields(ExperimentSpec)], "")
    if "environment" not in data:
        raise ConfigError("environment", "missing")
    env = dict(data["environment"])
    _check_keys(env, [f.name for f in fields(EnvironmentConfig)], "environment")
    for key in ("n_arms", "k", "horizon", "availability"):
        if key not in env:
            raise ConfigError(f"environment.{key}", "missing")
    loss = env.pop("loss", {}) or {}
    _check_keys(loss, [f.name for f in fields(LossGeneratorSpec)], "environment.loss")
    if loss.get("means") is not None:
        loss["means"] = tuple(loss["means"])
    avail = env["availability"]
    if isinstance(avail, (int, float)):
        env["availability"] = [float(avail)] * int(env["n_arms"])
    try:
        env_cfg = EnvironmentConfig(**env, loss=LossGeneratorSpec(**loss))
    except (TypeError, ValueError) as exc:
        raise ConfigError("environment", str(exc)) from exc
    rest = {k: v for k, v in data.items() if k != "environment"}
    if "seeds" in rest:
        rest["seeds"] = tuple(int(s) for s in rest["seeds"])
    spec = ExperimentSpec(environment=env_cfg, **rest)
    spec.validate()
    return spec


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return spec_from_dict(data)


def make_policy(spec: ExperimentSpec, seed: int, variant: str | None = None) -> SleepingExp3MP:
    env = spec.environment
    return SleepingExp3MP(
        env.n_arms,
        env.k,
        env.horizon,
        variant=variant or spec.estimator_variant,
        mc_sample_cap=spec.mc_sample_cap,
        seed=seed_streams(seed)["policy"],
        enumeration_limit=EXACT_LIMIT,
    )


def run_seed(spec: ExperimentSpec, seed: int) -> tuple[Environment, list[RoundRecord], dict[int, float]]:
    """One episode for ``seed``; also returns wall-clock seconds at each checkpoint."""
    env = Environment(replace(spec.environment, seed=seed))
    policy = make_policy(spec, seed)
    marks = set(spec.checkpoints)
    clock: dict[int, float] = {}
    start = time.perf_counter()

    def tick(rec: RoundRecord) -> None:
        if rec.t in marks:
            clock[rec.t] = time.perf_counter() - start

    records = run_episode(env, policy, on_round=tick)
    return env, records, clock


def _seed_job(args: tuple[ExperimentSpec, int, str | None]) -> dict:
    spec, seed, out_dir = args
    env, records, clock = run_seed(spec, seed)
    if out_dir is not None:
        write_trace_csv(Path(out_dir) / f"trace_seed{seed}.csv", records)
    pts = spec.checkpoints
    return {
        "seed": seed,
        "regret": regret_curve(records, env.losses, spec.environment.k, pts).tolist(),
        "lambda": [records[t - 1].lambda_t for t in pts],
        "clock": [clock[t] for t in pts],
    }


@dataclass(frozen=True)
class CheckpointRow:
    t: int
    mean_regret: float
    std_error: float
    mean_lambda: float
    wall_clock: float


@dataclass
class AggregateReport:
    rows: list[CheckpointRow]
    per_seed: dict[int, list[float]] = field(default_factory=dict)

    def at(self, t: int) -> CheckpointRow:
        for row in self.rows:
            if row.t == t:
                return row
        raise KeyError(t)

    @property
    def final(self) -> CheckpointRow:
        return self.rows[-1]


def _aggregate(spec: ExperimentSpec, results: list[dict]) -> AggregateReport:
    curves = np.array([r["regret"] for r in results])
    lambdas = np.array([r["lambda"] for r in results])
    clocks = np.array([r["clock"] for r in results])
    n = curves.shape[0]
    se = curves.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(curves.shape[1])
    rows = [
        CheckpointRow(t, float(m), float(e), float(lam), float(c))
        for t, m, e, lam, c in zip(spec.checkpoints, curves.mean(axis=0), se, lambdas.mean(axis=0), clocks.mean(axis=0))
    ]
    return AggregateReport(rows, {r["seed"]: r["regret"] for r in results})


def run_experiment(spec: ExperimentSpec, workers: int = 1, write: bool = True) -> AggregateReport:
    """Run one episode per seed and write traces plus an aggregate summary.

    ``summary.json`` and the trace CSVs depend only on ``spec``; wall-clock
    figures go to ``timing.csv``.
    """
    spec.validate()
    out_dir = Path(spec.output_dir) if write else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, s, None if out_dir is None else str(out_dir)) for s in spec.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_seed_job, jobs))
    else:
        results = [_seed_job(j) for j in jobs]
    results.sort(key=lambda r: r["seed"])
    report = _aggregate(spec, results)
    if out_dir is not None:
        summary = {
            "spec": spec.to_dict(),
            "checkpoints": [
                {"t": r.t, "mean_regret": r.mean_regret, "std_error": r.std_error, "mean_lambda": r.mean_lambda}
                for r in report.rows
            ],
            "final_regret_per_seed": {str(s): c[-1] for s, c in report.per_seed.items()},
        }
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        with open(out_dir / "timing.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "mean_wall_clock"))
            for r in report.rows:
                w.writerow((r.t, f"{r.wall_clock:.6f}"))
    return report


def check_sublinear(report: AggregateReport, n_arms: int, k: int, horizon: int) -> list[tuple[str, bool, str]]:
    """Positive regret, shrinking average regret over T/4, T/2, T, and the kN^2 sqrt(T log T) ceiling."""
    r4 = report.at(horizon // 4).mean_regret
    r2 = report.at(horizon // 2).mean_regret
    rt = report.at(horizon).mean_regret
    ratios = (r4 / (horizon // 4), r2 / (horizon // 2), rt / horizon)
    ceiling = k * n_arms**2 * math.sqrt(horizon * math.log(horizon))
    return [
        ("positive", rt > 0, f"mean R_T = {rt:.3f}"),
        ("decreasing_ratio", ratios[0] > ratios[1] > ratios[2], "R_t/t = " + ", ".join(f"{x:.5f}" for x in ratios)),
        ("ceiling", rt <= ceiling, f"{rt:.3f} <= {ceiling:.1f}"),
    ]


def compare_estimators(spec: ExperimentSpec, seed: int | None = None, write: bool = True) -> list[dict]:
    """Exact vs Monte Carlo joint probability on the same trajectory.

    The learner runs with the exact estimator; each round both estimators are
    evaluated on the identical availability counts and weights.
    """
    spec.validate()
    if spec.environment.n_arms > EXACT_LIMIT:
        raise ConfigError("environment.n_arms", f"exact comparison requires N <= {EXACT_LIMIT}")
    seed = spec.seeds[0] if seed is None else seed
    env = Environment(replace(spec.environment, seed=seed))
    policy = make_policy(spec, seed, variant="exact")
    mc_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(4)[3]))
    k = spec.environment.k
    rows = []
    for t in range(1, env.horizon + 1):
        s, loss_row = env.generate_round(t)
        sel = policy.select(s)
        est: AvailabilityEstimate = policy.avail.record(s)
        samples = t if spec.mc_sample_cap is None else min(t, spec.mc_sample_cap)
        t0 = time.perf_counter()
        exact = joint_probability_from_rates(est.rates, policy.log_weights, k)
        t1 = time.perf_counter()
        approx = monte_carlo_joint_probability(est, policy.log_weights, k, samples, mc_rng)
        t2 = time.perf_counter()
        policy.feedback({i: float(loss_row[i]) for i in sel.chosen})
        rows.append(
            {
                "t": t,
                "max_gap": float(np.abs(approx - exact).max()),
                "exact_seconds": t1 - t0,
                "mc_seconds": t2 - t1,
                "mc_samples": samples,
            }
        )
    if write:
        out_dir = Path(spec.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / f"compare_seed{seed}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "max_gap", "exact_seconds", "mc_seconds", "mc_samples"))
            for r in rows:
                w.writerow((r["t"], f"{r['max_gap']:.9f}", f"{r['exact_seconds']:.9f}", f"{r['mc_seconds']:.9f}", r["mc_samples"]))
    return rows


JOINT_SEARCH_LIMIT = 10**6


def oracle_check(spec: ExperimentSpec) -> list[str]:
    """Brute-force cross-checks of the hindsight comparator; returns failure messages."""
    spec.validate()
    k = spec.environment.k
    failures = []
    for seed in spec.seeds:
        env, records, _ = run_seed(spec, seed)
        losses = np.asarray(env.losses)
        policy = best_policy(records, losses, k)
        by_set: dict[tuple[int, ...], np.ndarray] = {}
        for r in records:
            by_set[r.available] = by_set.get(r.available, 0) + losses[r.t - 1]
        n_policies = 1
        for s, tot in by_set.items():
            if len(s) <= k:
                brute = tot[list(s)].sum()
            else:
                combos = list(combinations(s, k))
                brute = min(tot[list(c)].sum() for c in combos)
                n_policies *= len(combos)
            got = tot[list(policy[s])].sum()
            if not math.isclose(got, brute, rel_tol=1e-12, abs_tol=1e-9):
                failures.append(f"seed {seed}: set {s} best {brute} but policy gives {got}")
        if n_policies <= JOINT_SEARCH_LIMIT:
            joint = exhaustive_comparator_loss(records, losses, k)
            comp = sum(losses[r.t - 1, list(policy[r.available])].sum() for r in records)
            if not math.isclose(comp, joint, rel_tol=1e-12, abs_tol=1e-9):
                failures.append(f"seed {seed}: joint search {joint} != separable comparator {comp}")
        final = regret_curve(records, losses, k, [len(records)])[0]
        direct = regret(records, policy, losses)
        if not math.isclose(final, direct, rel_tol=1e-12, abs_tol=1e-9):
            failures.append(f"seed {seed}: regret curve {final} != direct regret {direct}")
    return failures
