"""Sleeping EXP3 with multiple plays.

Each round the learner receives the available set, plays ``k`` of its arms
(sampled through the capped projection and the corner decomposition), observes
the losses of the played arms only, and updates exponential weights with an
importance-weighted loss estimate ``loss / (q_hat + lambda_t)``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal, Mapping, Sequence

import numpy as np

from .core import (
    FeedbackMismatch,
    FeedbackPending,
    InvalidK,
    LossOutOfRange,
    as_available_set,
    initial_log_weights,
    make_rng,
)
from .decomposition import decompose, sample_corner
from .estimator import (
    DEFAULT_ENUMERATION_LIMIT,
    AvailabilityEstimate,
    joint_probability_from_rates,
    monte_carlo_joint_probability,
)
from .projection import ScaledProbabilityVector, scaled_probabilities

Variant = Literal["exact", "monte_carlo"]


def default_eta(n_arms: int, k: int, horizon: int) -> float:
    ratio = math.log(n_arms / k)
    if ratio <= 0:
        # N == k: every available arm is always played, the rate is immaterial
        ratio = 1.0
    return min(1.0, math.sqrt(ratio / (n_arms * horizon)))


def default_delta(n_arms: int, horizon: int, warn: bool = True) -> float:
    delta = n_arms / horizon**2
    if delta > 0.5:
        if warn:
            warnings.warn(f"delta = N/T^2 = {delta:.3g} clamped to 0.5", stacklevel=3)
        return 0.5
    return delta


def lambda_at(
    t: int,
    n_arms: int,
    k: int,
    delta: float,
    variant: Variant = "exact",
) -> float:
    """Loss-estimate stabiliser for round ``t`` (1-based), clamped to at most 1."""
    if t < 1:
        raise ValueError("t must be >= 1")
    kn = k * n_arms
    if variant == "exact":
        log_term = math.log(n_arms / delta)
        value = 2 * kn * math.sqrt(2 * log_term / t) + 8 * kn * log_term / (3 * t)
    elif variant == "monte_carlo":
        log_term = math.log(2 * n_arms / delta)
        value = 4 * kn * math.sqrt(log_term / t) + 8 * kn * log_term / (3 * t)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return min(1.0, value)


@dataclass(frozen=True)
class ParameterSchedule:
    eta: float
    delta: float
    variant: Variant = "exact"
    horizon: int | None = None
    mc_sample_cap: int | None = 2000
    fixed_lambda: float | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.variant not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.mc_sample_cap is not None and self.mc_sample_cap < 1:
            raise ValueError("mc_sample_cap must be >= 1")

    @classmethod
    def auto(
        cls,
        n_arms: int,
        k: int,
        horizon: int,
        variant: Variant = "exact",
        mc_sample_cap: int | None = 2000,
        warn: bool = True,
    ) -> "ParameterSchedule":
        """Theory-driven defaults: eta = min(1, sqrt(ln(N/k)/(N T))), delta = min(0.5, N/T^2)."""
        return cls(
            eta=default_eta(n_arms, k, horizon),
            delta=default_delta(n_arms, horizon, warn),
            variant=variant,
            horizon=horizon,
            mc_sample_cap=mc_sample_cap,
        )

    def lambda_at(self, t: int, n_arms: int, k: int) -> float:
        if self.fixed_lambda is not None:
            return self.fixed_lambda
        return lambda_at(t, n_arms, k, self.delta, self.variant)

    def mc_samples(self, t: int) -> int:
        return t if self.mc_sample_cap is None else min(t, self.mc_sample_cap)


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple[int, ...]
    q_scaled: ScaledProbabilityVector
    decomposition_size: int
    degenerate: bool = False


class SleepingExp3MP:
    """Learner state plus the select / feedback cycle.

    Parameters
    ----------
    n_arms, k : int
        Pool size and number of arms played per round.
    horizon : int, optional
        Known horizon ``T``. Without it the schedule is restarted on a doubling
        grid ``T = 1, 2, 4, ...`` and the weights are reset at each restart.
    schedule : ParameterSchedule, optional
        Overrides the auto-derived schedule (``horizon`` is then ignored).
    known_availability : array, optional
        True availability probabilities. When given they replace the empirical
        rates in the joint-probability estimate.
    """

    def __init__(
        self,
        n_arms: int,
        k: int,
        horizon: int | None = None,
        *,
        variant: Variant = "exact",
        mc_sample_cap: int | None = 2000,
        schedule: ParameterSchedule | None = None,
        seed: int | np.random.SeedSequence | np.random.Generator | None = None,
        known_availability: Sequence[float] | None = None,
        enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT,
    ):
        if not 1 <= k <= n_arms:
            raise InvalidK(f"k must lie in [1, {n_arms}], got {k}")
        self.n_arms = n_arms
        self.k = k
        self.enumeration_limit = enumeration_limit
        self._doubling = schedule is None and horizon is None
        self._epoch_start = 0
        if schedule is None:
            # the doubling grid starts at T = 1, where the delta clamp always binds
            schedule = ParameterSchedule.auto(
                n_arms, k, horizon or 1, variant, mc_sample_cap, warn=horizon is not None
            )
        if schedule.variant == "exact" and n_arms > enumeration_limit:
            raise ValueError(f"exact estimator needs N <= {enumeration_limit}")
        self.schedule = schedule
        self.known_availability = (
            None if known_availability is None else np.asarray(known_availability, dtype=np.float64)
        )
        self.rng = make_rng(seed)
        self.log_weights = initial_log_weights(n_arms)
        self.avail = AvailabilityEstimate.empty(n_arms)
        self.t = 0
        self._pending: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    @property
    def weights(self) -> np.ndarray:
        """Weights normalised to max 1 (raw weights may underflow)."""
        return np.exp(self.log_weights - self.log_weights.max())

    @property
    def pending(self) -> bool:
        return self._pending is not None

    def probabilities(self, available: Sequence[int]) -> ScaledProbabilityVector:
        """Marginal inclusion probabilities for ``available`` under the current weights."""
        s = as_available_set(available, self.n_arms)
        if len(s) < self.k:
            q = np.zeros(self.n_arms)
            q[list(s)] = 1.0
            return ScaledProbabilityVector(q, self.k)
        return scaled_probabilities(self.log_weights, s, self.k)

    def select(self, available: Sequence[int]) -> SelectionResult:
        if self._pending is not None:
            raise FeedbackPending("feedback for the previous selection has not been supplied")
        s = as_available_set(available, self.n_arms)
        q = self.probabilities(s)
        if len(s) <= self.k:
            # forced: play everything that is available
            result = SelectionResult(s, q, 1 if s else 0, degenerate=len(s) < self.k)
        else:
            d = decompose(q)
            result = SelectionResult(sample_corner(d, self.rng), q, len(d))
        self._pending = (s, result.chosen)
        return result

    def joint_probability(self) -> np.ndarray:
        """Joint selection probability for the current weights and availability estimate."""
        rates = self.avail.rates if self.known_availability is None else self.known_availability
        if self.schedule.variant == "exact":
            return joint_probability_from_rates(rates, self.log_weights, self.k, self.enumeration_limit)
        samples = self.schedule.mc_samples(max(self.avail.t, 1))
        return monte_carlo_joint_probability(
            self.avail, self.log_weights, self.k, samples, self.rng, rates=rates
        )

    def lambda_t(self, t: int | None = None) -> float:
        return self.schedule.lambda_at(self.t if t is None else t, self.n_arms, self.k)

    def feedback(self, losses: Mapping[int, float]) -> np.ndarray:
        """Consume losses of the played arms; returns the loss estimate for every arm."""
        if self._pending is None:
            raise FeedbackMismatch("feedback without a pending selection")
        s, chosen = self._pending
        if set(int(i) for i in losses) != set(chosen):
            raise FeedbackMismatch(f"losses given for {sorted(losses)}, played {list(chosen)}")
        for i, v in losses.items():
            if not 0.0 <= v <= 1.0:
                raise LossOutOfRange(f"loss {v} for arm {i} outside [0, 1]")

        self.avail = self.avail.record(s)
        self.t += 1
        self._pending = None
        estimate = np.zeros(self.n_arms)
        if any(losses[i] > 0 for i in chosen):
            lam = self.lambda_t()
            q_hat = self.joint_probability()
            idx = np.asarray(chosen)
            estimate[idx] = np.array([losses[i] for i in chosen]) / (q_hat[idx] + lam)
            self.log_weights -= self.schedule.eta * estimate
        if self._doubling:
            self._maybe_restart()
        return estimate

    def _maybe_restart(self) -> None:
        span = self.schedule.horizon or 1
        if self.t - self._epoch_start >= span:
            self._epoch_start = self.t
            self.schedule = ParameterSchedule.auto(
                self.n_arms, self.k, 2 * span, self.schedule.variant, self.schedule.mc_sample_cap, warn=False
            )
            self.log_weights = initial_log_weights(self.n_arms)

    # snapshots

    def to_dict(self) -> dict:
        return {
            "n_arms": self.n_arms,
            "k": self.k,
            "t": self.t,
            "log_weights": self.log_weights.tolist(),
            "availability_counts": self.avail.counts.tolist(),
            "availability_rounds": self.avail.t,
            "schedule": asdict(self.schedule),
            "doubling": self._doubling,
            "epoch_start": self._epoch_start,
            "known_availability": None
            if self.known_availability is None
            else self.known_availability.tolist(),
            "enumeration_limit": self.enumeration_limit,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SleepingExp3MP":
        if data.get("rng_state", {}).get("bit_generator", "PCG64") != "PCG64":
            raise ValueError("only PCG64 generator state can be restored")
        obj = cls(
            data["n_arms"],
            data["k"],
            schedule=ParameterSchedule(**data["schedule"]),
            known_availability=data.get("known_availability"),
            enumeration_limit=data.get("enumeration_limit", DEFAULT_ENUMERATION_LIMIT),
        )
        obj._doubling = data.get("doubling", False)
        obj._epoch_start = data.get("epoch_start", 0)
        obj.t = data["t"]
        obj.log_weights = np.asarray(data["log_weights"], dtype=np.float64)
        obj.avail = AvailabilityEstimate(
            np.asarray(data["availability_counts"], dtype=np.int64), data["availability_rounds"]
        )
        if "rng_state" in data:
            obj.rng.bit_generator.state = data["rng_state"]
        return obj

    def save(self, path: str | Path) -> None:
        if self._pending is not None:
            raise FeedbackPending("cannot snapshot between select and feedback")
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "SleepingExp3MP":
        return cls.from_dict(json.loads(Path(path).read_text()))


def select(state: SleepingExp3MP, available: Sequence[int]) -> SelectionResult:
    return state.select(available)


def feedback(state: SleepingExp3MP, losses: Mapping[int, float]) -> np.ndarray:
    return state.feedback(losses)
