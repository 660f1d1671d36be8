"""Joint selection probability under availability and algorithm randomness.

``q_hat[i] = sum_S P_a(S) * q^S[i]`` where ``P_a`` is the product-Bernoulli
law of the available set. The exact route enumerates all ``2^N`` sets; the
Monte Carlo route averages ``q^S`` over sets drawn from the same law.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import EnumerationTooLarge
from .projection import batch_scaled_probabilities

DEFAULT_ENUMERATION_LIMIT = 16


@dataclass(frozen=True)
class AvailabilityEstimate:
    counts: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, n_arms: int) -> "AvailabilityEstimate":
        return cls(np.zeros(n_arms, dtype=np.int64), 0)

    @property
    def n_arms(self) -> int:
        return self.counts.shape[0]

    @property
    def rates(self) -> np.ndarray:
        # before any observation every arm is presumed available
        if self.t == 0:
            return np.ones(self.n_arms)
        return self.counts / self.t

    def record(self, s: Sequence[int]) -> "AvailabilityEstimate":
        counts = self.counts.copy()
        counts[list(s)] += 1
        return AvailabilityEstimate(counts, self.t + 1)


def record_availability(est: AvailabilityEstimate, s: Sequence[int]) -> AvailabilityEstimate:
    return est.record(s)


@lru_cache(maxsize=None)
def _subset_masks(n: int) -> np.ndarray:
    codes = np.arange(1 << n, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    masks.flags.writeable = False
    return masks


def _codes_to_masks(codes: np.ndarray, n: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def set_probabilities(rates: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Product-Bernoulli probability of each row of ``masks``."""
    return np.where(masks, rates, 1.0 - rates).prod(axis=1)


def joint_probability_from_rates(
    rates: np.ndarray,
    log_weights: np.ndarray,
    k: int,
    enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> np.ndarray:
    """Exact joint probability for availability rates ``rates``."""
    rates = np.asarray(rates, dtype=np.float64)
    n = rates.shape[0]
    if n > enumeration_limit:
        raise EnumerationTooLarge(f"N={n} exceeds enumeration limit {enumeration_limit}")
    masks = _subset_masks(n)
    probs = set_probabilities(rates, masks)
    live = probs > 0
    q = batch_scaled_probabilities(log_weights, masks[live], k)
    return probs[live] @ q


def exact_joint_probability(
    est: AvailabilityEstimate,
    log_weights: np.ndarray,
    k: int,
    enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> np.ndarray:
    return joint_probability_from_rates(est.rates, log_weights, k, enumeration_limit)


def monte_carlo_joint_probability(
    est: AvailabilityEstimate,
    log_weights: np.ndarray,
    k: int,
    samples: int,
    rng: np.random.Generator,
    rates: np.ndarray | None = None,
) -> np.ndarray:
    """Average of ``q^S`` over ``samples`` sets drawn from the empirical availability law.

    Duplicate draws are projected once and weighted by their frequency.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    a = est.rates if rates is None else np.asarray(rates, dtype=np.float64)
    n = a.shape[0]
    draws = rng.random((samples, n)) < a
    if n <= 62:
        codes = draws.astype(np.int64) @ (np.int64(1) << np.arange(n, dtype=np.int64))
        uniq, counts = np.unique(codes, return_counts=True)
        masks = _codes_to_masks(uniq, n)
    else:
        masks, counts = np.unique(draws, axis=0, return_counts=True)
    q = batch_scaled_probabilities(log_weights, masks, k)
    return (counts / samples) @ q
