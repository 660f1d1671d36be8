"""Shared vocabulary: error types, availability sets, normalisation and RNG helpers.

Arms are indexed ``0 .. N-1``. An availability set is represented as a sorted
``tuple`` of ints; weights are carried as natural-log arrays so that long runs
of multiplicative updates never underflow.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

MAX_ARMS = 1 << 16


class SleepingBanditError(ValueError):
    """Base class for all domain errors raised by this package."""


class EmptyAvailabilitySet(SleepingBanditError):
    pass


class InvalidK(SleepingBanditError):
    pass


class InfeasibleCapping(SleepingBanditError):
    pass


class InsufficientArms(SleepingBanditError):
    pass


class NotInScaledCappedSimplex(SleepingBanditError):
    pass


class EnumerationTooLarge(SleepingBanditError):
    pass


class FeedbackPending(SleepingBanditError):
    pass


class LossOutOfRange(SleepingBanditError):
    pass


class FeedbackMismatch(SleepingBanditError):
    pass


class TraceTooShort(SleepingBanditError):
    pass


class ConfigError(SleepingBanditError):
    """Invalid experiment configuration; ``field`` holds the dotted key path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def as_available_set(members: Iterable[int], n_arms: int | None = None) -> tuple[int, ...]:
    """Canonicalise ``members`` into a sorted, duplicate-free tuple of arm indices."""
    s = tuple(sorted({int(i) for i in members}))
    if n_arms is not None and s and (s[0] < 0 or s[-1] >= n_arms):
        raise ValueError(f"arm index out of range [0, {n_arms}): {s}")
    return s


def set_to_mask(s: Sequence[int], n_arms: int) -> np.ndarray:
    mask = np.zeros(n_arms, dtype=bool)
    mask[list(s)] = True
    return mask


def initial_log_weights(n_arms: int) -> np.ndarray:
    # w_1(i) = 1  <=>  log w_1(i) = 0
    return np.zeros(n_arms, dtype=np.float64)


def normalize_over_set(log_weights: np.ndarray, s: Sequence[int]) -> np.ndarray:
    """Probability vector proportional to ``exp(log_weights)`` on ``s``, zero elsewhere.

    Uses max-subtraction, so log-weights as small as -1e300 relative to the
    largest one are handled without NaNs.
    """
    log_weights = np.asarray(log_weights, dtype=np.float64)
    idx = np.asarray(s, dtype=np.intp)
    if idx.size == 0:
        raise EmptyAvailabilitySet("cannot normalise over an empty availability set")
    sub = log_weights[idx]
    e = np.exp(sub - sub.max())
    p = np.zeros(log_weights.shape[0], dtype=np.float64)
    p[idx] = e / e.sum()
    return p


def make_rng(seed: int | np.random.SeedSequence | np.random.Generator | None) -> np.random.Generator:
    """PCG64 generator; an existing Generator is passed through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def split_seed(seed: int, n_streams: int) -> list[np.random.Generator]:
    """Independent, reproducible child generators derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(n_streams)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def sample_bernoulli_set(a: np.ndarray, rng: np.random.Generator) -> tuple[int, ...]:
    """Include arm ``i`` independently with probability ``a[i]``."""
    a = np.asarray(a, dtype=np.float64)
    u = rng.random(a.shape[0])
    return tuple(int(i) for i in np.flatnonzero(u < a))
