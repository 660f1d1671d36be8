"""Capped-simplex projection of multiplicative weights.

The capped simplex ``P_k`` holds probability vectors whose entries are all at
most ``1/k``. Projection pins the largest entries to ``1/k`` and rescales the
rest proportionally; multiplying the result by ``k`` gives per-arm inclusion
probabilities for a ``k``-subset.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import InfeasibleCapping, InsufficientArms, InvalidK, normalize_over_set


@dataclass(frozen=True)
class CappedDistribution:
    p_hat: np.ndarray
    k: int
    n_pinned: int


@dataclass(frozen=True)
class ScaledProbabilityVector:
    """``q = k * p_hat``: entries in [0, 1], summing to ``k``, zero off the available set."""

    q: np.ndarray
    k: int
    n_pinned: int = 0

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.q > 0))


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise InvalidK(f"k must lie in [1, {n}], got {k}")


def cap_project(p: np.ndarray, k: int) -> CappedDistribution:
    """Project a probability vector onto ``P_k`` by pin-and-rescale.

    Entries are visited in decreasing order (stable, lower index first). The
    top ``i`` entries are set to ``1/k`` and the remaining original entries are
    rescaled to total ``(k - i) / k``; ``i`` grows until nothing exceeds ``1/k``.
    A vector that already satisfies the cap is returned unchanged.
    """
    p = np.asarray(p, dtype=np.float64)
    n = p.shape[0]
    _check_k(k, n)
    if np.count_nonzero(p) < k:
        raise InfeasibleCapping(f"need at least {k} nonzero components, got {np.count_nonzero(p)}")
    if p.max() <= 1.0 / k:
        return CappedDistribution(p.copy(), k, 0)

    order = np.argsort(-p, kind="stable")
    ps = p[order]
    # c = k - 1 always satisfies the test since ps[k-1] > 0
    for c in range(1, k):
        rest = ps[c:].sum()
        if ps[c] * (k - c) <= rest:
            break
    out = np.empty(n)
    out[:c] = 1.0 / k
    # rounding may push the top rescaled entry an ulp past the cap
    out[c:] = np.minimum((k - c) * (ps[c:] / rest) / k, 1.0 / k)
    p_hat = np.empty(n)
    p_hat[order] = out
    return CappedDistribution(p_hat, k, c)


def _capped_rows(L: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Scaled capped probabilities for rows of log-weights (``-inf`` = unavailable).

    Every row must have at least ``k`` finite entries. Returns ``(q, n_pinned)``.
    """
    m, n = L.shape
    mx = L.max(axis=1, keepdims=True)
    e = np.exp(L - mx)
    p = e / e.sum(axis=1, keepdims=True)
    q = k * p
    pinned = np.zeros(m, dtype=np.intp)
    if k == 1:
        return q, pinned

    trig = np.flatnonzero(p.max(axis=1) >= 1.0 / k)
    if trig.size == 0:
        return q, pinned

    Lt = L[trig]
    order = np.argsort(-Lt, axis=1, kind="stable")
    Ls = np.take_along_axis(Lt, order, axis=1)
    qs = np.zeros_like(Ls)
    todo = np.ones(trig.size, dtype=bool)
    for c in range(1, k):
        rel = np.exp(Ls[:, c:] - Ls[:, c : c + 1])
        tot = rel.sum(axis=1)
        hit = todo & (k - c <= tot)
        if hit.any():
            qs[hit, :c] = 1.0
            qs[hit, c:] = np.minimum((k - c) * rel[hit] / tot[hit, None], 1.0)
            pinned[trig[hit]] = c
            todo &= ~hit
        if not todo.any():
            break
    rows = np.empty_like(qs)
    np.put_along_axis(rows, order, qs, axis=1)
    q[trig] = rows
    return q, pinned


# below this log-weight spread exp() of the shifted weights cannot underflow
_LINEAR_SPREAD = 600.0


def _capped_rows_linear(log_weights: np.ndarray, masks: np.ndarray, k: int) -> np.ndarray:
    """Same result as :func:`_capped_rows`, sorting the weights once for all rows.

    A stable descending sort of the full weight vector, restricted to any
    subset, is that subset's stable descending order, so each row's rank of a
    member is a running count along the sorted columns.
    """
    m, n = masks.shape
    order = np.argsort(-log_weights, kind="stable")
    ms = masks[:, order]
    w = ms * np.exp(log_weights[order] - log_weights[order[0]])
    suffix = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
    q = np.empty((m, n))
    rows = np.arange(m)
    first = ms.argmax(axis=1)
    total = suffix[rows, first]
    q_sorted = w * (k / total)[:, None]
    if k > 1:
        trig = k * w[rows, first] >= total
        if trig.any():
            members_seen = np.cumsum(ms, axis=1)
            todo = trig.copy()
            for c in range(1, k):
                pos = (members_seen == c + 1).argmax(axis=1)
                w_c = w[rows, pos]
                rest = suffix[rows, pos]
                hit = todo & ((k - c) * w_c <= rest)
                if hit.any():
                    qh = np.minimum((k - c) * w[hit] / rest[hit, None], 1.0)
                    qh[members_seen[hit] <= c] = 1.0
                    qh[~ms[hit]] = 0.0
                    q_sorted[hit] = qh
                    todo &= ~hit
                if not todo.any():
                    break
    q[:, order] = q_sorted
    return q


def scaled_probabilities(log_weights: np.ndarray, s: Sequence[int], k: int) -> ScaledProbabilityVector:
    """Per-arm inclusion probabilities for choosing ``k`` arms out of ``s``.

    Raises :class:`InsufficientArms` when ``len(s) < k``; callers that need a
    select-everything fallback handle that case themselves.
    """
    log_weights = np.asarray(log_weights, dtype=np.float64)
    n = log_weights.shape[0]
    _check_k(k, n)
    s = tuple(s)
    if len(s) < k:
        raise InsufficientArms(f"{len(s)} available arms, need {k}")
    if k == 1:
        # the cap 1/k = 1 never binds
        return ScaledProbabilityVector(normalize_over_set(log_weights, s), 1, 0)

    row = np.full((1, n), -np.inf)
    idx = list(s)
    row[0, idx] = log_weights[idx]
    q, pinned = _capped_rows(row, k)
    return ScaledProbabilityVector(q[0], k, int(pinned[0]))


def batch_scaled_probabilities(log_weights: np.ndarray, masks: np.ndarray, k: int) -> np.ndarray:
    """Scaled probabilities for many availability sets at once.

    ``masks`` is an ``(M, N)`` boolean array, one availability set per row.
    Rows with fewer than ``k`` members select all of them with probability one;
    empty rows are all-zero.
    """
    log_weights = np.asarray(log_weights, dtype=np.float64)
    masks = np.asarray(masks, dtype=bool)
    m, n = masks.shape
    _check_k(k, n)
    sizes = masks.sum(axis=1)
    out = np.zeros((m, n))
    short = sizes < k
    out[short] = masks[short]
    full = np.flatnonzero(~short)
    if full.size:
        if np.ptp(log_weights) < _LINEAR_SPREAD:
            out[full] = _capped_rows_linear(log_weights, masks[full], k)
        else:
            L = np.where(masks[full], log_weights, -np.inf)
            out[full], _ = _capped_rows(L, k)
    return out
