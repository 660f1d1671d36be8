"""Best fixed availability-set -> k-subset policy in hindsight, and realised regret.

The comparator objective separates over distinct availability sets: for each
observed set the best choice is the ``k`` members with the smallest loss summed
over the rounds in which exactly that set was available.
"""
from __future__ import annotations

from collections import defaultdict
from itertools import combinations
from typing import Sequence

import numpy as np

from .environment import RoundRecord

HindsightPolicy = dict[tuple[int, ...], tuple[int, ...]]


def _set_loss_sums(
    records: Sequence[RoundRecord], full_losses: np.ndarray
) -> dict[tuple[int, ...], np.ndarray]:
    sums: dict[tuple[int, ...], np.ndarray] = defaultdict(lambda: np.zeros(full_losses.shape[1]))
    for r in records:
        sums[r.available] += full_losses[r.t - 1]
    return dict(sums)


def _best_subset(s: tuple[int, ...], totals: np.ndarray, k: int) -> tuple[int, ...]:
    if len(s) <= k:
        return s
    idx = np.asarray(s)
    # stable sort on ascending loss; s is sorted so ties go to the lower index
    best = idx[np.argsort(totals[idx], kind="stable")[:k]]
    return tuple(sorted(int(i) for i in best))


def best_policy(records: Sequence[RoundRecord], full_losses: np.ndarray, k: int) -> HindsightPolicy:
    return {s: _best_subset(s, tot, k) for s, tot in _set_loss_sums(records, full_losses).items()}


def comparator_loss(records: Sequence[RoundRecord], policy: HindsightPolicy, full_losses: np.ndarray) -> float:
    return float(sum(full_losses[r.t - 1, list(policy[r.available])].sum() for r in records))


def learner_loss(records: Sequence[RoundRecord], full_losses: np.ndarray) -> float:
    return float(sum(full_losses[r.t - 1, list(r.chosen)].sum() for r in records))


def regret(records: Sequence[RoundRecord], policy: HindsightPolicy, full_losses: np.ndarray) -> float:
    """Learner loss minus comparator loss for one episode; may be negative."""
    missing = {r.available for r in records} - policy.keys()
    if missing:
        raise KeyError(f"policy does not cover availability sets {sorted(missing)}")
    return learner_loss(records, full_losses) - comparator_loss(records, policy, full_losses)


def regret_curve(
    records: Sequence[RoundRecord],
    full_losses: np.ndarray,
    k: int,
    checkpoints: Sequence[int],
) -> np.ndarray:
    """Realised regret of the first ``t`` rounds for each ``t`` in ``checkpoints``.

    The comparator is re-optimised on every prefix, exactly as if the episode
    had ended at ``t``.
    """
    n = full_losses.shape[1]
    horizon = len(records)
    index: dict[tuple[int, ...], int] = {}
    inverse = np.array([index.setdefault(r.available, len(index)) for r in records], dtype=np.intp)
    members = list(index)
    played = np.zeros((horizon, n), dtype=bool)
    for row, r in enumerate(records):
        played[row, list(r.chosen)] = True
    losses = np.asarray(full_losses[:horizon])
    learner_cum = np.cumsum((losses * played).sum(axis=1))

    out = np.empty(len(checkpoints))
    per_set = np.zeros((len(members), n))
    done = 0
    for j in np.argsort(checkpoints, kind="stable"):
        t = int(checkpoints[j])
        if not 1 <= t <= horizon:
            raise ValueError(f"checkpoint {t} outside [1, {horizon}]")
        np.add.at(per_set, inverse[done:t], losses[done:t])
        done = t
        best = 0.0
        for g, s in enumerate(members):
            if s:
                vals = np.sort(per_set[g, list(s)])
                best += vals[: min(k, len(s))].sum()
        out[j] = learner_cum[t - 1] - best
    return out


def exhaustive_comparator_loss(records: Sequence[RoundRecord], full_losses: np.ndarray, k: int) -> float:
    """Minimum comparator loss by enumerating every joint policy over observed sets.

    Cost is the product of per-set choice counts; intended for ``N <= 4``.
    """
    sums = _set_loss_sums(records, full_losses)
    totals = np.zeros(1)
    for s, tot in sums.items():
        choices = [s] if len(s) <= k else list(combinations(s, k))
        vals = np.array([tot[list(c)].sum() for c in choices])
        totals = (totals[:, None] + vals[None, :]).ravel()
    return float(totals.min())
