"""Convex decomposition of a scaled capped vector into k-subset corners.

Any ``q`` with entries in [0, 1] summing to ``k`` is a mixture of indicator
vectors of ``k``-subsets. Sampling a corner by its mixture weight then includes
arm ``i`` with probability exactly ``q[i]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import NotInScaledCappedSimplex
from .projection import ScaledProbabilityVector

ZERO_TOL = 1e-12
ONE_TOL = 1e-9
INPUT_TOL = 1e-7


@dataclass(frozen=True)
class CornerDecomposition:
    coefficients: np.ndarray
    corners: list[tuple[int, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.corners)

    def __iter__(self):
        return iter(zip(self.coefficients.tolist(), self.corners))

    def reconstruct(self, n_arms: int) -> np.ndarray:
        out = np.zeros(n_arms)
        for coef, corner in zip(self.coefficients, self.corners):
            out[list(corner)] += coef
        return out


def decompose(q: ScaledProbabilityVector | np.ndarray, k: int | None = None) -> CornerDecomposition:
    """Peel corners off ``q`` until no mass remains.

    Each round takes the ``k`` largest residual components (every component
    equal to the remaining mass is among them), subtracts ``min(s, m - l)``
    from each, where ``s`` is the smallest chosen residual, ``l`` the largest
    unchosen one and ``m`` the mass not yet assigned to corners. At most
    ``N`` corners are produced.
    """
    if isinstance(q, ScaledProbabilityVector):
        k = q.k
        q = q.q
    if k is None:
        raise TypeError("k is required when q is a plain array")
    r = np.array(q, dtype=np.float64)
    n = r.shape[0]
    if not 1 <= k <= n:
        raise NotInScaledCappedSimplex(f"k={k} outside [1, {n}]")
    if r.min() < -INPUT_TOL or r.max() > 1 + INPUT_TOL or abs(r.sum() - k) > INPUT_TOL:
        raise NotInScaledCappedSimplex(
            f"entries must lie in [0, 1] and sum to {k}; got range [{r.min()}, {r.max()}], sum {r.sum()}"
        )
    # plain floats: N is small and numpy call overhead dominates here
    r = [0.0 if v < ZERO_TOL else min(v, 1.0) for v in r.tolist()]
    mass = 1.0
    coefs: list[float] = []
    corners: list[tuple[int, ...]] = []
    for _ in range(n + 1):
        if mass <= n * ZERO_TOL:
            break
        order = sorted((i for i in range(n) if r[i] > 0), key=lambda i: -r[i])
        if len(order) < k:
            break
        full = [i for i in order if r[i] >= mass - ONE_TOL]
        chosen = full[:k]
        for i in order:
            if len(chosen) == k:
                break
            if i not in chosen:
                chosen.append(i)
        chosen_set = set(chosen)
        s = min(r[i] for i in chosen)
        l = max((r[i] for i in order if i not in chosen_set), default=0.0)
        step = min(s, mass - l)
        if step <= 0:
            break
        for i in chosen:
            v = r[i] - step
            r[i] = v if v >= ZERO_TOL else 0.0
        mass -= step
        coefs.append(step)
        corners.append(tuple(sorted(chosen)))

    if mass > n * ONE_TOL or not coefs:
        raise NotInScaledCappedSimplex(f"decomposition stalled with residual mass {mass:.3g}")
    # float drift: fold the leftover sliver into the last corner
    coefs[-1] += mass
    return CornerDecomposition(np.asarray(coefs), corners)


def sample_corner(d: CornerDecomposition, rng: np.random.Generator) -> tuple[int, ...]:
    """Draw one corner with probability equal to its coefficient."""
    cdf = np.cumsum(d.coefficients)
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return d.corners[min(j, len(d.corners) - 1)]
