"""Independent reference computations used only by the tests."""
from itertools import combinations, product

import numpy as np


def water_fill(p, k):
    """Cap at 1/k by pinning every violator at once and rescaling the rest, to a fixpoint."""
    p = np.asarray(p, dtype=float)
    pinned = np.zeros(p.size, dtype=bool)
    out = p.copy()
    while True:
        free = ~pinned
        budget = 1.0 - pinned.sum() / k
        out[free] = p[free] * budget / p[free].sum()
        out[pinned] = 1.0 / k
        viol = free & (out > 1.0 / k + 1e-15)
        if not viol.any():
            return out
        pinned |= viol


def brute_joint_probability(rates, weights, k):
    """Sum over all 2^N sets with explicit Bernoulli products and a water-fill per set."""
    n = len(rates)
    total = np.zeros(n)
    for bits in product((0, 1), repeat=n):
        s = [i for i in range(n) if bits[i]]
        prob = 1.0
        for i in range(n):
            prob *= rates[i] if bits[i] else 1.0 - rates[i]
        if prob == 0.0 or not s:
            continue
        q = np.zeros(n)
        if len(s) < k:
            q[s] = 1.0
        else:
            w = np.asarray(weights, dtype=float)[s]
            q[s] = k * water_fill(w / w.sum(), k)
        total += prob * q
    return total


def corner_lp_coefficients(q, k):
    """Feasible mixture weights over all k-subsets via an LP (scipy)."""
    from scipy.optimize import linprog

    n = len(q)
    corners = list(combinations(range(n), k))
    A = np.zeros((n + 1, len(corners)))
    for j, c in enumerate(corners):
        A[list(c), j] = 1.0
    A[n, :] = 1.0
    b = np.append(q, 1.0)
    res = linprog(np.zeros(len(corners)), A_eq=A, b_eq=b, bounds=(0, 1), method="highs")
    return res, corners
