import math

import numpy as np
import pytest

from oracles import brute_joint_probability
from sleeping_exp3.core import EnumerationTooLarge, make_rng, sample_bernoulli_set
from sleeping_exp3.estimator import (
    AvailabilityEstimate,
    exact_joint_probability,
    monte_carlo_joint_probability,
    record_availability,
)


def _estimate(rates_or_counts, t):
    return AvailabilityEstimate(np.asarray(rates_or_counts, dtype=np.int64), t)


def test_record_fresh():
    est = record_availability(AvailabilityEstimate.empty(3), (0, 1))
    assert est.counts.tolist() == [1, 1, 0] and est.t == 1


def test_always_available_rate_is_one():
    est = AvailabilityEstimate.empty(2)
    for _ in range(50):
        est = est.record((0,))
    assert est.rates.tolist() == [1.0, 0.0]


def test_empirical_rate_concentrates():
    rng = make_rng(1)
    est = AvailabilityEstimate.empty(1)
    n = 10_000
    for _ in range(n):
        est = est.record(sample_bernoulli_set(np.array([0.3]), rng))
    assert abs(est.rates[0] - 0.3) <= 3 * math.sqrt(0.21 / n)


def test_prior_before_any_round_is_all_ones():
    assert AvailabilityEstimate.empty(4).rates.tolist() == [1.0] * 4


def test_exact_two_always_available():
    q = exact_joint_probability(_estimate([5, 5], 5), np.zeros(2), 1)
    np.testing.assert_allclose(q, [0.5, 0.5])


def test_exact_one_never_available():
    q = exact_joint_probability(_estimate([5, 0], 5), np.zeros(2), 1)
    np.testing.assert_allclose(q, [1.0, 0.0])


def test_exact_three_arm_example():
    # hand sum over the four sets containing arm 2 (each with mass 1/4):
    # {2}: [0,0,1]  {0,2}: [.5,0,.5]  {1,2}: [0,.5,.5]  {0,1,2}: [1/3]*3
    hand = 0.25 * (np.array([0, 0, 1]) + [0.5, 0, 0.5] + [0, 0.5, 0.5] + np.full(3, 1 / 3))
    brute = brute_joint_probability([0.5, 0.5, 1.0], np.ones(3), 1)
    np.testing.assert_allclose(brute, hand, atol=1e-15)
    np.testing.assert_allclose(hand, [5 / 24, 5 / 24, 14 / 24], atol=1e-15)
    q = exact_joint_probability(_estimate([1, 1, 2], 2), np.zeros(3), 1)
    np.testing.assert_allclose(q, hand, atol=1e-14)


def test_exact_matches_brute_force(rng):
    for _ in range(60):
        n = int(rng.integers(2, 8))
        k = int(rng.integers(1, n + 1))
        rates = rng.choice([0.0, 1.0, 0.3, 0.5, 0.9], size=n)
        lw = rng.normal(size=n) * 2
        t = 10
        est = AvailabilityEstimate(np.round(rates * t).astype(np.int64), t)
        q = exact_joint_probability(est, lw, k)
        np.testing.assert_allclose(q, brute_joint_probability(est.rates, np.exp(lw), k), atol=1e-12)
        assert np.all((q >= 0) & (q <= 1 + 1e-12)) and q.sum() <= k + 1e-9
        assert np.all(q[est.rates == 0] == 0)


def test_enumeration_limit():
    with pytest.raises(EnumerationTooLarge):
        exact_joint_probability(AvailabilityEstimate(np.ones(17, dtype=np.int64), 1), np.zeros(17), 2)


def test_monte_carlo_degenerate_equals_exact():
    est = _estimate([4, 0, 4, 4], 4)
    lw = np.array([0.3, -1.0, 2.0, 0.0])
    exact = exact_joint_probability(est, lw, 2)
    for samples in (1, 7, 100):
        mc = monte_carlo_joint_probability(est, lw, 2, samples, make_rng(samples))
        assert np.array_equal(mc, exact)


def _random_estimate(rng, n, t):
    a = rng.uniform(0.2, 1.0, size=n)
    counts = (rng.random((t, n)) < a).sum(axis=0)
    return AvailabilityEstimate(counts.astype(np.int64), t)


def test_monte_carlo_within_concentration_scale():
    rng = make_rng(2024)
    n, k, t, delta = 8, 2, 500, 0.01
    bound = 4 * k * n * math.sqrt(math.log(2 * n / delta) / t)
    ok = 0
    for _ in range(100):
        est = _random_estimate(rng, n, t)
        lw = rng.normal(size=n)
        exact = exact_joint_probability(est, lw, k)
        mc = monte_carlo_joint_probability(est, lw, k, t, rng)
        ok += np.abs(mc - exact).max() <= bound
    assert ok == 100


def test_monte_carlo_converges():
    rng = make_rng(5)
    est = _random_estimate(rng, 6, 200)
    lw = rng.normal(size=6)
    exact = exact_joint_probability(est, lw, 2)
    mc = monte_carlo_joint_probability(est, lw, 2, 1_000_000, rng)
    assert np.abs(mc - exact).max() <= 1e-2


def test_monte_carlo_unbiased():
    rng = make_rng(77)
    est = _random_estimate(rng, 5, 100)
    lw = rng.normal(size=5)
    exact = exact_joint_probability(est, lw, 2)
    draws = np.array([monte_carlo_joint_probability(est, lw, 2, 20, rng) for _ in range(2000)])
    se = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - exact) <= 3 * se + 1e-12)
    assert np.all((draws >= 0) & (draws <= 1 + 1e-12))
    assert np.all(draws.sum(axis=1) <= 2 + 1e-9)


def test_monte_carlo_deterministic_given_rng():
    est = _estimate([3, 2, 1], 4)
    a = monte_carlo_joint_probability(est, np.zeros(3), 1, 50, make_rng(9))
    b = monte_carlo_joint_probability(est, np.zeros(3), 1, 50, make_rng(9))
    assert np.array_equal(a, b)
