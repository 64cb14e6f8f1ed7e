"""Sampler tests: stable draws against closed-form laws, point processes."""

import math

import numpy as np
import pytest
from scipy import special, stats

from csbp_lab.errors import DomainError, InfiniteMass
from csbp_lab.sampler import (
    RngStream,
    log_sample_positive_stable,
    sample_positive_stable,
    sample_ppp,
)

N = 100_000


def stream(sid=0, seed=0xC5BF):
    return RngStream(seed, sid)


def test_alpha_one_degenerate():
    s = sample_positive_stable(1.0, stream(), size=10)
    assert np.all(s == 1.0)


def test_alpha_out_of_range():
    with pytest.raises(DomainError):
        sample_positive_stable(1.5, stream())
    with pytest.raises(DomainError):
        sample_positive_stable(0.0, stream())


def test_alpha_half_matches_levy_cdf():
    # closed-form oracle: for E[e^{-lam S}] = e^{-sqrt(lam)} the CDF is
    # erfc(1 / (2 sqrt(s)))
    s = np.sort(sample_positive_stable(0.5, stream(1), size=N))
    cdf = special.erfc(1.0 / (2.0 * np.sqrt(s)))
    i = np.arange(1, N + 1)
    d = np.max(np.maximum(i / N - cdf, cdf - (i - 1) / N))
    assert d < 1.36 / math.sqrt(N)


@pytest.mark.parametrize("alpha", [0.1, 0.3678794411714423, 0.7, 0.95])
def test_laplace_transform_at_one(alpha):
    # E[e^{-S}] = e^{-1} for every index
    s = sample_positive_stable(alpha, stream(2), size=N)
    with np.errstate(over="ignore"):
        vals = np.exp(-s)
    m, se = vals.mean(), vals.std(ddof=1) / math.sqrt(N)
    assert abs(m - math.exp(-1.0)) < 3.0 * se


def test_laplace_transform_tiny_index_log_domain():
    # alpha = e^{-8}: S overflows, log S does not
    alpha = math.exp(-8.0)
    ls = log_sample_positive_stable(alpha, stream(3), size=N)
    assert np.all(np.isfinite(ls))
    with np.errstate(over="ignore"):
        vals = np.exp(-np.exp(ls))
    m, se = vals.mean(), vals.std(ddof=1) / math.sqrt(N)
    assert abs(m - math.exp(-1.0)) < 3.0 * se


def test_reproducibility_and_independence():
    a = sample_positive_stable(0.4, stream(7), size=50)
    b = sample_positive_stable(0.4, stream(7), size=50)
    assert np.array_equal(a, b)
    c = sample_positive_stable(0.4, stream(8), size=50)
    assert not np.array_equal(a, c)


def test_ppp_reproducible():
    tail = lambda z: np.exp(-z)
    p1 = sample_ppp(tail, 1.0, -2.0, stream(9))
    p2 = sample_ppp(tail, 1.0, -2.0, stream(9))
    assert np.array_equal(p1.xs, p2.xs)
    assert np.array_equal(p1.zs, p2.zs)


def test_ppp_counts_unit_mean():
    tail = lambda z: np.exp(-z)
    counts = [len(sample_ppp(tail, 1.0, 0.0, stream(i, seed=11)))
              for i in range(2000)]
    m = np.mean(counts)
    assert abs(m - 1.0) < 3.0 * math.sqrt(1.0 / 2000)


def test_ppp_counts_exp_floor():
    # mean count e^5 ~ 148.41
    tail = lambda z: np.exp(-z)
    counts = [len(sample_ppp(tail, 1.0, -5.0, stream(i, seed=12)))
              for i in range(200)]
    m = np.mean(counts)
    target = math.exp(5.0)
    assert abs(m - target) < 3.0 * math.sqrt(target / 200)


def test_ppp_counts_power_tail():
    # tail z^-2 above 1, x_max 2: mean count 2 * 1 = 2
    tail = lambda z: z ** -2.0
    counts = [len(sample_ppp(tail, 2.0, 1.0, stream(i, seed=13)))
              for i in range(2000)]
    m = np.mean(counts)
    assert abs(m - 2.0) < 3.0 * math.sqrt(2.0 / 2000)


def test_ppp_mark_tail_frequencies():
    tail = lambda z: np.exp(-z)
    pc = sample_ppp(tail, 400.0, 0.0, stream(21))
    n = len(pc)
    for z in (0.5, 1.0, 2.0):
        p = math.exp(-z)  # tail(z)/tail(0)
        frac = np.mean(pc.zs > z)
        se = math.sqrt(p * (1.0 - p) / n)
        assert abs(frac - p) < 3.0 * se + 1e-12


def test_ppp_positions_sorted_uniform():
    tail = lambda z: np.exp(-z)
    pc = sample_ppp(tail, 2.0, -3.0, stream(22))
    assert np.all(np.diff(pc.xs) >= 0.0)
    assert stats.kstest(pc.xs / 2.0, "uniform").statistic < 1.36 / math.sqrt(len(pc))


def test_ppp_bisection_matches_closed_inverse():
    tail = lambda z: np.exp(-z)
    inv = lambda w: -np.log(w)
    a = sample_ppp(tail, 1.0, -5.0, stream(30))
    b = sample_ppp(tail, 1.0, -5.0, stream(30), inverse_tail=inv)
    assert np.array_equal(a.xs, b.xs)
    assert np.allclose(a.zs, b.zs, rtol=0.0, atol=1e-10)


def test_ppp_infinite_mass_rejected():
    with pytest.raises(InfiniteMass):
        sample_ppp(lambda z: 1.0 / np.maximum(z, 0.0), 1.0, 0.0, stream(31))
