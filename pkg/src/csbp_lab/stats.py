"""Goodness-of-fit machinery and reference extreme-value laws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TooFewSamples


@dataclass
class KsReport:
    """One pass/fail check: passes iff statistic <= threshold + bias_budget.

    ``bias_budget`` carries the explicit finite-horizon / truncation
    allowance on top of the pure sampling threshold.
    """

    experiment: str
    check: str
    n: int
    statistic: float
    threshold: float
    bias_budget: float = 0.0

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold + self.bias_budget

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.experiment}/{self.check}: "
                f"statistic={self.statistic:.6g} vs "
                f"threshold={self.threshold:.6g}+{self.bias_budget:.6g} "
                f"(n={self.n})")


def ks_critical(n: int, level: float = 0.05) -> float:
    """Asymptotic one-sample critical value; 1.36/sqrt(n) at the 5% level."""
    coeff = {0.05: 1.36, 0.01: 1.63, 0.10: 1.22}[level]
    return coeff / math.sqrt(n)


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Sup distance between the empirical CDF and F over the sample points,
    both one-sided gaps included.  Samples must be sorted ascending."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 10:
        raise TooFewSamples(f"need at least 10 samples, got {n}")
    f = np.asarray(cdf(samples), dtype=float)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - f, f - (i - 1) / n)))


def two_sample_ks(a: np.ndarray, b: np.ndarray) -> float:
    """Sup distance between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size < 10 or b.size < 10:
        raise TooFewSamples("need at least 10 samples on each side")
    data = np.concatenate([a, b])
    ca = np.searchsorted(a, data, side="right") / a.size
    cb = np.searchsorted(b, data, side="right") / b.size
    return float(np.max(np.abs(ca - cb)))


def gumbel_cdf(z):
    """exp(-e^{-z}) on the whole line."""
    return np.exp(-np.exp(-np.asarray(z, dtype=float)))


def frechet_cdf(z, beta: float):
    """exp(-z^{-beta}) on z > 0, zero at or below 0."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(z > 0.0, np.exp(-np.maximum(z, 1e-300) ** -beta), 0.0)
    return out


def weibull_cdf(t, beta: float):
    """1 - exp(-t^beta) on t > 0, zero at or below 0."""
    t = np.asarray(t, dtype=float)
    return np.where(t > 0.0, -np.expm1(-np.maximum(t, 0.0) ** beta), 0.0)


def mean_within(values: np.ndarray, target: float, sigmas: float = 3.0,
                extra: float = 0.0):
    """(|mean - target|, sigmas * stderr + extra): a mean-match check pair."""
    values = np.asarray(values, dtype=float)
    m = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size))
    return abs(m - target), sigmas * se + extra
