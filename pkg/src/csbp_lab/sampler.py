"""Random variate generation: positive stable draws, Poisson point
processes on rectangles, and reproducible keyed RNG streams.

Streams use the counter-based Philox generator keyed by
``(master_seed, stream_id)``: distinct stream ids give statistically
independent streams, and a given key reproduces byte-identical draws
regardless of how many other streams exist or on which worker they run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InfiniteMass

DEFAULT_SEED = 0xC5BF


@dataclass
class RngStream:
    """A keyed, reproducible random stream (one owner at a time)."""

    master_seed: int = DEFAULT_SEED
    stream_id: int = 0
    _gen: Optional[np.random.Generator] = field(
        default=None, repr=False, compare=False)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            key = np.array([self.master_seed % 2 ** 64,
                            self.stream_id % 2 ** 64], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def fresh(self) -> "RngStream":
        """A restarted copy: replays the identical draw sequence."""
        return RngStream(self.master_seed, self.stream_id)


def log_sample_positive_stable(alpha: float, rng: RngStream, size=None):
    """log S for S positive alpha-stable with E[exp(-lam S)] = exp(-lam^alpha).

    Kanter's representation: S = (a(U)/E)^((1-alpha)/alpha) with U uniform
    on (0, pi), E standard exponential and
    a(u) = sin(alpha u)^(alpha/(1-alpha)) sin((1-alpha)u) / sin(u)^(1/(1-alpha)).
    Evaluated entirely in the log domain: for alpha = e^{-t} with t large,
    S itself overflows any float while log S stays modest.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"stable index must be in (0,1], got {alpha}")
    if alpha == 1.0:
        # degenerate: S = 1 exactly
        return 0.0 if size is None else np.zeros(size)
    g = rng.gen
    u = g.uniform(0.0, math.pi, size)
    e = g.standard_exponential(size)
    one_m = 1.0 - alpha
    log_a = (alpha / one_m) * np.log(np.sin(alpha * u)) \
        + np.log(np.sin(one_m * u)) - (1.0 / one_m) * np.log(np.sin(u))
    return (one_m / alpha) * (log_a - np.log(e))


def sample_positive_stable(alpha: float, rng: RngStream, size=None):
    """S positive alpha-stable, alpha in (0,1]; may overflow to inf for
    indices so small that log S exceeds the float range."""
    out = log_sample_positive_stable(alpha, rng, size)
    with np.errstate(over="ignore"):
        return np.exp(out)


@dataclass
class PointConfig:
    """A realized Poisson point process on [0, x_max] x (z_floor, inf).

    Atoms are stored sorted by position; the count in the window is
    Poisson with mean x_max * intensity_tail(z_floor) and positions are
    uniform given the count.
    """

    xs: np.ndarray
    zs: np.ndarray
    x_max: float
    z_floor: float
    intensity_tail: Callable[[float], float]

    def __len__(self) -> int:
        return self.xs.size


def sample_ppp(intensity_tail: Callable, x_max: float, z_floor: float,
               rng: RngStream,
               inverse_tail: Optional[Callable] = None) -> PointConfig:
    """Draw a Poisson point process with intensity dx (x) tail-measure.

    ``intensity_tail(z)`` is the upper-tail mass above level z
    (nonincreasing, right-continuous, finite at z_floor).  Marks are drawn
    by inverse-tail sampling z = tail^{-1}(tail(z_floor) * U), either via
    the supplied closed-form ``inverse_tail`` or by monotone bisection.
    Callables must accept numpy arrays.
    """
    mass = float(intensity_tail(z_floor))
    if not math.isfinite(mass) or mass < 0.0:
        raise InfiniteMass(
            f"intensity tail at z_floor={z_floor} is {mass}")
    g = rng.gen
    n = int(g.poisson(mass * x_max)) if mass * x_max > 0.0 else 0
    if n == 0:
        return PointConfig(np.empty(0), np.empty(0), x_max, z_floor,
                           intensity_tail)
    xs = g.uniform(0.0, x_max, n)
    targets = mass * g.uniform(0.0, 1.0, n)
    if inverse_tail is not None:
        zs = np.asarray(inverse_tail(targets), dtype=float)
    else:
        zs = _inverse_tail_bisect(intensity_tail, z_floor, targets)
    order = np.argsort(xs, kind="stable")
    return PointConfig(xs[order], zs[order], x_max, z_floor, intensity_tail)


def _inverse_tail_bisect(tail: Callable, z_floor: float,
                         targets: np.ndarray) -> np.ndarray:
    """Solve tail(z) = target for each target, z >= z_floor (tail decreasing)."""
    n = targets.size
    lo = np.full(n, z_floor, dtype=float)
    span = np.ones(n)
    hi = lo + span
    for _ in range(200):
        need = np.asarray(tail(hi)) > targets
        if not need.any():
            break
        span[need] *= 2.0
        hi[need] = z_floor + span[need]
    else:
        raise DomainError("inverse tail bracket expansion failed")
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        above = np.asarray(tail(mid)) > targets
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)
