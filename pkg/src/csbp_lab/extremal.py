"""Record processes and their algebra.

A record process is the running maximum of point-process marks: a
right-continuous nondecreasing step function jumping exactly at the
record atoms.  When marks are Poisson with intensity dx (x) mu, the
process has the product finite-dimensional law of an extremal process
with F = exp(-tail of mu), an equivalent Markov jump construction, and
is max-stable: merging m independent copies built from F^(1/m)
reproduces it.  The jumps are read back from simulated flows as the
individuals whose progeny overwhelms everything below them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    DomainError,
    DomainMismatch,
    InstantaneousState,
    LengthMismatch,
)
from .renorm import SUPERCRITICAL, Renormalizer
from .sampler import PointConfig, RngStream
from .simulate import FlowRealization

NEG_INF = -math.inf


@dataclass
class RecordProcess:
    """Right-continuous running-maximum step function on [0, x_max].

    ``base_value`` is the level before the first record (the lower edge of
    the mark support); jump values are strictly increasing.
    """

    jump_xs: np.ndarray
    jump_zs: np.ndarray
    x_max: float
    base_value: float = NEG_INF

    def __post_init__(self):
        self.jump_xs = np.asarray(self.jump_xs, dtype=float)
        self.jump_zs = np.asarray(self.jump_zs, dtype=float)
        if self.jump_xs.size != self.jump_zs.size:
            raise LengthMismatch("jump positions and values differ in length")
        if np.any(np.diff(self.jump_zs) <= 0.0):
            raise DomainError("record values must be strictly increasing")
        if np.any(np.diff(self.jump_xs) < 0.0):
            raise DomainError("record positions must be nondecreasing")

    @property
    def n_jumps(self) -> int:
        return self.jump_xs.size

    def value_at(self, x: float) -> float:
        """Z(x) = sup of marks at positions <= x (right-continuous)."""
        i = np.searchsorted(self.jump_xs, x, side="right")
        return float(self.jump_zs[i - 1]) if i > 0 else self.base_value

    def final_value(self) -> float:
        return self.value_at(self.x_max)


def records_from_points(pc: PointConfig) -> RecordProcess:
    """Left-to-right sweep keeping strict new maxima of the marks."""
    xs, zs = pc.xs, pc.zs
    keep_x, keep_z = [], []
    best = NEG_INF
    for x, z in zip(xs, zs):
        if z > best:
            keep_x.append(x)
            keep_z.append(z)
            best = z
    return RecordProcess(np.array(keep_x), np.array(keep_z), pc.x_max,
                         base_value=pc.z_floor)


def fdd_probability(cdf: Callable[[float], float], xs, zs) -> float:
    """P(Z(x_1) <= z_1, ..., Z(x_n) <= z_n) for an extremal-F process:
    the product of F(z'_i) to the power of the x-increments, where z'_i
    is the running minimum of the later levels."""
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    if xs.size != zs.size:
        raise LengthMismatch("positions and levels differ in length")
    if xs.size == 0:
        return 1.0
    if np.any(np.diff(xs) <= 0.0) or xs[0] <= 0.0:
        raise DomainError("positions must be positive and strictly increasing")
    zp = np.minimum.accumulate(zs[::-1])[::-1]
    dx = np.diff(np.concatenate([[0.0], xs]))
    prob = 1.0
    for w, z in zip(dx, zp):
        f = cdf(z)
        if f <= 0.0:
            return 0.0
        prob *= f ** w
    return prob


def markov_jump_simulate(cdf: Callable[[float], float], x_max: float,
                         z_start: float, rng: RngStream,
                         q_inverse: Optional[Callable] = None,
                         z_hi: float = 1e12) -> RecordProcess:
    """Simulate the record process as a Markov jump process.

    In state v the holding length is exponential with rate
    Q(v) = -log F(v), and the jump lands in (v, y] with probability
    1 - Q(y)/Q(v); equivalently Q(next) = U Q(v).  ``q_inverse`` maps a
    positive q back to the state with Q(state) = q; bisection on the cdf
    is used when it is not supplied.
    """
    f0 = cdf(z_start)
    if f0 <= 0.0:
        raise InstantaneousState(
            f"cdf({z_start}) = 0: the start state is instantaneous")
    g = rng.gen
    jump_x, jump_z = [], []
    x = 0.0
    v = z_start
    q = -math.log(f0)
    while q > 0.0:
        x += g.standard_exponential() / q
        if x > x_max:
            break
        q *= g.uniform()
        v = q_inverse(q) if q_inverse is not None else \
            _q_inverse_bisect(cdf, v, q, z_hi)
        jump_x.append(x)
        jump_z.append(v)
    return RecordProcess(np.array(jump_x), np.array(jump_z), x_max,
                         base_value=z_start)


def _q_inverse_bisect(cdf, lo: float, q: float, z_hi: float) -> float:
    """State with -log cdf(state) = q, above lo (cdf nondecreasing)."""
    target = math.exp(-q)
    hi = lo + 1.0
    while cdf(hi) < target:
        hi = lo + 2.0 * (hi - lo)
        if hi > z_hi:
            raise DomainError("jump target bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * (1.0 + abs(hi)):
            break
    return 0.5 * (lo + hi)


def max_merge(a: RecordProcess, b: RecordProcess) -> RecordProcess:
    """Pointwise maximum of two record processes on the same domain."""
    if a.x_max != b.x_max:
        raise DomainMismatch(f"domains differ: {a.x_max} vs {b.x_max}")
    base = max(a.base_value, b.base_value)
    events = sorted(
        [(x, z) for x, z in zip(a.jump_xs, a.jump_zs)] +
        [(x, z) for x, z in zip(b.jump_xs, b.jump_zs)])
    keep_x, keep_z = [], []
    best = base
    for x, z in events:
        if z > best:
            keep_x.append(x)
            keep_z.append(z)
            best = z
    return RecordProcess(np.array(keep_x), np.array(keep_z), a.x_max,
                         base_value=base)


@dataclass
class SuperReport:
    """Per-atom comparison of record jumps and the empirical overwhelming
    test on a simulated flow."""

    atom_xs: np.ndarray
    statistics: np.ndarray       # renormalized per-atom statistic at the horizon
    is_record: np.ndarray
    is_super: np.ndarray
    record_prev: np.ndarray      # running max strictly before each record atom
    ratio_final: np.ndarray      # progeny / everything below, at the horizon

    @property
    def record_jump_xs(self) -> np.ndarray:
        return self.atom_xs[self.is_record]

    @property
    def empirical_super_xs(self) -> np.ndarray:
        return self.atom_xs[self.is_super]


def detect_super_individuals(fr: FlowRealization, rn: Renormalizer,
                             ratio_threshold: float = 100.0,
                             monotone_points: int = 3,
                             margin: float = 1e-6) -> SuperReport:
    """Compare the record jumps of the renormalized per-atom statistics
    with the empirical overwhelming criterion.

    An atom is flagged empirically super when its progeny-to-prefix ratio
    exceeds ``ratio_threshold`` at the horizon and increased strictly
    (relative margin ``margin``) over the last ``monotone_points`` grid
    points.  A ratio of +inf (empty prefix) passes both parts: nothing
    below the atom survives to compare against.
    """
    if fr.grid.size < max(2, monotone_points):
        raise DomainError("flow needs at least as many grid times as the "
                          "monotonicity window")
    n = fr.n_atoms
    t_end = float(fr.grid[-1])
    stats = np.array([rn.statistic(t_end, fr.log_paths[i, -1])
                      for i in range(n)])

    is_record = np.zeros(n, dtype=bool)
    record_prev = np.full(n, np.nan)
    best = 0.0  # statistics are nonnegative; zero marks a non-event
    for i in range(n):
        if stats[i] > best:
            is_record[i] = True
            record_prev[i] = best
            best = stats[i]

    cols = range(fr.grid.size - monotone_points, fr.grid.size)
    log_ratios = np.empty((n, monotone_points))
    for k, j in enumerate(cols):
        below = np.concatenate([
            [NEG_INF],
            np.logaddexp.accumulate(fr.log_paths[:-1, j])]) if n else \
            np.empty(0)
        for i in range(n):
            denom = np.logaddexp(below[i], fr.drift_log(fr.xs[i], j)) \
                if fr.drift_coefficient is not None else below[i]
            log_ratios[i, k] = fr.log_paths[i, j] - denom

    is_super = np.zeros(n, dtype=bool)
    for i in range(n):
        r = log_ratios[i]
        if np.isposinf(r[-1]):
            is_super[i] = True
            continue
        exceeded = r[-1] >= math.log(ratio_threshold)
        rose = bool(np.all(np.diff(r) > math.log1p(margin)))
        is_super[i] = exceeded and rose
    with np.errstate(over="ignore"):
        ratio = np.exp(log_ratios[:, -1]) if n else np.empty(0)
    return SuperReport(
        atom_xs=fr.xs, statistics=stats, is_record=is_record,
        is_super=is_super, record_prev=record_prev, ratio_final=ratio)
