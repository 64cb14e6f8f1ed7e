"""Simulation of branching-process marginals, path skeletons and flows.

Exact samplers exist for the families whose cumulant has a usable closed
form: the Neveu family (stable marginals in log space), the logistic
Feller family (Poisson-gamma transitions), unit-jump finite-variation
mechanisms (piecewise-deterministic jump paths) and the explosive stable
family at index 1/2 (tilted-stable finite part plus an exact explosion
time).  Everything else runs through an Euler jump-diffusion scheme with
a documented truncation/discretization bias.

Flows of subordinators are realized as truncated Poisson configurations
of atoms (x_i, t_i, path); prefix sums over atoms are carried in log
space since population sizes grow super-exponentially.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from .errors import (
    DomainError,
    InfiniteRate,
    StepSizeTooLarge,
    UnsupportedMechanism,
    ValidationError,
)
from .mechanism import (
    FELLER_LOGISTIC,
    FINITE_VAR_DELTA,
    NEVEU,
    STABLE_EXPLOSIVE,
    TRIPLE,
    Mechanism,
    classify,
)
from .sampler import RngStream, log_sample_positive_stable, sample_positive_stable

EXACT_FAMILY = (NEVEU, FELLER_LOGISTIC, FINITE_VAR_DELTA, STABLE_EXPLOSIVE)

NEG_INF = -math.inf


# -- exact marginals ----------------------------------------------------

def marginal_exact(mech: Mechanism, x: float, t: float, rng: RngStream,
                   size=None):
    """log X_t(x) sampled exactly; -inf marks extinction, +inf explosion."""
    if x < 0.0:
        raise DomainError("initial mass must be nonnegative")
    if x == 0.0:
        shape = () if size is None else size
        return np.full(shape, NEG_INF) if size is not None else NEG_INF
    k = mech.kind
    if k == NEVEU:
        # X = x^{1/alpha} S_alpha with alpha = e^{-t}
        alpha = math.exp(-t)
        return math.exp(t) * math.log(x) + \
            log_sample_positive_stable(alpha, rng, size)
    if k == FELLER_LOGISTIC:
        return _feller_logistic_step(x, t, rng, size)
    if k == STABLE_EXPLOSIVE:
        return _stable_explosive_step(mech, x, t, rng, size)
    raise UnsupportedMechanism(
        f"no exact marginal for mechanism {mech.label}")


def _feller_logistic_step(x: float, t: float, rng: RngStream, size=None):
    """Poisson number of exponential families: matches the logistic
    closed form v_t(lam) = lam e^t / (1 + lam (e^t - 1))."""
    if t == 0.0:
        out = math.log(x)
        return out if size is None else np.full(size, out)
    g = rng.gen
    et1 = math.expm1(t)
    n = g.poisson(x * math.exp(t) / et1, size)
    tot = g.gamma(np.asarray(n, dtype=float), et1)
    with np.errstate(divide="ignore"):
        return np.log(tot)


def _stable_explosive_step(mech: Mechanism, x: float, t: float,
                           rng: RngStream, size=None):
    """Finite part of the explosive stable family at index 1/2:
    conditionally on no explosion by t, X = x + (2 t x)^2 S_{1/2}."""
    if mech.alpha != 0.5:
        raise UnsupportedMechanism(
            "exact explosive marginals are implemented at index 1/2 only; "
            "explosion times are exact for any index")
    if t == 0.0:
        out = math.log(x)
        return out if size is None else np.full(size, out)
    g = rng.gen
    e = g.standard_exponential(size)
    xi = (e / x) ** 0.5
    s = sample_positive_stable(0.5, rng, size)
    val = np.log(x + (2.0 * t * x) ** 2 * s)
    return np.where(xi <= t, math.inf, val) if size is not None else \
        (math.inf if xi <= t else float(val))


def explosion_time(mech: Mechanism, x: float, rng: RngStream, size=None):
    """Exact explosion time of the explosive stable family:
    P(xi_x > t) = exp(-x t^{1/(1-alpha)}), so xi = (E/x)^{1-alpha}."""
    if mech.kind != STABLE_EXPLOSIVE:
        raise UnsupportedMechanism(
            f"explosion time requires the explosive stable family, "
            f"got {mech.label}")
    if x <= 0.0:
        raise DomainError("initial mass must be positive")
    e = rng.gen.standard_exponential(size)
    return (e / x) ** (1.0 - mech.alpha)


# -- exact skeletons ----------------------------------------------------

def skeleton_exact(mech: Mechanism, x: float, grid, rng: RngStream):
    """log X at the grid times, chaining exact transitions (Markov)."""
    grid = _check_grid(grid)
    k = mech.kind
    if k == NEVEU:
        if x == 0.0:
            return np.full(grid.size, NEG_INF)
        return _neveu_skeleton_logs(
            np.array([math.log(x)]), grid, 0.0, rng)[0]
    if k == FELLER_LOGISTIC:
        out = np.empty(grid.size)
        y = x
        prev = 0.0
        for j, tj in enumerate(grid):
            dt = tj - prev
            if y > 0.0 and dt > 0.0:
                ly = _feller_logistic_step(y, dt, rng)
                y = math.exp(ly) if ly > NEG_INF else 0.0
            out[j] = math.log(y) if y > 0.0 else NEG_INF
            prev = tj
        return out
    if k == FINITE_VAR_DELTA:
        return _pdmp_unit_jump_logs(mech.d, x, grid, rng)
    if k == STABLE_EXPLOSIVE:
        out = np.empty(grid.size)
        y = x
        prev = 0.0
        for j, tj in enumerate(grid):
            dt = tj - prev
            if math.isfinite(y) and y > 0.0 and dt > 0.0:
                ly = _stable_explosive_step(mech, y, dt, rng)
                y = math.exp(ly) if math.isfinite(ly) else math.inf
            out[j] = math.log(y) if y > 0.0 else NEG_INF
            prev = tj
        return out
    raise UnsupportedMechanism(f"no exact skeleton for {mech.label}")


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("grid must be a nonempty 1-d array of times")
    if np.any(np.diff(grid) <= 0.0) or grid[0] < 0.0:
        raise ValidationError("grid times must be nonnegative and strictly "
                              "increasing")
    return grid


def _neveu_skeleton_logs(log_x0: np.ndarray, grid: np.ndarray, t0: float,
                         rng: RngStream) -> np.ndarray:
    """Vectorized Neveu chaining: log X' = e^{dt} log X + log S_{e^{-dt}}.

    Starts from log masses at time t0; returns (n, grid.size) log paths.
    """
    n = log_x0.size
    out = np.empty((n, grid.size))
    cur = log_x0.astype(float, copy=True)
    prev = t0
    for j, tj in enumerate(grid):
        dt = tj - prev
        if dt > 0.0:
            cur = math.exp(dt) * cur + \
                log_sample_positive_stable(math.exp(-dt), rng, n)
        out[:, j] = cur
        prev = tj
    return out


def _pdmp_unit_jump_logs(d: float, x: float, grid: np.ndarray,
                         rng: RngStream) -> np.ndarray:
    """Exact path of the unit-jump finite-variation mechanism
    psi(u) = d u - (1 - e^{-u}): deterministic decay at rate d between
    jumps of size one arriving at rate X_t (no discretization error)."""
    out = np.full(grid.size, NEG_INF)
    if x <= 0.0:
        return out
    g = rng.gen
    t = 0.0
    y = x
    horizon = grid[-1]
    j = 0
    while True:
        e = g.standard_exponential()
        # cumulative jump hazard from t: y (1 - e^{-d tau}) / d
        if e >= y / d:
            tau = math.inf
        else:
            tau = -math.log1p(-d * e / y) / d
        t_next = t + tau
        while j < grid.size and grid[j] <= min(t_next, horizon):
            out[j] = math.log(y) - d * (grid[j] - t)
            j += 1
        if t_next > horizon:
            return out
        y = y * math.exp(-d * tau) + 1.0
        t = t_next


# -- Euler backend -------------------------------------------------------

@dataclass
class JumpStructure:
    """Truncated jump data for a mechanism: rate and sampler of jumps above
    the cutoff, and the moments of what is left below it."""

    rate: float                      # tail mass above the cutoff
    drift: float                     # per-unit-mass drift, compensation folded in
    small_var: float                 # sigma^2 + int_0^eps r^2 pi(dr)
    eps: float
    _zs: Optional[np.ndarray] = field(default=None, repr=False)
    _logtails: Optional[np.ndarray] = field(default=None, repr=False)
    atomic_unit: bool = False

    def sample_jumps(self, rng: RngStream, n: int) -> np.ndarray:
        if n == 0:
            return np.empty(0)
        if self.atomic_unit:
            return np.ones(n)
        u = rng.gen.uniform(0.0, 1.0, n)
        # inverse-tail via the precomputed log-log table
        target = np.log(self.rate * u)
        return np.exp(np.interp(-target, -self._logtails, np.log(self._zs)))


def jump_structure(mech: Mechanism, eps: float) -> JumpStructure:
    """Build the truncated jump data for a density triple or the unit-jump
    family.  Raises InfiniteRate when the tail above eps has infinite mass."""
    if eps <= 0.0:
        raise DomainError("jump cutoff must be positive")
    if mech.kind == FINITE_VAR_DELTA:
        if eps >= 1.0:
            raise DomainError("cutoff above the unit jump removes all jumps")
        return JumpStructure(rate=1.0, drift=-mech.d, small_var=0.0,
                             eps=eps, atomic_unit=True)
    if mech.pi is None:
        raise UnsupportedMechanism(
            f"euler stepping needs a jump density; got {mech.label}")
    pi = mech.pi

    def q(f, a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-10,
                                  limit=200)[0]

    # tail mass by dyadic blocks; slow geometric decay over a sustained
    # streak of blocks flags an infinite tail
    a = eps
    total = 0.0
    prev = None
    streak = 0
    z_hi = None
    for _ in range(200):
        seg = q(pi, a, 2.0 * a)
        total += seg
        if prev is not None and prev > 0.0:
            streak = streak + 1 if seg > 0.95 * prev else 0
            if streak >= 10:
                raise InfiniteRate(f"jump tail above eps={eps} does not decay")
            if seg <= 1e-13 * (total + 1e-300):
                z_hi = 2.0 * a
                break
        prev = seg
        a *= 2.0
    if z_hi is None:
        raise InfiniteRate(f"jump tail above eps={eps} does not stabilize")
    rate = total

    m1_comp = q(lambda r: r * pi(r), min(eps, 1.0), max(eps, 1.0))
    if eps > 1.0:
        m1_comp = -m1_comp
    drift = -mech.gamma - m1_comp
    small_var = mech.sigma ** 2 + q(lambda r: r * r * pi(r), 0.0, eps)

    # inverse-tail table on a log grid covering the tail support
    zs = np.geomspace(eps, z_hi, 600)
    dens = np.array([pi(z) for z in zs])
    # cumulative tail from above by trapezoid in z, pinned to the quad rate
    rev = np.cumsum((0.5 * (dens[1:] + dens[:-1]) * np.diff(zs))[::-1])[::-1]
    tails = np.concatenate([rev, [1e-300]])
    tails = np.maximum(tails, 1e-300)
    tails *= rate / tails[0]
    return JumpStructure(rate=rate, drift=drift, small_var=small_var,
                         eps=eps, _zs=zs, _logtails=np.log(tails))


def default_jump_cutoff(mech: Mechanism) -> float:
    """Largest cutoff whose small-jump variance is below 1e-4 of the total
    quadratic activity."""
    if mech.kind == FINITE_VAR_DELTA:
        return 0.5
    pi = mech.pi

    def q(f, a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-8,
                                  limit=200)[0]

    total = mech.sigma ** 2 + q(lambda r: r * r * pi(r), 0.0, 1.0) \
        + q(pi, 1.0, np.inf)
    eps = 0.25
    for _ in range(40):
        if q(lambda r: r * r * pi(r), 0.0, eps) < 1e-4 * total:
            return eps
        eps /= 4.0
    raise InfiniteRate("no workable jump cutoff found")


def path_euler(mech: Mechanism, x: float, grid, jump_cutoff: float,
               rng: RngStream, dt: Optional[float] = None) -> np.ndarray:
    """Euler jump-diffusion discretization of the branching dynamics.

    Jumps of size r >= cutoff arrive at rate X pi-tail(cutoff); smaller
    jumps and the diffusion part enter as a Gaussian with variance
    X (sigma^2 + int_0^eps r^2 pi) dt; the drift carries the jump
    compensation.  Approximate by construction: bias O(dt) plus the
    small-jump substitution error.
    """
    grid = _check_grid(grid)
    if mech.kind not in (TRIPLE, FINITE_VAR_DELTA):
        mech = mech.triple_form()
    js = jump_structure(mech, jump_cutoff)
    if dt is None:
        scale = max(abs(classify(mech).psi_prime_0), 1.0)
        if not math.isfinite(scale):
            scale = 1.0
        dt = 1e-3 / scale
    # Adaptive halving: the deterministic drift part of one step may move
    # mass by at most 25%.  Halving is decided before any draw (redrawing a
    # realized move would bias the law); jumps are genuine discontinuities
    # and exempt, and the diffusion term simply clips at zero.
    halvings = 0
    while abs(js.drift) * dt > 0.25:
        dt /= 2.0
        halvings += 1
        if halvings > 20:
            raise StepSizeTooLarge(
                "drift moves mass by more than 50% per step even after "
                "20 halvings")
    g = rng.gen
    out = np.full(grid.size, NEG_INF)
    y = x
    t = 0.0
    for j, tj in enumerate(grid):
        while t < tj - 1e-15:
            step = min(dt, tj - t)
            y = _euler_step(y, step, js, g)
            t += step
        out[j] = math.log(y) if y > 0.0 else NEG_INF
        t = tj
    return out


def _euler_step(y: float, dt: float, js: JumpStructure, g) -> float:
    if y <= 0.0:
        return 0.0
    drift = js.drift * y * dt
    diff = math.sqrt(max(y * js.small_var * dt, 0.0)) * g.standard_normal()
    njump = g.poisson(y * js.rate * dt)
    jumps = 0.0
    if njump:
        if js.atomic_unit:
            jumps = float(njump)
        else:
            u = g.uniform(0.0, 1.0, njump)
            target = np.log(js.rate * u)
            jumps = float(np.sum(np.exp(
                np.interp(-target, -js._logtails, np.log(js._zs)))))
    return max(y + drift + diff + jumps, 0.0)


# -- flows of subordinators ----------------------------------------------

@dataclass
class FlowRealization:
    """A truncated Poisson realization of a flow of subordinators.

    ``log_paths[i, j]`` is log X^i at grid time j (-inf before birth or
    after extinction, +inf after explosion).  Prefix sums in x are formed
    in log space; for finite-variation mechanisms they include the
    deterministic drift term e^{-d t} x.
    """

    mech: Mechanism
    grid: np.ndarray
    xs: np.ndarray
    births: np.ndarray
    log_paths: np.ndarray
    x_max: float
    drift_coefficient: Optional[float]
    truncation: dict

    @property
    def n_atoms(self) -> int:
        return self.xs.size

    def drift_log(self, x: float, j: int) -> float:
        if self.drift_coefficient is None or x <= 0.0:
            return NEG_INF
        return math.log(x) - self.drift_coefficient * self.grid[j]

    def prefix_log(self, i: int, j: int) -> float:
        """log X_{t_j}(x_i-): everything strictly below atom i."""
        below = self.log_paths[:i, j]
        acc = NEG_INF
        if below.size:
            acc = float(_lse(below))
        return np.logaddexp(acc, self.drift_log(self.xs[i], j)) \
            if self.drift_coefficient is not None else acc

    def total_log(self, j: int, x: Optional[float] = None) -> float:
        if x is None:
            x = self.x_max
        sel = self.xs <= x
        acc = float(_lse(self.log_paths[sel, j])) if sel.any() else NEG_INF
        if self.drift_coefficient is not None:
            acc = float(np.logaddexp(acc, self.drift_log(x, j)))
        return acc

    def prefix_monotone_in_x(self) -> bool:
        """Prefix sums are nondecreasing in x at every grid time."""
        for j in range(self.grid.size):
            vals = np.logaddexp.accumulate(
                np.nan_to_num(self.log_paths[:, j], neginf=-1e308))
            if np.any(np.diff(vals) < -1e-12):
                return False
        return True


def _lse(a: np.ndarray) -> float:
    finite = a[a > NEG_INF]
    if finite.size == 0:
        return NEG_INF
    if np.any(np.isinf(finite)):
        return math.inf
    m = finite.max()
    return float(m + math.log(np.sum(np.exp(finite - m))))


def flow_finite_variation(mech: Mechanism, x_max: float, grid,
                          eps: float, rng: RngStream) -> FlowRealization:
    """Poisson flow for a finite-variation mechanism: atoms (x_i, t_i)
    with intensity dx (x) e^{-d t} dt and initial mass drawn from the jump
    measure above eps, evolved by the exact skeleton (unit-jump family)
    or the Euler backend; prefix sums carry the drift term e^{-d t} x."""
    grid = _check_grid(grid)
    cls = classify(mech)
    d = cls.d_coeff
    if not 0.0 < d < math.inf:
        raise DomainError(f"finite-variation flow needs d in (0,inf), "
                          f"got {d}")
    js = jump_structure(mech, eps)
    if js.rate <= 0.0:
        raise InfiniteRate("no jump mass above the cutoff")
    horizon = float(grid[-1])
    g = rng.gen
    birth_mass = (1.0 - math.exp(-d * horizon)) / d
    n = int(g.poisson(x_max * birth_mass * js.rate))
    xs = np.sort(g.uniform(0.0, x_max, n))
    u = g.uniform(0.0, 1.0, n)
    births = -np.log1p(-u * (1.0 - math.exp(-d * horizon))) / d
    masses = js.sample_jumps(rng, n)

    log_paths = np.full((n, grid.size), NEG_INF)
    for i in range(n):
        alive = grid >= births[i]
        offsets = grid[alive] - births[i]
        if offsets.size == 0:
            continue
        offsets = np.maximum(offsets, 1e-12)
        if mech.kind == FINITE_VAR_DELTA:
            log_paths[i, alive] = _pdmp_unit_jump_logs(
                mech.d, masses[i], offsets, rng)
        else:
            log_paths[i, alive] = path_euler(mech, masses[i], offsets,
                                             eps, rng)
    below_mean = 0.0 if mech.kind == FINITE_VAR_DELTA else _mean_below(mech, eps)
    return FlowRealization(
        mech=mech, grid=grid, xs=xs, births=births, log_paths=log_paths,
        x_max=x_max, drift_coefficient=d,
        truncation={"epsilon": eps,
                    "missed_mass_mean": x_max * birth_mass * below_mean})


def _mean_below(mech: Mechanism, eps: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda r: r * mech.pi(r), 0.0, eps,
                                epsabs=1e-14, epsrel=1e-8, limit=200)
    return val


def neveu_entrance_rate(s_threshold: float, eps: float) -> float:
    """Atoms per unit x whose mass at time s exceeds eps: the Neveu
    entrance law at time s is the stable law of index alpha = e^{-s},
    with tail eps^{-alpha} / Gamma(1 - alpha)."""
    alpha = math.exp(-s_threshold)
    return eps ** (-alpha) / special.gamma(1.0 - alpha)


def flow_neveu(x_max: float, s_threshold: float, eps: float, grid,
               rng: RngStream) -> FlowRealization:
    """Truncated Poisson flow of Neveu processes.

    Clusters alive with mass >= eps at the threshold time arrive along x
    at the entrance-law tail rate; their masses follow the normalized
    Pareto tail of index alpha = e^{-s}, and each evolves by the exact
    Neveu skeleton from the threshold onwards.  The ignored sub-eps
    clusters are summarized by a mean-mass bias bound (which also bounds
    the rate of missed prolific clusters, since 1 - e^{-r} <= r).
    """
    if s_threshold <= 0.0 or eps <= 0.0:
        raise DomainError("threshold time and cutoff must be positive")
    grid = _check_grid(grid)
    if grid[0] < s_threshold:
        raise ValidationError(
            f"grid must start at or after the threshold time {s_threshold}")
    alpha = math.exp(-s_threshold)
    rate = neveu_entrance_rate(s_threshold, eps)
    g = rng.gen
    n = int(g.poisson(x_max * rate))
    xs = np.sort(g.uniform(0.0, x_max, n))
    # Pareto(alpha) tail above eps
    masses_log = math.log(eps) - np.log(g.uniform(0.0, 1.0, n)) / alpha
    log_paths = _neveu_skeleton_logs(masses_log, grid, s_threshold, rng)
    mean_below = alpha / special.gamma(1.0 - alpha) \
        * eps ** (1.0 - alpha) / (1.0 - alpha)
    return FlowRealization(
        mech=Mechanism.neveu(), grid=grid, xs=xs,
        births=np.full(n, s_threshold), log_paths=log_paths, x_max=x_max,
        drift_coefficient=None,
        truncation={"epsilon": eps, "s_threshold": s_threshold,
                    "missed_mass_mean": x_max * mean_below,
                    "missed_prolific_rate_bound": x_max * mean_below})
