"""Branching mechanisms and their classification.

A mechanism is the convex function psi appearing in the Laplace functional
``E[exp(-lam X_t(x))] = exp(-x v_t(lam))`` of a continuous-state branching
process.  Closed-form families are evaluated exactly; a general mechanism is
specified by its diffusion coefficient sigma, drift gamma and jump density pi
and evaluated by compensated quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special

from .errors import (
    DomainError,
    InconclusiveIntegralTest,
    NonIntegrableLevyMeasure,
    QuadratureFailure,
)

# Closed-form family tags.
NEVEU = "neveu"
STABLE_EXPLOSIVE = "stable_explosive"
STABLE_SUBCRITICAL = "stable_subcritical"
LOG_SHIFT = "log_shift"
FELLER_LOGISTIC = "feller_logistic"
FINITE_VAR_DELTA = "finite_var_delta"
TRIPLE = "triple"

CLOSED_FORMS = (
    NEVEU,
    STABLE_EXPLOSIVE,
    STABLE_SUBCRITICAL,
    LOG_SHIFT,
    FELLER_LOGISTIC,
    FINITE_VAR_DELTA,
)

# Dyadic divergence heuristic (see classify): block cap, ratio threshold and
# the number of consecutive slow-decay blocks that declare divergence.
_BLOCK_CAP = 60
_RATIO_THRESHOLD = 0.95
_RATIO_STREAK = 10
_TAIL_REL_TOL = 1e-12

_QUAD_REL_TOL = 1e-10


@dataclass(frozen=True)
class Hints:
    """Analytic knowledge about a user-supplied jump density.

    Each field is True/False when known and None when unknown; hints take
    precedence over the numeric divergence heuristic.
    """

    mean_finite: Optional[bool] = None
    variation_finite: Optional[bool] = None
    persistent: Optional[bool] = None
    non_explosive: Optional[bool] = None


@dataclass(frozen=True)
class Mechanism:
    """A branching mechanism, either a closed-form family or a Levy triple.

    Immutable; all operations on it are pure.
    """

    kind: str
    alpha: Optional[float] = None
    d: Optional[float] = None
    sigma: float = 0.0
    gamma: float = 0.0
    pi: Optional[Callable[[float], float]] = None
    hints: Hints = field(default_factory=Hints)
    label: str = ""

    # -- constructors -------------------------------------------------

    @staticmethod
    def neveu() -> "Mechanism":
        """psi(u) = u log u."""
        return Mechanism(kind=NEVEU, label="neveu")

    @staticmethod
    def stable_explosive(alpha: float) -> "Mechanism":
        """psi(u) = -u^alpha / (1 - alpha), alpha in (0, 1)."""
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"stable_explosive needs alpha in (0,1), got {alpha}")
        return Mechanism(kind=STABLE_EXPLOSIVE, alpha=alpha,
                         label=f"stable_explosive(alpha={alpha:g})")

    @staticmethod
    def stable_subcritical(alpha: float) -> "Mechanism":
        """psi(u) = alpha * u^(alpha+1), alpha in (0, 1]."""
        if not 0.0 < alpha <= 1.0:
            raise DomainError(f"stable_subcritical needs alpha in (0,1], got {alpha}")
        return Mechanism(kind=STABLE_SUBCRITICAL, alpha=alpha,
                         label=f"stable_subcritical(alpha={alpha:g})")

    @staticmethod
    def log_shift() -> "Mechanism":
        """psi(u) = (u+1) log(u+1)."""
        return Mechanism(kind=LOG_SHIFT, label="log_shift")

    @staticmethod
    def feller_logistic() -> "Mechanism":
        """psi(u) = u^2 - u."""
        return Mechanism(kind=FELLER_LOGISTIC, label="feller_logistic")

    @staticmethod
    def finite_var_delta(d: float) -> "Mechanism":
        """psi(u) = d*u - (1 - exp(-u)); unit jumps at unit rate, d > 0."""
        if not d > 0.0:
            raise DomainError(f"finite_var_delta needs d > 0, got {d}")
        return Mechanism(kind=FINITE_VAR_DELTA, d=d,
                         label=f"finite_var_delta(d={d:g})")

    @staticmethod
    def levy_triple(sigma: float, gamma: float, pi: Callable[[float], float],
                    hints: Hints = Hints(), label: str = "triple",
                    check: bool = True) -> "Mechanism":
        """General mechanism from (sigma, gamma, pi-density).

        The density is checked at construction for integrability of
        (1 ^ x^2) pi(x) dx; a divergent density raises
        NonIntegrableLevyMeasure.
        """
        if sigma < 0.0:
            raise DomainError(f"sigma must be >= 0, got {sigma}")
        mech = Mechanism(kind=TRIPLE, sigma=sigma, gamma=gamma, pi=pi,
                         hints=hints, label=label)
        if check:
            _check_integrability(mech)
        return mech

    # -- evaluation ----------------------------------------------------

    def psi(self, u: float) -> float:
        """Evaluate the mechanism at u > 0."""
        if u <= 0.0:
            raise DomainError(f"psi requires u > 0, got {u}")
        k = self.kind
        if k == NEVEU:
            return u * math.log(u)
        if k == STABLE_EXPLOSIVE:
            return -(u ** self.alpha) / (1.0 - self.alpha)
        if k == STABLE_SUBCRITICAL:
            return self.alpha * u ** (self.alpha + 1.0)
        if k == LOG_SHIFT:
            return (u + 1.0) * math.log1p(u)
        if k == FELLER_LOGISTIC:
            return u * u - u
        if k == FINITE_VAR_DELTA:
            return self.d * u + math.expm1(-u)
        return _psi_triple(self, u)

    def psi_array(self, u: np.ndarray) -> np.ndarray:
        """Vectorized psi for closed forms (loops for triples)."""
        u = np.asarray(u, dtype=float)
        k = self.kind
        if k == NEVEU:
            return u * np.log(u)
        if k == STABLE_EXPLOSIVE:
            return -(u ** self.alpha) / (1.0 - self.alpha)
        if k == STABLE_SUBCRITICAL:
            return self.alpha * u ** (self.alpha + 1.0)
        if k == LOG_SHIFT:
            return (u + 1.0) * np.log1p(u)
        if k == FELLER_LOGISTIC:
            return u * u - u
        if k == FINITE_VAR_DELTA:
            return self.d * u + np.expm1(-u)
        return np.array([_psi_triple(self, x) for x in np.atleast_1d(u)])

    def triple_form(self) -> "Mechanism":
        """The Levy-triple representation of a closed-form mechanism.

        Raises DomainError for finite_var_delta, whose jump measure is atomic
        and therefore not representable by a density.
        """
        k = self.kind
        if k == NEVEU:
            # With the x<=1 compensation cutoff the x^-2 jump integral is
            # u log u + (euler_gamma - 1) u; the drift restores u log u.
            return Mechanism.levy_triple(0.0, 1.0 - np.euler_gamma,
                                         lambda x: x ** -2.0,
                                         label="neveu-triple", check=False)
        if k == STABLE_EXPLOSIVE:
            a = self.alpha
            c = 1.0 / (1.0 - a)
            scale = c * a / special.gamma(1.0 - a)
            gamma0 = -scale / (1.0 - a)
            return Mechanism.levy_triple(
                0.0, gamma0, lambda x, s=scale, a=a: s * x ** (-1.0 - a),
                label="stable_explosive-triple", check=False)
        if k == STABLE_SUBCRITICAL:
            a = self.alpha
            if a >= 1.0:
                # alpha = 1 is the pure diffusion u^2.
                return Mechanism.levy_triple(math.sqrt(2.0), 0.0, lambda x: 0.0,
                                             label="feller-triple", check=False)
            scale = a * a * (a + 1.0) / special.gamma(1.0 - a)
            gamma0 = a * (a + 1.0) / special.gamma(1.0 - a)
            return Mechanism.levy_triple(
                0.0, gamma0, lambda x, s=scale, a=a: s * x ** (-2.0 - a),
                label="stable_subcritical-triple", check=False)
        if k == LOG_SHIFT:
            gamma0 = 1.0 + special.exp1(1.0)
            return Mechanism.levy_triple(
                0.0, gamma0, lambda x: math.exp(-x) * x ** -2.0,
                label="log_shift-triple", check=False)
        if k == FELLER_LOGISTIC:
            return Mechanism.levy_triple(math.sqrt(2.0), -1.0, lambda x: 0.0,
                                         label="feller_logistic-triple",
                                         check=False)
        raise DomainError(f"no density triple for mechanism kind {k!r}")


@dataclass(frozen=True)
class Classification:
    """Long-term classification of a mechanism.

    ``persistent`` / ``non_explosive`` are True/False/None (None = the
    numeric heuristic could not decide).  ``numeric_flags`` names the fields
    whose verdict came from the dyadic heuristic rather than closed-form
    knowledge or a user hint.
    """

    criticality: str            # supercritical | critical | subcritical
    mean: str                   # finite | infinite
    variation: str              # finite | infinite
    persistent: Optional[bool]
    non_explosive: Optional[bool]
    rho: float                  # largest root of psi, in [0, inf]
    psi_prime_0: float          # right derivative at 0, in [-inf, inf)
    d_coeff: float              # lim psi(u)/u at infinity, in (-inf, inf]
    numeric_flags: frozenset = frozenset()


def eval_psi(mech: Mechanism, u: float) -> float:
    """Module-level alias for Mechanism.psi."""
    return mech.psi(u)


def _exp_compensated(y: float) -> float:
    """e^-y - 1 + y without cancellation (relative accuracy ~1e-13)."""
    if y > 1e-3:
        return math.expm1(-y) + y
    # Taylor: y^2/2 - y^3/6 + y^4/24 - y^5/120
    return y * y * (0.5 - y * (1.0 / 6.0 - y * (1.0 / 24.0 - y / 120.0)))


def _quad_split(f: Callable[[float], float], a: float, b: float,
                knot: float) -> tuple:
    """quad over [a, b], split at an interior knot when it falls inside."""
    if a < knot < b:
        v1, e1 = integrate.quad(f, a, knot, epsabs=0.0,
                                epsrel=_QUAD_REL_TOL, limit=300)
        v2, e2 = integrate.quad(f, knot, b, epsabs=0.0,
                                epsrel=_QUAD_REL_TOL, limit=300)
        return v1 + v2, e1 + e2
    return integrate.quad(f, a, b, epsabs=0.0, epsrel=_QUAD_REL_TOL, limit=300)


def _quad_extend(f: Callable[[float], float], a: float, b: float,
                 knot: float, direction: int, width: float = 40.0) -> tuple:
    """quad over [a, b] extended block-by-block in the given direction until
    the last block is negligible relative to the running total.

    The integrands used here decay exponentially in the integration
    variable, so a handful of fixed-width blocks suffices; the loop cap
    guards against a non-decaying integrand.
    """
    total, err = _quad_split(f, a, b, knot)
    lo, hi = a, b
    for _ in range(40):
        if direction < 0:
            seg = integrate.quad(f, lo - width, lo, epsabs=0.0,
                                 epsrel=_QUAD_REL_TOL, limit=300)
            lo -= width
        else:
            seg = integrate.quad(f, hi, hi + width, epsabs=0.0,
                                 epsrel=_QUAD_REL_TOL, limit=300)
            hi += width
        total += seg[0]
        err += seg[1]
        if abs(seg[0]) <= 1e-13 * (abs(total) + 1e-300):
            return total, err
    raise QuadratureFailure("jump integral does not stabilize under block "
                            "extension; density may not be integrable")


def _psi_triple(mech: Mechanism, q: float) -> float:
    """Compensated quadrature of the jump integral, split at x = 1.

    Both pieces integrate in s = log x: the substitution tames the x^-2
    scale near zero and turns slowly-decaying tails into exponentially
    decaying integrands.
    """
    pi = mech.pi

    def small(s: float) -> float:
        x = math.exp(s)
        try:
            p = pi(x)
        except OverflowError:
            # x so small the density overflows a float; integrability
            # (checked at construction) makes the contribution negligible.
            return 0.0
        return _exp_compensated(q * x) * p * x

    def large(s: float) -> float:
        x = math.exp(s)
        return math.expm1(-q * x) * pi(x) * x

    # The integrands change scale at x ~ 1/q; splitting there keeps the
    # adaptive rule accurate across many orders of magnitude of q.
    knee = -math.log(q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        i1, e1 = _quad_extend(small, -40.0, 0.0, knee, direction=-1)
        i2, e2 = _quad_extend(large, 0.0, 80.0, knee, direction=+1)
    total = 0.5 * mech.sigma ** 2 * q * q + mech.gamma * q + i1 + i2
    err = e1 + e2
    if not math.isfinite(total):
        raise QuadratureFailure(f"jump integral not finite at u={q}")
    # scipy error estimates are conservative; guard only against estimates
    # comparable to the value itself.
    if err > 1e-6 * (1.0 + abs(total)):
        raise QuadratureFailure(
            f"jump integral error {err:.2e} too large at u={q}")
    return total


def _dyadic_diverges(f: Callable[[float], float], x0: float,
                     direction: int, what: str) -> bool:
    """Decide divergence of an integral of f by summing dyadic blocks.

    direction=+1 sums [x0 2^k, x0 2^(k+1)] towards infinity, direction=-1
    sums [x0 2^-(k+1], x0 2^-k] towards zero.  Divergence is declared when
    block sums fail a geometric-decay ratio test for _RATIO_STREAK
    consecutive blocks; convergence when the running tail is negligible.
    Raises InconclusiveIntegralTest at the block cap.
    """
    total = 0.0
    prev = None
    streak = 0
    for k in range(_BLOCK_CAP):
        if direction > 0:
            a, b = x0 * 2.0 ** k, x0 * 2.0 ** (k + 1)
        else:
            a, b = x0 * 2.0 ** (-(k + 1)), x0 * 2.0 ** (-k)
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-8, limit=100)
        if not math.isfinite(val):
            return True
        total += val
        if prev is not None and prev > 0.0:
            streak = streak + 1 if val / prev > _RATIO_THRESHOLD else 0
            if streak >= _RATIO_STREAK:
                return True
            if val <= _TAIL_REL_TOL * total:
                return False
        prev = val
    raise InconclusiveIntegralTest(
        f"dyadic heuristic for {what} undecided after {_BLOCK_CAP} blocks")


def _check_integrability(mech: Mechanism) -> None:
    """Numerical check of the (1 ^ x^2)-integrability of the jump density."""
    pi = mech.pi
    try:
        low = _dyadic_diverges(lambda x: x * x * pi(x), 1.0, -1, "x^2 pi near 0")
        high = _dyadic_diverges(pi, 1.0, +1, "pi near infinity")
    except InconclusiveIntegralTest as exc:
        raise NonIntegrableLevyMeasure(str(exc)) from exc
    if low or high:
        raise NonIntegrableLevyMeasure(
            "integral of (1 ^ x^2) pi(x) dx diverges numerically")


_ANALYTIC = {
    # kind -> (psi_prime_0, d_coeff, persistent, non_explosive)
    NEVEU: (-math.inf, math.inf, True, True),
    LOG_SHIFT: (1.0, math.inf, True, True),
    FELLER_LOGISTIC: (-1.0, math.inf, False, True),
}


def _rho_root(psi: Callable[[float], float]) -> float:
    """Largest root of psi: bracketed root search after a log-grid sign scan."""
    grid = np.logspace(-12.0, 12.0, 241)
    vals = np.array([psi(u) for u in grid])
    pos = np.nonzero(vals >= 0.0)[0]
    if pos.size == 0:
        return math.inf
    i = pos[0]
    if i == 0:
        return 0.0
    return optimize.brentq(psi, grid[i - 1], grid[i], rtol=1e-12, maxiter=200)


def classify(mech: Mechanism) -> Classification:
    """Classify a mechanism: criticality, mean/variation, persistence,
    explosion, and the boundary quantities rho, psi'(0+), d.

    Closed-form families are classified analytically.  Triples use
    quadrature for psi'(0+) and d, root-finding for rho, and the dyadic
    divergence heuristic (flagged "numeric") for the persistence and
    explosion integral tests unless hints decide them.
    """
    k = mech.kind
    flags = set()

    if k == NEVEU:
        p0, d, pers, nonexp = _ANALYTIC[NEVEU]
        rho = 1.0
    elif k == LOG_SHIFT:
        p0, d, pers, nonexp = _ANALYTIC[LOG_SHIFT]
        rho = 0.0
    elif k == FELLER_LOGISTIC:
        p0, d, pers, nonexp = _ANALYTIC[FELLER_LOGISTIC]
        rho = 1.0
    elif k == STABLE_EXPLOSIVE:
        p0, d, pers, nonexp = -math.inf, 0.0, True, False
        rho = math.inf
    elif k == STABLE_SUBCRITICAL:
        p0, d, pers, nonexp = 0.0, math.inf, False, True
        rho = 0.0
    elif k == FINITE_VAR_DELTA:
        p0 = mech.d - 1.0
        d = mech.d
        pers, nonexp = True, True
        rho = 0.0 if mech.d >= 1.0 else _rho_root(mech.psi)
    else:
        p0, d, rho, pers, nonexp, flags = _classify_triple(mech)

    if p0 < 0.0:
        crit = "supercritical"
    elif p0 == 0.0:
        crit = "critical"
    else:
        crit = "subcritical"
    return Classification(
        criticality=crit,
        mean="finite" if p0 > -math.inf else "infinite",
        variation="finite" if d < math.inf else "infinite",
        persistent=pers,
        non_explosive=nonexp,
        rho=rho,
        psi_prime_0=p0,
        d_coeff=d,
        numeric_flags=frozenset(flags),
    )


def _classify_triple(mech: Mechanism):
    pi = mech.pi
    flags = set()

    # psi'(0+) = gamma - int_1^inf x pi(dx)
    if _dyadic_diverges(lambda x: x * pi(x), 1.0, +1, "x pi near infinity"):
        p0 = -math.inf
    else:
        tail, _ = integrate.quad(lambda x: x * pi(x), 1.0, np.inf,
                                 epsabs=0.0, epsrel=1e-10, limit=200)
        p0 = mech.gamma - tail

    # d = inf if sigma > 0 else gamma + int_0^1 x pi(dx)
    if mech.sigma > 0.0:
        d = math.inf
    elif _dyadic_diverges(lambda x: x * pi(x), 1.0, -1, "x pi near 0"):
        d = math.inf
    else:
        head, _ = integrate.quad(lambda x: x * pi(x), 0.0, 1.0,
                                 epsabs=0.0, epsrel=1e-10, limit=200,
                                 points=None)
        d = mech.gamma + head

    psi = mech.psi
    if p0 >= 0.0:
        rho = 0.0
    elif d <= 0.0:
        rho = math.inf
    else:
        rho = _rho_root(psi)

    # persistence: int^inf du/|psi| = inf
    if mech.hints.persistent is not None:
        pers = mech.hints.persistent
    elif rho == math.inf:
        pers = True  # non-decreasing paths never reach 0
    else:
        start = max(1.0, 2.0 * rho) if rho > 0.0 else 1.0
        try:
            pers = _dyadic_diverges(lambda u: 1.0 / abs(psi(u)), start, +1,
                                    "1/|psi| near infinity")
        except InconclusiveIntegralTest:
            pers = None
        flags.add("persistent")

    # explosion: int_0 du/|psi| < inf, only possible when supercritical
    if mech.hints.non_explosive is not None:
        nonexp = mech.hints.non_explosive
    elif p0 >= 0.0:
        nonexp = True
    else:
        start = min(1.0, rho / 2.0) if math.isfinite(rho) else 1.0
        try:
            nonexp = _dyadic_diverges(lambda u: 1.0 / abs(psi(u)), start, -1,
                                      "1/|psi| near 0")
        except InconclusiveIntegralTest:
            nonexp = None
        flags.add("non_explosive")

    return p0, d, rho, pers, nonexp, flags
