"""Cumulant solver for branching mechanisms.

The cumulant ``v_t(lam)`` is pinned down by the integral relation
``int_{v_t(lam)}^{lam} du/psi(u) = t``.  The solver evaluates it by
bracketed root-finding on nested adaptive quadrature of ``1/psi``, with
closed forms short-circuiting the numerics for the families that have
them, and an independent ODE integration of ``dv/dt = -psi(v)`` as a
cross-check oracle.  The boundary solutions (extinction and explosion
exponents) are the monotone limits in ``lam``.
"""

from __future__ import annotations

import math
import threading
import warnings
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NoSolution, QuadratureFailure
from .mechanism import (
    FELLER_LOGISTIC,
    LOG_SHIFT,
    NEVEU,
    STABLE_EXPLOSIVE,
    STABLE_SUBCRITICAL,
    Mechanism,
    classify,
)

_V_FLOOR = 1e-300   # smallest linear-domain value the solvers will bracket
_V_CEIL = 1e300


def _closed_forward(mech: Mechanism, t: float, lam: float) -> Optional[float]:
    """v_t(lam) in closed form; t may be negative (the inverse map).

    Returns None when the family has no closed form.  Raises DomainError
    when a negative t leaves the inverse's domain.
    """
    k = mech.kind
    if k == NEVEU:
        return math.exp(math.exp(-t) * math.log(lam))
    if k == LOG_SHIFT:
        return math.expm1(math.exp(-t) * math.log1p(lam))
    if k == FELLER_LOGISTIC:
        et = math.exp(t)
        den = 1.0 + lam * (et - 1.0)
        if den <= 0.0:
            raise DomainError(
                f"v_t outside domain: lam={lam} >= vbar for t={-t}")
        return lam * et / den
    if k == STABLE_SUBCRITICAL:
        a = mech.alpha
        base = lam ** (-a) + a * a * t
        if base <= 0.0:
            raise DomainError(
                f"v_t outside domain: lam={lam} >= vbar for t={-t}")
        return base ** (-1.0 / a)
    if k == STABLE_EXPLOSIVE:
        b = 1.0 - mech.alpha
        base = lam ** b + t
        if base <= 0.0:
            raise DomainError(
                f"v_t outside domain: lam={lam} <= vunder for t={-t}")
        return base ** (1.0 / b)
    return None


def _closed_log_inverse(mech: Mechanism, t: float, lam: float) -> Optional[float]:
    """log v_{-t}(lam) in closed form, safe for very large t."""
    k = mech.kind
    if k == NEVEU:
        return math.exp(t) * math.log(lam)
    if k == LOG_SHIFT:
        a = math.exp(t) * math.log1p(lam)
        # log(e^a - 1)
        return a + math.log(-math.expm1(-a)) if a > 1e-15 else math.log(math.expm1(a))
    if k == FELLER_LOGISTIC:
        emt = math.exp(-t)
        den = 1.0 + lam * (emt - 1.0)
        if den <= 0.0:
            raise DomainError(f"lam={lam} >= vbar_t for t={t}")
        return math.log(lam) - t - math.log(den)
    if k in (STABLE_SUBCRITICAL, STABLE_EXPLOSIVE):
        v = _closed_forward(mech, -t, lam)
        if v <= 0.0:
            raise DomainError("inverse underflows")
        return math.log(v)
    return None


class CumulantSolver:
    """Numerical map (t, lam) -> v_t(lam), its inverse and boundary limits.

    Immutable apart from an internal memo cache, which is lock-protected and
    never affects results.
    """

    def __init__(self, mech: Mechanism, quad_rel_tol: float = 1e-12,
                 root_rel_tol: float = 1e-12, use_closed_form: bool = True,
                 cross_check: bool = False):
        self.mech = mech
        self.quad_rel_tol = quad_rel_tol
        self.root_rel_tol = root_rel_tol
        self.use_closed_form = use_closed_form
        self.cross_check = cross_check
        self.classification = classify(mech)
        self.rho = self.classification.rho
        self._cache: dict = {}
        self._lock = threading.Lock()

    @property
    def has_closed_form(self) -> bool:
        return self.mech.kind in (NEVEU, LOG_SHIFT, FELLER_LOGISTIC,
                                  STABLE_SUBCRITICAL, STABLE_EXPLOSIVE)

    # -- quadrature of 1/psi -------------------------------------------

    def _quad(self, f, a: float, b: float) -> float:
        if a == b:
            return 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, a, b, epsabs=0.0,
                                      epsrel=self.quad_rel_tol, limit=300)
        if not math.isfinite(val):
            raise QuadratureFailure(f"integral of 1/psi not finite on "
                                    f"({a:.3g},{b:.3g})")
        return val

    def phi(self, a: float, b: float) -> float:
        """int_a^b du/psi(u) for a, b on the same side of rho.

        Integrates in log coordinates around the singular endpoints 0 and
        rho, where 1/psi has a nonintegrable 1/(u - rho) scale.
        """
        if a <= 0.0 or b <= 0.0:
            raise DomainError("phi needs positive endpoints")
        if a == b:
            return 0.0
        if a > b:
            return -self.phi(b, a)
        rho = self.rho
        psi = self.mech.psi
        if rho > 0.0 and a < rho < b:
            raise DomainError(f"phi endpoints straddle rho={rho:g}")

        def in_log_u(lo, hi):
            return self._quad(lambda s: math.exp(s) / psi(math.exp(s)),
                              math.log(lo), math.log(hi))

        if not math.isfinite(rho) or b <= rho:
            # below rho, or psi < 0 everywhere (rho = +inf)
            if not math.isfinite(rho):
                return in_log_u(a, b)
            mid = rho / 2.0
            total = 0.0
            if a < mid:
                total += in_log_u(a, min(b, mid))
            if b > mid:
                lo, hi = max(a, mid), b
                # u = rho - e^w
                total += self._quad(
                    lambda w: math.exp(w) / psi(rho - math.exp(w)),
                    math.log(rho - hi), math.log(rho - lo))
            return total
        # above rho
        if rho == 0.0:
            return in_log_u(a, b)
        mid = 2.0 * rho
        total = 0.0
        if a < mid:
            lo, hi = a, min(b, mid)
            # u = rho + e^w
            total += self._quad(
                lambda w: math.exp(w) / psi(rho + math.exp(w)),
                math.log(lo - rho), math.log(hi - rho))
        if b > mid:
            total += in_log_u(max(a, mid), b)
        return total

    def _tail_time(self, lam: float) -> float:
        """int_lam^inf du/psi in dyadic blocks; +inf when divergent."""
        total = 0.0
        prev = None
        streak = 0
        a = lam
        for _ in range(300):
            b = 2.0 * a
            seg = self.phi(a, b)
            total += seg
            if prev is not None and prev > 0.0:
                streak = streak + 1 if seg > 0.95 * prev else 0
                if streak >= 10:
                    return math.inf
                if abs(seg) <= 1e-14 * (abs(total) + 1e-300):
                    return total
            prev = seg
            a = b
        raise QuadratureFailure("tail of 1/psi does not stabilize")

    def _head_time(self, lam: float) -> float:
        """int_0^lam du/|psi| in dyadic blocks; +inf when divergent."""
        total = 0.0
        prev = None
        streak = 0
        b = lam
        for _ in range(300):
            a = b / 2.0
            seg = abs(self.phi(a, b))
            total += seg
            if prev is not None and prev > 0.0:
                streak = streak + 1 if seg > 0.95 * prev else 0
                if streak >= 10:
                    return math.inf
                if seg <= 1e-14 * (abs(total) + 1e-300):
                    return total
            prev = seg
            b = a
        raise QuadratureFailure("head of 1/|psi| does not stabilize")

    # -- main maps ------------------------------------------------------

    def forward(self, t: float, lam: float) -> float:
        """v_t(lam): the time-t cumulant, t >= 0."""
        if t < 0.0:
            raise DomainError("forward needs t >= 0; use inverse for -t")
        if lam <= 0.0 or lam == self.rho:
            raise DomainError(f"lam must be in (0,inf) excluding rho, got {lam}")
        if t == 0.0:
            return lam
        key = ("f", t, lam)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        if self.use_closed_form:
            closed = _closed_forward(self.mech, t, lam)
        else:
            closed = None
        val = closed if closed is not None else self._forward_numeric(t, lam)
        if closed is None and self.cross_check:
            ref = self.forward_ode(t, lam)
            if abs(val - ref) > 1e-6 * (1.0 + abs(ref)):
                raise QuadratureFailure(
                    f"quadrature/ODE cross-check failed: {val} vs {ref}")
        with self._lock:
            self._cache[key] = val
        return val

    def _forward_numeric(self, t: float, lam: float) -> float:
        rho = self.rho
        if lam < rho:
            # v moves up towards rho; solve in w = log(rho - v) or log v
            if math.isfinite(rho):
                def p(w):
                    return self.phi(rho - math.exp(w), lam) - t
                hi = math.log(rho - lam)
                lo = hi - 5.0
                while p(lo) < 0.0:
                    hi = lo
                    lo -= 10.0
                    if lo < -700.0:
                        raise QuadratureFailure("forward bracket collapsed at rho")
                w = optimize.brentq(p, lo, hi, rtol=self.root_rel_tol,
                                    maxiter=300)
                return rho - math.exp(w)
            # psi < 0 everywhere: v increases without an upper barrier
            def p_up(y):
                return self.phi(math.exp(y), lam) - t
            lo = math.log(lam)
            hi = lo + 5.0
            while p_up(hi) < 0.0:
                lo = hi
                hi += 10.0
                if hi > 700.0:
                    raise NoSolution("v_t exceeds floating range")
            y = optimize.brentq(p_up, lo, hi, rtol=self.root_rel_tol,
                                maxiter=300)
            return math.exp(y)
        # lam > rho: v decreases towards rho
        if rho > 0.0:
            def p(w):
                return self.phi(rho + math.exp(w), lam) - t
            hi = math.log(lam - rho)
            lo = hi - 5.0
            while p(lo) < 0.0:
                hi = lo
                lo -= 10.0
                if lo < -700.0:
                    raise QuadratureFailure("forward bracket collapsed at rho")
            w = optimize.brentq(p, lo, hi, rtol=self.root_rel_tol, maxiter=300)
            return rho + math.exp(w)

        def p0(y):
            return self.phi(math.exp(y), lam) - t
        hi = math.log(lam)
        lo = hi - 5.0
        while p0(lo) < 0.0:
            hi = lo
            lo -= 10.0
            if lo < -700.0:
                raise QuadratureFailure("forward bracket collapsed at 0")
        y = optimize.brentq(p0, lo, hi, rtol=self.root_rel_tol, maxiter=300)
        return math.exp(y)

    def inverse(self, t: float, lam: float) -> float:
        """v_{-t}(lam): the inverse of lam -> v_t(lam), t >= 0."""
        if t < 0.0:
            raise DomainError("inverse needs t >= 0")
        if lam <= 0.0 or lam == self.rho:
            raise DomainError(f"lam must be in (0,inf) excluding rho, got {lam}")
        if t == 0.0:
            return lam
        key = ("i", t, lam)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        if self.use_closed_form:
            closed = _closed_forward(self.mech, -t, lam)
        else:
            closed = None
        val = closed if closed is not None else self._inverse_numeric(t, lam)
        with self._lock:
            self._cache[key] = val
        return val

    def _inverse_numeric(self, t: float, lam: float) -> float:
        rho = self.rho
        if lam < rho:
            # w < lam, towards 0: int_w^lam du/psi = -t
            budget = self._head_time(lam)
            if t >= budget:
                raise DomainError(
                    f"lam={lam} <= vunder_t: inverse undefined at t={t}")

            def p(y):
                return -self.phi(math.exp(y), lam) - t
            hi = math.log(lam)
            lo = hi - 5.0
            while p(lo) < 0.0:
                hi = lo
                lo -= 10.0
                if lo < -700.0:
                    raise DomainError("inverse underflows linear range; "
                                      "use log_inverse")
            y = optimize.brentq(p, lo, hi, rtol=self.root_rel_tol, maxiter=300)
            return math.exp(y)
        # lam > rho: w > lam, towards infinity: int_lam^w du/psi = t
        budget = self._tail_time(lam)
        if t >= budget:
            raise DomainError(f"lam={lam} >= vbar_t: inverse undefined at t={t}")

        def p(y):
            return self.phi(lam, math.exp(y)) - t
        lo = math.log(lam)
        hi = lo + 5.0
        while p(hi) < 0.0:
            lo = hi
            hi += 10.0
            if hi > 700.0:
                raise DomainError("inverse overflows linear range")
        y = optimize.brentq(p, lo, hi, rtol=self.root_rel_tol, maxiter=300)
        return math.exp(y)

    def log_inverse(self, t: float, lam: float) -> float:
        """log v_{-t}(lam), stable for times where the inverse under/overflows."""
        if t == 0.0:
            return math.log(lam)
        if self.use_closed_form:
            closed = _closed_log_inverse(self.mech, t, lam)
            if closed is not None:
                return closed
        return math.log(self.inverse(t, lam))

    # -- boundary exponents ---------------------------------------------

    def extinction_exponent(self, t: float) -> float:
        """vbar_t = lim_{lam->inf} v_t(lam); +inf for persistent mechanisms.

        P(X_t(x) = 0) = exp(-x vbar_t).
        """
        if t <= 0.0:
            raise DomainError("extinction exponent needs t > 0")
        if self.classification.persistent:
            return math.inf
        if self.use_closed_form:
            k = self.mech.kind
            if k == FELLER_LOGISTIC:
                return math.exp(t) / math.expm1(t)
            if k == STABLE_SUBCRITICAL:
                a = self.mech.alpha
                return (a * a * t) ** (-1.0 / a)
        # solve int_v^inf du/psi = t for v > rho, in the gap g = v - rho
        rho = self.rho

        def remaining(g):
            return self._tail_time(rho + g)

        g_lo = max(1.0, rho)
        while remaining(g_lo) < t:
            g_lo /= 4.0
            if g_lo < _V_FLOOR:
                raise QuadratureFailure("extinction exponent bracket failed")
        g_hi = g_lo
        while remaining(g_hi) > t:
            g_hi *= 4.0
            if g_hi > _V_CEIL:
                raise QuadratureFailure("extinction exponent bracket failed")
        y = optimize.brentq(lambda w: remaining(math.exp(w)) - t,
                            math.log(g_lo), math.log(g_hi),
                            rtol=self.root_rel_tol, maxiter=300)
        return rho + math.exp(y)

    def extinction_limit(self) -> float:
        """vbar = lim_t vbar_t: exp(-x vbar) is the absorption probability."""
        if self.classification.persistent:
            return math.inf
        return self.rho if self.rho > 0.0 else 0.0

    def explosion_exponent(self, t: float) -> float:
        """vunder_t = lim_{lam->0} v_t(lam); 0 for non-explosive mechanisms.

        P(X_t(x) = +inf) = 1 - exp(-x vunder_t).
        """
        if t <= 0.0:
            raise DomainError("explosion exponent needs t > 0")
        if self.classification.non_explosive:
            return 0.0
        if self.use_closed_form and self.mech.kind == STABLE_EXPLOSIVE:
            return t ** (1.0 / (1.0 - self.mech.alpha))
        # solve int_0^v du/(-psi) = t for v in (0, rho)
        rho = self.rho
        start = 1.0 if not math.isfinite(rho) else rho / 2.0

        def elapsed(v):
            return self._head_time(v)

        hi = start
        while elapsed(hi) < t:
            hi *= 4.0
            if hi > _V_CEIL or (math.isfinite(rho) and hi >= rho):
                raise QuadratureFailure("explosion exponent bracket failed")
        lo = hi
        while elapsed(lo) > t:
            lo /= 4.0
            if lo < _V_FLOOR:
                raise QuadratureFailure("explosion exponent bracket failed")
        return optimize.brentq(lambda u: elapsed(u) - t, lo, hi,
                               rtol=self.root_rel_tol, maxiter=300)

    # -- independent oracle ----------------------------------------------

    def forward_ode(self, t: float, lam: float, rtol: float = 1e-11) -> float:
        """v_t(lam) by adaptive integration of dv/dt = -psi(v).

        Cross-check oracle, independent of the quadrature/root path.
        """
        if t == 0.0:
            return lam
        psi = self.mech.psi
        sol = integrate.solve_ivp(
            lambda _, v: [-psi(max(v[0], _V_FLOOR))], (0.0, t), [lam],
            method="RK45", rtol=rtol, atol=1e-14)
        if not sol.success:
            raise QuadratureFailure(f"ODE integration failed: {sol.message}")
        return float(sol.y[0, -1])
