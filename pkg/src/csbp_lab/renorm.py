"""Non-linear renormalization of population sizes.

For a supercritical mechanism with infinite mean (or a persistent
subcritical one), the population grows (or decays) at a super-exponential
rate and no linear scaling converges.  The renormalizing map built here,
``value(y) = exp(-int du/psi between y and an anchor lambda0)``, turns the
population size into the statistic ``exp(-+t) * value(1/X_t)`` whose
long-time limit is a record process with distribution
``limit_cdf(z) = exp(-inverse(z))``.  The inverse delegates to the cumulant
solver: ``inverse(z) = v_{log(1/z)}(lambda0)`` in the supercritical regime
and ``v_{log z}(lambda0)`` in the subcritical one.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .cumulant import CumulantSolver
from .errors import DomainError, NonConvergent, ValidationError
from .mechanism import LOG_SHIFT, NEVEU, Mechanism

SUPERCRITICAL = "supercritical"
SUBCRITICAL = "subcritical"

# Linear-domain quadrature works while |log y| stays below this; beyond it
# only families with a closed form are evaluated (in log space).
_LOG_RANGE = 600.0


def default_anchor(mech: Mechanism, regime: str, rho: float) -> float:
    """Anchor choices matching the worked examples: 1/e for Neveu and e-1
    for the log-shift family; otherwise rho/2 or 1."""
    if mech.kind == NEVEU:
        return 1.0 / math.e
    if mech.kind == LOG_SHIFT:
        return math.e - 1.0
    if regime == SUPERCRITICAL:
        return rho / 2.0
    return 1.0


class Renormalizer:
    """The renormalizing map, its inverse, the limit law and the statistic."""

    def __init__(self, mech: Mechanism, regime: Optional[str] = None,
                 lambda0: Optional[float] = None,
                 solver: Optional[CumulantSolver] = None):
        self.mech = mech
        self.solver = solver if solver is not None else CumulantSolver(mech)
        cls = self.solver.classification
        self.rho = cls.rho

        if regime is None:
            regime = SUPERCRITICAL if cls.psi_prime_0 < 0.0 else SUBCRITICAL
        if regime not in (SUPERCRITICAL, SUBCRITICAL):
            raise ValidationError(f"unknown regime {regime!r}")
        if regime == SUPERCRITICAL:
            if cls.psi_prime_0 > -math.inf:
                raise ValidationError(
                    "supercritical renormalization needs an infinite mean")
            if cls.non_explosive is False:
                raise ValidationError(
                    "supercritical renormalization needs a non-explosive "
                    "mechanism; explosive flows renormalize by explosion times")
            if not math.isfinite(self.rho):
                raise ValidationError(
                    "supercritical renormalization is restricted to rho < inf")
        else:
            if cls.psi_prime_0 < 0.0:
                raise ValidationError(
                    "subcritical renormalization needs psi'(0+) >= 0")
            if cls.persistent is False:
                raise ValidationError(
                    "subcritical renormalization needs persistence; "
                    "non-persistent flows renormalize by extinction times")
        self.regime = regime

        if lambda0 is None:
            lambda0 = default_anchor(mech, regime, self.rho)
        if regime == SUPERCRITICAL and not 0.0 < lambda0 < self.rho:
            raise ValidationError(
                f"anchor {lambda0} outside (0, rho={self.rho:g})")
        if regime == SUBCRITICAL and not lambda0 > 0.0:
            raise ValidationError(f"anchor {lambda0} must be positive")
        self.lambda0 = lambda0

    # -- the map itself --------------------------------------------------

    def _closed_value_from_log(self, log_y: float) -> Optional[float]:
        if self.mech.kind == NEVEU:
            # value(y) = log(1/y) / log(1/lambda0)
            return -log_y / -math.log(self.lambda0)
        if self.mech.kind == LOG_SHIFT:
            # value(y) = log(1+lambda0) / log(1+y)
            if log_y > 30.0:
                den = log_y + math.log1p(math.exp(-log_y))
            else:
                den = math.log1p(math.exp(log_y))
            return math.log1p(self.lambda0) / den
        return None

    def value(self, y: float) -> float:
        """The renormalizing map at y (decreasing, value(lambda0) = 1)."""
        if y <= 0.0:
            raise DomainError(f"value needs y > 0, got {y}")
        if self.regime == SUPERCRITICAL:
            if y >= self.rho:
                if y == self.rho:
                    return 0.0
                raise DomainError(f"y={y} outside (0, rho={self.rho:g})")
        closed = self._closed_value_from_log(math.log(y))
        if closed is not None:
            return closed
        sign = 1.0 if self.regime == SUPERCRITICAL else -1.0
        return math.exp(sign * self.solver.phi(self.lambda0, y))

    def value_from_log(self, log_y: float) -> float:
        """value(exp(log_y)) without forming exp(log_y)."""
        closed = self._closed_value_from_log(log_y)
        if closed is not None:
            return closed
        if abs(log_y) > _LOG_RANGE:
            raise DomainError(
                f"|log y|={abs(log_y):.3g} exceeds the quadrature range and "
                f"mechanism {self.mech.label} has no closed form")
        return self.value(math.exp(log_y))

    def inverse(self, z: float) -> float:
        """The inverse map, via the cumulant flow started at the anchor."""
        if z < 0.0:
            raise DomainError(f"inverse needs z >= 0, got {z}")
        if z == 0.0:
            return self.rho if self.regime == SUPERCRITICAL else math.inf
        if math.isinf(z):
            return 0.0
        t_eff = -math.log(z) if self.regime == SUPERCRITICAL else math.log(z)
        if t_eff >= 0.0:
            return self.solver.forward(t_eff, self.lambda0)
        return self.solver.inverse(-t_eff, self.lambda0)

    def limit_cdf(self, z: float) -> float:
        """F(z) = exp(-inverse(z)): the limit law of the record process."""
        if self.regime == SUPERCRITICAL:
            if z < 0.0:
                return 0.0
            return math.exp(-self.inverse(z))
        if z <= 0.0:
            return 0.0
        return math.exp(-self.inverse(z))

    def statistic(self, t: float, log_x: float) -> float:
        """The renormalized statistic exp(-+t) * value(1/X ^ rho) from log X.

        Carries log X end-to-end: at super-exponential growth X itself
        overflows any float.  Extinct subcritical samples (log X = -inf)
        map to 0, the value at +infinity.
        """
        if self.regime == SUPERCRITICAL:
            if log_x <= -math.log(self.rho):
                return 0.0  # clamped at rho, where the map vanishes
            return math.exp(-t) * self.value_from_log(-log_x)
        if log_x == -math.inf:
            return 0.0
        return math.exp(t) * self.value_from_log(-log_x)

    # -- power-law asymptotics --------------------------------------------

    def power_constant(self, alpha: float, cauchy_tol: float = 1e-2) -> float:
        """The constant k with value(1/y) ~ k (log y)^(+-1/alpha).

        Supercritical: value(1/y) / (log y)^(1/alpha) -> k as y -> inf.
        Subcritical:   value(1/y) * (log 1/y)^(1/alpha) -> k as y -> 0.
        Evaluated on a doubling log grid with a Cauchy test; the defining
        correction integral int (1/psi - 1/(alpha u log u)) du must converge
        over the regime's range, which is checked by dyadic blocks first.
        """
        if alpha <= 0.0:
            raise DomainError("alpha must be positive")
        self._check_power_integral(alpha)
        vals = []
        for j in range(3, 10):
            log_y = 2.0 ** j  # statistic argument 1/y with log(1/y) = -log_y
            if self.regime == SUPERCRITICAL:
                r = self.value_from_log(-log_y) / log_y ** (1.0 / alpha)
            else:
                r = self.value_from_log(log_y) * log_y ** (1.0 / alpha)
            vals.append(r)
        diffs = [abs(b - a) for a, b in zip(vals, vals[1:])]
        scale = abs(vals[-1]) + 1e-300
        if diffs[-1] > cauchy_tol * scale or (
                diffs[-1] > diffs[0] + 1e-12 * scale):
            raise NonConvergent(
                f"grid limit fails the Cauchy test: diffs={diffs}")
        return vals[-1]

    def _check_power_integral(self, alpha: float) -> None:
        psi = self.mech.psi

        def diff(u):
            return abs(1.0 / psi(u) - 1.0 / (alpha * u * math.log(u)))

        total = 0.0
        prev = None
        if self.regime == SUPERCRITICAL:
            b = min(self.lambda0, self.rho / 2.0, 0.5)
        else:
            a = max(self.lambda0, 2.0)
        for k in range(200):
            if self.regime == SUPERCRITICAL:
                lo, hi = b / 2.0, b
                b = lo
            else:
                lo, hi = a, 2.0 * a
                a = hi
            seg = _block_quad(diff, lo, hi)
            total += seg
            if prev is not None and prev > 0.0 and seg > 0.98 * prev:
                raise NonConvergent(
                    "correction integral 1/psi - 1/(alpha u log u) diverges")
            if seg <= 1e-12 * (total + 1e-300):
                return
            prev = seg
        raise NonConvergent("correction integral test did not stabilize")


def _block_quad(f, lo: float, hi: float) -> float:
    import warnings

    from scipy import integrate
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-9, limit=200)
    return val
