"""Renormalizer tests against the worked closed forms."""

import math

import numpy as np
import pytest

from csbp_lab import Mechanism
from csbp_lab.cumulant import CumulantSolver
from csbp_lab.errors import DomainError, NonConvergent, ValidationError
from csbp_lab.renorm import Renormalizer


def neveu_rn(**kw):
    return Renormalizer(Mechanism.neveu(), **kw)


def log_shift_rn(**kw):
    return Renormalizer(Mechanism.log_shift(), **kw)


def numeric_rn(mech, **kw):
    return Renormalizer(mech, solver=CumulantSolver(mech, use_closed_form=False),
                        **kw)


# -- value ---------------------------------------------------------------

def test_value_neveu_log_of_reciprocal():
    rn = neveu_rn()
    assert rn.lambda0 == pytest.approx(1.0 / math.e)
    assert rn.value(0.5) == pytest.approx(math.log(2.0), rel=1e-14)


def test_value_at_anchor_is_one():
    for rn in (neveu_rn(), log_shift_rn(),
               numeric_rn(Mechanism.finite_var_delta(2.0))):
        assert rn.value(rn.lambda0) == pytest.approx(1.0, rel=1e-12)


def test_value_log_shift_reciprocal_log():
    rn = log_shift_rn()
    assert rn.lambda0 == pytest.approx(math.e - 1.0)
    assert rn.value(1.0) == pytest.approx(1.0 / math.log(2.0), rel=1e-14)


def test_value_numeric_matches_closed():
    closed = log_shift_rn()
    num = numeric_rn(Mechanism.log_shift(), lambda0=math.e - 1.0)
    # force the quadrature path by hiding the closed form
    for y in np.logspace(-3, 3, 13):
        q = math.exp(-num.solver.phi(num.lambda0, y))
        assert q == pytest.approx(closed.value(y), rel=1e-10)


def test_value_domain_errors():
    rn = neveu_rn()
    with pytest.raises(DomainError):
        rn.value(-1.0)
    with pytest.raises(DomainError):
        rn.value(1.5)  # above rho = 1
    assert rn.value(1.0) == 0.0  # at rho the map vanishes


# -- inverse ---------------------------------------------------------------

def test_inverse_neveu_exponential():
    rn = neveu_rn()
    assert rn.inverse(1.0) == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert rn.inverse(2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert rn.inverse(0.25) == pytest.approx(math.exp(-0.25), rel=1e-12)


def test_inverse_at_one_is_anchor():
    for rn in (neveu_rn(), log_shift_rn()):
        assert rn.inverse(1.0) == pytest.approx(rn.lambda0, rel=1e-12)


def test_inverse_log_shift():
    rn = log_shift_rn()
    for z in (0.4, 1.0, 3.0):
        assert rn.inverse(z) == pytest.approx(math.exp(1.0 / z) - 1.0,
                                              rel=1e-10)


def test_inverse_round_trip():
    for rn in (neveu_rn(), log_shift_rn(),
               numeric_rn(Mechanism.finite_var_delta(2.0))):
        for z in (0.3, 1.0, 2.5):
            assert rn.value(rn.inverse(z)) == pytest.approx(z, rel=1e-8)


def test_inverse_boundaries():
    rn = neveu_rn()
    assert rn.inverse(0.0) == 1.0          # rho
    assert rn.inverse(math.inf) == 0.0
    sub = log_shift_rn()
    assert sub.inverse(0.0) == math.inf
    assert sub.inverse(math.inf) == 0.0


# -- limit law ---------------------------------------------------------------

def test_limit_cdf_neveu_is_gumbel():
    # Gumbel on z >= 0; zero below the support (the state space is [0, inf])
    rn = neveu_rn()
    for z in (0.0, 0.5, 2.0):
        assert rn.limit_cdf(z) == pytest.approx(math.exp(-math.exp(-z)),
                                                rel=1e-12)
    assert rn.limit_cdf(-1.0) == 0.0


def test_limit_cdf_log_shift_value():
    rn = log_shift_rn()
    assert rn.limit_cdf(1.0) == pytest.approx(math.exp(1.0 - math.e),
                                              rel=1e-10)
    assert rn.limit_cdf(1.0) == pytest.approx(0.179374, abs=1e-6)


def test_limit_cdf_monotone_with_limits():
    for rn in (neveu_rn(), log_shift_rn()):
        zs = np.linspace(0.05, 50.0, 40)
        vals = [rn.limit_cdf(z) for z in zs]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[0] >= 0.0
        assert rn.limit_cdf(1e9) == pytest.approx(1.0, abs=1e-8)
    assert log_shift_rn().limit_cdf(0.0) == 0.0
    assert neveu_rn().limit_cdf(0.0) == pytest.approx(math.exp(-1.0))


# -- statistic ---------------------------------------------------------------

def test_statistic_neveu_is_scaled_log():
    rn = neveu_rn()
    for t, log_x in ((1.0, 3.0), (4.0, 55.0)):
        assert rn.statistic(t, log_x) == pytest.approx(
            math.exp(-t) * log_x, rel=1e-12)


def test_statistic_anchor_normalization():
    # at t = 0 and X = 1/lambda0 the statistic is exactly 1
    for rn in (neveu_rn(), log_shift_rn()):
        assert rn.statistic(0.0, -math.log(rn.lambda0)) == pytest.approx(
            1.0, rel=1e-12)


def test_statistic_clamps_at_rho():
    rn = neveu_rn()
    assert rn.statistic(2.0, 0.0) == 0.0
    assert rn.statistic(2.0, -5.0) == 0.0


def test_statistic_extinct_maps_to_zero():
    assert log_shift_rn().statistic(3.0, -math.inf) == 0.0


def test_statistic_log_domain_extreme():
    # log X ~ e^t Z overflows X itself; the statistic must still evaluate
    rn = neveu_rn()
    log_x = math.exp(12.0) * 0.7
    assert rn.statistic(12.0, log_x) == pytest.approx(0.7, rel=1e-12)


# -- invariants ---------------------------------------------------------------

def test_anchor_independence_up_to_constant():
    base = neveu_rn(lambda0=1.0 / math.e)
    other = neveu_rn(lambda0=0.5)
    c = other.value(1.0 / math.e)  # the predicted global constant
    expected = math.exp(base.solver.phi(0.5, 1.0 / math.e))
    assert c == pytest.approx(expected, rel=1e-10)
    for y in np.logspace(-6, -0.1, 12):
        assert other.value(y) == pytest.approx(c * base.value(y), rel=1e-8)


def test_slow_variation_supercritical():
    rn = neveu_rn()
    # the ratio drifts to 1 as y -> 0, at a log-slow rate
    errs = []
    for y in (1e-8, 1e-60, 1e-290):
        errs.append(max(abs(rn.value(th * y) / rn.value(y) - 1.0)
                        for th in (0.5, 2.0)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 2e-3


def test_slow_variation_subcritical():
    rn = log_shift_rn()
    errs = []
    for y in (1e8, 1e60, 1e290):
        errs.append(max(abs(rn.value(th * y) / rn.value(y) - 1.0)
                        for th in (0.5, 2.0)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 2e-3


# -- power asymptotics ---------------------------------------------------------

def test_power_constant_neveu():
    assert neveu_rn().power_constant(1.0) == pytest.approx(1.0, rel=1e-10)


def test_power_constant_log_shift():
    assert log_shift_rn().power_constant(1.0) == pytest.approx(1.0, rel=1e-3)


def test_power_constant_wrong_alpha_rejected():
    with pytest.raises(NonConvergent):
        neveu_rn().power_constant(0.5)


# -- regime validation ----------------------------------------------------------

def test_regime_validation():
    with pytest.raises(ValidationError):
        Renormalizer(Mechanism.feller_logistic())  # finite mean
    with pytest.raises(ValidationError):
        Renormalizer(Mechanism.stable_explosive(0.5))  # explosive
    with pytest.raises(ValidationError):
        Renormalizer(Mechanism.stable_subcritical(1.0))  # non-persistent
    with pytest.raises(ValidationError):
        Renormalizer(Mechanism.neveu(), lambda0=2.0)  # above rho
    # finite-variation subcritical is allowed (needed for flow diagnostics)
    rn = Renormalizer(Mechanism.finite_var_delta(2.0))
    assert rn.regime == "subcritical"
