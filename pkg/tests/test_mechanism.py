"""Mechanism evaluation and classification tests."""

import math

import numpy as np
import pytest

from csbp_lab import Mechanism, classify
from csbp_lab.errors import DomainError, NonIntegrableLevyMeasure

ALL_CLOSED = [
    Mechanism.neveu(),
    Mechanism.stable_explosive(0.5),
    Mechanism.stable_subcritical(0.5),
    Mechanism.stable_subcritical(1.0),
    Mechanism.log_shift(),
    Mechanism.feller_logistic(),
    Mechanism.finite_var_delta(2.0),
]

WITH_TRIPLE = [
    Mechanism.neveu(),
    Mechanism.stable_explosive(0.5),
    Mechanism.stable_explosive(0.8),
    Mechanism.stable_subcritical(0.5),
    Mechanism.stable_subcritical(1.0),
    Mechanism.log_shift(),
    Mechanism.feller_logistic(),
]


def test_neveu_at_one():
    assert Mechanism.neveu().psi(1.0) == 0.0


def test_neveu_at_e():
    assert Mechanism.neveu().psi(math.e) == pytest.approx(math.e, rel=1e-15)


def test_triple_neveu_at_two():
    # adaptive-quadrature oracle for the x^-2 density against u log u
    triple = Mechanism.neveu().triple_form()
    assert triple.psi(2.0) == pytest.approx(2.0 * math.log(2.0), rel=1e-10)


def test_psi_rejects_nonpositive():
    with pytest.raises(DomainError):
        Mechanism.neveu().psi(0.0)
    with pytest.raises(DomainError):
        Mechanism.log_shift().psi(-1.0)


def test_nonintegrable_density_rejected():
    with pytest.raises(NonIntegrableLevyMeasure):
        Mechanism.levy_triple(0.0, 0.0, lambda x: x ** -3.0)
    with pytest.raises(NonIntegrableLevyMeasure):
        Mechanism.levy_triple(0.0, 0.0, lambda x: 1.0 / x)


@pytest.mark.parametrize("mech", WITH_TRIPLE, ids=lambda m: m.label)
def test_triple_agrees_with_closed_form(mech):
    triple = mech.triple_form()
    for u in np.logspace(-6, 6, 25):
        closed = mech.psi(u)
        quad = triple.psi(u)
        assert abs(quad - closed) <= 1e-8 * (1.0 + abs(closed))


@pytest.mark.parametrize("mech", ALL_CLOSED, ids=lambda m: m.label)
def test_convexity(mech):
    grid = np.logspace(-4, 4, 17)
    for u1 in grid:
        for u2 in grid:
            if u1 >= u2:
                continue
            for s in (0.25, 0.5, 0.75):
                mid = mech.psi(s * u1 + (1.0 - s) * u2)
                chord = s * mech.psi(u1) + (1.0 - s) * mech.psi(u2)
                assert mid <= chord + 1e-9 * (1.0 + abs(mech.psi(u2)))


def test_classify_neveu():
    c = classify(Mechanism.neveu())
    assert c.criticality == "supercritical"
    assert c.mean == "infinite"
    assert c.variation == "infinite"
    assert c.persistent is True
    assert c.non_explosive is True
    assert c.rho == 1.0
    assert c.psi_prime_0 == -math.inf


def test_classify_feller_branching():
    # psi(u) = u^2
    c = classify(Mechanism.stable_subcritical(1.0))
    assert c.criticality == "critical"
    assert c.mean == "finite"
    assert c.variation == "infinite"
    assert c.persistent is False
    assert c.non_explosive is True
    assert c.rho == 0.0


def test_classify_stable_explosive():
    c = classify(Mechanism.stable_explosive(0.5))
    assert c.criticality == "supercritical"
    assert c.non_explosive is False
    assert c.rho == math.inf
    assert c.variation == "finite"
    assert c.persistent is True


def test_classify_log_shift():
    c = classify(Mechanism.log_shift())
    assert c.criticality == "subcritical"
    assert c.persistent is True
    assert c.variation == "infinite"
    assert c.psi_prime_0 == 1.0


def test_classify_finite_var_delta():
    c = classify(Mechanism.finite_var_delta(2.0))
    assert c.criticality == "subcritical"
    assert c.variation == "finite"
    assert c.d_coeff == 2.0
    assert c.psi_prime_0 == 1.0
    assert c.persistent is True

    sup = classify(Mechanism.finite_var_delta(0.5))
    assert sup.criticality == "supercritical"
    assert sup.rho > 0.0
    # rho solves d*rho = 1 - exp(-rho)
    assert 0.5 * sup.rho == pytest.approx(1.0 - math.exp(-sup.rho), rel=1e-10)


@pytest.mark.parametrize("mech", ALL_CLOSED, ids=lambda m: m.label)
def test_classification_equivalences(mech):
    c = classify(mech)
    assert (c.criticality == "supercritical") == (c.psi_prime_0 < 0.0)
    assert (c.criticality == "supercritical") == (c.rho > 0.0)
    assert (c.variation == "finite") == (c.d_coeff < math.inf)


def test_classify_triple_numeric_matches_closed():
    """The numeric path on Neveu's triple reproduces the analytic verdicts."""
    c = classify(Mechanism.neveu().triple_form())
    assert c.criticality == "supercritical"
    assert c.psi_prime_0 == -math.inf
    assert c.d_coeff == math.inf
    assert c.rho == pytest.approx(1.0, rel=1e-10)
    assert c.persistent is True
    assert c.non_explosive is True
    assert "persistent" in c.numeric_flags
    assert "non_explosive" in c.numeric_flags


def test_classify_triple_hints_take_precedence():
    from csbp_lab import Hints
    mech = Mechanism.levy_triple(
        0.0, 1.0 - np.euler_gamma, lambda x: x ** -2.0,
        hints=Hints(persistent=True, non_explosive=True))
    c = classify(mech)
    assert c.persistent is True
    assert c.non_explosive is True
    assert "persistent" not in c.numeric_flags
    assert "non_explosive" not in c.numeric_flags
