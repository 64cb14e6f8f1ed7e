"""Record-process algebra and flow-reading tests."""

import math

import numpy as np
import pytest
from scipy import special

from csbp_lab import Mechanism
from csbp_lab.errors import (
    DomainError,
    DomainMismatch,
    InstantaneousState,
    LengthMismatch,
)
from csbp_lab.extremal import (
    RecordProcess,
    detect_super_individuals,
    fdd_probability,
    markov_jump_simulate,
    max_merge,
    records_from_points,
)
from csbp_lab.renorm import Renormalizer
from csbp_lab.sampler import PointConfig, RngStream, sample_ppp
from csbp_lab.simulate import FlowRealization, flow_neveu


def stream(sid=0, seed=0xC5BF):
    return RngStream(seed, sid)


def config(pairs, x_max=1.0, z_floor=-math.inf):
    xs = np.array([p[0] for p in pairs])
    zs = np.array([p[1] for p in pairs])
    order = np.argsort(xs)
    return PointConfig(xs[order], zs[order], x_max, z_floor, lambda z: 0.0)


def gumbel_cdf(z):
    return np.exp(-np.exp(-z))


# -- records ------------------------------------------------------------

def test_records_simple_sweep():
    rp = records_from_points(
        config([(0.2, 1.0), (0.5, 0.7), (0.9, 1.5)]))
    assert rp.jump_xs.tolist() == [0.2, 0.9]
    assert rp.jump_zs.tolist() == [1.0, 1.5]


def test_records_empty():
    rp = records_from_points(config([], z_floor=-2.0))
    assert rp.n_jumps == 0
    assert rp.value_at(0.7) == -2.0


def test_records_ties_are_not_records():
    rp = records_from_points(config([(0.1, 1.0), (0.4, 1.0), (0.8, 2.0)]))
    assert rp.jump_xs.tolist() == [0.1, 0.8]


def test_record_step_function_right_continuous():
    rp = records_from_points(config([(0.2, 1.0), (0.9, 1.5)]))
    assert rp.value_at(0.2) == 1.0
    assert rp.value_at(0.1999) == -math.inf
    assert rp.value_at(0.9) == 1.5
    assert rp.final_value() == 1.5
    assert np.all(np.diff(rp.jump_zs) > 0.0)


def test_records_gumbel_law():
    # P(Z(1) <= z) = exp(-tail(z)) for records of a Poisson configuration
    n = 3000
    tail = lambda z: np.exp(-z)
    vals = np.array([
        records_from_points(
            sample_ppp(tail, 1.0, -3.0, stream(i, seed=40),
                       inverse_tail=lambda w: -np.log(w))).final_value()
        for i in range(n)])
    zs = np.sort(vals)
    cdf = np.exp(-np.exp(-zs))
    i = np.arange(1, n + 1)
    d = np.max(np.maximum(i / n - cdf, cdf - (i - 1) / n))
    assert d < 0.03


# -- finite-dimensional law ------------------------------------------------

def test_fdd_single_point():
    f = lambda z: math.exp(-1.0 / z)  # Frechet(1)
    assert fdd_probability(f, [2.0], [1.3]) == pytest.approx(
        f(1.3) ** 2.0, rel=1e-12)


def test_fdd_frechet_pair():
    f = lambda z: math.exp(-1.0 / z)
    p = fdd_probability(f, [1.0, 2.0], [1.5, 2.5])
    expected = math.exp(-1.0 / 1.5) * math.exp(-1.0 / 2.5)  # ~0.344154
    assert p == pytest.approx(expected, rel=1e-12)
    assert p == pytest.approx(0.3441537, abs=2e-6)


def test_fdd_descending_levels_collapse():
    f = lambda z: math.exp(-1.0 / z)
    p = fdd_probability(f, [1.0, 2.0], [3.0, 1.5])
    assert p == pytest.approx(f(1.5) ** 2.0, rel=1e-12)


def test_fdd_monte_carlo_agreement():
    f = gumbel_cdf
    tail = lambda z: np.exp(-z)
    inv = lambda w: -np.log(w)
    xs, zs = [0.5, 1.0], [0.8, 1.4]
    n = 20000
    hits = 0
    for i in range(n):
        rp = records_from_points(sample_ppp(tail, 1.0, -3.0,
                                            stream(i, seed=41),
                                            inverse_tail=inv))
        if rp.value_at(0.5) <= 0.8 and rp.value_at(1.0) <= 1.4:
            hits += 1
    p_mc = hits / n
    p = fdd_probability(f, xs, zs)
    assert abs(p_mc - p) < 0.015


def test_fdd_length_mismatch():
    with pytest.raises(LengthMismatch):
        fdd_probability(gumbel_cdf, [1.0, 2.0], [1.0])


# -- markov jump construction ----------------------------------------------

def test_markov_jump_no_jump_probability():
    # holding rate at the Gumbel start z=0 is Q(0) = 1
    n = 20000
    none = sum(
        markov_jump_simulate(gumbel_cdf, 1.0, 0.0, stream(i, seed=42),
                             q_inverse=lambda q: -math.log(q)).n_jumps == 0
        for i in range(n))
    p = none / n
    target = math.exp(-1.0)
    assert abs(p - target) < 3.0 * math.sqrt(target * (1 - target) / n)


def test_markov_jump_matches_records():
    n = 20000
    mj = np.array([
        markov_jump_simulate(gumbel_cdf, 1.0, -5.0, stream(i, seed=43),
                             q_inverse=lambda q: -math.log(q)).final_value()
        for i in range(n)])
    tail = lambda z: np.exp(-z)
    rc = np.array([
        records_from_points(sample_ppp(tail, 1.0, -5.0, stream(i, seed=44),
                                       inverse_tail=lambda w: -np.log(w))
                            ).final_value()
        for i in range(n)])
    a, b = np.sort(mj), np.sort(rc)
    data = np.concatenate([a, b])
    d = np.max(np.abs(
        np.searchsorted(a, data, side="right") / n
        - np.searchsorted(b, data, side="right") / n))
    assert d < 0.02


def test_markov_jump_bisection_fallback():
    rp1 = markov_jump_simulate(gumbel_cdf, 1.0, -2.0, stream(7, seed=45),
                               q_inverse=lambda q: -math.log(q))
    rp2 = markov_jump_simulate(gumbel_cdf, 1.0, -2.0, stream(7, seed=45))
    assert np.allclose(rp1.jump_xs, rp2.jump_xs)
    assert np.allclose(rp1.jump_zs, rp2.jump_zs, atol=1e-9)


def test_markov_jump_instantaneous_start():
    frechet = lambda z: math.exp(-1.0 / z) if z > 0 else 0.0
    with pytest.raises(InstantaneousState):
        markov_jump_simulate(frechet, 1.0, 0.0, stream(46))


def test_markov_jump_zero_domain():
    rp = markov_jump_simulate(gumbel_cdf, 0.0, 0.3, stream(47))
    assert rp.n_jumps == 0
    assert rp.final_value() == 0.3


# -- max merge ----------------------------------------------------------------

def test_max_merge_with_empty_is_identity():
    a = RecordProcess(np.array([0.2, 0.9]), np.array([1.0, 1.5]), 1.0,
                      base_value=0.0)
    e = RecordProcess(np.array([]), np.array([]), 1.0, base_value=0.0)
    m = max_merge(a, e)
    assert m.jump_xs.tolist() == [0.2, 0.9]
    assert m.jump_zs.tolist() == [1.0, 1.5]


def test_max_merge_idempotent():
    a = RecordProcess(np.array([0.2, 0.9]), np.array([1.0, 1.5]), 1.0,
                      base_value=0.0)
    m = max_merge(a, a)
    assert m.jump_xs.tolist() == [0.2, 0.9]
    assert m.jump_zs.tolist() == [1.0, 1.5]


def test_max_merge_interleaved():
    a = RecordProcess(np.array([0.2, 0.9]), np.array([1.0, 1.5]), 1.0,
                      base_value=-math.inf)
    b = RecordProcess(np.array([0.5]), np.array([1.2]), 1.0,
                      base_value=-math.inf)
    m = max_merge(a, b)
    assert m.jump_xs.tolist() == [0.2, 0.5, 0.9]
    assert m.jump_zs.tolist() == [1.0, 1.2, 1.5]
    assert max_merge(a, b).value_at(0.6) == 1.2


def test_max_merge_domain_mismatch():
    a = RecordProcess(np.array([0.2]), np.array([1.0]), 1.0)
    b = RecordProcess(np.array([0.2]), np.array([1.0]), 2.0)
    with pytest.raises(DomainMismatch):
        max_merge(a, b)


def test_max_stability_two_halves():
    # records of two independent half-intensity configurations merge into
    # the full-intensity law
    n = 8000
    tail_full = lambda z: np.exp(-z)
    tail_half = lambda z: 0.5 * np.exp(-z)
    inv_full = lambda w: -np.log(w)
    inv_half = lambda w: -np.log(2.0 * w)
    merged = np.empty(n)
    for i in range(n):
        a = records_from_points(sample_ppp(tail_half, 1.0, -4.0,
                                           stream(2 * i, seed=48),
                                           inverse_tail=inv_half))
        b = records_from_points(sample_ppp(tail_half, 1.0, -4.0,
                                           stream(2 * i + 1, seed=48),
                                           inverse_tail=inv_half))
        merged[i] = max_merge(a, b).final_value()
    zs = np.sort(merged)
    cdf = np.exp(-np.exp(-zs))  # extremal law of the full configuration
    i = np.arange(1, n + 1)
    d = np.max(np.maximum(i / n - cdf, cdf - (i - 1) / n))
    assert d < 0.02


def test_record_jump_count_intensity():
    # expected number of record jumps on (a, b] is ~ log(b/a)
    a_lo, b_hi = 0.1, 1.0
    n = 4000
    tail = lambda z: np.exp(-z)
    inv = lambda w: -np.log(w)
    counts = np.empty(n)
    for i in range(n):
        rp = records_from_points(sample_ppp(tail, 1.0, -4.0,
                                            stream(i, seed=49),
                                            inverse_tail=inv))
        counts[i] = np.sum((rp.jump_xs > a_lo) & (rp.jump_xs <= b_hi))
    target = math.log(b_hi / a_lo)
    assert abs(counts.mean() - target) <= 0.05 * target


# -- super individuals -----------------------------------------------------------

def neveu_flow_realization(xs, log_paths, grid):
    return FlowRealization(
        mech=Mechanism.neveu(), grid=np.asarray(grid, dtype=float),
        xs=np.asarray(xs, dtype=float),
        births=np.full(len(xs), grid[0]),
        log_paths=np.asarray(log_paths, dtype=float), x_max=1.0,
        drift_coefficient=None, truncation={})


def test_single_atom_is_record_and_super():
    grid = [1.0, 2.0, 3.0]
    fr = neveu_flow_realization([0.3], [[1.0, 3.0, 9.0]], grid)
    rep = detect_super_individuals(fr, Renormalizer(Mechanism.neveu()))
    assert rep.record_jump_xs.tolist() == [0.3]
    assert rep.empirical_super_xs.tolist() == [0.3]
    assert np.isposinf(rep.ratio_final[0])


def test_dominant_second_atom():
    grid = [1.0, 2.0, 3.0]
    # atom 1 grows slowly; atom 2 overwhelms it
    fr = neveu_flow_realization(
        [0.2, 0.7],
        [[1.0, 2.0, 4.0], [2.0, 40.0, 800.0]], grid)
    rep = detect_super_individuals(fr, Renormalizer(Mechanism.neveu()),
                                   ratio_threshold=10.0)
    assert rep.record_jump_xs.tolist() == [0.2, 0.7]
    assert 0.7 in rep.empirical_super_xs.tolist()
    assert rep.is_super[1]
    assert not rep.is_super[0] or np.isposinf(rep.ratio_final[0])


def test_stagnant_ratio_not_super():
    grid = [1.0, 2.0, 3.0]
    # second atom huge but its ratio is constant in time
    fr = neveu_flow_realization(
        [0.2, 0.7],
        [[1.0, 2.0, 4.0], [1.0 + math.log(1e4), 2.0 + math.log(1e4),
                           4.0 + math.log(1e4)]], grid)
    rep = detect_super_individuals(fr, Renormalizer(Mechanism.neveu()))
    assert not rep.is_super[1]


def test_detection_on_simulated_neveu_flow():
    # record jumps with a clear gap are flagged super on real flows
    rn = Renormalizer(Mechanism.neveu())
    agree = 0
    total = 0
    for i in range(40):
        fr = flow_neveu(1.0, 1.0, 1e-2, np.linspace(1.0, 10.0, 10),
                        stream(i, seed=50))
        if fr.n_atoms == 0:
            continue
        rep = detect_super_individuals(fr, rn)
        for j in np.nonzero(rep.is_record)[0]:
            prev = rep.record_prev[j]
            if prev == 0.0 or rep.statistics[j] > 2.0 * prev:
                total += 1
                agree += bool(rep.is_super[j])
    assert total > 0
    assert agree / total >= 0.9


def test_anchor_invariance_of_record_set():
    rn1 = Renormalizer(Mechanism.neveu(), lambda0=1.0 / math.e)
    rn2 = Renormalizer(Mechanism.neveu(), lambda0=0.5)
    for i in range(20):
        fr = flow_neveu(1.0, 1.0, 1e-2, np.linspace(1.0, 8.0, 8),
                        stream(i, seed=51))
        r1 = detect_super_individuals(fr, rn1)
        r2 = detect_super_individuals(fr, rn2)
        assert r1.record_jump_xs.tolist() == r2.record_jump_xs.tolist()
