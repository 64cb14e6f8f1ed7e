"""Named verification experiments.

Each experiment maps one limit theorem to a deterministic, seeded
statistical test: exact samplers feed a renormalized statistic whose law
the theory pins down, and a Kolmogorov-Smirnov (or mean-match) check at a
stated tolerance decides pass/fail.  Thresholds separate pure sampling
error (the 5% KS critical value) from an explicit bias budget for finite
horizons and truncations.

Replicas are partitioned into blocks with a fixed, thread-independent
layout; every block (or, for flow experiments, every replica) owns a
keyed RNG stream, so results are byte-identical for a given (seed, n)
regardless of worker parallelism.
"""

from __future__ import annotations

import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .config import ExperimentConfig
from .cumulant import CumulantSolver
from .errors import UnknownExperiment
from .extremal import (
    detect_super_individuals,
    fdd_probability,
    markov_jump_simulate,
    max_merge,
    records_from_points,
)
from .mechanism import Mechanism
from .renorm import Renormalizer
from .sampler import RngStream, sample_ppp
from .simulate import flow_finite_variation, flow_neveu, marginal_exact
from .stats import (
    KsReport,
    frechet_cdf,
    gumbel_cdf,
    ks_critical,
    ks_distance,
    mean_within,
    two_sample_ks,
    weibull_cdf,
)

SAMPLING_REFERENCE_N = 100_000


@dataclass
class ExperimentResult:
    name: str
    reports: List[KsReport]
    samples: Dict[str, np.ndarray] = field(default_factory=dict)
    overlays: Dict[str, tuple] = field(default_factory=dict)
    notes: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


# -- deterministic replica/block layout ----------------------------------

def _block_layout(n: int, max_blocks: int = 64, min_block: int = 2048):
    """Block sizes depending on n only, never on the thread count."""
    n_blocks = max(1, min(max_blocks, n // min_block))
    base = n // n_blocks
    sizes = [base + (1 if i < n % n_blocks else 0) for i in range(n_blocks)]
    return [s for s in sizes if s > 0]


def _map_blocks(cfg: ExperimentConfig, fn: Callable,
                salt: str = "") -> np.ndarray:
    """fn(stream, count) -> 1-d array; concatenated in block order.

    The master seed is salted with the experiment/check tag so that
    different checks draw independent randomness; everything stays
    deterministic in (seed, n) and independent of the thread count.
    """
    sizes = _block_layout(cfg.n)
    seed = cfg.seed ^ zlib.crc32(salt.encode())
    streams = [RngStream(seed, i) for i in range(len(sizes))]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(fn, streams, sizes))
    else:
        parts = [fn(s, c) for s, c in zip(streams, sizes)]
    return np.concatenate(parts)


def _map_replicas(cfg: ExperimentConfig, fn: Callable, n: Optional[int] = None):
    """fn(replica_index, stream) -> value; stream_id = replica index."""
    n = cfg.n if n is None else n
    indices = range(n)

    def call(i):
        return fn(i, RngStream(cfg.seed, i))

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(call, indices))
    return [call(i) for i in indices]


def _budget(total: float, n: int) -> float:
    """Bias budget: the stated total tolerance minus the sampling part at
    the reference replica count."""
    return max(total - ks_critical(SAMPLING_REFERENCE_N), 0.0)


def _ppp_maxima(cfg: ExperimentConfig, mass: float,
                inverse_tail: Callable, z_floor: float,
                salt: str = "") -> np.ndarray:
    """Per-replica record value at x_max for a Poisson configuration:
    the running maximum at the right edge is the maximum of all marks,
    so positions need not be drawn (batched equivalent of sample_ppp
    followed by records_from_points; those operations are exercised
    directly in the extremal-algebra suite)."""

    def block(stream, count):
        g = stream.gen
        counts = g.poisson(mass * cfg.x_max, count)
        total = int(counts.sum())
        marks = inverse_tail(mass * g.uniform(0.0, 1.0, total))
        out = np.full(count, z_floor, dtype=float)
        np.maximum.at(out, np.repeat(np.arange(count), counts), marks)
        return out

    return _map_blocks(cfg, block, salt=salt)


# -- experiments -----------------------------------------------------------

def _exp_neveu_gumbel(cfg: ExperimentConfig) -> ExperimentResult:
    """Renormalized Neveu population sizes match the Gumbel law:
    exp(-t) log X_t(1) with X sampled exactly via stable marginals."""
    name = "neveu_gumbel"
    t = cfg.t
    start = time.perf_counter()
    mech = Mechanism.neveu()
    logx = _map_blocks(cfg, lambda s, c: marginal_exact(mech, 1.0, t, s,
                                                        size=c),
                       salt=name)
    z = np.sort(math.exp(-t) * logx)
    d = ks_distance(z, gumbel_cdf)
    elapsed = time.perf_counter() - start
    reports = [
        KsReport(name, "ks_gumbel", cfg.n, d, ks_critical(cfg.n),
                 _budget(0.02, cfg.n)),
        KsReport(name, "runtime_seconds", cfg.n, elapsed, 10.0, 0.0),
    ]
    return ExperimentResult(
        name, reports, samples={"statistic": z},
        overlays={"gumbel": (gumbel_cdf, np.linspace(-3.0, 8.0, 200))},
        notes={"t": t})


def _exp_neveu_flow_records(cfg: ExperimentConfig) -> ExperimentResult:
    """Records of a Poisson configuration with exponential intensity tail
    reproduce the Gumbel extremal law at the right edge."""
    name = "neveu_flow_records"
    z_floor = cfg.z_floor if cfg.z_floor is not None else -5.0
    mass = math.exp(-z_floor)
    z = np.sort(_ppp_maxima(cfg, mass, lambda w: -np.log(w), z_floor,
                             salt=name))
    d = ks_distance(z, gumbel_cdf)
    reports = [KsReport(name, "ks_gumbel", cfg.n, d, ks_critical(cfg.n),
                        _budget(0.01, cfg.n))]
    return ExperimentResult(
        name, reports, samples={"statistic": z},
        overlays={"gumbel": (gumbel_cdf, np.linspace(-3.0, 8.0, 200))},
        notes={"z_floor": z_floor,
               "truncation_probability": math.exp(-cfg.x_max * mass)})


def _exp_explosion_weibull(cfg: ExperimentConfig) -> ExperimentResult:
    """Explosion times of the explosive stable family follow a Weibull law;
    the numerically solved explosion exponent matches t^2."""
    name = "explosion_weibull"
    alpha = 0.5
    mech = Mechanism.stable_explosive(alpha)
    xi = np.sort(_map_blocks(
        cfg, lambda s, c: (s.gen.standard_exponential(c)) ** (1.0 - alpha),
        salt=name))
    beta = 1.0 / (1.0 - alpha)
    d = ks_distance(xi, lambda v: weibull_cdf(v, beta))
    reports = [KsReport(name, "ks_weibull", cfg.n, d, ks_critical(cfg.n),
                        _budget(0.006, cfg.n))]
    solver = CumulantSolver(mech, use_closed_form=False)
    for t in (0.5, 1.0, 3.0):
        v = solver.explosion_exponent(t)
        rel = abs(v - t ** beta) / t ** beta
        reports.append(KsReport(name, f"explosion_exponent_t{t:g}", 1, rel,
                                1e-6, 0.0))
    return ExperimentResult(
        name, reports, samples={"statistic": xi},
        overlays={"weibull2": (lambda v: weibull_cdf(v, beta),
                               np.linspace(0.0, 4.0, 200))})


def _exp_explosion_records(cfg: ExperimentConfig) -> ExperimentResult:
    """Reciprocal explosion times of an explosive flow form an extremal
    process whose intensity tail is the explosion exponent at 1/z; the
    record value at the right edge is Frechet."""
    name = "explosion_records"
    alpha = 0.5
    beta = 1.0 / (1.0 - alpha)  # tail z^{-beta}, Frechet(beta) records
    z_floor = cfg.z_floor if cfg.z_floor is not None else 0.1
    mass = z_floor ** -beta
    z = np.sort(_ppp_maxima(cfg, mass, lambda w: w ** (-1.0 / beta),
                             z_floor, salt=name))
    d = ks_distance(z, lambda v: frechet_cdf(v, beta))
    reports = [KsReport(name, "ks_frechet2", cfg.n, d, ks_critical(cfg.n),
                        _budget(0.006, cfg.n))]
    return ExperimentResult(
        name, reports, samples={"statistic": z},
        overlays={"frechet2": (lambda v: frechet_cdf(v, beta),
                               np.linspace(z_floor, 15.0, 200))},
        notes={"z_floor": z_floor,
               "truncation_probability": math.exp(-cfg.x_max * mass)})


def _exp_extinction_frechet(cfg: ExperimentConfig) -> ExperimentResult:
    """Extinction exponent of psi(u) = u^2 equals 1/t numerically, and the
    extinction-time records of the flow are Frechet(1)."""
    name = "extinction_frechet"
    mech = Mechanism.stable_subcritical(1.0)
    solver = CumulantSolver(mech, use_closed_form=False)
    reports = []
    for t in (0.5, 1.0, 3.0):
        v = solver.extinction_exponent(t)
        rel = abs(v - 1.0 / t) * t
        reports.append(KsReport(name, f"extinction_exponent_t{t:g}", 1, rel,
                                1e-6, 0.0))
    z_floor = cfg.z_floor if cfg.z_floor is not None else 0.01
    mass = 1.0 / z_floor
    z = np.sort(_ppp_maxima(cfg, mass, lambda w: 1.0 / w, z_floor,
                             salt=name))
    d = ks_distance(z, lambda v: frechet_cdf(v, 1.0))
    reports.append(KsReport(name, "ks_frechet1", cfg.n, d,
                            ks_critical(cfg.n), _budget(0.006, cfg.n)))
    return ExperimentResult(
        name, reports, samples={"statistic": z},
        overlays={"frechet1": (lambda v: frechet_cdf(v, 1.0),
                               np.linspace(z_floor, 40.0, 200))},
        notes={"z_floor": z_floor,
               "truncation_probability": math.exp(-cfg.x_max * mass)})


def _exp_nonpersistent_records(cfg: ExperimentConfig) -> ExperimentResult:
    """Extinction times of a non-persistent flow form an extremal process
    with distribution exp(-extinction exponent at z)."""
    name = "nonpersistent_records"
    alpha = 1.0
    mech = Mechanism.stable_subcritical(alpha)
    z_floor = cfg.z_floor if cfg.z_floor is not None else 0.01
    # intensity tail = extinction exponent: (alpha^2 z)^{-1/alpha}
    mass = (alpha * alpha * z_floor) ** (-1.0 / alpha)

    def inv(w):
        return w ** -alpha / (alpha * alpha)

    z = np.sort(_ppp_maxima(cfg, mass, inv, z_floor, salt=name))
    beta = 1.0 / alpha
    # F(z) = exp(-(alpha^2 z)^{-1/alpha}): Frechet(1/alpha) with scale alpha^-2
    d = ks_distance(z, lambda v: frechet_cdf(v * alpha * alpha, beta))
    solver = CumulantSolver(mech, use_closed_form=False)
    rel = max(abs(solver.extinction_exponent(t)
                  - (alpha * alpha * t) ** (-1.0 / alpha))
              * (alpha * alpha * t) ** (1.0 / alpha) for t in (0.5, 2.0))
    reports = [
        KsReport(name, "ks_extremal_law", cfg.n, d, ks_critical(cfg.n),
                 _budget(0.006, cfg.n)),
        KsReport(name, "extinction_exponent_grid", 1, rel, 1e-6, 0.0),
    ]
    return ExperimentResult(
        name, reports, samples={"statistic": z},
        notes={"alpha": alpha, "z_floor": z_floor})


def _exp_logshift_extremal(cfg: ExperimentConfig) -> ExperimentResult:
    """The log-shift renormalizer and its inverse match their closed forms
    through the numerical quadrature path, and the numerically solved
    cumulant satisfies the semigroup identity."""
    name = "logshift_extremal"
    mech = Mechanism.log_shift()
    numeric = CumulantSolver(mech, use_closed_form=False)
    rn = Renormalizer(mech, solver=numeric)

    zs = np.geomspace(0.01, 100.0, 17)
    g_err = max(abs(math.exp(-numeric.phi(rn.lambda0, z))
                    - 1.0 / math.log1p(z)) for z in zs)
    inv_zs = np.geomspace(0.35, 5.0, 9)
    ginv_err = max(abs(rn.inverse(z) - (math.exp(1.0 / z) - 1.0))
                   / (math.exp(1.0 / z) - 1.0) for z in inv_zs)
    semi_err = 0.0
    for s in (0.1, 0.5, 1.0, 2.0):
        for t in (0.1, 0.5, 1.0, 2.0):
            for lam in (0.3, 1.0, 2.5):
                direct = numeric.forward(s + t, lam)
                chained = numeric.forward(s, numeric.forward(t, lam))
                semi_err = max(semi_err,
                               abs(direct - chained) / (1.0 + direct))
    reports = [
        KsReport(name, "map_vs_closed_form", zs.size, g_err, 1e-10, 0.0),
        KsReport(name, "inverse_vs_closed_form", inv_zs.size, ginv_err,
                 1e-8, 0.0),
        KsReport(name, "cumulant_semigroup", 48, semi_err, 1e-8, 0.0),
    ]
    f10 = rn.limit_cdf(1.0)
    return ExperimentResult(name, reports,
                            notes={"limit_cdf_at_1": f10,
                                   "limit_cdf_at_1_target":
                                       math.exp(1.0 - math.e)})


def _exp_grey_martingale(cfg: ExperimentConfig) -> ExperimentResult:
    """The martingale exp(-v_{-t}(lam) X_t) has constant mean exp(-x lam),
    and the normalized mass ends at 0 or infinity, nothing in between."""
    name = "grey_martingale"
    mech = Mechanism.neveu()
    solver = CumulantSolver(mech)
    lam, x = 0.5, 1.0
    reports = []
    samples = {}
    for t in (2.0, 4.0):
        logv = solver.log_inverse(t, lam)
        logx = _map_blocks(cfg, lambda s, c: marginal_exact(mech, x, t, s,
                                                            size=c),
                           salt=f"{name}_t{t:g}")
        with np.errstate(over="ignore"):
            vals = np.exp(-np.exp(logv + logx))
        err, tol = mean_within(vals, math.exp(-x * lam))
        reports.append(KsReport(name, f"martingale_mean_t{t:g}", cfg.n,
                                err, tol, 0.0))
        samples[f"martingale_term_t{t:g}"] = vals
    # dichotomy at t = 10
    t = 10.0
    logv = solver.log_inverse(t, lam)
    logx = _map_blocks(cfg, lambda s, c: marginal_exact(mech, x, t, s,
                                                        size=c),
                       salt=f"{name}_t10")
    w = logv + logx
    middle = float(np.mean((w > math.log(1e-3)) & (w < math.log(1e3))))
    reports.append(KsReport(name, "dichotomy_middle_fraction", cfg.n,
                            middle, 0.01, 0.0))
    to_zero = float(np.mean(w <= math.log(1e-3)))
    target = math.exp(-x * lam)
    se = math.sqrt(target * (1.0 - target) / cfg.n)
    reports.append(KsReport(name, "vanishing_probability", cfg.n,
                            abs(to_zero - target), 3.0 * se, 0.005))
    samples["log_normalized_mass_t10"] = w
    return ExperimentResult(name, reports, samples=samples)


def _exp_finite_mean_subordinator(cfg: ExperimentConfig) -> ExperimentResult:
    """For a finite-mean supercritical mechanism, v_{-t}(lam) X_t converges
    to a subordinator marginal with Laplace exponent theta ->
    v_{log(theta)/|psi'(0+)|}(lam)."""
    name = "finite_mean_subordinator"
    mech = Mechanism.feller_logistic()
    solver = CumulantSolver(mech)
    lam, x, t = 0.5, 1.0, 12.0
    logv = solver.log_inverse(t, lam)
    logx = _map_blocks(cfg, lambda s, c: marginal_exact(mech, x, t, s,
                                                        size=c),
                       salt=name)
    with np.errstate(over="ignore"):
        w = np.where(np.isneginf(logx), 0.0, np.exp(logv + logx))
    reports = []
    for theta in (0.5, 1.0, 2.0):
        vals = np.exp(-theta * w)
        lt = math.log(theta)  # psi'(0+) = -1
        target_exp = solver.forward(lt, lam) if lt >= 0.0 else \
            solver.inverse(-lt, lam)
        err, tol = mean_within(vals, math.exp(-x * target_exp), extra=0.005)
        reports.append(KsReport(name, f"laplace_theta{theta:g}", cfg.n,
                                err, tol, 0.0))
    return ExperimentResult(name, reports,
                            samples={"normalized_mass": w},
                            notes={"t": t, "lambda": lam})


def _exp_finite_variation_no_super(cfg: ExperimentConfig) -> ExperimentResult:
    """Finite-variation flows have no super-individuals: the empirical
    overwhelming test comes back empty in almost every replica."""
    name = "finite_variation_no_super"
    mech = Mechanism.finite_var_delta(2.0)
    rn = Renormalizer(mech)
    grid = np.linspace(cfg.horizon / cfg.grid_points, cfg.horizon,
                       cfg.grid_points)

    def one(i, stream):
        fr = flow_finite_variation(mech, cfg.x_max, grid, 0.5, stream)
        if fr.n_atoms == 0:
            return 0
        rep = detect_super_individuals(
            fr, rn, ratio_threshold=cfg.ratio_threshold,
            margin=cfg.monotone_margin)
        return int(rep.empirical_super_xs.size > 0)

    flags = np.array(_map_replicas(cfg, one))
    frac = float(flags.mean())
    reports = [KsReport(name, "nonempty_super_fraction", cfg.n, frac,
                        0.01, 0.0)]
    return ExperimentResult(name, reports,
                            samples={"nonempty_flag": flags},
                            notes={"x_max": cfg.x_max,
                                   "horizon": cfg.horizon})


def _exp_extremal_algebra(cfg: ExperimentConfig) -> ExperimentResult:
    """Product finite-dimensional law vs Monte Carlo records, the Markov
    jump construction vs records, and max-stability under merging."""
    name = "extremal_algebra"
    reports = []
    samples = {}

    # finite-dimensional probabilities on three fixed vectors
    vectors = [
        ("frechet1", lambda z: frechet_cdf(z, 1.0), 1.0 / 0.5,
         lambda w: 1.0 / w, 0.5, [1.0, 2.0], [1.5, 2.5]),
        ("gumbel", gumbel_cdf, math.exp(0.0), lambda w: -np.log(w), 0.0,
         [0.5, 1.0], [0.8, 1.4]),
        ("frechet2", lambda z: frechet_cdf(z, 2.0), 0.4 ** -2,
         lambda w: w ** -0.5, 0.4, [0.7, 1.0], [1.1, 0.9]),
    ]
    for tag, cdf, mass, inv, z_floor, xs, zs in vectors:
        target = fdd_probability(cdf, xs, zs)
        zp = np.minimum.accumulate(np.asarray(zs)[::-1])[::-1]

        def block(stream, count, mass=mass, inv=inv, xs=xs, zp=zp):
            g = stream.gen
            counts = g.poisson(mass * xs[-1], count)
            total = int(counts.sum())
            pos = g.uniform(0.0, xs[-1], total)
            marks = inv(mass * g.uniform(0.0, 1.0, total))
            # mark constraint level depends on which x-cell the atom is in
            level = np.asarray(zp)[np.searchsorted(xs, pos, side="left")]
            bad = (marks > level).astype(float)
            out = np.zeros(count)
            np.add.at(out, np.repeat(np.arange(count), counts), bad)
            return (out == 0.0).astype(float)

        hits = _map_blocks(cfg, block, salt=f"fdd_{tag}")
        err = abs(float(hits.mean()) - target)
        reports.append(KsReport(name, f"fdd_{tag}", cfg.n, err, 0.01, 0.0))

    # Markov jump construction vs records of a Poisson configuration
    z_floor = -2.0
    tail = lambda z: np.exp(-z)
    inv = lambda w: -np.log(w)

    def mj_block(stream, count):
        return np.array([
            markov_jump_simulate(gumbel_cdf, cfg.x_max, z_floor, stream,
                                 q_inverse=lambda q: -math.log(q)
                                 ).final_value()
            for _ in range(count)])

    def rec_block(stream, count):
        return np.array([
            records_from_points(
                sample_ppp(tail, cfg.x_max, z_floor, stream,
                           inverse_tail=inv)).final_value()
            for _ in range(count)])

    mj = _map_blocks(cfg, mj_block, salt="markov")
    rec = _map_blocks(cfg, rec_block, salt="records")
    d = two_sample_ks(mj, rec)
    crit2 = 1.36 * math.sqrt((mj.size + rec.size) / (mj.size * rec.size))
    ref2 = 1.36 * math.sqrt(2.0 / SAMPLING_REFERENCE_N)
    reports.append(KsReport(name, "markov_vs_records", cfg.n, d, crit2,
                            max(0.01 - ref2, 0.0)))
    samples["markov_final"] = mj
    samples["records_final"] = rec

    # max-merging m = 4 quarter-intensity processes reproduces the law
    m = 4
    z_floor_m = -3.0
    tail_q = lambda z: np.exp(-z) / m
    inv_q = lambda w: -np.log(m * w)

    def merge_block(stream, count):
        out = np.empty(count)
        for k in range(count):
            parts = [records_from_points(
                sample_ppp(tail_q, cfg.x_max, z_floor_m, stream,
                           inverse_tail=inv_q)) for _ in range(m)]
            merged = parts[0]
            for p in parts[1:]:
                merged = max_merge(merged, p)
            out[k] = merged.final_value()
        return out

    merged = np.sort(_map_blocks(cfg, merge_block, salt="merge"))
    d = ks_distance(merged, gumbel_cdf)
    reports.append(KsReport(name, "max_merge_m4", cfg.n, d,
                            ks_critical(cfg.n), _budget(0.01, cfg.n)))
    samples["merged_final"] = merged
    return ExperimentResult(
        name, reports, samples=samples,
        overlays={"gumbel": (gumbel_cdf, np.linspace(-3.0, 8.0, 200))})


def _exp_super_individual_concordance(cfg: ExperimentConfig) -> ExperimentResult:
    """Record jumps of the renormalized statistic with a clear gap are the
    empirically-overwhelming individuals, and the jump set does not depend
    on the anchor."""
    name = "super_individual_concordance"
    rn_a = Renormalizer(Mechanism.neveu(), lambda0=1.0 / math.e)
    rn_b = Renormalizer(Mechanism.neveu(), lambda0=0.5)
    grid = np.linspace(1.0, 10.0, 10)

    def one(i, stream):
        fr = flow_neveu(cfg.x_max, 1.0, cfg.epsilon, grid, stream)
        if fr.n_atoms == 0:
            return (0, 0, True)
        rep_a = detect_super_individuals(
            fr, rn_a, ratio_threshold=cfg.ratio_threshold,
            margin=cfg.monotone_margin)
        rep_b = detect_super_individuals(
            fr, rn_b, ratio_threshold=cfg.ratio_threshold,
            margin=cfg.monotone_margin)
        agree = 0
        total = 0
        for j in np.nonzero(rep_a.is_record)[0]:
            prev = rep_a.record_prev[j]
            if prev == 0.0 or rep_a.statistics[j] > 2.0 * prev:
                total += 1
                agree += bool(rep_a.is_super[j])
        same = (rep_a.record_jump_xs.tolist()
                == rep_b.record_jump_xs.tolist())
        return (agree, total, same)

    rows = _map_replicas(cfg, one)
    agree = sum(r[0] for r in rows)
    total = sum(r[1] for r in rows)
    same = sum(1.0 for r in rows if r[2]) / len(rows)
    concord = agree / total if total else 1.0
    reports = [
        KsReport(name, "gap_records_flagged_super", total, 1.0 - concord,
                 0.05, 0.0),
        KsReport(name, "anchor_invariant_jump_set", len(rows), 1.0 - same,
                 0.0, 0.0),
    ]
    return ExperimentResult(name, reports,
                            notes={"record_jumps_checked": total})


EXPERIMENTS = {
    "neveu_gumbel": (_exp_neveu_gumbel,
                     "Gumbel limit of renormalized Neveu populations"),
    "neveu_flow_records": (_exp_neveu_flow_records,
                           "records of the exponential-tail configuration"),
    "explosion_weibull": (_exp_explosion_weibull,
                          "Weibull explosion times, index 1/2"),
    "explosion_records": (_exp_explosion_records,
                          "Frechet records of reciprocal explosion times"),
    "extinction_frechet": (_exp_extinction_frechet,
                           "Frechet records of extinction times, psi = u^2"),
    "nonpersistent_records": (_exp_nonpersistent_records,
                              "extremal law of extinction times"),
    "logshift_extremal": (_exp_logshift_extremal,
                          "log-shift closed forms vs the numeric solver"),
    "grey_martingale": (_exp_grey_martingale,
                        "martingale mean and the 0/infinity dichotomy"),
    "finite_mean_subordinator": (_exp_finite_mean_subordinator,
                                 "subordinator limit of finite-mean flows"),
    "finite_variation_no_super": (_exp_finite_variation_no_super,
                                  "no super-individuals in finite variation"),
    "extremal_algebra": (_exp_extremal_algebra,
                         "product law, jump construction, max-merging"),
    "super_individual_concordance": (_exp_super_individual_concordance,
                                     "record jumps vs overwhelming progeny"),
}


# Replica counts at which the stated tolerances are calibrated; flow
# experiments replicate whole flows and need far fewer.
RECOMMENDED_N = {
    "finite_variation_no_super": 200,
    "super_individual_concordance": 500,
}


def recommended_n(name: str) -> int:
    return RECOMMENDED_N.get(name, SAMPLING_REFERENCE_N)


def run_experiment(name: str, cfg: ExperimentConfig) -> ExperimentResult:
    """Run a named experiment; deterministic given (cfg.seed, cfg.n)."""
    if name not in EXPERIMENTS:
        raise UnknownExperiment(
            f"unknown experiment {name!r}; known: {', '.join(sorted(EXPERIMENTS))}")
    return EXPERIMENTS[name][0](cfg)


def experiment_names() -> List[str]:
    return list(EXPERIMENTS)
