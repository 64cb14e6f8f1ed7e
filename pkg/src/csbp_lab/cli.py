"""Command-line interface.

Subcommands: classify, cumulant, renorm, simulate, verify,
list-experiments.  All outputs are UTF-8 CSV; the verify report path also
renders an ECDF figure per sampled experiment next to the CSVs.  Exit
codes for verify: 0 all checks pass, 1 any check fails, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from typing import Optional

import numpy as np

from .config import (
    DEFAULT_SEED,
    ExperimentConfig,
    config_from_dict,
    mechanism_from_spec,
    parse_config,
)
from .cumulant import CumulantSolver
from .errors import ConfigError, CsbpLabError, UnknownExperiment
from .experiments import (
    EXPERIMENTS,
    experiment_names,
    recommended_n,
    run_experiment,
)
from .mechanism import Mechanism, classify
from .plotting import emit_plot_data, render_ecdf_figure
from .renorm import Renormalizer
from .sampler import RngStream
from .simulate import flow_finite_variation, flow_neveu


def _mechanism_from_text(text: str) -> Mechanism:
    """Shorthand: 'neveu', 'stable_explosive:0.5', 'finite_var_delta:2'."""
    form, _, arg = text.partition(":")
    spec = {"form": form}
    if arg:
        key = "d" if form == "finite_var_delta" else "alpha"
        spec[key] = float(arg)
    return mechanism_from_spec(spec)


def _resolve_threads(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("CSBP_LAB_THREADS")
    return int(env) if env else 1


def _write_csv(path: str, header, rows) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _print_csv(header, rows) -> None:
    w = csv.writer(sys.stdout)
    w.writerow(header)
    w.writerows(rows)


def _emit(out: Optional[str], name: str, header, rows) -> None:
    if out:
        _write_csv(os.path.join(out, name), header, rows)
    else:
        _print_csv(header, rows)


def _load_config(args, experiment: str = "") -> ExperimentConfig:
    had_file = bool(getattr(args, "config", None))
    if had_file:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = ExperimentConfig()
    if experiment:
        cfg.experiment = experiment
    if getattr(args, "n", None) is not None:
        cfg.n = args.n
    elif not had_file and cfg.experiment:
        cfg.n = recommended_n(cfg.experiment)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    cfg.threads = _resolve_threads(getattr(args, "threads", None))
    if getattr(args, "out", None):
        cfg.out = args.out
    return cfg


# argparse-level defaults would mask the config file, so flags default to
# None and are merged by _load_config.
def _common_flags(p):
    p.add_argument("--seed", type=int, default=None,
                   help=f"master seed (default 0x{DEFAULT_SEED:X})")
    p.add_argument("--n", type=int, default=None, help="replica count")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (or CSBP_LAB_THREADS)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--config", default=None, help="TOML configuration file")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="csbp-lab",
        description="Branching-flow limit laws: solvers, simulators and "
                    "verification experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a branching mechanism")
    p.add_argument("mechanism", nargs="?", default=None)
    _common_flags(p)

    p = sub.add_parser("cumulant", help="evaluate the cumulant maps")
    p.add_argument("mechanism", nargs="?", default=None)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.5)
    _common_flags(p)

    p = sub.add_parser("renorm", help="evaluate the renormalizing map")
    p.add_argument("mechanism", nargs="?", default=None)
    p.add_argument("--regime", default=None,
                   choices=[None, "supercritical", "subcritical"])
    p.add_argument("--lambda0", type=float, default=None)
    p.add_argument("--inputs", default="0.5,1.0,2.0",
                   help="comma-separated evaluation points")
    _common_flags(p)

    p = sub.add_parser("simulate", help="simulate a flow of subordinators")
    p.add_argument("mechanism", nargs="?", default=None)
    p.add_argument("--x-max", type=float, default=None, dest="x_max")
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=None,
                   dest="grid_points")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--s-threshold", type=float, default=None,
                   dest="s_threshold")
    _common_flags(p)

    p = sub.add_parser("verify", help="run a named verification experiment")
    p.add_argument("experiment")
    _common_flags(p)

    sub.add_parser("list-experiments",
                   help="list the registered experiments")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except UnknownExperiment as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except CsbpLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "list-experiments":
        for name in experiment_names():
            print(f"{name}\t{EXPERIMENTS[name][1]}\t"
                  f"(recommended --n {recommended_n(name)})")
        return 0

    if cmd == "verify":
        return _cmd_verify(args)

    cfg = _load_config(args)
    mech = _pick_mechanism(args, cfg)

    if cmd == "classify":
        c = classify(mech)
        rows = [(mech.label, c.criticality, c.mean, c.variation,
                 _tri(c.persistent), _tri(c.non_explosive), c.rho,
                 c.psi_prime_0, c.d_coeff,
                 ";".join(sorted(c.numeric_flags)))]
        _emit(cfg.out, "classify.csv",
              ("mechanism", "criticality", "mean", "variation", "persistent",
               "non_explosive", "rho", "psi_prime_0", "d_coeff",
               "numeric_flags"), rows)
        return 0

    if cmd == "cumulant":
        s = CumulantSolver(mech)
        path = "closed" if s.has_closed_form else "quadrature"
        rows = [(args.t, args.lam, s.forward(args.t, args.lam),
                 f"forward/{path}")]
        try:
            rows.append((args.t, args.lam, s.inverse(args.t, args.lam),
                         f"inverse/{path}"))
        except CsbpLabError as exc:
            rows.append((args.t, args.lam, "", f"inverse/undefined:{exc}"))
        rows.append((args.t, args.lam, s.extinction_exponent(args.t),
                     "extinction/solver"))
        rows.append((args.t, args.lam, s.explosion_exponent(args.t),
                     "explosion/solver"))
        _emit(cfg.out, "cumulant.csv", ("t", "lambda", "value", "method"),
              rows)
        return 0

    if cmd == "renorm":
        rn = Renormalizer(mech, regime=args.regime, lambda0=args.lambda0)
        rows = []
        for text in args.inputs.split(","):
            y = float(text)
            rows.append((rn.regime, rn.lambda0, y, rn.value(y),
                         rn.inverse(y), rn.limit_cdf(y)))
        _emit(cfg.out, "renorm.csv",
              ("regime", "lambda0", "input", "G", "Ginv", "F"), rows)
        return 0

    if cmd == "simulate":
        return _cmd_simulate(args, cfg, mech)

    raise ConfigError(f"unknown command {cmd!r}")


def _tri(v) -> str:
    return "unknown" if v is None else ("true" if v else "false")


def _pick_mechanism(args, cfg) -> Mechanism:
    if getattr(args, "mechanism", None):
        return _mechanism_from_text(args.mechanism)
    if cfg.mechanism:
        return mechanism_from_spec(cfg.mechanism)
    return Mechanism.neveu()


def _cmd_simulate(args, cfg: ExperimentConfig, mech: Mechanism) -> int:
    x_max = args.x_max if args.x_max is not None else cfg.x_max
    horizon = args.horizon if args.horizon is not None else cfg.horizon
    pts = args.grid_points if args.grid_points is not None else cfg.grid_points
    eps = args.epsilon if args.epsilon is not None else cfg.epsilon
    s_thr = args.s_threshold if args.s_threshold is not None \
        else cfg.s_threshold
    n = cfg.n if args.n is not None or cfg.experiment else 1

    rows = []
    for r in range(n):
        stream = RngStream(cfg.seed, r)
        if mech.kind == "neveu":
            grid = np.linspace(s_thr, horizon, pts)
            fr = flow_neveu(x_max, s_thr, eps, grid, stream)
        else:
            grid = np.linspace(horizon / pts, horizon, pts)
            fr = flow_finite_variation(mech, x_max, grid, eps, stream)
        for i in range(fr.n_atoms):
            for j, tj in enumerate(fr.grid):
                rows.append((r, i, fr.xs[i], fr.births[i], tj,
                             fr.log_paths[i, j]))
    _emit(cfg.out, "flow.csv",
          ("replica", "atom_index", "x_i", "t_i", "grid_time", "log_X"),
          rows)
    return 0


def _cmd_verify(args) -> int:
    cfg = _load_config(args, experiment=args.experiment)
    name = args.experiment
    result = run_experiment(name, cfg)
    for report in result.reports:
        print(report.line())

    if cfg.out:
        out = cfg.out
        summary = [(r.experiment + ":" + r.check, r.n, r.statistic,
                    r.threshold, r.bias_budget,
                    "true" if r.passed else "false")
                   for r in result.reports]
        _write_csv(os.path.join(out, f"{name}_summary.csv"),
                   ("experiment", "n", "statistic", "threshold",
                    "bias_budget", "pass"), summary)
        sample_rows = []
        for series, values in result.samples.items():
            sample_rows.extend(
                (i, series, float(v)) for i, v in enumerate(values))
        if sample_rows:
            _write_csv(os.path.join(out, f"{name}_samples.csv"),
                       ("replica", "series", "value"), sample_rows)
        if result.overlays and "statistic" in result.samples:
            overlay_name, (cdf, grid) = next(iter(result.overlays.items()))
            rows = emit_plot_data(result.samples["statistic"], overlay_name,
                                  cdf, grid)
            _write_csv(os.path.join(out, f"{name}_plotdata.csv"),
                       ("series", "x", "y"), rows)
            render_ecdf_figure(result.samples["statistic"], result.overlays,
                               os.path.join(out, f"{name}_ecdf.png"),
                               title=name)
        if result.notes:
            _write_csv(os.path.join(out, f"{name}_notes.csv"),
                       ("key", "value"),
                       [(k, v) for k, v in result.notes.items()])
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
