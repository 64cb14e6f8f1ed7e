"""Experiment configuration: TOML parsing, validation and round-trip."""

from __future__ import annotations

import ast
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .mechanism import Hints, Mechanism

DEFAULT_SEED = 0xC5BF


@dataclass
class ExperimentConfig:
    """Validated configuration for the verification experiments."""

    experiment: str = ""
    n: int = 100_000
    seed: int = DEFAULT_SEED
    t: float = 8.0
    threads: int = 1
    out: Optional[str] = None
    mechanism: Optional[dict] = None
    lambda0: Optional[float] = None
    x_max: float = 1.0
    z_floor: Optional[float] = None
    epsilon: float = 1e-2
    s_threshold: float = 1.0
    horizon: float = 12.0
    grid_points: int = 24
    ratio_threshold: float = 100.0
    monotone_margin: float = 1e-6

    def to_toml(self) -> str:
        lines = []
        table = None
        for key, val in asdict(self).items():
            if val is None:
                continue
            if isinstance(val, dict):
                table = (key, val)
                continue
            lines.append(f"{key} = {_toml_value(val)}")
        if table is not None:
            lines.append(f"[{table[0]}]")
            for k, v in table[1].items():
                lines.append(f"{k} = {_toml_value(v)}")
        return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


_FIELDS = {f: t for f, t in ExperimentConfig.__dataclass_fields__.items()}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment configuration.

    Unknown keys are rejected by name; malformed text raises ParseError
    with the decoder's line/column message.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - set(_FIELDS)
    if unknown:
        raise ValidationError(
            f"unknown configuration keys: {', '.join(sorted(unknown))}")
    cfg = ExperimentConfig(**raw)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.n <= 0:
        raise ValidationError("n must be positive")
    if cfg.threads <= 0:
        raise ValidationError("threads must be positive")
    if cfg.x_max < 0.0:
        raise ValidationError("x_max must be nonnegative")
    if cfg.epsilon <= 0.0:
        raise ValidationError("epsilon must be positive")
    if cfg.s_threshold <= 0.0:
        raise ValidationError("s_threshold must be positive")
    if cfg.horizon <= 0.0:
        raise ValidationError("horizon must be positive")
    if cfg.grid_points < 4:
        raise ValidationError("grid_points must be at least 4")
    if cfg.mechanism is not None:
        mechanism_from_spec(cfg.mechanism)  # raises on bad specs


def mechanism_from_spec(spec: dict) -> Mechanism:
    """Build a mechanism from its config-table form.

    ``{form = "neveu"}``, ``{form = "stable_explosive", alpha = 0.5}``,
    ``{form = "triple", sigma = 0.0, gamma = 0.1, pi = "r**-2"}`` where
    ``pi`` is a whitelisted arithmetic expression in r.
    """
    if "form" not in spec:
        raise ValidationError("mechanism table needs a 'form' key")
    form = spec["form"]
    args = {k: v for k, v in spec.items() if k != "form"}
    if form == "neveu":
        _expect_keys(form, args, set())
        return Mechanism.neveu()
    if form == "log_shift":
        _expect_keys(form, args, set())
        return Mechanism.log_shift()
    if form == "feller_logistic":
        _expect_keys(form, args, set())
        return Mechanism.feller_logistic()
    if form == "stable_explosive":
        _expect_keys(form, args, {"alpha"})
        alpha = args.get("alpha", 0.5)
        if not 0.0 < alpha < 1.0:
            raise ValidationError(
                f"stable_explosive alpha must be in (0,1), got {alpha}")
        return Mechanism.stable_explosive(alpha)
    if form == "stable_subcritical":
        _expect_keys(form, args, {"alpha"})
        alpha = args.get("alpha", 1.0)
        if not 0.0 < alpha <= 1.0:
            raise ValidationError(
                f"stable_subcritical alpha must be in (0,1], got {alpha}")
        return Mechanism.stable_subcritical(alpha)
    if form == "finite_var_delta":
        _expect_keys(form, args, {"d"})
        d = args.get("d", 2.0)
        if d <= 0.0:
            raise ValidationError(f"finite_var_delta d must be > 0, got {d}")
        return Mechanism.finite_var_delta(d)
    if form == "triple":
        _expect_keys(form, args, {"sigma", "gamma", "pi", "mean_finite",
                                  "variation_finite", "persistent",
                                  "non_explosive"})
        if "pi" not in args:
            raise ValidationError("triple mechanism needs a 'pi' expression")
        pi = parse_density_expression(args["pi"])
        hints = Hints(mean_finite=args.get("mean_finite"),
                      variation_finite=args.get("variation_finite"),
                      persistent=args.get("persistent"),
                      non_explosive=args.get("non_explosive"))
        return Mechanism.levy_triple(
            float(args.get("sigma", 0.0)), float(args.get("gamma", 0.0)),
            pi, hints=hints, label=f"triple(pi={args['pi']!r})")
    raise ValidationError(f"unknown mechanism form {form!r}")


def _expect_keys(form, args, allowed):
    extra = set(args) - allowed
    if extra:
        raise ValidationError(
            f"mechanism form {form!r} does not accept: {', '.join(sorted(extra))}")


_ALLOWED_CALLS = {"exp": math.exp, "log": math.log, "sqrt": math.sqrt}
_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def parse_density_expression(text: str) -> Callable[[float], float]:
    """Compile a whitelisted arithmetic expression in r to a density.

    Permitted: numbers, the variable r, + - * / **, unary minus, and
    calls to exp/log/sqrt.  Anything else raises ValidationError.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"bad density expression {text!r}: {exc}") from exc
    _check_expr(tree.body, text)
    code = compile(tree, "<density>", "eval")
    env = {"__builtins__": {}}
    env.update(_ALLOWED_CALLS)

    def density(r: float) -> float:
        return float(eval(code, env, {"r": r}))

    density.expression = text
    return density


def _check_expr(node: ast.AST, text: str) -> None:
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ValidationError(f"non-numeric constant in {text!r}")
        return
    if isinstance(node, ast.Name):
        if node.id != "r":
            raise ValidationError(
                f"only the variable r is allowed, got {node.id!r}")
        return
    if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
        _check_expr(node.left, text)
        _check_expr(node.right, text)
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op,
                                                    (ast.USub, ast.UAdd)):
        _check_expr(node.operand, text)
        return
    if isinstance(node, ast.Call):
        if (isinstance(node.func, ast.Name)
                and node.func.id in _ALLOWED_CALLS and not node.keywords
                and len(node.args) == 1):
            _check_expr(node.args[0], text)
            return
        raise ValidationError(f"disallowed call in {text!r}")
    raise ValidationError(
        f"disallowed syntax {type(node).__name__} in {text!r}")
