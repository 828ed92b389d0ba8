"""Line-oriented ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Every key is optional; missing
keys take the defaults in ``DEFAULTS`` (the reference market and grid).
"""

from __future__ import annotations

from dataclasses import dataclass

from .discretization import NumericalParams
from .errors import ConfigError
from .grid import GridSpec, SMesh
from .mc import McConfig
from .model import Family, ModelParams, PayoffKind, UtilityFunction

__all__ = ["DEFAULTS", "RunConfig", "parse_config", "load_config"]

_FLOAT, _INT, _STR = float, int, str

_KEYS: dict[str, type] = {
    "strike": _FLOAT, "theta": _FLOAT, "sigma": _FLOAT, "r": _FLOAT, "mu": _FLOAT,
    "gamma": _FLOAT, "a": _FLOAT, "b": _FLOAT, "utility": _STR, "payoff": _STR,
    "delta": _INT, "T": _FLOAT, "N": _INT, "N_alpha": _INT, "N_beta": _INT, "N_S": _INT,
    "L_alpha_min": _FLOAT, "L_alpha_max": _FLOAT, "L_beta_min": _FLOAT,
    "L_beta_max": _FLOAT, "S_max": _FLOAT, "s_mesh": _STR, "lambda_B": _FLOAT,
    "lambda_C": _FLOAT, "tol_max": _FLOAT, "p_max": _INT, "mc_paths": _INT, "mc_seed": _INT,
}

DEFAULTS: dict[str, object] = {
    "strike": 50.0, "theta": 0.01, "sigma": 0.3, "r": 0.05, "mu": 0.1, "gamma": 0.1,
    "a": 0.5, "b": 1.0, "utility": "exponential", "payoff": "call", "delta": -1, "T": 1.0,
    "N": 10, "N_alpha": 6, "N_beta": 6, "N_S": 100, "L_alpha_min": 0.2,
    "L_alpha_max": 0.6, "L_beta_min": -100.0, "L_beta_max": 100.0, "S_max": 100.0,
    "s_mesh": "uniform", "lambda_B": 10.0, "lambda_C": 10.0, "tol_max": 1e-8, "p_max": 50,
    "mc_paths": 100_000, "mc_seed": 20240601,
}

_UTILITY_ALIASES = {"log": "logarithmic", "exp": "exponential"}


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    grid: GridSpec
    numerics: NumericalParams
    utility: UtilityFunction
    mc: McConfig | None
    values: dict


def _convert(key: str, raw: str, line: int):
    kind = _KEYS[key]
    try:
        if kind is _STR:
            if not raw:
                raise ValueError
            return raw
        if kind is _INT:
            x = float(raw)
            if not x.is_integer():
                raise ValueError
            return int(x)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}", line) from None


def _parse_pairs(text: str) -> tuple[dict, dict]:
    values: dict = {}
    lines: dict = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", no)
        key, _, val = (p.strip() for p in body.partition("="))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", no)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", no)
        values[key] = _convert(key, val, no)
        lines[key] = no
    return values, lines


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError (with a line number where possible)."""
    given, lines = _parse_pairs(text)
    v = {**DEFAULTS, **given}

    def at(*keys):
        return min((lines[k] for k in keys if k in lines), default=None)

    def build(keys, fn):
        try:
            return fn()
        except (ConfigError, ValueError) as exc:
            msg = str(exc)
            raise ConfigError(msg, at(*keys)) from None

    family = _UTILITY_ALIASES.get(str(v["utility"]).lower(), str(v["utility"]).lower())
    utility = build(("utility", "gamma", "a", "b"), lambda: UtilityFunction(
        Family(family), gamma=v["gamma"], a=v["a"], b=v["b"]))
    params = build(("strike", "theta", "sigma", "r", "mu", "T", "delta", "payoff"),
                   lambda: ModelParams(mu=v["mu"], sigma=v["sigma"], r=v["r"],
                                       theta=v["theta"], K=v["strike"], T=v["T"],
                                       delta=v["delta"],
                                       payoff_kind=PayoffKind(str(v["payoff"]).lower())))
    if params.r < 0:
        raise ConfigError("r must be non-negative", at("r"))
    grid = build(("N", "N_alpha", "N_beta", "N_S", "L_alpha_min", "L_alpha_max", "L_beta_min",
                  "L_beta_max", "S_max", "s_mesh"),
                 lambda: GridSpec(N_alpha=v["N_alpha"], N_beta=v["N_beta"], N_S=v["N_S"],
                                  N=v["N"], L_alpha_minus=v["L_alpha_min"],
                                  L_alpha_plus=v["L_alpha_max"], L_beta_minus=v["L_beta_min"],
                                  L_beta_plus=v["L_beta_max"], S_plus=v["S_max"],
                                  s_mesh_kind=SMesh(str(v["s_mesh"]).lower())))
    numerics = build(("lambda_B", "lambda_C", "tol_max", "p_max"),
                     lambda: NumericalParams(lambda_B=v["lambda_B"], lambda_C=v["lambda_C"],
                                             tol_max=v["tol_max"], p_max=v["p_max"]))
    mc = None
    if v["mc_paths"] != 0:
        mc = build(("mc_paths", "mc_seed"),
                   lambda: McConfig(paths=v["mc_paths"], seed=v["mc_seed"]))
    return RunConfig(params=params, grid=grid, numerics=numerics, utility=utility, mc=mc,
                     values=v)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"config {path} is not valid UTF-8") from None
    return parse_config(text)
