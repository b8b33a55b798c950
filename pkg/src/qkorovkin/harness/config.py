"""Experiment configuration: TOML files layered over per-command presets.

A config file has the sections below; every key is optional and falls back
to the preset of the subcommand being run::

    [operator]
    r = 2
    n = [8, 16, 32, 64]          # strictly increasing ladder
    q_rule = "reciprocal"        # "reciprocal" (1 - 1/(n+1)), "sqrt" (1 - 1/sqrt(n+1)) or a number
    beta_rule = "reciprocal"     # "reciprocal" (n/(n+1)), a number, or a list of r rules

    [target]
    function = "square"          # one, identity, square, sine-bump, abs-shift
    # samples = [0.0, 0.1, ...]  # tabulated values on a uniform grid instead

    [grid]
    points = 257

    [truncation]
    mass_tol = 1e-10
    p_max = 4096

    [moments]
    x = [0.0, 0.5, 1.0]
    bounds = "printed"           # "printed" or "corrected" ([n-1]_q in the x-free terms)

    [summability]
    scheme = "deferred-cesaro"   # deferred-cesaro, cesaro, identity
    N = 512
    eps = [0.1, 0.01]

    [counterexample]
    m_max = 30
    u = [0.9, 0.99, 0.999]
"""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..gridfunction import BUILTINS, GridFunction, builtin
from ..operators import SequenceSpec, Truncation, reciprocal_beta, reciprocal_q, sqrt_q
from ..summability import SummabilityScheme, default_scheme, identity_scheme

__all__ = ["ConfigError", "ExperimentConfig", "PRESETS", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_BASE: dict[str, dict[str, Any]] = {
    "operator": {"r": 2, "n": [8, 16, 32, 64], "q_rule": "reciprocal", "beta_rule": "reciprocal"},
    "target": {"function": "square"},
    "grid": {"points": 257},
    "truncation": {"mass_tol": 1e-10, "p_max": 4096},
    "moments": {"x": [0.0, 0.25, 0.5, 0.75, 1.0], "bounds": "printed"},
    "summability": {"scheme": "deferred-cesaro", "N": 512, "eps": [0.1, 0.01]},
    "counterexample": {"m_max": 30, "u": [0.9, 0.99, 0.999]},
}


def _preset(**overrides: dict[str, Any]) -> dict[str, dict[str, Any]]:
    out = copy.deepcopy(_BASE)
    for section, values in overrides.items():
        out[section].update(values)
    return out


PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "verify-moments": _preset(operator={"n": [2, 8, 32]}),
    "converge": _preset(),
    "counterexample": _preset(target={"function": "one"}, grid={"points": 65}),
    "summability": _preset(grid={"points": 65}, truncation={"p_max": 65536}),
}

_KNOWN = {section: set(keys) | ({"samples"} if section == "target" else set())
          for section, keys in _BASE.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    r: int
    n_ladder: tuple[int, ...]
    sequence: SequenceSpec
    target: GridFunction
    grid_points: int
    truncation: Truncation
    moment_x: tuple[float, ...]
    moment_bounds: str
    scheme_name: str
    scheme: SummabilityScheme
    N: int
    eps: tuple[float, ...]
    m_max: int
    u_values: tuple[float, ...]
    source: str = "<preset>"


def _fail(field: str, msg: str) -> ConfigError:
    return ConfigError(f"{field}: {msg}")


def _int(value: Any, field: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(field, f"expected an integer, got {value!r}")
    if value < minimum:
        raise _fail(field, f"must be >= {minimum}, got {value}")
    return value


def _float(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(field, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise _fail(field, f"must be finite, got {value!r}")
    return float(value)


def _list(value: Any, field: str) -> list:
    if not isinstance(value, list) or not value:
        raise _fail(field, f"expected a non-empty list, got {value!r}")
    return value


def _q_rule(value: Any, field: str) -> Callable[[int], float]:
    if value == "reciprocal":
        return reciprocal_q
    if value == "sqrt":
        return sqrt_q
    q = _float(value, field)
    if not (0.0 < q < 1.0):
        raise _fail(field, f"a fixed q must lie in (0, 1), got {q}")
    return lambda n: q


def _q_limit(value: Any) -> float:
    if value == "reciprocal":
        return math.exp(-1.0)
    # q_n = 1 - 1/sqrt(n+1) and fixed q both give q_n^n -> 0
    return 0.0


def _beta_rule(value: Any, field: str) -> Callable[[int], float]:
    if value == "reciprocal":
        return reciprocal_beta
    b = _float(value, field)
    if not (0.0 < b < 1.0):
        raise _fail(field, f"beta must lie in (0, 1), got {b}")
    return lambda n: b


def _scheme(name: Any) -> SummabilityScheme:
    if name == "deferred-cesaro":
        return default_scheme()
    if name == "cesaro":
        return SummabilityScheme(b=lambda n: 0, c=lambda n: n)
    if name == "identity":
        return identity_scheme()
    raise _fail("summability.scheme", f"unknown scheme {name!r}; known: cesaro, deferred-cesaro, identity")


def _merge(base: dict, user: dict) -> dict:
    out = copy.deepcopy(base)
    for section, values in user.items():
        if section not in _KNOWN:
            raise _fail(section, f"unknown section; known: {', '.join(sorted(_KNOWN))}")
        if not isinstance(values, dict):
            raise _fail(section, "expected a table of key = value pairs")
        for key, value in values.items():
            if key not in _KNOWN[section]:
                raise _fail(f"{section}.{key}", "unknown key")
            out[section][key] = value
    return out


def build_config(raw: dict, source: str = "<preset>") -> ExperimentConfig:
    op = raw["operator"]
    r = _int(op["r"], "operator.r", 1)
    ladder = [_int(n, f"operator.n[{i}]", 2) for i, n in enumerate(_list(op["n"], "operator.n"))]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise _fail("operator.n", f"ladder must be strictly increasing, got {ladder}")

    q_rule = _q_rule(op["q_rule"], "operator.q_rule")
    betas = op["beta_rule"]
    if isinstance(betas, list):
        if len(betas) != r:
            raise _fail("operator.beta_rule", f"expected {r} rules, got {len(betas)}")
        beta_rules = tuple(_beta_rule(b, f"operator.beta_rule[{i}]") for i, b in enumerate(betas))
    else:
        beta_rules = (_beta_rule(betas, "operator.beta_rule"),) * r
    sequence = SequenceSpec(q_rule=q_rule, beta_rules=beta_rules, limit=_q_limit(op["q_rule"]))

    points = _int(raw["grid"]["points"], "grid.points", 2)
    tgt = raw["target"]
    if "samples" in tgt:
        samples = [_float(v, f"target.samples[{i}]")
                   for i, v in enumerate(_list(tgt["samples"], "target.samples"))]
        if len(samples) < 2:
            raise _fail("target.samples", "need at least 2 samples")
        target = GridFunction.from_samples(samples)
    else:
        name = tgt["function"]
        if name not in BUILTINS:
            raise _fail("target.function", f"unknown function {name!r}; known: {', '.join(sorted(BUILTINS))}")
        target = builtin(name, points)

    tr = raw["truncation"]
    mass_tol = _float(tr["mass_tol"], "truncation.mass_tol")
    if not (0.0 < mass_tol < 1.0):
        raise _fail("truncation.mass_tol", f"must lie in (0, 1), got {mass_tol}")
    truncation = Truncation(mass_tol, _int(tr["p_max"], "truncation.p_max", 1))

    xs = [_float(x, f"moments.x[{i}]") for i, x in enumerate(_list(raw["moments"]["x"], "moments.x"))]
    for i, x in enumerate(xs):
        if not (0.0 <= x <= 1.0):
            raise _fail(f"moments.x[{i}]", f"must lie in [0, 1], got {x}")

    moment_bounds = raw["moments"]["bounds"]
    if moment_bounds not in ("printed", "corrected"):
        raise _fail("moments.bounds", f"expected 'printed' or 'corrected', got {moment_bounds!r}")

    sm = raw["summability"]
    scheme_name = sm["scheme"]
    scheme = _scheme(scheme_name)
    N = _int(sm["N"], "summability.N", 2)
    eps = [_float(e, f"summability.eps[{i}]") for i, e in enumerate(_list(sm["eps"], "summability.eps"))]
    if any(e <= 0 for e in eps):
        raise _fail("summability.eps", "every eps must be positive")

    ce = raw["counterexample"]
    m_max = _int(ce["m_max"], "counterexample.m_max", 1)
    us = [_float(u, f"counterexample.u[{i}]") for i, u in enumerate(_list(ce["u"], "counterexample.u"))]
    if any(not (0.0 < u < 1.0) for u in us):
        raise _fail("counterexample.u", "every u must lie in (0, 1)")

    return ExperimentConfig(
        r=r, n_ladder=tuple(ladder), sequence=sequence, target=target, grid_points=points,
        truncation=truncation, moment_x=tuple(xs), moment_bounds=moment_bounds, scheme_name=scheme_name, scheme=scheme,
        N=N, eps=tuple(eps), m_max=m_max, u_values=tuple(us), source=source,
    )


def load_config(
    command: str,
    path: Optional[str | Path] = None,
    *,
    mass_tol: Optional[float] = None,
    p_max: Optional[int] = None,
    grid: Optional[int] = None,
) -> ExperimentConfig:
    """Preset for ``command``, overlaid with the TOML file at ``path`` and CLI overrides.

    Raises
    ------
    ConfigError
        With the TOML line/column for syntax errors, or the dotted field name
        for invalid values.
    """
    raw = PRESETS[command]
    source = "<preset>"
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        try:
            user = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            # older parsers only embed the position in the message text
            line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
            where = f" (line {line}, column {col})" if line is not None else ""
            raise ConfigError(f"{path}: {exc}{where}") from None
        try:
            raw = _merge(raw, user)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        source = str(path)
    raw = copy.deepcopy(raw)
    if mass_tol is not None:
        raw["truncation"]["mass_tol"] = mass_tol
    if p_max is not None:
        raw["truncation"]["p_max"] = p_max
    if grid is not None:
        raw["grid"]["points"] = grid
    try:
        return build_config(raw, source)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
