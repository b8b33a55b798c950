"""The four experiment families, each producing CSV rows and a text report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..gridfunction import GridFunction, builtin
from ..moments import moment_report, rate_bound
from ..operators import OperatorSpec, evaluate_K_grid
from ..summability import (
    PowerSeriesMethod,
    a_statistical_tail,
    deferred_weighted_A_density,
    power_series_transform,
    squares_indicator,
    squares_mask,
)
from .config import ConfigError, ExperimentConfig

__all__ = [
    "COLUMNS",
    "CommandResult",
    "cmd_verify_moments",
    "cmd_converge",
    "cmd_counterexample",
    "cmd_summability",
    "fmt",
]

COLUMNS = {
    "verify-moments": ("n", "x", "m0", "m1", "m2", "bound1", "bound2", "central2", "gamma"),
    "converge": ("n", "q", "beta", "error", "rate_bound", "ratio", "slack"),
    "counterexample": ("m", "indicator", "error", "slack"),
    "summability": ("function", "eps", "N", "deferred_density", "a_tail"),
}


def fmt(value) -> str:
    """17 significant digits for floats; integers and strings verbatim."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


@dataclass
class CommandResult:
    command: str
    rows: list[tuple] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    failures: int = 0

    @property
    def columns(self) -> tuple[str, ...]:
        return COLUMNS[self.command]

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def check(self, label: str, lhs: float, rhs: float, slack: float) -> bool:
        ok = bool(lhs <= rhs + slack)
        self.failures += not ok
        self.lines.append(
            f"{'PASS' if ok else 'FAIL'} {label}: lhs={fmt(lhs)} rhs={fmt(rhs)} slack={fmt(slack)}"
        )
        return ok

    def flag(self, label: str, ok: bool, detail: str) -> bool:
        self.failures += not ok
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        return ok

    def note(self, text: str) -> None:
        self.lines.append(f"INFO {text}")


def _spec(cfg: ExperimentConfig, n: int) -> OperatorSpec:
    """Operator at index ``n``; index 1 reuses the ``n = 2`` operator."""
    try:
        return cfg.sequence.at(max(n, 2))
    except ValueError as exc:
        raise ConfigError(f"operator rules at n={n}: {exc}") from None


def _sup_error(spec: OperatorSpec, f: GridFunction, cfg: ExperimentConfig, factor: float = 1.0):
    """``max_x |factor*K(f;x) - f(x)|`` over the grid, with the largest tail bound."""
    results = evaluate_K_grid(spec, f, f.grid, cfg.truncation, exact_polynomial=True)
    values = np.array([res.value for res in results])
    error = float(np.max(np.abs(factor * values - f.values)))
    slack = factor * max(res.tail_bound for res in results)
    return error, slack


def _header(result: CommandResult, cfg: ExperimentConfig) -> None:
    result.note(
        f"{result.command}: config={cfg.source} r={cfg.r} grid={cfg.grid_points} "
        f"mass_tol={fmt(cfg.truncation.mass_tol)} p_max={cfg.truncation.p_max}"
    )


def cmd_verify_moments(cfg: ExperimentConfig) -> CommandResult:
    """Moments of orders 0-2 against their bounds at every ``(n, x)`` cell."""
    result = CommandResult("verify-moments")
    _header(result, cfg)
    result.note(f"first/second moment bounds: {cfg.moment_bounds}")
    for n in cfg.n_ladder:
        spec = _spec(cfg, n)
        for rep in moment_report(spec, cfg.moment_x, cfg.truncation, bounds=cfg.moment_bounds):
            result.rows.append(
                (n, rep.x, rep.moment0, rep.moment1, rep.moment2,
                 rep.bound1, rep.bound2, rep.central2, rep.gamma)
            )
            for name, (lhs, rhs, slack) in rep.checks().items():
                result.check(f"n={n} x={fmt(rep.x)} {name}", lhs, rhs, slack)
    return result


def cmd_converge(cfg: ExperimentConfig) -> CommandResult:
    """Sup-grid error of ``K_{n,q_n}(f)`` against ``2 omega_f(sqrt(gamma))`` along the ladder."""
    result = CommandResult("converge")
    _header(result, cfg)
    f = cfg.target
    errors = []
    for n in cfg.n_ladder:
        spec = _spec(cfg, n)
        try:
            bound = rate_bound(f, n, spec.q, spec.beta_r)
        except ValueError as exc:
            raise ConfigError(f"grid.points: {exc}") from None
        error, slack = _sup_error(spec, f, cfg)
        ratio = error / bound if bound > 0 else (0.0 if error <= slack else math.inf)
        result.rows.append((n, spec.q, spec.beta_r, error, bound, ratio, slack))
        result.check(f"n={n} error <= rate_bound", error, bound, slack)
        errors.append(error)
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    result.note(f"target={f.name} error column strictly decreasing: {decreasing}")
    return result


def cmd_counterexample(cfg: ExperimentConfig) -> CommandResult:
    """Auxiliary operator ``(1 + x_m) K_m`` on a constant target.

    Its classical error equals ``|c|`` at every perfect square, yet the Abel
    transform of the error sequence tends to 0. Past ``m_max`` the sequence
    continues as ``|c| x_m``, the value forced by normalization.
    """
    f = cfg.target
    if not f.is_constant or f.values[0] == 0.0:
        raise ConfigError("target: the counterexample needs a nonzero constant target (e.g. 'one')")
    c = abs(float(f.values[0]))
    result = CommandResult("counterexample")
    _header(result, cfg)

    errors = []
    for m in range(1, cfg.m_max + 1):
        ind = squares_indicator(m)
        error, slack = _sup_error(_spec(cfg, m), f, cfg, factor=1.0 + ind)
        result.rows.append((m, ind, error, slack))
        errors.append(error)
        if ind:
            result.flag(f"m={m} error at square", error == c, f"error={fmt(error)} expected={fmt(c)}")
        else:
            result.check(f"m={m} error off squares", error, 0.0, slack + 1e-12)

    prefix = np.maximum.accumulate(errors)
    result.flag(
        "prefix max equals |c| at every N", bool(np.all(prefix == c)),
        f"min prefix max={fmt(prefix.min())} max prefix max={fmt(prefix.max())}",
    )

    computed = np.array(errors)

    def sequence(k: np.ndarray) -> np.ndarray:
        k = np.asarray(k)
        out = c * squares_mask(k)
        inside = k <= cfg.m_max
        out[inside] = computed[k[inside] - 1]
        return out

    sequence._qk_indexed = True
    abel = PowerSeriesMethod.abel()
    bound = max(c, float(computed.max()))
    trend = [power_series_transform(sequence, abel, u, bound) for u in cfg.u_values]
    indicator = [power_series_transform(squares_mask, abel, u) for u in cfg.u_values]
    for u, t, s in zip(cfg.u_values, trend, indicator):
        result.note(f"u={fmt(u)} abel(error)={fmt(t)} abel(indicator)={fmt(s)}")
    result.flag(
        "abel transform strictly decreasing along u",
        all(b < a for a, b in zip(trend, trend[1:])),
        " > ".join(fmt(t) for t in trend),
    )
    return result


def _summability_targets(cfg: ExperimentConfig) -> list[GridFunction]:
    fs = [builtin("identity", cfg.grid_points), builtin("square", cfg.grid_points)]
    if cfg.target.name not in {g.name for g in fs}:
        fs.append(cfg.target)
    return fs


def error_sequence(cfg: ExperimentConfig, f: GridFunction, N: int) -> np.ndarray:
    """``e_n = max_x |K_{n,q_n}(f;x) - f(x)|`` for ``n = 1..N``."""
    return np.array([_sup_error(_spec(cfg, n), f, cfg)[0] for n in range(1, N + 1)])


def cmd_summability(cfg: ExperimentConfig) -> CommandResult:
    """Deferred weighted A-densities of ``{n : e_n >= eps}`` on prefixes ``N/4, N/2, N``."""
    result = CommandResult("summability")
    _header(result, cfg)
    result.note(f"scheme={cfg.scheme_name}")
    prefixes = sorted({max(2, cfg.N // 4), max(2, cfg.N // 2), cfg.N})
    for f in _summability_targets(cfg):
        errors = error_sequence(cfg, f, cfg.N)
        for eps in cfg.eps:
            member = (errors >= eps).astype(float)
            densities = []
            for N in prefixes:
                density = deferred_weighted_A_density(member, cfg.scheme, N)
                tail = a_statistical_tail(errors, cfg.scheme, 0.0, eps, N)
                result.rows.append((f.name, eps, N, density, tail))
                densities.append(density)
            result.flag(
                f"{f.name} eps={fmt(eps)} density nonincreasing over N={prefixes}",
                all(b <= a for a, b in zip(densities, densities[1:])),
                " >= ".join(fmt(d) for d in densities),
            )
        result.note(f"{f.name} error at N={cfg.N}: {fmt(errors[-1])}")
    return result


COMMANDS = {
    "verify-moments": cmd_verify_moments,
    "converge": cmd_converge,
    "counterexample": cmd_counterexample,
    "summability": cmd_summability,
}
