"""Positive linear operators built on multivariate (q-)Lagrange polynomials.

All four operators share one shape.  For a point ``x`` and coefficients
``beta^(1..r)`` the weight of a multi-index ``(l_1, ..., l_r)`` factorises as
``prod_k w_k(l_k)`` with

    w_k(l) = (x beta_k; q)_n (q^n; q)_l (x beta_k)^l / (q; q)_l

(q-case) or ``(1 - x beta_k)^n (n)_l (x beta_k)^l / l!`` (classical case).
Each ``w_k`` is a probability distribution in ``l``, and the operator value
is ``sum w_1(l_1) ... w_r(l_r) F(l_r)`` where only the node value ``F``
depends on the target function:

* ``K``  (q-integral):  ``F(l) = [n+l-1]_q q^-l int_{a_l}^{b_l} f d_q^R s``
* ``S``  (q-sampling):  ``F(l) = f([l]_q / [n+l-1]_q)``
* ``E``  (integral):    ``F(l) = (n+l-1) int_{l/(n+l-1)}^{(l+1)/(n+l-1)} f ds``
* ``L``  (sampling):    ``F(l) = f(l / (n+l-1))``

The outer series is truncated by total degree ``p = l_1 + ... + l_r``.
Since ``F`` only sees ``l_r``, the first ``r-1`` distributions collapse into
one convolution ``H``, and the partial sum up to degree ``P`` is
``sum_{l<=P} w_r(l) F(l) cumsum(H)[P-l]``.  Weights are positive with unit
total, so ``sup|f| * (1 - captured_mass)`` bounds the truncation error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .qcore import as_vectorized, check_q, normalized_q_sum, q_integers, q_mean
from .summability import squares_indicator

__all__ = [
    "OperatorSpec",
    "Truncation",
    "EvalResult",
    "SequenceSpec",
    "TruncationWarning",
    "node_functional_K",
    "evaluate_K",
    "evaluate_K_grid",
    "evaluate_K_polynomial",
    "evaluate_S",
    "evaluate_S_grid",
    "evaluate_classical",
    "evaluate_classical_grid",
    "evaluate_P_auxiliary",
    "evaluate_enumerated",
    "reciprocal_q",
    "reciprocal_beta",
    "sqrt_q",
]

#: tolerance on the geometric-node truncation inside each K node functional
NODE_TOL = 1e-14

_SUP_PROBE = np.linspace(0.0, 1.0, 1025)
_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(24)


class TruncationWarning(RuntimeWarning):
    """The outer series hit ``p_max`` before capturing ``1 - mass_tol`` of the mass."""


@dataclass(frozen=True)
class OperatorSpec:
    """Parameters ``(n, q, beta^(1), ..., beta^(r))`` of one operator instance."""

    n: int
    q: float
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"operator index n must be an integer >= 2, got {self.n!r}")
        check_q(self.q)
        if not self.betas:
            raise ValueError("at least one beta sequence is required")
        for k, b in enumerate(self.betas, 1):
            if not (0.0 < b < 1.0):
                raise ValueError(f"beta^({k}) must lie in (0, 1), got {b!r}")

    @property
    def r(self) -> int:
        return len(self.betas)

    @property
    def beta_r(self) -> float:
        return self.betas[-1]


@dataclass(frozen=True)
class Truncation:
    mass_tol: float = 1e-10
    p_max: int = 4096

    def __post_init__(self) -> None:
        if not (0.0 < self.mass_tol < 1.0):
            raise ValueError(f"mass_tol must lie in (0, 1), got {self.mass_tol!r}")
        if int(self.p_max) != self.p_max or self.p_max < 1:
            raise ValueError(f"p_max must be a positive integer, got {self.p_max!r}")


@dataclass(frozen=True)
class EvalResult:
    value: float
    captured_mass: float
    p_used: int
    tail_bound: float
    reached_target: bool = True


def reciprocal_q(n: int) -> float:
    """``q_n = 1 - 1/(n+1)``; ``q_n^n -> 1/e``."""
    return 1.0 - 1.0 / (n + 1)


def sqrt_q(n: int) -> float:
    """``q_n = 1 - 1/sqrt(n+1)``; ``q_n^n -> 0``."""
    return 1.0 - 1.0 / math.sqrt(n + 1)


def reciprocal_beta(n: int) -> float:
    """``beta_n = n/(n+1)``."""
    return n / (n + 1.0)


@dataclass(frozen=True)
class SequenceSpec:
    """Rules producing ``q_n`` and ``beta_n^(k)`` along the operator index.

    ``limit`` records ``a = lim q_n^n``; it must lie in [0, 1).
    """

    q_rule: Callable[[int], float] = reciprocal_q
    beta_rules: tuple[Callable[[int], float], ...] = (reciprocal_beta, reciprocal_beta)
    limit: float = math.exp(-1.0)

    def __post_init__(self) -> None:
        if not (0.0 <= self.limit < 1.0):
            raise ValueError(f"the limit of q_n^n must lie in [0, 1), got {self.limit!r}")
        if not self.beta_rules:
            raise ValueError("at least one beta rule is required")

    @property
    def r(self) -> int:
        return len(self.beta_rules)

    def at(self, n: int) -> OperatorSpec:
        return OperatorSpec(n=n, q=self.q_rule(n), betas=tuple(b(n) for b in self.beta_rules))

    def power_gap(self, n: int) -> float:
        """``|q_n^n - a|``, the distance from the standing limit at index ``n``."""
        return abs(self.q_rule(n) ** n - self.limit)


# ---------------------------------------------------------------------------
# per-variable weight distributions


def _q_weights(n: int, q: float, xb: float, length: int, qint: np.ndarray) -> np.ndarray:
    w = np.zeros(length)
    if xb == 0.0:
        w[0] = 1.0
        return w
    log0 = np.log1p(-xb * q ** np.arange(n, dtype=float)).sum()
    l = np.arange(1, length)
    steps = math.log(xb) + np.log(qint[n + l - 1]) - np.log(qint[l])
    return np.exp(log0 + np.concatenate(([0.0], np.cumsum(steps))))


def _classical_weights(n: int, xb: float, length: int) -> np.ndarray:
    w = np.zeros(length)
    if xb == 0.0:
        w[0] = 1.0
        return w
    l = np.arange(length, dtype=float)
    logw = n * math.log1p(-xb) + gammaln(n + l) - gammaln(n) - gammaln(l + 1) + l * math.log(xb)
    return np.exp(logw)


# ---------------------------------------------------------------------------
# node value tables


class _NodeTable:
    """Lazily extended table ``F(0), F(1), ...`` of node values."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], error: float = 0.0):
        self.fn = fn
        self.error = error
        self.values = np.empty(0)

    def upto(self, count: int) -> np.ndarray:
        have = self.values.shape[0]
        if count > have:
            grow = max(count, 2 * have)
            extra = self.fn(np.arange(have, grow))
            self.values = np.concatenate((self.values, extra))
        return self.values[:count]


def _estimate_sup_osc(g: Callable) -> tuple[float, float]:
    vals = g(_SUP_PROBE)
    if not np.all(np.isfinite(vals)):
        raise ValueError("target function returned a non-finite value on [0, 1]")
    return float(np.max(np.abs(vals))), float(vals.max() - vals.min())


def _k_nodes(n: int, q: float) -> Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """``l -> (a_l, width_l)`` with ``a_l = [l]_q/[n+l-1]_q`` and ``width_l = q^l/[n+l-1]_q``."""
    def nodes(l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        qint = q_integers(q, n + int(l.max()) + 1) if l.size else np.zeros(1)
        denom = qint[n + l - 1]
        return qint[l] / denom, np.exp(l * math.log(q)) / denom
    return nodes


def _k_table_numeric(spec: OperatorSpec, g: Callable, osc: float) -> _NodeTable:
    # node functional = normalised geometric mean; error <= osc * q^J
    n, q = spec.n, spec.q
    if osc == 0.0:
        n_nodes = 1
    else:
        n_nodes = max(1, math.ceil(math.log(NODE_TOL / osc) / math.log(q)))
    nodes = _k_nodes(n, q)

    def fn(l: np.ndarray) -> np.ndarray:
        a, w = nodes(l)
        return normalized_q_sum(g, a, w, q, n_nodes)

    return _NodeTable(fn, error=osc * q**n_nodes)


def _k_table_polynomial(spec: OperatorSpec, coeffs: Sequence[float]) -> _NodeTable:
    n, q = spec.n, spec.q
    nodes = _k_nodes(n, q)
    qint = q_integers(q, len(coeffs) + 1)

    def fn(l: np.ndarray) -> np.ndarray:
        a, w = nodes(l)
        out = np.zeros(l.shape[0])
        for m, c in enumerate(coeffs):
            if c == 0.0:
                continue
            # width * [n+l-1]_q * q^-l == 1 absorbs the prefactor
            out += c * sum(math.comb(m, k) * a ** (m - k) * w**k / qint[k + 1] for k in range(m + 1))
        return out

    return _NodeTable(fn)


def _s_table(spec: OperatorSpec, g: Callable) -> _NodeTable:
    nodes = _k_nodes(spec.n, spec.q)
    return _NodeTable(lambda l: np.asarray(g(nodes(l)[0]), dtype=float).copy())


def _classical_table(kind: str, n: int, g: Callable) -> _NodeTable:
    if kind == "L":
        return _NodeTable(lambda l: np.asarray(g(l / (n + l - 1.0)), dtype=float).copy())

    def fn(l: np.ndarray) -> np.ndarray:
        a = (l / (n + l - 1.0))[:, None]
        w = (1.0 / (n + l - 1.0))[:, None]
        vals = g(a + w * (_GAUSS_T[None, :] + 1.0) / 2.0)
        return (vals @ _GAUSS_W) / 2.0

    return _NodeTable(fn)


# ---------------------------------------------------------------------------
# the truncated outer series


def _series(
    weights: Callable[[float, int], np.ndarray],
    betas: Sequence[float],
    x: float,
    trunc: Truncation,
    table: _NodeTable,
    sup_f: float,
) -> EvalResult:
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    target = 1.0 - trunc.mass_tol
    length = min(64, trunc.p_max + 1)
    while True:
        ws = [weights(x * b, length) for b in betas]
        h = ws[0] if len(ws) > 1 else np.eye(1, length)[0]
        for w in ws[1:-1]:
            h = np.convolve(h, w)[:length]
        wr = ws[-1]
        ch = np.cumsum(h)
        if float(np.dot(wr, ch[::-1])) >= target or length == trunc.p_max + 1:
            break
        length = min(2 * length, trunc.p_max + 1)

    def mass_at(p: int) -> float:
        return float(np.dot(wr[: p + 1], ch[p::-1]))

    if mass_at(length - 1) >= target:
        lo, hi = 0, length - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if mass_at(mid) >= target:
                hi = mid
            else:
                lo = mid + 1
        p_used, reached = lo, True
    else:
        p_used, reached = length - 1, False

    weight = wr[: p_used + 1] * ch[p_used::-1]
    nodes = table.upto(p_used + 1)
    value = math.fsum(weight * nodes)
    mass = math.fsum(weight)
    tail = sup_f * max(0.0, 1.0 - mass) + mass * table.error
    if not reached:
        warnings.warn(
            f"outer series stopped at p_max={trunc.p_max} with captured mass {mass:.3e}",
            TruncationWarning,
            stacklevel=3,
        )
    return EvalResult(value, mass, p_used, tail, reached)


def _q_weight_fn(spec: OperatorSpec) -> Callable[[float, int], np.ndarray]:
    cache: dict[int, np.ndarray] = {}

    def weights(xb: float, length: int) -> np.ndarray:
        if length not in cache:
            cache[length] = q_integers(spec.q, spec.n + length)
        return _q_weights(spec.n, spec.q, xb, length, cache[length])

    return weights


def _grid(xs) -> np.ndarray:
    return np.atleast_1d(np.asarray(xs, dtype=float))


# ---------------------------------------------------------------------------
# public surface


def node_functional_K(spec: OperatorSpec, l_r: int, f: Callable, tol: float = NODE_TOL) -> float:
    """``[n+l-1]_q q^-l int_{[l]_q/[n+l-1]_q}^{[l+1]_q/[n+l-1]_q} f d_q^R s``.

    The prefactor and the interval width ``q^l/[n+l-1]_q`` cancel exactly,
    so this is the geometric-node mean of ``f`` on the node interval, and
    ``f == 1`` gives exactly 1.
    """
    if l_r < 0:
        raise ValueError(f"l_r must be nonnegative, got {l_r}")
    a, w = _k_nodes(spec.n, spec.q)(np.array([l_r]))
    return q_mean(f, float(a[0]), float(w[0]), spec.q, tol)


def evaluate_K_grid(
    spec: OperatorSpec,
    f: Callable,
    xs,
    trunc: Truncation = Truncation(),
    *,
    exact_polynomial: bool = False,
) -> list[EvalResult]:
    """``K(f; x)`` for every ``x`` in ``xs``, sharing one node table.

    With ``exact_polynomial=True`` and a target carrying ``poly``
    coefficients, node integrals use the monomial closed form instead of the
    geometric-node sum.
    """
    g = as_vectorized(f)
    sup_f, osc = _estimate_sup_osc(g)
    poly = getattr(f, "poly", None)
    if exact_polynomial and poly is not None:
        table = _k_table_polynomial(spec, poly)
    else:
        table = _k_table_numeric(spec, g, osc)
    weights = _q_weight_fn(spec)
    return [_series(weights, spec.betas, float(x), trunc, table, sup_f) for x in _grid(xs)]


def evaluate_K(spec: OperatorSpec, f: Callable, x: float, trunc: Truncation = Truncation()) -> EvalResult:
    """The q-integral operator ``K_{n,q}^{beta^(1..r)}(f; x)``."""
    return evaluate_K_grid(spec, f, [x], trunc)[0]


def evaluate_K_polynomial(
    spec: OperatorSpec, coeffs: Sequence[float], xs, trunc: Truncation = Truncation()
) -> list[EvalResult]:
    """``K(sum_m c_m s^m; x)`` with node integrals in closed form."""
    coeffs = tuple(float(c) for c in coeffs)
    sup_f = float(sum(abs(c) for c in coeffs))
    table = _k_table_polynomial(spec, coeffs)
    weights = _q_weight_fn(spec)
    return [_series(weights, spec.betas, float(x), trunc, table, sup_f) for x in _grid(xs)]


def evaluate_S_grid(
    spec: OperatorSpec, f: Callable, xs, trunc: Truncation = Truncation()
) -> list[EvalResult]:
    g = as_vectorized(f)
    sup_f, _ = _estimate_sup_osc(g)
    table = _s_table(spec, g)
    weights = _q_weight_fn(spec)
    return [_series(weights, spec.betas, float(x), trunc, table, sup_f) for x in _grid(xs)]


def evaluate_S(spec: OperatorSpec, f: Callable, x: float, trunc: Truncation = Truncation()) -> EvalResult:
    """The q-sampling operator ``S_{n,q}^{beta^(1..r)}(f; x)``."""
    return evaluate_S_grid(spec, f, [x], trunc)[0]


def evaluate_classical_grid(
    kind: str,
    r: int,
    n: int,
    betas: Sequence[float],
    f: Callable,
    xs,
    trunc: Truncation = Truncation(),
) -> list[EvalResult]:
    if kind not in ("L", "E"):
        raise ValueError(f"kind must be 'L' or 'E', got {kind!r}")
    if len(betas) != r:
        raise ValueError(f"expected {r} betas, got {len(betas)}")
    # reuse the q-spec validation for n and betas; q plays no role here
    OperatorSpec(n=n, q=0.5, betas=tuple(betas))
    g = as_vectorized(f)
    sup_f, _ = _estimate_sup_osc(g)
    table = _classical_table(kind, n, g)
    weights = lambda xb, length: _classical_weights(n, xb, length)  # noqa: E731
    return [_series(weights, betas, float(x), trunc, table, sup_f) for x in _grid(xs)]


def evaluate_classical(
    kind: str,
    r: int,
    n: int,
    betas: Sequence[float],
    f: Callable,
    x: float,
    trunc: Truncation = Truncation(),
) -> EvalResult:
    """The q-free operators: ``kind='L'`` (sampling) or ``kind='E'`` (integral)."""
    return evaluate_classical_grid(kind, r, n, betas, f, [x], trunc)[0]


def evaluate_P_auxiliary(
    spec: OperatorSpec, m: int, f: Callable, x: float, trunc: Truncation = Truncation()
) -> EvalResult:
    """``(1 + x_m) K(f; x)`` where ``x_m`` flags perfect squares."""
    base = evaluate_K(spec, f, x, trunc)
    factor = 1 + squares_indicator(m)
    return EvalResult(
        factor * base.value, base.captured_mass, base.p_used, factor * base.tail_bound,
        base.reached_target,
    )


# ---------------------------------------------------------------------------
# oracle


def evaluate_enumerated(
    spec: OperatorSpec,
    node_value: Callable[[int], float],
    x: float,
    p_max: int,
) -> float:
    """Oracle: the defining double sum over every composition, degrees ``0..p_max``.

    Coefficients come straight from q-Pochhammer products; ``node_value(l_r)``
    supplies the target-dependent factor.
    """
    from .lagrange import compositions
    from .qcore import q_pochhammer

    n, q = spec.n, spec.q
    qn = q**n
    pref = math.prod(q_pochhammer(x * b, q, n) for b in spec.betas)
    total = 0.0
    for p in range(p_max + 1):
        inner = 0.0
        for ls in compositions(p, spec.r):
            coef = 1.0
            for lk, b in zip(ls, spec.betas):
                coef *= q_pochhammer(qn, q, lk) * b**lk / q_pochhammer(q, q, lk)
            inner += coef * node_value(ls[-1])
        total += inner * x**p
    return pref * total
