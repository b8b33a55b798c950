"""Densities, matrix and deferred weighted statistical limits, power series methods.

Sequences and index sets are passed as callables on 1-based integer indices.
Callables that accept a numpy integer array and return an array of the same
shape are evaluated in bulk; anything else is wrapped element-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

__all__ = [
    "squares_indicator",
    "squares_mask",
    "as_index_function",
    "prefix_density",
    "weighted_statistical_density",
    "RowProvider",
    "IdentityMatrix",
    "CesaroMatrix",
    "GeometricRowMatrix",
    "SummabilityScheme",
    "default_scheme",
    "identity_scheme",
    "a_statistical_tail",
    "deferred_weighted_A_density",
    "deferred_weighted_mean",
    "PowerSeriesMethod",
    "UnboundedSequenceError",
    "RowTailError",
    "power_series_transform",
    "power_series_limit_estimate",
    "regularity_ratio",
    "RateConfig",
]

#: certified bound required on the discarded part of a matrix row or power series
TAIL_TOL = 1e-12


class UnboundedSequenceError(ValueError):
    """A power-series transform was requested without a finite bound on the sequence."""


class RowTailError(ValueError):
    """A matrix row could not be truncated with a certified tail below ``TAIL_TOL``."""


def squares_indicator(m: int) -> int:
    """1 if ``m`` is a perfect square, else 0."""
    if m < 1:
        raise ValueError(f"index must be a positive integer, got {m}")
    r = math.isqrt(m)
    return int(r * r == m)


def squares_mask(ms) -> np.ndarray:
    """Vectorised :func:`squares_indicator` on an integer array."""
    ms = np.asarray(ms, dtype=np.int64)
    if np.any(ms < 1):
        raise ValueError("indices must be positive integers")
    m = ms.astype(np.uint64)
    # uint64 keeps (r + 1)^2 exact for every int64 index
    r = np.floor(np.sqrt(ms.astype(float))).astype(np.uint64)
    r += ((r + 1) * (r + 1) <= m).astype(np.uint64)
    r -= (r * r > m).astype(np.uint64)
    return (r * r == m).astype(float)


squares_mask._qk_indexed = True


def as_index_function(seq) -> Callable[[np.ndarray], np.ndarray]:
    """Turn a callable or a finite array (index 1 at position 0) into a bulk evaluator."""
    if getattr(seq, "_qk_indexed", False):
        return seq
    if not callable(seq):
        arr = np.asarray(seq, dtype=float)

        def from_array(k: np.ndarray) -> np.ndarray:
            k = np.asarray(k)
            if k.size and k.max() > arr.shape[0]:
                raise IndexError(f"sequence has {arr.shape[0]} terms, index {k.max()} requested")
            return arr[k - 1]

        from_array._qk_indexed = True
        return from_array
    probe = np.arange(1, 5)
    try:
        out = np.asarray(seq(probe), dtype=float)
        ok = out.shape in (probe.shape, ())
    except Exception:
        ok = False
    if ok:
        def bulk(k):
            return np.broadcast_to(np.asarray(seq(k), dtype=float), np.shape(k))
    else:
        vf = np.vectorize(lambda k: float(seq(int(k))), otypes=[float])

        def bulk(k):
            return vf(k)
    bulk._qk_indexed = True
    return bulk


def prefix_density(membership, N: int) -> float:
    """``|{m <= N : membership(m)}| / N``."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    member = as_index_function(membership)
    count = int(np.count_nonzero(member(np.arange(1, N + 1))))
    return count / N


def weighted_statistical_density(seq, s, l: float, eps: float, N: int) -> float:
    """``|{k <= S_N : s_k |x_k - l| >= eps}| / S_N`` with ``S_N = s_1 + ... + s_N``.

    The index bound ``k <= S_N`` is taken literally; with ``s == 1`` it is
    the ordinary statistical prefix density.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    x = as_index_function(seq)
    w = as_index_function(s)
    S_N = math.fsum(w(np.arange(1, N + 1)))
    if S_N <= 0:
        raise ValueError("weight partial sum S_N is zero")
    K = math.floor(S_N)
    if K < 1:
        return 0.0
    k = np.arange(1, K + 1)
    count = int(np.count_nonzero(w(k) * np.abs(x(k) - l) >= eps))
    return count / S_N


# ---------------------------------------------------------------------------
# summability matrices


class RowProvider(Protocol):
    def row(self, n: int, tol: float) -> tuple[np.ndarray, np.ndarray, float]:
        """Columns (1-based), entries, and a bound on the omitted row mass."""


class IdentityMatrix:
    def row(self, n, tol=TAIL_TOL):
        return np.array([n]), np.array([1.0]), 0.0


class CesaroMatrix:
    """``a_{n,k} = 1/n`` for ``k <= n``."""

    def row(self, n, tol=TAIL_TOL):
        return np.arange(1, n + 1), np.full(n, 1.0 / n), 0.0


@dataclass(frozen=True)
class GeometricRowMatrix:
    """``a_{n,k} = (1 - t_n) t_n^(k-1)`` with ``t_n = ratio(n)`` in [0, 1).

    Rows have infinite support; the omitted mass after K columns is ``t_n^K``.
    """

    ratio: Callable[[int], float] = lambda n: 1.0 - 1.0 / (n + 1)
    max_columns: int = 10_000_000

    def row(self, n, tol=TAIL_TOL):
        t = self.ratio(n)
        if not (0.0 <= t < 1.0):
            raise RowTailError(f"row {n}: ratio {t!r} is not summable")
        K = 1 if t == 0.0 else max(1, math.ceil(math.log(tol) / math.log(t)))
        if K > self.max_columns:
            raise RowTailError(f"row {n}: {K} columns needed for a tail below {tol}")
        k = np.arange(1, K + 1)
        return k, (1.0 - t) * t ** (k - 1.0), t**K


def _row(matrix: RowProvider, n: int) -> tuple[np.ndarray, np.ndarray]:
    cols, vals, tail = matrix.row(n, TAIL_TOL)
    if not tail <= TAIL_TOL:
        raise RowTailError(f"row {n}: omitted mass {tail!r} exceeds {TAIL_TOL}")
    if np.any(vals < 0):
        raise ValueError(f"row {n} has negative entries")
    return cols, vals


@dataclass(frozen=True)
class SummabilityScheme:
    """Matrix ``A``, weights ``s_m``, and deferral windows ``(b_n, c_n]``."""

    matrix: RowProvider = field(default_factory=CesaroMatrix)
    weights: Callable = field(default=lambda m: np.ones(np.shape(m)))
    b: Callable[[int], int] = lambda n: n // 2
    c: Callable[[int], int] = lambda n: n
    _partial: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def window(self, n: int) -> tuple[int, int]:
        b, c = int(self.b(n)), int(self.c(n))
        if not (0 <= b < c):
            raise ValueError(f"deferral window needs 0 <= b_n < c_n, got ({b}, {c}) at n={n}")
        return b, c

    def weight_terms(self, lo: int, hi: int) -> np.ndarray:
        """``s_m`` for ``lo <= m <= hi``."""
        s = as_index_function(self.weights)(np.arange(lo, hi + 1))
        if np.any(s < 0):
            raise ValueError("weights s_m must be nonnegative")
        return s

    def S(self, n: int) -> float:
        """``S_n = sum_{m=b_n+1}^{c_n} s_m`` (cached)."""
        if n not in self._partial:
            b, c = self.window(n)
            self._partial[n] = math.fsum(self.weight_terms(b + 1, c))
        return self._partial[n]


def default_scheme() -> SummabilityScheme:
    """Cesàro rows, unit weights, windows ``(floor(n/2), n]``."""
    return SummabilityScheme()


def identity_scheme() -> SummabilityScheme:
    """Identity matrix, unit weights, windows ``(0, n]``."""
    return SummabilityScheme(matrix=IdentityMatrix(), b=lambda n: 0, c=lambda n: n)


def _matrix_of(scheme_or_matrix) -> RowProvider:
    return getattr(scheme_or_matrix, "matrix", scheme_or_matrix)


def a_statistical_tail(seq, scheme, l: float, eps: float, n: int) -> float:
    """``sum_{k : |x_k - l| >= eps} a_{n,k}`` over row ``n`` of the scheme's matrix."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    cols, vals = _row(_matrix_of(scheme), n)
    x = as_index_function(seq)(cols)
    return math.fsum(vals[np.abs(x - l) >= eps])


def deferred_weighted_A_density(membership, scheme: SummabilityScheme, n: int) -> float:
    """``(1/S_n) sum_{m=b_n+1}^{c_n} s_m sum_{k in K} a_{m,k}``."""
    b, c = scheme.window(n)
    S_n = scheme.S(n)
    if S_n <= 0:
        raise ValueError(f"S_n is zero at n={n}")
    member = as_index_function(membership)
    s = scheme.weight_terms(b + 1, c)
    rows = [(s_m, *_row(scheme.matrix, m)) for m, s_m in zip(range(b + 1, c + 1), s) if s_m != 0.0]
    top = max((int(cols.max()) for _, cols, _ in rows), default=0)
    mask = member(np.arange(1, top + 1)) != 0
    terms = [s_m * math.fsum(vals[mask[cols - 1]]) for s_m, cols, vals in rows]
    return math.fsum(terms) / S_n


def deferred_weighted_mean(seq, scheme: SummabilityScheme, n: int) -> float:
    """``rho_n = (1/S_n) sum_{m=b_n+1}^{c_n} s_m x_m``."""
    b, c = scheme.window(n)
    S_n = scheme.S(n)
    if S_n <= 0:
        raise ValueError(f"S_n is zero at n={n}")
    m = np.arange(b + 1, c + 1)
    return math.fsum(scheme.weight_terms(b + 1, c) * as_index_function(seq)(m)) / S_n


# ---------------------------------------------------------------------------
# power series methods


@dataclass(frozen=True)
class PowerSeriesMethod:
    """``p(u) = sum_{j>=1} p_j u^(j-1)`` with radius ``R`` (``math.inf`` if unbounded).

    Coefficients are given in log form, ``log_coeff(j) = log p_j`` (``-inf``
    for ``p_j = 0``), so that methods with ``R = inf`` stay finite at large
    ``u``.  ``log_p`` is an optional closed form for ``log p(u)``; without
    it the series is summed and its tail bounded by a ratio test.
    """

    log_coeff: Callable[[np.ndarray], np.ndarray]
    R: float
    log_p: Optional[Callable[[float], float]] = None
    name: str = "power-series"

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise ValueError(f"radius must be positive, got {self.R!r}")
        head = np.asarray(self.log_coeff(np.arange(1, 3)), dtype=float)
        if not np.isfinite(head[0]):
            raise ValueError("p_1 must be positive")

    @classmethod
    def abel(cls) -> "PowerSeriesMethod":
        """``p_j = 1``: ``p(u) = 1/(1-u)``, ``R = 1``."""
        return cls(lambda j: np.zeros(np.shape(j)), 1.0, lambda u: -math.log1p(-u), "abel")

    @classmethod
    def borel(cls) -> "PowerSeriesMethod":
        """``p_j = 1/(j-1)!``: ``p(u) = e^u``, ``R = inf``."""
        from scipy.special import gammaln

        return cls(lambda j: -gammaln(np.asarray(j, dtype=float)), math.inf, lambda u: u, "borel")

    @property
    def ladder(self) -> list[float]:
        """``R(1 - 2^-k)`` for bounded ``R``, ``2^k`` otherwise, ``k = 4..14``."""
        if math.isinf(self.R):
            return [2.0**k for k in range(4, 15)]
        return [self.R * (1.0 - 2.0**-k) for k in range(4, 15)]

    def check_u(self, u: float) -> None:
        if not (0.0 < u < self.R):
            raise ValueError(f"u={u!r} lies outside (0, R={self.R})")


def _log_terms(method: PowerSeriesMethod, j: np.ndarray, log_u: float) -> np.ndarray:
    return np.asarray(method.log_coeff(j), dtype=float) + (j - 1.0) * log_u


def _log_p(method: PowerSeriesMethod, u: float, block: int = 4096, cap: int = 100_000_000) -> float:
    if method.log_p is not None:
        return float(method.log_p(u))
    return _transform_sums(method, None, u, 0.0, block, cap)[0]


def _transform_sums(method, x, u, bound, block, cap):
    """Scaled partial sums of ``p_j u^(j-1)`` and ``x_j p_j u^(j-1)``.

    Returns ``(log partial p, weighted sum / partial p)``.
    """
    log_u = math.log(u)
    closed = method.log_p(u) if method.log_p is not None else None
    scale = -math.inf
    sp = sx = 0.0
    start = 1
    while True:
        j = np.arange(start, start + block)
        lt = _log_terms(method, j, log_u)
        top = float(np.max(lt))
        if top > scale:
            factor = math.exp(scale - top) if np.isfinite(scale) else 0.0
            sp *= factor
            sx *= factor
            scale = top
        e = np.exp(lt - scale)
        sp += math.fsum(e)
        if x is not None:
            sx += math.fsum(e * x(j))
        start += block
        log_partial = scale + math.log(sp)
        # ratio-test bound once terms decay; the closed form alone stalls on
        # rounding in log p(u) when p(u) is huge
        diffs = np.diff(lt[block // 2:])
        ratio = math.exp(float(np.max(diffs))) if diffs.size else 1.0
        if ratio >= 1.0:
            tail_frac = math.inf
        else:
            tail_frac = math.exp(float(lt[-1]) - log_partial) * ratio / (1.0 - ratio)
        if closed is not None:
            tail_frac = min(tail_frac, max(0.0, -math.expm1(log_partial - closed)))
        if max(bound, 1.0) * tail_frac <= TAIL_TOL:
            return log_partial, (sx / sp if x is not None else 0.0)
        if start > cap:
            raise ValueError(f"power series at u={u} did not converge within {cap} terms")


def power_series_transform(seq, method: PowerSeriesMethod, u: float, bound: Optional[float] = 1.0) -> float:
    """``(1/p(u)) sum_j x_j p_j u^(j-1)`` for a sequence with ``|x_j| <= bound``.

    The series is cut once ``bound * (omitted mass of p) / p(u) <= 1e-12``.

    Raises
    ------
    UnboundedSequenceError
        If ``bound`` is ``None`` or not finite.
    ValueError
        If ``u`` lies outside ``(0, R)``.
    """
    if bound is None or not math.isfinite(bound):
        raise UnboundedSequenceError("power-series transform needs a finite bound on |x_j|")
    method.check_u(u)
    x = as_index_function(seq)
    log_partial, mean = _transform_sums(method, x, u, float(bound), 4096, 100_000_000)
    if method.log_p is not None:
        # normalise by the full p(u), not by the captured part
        return mean * math.exp(log_partial - method.log_p(u))
    return mean


def power_series_limit_estimate(
    seq, method: PowerSeriesMethod, bound: Optional[float] = 1.0
) -> tuple[float, list[tuple[float, float]]]:
    """Transform values along ``method.ladder``; the last value is the estimate.

    This is a trend witness, not an extrapolated limit.
    """
    trend = [(u, power_series_transform(seq, method, u, bound)) for u in method.ladder]
    return trend[-1][1], trend


def regularity_ratio(method: PowerSeriesMethod, j: int, u: float) -> float:
    """``p_j u^(j-1) / p(u)``; tends to 0 as ``u -> R-`` for a regular method."""
    if j < 1:
        raise ValueError(f"j must be a positive integer, got {j}")
    method.check_u(u)
    lt = float(_log_terms(method, np.array([j]), math.log(u))[0])
    return math.exp(lt - _log_p(method, u))


@dataclass(frozen=True)
class RateConfig:
    """Rate scale ``alpha_n`` (positive, nonincreasing) and comparison ``Omega(u) > 0``."""

    alpha: Callable[[int], float] = lambda n: 1.0 / n
    Omega: Callable[[float], float] = lambda u: 1.0 - u

    def check(self, N: int) -> None:
        a = np.array([self.alpha(n) for n in range(1, N + 1)], dtype=float)
        if np.any(a <= 0) or np.any(np.diff(a) > 0):
            raise ValueError("alpha_n must be positive and nonincreasing")

    def scaled(self, seq) -> Callable[[np.ndarray], np.ndarray]:
        """``x_n / alpha_n``: ``x = o(alpha_n)`` in a summability sense iff this tends to 0."""
        x = as_index_function(seq)
        alpha = as_index_function(self.alpha)

        def ratio(k):
            return x(k) / alpha(k)

        ratio._qk_indexed = True
        return ratio
