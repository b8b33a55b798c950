"""Scalar q-calculus primitives.

q-integers, q-Pochhammer symbols and the Riemann-type q-integral

    int_a^b f(s) d_q^R s = (1 - q)(b - a) * sum_{j>=0} f(a + (b - a) q^j) q^j

with the positive orientation (b - a), so that a positive integrand has a
positive integral and ``int_0^1 1 d_q^R s == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "QIntegralBounds",
    "check_q",
    "q_integer",
    "q_integers",
    "q_pochhammer",
    "q_mean",
    "q_riemann_integral",
    "q_riemann_monomial",
    "as_vectorized",
]

#: hard cap on the number of geometric nodes drawn by the q-integral
MAX_NODES = 5_000_000

_BLOCK = 64


def check_q(q: float) -> float:
    """Return ``q`` as a float, rejecting anything outside the open interval (0, 1)."""
    q = float(q)
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie strictly inside (0, 1), got {q!r}")
    return q


@dataclass(frozen=True)
class QIntegralBounds:
    """Integration endpoints ``0 <= alpha < beta``."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha < self.beta):
            raise ValueError(
                f"q-integral bounds need 0 <= alpha < beta, got ({self.alpha}, {self.beta})"
            )

    @property
    def width(self) -> float:
        return self.beta - self.alpha


def q_integers(q: float, count: int) -> np.ndarray:
    """Table ``[0]_q, [1]_q, ..., [count-1]_q``.

    Built with the recurrence ``[k+1]_q = 1 + q [k]_q`` rather than the
    closed form ``(1 - q^k)/(1 - q)``, which loses digits to cancellation
    when q is close to 1.
    """
    q = check_q(q)
    out = np.zeros(max(int(count), 0))
    if count > 1:
        out[1:] = lfilter([1.0], [1.0, -q], np.ones(count - 1))
    return out


def q_integer(n: int, q: float) -> float:
    """The q-integer ``[n]_q = 1 + q + ... + q^(n-1)``; zero for ``n == 0``."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return float(q_integers(q, n + 1)[n])


def q_pochhammer(rho: float, q: float, n: int) -> float:
    """The q-Pochhammer symbol ``(rho; q)_n = prod_{i<n} (1 - rho q^i)``."""
    q = check_q(q)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    prod = 1.0
    for i in range(n):
        prod *= 1.0 - rho * q**i
    return prod


def as_vectorized(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap ``f`` so that it maps float arrays to float arrays of the same shape.

    Numpy-aware callables are used as they are; scalar-only callables go
    through :func:`numpy.vectorize`.
    """
    if getattr(f, "_qk_vectorized", False):
        return f
    probe = np.array([0.0, 0.5, 1.0])
    try:
        out = np.asarray(f(probe), dtype=float)
        ok = out.shape in (probe.shape, ())
    except Exception:
        ok = False
    if ok:
        def g(s):
            return np.broadcast_to(np.asarray(f(s), dtype=float), np.shape(s))
    else:
        vf = np.vectorize(lambda s: float(f(float(s))), otypes=[float])

        def g(s):
            return vf(s)
    g._qk_vectorized = True
    return g


def normalized_q_sum(
    f: Callable, alpha: np.ndarray, width: np.ndarray, q: float, n_nodes: int
) -> np.ndarray:
    """Geometric-node mean of ``f`` over ``[alpha, alpha + width]``, row-wise.

    Evaluates ``sum_j q^j f(alpha + width q^j) / sum_j q^j`` over the first
    ``n_nodes`` nodes.  The missing geometric mass is spread proportionally,
    so constants come back exactly and the error against the full series is
    at most ``q^n_nodes * osc(f)`` on the interval.  ``alpha`` and ``width``
    are 1-d arrays of equal length; one value is returned per row.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    width = np.atleast_1d(np.asarray(width, dtype=float))
    qj = q ** np.arange(n_nodes, dtype=float)
    wsum = qj.sum()
    out = np.empty(alpha.shape[0])
    rows = max(1, 2_000_000 // max(n_nodes, 1))
    for start in range(0, alpha.shape[0], rows):
        a = alpha[start:start + rows, None]
        w = width[start:start + rows, None]
        vals = f(a + w * qj[None, :])
        if not np.all(np.isfinite(vals)):
            raise ValueError("integrand returned a non-finite value")
        anchor = vals[:, :1]
        out[start:start + rows] = anchor[:, 0] + ((vals - anchor) @ qj) / wsum
    return out


def q_mean(f: Callable, alpha: float, width: float, q: float, tol: float) -> float:
    """Normalised geometric-node mean of ``f`` on ``[alpha, alpha + width]``.

    Nodes are drawn in blocks until ``osc(f) * q^J <= tol``, with the
    oscillation estimated from the samples drawn so far; the result is then
    within ``tol`` of the full (untruncated) q-integral divided by ``width``.
    Passing the width directly keeps tiny intervals exact where
    ``beta - alpha`` would cancel.
    """
    q = check_q(q)
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    g = as_vectorized(f)
    log_q = math.log(q)

    drawn = _BLOCK
    while True:
        vals = g(alpha + width * q ** np.arange(drawn, dtype=float))
        if not np.all(np.isfinite(vals)):
            raise ValueError("integrand returned a non-finite value")
        osc = float(vals.max() - vals.min())
        needed = drawn if osc == 0.0 else max(1, math.ceil(math.log(tol / osc) / log_q))
        if needed <= drawn:
            break
        if drawn >= MAX_NODES:
            raise ValueError("q-integral tail did not reach the tolerance within the node cap")
        drawn = min(max(needed, 2 * drawn), MAX_NODES)
    return float(normalized_q_sum(g, np.array([alpha]), np.array([width]), q, drawn)[0])


def q_riemann_integral(
    f: Callable, bounds: QIntegralBounds, q: float, tail_tol: float = 1e-12
) -> float:
    """Riemann-type q-integral of ``f`` over ``bounds``.

    The node series is cut at the first J with
    ``(beta - alpha) * osc(f) * q^J <= tail_tol`` and the truncated weights
    are renormalised to unit mass (see :func:`normalized_q_sum`), so
    ``f == c`` integrates to exactly ``c * (beta - alpha)``.

    Raises
    ------
    ValueError
        If ``tail_tol <= 0``, ``q`` is outside (0, 1), or ``f`` returns a
        non-finite sample.
    """
    if not tail_tol > 0:
        raise ValueError(f"tail_tol must be positive, got {tail_tol!r}")
    if not isinstance(bounds, QIntegralBounds):
        bounds = QIntegralBounds(*bounds)
    width = bounds.width
    return width * q_mean(f, bounds.alpha, width, q, tail_tol / width)


def q_riemann_monomial(m: int, bounds: QIntegralBounds, q: float) -> float:
    """Closed form of ``int s^m d_q^R s`` over ``bounds``.

    ``sum_{k=0}^{m} C(m, k) alpha^(m-k) (beta - alpha)^(k+1) / [k+1]_q``.
    """
    q = check_q(q)
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    if not isinstance(bounds, QIntegralBounds):
        bounds = QIntegralBounds(*bounds)
    a, w = bounds.alpha, bounds.width
    qint = q_integers(q, m + 2)
    return math.fsum(
        math.comb(m, k) * a ** (m - k) * w ** (k + 1) / qint[k + 1] for k in range(m + 1)
    )
