"""Multivariate q-Lagrange polynomials with one shared exponent ``n``.

    h_{p,q}^{(n,...,n)}(z_1, ..., z_r)
        = sum_{l_1+...+l_r = p} prod_k (q^n; q)_{l_k} z_k^{l_k} / (q; q)_{l_k}

Every factor only depends on its own ``l_k``, so ``h_p`` is the degree-p
coefficient of the product of r single-variable power series.  That product
is evaluated by convolution; enumeration of compositions is kept as an
independent oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .qcore import check_q, q_integers, q_pochhammer

__all__ = [
    "CoefficientSequence",
    "coefficient_sequence",
    "convolve_truncated",
    "lagrange_coefficients",
    "lagrange_polynomial",
    "lagrange_polynomial_enumerated",
    "compositions",
    "generating_function_residual",
]


@dataclass(frozen=True)
class CoefficientSequence:
    """Coefficients ``(q^n; q)_l z^l / (q; q)_l`` for ``l = 0 .. len-1``."""

    entries: np.ndarray
    n: int
    z: float
    q: float

    def __post_init__(self) -> None:
        self.entries.setflags(write=False)

    def __len__(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, l: int) -> float:
        return float(self.entries[l])


def coefficient_sequence(n: int, z: float, q: float, length: int) -> CoefficientSequence:
    """Build the single-variable coefficient sequence by its ratio recurrence.

    ``c_0 = 1`` and ``c_l = c_{l-1} z [n+l-1]_q / [l]_q``, which is the
    ratio ``(1 - q^(n+l-1)) / (1 - q^l)`` written with q-integers.
    """
    q = check_q(q)
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not (0.0 < z < 1.0):
        raise ValueError(f"z must lie in (0, 1), got {z!r}")
    if length < 1:
        raise ValueError(f"length must be positive, got {length}")
    qint = q_integers(q, n + length)
    l = np.arange(1, length)
    ratios = z * qint[n + l - 1] / qint[l]
    entries = np.concatenate(([1.0], np.cumprod(ratios)))
    return CoefficientSequence(entries=entries, n=n, z=float(z), q=q)


def convolve_truncated(a: np.ndarray, b: np.ndarray, length: int) -> np.ndarray:
    """First ``length`` coefficients of the product of two power series."""
    return np.convolve(a[:length], b[:length])[:length]


def lagrange_coefficients(n: int, q: float, z: Sequence[float], p_max: int) -> np.ndarray:
    """``h_{p,q}`` for ``p = 0 .. p_max`` by pairwise convolution, O(r p_max^2)."""
    if len(z) == 0:
        raise ValueError("z must contain at least one variable")
    length = p_max + 1
    out = coefficient_sequence(n, z[0], q, length).entries
    for zk in z[1:]:
        out = convolve_truncated(out, coefficient_sequence(n, zk, q, length).entries, length)
    return out


def lagrange_polynomial(n: int, q: float, z: Sequence[float], degree: int) -> float:
    """``h_{degree,q}^{(n,...,n)}(z_1, ..., z_r)``."""
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    return float(lagrange_coefficients(n, q, z, degree)[degree])


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ``(l_1, ..., l_parts)`` of nonnegative integers summing to ``total``."""
    # stars and bars
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def lagrange_polynomial_enumerated(n: int, q: float, z: Sequence[float], degree: int) -> float:
    """Oracle: sum the defining formula over every composition of ``degree``."""
    if len(z) == 0:
        raise ValueError("z must contain at least one variable")
    q = check_q(q)
    qn = q**n
    total = 0.0
    for ls in compositions(degree, len(z)):
        term = 1.0
        for lk, zk in zip(ls, z):
            term *= q_pochhammer(qn, q, lk) * zk**lk / q_pochhammer(q, q, lk)
        total += term
    return total


def generating_function_residual(
    n: int, q: float, z: Sequence[float], t: float, p_max: int
) -> float:
    """``| prod_k 1/(t z_k; q)_n - sum_{p<=p_max} h_{p,q} t^p |``.

    Raises
    ------
    ValueError
        If ``|t| >= min 1/z_k`` or some ``t z_k >= 1``.
    """
    if len(z) == 0:
        raise ValueError("z must contain at least one variable")
    if any(abs(t) * zk >= 1.0 or t * zk >= 1.0 for zk in z):
        raise ValueError(f"t={t!r} lies outside the radius min 1/z_k")
    lhs = math.prod(1.0 / q_pochhammer(t * zk, q, n) for zk in z)
    h = lagrange_coefficients(n, q, z, p_max)
    rhs = float(np.polynomial.polynomial.polyval(t, h))
    return abs(lhs - rhs)
