"""Moments of the q-integral operator, their closed-form bounds, and rate bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gridfunction import GridFunction
from .operators import EvalResult, OperatorSpec, Truncation, evaluate_K_polynomial
from .qcore import q_integer

__all__ = [
    "MomentReport",
    "exact_moment",
    "moment_results",
    "moment_report",
    "lemma1_bounds",
    "corrected_lemma1_bounds",
    "gamma_bound",
    "modulus_of_continuity",
    "rate_bound",
]

_MONOMIALS = {0: (1.0,), 1: (0.0, 1.0), 2: (0.0, 0.0, 1.0)}


@dataclass(frozen=True)
class MomentReport:
    n: int
    x: float
    moment0: float
    moment1: float
    moment2: float
    bound1: float
    bound2: float
    central2: float
    gamma: float
    slack0: float
    slack1: float
    slack2: float

    @property
    def central_slack(self) -> float:
        return self.slack2 + 2 * self.x * self.slack1 + self.x**2 * self.slack0

    def checks(self) -> dict[str, tuple[float, float, float]]:
        """``name -> (lhs, rhs, slack)``; each check passes when ``lhs <= rhs + slack``."""
        x = self.x
        return {
            "normalization": (abs(self.moment0 - 1.0), 0.0, self.slack0 + 1e-12),
            "lemma1_first": (abs(self.moment1 - x), self.bound1, self.slack1 + 1e-12),
            "lemma1_second": (abs(self.moment2 - x * x), self.bound2, self.slack2 + 1e-12),
            "central_nonnegative": (-self.central2, 0.0, self.central_slack + 1e-12),
            "lemma2_gamma": (self.central2, self.gamma, self.central_slack + 1e-12),
        }

    @property
    def passed(self) -> bool:
        return all(lhs <= rhs + slack for lhs, rhs, slack in self.checks().values())


def moment_results(
    spec: OperatorSpec, xs, order: int, trunc: Truncation = Truncation()
) -> list[EvalResult]:
    """``K(s^order; x)`` over ``xs`` with node integrals in closed form."""
    if order not in _MONOMIALS:
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    return evaluate_K_polynomial(spec, _MONOMIALS[order], xs, trunc)


def exact_moment(spec: OperatorSpec, x: float, order: int, trunc: Truncation = Truncation()) -> float:
    """``K(s^order; x)`` for order 0, 1, 2; error at most ``1 - captured_mass``."""
    return moment_results(spec, [x], order, trunc)[0].value


def lemma1_bounds(n: int, q: float, beta_r: float, x: float) -> tuple[float, float]:
    """Right-hand sides bounding ``|K(s;x) - x|`` and ``|K(s^2;x) - x^2|``."""
    n1, n2, n3 = q_integer(n, q), q_integer(2, q), q_integer(3, q)
    bound1 = x * (1.0 - beta_r) + 1.0 / (n2 * n1)
    bound2 = 1.0 / (n3 * n1**2) + x * beta_r / n1 * (1.0 + 2.0 / n2) + 2.0 * x**2 * (1.0 - beta_r)
    return bound1, bound2


def corrected_lemma1_bounds(n: int, q: float, beta_r: float, x: float) -> tuple[float, float]:
    """Bounds of :func:`lemma1_bounds` with the x-free terms taken over ``[n-1]_q``.

    The node with ``l_r = 0`` sits on ``[0, 1/[n-1]_q]``, so ``K(s; 0)`` equals
    ``1/([2]_q [n-1]_q)``, which exceeds ``1/([2]_q [n]_q)``. Only the x-free
    terms are affected; for ``l_r >= 1`` the ``[n]_q`` estimates hold.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    n0, n1, n2, n3 = q_integer(n - 1, q), q_integer(n, q), q_integer(2, q), q_integer(3, q)
    bound1 = x * (1.0 - beta_r) + 1.0 / (n2 * n0)
    bound2 = 1.0 / (n3 * n0**2) + x * beta_r / n1 * (1.0 + 2.0 / n2) + 2.0 * x**2 * (1.0 - beta_r)
    return bound1, bound2


_BOUNDS = {"printed": lemma1_bounds, "corrected": corrected_lemma1_bounds}


def gamma_bound(n: int, q: float, beta_r: float) -> float:
    """Uniform bound on the second central moment ``K((s-x)^2; x)`` over x in [0, 1]."""
    if not (0.0 < beta_r <= 1.0):
        raise ValueError(f"beta_r must lie in (0, 1], got {beta_r!r}")
    n1, n2, n3 = q_integer(n, q), q_integer(2, q), q_integer(3, q)
    return (
        4.0 * (1.0 - beta_r)
        + (beta_r * (1.0 + 2.0 / n2) + 2.0 / n2) / n1
        + 1.0 / (n3 * n1**2)
    )


def moment_report(
    spec: OperatorSpec, xs, trunc: Truncation = Truncation(), *, bounds: str = "printed"
) -> list[MomentReport]:
    """Moments and bound checks at each ``x``.

    ``bounds`` selects ``"printed"`` (:func:`lemma1_bounds`) or
    ``"corrected"`` (:func:`corrected_lemma1_bounds`) first/second-moment bounds.
    """
    try:
        bound_fn = _BOUNDS[bounds]
    except KeyError:
        raise ValueError(f"bounds must be 'printed' or 'corrected', got {bounds!r}") from None
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    m = [moment_results(spec, xs, k, trunc) for k in range(3)]
    gamma = gamma_bound(spec.n, spec.q, spec.beta_r)
    out = []
    for i, x in enumerate(xs.tolist()):
        m0, m1, m2 = (m[k][i] for k in range(3))
        b1, b2 = bound_fn(spec.n, spec.q, spec.beta_r, x)
        central = m2.value - 2 * x * m1.value + x * x * m0.value
        out.append(MomentReport(
            spec.n, x, m0.value, m1.value, m2.value, b1, b2, central, gamma,
            m0.tail_bound, m1.tail_bound, m2.tail_bound,
        ))
    return out


def modulus_of_continuity(f: GridFunction, delta: float) -> float:
    """``max |f(s) - f(x)|`` over grid pairs with ``|s - x| <= delta``.

    When ``f`` carries its callable, the pairs ``(x_i, x_i +- delta)`` are
    added so that the offset ``delta`` itself is attained off-grid.

    Raises
    ------
    ValueError
        If ``delta <= 0`` or the grid spacing exceeds ``delta / 8``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    h = f.spacing
    if h > delta / 8:
        raise ValueError(f"grid spacing {h:.3g} is too coarse for delta={delta:.3g} (need <= delta/8)")
    vals = f.values
    width = min(int(math.floor(delta / h * (1 + 1e-12))), vals.shape[0] - 1)
    win = np.lib.stride_tricks.sliding_window_view(vals, width + 1)
    omega = float(np.max(win.max(axis=1) - win.min(axis=1)))
    if f.func is not None:
        grid = f.grid
        for shifted in (np.minimum(grid + delta, 1.0), np.maximum(grid - delta, 0.0)):
            omega = max(omega, float(np.max(np.abs(f(shifted) - vals))))
    return omega


def rate_bound(f: GridFunction, n: int, q: float, beta_r: float) -> float:
    """``2 * omega_f(sqrt(gamma))``, the uniform error bound for ``K_{n,q}(f)``."""
    return 2.0 * modulus_of_continuity(f, math.sqrt(gamma_bound(n, q, beta_r)))
