"""Target functions on [0, 1] paired with an evaluation grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .qcore import as_vectorized

__all__ = ["GridFunction", "uniform_grid", "builtin", "BUILTINS", "DEFAULT_GRID"]

DEFAULT_GRID = 257


def uniform_grid(points: int = DEFAULT_GRID) -> np.ndarray:
    if points < 2:
        raise ValueError(f"a grid needs at least 2 points, got {points}")
    return np.linspace(0.0, 1.0, points)


@dataclass(frozen=True)
class GridFunction:
    """A function on [0, 1] together with the grid it is measured on.

    ``poly`` holds monomial coefficients ``(c_0, c_1, ...)`` when the
    function is a polynomial; operators use them for closed-form node values.
    Tabulated functions (``func is None``) are evaluated off-grid by linear
    interpolation.
    """

    name: str
    grid: np.ndarray
    values: np.ndarray
    func: Optional[Callable] = field(default=None, repr=False)
    poly: Optional[tuple[float, ...]] = None

    @classmethod
    def from_callable(
        cls,
        func: Callable,
        points: int = DEFAULT_GRID,
        name: str = "f",
        poly: Optional[Sequence[float]] = None,
    ) -> "GridFunction":
        g = as_vectorized(func)
        grid = uniform_grid(points)
        values = np.array(g(grid), dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{name}: non-finite values on the grid")
        return cls(name, grid, values, g, tuple(poly) if poly is not None else None)

    @classmethod
    def from_samples(cls, values: Sequence[float], name: str = "tabulated") -> "GridFunction":
        values = np.asarray(values, dtype=float)
        if values.ndim != 1:
            raise ValueError("tabulated samples must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{name}: non-finite samples")
        return cls(name, uniform_grid(values.shape[0]), values)

    def with_grid(self, points: int) -> "GridFunction":
        if self.func is None:
            raise ValueError("a tabulated function cannot be regridded")
        return GridFunction.from_callable(self.func, points, self.name, self.poly)

    def __call__(self, s):
        if self.func is not None:
            return self.func(s)
        return np.interp(s, self.grid, self.values)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))


def _constant(c: float) -> Callable:
    def f(s):
        return np.full(np.shape(s), c)
    return f


BUILTINS: dict[str, tuple[Callable, Optional[tuple[float, ...]]]] = {
    "one": (_constant(1.0), (1.0,)),
    "identity": (lambda s: np.asarray(s, dtype=float), (0.0, 1.0)),
    "square": (lambda s: np.asarray(s, dtype=float) ** 2, (0.0, 0.0, 1.0)),
    "sine-bump": (lambda s: np.sin(np.pi * np.asarray(s, dtype=float)), None),
    "abs-shift": (lambda s: np.abs(np.asarray(s, dtype=float) - 0.5), None),
}


def builtin(name: str, points: int = DEFAULT_GRID) -> GridFunction:
    """One of the named targets: ``one``, ``identity``, ``square``, ``sine-bump``, ``abs-shift``."""
    try:
        func, poly = BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown target function {name!r}; known: {', '.join(sorted(BUILTINS))}"
        ) from None
    return GridFunction.from_callable(func, points, name, poly)
