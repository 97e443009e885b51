"""
Uniform node-centred grid on [0, L] and the (u, v) state container.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """n nodes x_j = j*h with both endpoints included."""

    n: int
    L: float

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"Grid needs at least 16 nodes, got {self.n}")
        if self.L <= 0:
            raise ValueError(f"Grid length must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights (half cells at both ends)."""
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def integrate(self, f: np.ndarray) -> float:
        return float(self.weights @ f)

    def neumann_eigenvalue(self, k: int) -> float:
        """Eigenvalue of -Laplacian on this grid for cos(k pi x / L)."""
        return (4.0 / self.h**2) * np.sin(k * np.pi * self.h / (2.0 * self.L)) ** 2

    def cosine(self, k: int) -> np.ndarray:
        return np.cos(k * np.pi * self.x / self.L)


@dataclass(frozen=True, eq=False)
class State:
    """Nodal fields u, v at time t."""

    u: np.ndarray
    v: np.ndarray
    grid: Grid1D
    t: float = 0.0

    @classmethod
    def constant(cls, grid: Grid1D, u: float, v: float, t: float = 0.0) -> "State":
        return cls(np.full(grid.n, float(u)), np.full(grid.n, float(v)), grid, t)

    @classmethod
    def from_vector(cls, y: np.ndarray, grid: Grid1D, t: float = 0.0) -> "State":
        return cls(np.array(y[: grid.n]), np.array(y[grid.n : 2 * grid.n]), grid, t)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))

    def with_time(self, t: float) -> "State":
        return replace(self, t=t)


def reflect_state(state: State) -> State:
    """Mirror image x -> L - x; maps Neumann steady states to steady states."""
    return replace(state, u=state.u[::-1].copy(), v=state.v[::-1].copy())
