"""
Steady problems that can be continued in one parameter.

A problem bundles the discretised residual, its Jacobian, the parameter
derivative, the mass matrix for stability and the linear amplitude
functional used for branch switching.
"""

from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from app.core.kinetics import coexistence_state
from app.core.params import ModelParams
from app.simulation.grid import Grid1D, State
from app.simulation.operators import operators_for
from app.stability.linear import chi_k


class SteadyProblem(ABC):
    """Interface used by the continuation and stability routines."""

    param_name: str = "param"

    def __init__(self, grid: Grid1D, k: int):
        self.grid = grid
        self.k = k
        self.ops = operators_for(grid)

    @property
    @abstractmethod
    def size(self) -> int: ...

    @abstractmethod
    def residual(self, x: np.ndarray, param: float) -> np.ndarray: ...

    @abstractmethod
    def jacobian(self, x: np.ndarray, param: float) -> sp.spmatrix: ...

    @abstractmethod
    def param_derivative(self, x: np.ndarray, param: float) -> np.ndarray: ...

    @abstractmethod
    def mass_matrix(self) -> sp.spmatrix: ...

    @abstractmethod
    def trivial(self) -> np.ndarray:
        """The constant solution, valid for every parameter value."""

    @abstractmethod
    def critical_mode(self) -> Tuple[np.ndarray, float]:
        """(null vector, parameter value) of the grid-consistent bifurcation."""

    @abstractmethod
    def norms(self, x: np.ndarray) -> Tuple[float, float]: ...

    @abstractmethod
    def scale(self, x: np.ndarray, param: float) -> float: ...

    @abstractmethod
    def _v_slice(self) -> slice: ...

    def amplitude_gradient(self) -> np.ndarray:
        """Gradient of the (linear) amplitude functional."""
        g = np.zeros(self.size)
        g[self._v_slice()] = (2.0 / self.grid.L) * self.grid.weights * self.grid.cosine(self.k)
        return g

    def amplitude(self, x: np.ndarray) -> float:
        """Mode-k cosine coefficient of v - v_bar."""
        return float(self.amplitude_gradient() @ (x - self.trivial()))

    def arclength_weights(self) -> np.ndarray:
        w = np.zeros(self.size)
        w[self._v_slice()] = self.grid.weights / self.grid.L
        return w


class FullSystemProblem(SteadyProblem):
    """Stationary two-species system, continued in chi."""

    param_name = "chi"

    def __init__(self, p: ModelParams, grid: Grid1D, k: int, tau_stability: float = 1.0):
        super().__init__(grid, k)
        self.p = p
        self.tau_stability = tau_stability
        self.u_bar, self.v_bar = coexistence_state(p)

    @property
    def size(self) -> int:
        return 2 * self.grid.n

    def _split(self, x):
        n = self.grid.n
        return x[:n], x[n:]

    def _v_slice(self) -> slice:
        return slice(self.grid.n, 2 * self.grid.n)

    def residual(self, x, param):
        u, v = self._split(x)
        return self.ops.steady_residual(u, v, self.p, chi=param)

    def jacobian(self, x, param):
        u, v = self._split(x)
        return self.ops.steady_jacobian(u, v, self.p, chi=param)

    def param_derivative(self, x, param):
        u, v = self._split(x)
        return self.ops.chi_derivative(u, v, self.p)

    def mass_matrix(self):
        n = self.grid.n
        diag = np.concatenate([np.ones(n), np.full(n, self.tau_stability)])
        return sp.diags(diag, format="csc")

    def trivial(self):
        return np.concatenate([np.full(self.grid.n, self.u_bar), np.full(self.grid.n, self.v_bar)])

    def critical_mode(self):
        bp = chi_k(self.p, self.k, grid=self.grid)
        c = self.grid.cosine(self.k)
        return np.concatenate([bp.Q_k * c, c]), bp.chi_k

    def arclength_weights(self):
        w = self.grid.weights / self.grid.L
        return np.concatenate([w, w])

    def norms(self, x):
        u, v = self._split(x)
        return float(np.max(np.abs(u))), float(np.max(np.abs(v)))

    def scale(self, x, param):
        u, v = self._split(x)
        return self.ops.residual_scale(u, v, self.p, chi=param)

    def state(self, x) -> State:
        return State.from_vector(x, self.grid)
