"""Discretized action on a uniform time grid and gradient descent on path space.

A path ``x_1 .. x_N`` with spacing ``eps_grid`` has action

    A(x) = eps_grid * sum_{k=1}^{N-1} L(t_k, x_k, (x_{k+1} - x_k) / eps_grid)

(left-endpoint quadrature, no trapezoidal correction). Node ``k`` sits at
``t_k = t1 + (k - 1) eps_grid``.
"""

from dataclasses import dataclass

import numpy as np

from .lagrangian import FirstOrderLagrangian
from .potentials import ContractError, Quadratic


class DivergenceError(RuntimeError):
    def __init__(self, iteration):
        super().__init__(f"action became non-finite at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True, eq=False)
class DiscretePath:
    values: np.ndarray
    eps_grid: float
    t1: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.values, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 3:
            raise ContractError("a discrete path needs at least 3 nodes")
        if not self.eps_grid > 0:
            raise ContractError("eps_grid must be positive")
        object.__setattr__(self, "values", x)

    @property
    def n_nodes(self):
        return self.values.shape[0]

    @property
    def times(self):
        return self.t1 + self.eps_grid * np.arange(self.n_nodes)

    def slopes(self):
        return np.diff(self.values, axis=0) / self.eps_grid

    def with_values(self, values):
        return DiscretePath(values, self.eps_grid, self.t1)


@dataclass(frozen=True)
class DiscreteLagrangian:
    """``L(t, x, p) = h(t) (1/2 m |p|^2 + gamma V(x, t))`` evaluated row-wise."""

    lagrangian: FirstOrderLagrangian

    @classmethod
    def free_particle(cls, dim=1, m=1.0):
        return cls(FirstOrderLagrangian(m, 1.0, Quadratic(np.zeros((dim, dim)))))

    def _potential_rows(self, t, X):
        p = self.lagrangian.potential
        if isinstance(p, Quadratic):
            D = X - p.center
            G = D @ p.stiffness
            return 0.5 * np.sum(D * G, axis=1), G
        V = np.array([p.eval(x, tk) for x, tk in zip(X, t)])
        G = np.array([p.grad(x, tk) for x, tk in zip(X, t)])
        return V, G

    def value(self, t, X, P):
        lag = self.lagrangian
        h = lag.weight.value(t)
        V, _ = self._potential_rows(t, X)
        return h * (0.5 * lag.m * np.sum(P * P, axis=1) + lag.gamma * V)

    def partials(self, t, X, P):
        """Row-wise ``(L_q, L_p)``."""
        lag = self.lagrangian
        h = lag.weight.value(t)[:, None]
        _, G = self._potential_rows(t, X)
        return h * lag.gamma * G, h * lag.m * P


def _terms(path, L):
    X = path.values[:-1]
    P = path.slopes()
    t = path.times[:-1]
    return t, X, P


def action(path, L):
    t, X, P = _terms(path, L)
    return float(path.eps_grid * np.sum(L.value(t, X, P)))


def action_gradient(path, L):
    """Exact gradient of :func:`action` with respect to every node, shape ``(N, n)``."""
    t, X, P = _terms(path, L)
    Lq, Lp = L.partials(t, X, P)
    g = np.zeros_like(path.values)
    g[:-1] += path.eps_grid * Lq - Lp
    g[1:] += Lp
    return g


def discrete_el_residual(path, L):
    """``L_q(i) - (L_p(i) - L_p(i-1)) / eps`` for the interior nodes ``i = 2 .. N-1``."""
    t, X, P = _terms(path, L)
    Lq, Lp = L.partials(t, X, P)
    return Lq[1:] - (Lp[1:] - Lp[:-1]) / path.eps_grid


def discrete_el_march(x1, x2, L, n_nodes, eps_grid, t1=0.0):
    """Build a path node by node from the discrete EL condition.

    Given the first two nodes, each interior condition is solved for the next
    node; for ``L_p = h m p`` this is explicit.
    """
    lag = L.lagrangian
    x1 = np.atleast_1d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_1d(np.asarray(x2, dtype=np.float64))
    X = np.empty((n_nodes, x1.shape[0]))
    X[0], X[1] = x1, x2
    times = t1 + eps_grid * np.arange(n_nodes)
    h = lag.weight.value(times)
    mom = h[0] * lag.m * (x2 - x1) / eps_grid
    for i in range(1, n_nodes - 1):
        mom = mom + eps_grid * h[i] * lag.gamma * lag.potential.grad(X[i], times[i])
        X[i + 1] = X[i] + eps_grid * mom / (h[i] * lag.m)
    return DiscretePath(X, eps_grid, t1)


@dataclass
class MinimizeReport:
    iterations: int
    grad_norm: float
    action: float
    converged: bool


def gradient_flow_minimize(path0, L, eta, tol, max_iters, clamp_first=False):
    """Plain gradient descent ``X <- X - eta grad A`` on the path values.

    With ``clamp_first`` the first node is held fixed (a Cauchy-like
    condition) and excluded from the stopping test.
    """
    if not eta > 0 or not tol > 0:
        raise ContractError("eta and tol must be positive")
    X = path0.values.copy()
    path = path0
    it = 0
    while True:
        g = action_gradient(path, L)
        if clamp_first:
            g[0] = 0.0
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= tol or it >= max_iters:
            break
        X = X - eta * g
        path = path0.with_values(X)
        it += 1
        with np.errstate(over="ignore", invalid="ignore"):
            finite = np.isfinite(action(path, L))
        if not finite:
            raise DivergenceError(it)
    report = MinimizeReport(it, gnorm, action(path, L), gnorm <= tol)
    return path, report
