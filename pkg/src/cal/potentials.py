"""Objective functions V(q, t) with exact gradients and Hessians.

Three families are provided:

* :class:`Quadratic` -- ``V(q) = 1/2 (q - c)^T K (q - c)``
* :class:`Rosenbrock` -- the two-dimensional banana function
* :class:`EmpiricalRisk` -- least-squares risk of a linear model whose
  active sample changes with time (piecewise constant schedule)

Every potential exposes ``eval``, ``grad`` and ``hessian`` taking a vector
``q`` of length ``dim`` and a time ``t >= 0``.
"""

from dataclasses import dataclass

import numpy as np


class ContractError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


def _as_vector(q, dim):
    if type(q) is np.ndarray and q.dtype == np.float64 and q.shape == (dim,):
        return q
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != dim:
        raise ContractError(f"expected a vector of length {dim}, got shape {q.shape}")
    return q


def _check_time(t):
    if not t >= 0:
        raise ContractError(f"time must be non-negative, got {t}")


class Potential:
    """Base class. Subclasses implement ``_eval``, ``_grad``, ``_hessian``."""

    dim: int

    def eval(self, q, t=0.0):
        _check_time(t)
        return float(self._eval(_as_vector(q, self.dim), t))

    def grad(self, q, t=0.0):
        _check_time(t)
        return self._grad(_as_vector(q, self.dim), t)

    def hessian(self, q, t=0.0):
        _check_time(t)
        return self._hessian(_as_vector(q, self.dim), t)

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Quadratic(Potential):
    stiffness: np.ndarray
    center: np.ndarray = None

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.stiffness, dtype=np.float64))
        n = K.shape[0]
        if K.shape != (n, n):
            raise ContractError(f"stiffness must be square, got shape {K.shape}")
        if not np.array_equal(K, K.T):
            raise ContractError("stiffness must be symmetric")
        eig = np.linalg.eigvalsh(K)
        if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
            raise ContractError(f"stiffness must be positive semidefinite (min eigenvalue {eig[0]})")
        c = np.zeros(n) if self.center is None else np.asarray(self.center, dtype=np.float64).reshape(n)
        K.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "stiffness", K)
        object.__setattr__(self, "center", c)

    @property
    def dim(self):
        return self.stiffness.shape[0]

    def _eval(self, q, t):
        d = q - self.center
        return 0.5 * d @ self.stiffness @ d

    def _grad(self, q, t):
        return self.stiffness @ (q - self.center)

    def _hessian(self, q, t):
        return self.stiffness.copy()

    def to_config(self):
        return {"type": "quadratic", "stiffness": self.stiffness.tolist(), "center": self.center.tolist()}


@dataclass(frozen=True, eq=False)
class Rosenbrock(Potential):
    a: float = 1.0
    b: float = 100.0

    dim = 2

    def _eval(self, q, t):
        x, y = q
        return (self.a - x) ** 2 + self.b * (y - x * x) ** 2

    def _grad(self, q, t):
        x, y = q
        r = y - x * x
        return np.array([-2.0 * (self.a - x) - 4.0 * self.b * x * r, 2.0 * self.b * r])

    def _hessian(self, q, t):
        x, y = q
        hxx = 2.0 - 4.0 * self.b * (y - 3.0 * x * x)
        hxy = -4.0 * self.b * x
        return np.array([[hxx, hxy], [hxy, 2.0 * self.b]])

    def to_config(self):
        return {"type": "rosenbrock", "a": self.a, "b": self.b}


@dataclass(frozen=True, eq=False)
class EmpiricalRisk(Potential):
    """Least-squares risk of the linear model ``y ~ w . x`` on a moving window.

    At time ``t`` the active window starts at sample ``floor(t / dwell) mod M``
    and covers ``window`` consecutive samples (cyclically). The risk is

        V(w, t) = 1 / (2 |W|) * sum_{j in W(t)} (x_j . w - y_j)^2

    so V is piecewise constant in ``t`` and its Hessian is the (exact)
    Gauss-Newton matrix ``X_W^T X_W / |W|``.
    """

    inputs: np.ndarray
    targets: np.ndarray
    dwell: float = 1.0
    window: int = 1

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        y = np.asarray(self.targets, dtype=np.float64).reshape(-1)
        if X.shape[0] != y.shape[0] or X.shape[0] == 0:
            raise ContractError("inputs and targets must hold the same non-zero number of samples")
        if not self.dwell > 0:
            raise ContractError("dwell must be positive")
        if not 1 <= self.window <= X.shape[0]:
            raise ContractError("window must lie in [1, number of samples]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    @property
    def dim(self):
        return self.inputs.shape[1]

    def active(self, t):
        """Indices of the samples active at time ``t``."""
        m = self.targets.shape[0]
        start = int(np.floor(t / self.dwell)) % m
        return (start + np.arange(self.window)) % m

    def _eval(self, q, t):
        idx = self.active(t)
        r = self.inputs[idx] @ q - self.targets[idx]
        return 0.5 * (r @ r) / len(idx)

    def _grad(self, q, t):
        idx = self.active(t)
        X = self.inputs[idx]
        return X.T @ (X @ q - self.targets[idx]) / len(idx)

    def _hessian(self, q, t):
        X = self.inputs[self.active(t)]
        return X.T @ X / X.shape[0]

    def to_config(self):
        return {
            "type": "empirical_risk",
            "inputs": self.inputs.tolist(),
            "targets": self.targets.tolist(),
            "dwell": self.dwell,
            "window": self.window,
        }


def from_config(cfg):
    """Build a potential from its JSON description."""
    kind = cfg.get("type")
    if kind == "quadratic":
        return Quadratic(cfg["stiffness"], cfg.get("center"))
    if kind == "rosenbrock":
        return Rosenbrock(cfg.get("a", 1.0), cfg.get("b", 100.0))
    if kind == "empirical_risk":
        return EmpiricalRisk(cfg["inputs"], cfg["targets"], cfg.get("dwell", 1.0), cfg.get("window", 1))
    raise ContractError(f"unknown potential type {kind!r}")
