"""Weighted Lagrangians L = h(t) * Lbar and their partial derivatives.

Three families are supported:

``FirstOrderLagrangian``
    ``Lbar = 1/2 m |qdot|^2 + gamma V(q, t)``
``SecondOrderSpec``
    ``Lbar = T + gamma V`` with ``T = |alpha1 qdot + alpha2 qddot|^2 / (2 theta^2)``
    and, by default, ``h(t) = exp(theta t)``
``CaseIISpec``
    ``Lbar = 1/2 eps^2 rho |qddot|^2 + 1/2 eps nu |qdot|^2 + gamma V`` with
    ``h(t) = exp(-t / eps)``

The weight enters the equations of motion only through the constant ratios
``hdot / h`` and ``hddot / h``; ``h`` itself is evaluated (via its logarithm)
only when the full integrand is required.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .potentials import ContractError, Potential


@dataclass(frozen=True)
class Const1:
    """h(t) = 1."""

    def log_value(self, t):
        return 0.0 * t

    def ratios(self):
        return 0.0, 0.0

    def value(self, t):
        return np.exp(self.log_value(t))


@dataclass(frozen=True)
class ExpPos:
    """h(t) = exp(theta t)."""

    theta: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ContractError("ExpPos weight needs theta > 0")

    def log_value(self, t):
        return self.theta * t

    def ratios(self):
        return self.theta, self.theta**2

    def value(self, t):
        return np.exp(self.log_value(t))


@dataclass(frozen=True)
class ExpNeg:
    """h(t) = exp(-t / eps_dis)."""

    eps_dis: float

    def __post_init__(self):
        if not self.eps_dis > 0:
            raise ContractError("ExpNeg weight needs eps_dis > 0")

    def log_value(self, t):
        return -t / self.eps_dis

    def ratios(self):
        return -1.0 / self.eps_dis, 1.0 / self.eps_dis**2

    def value(self, t):
        return np.exp(self.log_value(t))


WeightFn = Union[Const1, ExpPos, ExpNeg]


@dataclass(frozen=True)
class FirstOrderLagrangian:
    m: float
    gamma: float
    potential: Potential
    weight: WeightFn = Const1()

    def __post_init__(self):
        if not self.m > 0:
            raise ContractError("mass must be positive")

    @classmethod
    def mechanics(cls, m, theta, potential):
        """Weighted mechanical Lagrangian whose EL law is ``m qddot + theta qdot + V_q = 0``.

        Uses ``gamma = -1`` and ``h = exp((theta / m) t)``; ``theta = 0`` gives
        ``h = 1`` (undamped oscillation).
        """
        weight = Const1() if theta == 0 else ExpPos(theta / m)
        return cls(m, -1.0, potential, weight)

    def bar_value(self, t, q, qdot):
        return 0.5 * self.m * (qdot @ qdot) + self.gamma * self.potential.eval(q, t)

    def bar_partials(self, t, q, qdot, qddot=None):
        return self.gamma * self.potential.grad(q, t), self.m * qdot, np.zeros_like(qdot)


@dataclass(frozen=True)
class SecondOrderKinetic:
    """T = |alpha1 qdot + alpha2 qddot|^2 / (2 theta^2)."""

    alpha1: float
    alpha2: float
    theta: float

    def __post_init__(self):
        if self.alpha2 == 0:
            raise ContractError("alpha2 must be non-zero")
        if not self.theta > 0:
            raise ContractError("theta must be positive")

    def coefficients(self):
        """(A, B, C) with T = 1/2 A |qddot|^2 + B qdot.qddot + 1/2 C |qdot|^2."""
        th2 = self.theta**2
        return self.alpha2**2 / th2, self.alpha1 * self.alpha2 / th2, self.alpha1**2 / th2


def kinetic_eval(k, qdot, qddot):
    qdot = np.asarray(qdot, dtype=np.float64)
    qddot = np.asarray(qddot, dtype=np.float64)
    if qdot.shape != qddot.shape:
        raise ContractError("qdot and qddot must have the same shape")
    u = k.alpha1 * qdot + k.alpha2 * qddot
    return 0.5 * (u @ u) / k.theta**2


@dataclass(frozen=True)
class SecondOrderSpec:
    """Second-order kinetic energy plus ``gamma V`` under weight ``h``.

    ``weight`` defaults to ``ExpPos(kinetic.theta)``; pass ``Const1()`` for the
    autonomous (unweighted) Lagrangian.
    """

    kinetic: SecondOrderKinetic
    potential: Potential
    gamma: float = 1.0
    weight: WeightFn = None

    def __post_init__(self):
        if self.weight is None:
            object.__setattr__(self, "weight", ExpPos(self.kinetic.theta))

    @property
    def is_case_i(self):
        return isinstance(self.weight, ExpPos) and self.weight.theta == self.kinetic.theta

    def coefficients(self):
        return self.kinetic.coefficients()

    def bar_value(self, t, q, qdot, qddot):
        return kinetic_eval(self.kinetic, qdot, qddot) + self.gamma * self.potential.eval(q, t)

    def bar_partials(self, t, q, qdot, qddot):
        A, B, C = self.coefficients()
        return self.gamma * self.potential.grad(q, t), B * qddot + C * qdot, A * qddot + B * qdot


@dataclass(frozen=True)
class CaseIISpec:
    """``exp(-t/eps) (1/2 eps^2 rho |qddot|^2 + 1/2 eps nu |qdot|^2 + gamma V)``."""

    rho: float
    nu: float
    eps_dis: float
    potential: Potential
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("rho", "nu", "eps_dis"):
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be positive")

    @property
    def weight(self):
        return ExpNeg(self.eps_dis)

    def coefficients(self):
        e = self.eps_dis
        return e * e * self.rho, 0.0, e * self.nu

    def bar_value(self, t, q, qdot, qddot):
        A, _, C = self.coefficients()
        return 0.5 * A * (qddot @ qddot) + 0.5 * C * (qdot @ qdot) + self.gamma * self.potential.eval(q, t)

    def bar_partials(self, t, q, qdot, qddot):
        A, _, C = self.coefficients()
        return self.gamma * self.potential.grad(q, t), C * qdot, A * qddot


LagrangianSpec = Union[FirstOrderLagrangian, SecondOrderSpec, CaseIISpec]


def _jet(spec, q, qdot, qddot):
    q = np.asarray(q, dtype=np.float64)
    qdot = np.asarray(qdot, dtype=np.float64)
    qddot = np.zeros_like(qdot) if qddot is None else np.asarray(qddot, dtype=np.float64)
    n = spec.potential.dim
    if not (q.shape == qdot.shape == qddot.shape == (n,)):
        raise ContractError(f"jet blocks must all be vectors of length {n}")
    return q, qdot, qddot


def integrand(spec, t, q, qdot, qddot=None):
    """Full weighted integrand ``h(t) * Lbar(t, q, qdot, qddot)``."""
    q, qdot, qddot = _jet(spec, q, qdot, qddot)
    h = spec.weight.value(t)
    if isinstance(spec, FirstOrderLagrangian):
        return h * spec.bar_value(t, q, qdot)
    return h * spec.bar_value(t, q, qdot, qddot)


def lagrangian_partials(spec, t, q, qdot, qddot=None):
    """Partials ``(L_q, L_p, L_a)`` of ``L = h Lbar`` with respect to q, qdot, qddot."""
    q, qdot, qddot = _jet(spec, q, qdot, qddot)
    h = spec.weight.value(t)
    Lq, Lp, La = spec.bar_partials(t, q, qdot, qddot)
    return h * Lq, h * Lp, h * La
