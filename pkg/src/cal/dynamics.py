"""Equations of motion, boundary-condition residuals and EL residual checks.

Every law is written for vector ``q``; the potential couples components only
through its gradient.  Weighted laws never evaluate ``h(t)``, only the
constant ratios ``hdot/h`` and ``hddot/h``.

For the second-order kinetic Lagrangians the barred quantities are

    Lbar_a = A qddot + B qdot,    Lbar_p = B qddot + C qdot,    Lbar_q = gamma V_q

with ``(A, B, C)`` from ``spec.coefficients()``, and the Euler-Lagrange
equation divided by ``h`` reads

    A q4 + 2 r1 A q3 + (r1 B + r2 A - C) qddot + (r2 B - r1 C) qdot + gamma V_q = 0

where ``r1 = hdot/h`` and ``r2 = hddot/h``.
"""

from dataclasses import dataclass, field

import numpy as np

from .lagrangian import CaseIISpec, Const1, FirstOrderLagrangian, SecondOrderSpec
from .potentials import ContractError, Potential, Quadratic


@dataclass(frozen=True)
class State4:
    q: np.ndarray
    qdot: np.ndarray
    qddot: np.ndarray
    q3: np.ndarray

    def __post_init__(self):
        blocks = [np.asarray(getattr(self, k), dtype=np.float64) for k in ("q", "qdot", "qddot", "q3")]
        if len({b.shape for b in blocks}) != 1 or blocks[0].ndim != 1:
            raise ContractError("State4 blocks must be vectors of equal length")
        for name, b in zip(("q", "qdot", "qddot", "q3"), blocks):
            object.__setattr__(self, name, b)

    @classmethod
    def from_flat(cls, y, n):
        y = np.asarray(y, dtype=np.float64)
        blocks = [y[i * n:(i + 1) * n] if (i + 1) * n <= y.shape[0] else np.zeros(n) for i in range(4)]
        return cls(*blocks)

    @classmethod
    def _unchecked(cls, q, qdot, qddot, q3):
        s = object.__new__(cls)
        object.__setattr__(s, "q", q)
        object.__setattr__(s, "qdot", qdot)
        object.__setattr__(s, "qddot", qddot)
        object.__setattr__(s, "q3", q3)
        return s

    @classmethod
    def zeros(cls, n):
        return cls(*(np.zeros(n) for _ in range(4)))

    def flat(self, order=4):
        return np.concatenate([self.q, self.qdot, self.qddot, self.q3][:order])

    @property
    def dim(self):
        return self.q.shape[0]


@dataclass
class Trajectory:
    """Time samples of a flat state with ``order`` blocks of dimension ``dim``.

    Blocks beyond the law's order read as zeros through :meth:`block`.
    """

    times: np.ndarray
    y: np.ndarray
    dim: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(len(self.times), -1)
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.y.shape[1] % self.dim:
            raise ValueError("state width is not a multiple of dim")

    @property
    def order(self):
        return self.y.shape[1] // self.dim

    def block(self, i):
        if i >= self.order:
            return np.zeros((len(self.times), self.dim))
        return self.y[:, i * self.dim:(i + 1) * self.dim]

    q = property(lambda self: self.block(0))
    qdot = property(lambda self: self.block(1))
    qddot = property(lambda self: self.block(2))
    q3 = property(lambda self: self.block(3))

    @property
    def diverged(self):
        return bool(self.meta.get("diverged", False))

    def state(self, i):
        return State4(*(self.block(k)[i] for k in range(4)))

    def __len__(self):
        return len(self.times)


# Limit laws ------------------------------------------------------------------

@dataclass(frozen=True)
class DampedOscillator:
    """m qddot + theta qdot + V_q = 0."""

    m: float
    theta: float
    potential: Potential


@dataclass(frozen=True)
class GradientFlow:
    """qdot = -V_q / theta."""

    theta: float
    potential: Potential


@dataclass(frozen=True)
class CollapsedTheta:
    """qddot + (alpha1/alpha2) qdot + (gamma/alpha2^2) V_q = 0."""

    alpha1: float
    alpha2: float
    gamma: float
    potential: Potential


@dataclass(frozen=True)
class CollapsedEps:
    """rho qddot + nu qdot + gamma V_q = 0."""

    rho: float
    nu: float
    gamma: float
    potential: Potential


def collapse(spec):
    """The second-order law a fourth-order spec reduces to in its singular limit."""
    if isinstance(spec, SecondOrderSpec):
        k = spec.kinetic
        return CollapsedTheta(k.alpha1, k.alpha2, spec.gamma, spec.potential)
    if isinstance(spec, CaseIISpec):
        return CollapsedEps(spec.rho, spec.nu, spec.gamma, spec.potential)
    raise ContractError(f"no collapsed law for {type(spec).__name__}")


# Right-hand sides --------------------------------------------------------------

def damped_oscillator_rhs(m, theta, p, t, q, qdot):
    if not m > 0:
        raise ContractError("mass must be positive")
    return qdot, -(theta * qdot + p.grad(q, t)) / m


def gradient_flow_rhs(theta, p, t, q):
    if not theta > 0:
        raise ContractError("theta must be positive")
    return -p.grad(q, t) / theta


def first_order_el_rhs(spec, p, t, q, qdot):
    """qddot from the weighted first-order law m qddot + r1 m qdot - gamma V_q = 0."""
    p = spec.potential if p is None else p
    r1, _ = spec.weight.ratios()
    return (spec.gamma * p.grad(q, t) - r1 * spec.m * qdot) / spec.m


def _require_case_i(spec):
    if not isinstance(spec, SecondOrderSpec) or not spec.is_case_i:
        raise ContractError("expected a case-i spec (second-order kinetic with h = exp(theta t))")


def _require_case_ii(spec):
    if not isinstance(spec, CaseIISpec):
        raise ContractError("expected a CaseIISpec")


def fourth_order_stab_rhs(spec, p, t, s):
    """q4 solved from the printed case-i law (h = exp(theta t))."""
    _require_case_i(spec)
    p = spec.potential if p is None else p
    k = spec.kinetic
    a1, a2, th = k.alpha1, k.alpha2, k.theta
    c2 = (a1 * a2 * th + a2**2 * th**2 - a1**2) / (a2**2 * th**2)
    c1 = (a1 * a2 * th**2 - a1**2 * th) / (a2**2 * th**2)
    inner = (2.0 / th) * s.q3 + c2 * s.qddot + c1 * s.qdot + (spec.gamma / a2**2) * p.grad(s.q, t)
    return -th**2 * inner


def fourth_order_uns_rhs(spec, p, t, s):
    """q4 solved from the printed case-ii law (h = exp(-t/eps))."""
    _require_case_ii(spec)
    p = spec.potential if p is None else p
    e, rho, nu = spec.eps_dis, spec.rho, spec.nu
    num = 2 * e * rho * s.q3 - (rho - e * nu) * s.qddot - nu * s.qdot - spec.gamma * p.grad(s.q, t)
    return num / (e * e * rho)


def el_coefficients(spec):
    """Coefficients ``(A, 2 r1 A, r1 B + r2 A - C, r2 B - r1 C)`` of q4, q3, qddot, qdot."""
    A, B, C = spec.coefficients()
    r1, r2 = spec.weight.ratios()
    return A, 2 * r1 * A, r1 * B + r2 * A - C, r2 * B - r1 * C


def fourth_order_rhs(spec, p, t, s):
    """q4 from the generic weighted EL equation (any weight, either kinetic family)."""
    p = spec.potential if p is None else p
    c4, c3, c2, c1 = el_coefficients(spec)
    return -(c3 * s.q3 + c2 * s.qddot + c1 * s.qdot + spec.gamma * p.grad(s.q, t)) / c4


def collapsed_theta_rhs(alpha1, alpha2, gamma, p, t, q, qdot):
    if alpha2 == 0:
        raise ContractError("alpha2 must be non-zero")
    return -(alpha1 / alpha2) * qdot - (gamma / alpha2**2) * p.grad(q, t)


def collapsed_eps_rhs(rho, nu, gamma, p, t, q, qdot):
    if not rho > 0:
        raise ContractError("rho must be positive")
    return -(nu * qdot + gamma * p.grad(q, t)) / rho


# Flat vector fields for the integrator -------------------------------------------

def second_order_field(accel, n):
    """Wrap ``accel(t, q, qdot) -> qddot`` as a flat field on ``(q, qdot)``."""

    def f(t, y):
        q, qdot = y[:n], y[n:]
        return np.concatenate((qdot, accel(t, q, qdot)))

    return f


def fourth_order_field(q4, n):
    """Wrap ``q4(t, State4) -> q4`` as a flat field on ``(q, qdot, qddot, q3)``."""

    def f(t, y):
        s = State4._unchecked(y[:n], y[n:2 * n], y[2 * n:3 * n], y[3 * n:])
        return np.concatenate((y[n:], q4(t, s)))

    return f


def law_field(law, affine=True):
    """Flat vector field and state order for a law or Lagrangian spec.

    With a :class:`Quadratic` potential every law is affine in the flat state;
    unless ``affine=False`` the field is then assembled once as ``J y + b``
    (columns probed from the pointwise field), which is much cheaper to call.
    """
    f, order = _pointwise_field(law)
    if affine and isinstance(law.potential, Quadratic):
        return _affine(f, order * law.potential.dim), order
    return f, order


def _affine(f, size):
    b = f(0.0, np.zeros(size))
    J = np.column_stack([f(0.0, e) - b for e in np.eye(size)])
    if not np.any(b):
        return lambda t, y: J @ y
    return lambda t, y: J @ y + b


def _pointwise_field(law):
    p = law.potential
    n = p.dim
    if isinstance(law, DampedOscillator):
        return second_order_field(lambda t, q, v: damped_oscillator_rhs(law.m, law.theta, p, t, q, v)[1], n), 2
    if isinstance(law, GradientFlow):
        return (lambda t, y: gradient_flow_rhs(law.theta, p, t, y)), 1
    if isinstance(law, CollapsedTheta):
        return second_order_field(
            lambda t, q, v: collapsed_theta_rhs(law.alpha1, law.alpha2, law.gamma, p, t, q, v), n), 2
    if isinstance(law, CollapsedEps):
        return second_order_field(lambda t, q, v: collapsed_eps_rhs(law.rho, law.nu, law.gamma, p, t, q, v), n), 2
    if isinstance(law, FirstOrderLagrangian):
        return second_order_field(lambda t, q, v: first_order_el_rhs(law, p, t, q, v), n), 2
    if isinstance(law, SecondOrderSpec):
        rhs = fourth_order_stab_rhs if law.is_case_i else fourth_order_rhs
        return fourth_order_field(lambda t, s: rhs(law, p, t, s), n), 4
    if isinstance(law, CaseIISpec):
        return fourth_order_field(lambda t, s: fourth_order_uns_rhs(law, p, t, s), n), 4
    raise ContractError(f"unsupported law {type(law).__name__}")


def matched_initial_state(law, q0, qdot0):
    """Fourth-order Cauchy data whose qddot, q3 follow the collapsed second-order law.

    For a quadratic or otherwise smooth V, ``q3`` is the time derivative of the
    collapsed acceleration: ``d/dt qddot = -(a) qddot - (b) H qdot``.
    """
    p = law.potential
    q0 = np.asarray(q0, dtype=np.float64)
    qdot0 = np.asarray(qdot0, dtype=np.float64)
    if isinstance(law, (SecondOrderSpec, CollapsedTheta)):
        lim = collapse(law) if isinstance(law, SecondOrderSpec) else law
        a, b = lim.alpha1 / lim.alpha2, lim.gamma / lim.alpha2**2
    elif isinstance(law, (CaseIISpec, CollapsedEps)):
        lim = collapse(law) if isinstance(law, CaseIISpec) else law
        a, b = lim.nu / lim.rho, lim.gamma / lim.rho
    else:
        raise ContractError(f"cannot match Cauchy data for {type(law).__name__}")
    qddot0 = -a * qdot0 - b * p.grad(q0, 0.0)
    q30 = -a * qddot0 - b * p.hessian(q0, 0.0) @ qdot0
    return State4(q0, qdot0, qddot0, q30)


# Boundary conditions ---------------------------------------------------------------

def boundary_residuals_printed(spec, s_end):
    """Left-hand sides of the two displayed terminal conditions."""
    if isinstance(spec, SecondOrderSpec):
        k = spec.kinetic
        th2 = k.theta**2
        r1 = (k.alpha1**2 / th2) * s_end.qdot - (k.alpha2**2 / th2) * s_end.q3
        r2 = (k.alpha1 * k.alpha2 / th2) * s_end.qdot + (k.alpha2**2 / th2) * s_end.qddot
        return r1, r2
    if isinstance(spec, CaseIISpec):
        e, rho, nu = spec.eps_dis, spec.rho, spec.nu
        return e * e * rho * s_end.qddot, e * nu * s_end.qddot - rho * e * e * s_end.q3
    raise ContractError("printed boundary conditions exist only for the two fourth-order cases")


def d_dt_La_over_h(spec, s):
    """``(1/h) d/dt L_a`` expanded analytically: ``r1 Lbar_a + A q3 + B qddot``."""
    A, B, _ = spec.coefficients()
    r1, _ = spec.weight.ratios()
    return r1 * (A * s.qddot + B * s.qdot) + A * s.q3 + B * s.qddot


def boundary_residuals_generic(spec, t_end, s_end):
    """``((L_p - d/dt L_a)/h, L_a/h)`` at ``t_end`` from the endpoint jet."""
    if not isinstance(spec, (SecondOrderSpec, CaseIISpec)):
        raise ContractError("generic boundary conditions need a second-order kinetic term")
    _, Lp, La = spec.bar_partials(t_end, s_end.q, s_end.qdot, s_end.qddot)
    return Lp - d_dt_La_over_h(spec, s_end), La


# Conserved quantities --------------------------------------------------------------

def oscillator_energy(m, p, t, q, qdot):
    return 0.5 * m * (qdot @ qdot) + p.eval(q, t)


def ostrogradsky_energy(spec, t, s):
    """``qdot.(L_p - d/dt L_a) + qddot.L_a - L`` for an unweighted spec."""
    if not isinstance(spec.weight, Const1):
        raise ContractError("the Ostrogradsky energy is conserved only for h = 1")
    _, Lp, La = spec.bar_partials(t, s.q, s.qdot, s.qddot)
    L = spec.bar_value(t, s.q, s.qdot, s.qddot)
    return s.qdot @ (Lp - d_dt_La_over_h(spec, s)) + s.qddot @ La - L


# Residual of the continuum EL equation along a sampled trajectory -----------------

def el_residual(traj, spec):
    """EL left-hand side divided by ``h`` at every interior sample.

    Time derivatives of ``L_p`` and ``L_a`` are central differences on the
    (uniform) trajectory grid, using ``(1/h) d/dt (h f) = f' + r1 f`` and
    ``(1/h) d2/dt2 (h f) = f'' + 2 r1 f' + r2 f`` so ``h`` itself never appears.
    Returns an array of shape ``(len(traj) - 2, dim)``.
    """
    t = traj.times
    if len(t) < 5:
        raise ValueError("el_residual needs at least 5 samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * abs(dt[0]):
        raise ValueError("el_residual needs a uniform time grid; resample first")
    dt = dt[0]
    r1, r2 = spec.weight.ratios()
    n = traj.dim
    Lq = np.empty((len(t), n))
    Lp = np.empty((len(t), n))
    La = np.empty((len(t), n))
    q, qd, qdd = traj.q, traj.qdot, traj.qddot
    for i in range(len(t)):
        Lq[i], Lp[i], La[i] = spec.bar_partials(t[i], q[i], qd[i], qdd[i])

    def d1(f):
        return (f[2:] - f[:-2]) / (2 * dt)

    def d2(f):
        return (f[2:] - 2 * f[1:-1] + f[:-2]) / dt**2

    mid = slice(1, -1)
    dLp = d1(Lp) + r1 * Lp[mid]
    res = Lq[mid] - dLp
    if not isinstance(spec, FirstOrderLagrangian):
        res = res + d2(La) + 2 * r1 * d1(La) + r2 * La[mid]
    return res


# Closed-form reference ----------------------------------------------------------

def damped_oscillator_exact(m, theta, potential, q0, qdot0, t):
    """Exact solution of ``m qddot + theta qdot + K (q - c) = 0`` for a quadratic V.

    Works mode by mode in the eigenbasis of K and covers the under-, critically
    and over-damped regimes. Returns ``(q, qdot)`` arrays of shape ``(len(t), n)``.
    """
    if not isinstance(potential, Quadratic):
        raise ContractError("closed form available only for quadratic potentials")
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))[:, None]
    lam, U = np.linalg.eigh(potential.stiffness)
    x0 = U.T @ (np.asarray(q0, dtype=np.float64) - potential.center)
    v0 = U.T @ np.asarray(qdot0, dtype=np.float64)
    g = theta / (2 * m)
    disc = lam / m - g * g
    x = np.empty((t.shape[0], lam.shape[0]))
    v = np.empty_like(x)
    for j in range(lam.shape[0]):
        tt = t[:, 0]
        e = np.exp(-g * tt)
        if disc[j] > 1e-14:
            w = np.sqrt(disc[j])
            A, B = x0[j], (v0[j] + g * x0[j]) / w
            c, s = np.cos(w * tt), np.sin(w * tt)
            x[:, j] = e * (A * c + B * s)
            v[:, j] = e * ((-g * A + w * B) * c + (-g * B - w * A) * s)
        elif disc[j] < -1e-14:
            mu = np.sqrt(-disc[j])
            A, B = x0[j], (v0[j] + g * x0[j]) / mu
            ch, sh = np.cosh(mu * tt), np.sinh(mu * tt)
            x[:, j] = e * (A * ch + B * sh)
            v[:, j] = e * ((-g * A + mu * B) * ch + (-g * B + mu * A) * sh)
        else:
            A, B = x0[j], v0[j] + g * x0[j]
            x[:, j] = e * (A + B * tt)
            v[:, j] = e * (B - g * (A + B * tt))
    return x @ U.T + potential.center, v @ U.T
