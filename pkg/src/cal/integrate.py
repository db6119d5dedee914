"""Explicit Runge-Kutta integration with blow-up detection.

All laws are integrated as first-order systems on a flat state vector. The
packing is block-wise, position block first: ``(q, qdot)`` for second-order
laws and ``(q, qdot, qddot, q3)`` for fourth-order laws.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory


class IntegrationError(RuntimeError):
    def __init__(self, message, t):
        super().__init__(f"{message} at t={t!r}")
        self.t = t


class StiffnessError(IntegrationError):
    """Adaptive step size fell below ``h_min``."""


METHODS = ("RK4Fixed", "RK45Adaptive")


@dataclass(frozen=True)
class IntegratorOptions:
    method: str = "RK4Fixed"
    step: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-10
    h_min: float = 1e-12
    h_max: float = math.inf
    output_step: float = None
    blowup_norm: float = 1e12

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integration method {self.method!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.h_min <= self.h_max:
            raise ValueError("need 0 < h_min <= h_max")
        if self.output_step is not None and not self.output_step > 0:
            raise ValueError("output_step must be positive")


def _rk4(rhs, t, s, h):
    hh = 0.5 * h
    k1 = rhs(t, s)
    k2 = rhs(t + hh, s + hh * k1)
    k3 = rhs(t + hh, s + hh * k2)
    k4 = rhs(t + h, s + h * k3)
    k2 += k3
    k2 *= 2.0
    k2 += k1
    k2 += k4
    k2 *= h / 6.0
    return s + k2


def rk4_step(rhs, t, s, h):
    """One classical fourth-order Runge-Kutta step."""
    out = _rk4(rhs, t, s, h)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite right-hand side", t)
    return out


def _exceeds(y, limit2):
    ss = y @ y
    return not ss <= limit2


def _first_exceeding(Y, limit2):
    ss = np.einsum("ij,ij->i", Y, Y)
    bad = np.flatnonzero(~(ss <= limit2))
    return int(bad[0]) if bad.size else None


def _integrate_rk4(rhs, s0, t0, t_end, opts, chunk=64):
    n_steps = max(1, math.ceil((t_end - t0) / opts.step - 1e-9))
    h = (t_end - t0) / n_steps
    Y = np.empty((n_steps + 1, s0.shape[0]))
    Y[0] = s0
    limit2 = opts.blowup_norm**2
    first_bad = _first_exceeding(Y[:1], limit2)
    y = s0
    k = 0
    # norms are checked a chunk at a time; the run is cut at the first offender
    with np.errstate(over="ignore", invalid="ignore"):
        while first_bad is None and k < n_steps:
            stop = min(k + chunk, n_steps)
            for j in range(k + 1, stop + 1):
                y = _rk4(rhs, t0 + (j - 1) * h, y, h)
                Y[j] = y
            bad = _first_exceeding(Y[k + 1:stop + 1], limit2)
            if bad is not None:
                first_bad = k + 1 + bad
            k = stop
    n = n_steps + 1 if first_bad is None else first_bad + 1
    times = t0 + h * np.arange(n)
    if first_bad is None:
        times[-1] = t_end
    blowup = None if first_bad is None else float(times[-1])
    meta = {"integrator": "RK4Fixed", "step": h, "n_steps": n - 1, "uniform": True}
    return times, Y[:n], blowup, meta


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _hermite(t, ta, ya, fa, tb, yb, fb):
    h = tb - ta
    s = (t - ta) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * ya + h10 * h * fa + h01 * yb + h11 * h * fb


def _initial_step(rhs, t0, y0, f0, opts):
    scale = opts.atol + opts.rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = np.sqrt(np.mean(((rhs(t0 + h0, y1) - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, opts.h_max)


def _integrate_rk45(rhs, s0, t0, t_end, opts):
    limit2 = opts.blowup_norm**2
    out_dt = opts.output_step if opts.output_step is not None else (t_end - t0) / 1000
    n_out = max(1, math.ceil((t_end - t0) / out_dt - 1e-9))
    grid = t0 + (t_end - t0) * np.arange(n_out + 1) / n_out

    t, y = t0, s0
    f = rhs(t, y)
    samples = [s0]
    gi = 1
    blowup = t0 if _exceeds(y, limit2) else None
    h = _initial_step(rhs, t0, y, f, opts) if blowup is None else 0.0
    err_prev = 1e-4
    n_acc = n_rej = 0
    n = s0.shape[0]
    K = np.empty((7, n))
    while blowup is None and t < t_end:
        h = min(h, opts.h_max, t_end - t)
        if h < opts.h_min and t_end - t > opts.h_min:
            raise StiffnessError(f"step size {h:.3e} below h_min", t)
        K[0] = f
        for i in range(1, 7):
            K[i] = rhs(t + _C[i] * h, y + np.dot(_A[i], K[:i]) * h)
        # last stage row equals the 5th-order weights, so K[6] = rhs(t + h, y_new)
        y_new = y + np.dot(_B5[:6], K[:6]) * h
        scale = np.maximum(np.abs(y), np.abs(y_new))
        scale *= opts.rtol
        scale += opts.atol
        r = np.dot(_E, K) * h
        r /= scale
        err = math.sqrt(float(np.dot(r, r)) / n)
        if not math.isfinite(err) or not math.isfinite(float(np.sum(y_new))):
            n_rej += 1
            h *= 0.2
            if h < opts.h_min:
                blowup = t
            continue
        if err <= 1.0:
            t_new = t + h if t_end - (t + h) > 1e-12 * abs(t_end) else t_end
            f_new = K[6].copy()
            while gi <= n_out and grid[gi] <= t_new:
                samples.append(_hermite(grid[gi], t, y, f, t_new, y_new, f_new))
                gi += 1
            t, y, f = t_new, y_new, f_new
            n_acc += 1
            if _exceeds(y, limit2):
                blowup = t
                break
            fac = 0.9 * max(err, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** (-0.2))

    times = grid[: len(samples)].copy()
    Y = np.array(samples)
    uniform = True
    if blowup is not None and (len(times) == 0 or times[-1] < t):
        times = np.append(times, t)
        Y = np.vstack([Y, y])
        uniform = False
    meta = {
        "integrator": "RK45Adaptive",
        "step": float(times[1] - times[0]) if len(times) > 1 else None,
        "n_steps": n_acc,
        "n_rejected": n_rej,
        "rtol": opts.rtol,
        "atol": opts.atol,
        "uniform": uniform,
    }
    return times, Y, blowup, meta


def integrate(rhs, s0, t0, t_end, opts=None, dim=None):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t_end``.

    Returns a :class:`~cal.dynamics.Trajectory`. ``dim`` is the dimension of
    the position block (defaults to the full state, i.e. a first-order law).
    When the state norm exceeds ``opts.blowup_norm`` (or turns non-finite) the
    run stops and ``meta["diverged"]`` is set with ``meta["blowup_time"]``.
    """
    opts = opts or IntegratorOptions()
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    s0 = np.array(s0, dtype=np.float64).reshape(-1)
    dim = s0.shape[0] if dim is None else dim
    if opts.method == "RK4Fixed":
        times, Y, blowup, meta = _integrate_rk4(rhs, s0, t0, t_end, opts)
    else:
        times, Y, blowup, meta = _integrate_rk45(rhs, s0, t0, t_end, opts)
    meta["diverged"] = blowup is not None
    meta["blowup_time"] = blowup
    meta["blowup_norm"] = opts.blowup_norm
    return Trajectory(times, Y, dim, meta)
