"""Acceptance criteria, one test each, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from cal.discrete import (
    DiscreteLagrangian,
    DiscretePath,
    action,
    action_gradient,
    discrete_el_residual,
    gradient_flow_minimize,
)
from cal.dynamics import (
    CollapsedEps,
    DampedOscillator,
    GradientFlow,
    State4,
    boundary_residuals_generic,
    boundary_residuals_printed,
    collapse,
    d_dt_La_over_h,
    damped_oscillator_exact,
    law_field,
    matched_initial_state,
    oscillator_energy,
    ostrogradsky_energy,
)
from cal.integrate import IntegratorOptions, integrate
from cal.lagrangian import CaseIISpec, Const1, FirstOrderLagrangian, SecondOrderKinetic, SecondOrderSpec
from cal.potentials import Quadratic, Rosenbrock
from cal.stability import CharPoly, classify, overall_verdict, polynomial_roots, routh_hurwitz_stable

K1 = Quadratic([[1.0]])


@pytest.fixture
def verdict(capsys):
    def emit(num, name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} [{num:2d}] {name}: {detail}")
        assert ok, detail

    return emit


def run(law, s0, t_end, opts):
    f, _ = law_field(law)
    return integrate(f, s0, 0.0, t_end, opts, dim=law.potential.dim)


def test_01_oscillator_fidelity(verdict):
    start = time.perf_counter()
    traj = run(DampedOscillator(1.0, 0.3, K1), [1.0, 0.0], 20.0, IntegratorOptions(step=1e-3))
    elapsed = time.perf_counter() - start
    g = 0.15
    w = np.sqrt(1 - g * g)
    exact = np.exp(-g * traj.times) * (np.cos(w * traj.times) + (g / w) * np.sin(w * traj.times))
    err = np.max(np.abs(traj.q[:, 0] - exact))
    verdict(1, "oscillator fidelity", err <= 1e-6 and elapsed < 1.0, f"sup error {err:.2e}, runtime {elapsed:.2f} s")


def test_02_gradient_flow_limit(verdict):
    start = time.perf_counter()
    theta, q0 = 10.0, np.array([1.0])
    opts = IntegratorOptions(method="RK45Adaptive", rtol=1e-10, atol=1e-12, output_step=1e-3)
    flow = run(GradientFlow(theta, K1), q0, 10.0, opts)
    mask = flow.times >= 0.5
    dists = []
    for m in (1e-1, 1e-2, 1e-3):
        osc = run(DampedOscillator(m, theta, K1), [1.0, 0.0], 10.0, opts)
        dists.append(np.max(np.abs(osc.q[mask] - flow.q[mask])))
    elapsed = time.perf_counter() - start
    ok = dists[0] > dists[1] > dists[2] and elapsed < 5.0
    verdict(2, "gradient-flow limit", ok, f"distances {[f'{d:.3e}' for d in dists]}, runtime {elapsed:.2f} s")


def test_03_discrete_gradient_exactness(verdict, rng):
    L = DiscreteLagrangian(FirstOrderLagrangian.mechanics(1.2, 0.3, Rosenbrock()))
    worst = 0.0
    for _ in range(100):
        path = DiscretePath(rng.uniform(-1.0, 1.0, (6, 2)), rng.uniform(0.05, 0.5))
        g = action_gradient(path, L)
        fd = np.zeros_like(g)
        for idx in np.ndindex(g.shape):
            Xp, Xm = path.values.copy(), path.values.copy()
            Xp[idx] += 1e-6
            Xm[idx] -= 1e-6
            fd[idx] = (action(path.with_values(Xp), L) - action(path.with_values(Xm), L)) / 2e-6
        worst = max(worst, np.max(np.abs(fd - g)) / max(1.0, np.max(np.abs(g))))
    verdict(3, "discrete gradient exactness", worst <= 1e-6, f"max rel err {worst:.2e} over 100 paths")


def test_04_stationarity_equivalence(verdict, rng):
    L = DiscreteLagrangian(FirstOrderLagrangian(1.0, 1.0, Quadratic([[1.0]])))
    path0 = DiscretePath(rng.standard_normal(12), 0.25)
    path, rep = gradient_flow_minimize(path0, L, eta=0.05, tol=1e-10, max_iters=500_000)
    res = np.max(np.abs(discrete_el_residual(path, L)))
    ok = rep.converged and rep.grad_norm <= 1e-10 and res <= 1e-8
    verdict(4, "stationarity equivalence", ok, f"{rep.iterations} iterations, |grad| {rep.grad_norm:.1e}, residual {res:.1e}")


def test_05_discretization_consistency(verdict):
    m, theta, T = 1.0, 0.3, 2.0
    L = DiscreteLagrangian(FirstOrderLagrangian.mechanics(m, theta, K1))
    maxes = []
    for eps in (0.1, 0.05, 0.025, 0.0125):
        t = np.arange(round(T / eps) + 1) * eps
        q, _ = damped_oscillator_exact(m, theta, K1, [1.0], [0.0], t)
        maxes.append(np.max(np.abs(discrete_el_residual(DiscretePath(q, eps), L))))
    ratios = [a / b for a, b in zip(maxes, maxes[1:])]
    ok = all(abs(r / 2.0 - 1.0) <= 0.2 for r in ratios)
    verdict(5, "discretization consistency", ok, f"halving ratios {[f'{r:.3f}' for r in ratios]}")


def test_06_theta_collapse(verdict):
    opts = IntegratorOptions(method="RK45Adaptive", rtol=1e-10, atol=1e-12, output_step=1e-3)
    dists, lim = [], None
    for th in (10.0, 100.0, 1000.0):
        spec = SecondOrderSpec(SecondOrderKinetic(1.0, 1.0, th), K1)
        s0 = matched_initial_state(spec, [1.0], [0.0])
        if lim is None:
            lim = run(collapse(spec), s0.flat(2), 5.0, opts)
        traj = run(spec, s0.flat(), 5.0, opts)
        dists.append(np.max(np.abs(traj.q - lim.q)))
    ok = dists[0] > dists[1] > dists[2]
    verdict(6, "theta collapse", ok, f"distances {[f'{d:.3e}' for d in dists]}")


def test_07_eps_instability(verdict):
    opts = IntegratorOptions(step=1e-3)
    notes, ok, times = [], True, []
    for eps in (0.5, 0.1, 0.02):
        spec = CaseIISpec(1.0, 1.0, eps, K1)
        reps = classify(spec)
        s0 = matched_initial_state(spec, [1.0], [0.0])
        traj = run(spec, s0.flat(), 20.0, opts)
        ok &= overall_verdict(reps) == "unstable" and reps[0].max_real_part > 0 and traj.diverged
        times.append(traj.meta["blowup_time"])
        notes.append(f"eps={eps}: max Re {reps[0].max_real_part:.3f}, blowup t={times[-1]}")
    ok &= None not in times and times[0] > times[1] > times[2]
    lim = CollapsedEps(1.0, 1.0, 1.0, K1)
    traj = run(lim, [1.0, 0.0], 50.0, opts)
    ok &= overall_verdict(classify(lim)) == "stable" and abs(traj.q[-1, 0]) <= 1e-8
    notes.append(f"collapsed law stable, |q(50)| = {abs(traj.q[-1, 0]):.1e}")
    verdict(7, "eps instability", ok, "; ".join(notes))


def test_08_routh_hurwitz_agreement(verdict, rng):
    mismatches, n_stable = 0, 0
    for _ in range(100):
        roots = []
        while len(roots) < 4:
            re = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 3.0)
            if len(roots) <= 2 and rng.random() < 0.6:
                im = rng.uniform(0.1, 3.0)
                roots += [complex(re, im), complex(re, -im)]
            else:
                roots.append(complex(re, 0.0))
        p = CharPoly(np.real(np.poly(roots)))
        mrp = np.max(polynomial_roots(p).real)
        if abs(mrp) <= 1e-9:
            continue
        n_stable += mrp < 0
        mismatches += routh_hurwitz_stable(p) != (mrp < 0)
    verdict(8, "Routh-Hurwitz agreement", mismatches == 0, f"{mismatches} mismatches, {n_stable} stable of 100")


def test_09_conservation(verdict):
    opts = IntegratorOptions(step=1e-3)
    traj = run(DampedOscillator(1.0, 0.0, K1), [1.0, 0.0], 10.0, opts)
    E = np.array([oscillator_energy(1.0, K1, 0.0, q, v) for q, v in zip(traj.q, traj.qdot)])
    drift = np.max(np.abs(E - E[0])) / abs(E[0])
    spec = SecondOrderSpec(SecondOrderKinetic(0.5, 1.0, 1.0), Quadratic([[0.01]]), weight=Const1())
    traj = run(spec, [1.0, 0.1, -0.2, 0.05], 10.0, opts)
    H = np.array([ostrogradsky_energy(spec, t, traj.state(i)) for i, t in enumerate(traj.times)])
    hdrift = np.max(np.abs(H - H[0])) / abs(H[0])
    ok = drift <= 1e-6 and hdrift <= 1e-4
    verdict(9, "conservation", ok, f"oscillator drift {drift:.1e}, Ostrogradsky drift {hdrift:.1e}")


def test_10_boundary_residuals(verdict):
    zero = State4(np.array([0.7]), np.zeros(1), np.zeros(1), np.zeros(1))
    ok = True
    specs = [SecondOrderSpec(SecondOrderKinetic(1.0, 1.0, 4.0), K1), CaseIISpec(1.0, 1.0, 0.5, K1)]
    for spec in specs:
        for r in (*boundary_residuals_printed(spec, zero), *boundary_residuals_generic(spec, 3.0, zero)):
            ok &= not np.any(r)
    worst = 0.0
    for spec in specs:
        s0 = matched_initial_state(spec, [1.0], [0.3])
        traj = run(spec, s0.flat(), 1.0, IntegratorOptions(step=1e-3))
        h = spec.weight.value(traj.times)
        La = np.array([spec.bar_partials(t, traj.q[i], traj.qdot[i], traj.qddot[i])[2]
                       for i, t in enumerate(traj.times)]) * h[:, None]
        dt = traj.times[1] - traj.times[0]
        fd = (La[2:] - La[:-2]) / (2 * dt) / h[1:-1, None]
        exact = np.array([d_dt_La_over_h(spec, traj.state(i)) for i in range(1, len(traj) - 1)])
        worst = max(worst, np.max(np.abs(fd - exact)))
    ok &= worst <= 1e-5
    verdict(10, "boundary residuals", ok, f"zero jet gives zeros: {ok}, d/dt L_a abs err {worst:.1e}")
