"""
Second-order kinetic energy with a growing weight
=================================================

With T = |alpha1 q' + alpha2 q''|^2 / (2 theta^2) and h = exp(theta t) the
Euler-Lagrange equation is fourth order. As theta grows its solutions,
started from Cauchy data consistent with the limit, approach the damped law
q'' + (alpha1/alpha2) q' + (gamma/alpha2^2) V'(q) = 0.
"""

import numpy as np

from cal import IntegratorOptions, Quadratic, SecondOrderKinetic, SecondOrderSpec, integrate
from cal.dynamics import collapse, law_field, matched_initial_state
from cal.stability import characteristic_polynomial, hausdorff, polynomial_roots, report

K = Quadratic([[1.0]])
opts = IntegratorOptions(method="RK45Adaptive", rtol=1e-10, atol=1e-12, output_step=1e-3)

limit_roots = None
reference = None
for theta in (10.0, 100.0, 1000.0):
    spec = SecondOrderSpec(SecondOrderKinetic(1.0, 1.0, theta), K)
    s0 = matched_initial_state(spec, [1.0], [0.0])
    if reference is None:
        lim = collapse(spec)
        reference = integrate(law_field(lim)[0], s0.flat(2), 0.0, 5.0, opts, dim=1)
        limit_roots = polynomial_roots(characteristic_polynomial(lim, 1.0))
    traj = integrate(law_field(spec)[0], s0.flat(), 0.0, 5.0, opts, dim=1)
    roots = polynomial_roots(characteristic_polynomial(spec, 1.0))
    slow = roots[np.argsort(np.abs(roots))[:2]]
    print(f"theta = {theta:<6g} verdict {report(spec, 1.0).verdict:<8} "
          f"trajectory gap {np.max(np.abs(traj.q - reference.q)):.3e}  slow-root gap {hausdorff(slow, limit_roots):.3e}")

# Small theta is not automatically stable
for theta in (1.0, 4.0):
    print(f"theta = {theta}: ", report(SecondOrderSpec(SecondOrderKinetic(1.0, 1.0, theta), K), 1.0).verdict)
