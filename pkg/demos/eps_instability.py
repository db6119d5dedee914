"""
A decaying weight and its singular limit
========================================

With h = exp(-t/eps) the fourth-order law has characteristic polynomial
eps^2 rho s^4 - 2 eps rho s^3 + (rho - eps nu) s^2 + nu s + gamma k. Its roots
sum to 2/eps, so some root always has a positive real part, while the
eps -> 0 law rho q'' + nu q' + gamma V'(q) = 0 is a stable damped oscillator.
"""

import numpy as np

from cal import CaseIISpec, IntegratorOptions, Quadratic, classify, integrate
from cal.dynamics import collapse, law_field, matched_initial_state
from cal.stability import overall_verdict

K = Quadratic([[1.0]])
opts = IntegratorOptions(step=1e-3)

for eps in (0.5, 0.1, 0.02):
    spec = CaseIISpec(rho=1.0, nu=1.0, eps_dis=eps, potential=K)
    rep = classify(spec)[0]
    s0 = matched_initial_state(spec, [1.0], [0.0])
    traj = integrate(law_field(spec)[0], s0.flat(), 0.0, 20.0, opts, dim=1)
    print(f"eps = {eps:<5g} max Re(root) = {rep.max_real_part:8.3f}   blow-up at t = {traj.meta['blowup_time']}")

lim = collapse(CaseIISpec(1.0, 1.0, 0.1, K))
traj = integrate(law_field(lim)[0], [1.0, 0.0], 0.0, 50.0, opts, dim=1)
print("collapsed law:", overall_verdict(classify(lim)), f" |q(50)| = {abs(traj.q[-1, 0]):.1e}")

# Closeness is lost on long horizons: the gap grows with t_end at fixed eps
spec = CaseIISpec(1.0, 1.0, 0.1, K)
s0 = matched_initial_state(spec, [1.0], [0.0])
for t_end in (0.5, 1.0, 2.0):
    a = integrate(law_field(spec)[0], s0.flat(), 0.0, t_end, opts, dim=1)
    b = integrate(law_field(lim)[0], s0.flat(2), 0.0, t_end, opts, dim=1)
    print(f"t_end = {t_end}: gap {np.max(np.abs(a.q - b.q)):.2e}")
