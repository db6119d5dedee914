"""
Damped oscillator and its gradient-flow limit
=============================================

A first-order Lagrangian with weight exp(theta t / m) gives the damped
oscillator m q'' + theta q' + V'(q) = 0. Shrinking the mass at fixed
damping leaves the gradient flow q' = -V'(q) / theta.
"""

import numpy as np

from cal import FirstOrderLagrangian, IntegratorOptions, Quadratic, integrate
from cal.dynamics import DampedOscillator, GradientFlow, damped_oscillator_exact, first_order_el_rhs, law_field

K = Quadratic([[1.0]])

# The mechanics reading of the weighted Lagrangian reproduces the oscillator
spec = FirstOrderLagrangian.mechanics(m=1.0, theta=0.3, potential=K)
print("weight:", spec.weight, " gamma:", spec.gamma)
print("acceleration at q=1, q'=0:", first_order_el_rhs(spec, None, 0.0, np.array([1.0]), np.array([0.0])))

# Integrate with fixed-step RK4 and compare with the closed form
f, _ = law_field(DampedOscillator(1.0, 0.3, K))
traj = integrate(f, [1.0, 0.0], 0.0, 20.0, IntegratorOptions(step=1e-3), dim=1)
exact, _ = damped_oscillator_exact(1.0, 0.3, K, [1.0], [0.0], traj.times)
print(f"RK4 sup error on [0, 20]: {np.max(np.abs(traj.q - exact)):.2e}")

# Now let the mass go to zero
opts = IntegratorOptions(method="RK45Adaptive", rtol=1e-9, atol=1e-11, output_step=1e-2)
flow = integrate(law_field(GradientFlow(10.0, K))[0], [1.0], 0.0, 5.0, opts)
late = flow.times >= 0.5
for m in (1e-1, 1e-2, 1e-3):
    osc = integrate(law_field(DampedOscillator(m, 10.0, K))[0], [1.0, 0.0], 0.0, 5.0, opts, dim=1)
    print(f"m = {m:g}: distance to gradient flow after t = 0.5 is {np.max(np.abs(osc.q[late] - flow.q[late])):.2e}")
