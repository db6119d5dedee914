"""Learning laws from weighted action functionals.

Potentials, weighted Lagrangians, their Euler-Lagrange dynamics (second and
fourth order, with the collapsed second-order limits), Runge-Kutta
integration, the discretized action with gradient descent on path space, and
linear stability analysis.
"""

from .potentials import ContractError, EmpiricalRisk, Potential, Quadratic, Rosenbrock
from .lagrangian import (
    CaseIISpec,
    Const1,
    ExpNeg,
    ExpPos,
    FirstOrderLagrangian,
    SecondOrderKinetic,
    SecondOrderSpec,
    integrand,
    kinetic_eval,
    lagrangian_partials,
)
from .dynamics import State4, Trajectory
from .integrate import IntegratorOptions, integrate, rk4_step
from .discrete import DiscreteLagrangian, DiscretePath, action, action_gradient, discrete_el_residual
from .stability import CharPoly, characteristic_polynomial, classify, polynomial_roots, routh_hurwitz_stable

__version__ = "0.1.0"
