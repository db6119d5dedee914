"""Linear stability of the learning laws around equilibria.

Near an equilibrium the potential is replaced by its Hessian; in the Hessian
eigenbasis every law decouples into scalar equations whose characteristic
polynomials have degree at most four.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import CollapsedEps, CollapsedTheta, DampedOscillator, GradientFlow, el_coefficients
from .lagrangian import CaseIISpec, FirstOrderLagrangian, SecondOrderSpec
from .potentials import ContractError

MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class CharPoly:
    """Real polynomial, highest degree coefficient first."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if not c or c[0] == 0:
            raise ContractError("leading coefficient must be non-zero")
        if len(c) > 5:
            raise ContractError("degree must be at most 4")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, s):
        return np.polyval(self.coeffs, s)


def characteristic_polynomial(spec, k_eigen):
    """Characteristic polynomial of ``spec`` linearized with ``V_q = k_eigen q``."""
    if k_eigen < 0:
        if k_eigen < -1e-12:
            raise ContractError("k_eigen must be non-negative")
        k_eigen = 0.0
    k = k_eigen
    if isinstance(spec, SecondOrderSpec):
        if spec.is_case_i:
            kin = spec.kinetic
            a1, a2, th = kin.alpha1, kin.alpha2, kin.theta
            c2 = (a1 * a2 * th + a2**2 * th**2 - a1**2) / (a2**2 * th**2)
            c1 = (a1 * a2 * th**2 - a1**2 * th) / (a2**2 * th**2)
            return CharPoly((1 / th**2, 2 / th, c2, c1, spec.gamma * k / a2**2))
        return CharPoly((*el_coefficients(spec), spec.gamma * k))
    if isinstance(spec, CaseIISpec):
        e, rho, nu = spec.eps_dis, spec.rho, spec.nu
        return CharPoly((e * e * rho, -2 * e * rho, rho - e * nu, nu, spec.gamma * k))
    if isinstance(spec, FirstOrderLagrangian):
        r1, _ = spec.weight.ratios()
        return CharPoly((spec.m, r1 * spec.m, -spec.gamma * k))
    if isinstance(spec, DampedOscillator):
        return CharPoly((spec.m, spec.theta, k))
    if isinstance(spec, GradientFlow):
        return CharPoly((spec.theta, k))
    if isinstance(spec, CollapsedTheta):
        return CharPoly((1.0, spec.alpha1 / spec.alpha2, spec.gamma * k / spec.alpha2**2))
    if isinstance(spec, CollapsedEps):
        return CharPoly((spec.rho, spec.nu, spec.gamma * k))
    raise ContractError(f"unsupported law {type(spec).__name__}")


def backward_error(p, root):
    """``|p(r)| / sum_i |c_i| |r|^(d-i)``, the scaled residual of a computed root."""
    c = np.asarray(p.coeffs)
    powers = np.abs(root) ** np.arange(p.degree, -1, -1)
    denom = np.sum(np.abs(c) * powers)
    return abs(np.polyval(c, root)) / denom if denom > 0 else 0.0


def polynomial_roots(p, tol=1e-9):
    """All complex roots (with multiplicity) via companion-matrix eigenvalues."""
    if p.degree < 1:
        raise ContractError("polynomial_roots needs degree >= 1")
    c = np.asarray(p.coeffs)
    d = p.degree
    comp = np.zeros((d, d))
    comp[0, :] = -c[1:] / c[0]
    comp[np.arange(1, d), np.arange(d - 1)] = 1.0
    roots = np.linalg.eigvals(comp).astype(complex)
    dc = np.polyder(c)
    for j, r in enumerate(roots):
        for _ in range(3):
            if backward_error(p, r) <= tol:
                break
            slope = np.polyval(dc, r)
            if slope == 0:
                break
            r = r - np.polyval(c, r) / slope
        roots[j] = r
    worst = max(backward_error(p, r) for r in roots)
    if worst > tol:
        raise ArithmeticError(f"root backward error {worst:.2e} exceeds {tol:.0e}")
    return roots[np.lexsort((roots.imag, roots.real))]


def _hurwitz(c):
    c = np.asarray(c, dtype=np.float64)
    if c[0] < 0:
        c = -c
    if np.any(c <= 0):
        return False
    d = len(c) - 1
    if d <= 2:
        return True
    if d == 3:
        a0, a1, a2, a3 = c
        return a1 * a2 > a0 * a3
    a0, a1, a2, a3, a4 = c
    return a1 * a2 > a0 * a3 and a1 * a2 * a3 > a0 * a3 * a3 + a1 * a1 * a4


def routh_hurwitz_stable(p):
    """True iff every root has negative real part (Routh-Hurwitz conditions).

    Degree 2: all coefficients of one sign. Degree 3 additionally
    ``a1 a2 > a0 a3``. Degree 4 additionally ``a1 a2 a3 > a0 a3^2 + a1^2 a4``.
    """
    if p.degree not in (2, 3, 4):
        raise ContractError("routh_hurwitz_stable supports degrees 2 to 4")
    return _hurwitz(p.coeffs)


@dataclass
class StabilityReport:
    law: str
    k_eigen: float
    coeffs: tuple
    roots: np.ndarray
    max_real_part: float
    hurwitz_stable: bool
    verdict: str
    params: dict = field(default_factory=dict)

    @property
    def stable(self):
        return self.verdict == "stable"

    def to_json(self):
        return {
            "law": self.law,
            "k_eigen": self.k_eigen,
            "coeffs": list(self.coeffs),
            "roots": [[float(r.real), float(r.imag)] for r in self.roots],
            "max_real_part": self.max_real_part,
            "hurwitz_stable": self.hurwitz_stable,
            "verdict": self.verdict,
            "params": self.params,
        }


def _params(spec):
    out = {}
    for name, value in vars(spec).items():
        if isinstance(value, (int, float)):
            out[name] = float(value)
        elif hasattr(value, "__dataclass_fields__") and name != "potential":
            out.update({f"{name}.{k}": float(v) for k, v in vars(value).items() if isinstance(v, (int, float))})
    return out


def report(spec, k_eigen):
    """Stability report for one Hessian eigenvalue."""
    p = characteristic_polynomial(spec, k_eigen)
    roots = polynomial_roots(p)
    mrp = float(np.max(roots.real))
    if abs(mrp) <= MARGINAL_TOL:
        verdict = "marginal"
    else:
        verdict = "stable" if mrp < 0 else "unstable"
    return StabilityReport(
        law=type(spec).__name__,
        k_eigen=float(k_eigen),
        coeffs=p.coeffs,
        roots=roots,
        max_real_part=mrp,
        hurwitz_stable=_hurwitz(p.coeffs),
        verdict=verdict,
        params=_params(spec),
    )


def classify(spec, p=None, equilibrium=None, t=0.0):
    """One :class:`StabilityReport` per Hessian eigenvalue at ``equilibrium``."""
    p = spec.potential if p is None else p
    if equilibrium is None:
        equilibrium = getattr(p, "center", np.zeros(p.dim))
    eq = np.asarray(equilibrium, dtype=np.float64)
    if np.linalg.norm(p.grad(eq, t)) > 1e-8:
        raise ContractError("classify needs an equilibrium (|grad V| <= 1e-8)")
    ks = np.linalg.eigvalsh(p.hessian(eq, t))
    return [report(spec, k) for k in ks]


def overall_verdict(reports):
    return combine_verdicts(r.verdict for r in reports)


def combine_verdicts(verdicts):
    verdicts = set(verdicts)
    if "unstable" in verdicts:
        return "unstable"
    if "marginal" in verdicts:
        return "marginal"
    return "stable"


def hausdorff(a, b):
    """Hausdorff distance between two finite sets of complex numbers."""
    a = np.asarray(a)[:, None]
    b = np.asarray(b)[None, :]
    d = np.abs(a - b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
