"""Fast-slow systems in reduced form and their eigenvalue fields.

All systems share the shape

    eps * x1' = a1(y) x1 - b1 x2 - x1 (x1^2 + x2^2) + eps * delta
    eps * x2' = b1 x1 + a1(y) x2 - x2 (x1^2 + x2^2)
          y'  = 1

so the linearisation along the critical manifold {x = 0} has eigenvalues
a1(y) -/+ i b1. The eigenvalue field fixes a1 and b1; everything else
(complex phase, buffer points, entry/exit map) is derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Sequence

import numpy as np

from .exceptions import DomainError

__all__ = [
    "EigenvalueField",
    "NormalForm",
    "ModifiedExp",
    "PolynomialReal",
    "PhaseBox",
    "FastSlowSystem",
    "AssumptionCheck",
    "AssumptionReport",
    "eval_fast",
    "eigenvalues_at",
    "check_assumptions",
]

DEFAULT_DOMAIN = (-10.0, 10.0)


class EigenvalueField:
    """Analytic eigenvalue lambda1(s) = a1(s) - i b1 along the critical manifold.

    Subclasses implement ``a1``/``da1`` for real or complex (numpy) input.
    ``lambda1`` is then the analytic continuation used by the phase and
    buffer computations.
    """

    tag: str = ""
    domain: tuple[float, float] = DEFAULT_DOMAIN
    b1: float = 1.0

    def a1(self, s):
        raise NotImplementedError

    def da1(self, s):
        raise NotImplementedError

    def d2a1(self, s):
        raise NotImplementedError

    def lambda1(self, tau):
        return self.a1(tau) - 1j * self.b1

    def dlambda1(self, tau):
        return self.da1(tau)

    def d2lambda1(self, tau):
        return self.d2a1(tau)

    @property
    def closed_form(self) -> bool:
        return False

    def phase_closed(self, tau):
        """Closed-form complex phase, or ``None`` when only quadrature applies."""
        return None

    def relief_sup(self) -> float:
        """Supremum of the real-axis relief on (0, inf); ``inf`` if unbounded or unknown."""
        return math.inf

    def in_domain(self, s: float) -> bool:
        lo, hi = self.domain
        return lo <= s <= hi

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class NormalForm(EigenvalueField):
    """Generic Hopf normal form, lambda1(s) = c s - i."""

    c: float = 1.0
    domain: tuple[float, float] = DEFAULT_DOMAIN
    tag = "NormalForm"

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"NormalForm needs c > 0, got {self.c}")
        _check_domain(self.domain)

    @property
    def b1(self) -> float:
        return 1.0

    def a1(self, s):
        return self.c * s

    def da1(self, s):
        return self.c + 0.0 * s

    def d2a1(self, s):
        return 0.0 * s

    @property
    def closed_form(self) -> bool:
        return True

    def phase_closed(self, tau):
        return 0.5 * self.c * tau * tau - 1j * tau

    def params(self) -> dict:
        return {"variant": self.tag, "c": self.c, "domain": list(self.domain)}


@dataclass(frozen=True)
class ModifiedExp(EigenvalueField):
    """Modified normal form with asymmetric contraction, lambda1(s) = e^{-as} s - i b."""

    a: float = 1.0
    b: float = 1.0
    domain: tuple[float, float] = DEFAULT_DOMAIN
    tag = "ModifiedExp"

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise DomainError(f"ModifiedExp needs a > 0, got {self.a}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise DomainError(f"ModifiedExp needs b > 0, got {self.b}")
        _check_domain(self.domain)

    @property
    def b1(self) -> float:
        return self.b

    def a1(self, s):
        return np.exp(-self.a * s) * s if _is_array(s) else _exp(-self.a * s) * s

    def da1(self, s):
        e = np.exp(-self.a * s) if _is_array(s) else _exp(-self.a * s)
        return e * (1.0 - self.a * s)

    def d2a1(self, s):
        e = np.exp(-self.a * s) if _is_array(s) else _exp(-self.a * s)
        return e * self.a * (self.a * s - 2.0)

    @property
    def closed_form(self) -> bool:
        return True

    def phase_closed(self, tau):
        a = self.a
        e = np.exp(-a * tau) if _is_array(tau) else _exp(-a * tau)
        return (1.0 - e * (a * tau + 1.0)) / (a * a) - 1j * self.b * tau

    def relief_sup(self) -> float:
        return 1.0 / (self.a * self.a)

    def params(self) -> dict:
        return {"variant": self.tag, "a": self.a, "b": self.b, "domain": list(self.domain)}


@dataclass(frozen=True)
class PolynomialReal(EigenvalueField):
    """a1 given by real polynomial coefficients (ascending powers), b1 constant."""

    coefficients: tuple[float, ...] = (0.0, 1.0)
    b: float = 1.0
    domain: tuple[float, float] = DEFAULT_DOMAIN
    tag = "PolynomialReal"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs or not all(math.isfinite(c) for c in coeffs):
            raise DomainError("PolynomialReal needs a non-empty list of finite coefficients")
        if not math.isfinite(self.b):
            raise DomainError(f"b1 must be finite, got {self.b}")
        object.__setattr__(self, "coefficients", coeffs)
        _check_domain(self.domain)

    @property
    def b1(self) -> float:
        return self.b

    def _eval(self, coeffs, s):
        out = 0.0 * s
        for c in reversed(coeffs):
            out = out * s + c
        return out

    def a1(self, s):
        return self._eval(self.coefficients, s)

    def da1(self, s):
        d = [k * c for k, c in enumerate(self.coefficients)][1:] or [0.0]
        return self._eval(d, s)

    def d2a1(self, s):
        d = [k * (k - 1) * c for k, c in enumerate(self.coefficients)][2:] or [0.0]
        return self._eval(d, s)

    def relief_sup(self) -> float:
        # No closed-form bound is claimed for user polynomials.
        return math.inf

    def params(self) -> dict:
        return {
            "variant": self.tag,
            "coefficients": list(self.coefficients),
            "b": self.b,
            "domain": list(self.domain),
        }


def _check_domain(domain):
    lo, hi = domain
    if not (lo < 0.0 < hi):
        raise DomainError(f"field domain must contain 0 in its interior, got {domain}")


def _is_array(s) -> bool:
    return isinstance(s, np.ndarray)


def _exp(z):
    if isinstance(z, complex):
        import cmath

        return cmath.exp(z)
    return math.exp(z)


@dataclass(frozen=True)
class PhaseBox:
    """Rectangular phase-space region the ODE is allowed to explore."""

    x_max: float = 1.0
    y_min: float = -3.0
    y_max: float = 3.0

    def contains(self, x1: float, x2: float, y: float) -> bool:
        return abs(x1) <= self.x_max and abs(x2) <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class FastSlowSystem:
    """Reduced (2,1) fast-slow system with slow equation y' = 1.

    ``delta`` scales the additive O(eps) term in the first fast component,
    which keeps {x = 0} from being invariant for eps > 0.
    """

    field: EigenvalueField
    delta: float = 0.1
    eps: float = 0.05
    box: PhaseBox = dc_field(default_factory=PhaseBox)
    cubic_sign: float = -1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise DomainError(f"delta must be >= 0, got {self.delta}")
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise DomainError(f"eps must be > 0, got {self.eps}")
        if self.cubic_sign != -1.0:
            raise DomainError("only the supercritical cubic (sign -1) is supported")

    def rhs(self, eps: float | None = None):
        """Plain-float right-hand side in slow time, (x1, x2, y) -> derivative tuple."""
        eps = self.eps if eps is None else eps
        a1 = self.field.a1
        b1 = self.field.b1
        forcing = eps * self.delta
        inv = 1.0 / eps

        def f(x1, x2, y):
            a = a1(y)
            r2 = x1 * x1 + x2 * x2
            return (
                (a * x1 - b1 * x2 - x1 * r2 + forcing) * inv,
                (b1 * x1 + a * x2 - x2 * r2) * inv,
                1.0,
            )

        return f


def eval_fast(system: FastSlowSystem, x: Sequence[float], y: float, eps: float | None = None) -> np.ndarray:
    """Fast vector field f(x1, x2, y, eps) (without the 1/eps factor)."""
    eps = system.eps if eps is None else eps
    x1, x2 = (float(v) for v in x)
    y = float(y)
    eps = float(eps)
    if not all(math.isfinite(v) for v in (x1, x2, y, eps)):
        raise DomainError("eval_fast received non-finite input")
    if not system.box.contains(x1, x2, y):
        raise DomainError(f"point ({x1}, {x2}, {y}) lies outside the phase-space box")
    fld = system.field
    a = float(fld.a1(y))
    b = fld.b1
    r2 = x1 * x1 + x2 * x2
    return np.array(
        [
            a * x1 - b * x2 - x1 * r2 + eps * system.delta,
            b * x1 + a * x2 - x2 * r2,
        ]
    )


def eigenvalues_at(fld: EigenvalueField, s: float) -> tuple[complex, complex]:
    """Conjugate eigenvalue pair (a1(s) - i b1, a1(s) + i b1)."""
    s = float(s)
    if not math.isfinite(s) or not fld.in_domain(s):
        raise DomainError(f"s={s} outside field domain {fld.domain}")
    a = float(fld.a1(s))
    b = float(fld.b1)
    return complex(a, -b), complex(a, b)


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    violation: float
    detail: str


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple[AssumptionCheck, ...]
    grid: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst_violation(self) -> float:
        return max((c.violation for c in self.checks if not c.passed), default=0.0)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "grid": list(self.grid),
            "checks": [
                {"name": c.name, "passed": c.passed, "violation": c.violation, "detail": c.detail}
                for c in self.checks
            ],
        }


def check_assumptions(system: FastSlowSystem, grid: Sequence[float]) -> AssumptionReport:
    """Run the checkable parts of (A1)-(A6) on a grid of slow-variable values.

    Every check is reported, pass or fail. The grid must contain 0 and
    points of both signs.
    """
    grid = tuple(float(s) for s in grid)
    if not grid:
        raise ValueError("assumption grid is empty")
    fld = system.field
    if any(not fld.in_domain(s) for s in grid):
        raise DomainError("assumption grid leaves the field domain")
    if 0.0 not in grid or not any(s < 0 for s in grid) or not any(s > 0 for s in grid):
        raise ValueError("assumption grid must contain 0 and points of both signs")

    checks = []
    s_arr = np.array(grid)
    a_vals = np.array([float(fld.a1(s)) for s in grid])

    # (A1): {x = 0} is the critical manifold.
    in_box = [s for s in grid if system.box.y_min <= s <= system.box.y_max]
    resid = max((float(np.max(np.abs(eval_fast(system, (0.0, 0.0), s, eps=0.0)))) for s in in_box), default=0.0)
    checks.append(AssumptionCheck("A1_critical_manifold", resid == 0.0, resid, "max |f(0, y, 0)| on grid"))

    # (A2): normal hyperbolicity away from s = 0.
    nz = s_arr != 0
    a2_ok = bool(np.all(a_vals[nz] != 0.0))
    checks.append(AssumptionCheck("A2_hyperbolic", a2_ok, 0.0 if a2_ok else 1.0, "a1(s) != 0 for s != 0"))

    # (A3): sign(a1) = sign(s), b1(0) > 0.
    bad = nz & (np.sign(a_vals) != np.sign(s_arr))
    mag = float(np.max(np.abs(a_vals[bad]))) if bad.any() else 0.0
    a3_sign_ok = not bad.any()
    if bad.any() and mag == 0.0:
        mag = float(np.min(np.abs(s_arr[bad])))
    checks.append(AssumptionCheck(
        "A3_sign", a3_sign_ok, mag,
        "sign(a1(s)) == sign(s)" + ("" if a3_sign_ok else f"; fails at {int(bad.sum())} grid points"),
    ))
    a0 = float(fld.a1(0.0))
    checks.append(AssumptionCheck("A3_a1_zero", a0 == 0.0, abs(a0), "a1(0) == 0"))
    b0 = float(fld.b1)
    checks.append(AssumptionCheck("A3_b1_positive", b0 > 0, max(0.0, -b0), "b1(0) > 0"))

    # (A4): transversality by central difference; the cubic coefficient is fixed at -1.
    h = 1e-5
    slope = (float(fld.a1(h)) - float(fld.a1(-h))) / (2 * h)
    trans_ok = abs(slope) > 1e-8
    checks.append(AssumptionCheck(
        "A4_transversal", trans_ok, 0.0 if trans_ok else 1e-8 - abs(slope), f"da1/ds(0) ~ {slope:.6g}"
    ))
    checks.append(AssumptionCheck("A4_lyapunov", True, 0.0, "first Lyapunov coefficient sign -1 (supercritical)"))

    # (A5): reduced slow flow.
    checks.append(AssumptionCheck("A5_slow_flow", True, 0.0, "slow equation is y' = 1"))

    # (A6): perturbation breaks invariance of {x = 0}.
    a6_ok = system.delta > 0
    checks.append(AssumptionCheck("A6_not_invariant", a6_ok, 0.0 if a6_ok else 1.0, f"delta = {system.delta}"))

    return AssumptionReport(tuple(checks), grid)
