"""Complex phase, relief function and the entry/exit map.

The complex phase is Psi(tau) = int_0^tau lambda1(s) ds (the slow flow is
y' = 1, so the slow trajectory through 0 is xi(s) = s). Its real part, the
relief, balances contraction before the Hopf point against expansion after
it: a trajectory entering at tau0 < 0 leaves at the first tau* > 0 with
Re Psi(tau*) = Re Psi(tau0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import DomainError, DomainExhausted, QuadratureError
from .model import EigenvalueField, ModifiedExp, NormalForm

__all__ = [
    "ComplexPhase",
    "Jump",
    "BufferEscape",
    "complex_phase",
    "relief",
    "entry_exit",
    "exit_map",
    "entry_for_exit",
    "relief_grid",
]

BRACKET_START = 1e-6
BRACKET_WIDTH = 1e-12


@dataclass(frozen=True)
class ComplexPhase:
    """Phase integral of an eigenvalue field with its quadrature settings."""

    field: EigenvalueField
    atol: float = 1e-11
    limit: int = 200

    @property
    def closed_form(self) -> bool:
        return self.field.closed_form

    def __call__(self, tau) -> complex:
        return complex_phase(self, tau)

    def quadrature(self, tau) -> complex:
        """Psi(tau) by adaptive Gauss-Kronrod along the straight segment [0, tau]."""
        tau = complex(tau)
        if tau == 0:
            return 0j
        lam = self.field.lambda1

        def integrand(t):
            return complex(lam(t * tau)) * tau

        with warnings.catch_warnings():
            # the error estimate is checked below; quadpack's roundoff notice adds nothing
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                integrand, 0.0, 1.0, complex_func=True, epsabs=self.atol * 1e-2, epsrel=1e-13, limit=self.limit
            )
        if not (abs(err) <= self.atol) or not np.isfinite(val):
            raise QuadratureError(f"phase quadrature at tau={tau} reached error {err:.3g} > {self.atol:.3g}")
        return complex(val)

    def real_relief(self, s: float) -> float:
        """Relief on the real axis, A1(s) = int_0^s a1."""
        fld = self.field
        if isinstance(fld, NormalForm):
            return 0.5 * fld.c * s * s
        if isinstance(fld, ModifiedExp):
            a = fld.a
            return (1.0 - math.exp(-a * s) * (a * s + 1.0)) / (a * a)
        if s == 0.0:
            return 0.0
        val, err = integrate.quad(lambda t: float(fld.a1(t)), 0.0, s, epsabs=self.atol * 1e-2, epsrel=1e-13,
                                  limit=self.limit)
        if not abs(err) <= self.atol:
            raise QuadratureError(f"relief quadrature at s={s} reached error {err:.3g}")
        return val


def complex_phase(phase: ComplexPhase, tau) -> complex:
    """Psi(tau); closed form for library fields, quadrature otherwise."""
    if tau == 0:
        return 0j
    tau = complex(tau)
    if not (math.isfinite(tau.real) and math.isfinite(tau.imag)):
        raise DomainError(f"non-finite tau {tau}")
    if phase.closed_form:
        return complex(phase.field.phase_closed(tau))
    return phase.quadrature(tau)


def relief(phase: ComplexPhase, u: float, v: float) -> float:
    """Relief function U(u, v) = Re Psi(u + i v), normalised so U(0, 0) = 0."""
    fld = phase.field
    if isinstance(fld, NormalForm):
        c = fld.c
        return 0.5 * c * (u * u - v * v) + v
    if isinstance(fld, ModifiedExp):
        a, b = fld.a, fld.b
        return 1.0 / (a * a) + b * v - math.exp(-a * u) * (
            (a * u + 1.0) * math.cos(a * v) + a * v * math.sin(a * v)
        ) / (a * a)
    if v == 0.0:
        return phase.real_relief(u)
    return complex_phase(phase, complex(u, v)).real


def relief_grid(phase: ComplexPhase, us, vs) -> np.ndarray:
    """Relief on a tensor grid, shape (len(vs), len(us)); row-major over v then u."""
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if phase.closed_form:
        U, V = np.meshgrid(us, vs)
        tau = U + 1j * V
        return np.real(phase.field.phase_closed(tau))
    return np.array([[relief(phase, u, v) for u in us] for v in vs])


@dataclass(frozen=True)
class Jump:
    """Trajectory jumps away from the critical manifold at ``tau_star``."""

    tau_star: float
    residual: float

    kind = "Jump"

    @property
    def exit_time(self) -> float:
        return self.tau_star


@dataclass(frozen=True)
class BufferEscape:
    """No balance point before ``tau_plus``; the trajectory leaves at the buffer time.

    ``tau_plus = inf`` records an unbounded delay (the relief never climbs back).
    """

    tau_plus: float

    kind = "BufferEscape"

    @property
    def exit_time(self) -> float:
        return self.tau_plus


def _bisect_increasing(fun, target, lo, hi):
    """Bisection for fun(s) = target with fun increasing, bracket [lo, hi]."""
    while hi - lo > BRACKET_WIDTH * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fun(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bracket_positive(fun, target, limit):
    """Geometric bracket expansion from [k, 2k] on (0, limit] for an increasing fun.

    Returns (lo, hi) with fun(lo) < target <= fun(hi), or None when the
    target is not reached before ``limit``.
    """
    lo, hi = 0.0, BRACKET_START
    if hi >= limit:
        hi = limit
    while fun(hi) < target:
        if hi >= limit:
            return None
        lo, hi = hi, min(2.0 * hi, limit)
    return lo, hi


def entry_exit(phase: ComplexPhase, tau0: float, tau_plus: float | None = None):
    """Singular-limit exit time for a trajectory entering at ``tau0 < 0``.

    Returns ``Jump(tau_star)`` when the relief balances before the buffer
    time (or before the domain end), otherwise ``BufferEscape``. Without a
    buffer time, an escape is only reported when the field's known relief
    supremum proves no balance exists; otherwise ``DomainExhausted``.
    """
    tau0 = float(tau0)
    fld = phase.field
    if not tau0 < 0:
        raise DomainError(f"entry time must be negative, got {tau0}")
    if not fld.in_domain(tau0):
        raise DomainError(f"entry time {tau0} outside field domain {fld.domain}")
    level = phase.real_relief(tau0)
    if not level > 0:
        raise DomainError(f"relief at entry time {tau0} is {level}, expected > 0")

    limit = fld.domain[1] if tau_plus is None else min(float(tau_plus), fld.domain[1])
    fun = phase.real_relief
    bracket = _bracket_positive(fun, level, limit)
    if bracket is None:
        if tau_plus is not None:
            return BufferEscape(float(tau_plus))
        if fld.relief_sup() <= level:
            return BufferEscape(math.inf)
        raise DomainExhausted(
            f"no exit found for tau0={tau0} on (0, {limit}] and no buffer time supplied"
        )
    tau_star = _bisect_increasing(fun, level, *bracket)
    residual = abs(fun(tau_star) - level)
    return Jump(tau_star, residual)


def exit_map(phase: ComplexPhase, tau0: float, tau_plus: float | None = None) -> float:
    """min(Pi(tau0), tau_plus) as a plain number."""
    return entry_exit(phase, tau0, tau_plus).exit_time


def entry_for_exit(phase: ComplexPhase, tau_star: float) -> float:
    """Inverse map: the unique tau0 < 0 with Pi(tau0) = tau_star.

    Raises ``DomainExhausted`` when the relief on the negative axis never
    reaches the level before the domain's lower end.
    """
    tau_star = float(tau_star)
    if not tau_star > 0:
        raise DomainError(f"exit time must be positive, got {tau_star}")
    level = phase.real_relief(tau_star)
    lower = phase.field.domain[0]

    def fun(s):
        return phase.real_relief(-s)

    bracket = _bracket_positive(fun, level, -lower)
    if bracket is None:
        raise DomainExhausted(f"relief never reaches {level:.6g} on [{lower}, 0)")
    return -_bisect_increasing(fun, level, *bracket)
