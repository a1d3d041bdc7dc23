"""Power-series form of the entry/exit map and the composition-matrix test.

If Pi(s) = sum pi_j s^j is realised by an analytic eigenvalue function with
a1(s) = sum_k v_k s^k (v_0 = 0), then A1(Pi(s)) = A1(s) gives, coefficient
by coefficient, (M - I) v = 0 with m_ij = [s^{i+1}] Pi(s)^{j+1}. A
nontrivial solution is necessary for Pi to be attainable. Only finite
truncations are formed here; the infinite matrix is not a bounded operator
on the natural sequence spaces, so no operator-level claims are made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate

from .exceptions import DomainError, QuadratureError
from .model import EigenvalueField

__all__ = [
    "SeriesMap",
    "CompositionMatrix",
    "FeasibilityVerdict",
    "power_coeffs",
    "power_coeffs_convolution",
    "build_matrix",
    "nullspace_truncated",
    "shift_obstruction",
    "UNCONSTRAINED",
    "TRIVIAL_ONLY",
    "NONTRIVIAL",
]

UNCONSTRAINED = "Unconstrained"
TRIVIAL_ONLY = "TrivialOnly"
NONTRIVIAL = "NontrivialNullspace"

DEFAULT_TRUNCATION = 16
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SeriesMap:
    """Coefficients pi_0..pi_n of Pi(s), zero-padded beyond the given ones."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(c) for c in self.coeffs)
        if not vals:
            raise ValueError("series needs at least one coefficient")
        if not all(math.isfinite(c) for c in vals):
            raise ValueError("series coefficients must be finite")
        object.__setattr__(self, "coeffs", vals)

    def padded(self, n: int) -> np.ndarray:
        """Coefficients 0..n (truncated or zero-padded)."""
        out = np.zeros(n + 1)
        m = min(n + 1, len(self.coeffs))
        out[:m] = self.coeffs[:m]
        return out


def power_coeffs_convolution(pi: SeriesMap, k: int, n: int) -> np.ndarray:
    """Coefficients 0..n of Pi(s)^k by repeated truncated multiplication."""
    if k < 0:
        raise ValueError("power must be >= 0")
    p = pi.padded(n)
    out = np.zeros(n + 1)
    out[0] = 1.0
    for _ in range(k):
        out = np.convolve(out, p)[: n + 1]
    return out


def power_coeffs(pi: SeriesMap, k: int, n: int, exact: bool = True) -> np.ndarray:
    """Coefficients 0..n of Pi(s)^k.

    Uses the recurrence obtained by differentiating P^k: with P = Pi,
    P (P^k)' = k P' P^k, giving
    c_j = (1 / (j p_0)) sum_{l=1}^{j} ((k + 1) l - j) p_l c_{j-l}.
    When p_0 = 0 the recurrence is undefined and repeated convolution is used.

    The recurrence divides by p_0 at every order and amplifies rounding
    errors (relative errors near 1e-10 at order 32 are typical in doubles),
    so by default it runs in exact rational arithmetic on the binary values
    of the coefficients and rounds once at the end. ``exact=False`` runs it
    in floating point.
    """
    if k < 1:
        raise ValueError("power must be >= 1")
    if n < 0:
        raise ValueError("order must be >= 0")
    p = pi.padded(n)
    if p[0] == 0.0:
        return power_coeffs_convolution(pi, k, n)
    if exact:
        pf = [Fraction(float(v)) for v in p]
        cf = [pf[0] ** k] + [Fraction(0)] * n
        for j in range(1, n + 1):
            acc = sum(((k + 1) * l - j) * pf[l] * cf[j - l] for l in range(1, j + 1) if pf[l])
            cf[j] = acc / (j * pf[0])
        return np.array([float(v) for v in cf])
    c = np.zeros(n + 1)
    c[0] = p[0] ** k
    for j in range(1, n + 1):
        acc = 0.0
        for l in range(1, j + 1):
            acc += ((k + 1) * l - j) * p[l] * c[j - l]
        c[j] = acc / (j * p[0])
    return c


@dataclass(frozen=True)
class CompositionMatrix:
    """Rows i = 1..rows and columns j = 1..n of m_ij = [s^{i+1}] Pi(s)^{j+1}.

    ``matrix`` has ``rows >= n``; the leading n x n block is the square
    truncation, further rows are extra coefficient equations.
    """

    source: SeriesMap
    n: int
    matrix: np.ndarray

    @property
    def square(self) -> np.ndarray:
        return self.matrix[: self.n, : self.n]

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    def system(self) -> np.ndarray:
        """M - I on the stored rows (I padded with zero rows)."""
        return self.matrix - np.eye(self.rows, self.n)


def build_matrix(pi: SeriesMap, n: int = DEFAULT_TRUNCATION, extra_rows: int | None = None) -> CompositionMatrix:
    """Truncated composition matrix, with ``extra_rows`` (default n) additional rows.

    A square truncation drops every equation that involves v_j beyond the
    cut, so e.g. for pi_1 = 1 the last column of M - I is always zero and
    the square block reports a spurious kernel. Keeping the equations for
    s^{n+2}..s^{2n+1} restores them for the unknowns kept.
    """
    if n < 2:
        raise ValueError("truncation must be >= 2")
    extra = n if extra_rows is None else int(extra_rows)
    if extra < 0:
        raise ValueError("extra_rows must be >= 0")
    rows = n + extra
    m = np.zeros((rows, n))
    for j in range(1, n + 1):
        c = power_coeffs(pi, j + 1, rows + 1)
        m[:, j - 1] = c[2: rows + 2]
    return CompositionMatrix(pi, n, m)


@dataclass(frozen=True)
class FeasibilityVerdict:
    verdict: str
    smallest_singular_value: float
    basis: tuple[tuple[float, ...], ...] = ()
    residuals: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "smallest_singular_value": self.smallest_singular_value}
        if self.verdict == NONTRIVIAL:
            out["basis"] = [list(b) for b in self.basis]
            out["residuals"] = list(self.residuals)
        return out


def nullspace_truncated(m: CompositionMatrix, tol: float = DEFAULT_TOL) -> FeasibilityVerdict:
    """Classify the solutions of (M - I) v = 0 on the truncation.

    Unconstrained when M equals the identity exactly (Pi(s) = s); TrivialOnly
    when the smallest singular value of M - I exceeds ``tol``; otherwise the
    right singular vectors below ``tol`` span the reported kernel. This is a
    necessary condition from a finite section only.
    """
    if not (1e-12 <= tol <= 1e-6):
        raise ValueError(f"tol must lie in [1e-12, 1e-6], got {tol}")
    a = m.system()
    if not np.any(a):
        return FeasibilityVerdict(UNCONSTRAINED, 0.0)
    _, sv, vt = np.linalg.svd(a)
    smin = float(sv[-1]) if sv.size == m.n else 0.0
    if smin > tol:
        return FeasibilityVerdict(TRIVIAL_ONLY, smin)
    basis, residuals = [], []
    for k in range(m.n):
        s = sv[k] if k < sv.size else 0.0
        if s <= tol:
            v = vt[k]
            basis.append(tuple(float(x) for x in v))
            residuals.append(float(np.linalg.norm(a @ v) / np.linalg.norm(v)))
    return FeasibilityVerdict(NONTRIVIAL, smin, tuple(basis), tuple(residuals))


def shift_obstruction(fld: EigenvalueField, m: float) -> float:
    """int_0^m a1(s) ds.

    A positive value rules out the reflected-and-shifted output
    mu0(-y + m): a shift would need the relief to vanish at m.
    """
    m = float(m)
    if not math.isfinite(m):
        raise DomainError(f"shift must be finite, got {m}")
    if not (fld.domain[0] <= m <= fld.domain[1]):
        raise DomainError(f"shift {m} outside field domain {fld.domain}")
    if m == 0.0:
        return 0.0
    val, err = integrate.quad(lambda s: float(fld.a1(s)), 0.0, m, epsabs=1e-14, epsrel=1e-13, limit=200)
    if not err <= 1e-11:
        raise QuadratureError(f"shift integral error {err:.3g}")
    return val


def parse_series(values: Sequence[float] | str) -> SeriesMap:
    if isinstance(values, str):
        values = [float(v) for v in values.split(",") if v.strip()]
    return SeriesMap(tuple(values))
