"""Input measures, singular-limit pushforward mixtures and their moments.

In the singular limit every entry time tau0 is sent to min(Pi(tau0), tau+).
Entry times below tau- (the preimage of the buffer time) pile up in an atom
at tau+; the rest are transported by Pi. Two moment routes are provided:

* ``moments_pushforward`` integrates min(Pi(s), tau+)^q against mu0 in
  entry-time coordinates (the independent oracle);
* ``moments_published_uniform`` / ``moments_published_exp`` evaluate the published
  closed forms verbatim, including their normalisation of the continuous
  part, so the two routes differ in the full-mixture cases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .exceptions import DomainError, DomainExhausted, QuadratureError
from .model import NormalForm
from .phase import ComplexPhase, entry_exit, entry_for_exit

__all__ = [
    "Uniform",
    "ShiftedExponential",
    "Empirical",
    "ReflectedPart",
    "TransportedPart",
    "EmpiricalPart",
    "MixtureOutput",
    "MomentVector",
    "pushforward_singular",
    "moments_pushforward",
    "moment_vector",
    "moments_published_uniform",
    "moments_published_exp",
    "incomplete_gamma_upper",
    "parse_measure",
]

log = logging.getLogger(__name__)

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
TABLE_POINTS = 512


class InputMeasure:
    """Distribution of the entry time tau0, supported in (-inf, -kappa]."""

    tag = ""

    def cdf(self, s):
        raise NotImplementedError

    def pdf(self, s):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def kappa(self) -> float:
        return -self.support()[1]

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def mass(self) -> float:
        lo, hi = self.support()
        val, _ = integrate.quad(self.pdf, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        return val

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(InputMeasure):
    """Uniform density 1/(b - a) on [-b, -a], with b > a > 0."""

    a: float
    b: float
    tag = "Uniform"

    def __post_init__(self):
        if not (0 < self.a < self.b and math.isfinite(self.b)):
            raise DomainError(f"Uniform needs b > a > 0, got a={self.a}, b={self.b}")

    def cdf(self, s):
        return np.clip((np.asarray(s, dtype=float) + self.b) / (self.b - self.a), 0.0, 1.0)[()]

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where((s >= -self.b) & (s <= -self.a), 1.0 / (self.b - self.a), 0.0)[()]

    def support(self):
        return (-self.b, -self.a)

    def sample(self, rng, size=None):
        return rng.uniform(-self.b, -self.a, size=size)

    def mass(self) -> float:
        # Piecewise-constant density: integrate over the support only.
        val, _ = integrate.quad(self.pdf, -self.b, -self.a, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL)
        return val

    def params(self):
        return {"variant": self.tag, "a": self.a, "b": self.b, "support": [-self.b, -self.a]}


@dataclass(frozen=True)
class ShiftedExponential(InputMeasure):
    """Density beta^{-1} exp((s + a)/beta) on (-inf, -a]."""

    a: float
    beta: float
    tag = "ShiftedExponential"

    def __post_init__(self):
        if not (self.a > 0 and self.beta > 0 and math.isfinite(self.a) and math.isfinite(self.beta)):
            raise DomainError(f"ShiftedExponential needs a, beta > 0, got a={self.a}, beta={self.beta}")

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= -self.a, 1.0, np.exp((np.minimum(s, -self.a) + self.a) / self.beta))[()]

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= -self.a, np.exp((np.minimum(s, -self.a) + self.a) / self.beta) / self.beta, 0.0)[()]

    def support(self):
        return (-math.inf, -self.a)

    def sample(self, rng, size=None):
        return -self.a - rng.exponential(self.beta, size=size)

    def params(self):
        return {"variant": self.tag, "a": self.a, "beta": self.beta, "support": [None, -self.a]}


@dataclass(frozen=True)
class Empirical(InputMeasure):
    """Equal-weight atoms at the given (negative) samples."""

    samples: tuple[float, ...]
    tag = "Empirical"

    def __post_init__(self):
        vals = tuple(float(s) for s in self.samples)
        if not vals:
            raise DomainError("Empirical measure needs at least one sample")
        if not all(math.isfinite(s) and s < 0 for s in vals):
            raise DomainError("Empirical samples must be finite and negative")
        object.__setattr__(self, "samples", tuple(sorted(vals)))

    def cdf(self, s):
        arr = np.asarray(self.samples)
        return (np.searchsorted(arr, np.asarray(s, dtype=float), side="right") / arr.size)[()]

    def pdf(self, s):
        raise DomainError("Empirical measure has no density")

    def support(self):
        return (self.samples[0], self.samples[-1])

    def sample(self, rng, size=None):
        return rng.choice(np.asarray(self.samples), size=size)

    def mass(self) -> float:
        return 1.0

    def params(self):
        return {"variant": self.tag, "n": len(self.samples), "support": list(self.support())}


def parse_measure(text: str) -> InputMeasure:
    """Parse ``uniform,-b,-a`` / ``exponential,a,beta`` / ``empirical,s1,s2,...``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty measure string")
    kind, vals = parts[0].lower(), [float(p) for p in parts[1:]]
    if kind == "uniform":
        if len(vals) != 2:
            raise ValueError("uniform needs two support endpoints: uniform,-b,-a")
        lo, hi = sorted(vals)
        return Uniform(a=-hi, b=-lo)
    if kind in ("exponential", "exp", "shifted-exponential"):
        if len(vals) != 2:
            raise ValueError("exponential needs a and beta: exponential,a,beta")
        return ShiftedExponential(a=vals[0], beta=vals[1])
    if kind == "empirical":
        return Empirical(tuple(vals))
    raise ValueError(f"unknown measure kind {kind!r}")


# ---------------------------------------------------------------------------
# continuous parts of the output mixture


class ContinuousPart:
    """Non-atomic part of the output mixture (sub-probability measure)."""

    kind = ""
    support: tuple[float, float]

    def mass(self) -> float:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def moment(self, q: int) -> float:
        raise NotImplementedError

    def table(self, n: int = TABLE_POINTS):
        raise NotImplementedError


@dataclass(frozen=True)
class ReflectedPart(ContinuousPart):
    """Image of mu0 on (tau-, -kappa] under s -> -s (closed form)."""

    mu0: InputMeasure
    tau_minus: float
    kind = "reflected"

    @property
    def support(self):
        lo, hi = self.mu0.support()
        return (-hi, -max(lo, self.tau_minus))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        return np.where((x >= lo) & (x < hi), self.mu0.pdf(-x), 0.0)[()]

    def mass(self) -> float:
        lo, hi = self.support
        if hi <= lo:
            return 0.0
        val, err = integrate.quad(self.density, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        return val

    def cdf(self, x):
        # P(-tau0 <= x, tau0 > tau-) = P(tau0 >= -x) restricted to tau0 > tau-.
        x = np.asarray(x, dtype=float)
        cut = float(self.mu0.cdf(self.tau_minus))
        return np.clip(1.0 - np.maximum(self.mu0.cdf(np.nextafter(-x, -np.inf)), cut), 0.0, None)[()]

    def moment(self, q: int) -> float:
        lo, hi = self.support
        if hi <= lo:
            return 0.0
        val, _ = integrate.quad(lambda x: x**q * self.mu0.pdf(-x), lo, hi, epsabs=QUAD_EPSABS,
                                epsrel=QUAD_EPSREL, limit=200)
        return val

    def table(self, n: int = TABLE_POINTS):
        lo, hi = self.support
        xs = np.linspace(lo, hi, n)
        return xs, self.density(xs)


@dataclass(frozen=True)
class TransportedPart(ContinuousPart):
    """Image of mu0 on (tau-, -kappa] under a general entry/exit map.

    Density by change of variables: p*(r) = p0(s) |a1(r) / a1(s)| with
    s = Pi^{-1}(r), since A1(Pi^{-1}(r)) = A1(r).
    """

    mu0: InputMeasure
    phase: ComplexPhase
    tau_minus: float
    tau_plus: float
    kind = "transported"

    @property
    def support(self):
        lo, hi = self.mu0.support()
        # capped exits: an input lying wholly below tau- gives the empty support (tau+, tau+)
        top = self.tau_plus if lo <= self.tau_minus else entry_exit(self.phase, lo, self.tau_plus).exit_time
        return (entry_exit(self.phase, hi, self.tau_plus).exit_time, top)

    def inverse(self, r: float) -> float:
        return entry_for_exit(self.phase, r)

    def density(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.support
        a1 = self.phase.field.a1
        out = np.zeros_like(x)
        for k, r in enumerate(x):
            if lo <= r < hi:
                s = self.inverse(r)
                out[k] = float(self.mu0.pdf(s)) * abs(float(a1(r)) / float(a1(s)))
        return out if out.size > 1 else float(out[0])

    def mass(self) -> float:
        lo, hi = self.support
        if hi <= lo:
            return 0.0
        val, err = integrate.quad(self.density, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        if not err <= 1e-10:
            raise QuadratureError(f"transported mass quadrature error {err:.3g}")
        return val

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.support
        cut = float(self.mu0.cdf(self.tau_minus))
        out = np.empty_like(x)
        for k, r in enumerate(x):
            if r < lo:
                out[k] = 0.0
            elif r >= hi:
                out[k] = 1.0 - cut
            else:
                out[k] = 1.0 - max(float(self.mu0.cdf(self.inverse(r))), cut)
        return out if out.size > 1 else float(out[0])

    def moment(self, q: int) -> float:
        lo, hi = self.support
        if hi <= lo:
            return 0.0
        val, _ = integrate.quad(lambda r: r**q * self.density(r), lo, hi, epsabs=QUAD_EPSABS,
                                epsrel=QUAD_EPSREL, limit=200)
        return val

    def table(self, n: int = TABLE_POINTS):
        lo, hi = self.support
        xs = np.linspace(lo, hi, n, endpoint=False)
        return xs, np.atleast_1d(self.density(xs))


@dataclass(frozen=True)
class EmpiricalPart(ContinuousPart):
    """Transported sample points below the buffer time, each with weight 1/n."""

    points: tuple[float, ...]
    n_total: int
    kind = "empirical"

    @property
    def support(self):
        if not self.points:
            return (0.0, 0.0)
        return (min(self.points), max(self.points))

    def mass(self) -> float:
        return len(self.points) / self.n_total

    def cdf(self, x):
        arr = np.sort(np.asarray(self.points))
        return (np.searchsorted(arr, np.asarray(x, dtype=float), side="right") / self.n_total)[()]

    def moment(self, q: int) -> float:
        return float(sum(p**q for p in self.points)) / self.n_total

    def table(self, n: int = TABLE_POINTS):
        xs = np.sort(np.asarray(self.points))
        return xs, np.full(xs.shape, 1.0 / self.n_total)


@dataclass(frozen=True)
class MixtureOutput:
    """Singular-limit output rho1 * delta_{tau+} + continuous part."""

    rho1: float
    tau_plus: float
    tau_minus: float
    continuous: ContinuousPart

    @property
    def rho2(self) -> float:
        return 1.0 - self.rho1

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return (self.continuous.cdf(x) + np.where(x >= self.tau_plus, self.rho1, 0.0))[()]

    def cdf_left(self, x):
        """P(Y < x), needed where the atom creates a jump."""
        x = np.asarray(x, dtype=float)
        return self.cdf(np.nextafter(x, -np.inf))

    def moment(self, q: int) -> float:
        return self.rho1 * self.tau_plus**q + self.continuous.moment(q)

    def summary(self) -> dict:
        return {
            "rho1": self.rho1,
            "rho2": self.rho2,
            "tau_plus": self.tau_plus,
            "tau_minus": self.tau_minus,
            "continuous_kind": self.continuous.kind,
            "continuous_support": list(self.continuous.support),
            "continuous_mass": self.continuous.mass(),
        }

    def csv_rows(self, n: int = TABLE_POINTS):
        """Rows for the mixture dump: ``s,density`` lines then the atom line."""
        xs, dens = self.continuous.table(n)
        rows = [(repr(float(x)), repr(float(d))) for x, d in zip(xs, dens)]
        rows.append(("atom", repr(float(self.tau_plus)), repr(float(self.rho1))))
        return rows


def pushforward_singular(mu0: InputMeasure, phase: ComplexPhase, tau_plus: float) -> MixtureOutput:
    """Singular-limit output distribution for entry times drawn from mu0."""
    tau_plus = float(tau_plus)
    if not tau_plus > 0:
        raise DomainError(f"buffer time must be positive, got {tau_plus}")
    try:
        tau_minus = entry_for_exit(phase, tau_plus)
    except DomainExhausted:
        tau_minus = phase.field.domain[0]
        log.warning("Pi never reaches tau+=%g on the domain; rho1 computed against %g", tau_plus, tau_minus)
    rho1 = float(mu0.cdf(tau_minus))
    if isinstance(mu0, Empirical):
        pts = tuple(entry_exit(phase, s, tau_plus).exit_time for s in mu0.samples if s > tau_minus)
        part: ContinuousPart = EmpiricalPart(pts, len(mu0.samples))
    elif isinstance(phase.field, NormalForm):
        part = ReflectedPart(mu0, tau_minus)
    else:
        part = TransportedPart(mu0, phase, tau_minus, tau_plus)
    return MixtureOutput(rho1, tau_plus, tau_minus, part)


def moments_pushforward(mu0: InputMeasure, phase: ComplexPhase, tau_plus: float, q: int) -> float:
    """q-th moment of min(Pi(s), tau+) under mu0, integrated in entry-time coordinates."""
    if q < 0:
        raise ValueError("moment order must be >= 0")
    if q == 0:
        return 1.0

    def exit_time(s):
        return entry_exit(phase, s, tau_plus).exit_time

    if isinstance(mu0, Empirical):
        return float(np.mean([exit_time(s) ** q for s in mu0.samples]))

    tau_minus = entry_for_exit(phase, tau_plus)
    lo, hi = mu0.support()
    atom = float(mu0.cdf(tau_minus)) * tau_plus**q
    left = max(lo, tau_minus)
    if left >= hi:
        return atom
    val, err = integrate.quad(lambda s: exit_time(s) ** q * float(mu0.pdf(s)), left, hi,
                              epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    if not err <= 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(f"pushforward moment quadrature error {err:.3g}")
    return atom + val


@dataclass(frozen=True)
class MomentVector:
    q_max: int
    values: tuple[float, ...]
    method: str

    def to_list(self) -> list[dict]:
        return [{"method": self.method, "q": q, "value": v} for q, v in enumerate(self.values, start=1)]


def moment_vector(mu0: InputMeasure, phase: ComplexPhase, tau_plus: float, q_max: int,
                  method: str = "pushforward") -> MomentVector:
    """Moments 1..q_max by either route; ``paper-formula`` needs a Uniform or ShiftedExponential mu0."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    if method == "pushforward":
        vals = [moments_pushforward(mu0, phase, tau_plus, q) for q in range(1, q_max + 1)]
    elif method == "paper-formula":
        if isinstance(mu0, Uniform):
            vals = [moments_published_uniform(mu0.a, mu0.b, tau_plus, q) for q in range(1, q_max + 1)]
        elif isinstance(mu0, ShiftedExponential):
            vals = [moments_published_exp(mu0.a, mu0.beta, tau_plus, q) for q in range(1, q_max + 1)]
        else:
            raise DomainError("published moment formulas exist only for uniform and exponential inputs")
    else:
        raise ValueError(f"unknown moment method {method!r}")
    return MomentVector(q_max, tuple(vals), method)


def moments_published_uniform(a: float, b: float, tau_plus: float, q: int) -> float:
    """Published moments for a uniform input on [-b, -a] under reflection, cases U1-U3."""
    if not (0 < a < b):
        raise DomainError(f"need b > a > 0, got a={a}, b={b}")
    if not tau_plus > 0 or q < 1:
        raise DomainError("need tau_plus > 0 and q >= 1")
    t = tau_plus
    if a >= t:
        return t**q
    if t <= b:
        return (b - t) * t**q / (b - a) + (t - a) * (t ** (q + 1) - a ** (q + 1)) / ((b - a) * (q + 1))
    return (b ** (q + 1) - a ** (q + 1)) / ((b - a) * (q + 1))


def moments_published_exp(a: float, beta: float, tau_plus: float, q: int) -> float:
    """Published moments for the shifted exponential input, cases E1-E2 (printed form)."""
    if not (a > 0 and beta > 0 and tau_plus > 0) or q < 1:
        raise DomainError("need a, beta, tau_plus > 0 and q >= 1")
    t = tau_plus
    if a >= t:
        return t**q
    w = math.exp((a - t) / beta)
    gam = incomplete_gamma_upper(q + 1, a / beta) - incomplete_gamma_upper(q + 1, t / beta)
    return w * t**q + math.exp(1.0 / beta) * beta**q * (1.0 - w) * gam


def incomplete_gamma_upper(n: int, x: float) -> float:
    """Upper incomplete gamma Gamma(n, x) for integer n >= 1 via the finite sum."""
    if int(n) != n or n < 1:
        raise DomainError(f"order must be an integer >= 1, got {n}")
    if x < 0:
        raise DomainError(f"argument must be >= 0, got {x}")
    n = int(n)
    term, total = 1.0, 1.0
    for k in range(1, n):
        term *= x / k
        total += term
    return math.factorial(n - 1) * math.exp(-x) * total


def _seq(values: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)
