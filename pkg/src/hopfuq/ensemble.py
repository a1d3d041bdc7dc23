"""Monte Carlo ensembles of the full fast-slow system at finite eps.

Each sample starts on the boundary of the tube T(h) = {|x| <= h eps} at
slow time tau0 = y0, so the slow variable doubles as the clock: y = t.
The recorded output y* is the slow coordinate where the trajectory first
leaves the tube after having entered it.
"""

from __future__ import annotations

import io
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DomainError
from .integrate import Dopri5, locate_event
from .measures import Empirical, InputMeasure, MixtureOutput
from .model import FastSlowSystem
from .phase import ComplexPhase

__all__ = [
    "IntegratorConfig",
    "TubeSpec",
    "TrajectoryRecord",
    "EnsembleResult",
    "integrate_one",
    "run_ensemble",
    "empirical_stats",
    "ks_distance",
    "noise_floor",
    "CSV_HEADER",
]

log = logging.getLogger(__name__)

TUBE_EXIT = "TubeExit"
HORIZON_REACHED = "HorizonReached"
BOX_EXIT = "BoxExit"

CSV_HEADER = "index,tau0,entry_time,exit_time,y_star,exit_kind"
EPS_WARN = 0.02
EVENT_TOL = 1e-12
TAIL_MASS = 1e-6


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings; ``horizon`` is the slow-time budget after tau0."""

    eps: float = 0.05
    rtol: float = 1e-10
    atol: float = 1e-13
    max_step: float = 0.1
    horizon: float = 8.0
    eps_max: float = 0.1

    def __post_init__(self):
        if not (0 < self.eps <= self.eps_max):
            raise DomainError(f"eps must lie in (0, {self.eps_max}], got {self.eps}")
        for name in ("rtol", "atol"):
            tol = getattr(self, name)
            if not (1e-14 <= tol <= 1e-6):
                raise DomainError(f"{name} must lie in [1e-14, 1e-6], got {tol}")
        if not (self.max_step > 0 and self.horizon > 0):
            raise DomainError("max_step and horizon must be positive")
        if self.eps < EPS_WARN:
            warnings.warn(
                f"eps={self.eps} < {EPS_WARN}: explicit stepping and the double-precision noise floor "
                "may destroy the delay", RuntimeWarning, stacklevel=3,
            )

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.eps, self.rtol / 2, max(self.atol / 2, 1e-14), self.max_step,
                                self.horizon, self.eps_max)


def support_segment(mu0: InputMeasure) -> tuple[float, float]:
    """Finite segment carrying all but ``TAIL_MASS`` of mu0."""
    lo, hi = mu0.support()
    if not math.isfinite(lo):
        # invert the cdf by bisection on the left tail
        lo = hi - 1.0
        while float(mu0.cdf(lo)) > TAIL_MASS:
            lo = hi - 2.0 * (hi - lo)
    return lo, hi


@dataclass(frozen=True)
class TubeSpec:
    """Tube T(h) = {|x| <= h eps} around the critical manifold."""

    h: float = 2.0

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError(f"tube parameter h must be positive, got {self.h}")

    def radius(self, eps: float) -> float:
        return self.h * eps

    def slaved_amplitude(self, system: FastSlowSystem, eps: float, segment: tuple[float, float],
                         points: int = 257) -> float:
        """delta eps / min|a1| over the entry segment."""
        s = np.linspace(segment[0], segment[1], points)
        min_a1 = float(np.min(np.abs(np.asarray(system.field.a1(s), dtype=float))))
        if min_a1 == 0.0:
            return math.inf
        return system.delta * eps / min_a1

    def check(self, system: FastSlowSystem, eps: float, segment: tuple[float, float]) -> None:
        amp = self.slaved_amplitude(system, eps, segment)
        if not self.radius(eps) > amp:
            raise DomainError(
                f"tube radius h*eps={self.radius(eps):.4g} does not exceed the slaved amplitude "
                f"{amp:.4g} on [{segment[0]:.4g}, {segment[1]:.4g}]; increase h or reduce delta"
            )


@dataclass(frozen=True)
class TrajectoryRecord:
    index: int
    tau0: float
    entry_time: float
    exit_time: float
    y_star: float
    exit_kind: str
    min_norm: float

    def csv_line(self) -> str:
        vals = (self.tau0, self.entry_time, self.exit_time, self.y_star)
        return ",".join([str(self.index), *(format(v, ".17g") for v in vals), self.exit_kind])


def integrate_one(system: FastSlowSystem, y0: float, x0: Sequence[float] | None = None,
                  config: IntegratorConfig | None = None, tube: TubeSpec | None = None,
                  index: int = 0) -> TrajectoryRecord:
    """Integrate one sample from (x0, y0) and record its tube entry and first exit.

    Time runs in slow units starting at ``y0``, so the exit time equals y*.
    Step-size underflow raises ``IntegrationError``.
    """
    config = config or IntegratorConfig(eps=system.eps)
    tube = tube or TubeSpec()
    eps = config.eps
    radius = tube.radius(eps)
    y0 = float(y0)
    x1, x2 = (radius, 0.0) if x0 is None else (float(x0[0]), float(x0[1]))
    box = system.box
    if not box.contains(x1, x2, y0):
        raise DomainError(f"initial point ({x1}, {x2}, {y0}) outside the phase-space box")

    f = system.rhs(eps)

    def fun(t, s):
        return f(s[0], s[1], s[2])

    def gap(s):
        return math.hypot(s[0], s[1]) - radius

    stepper = Dopri5(fun, config.rtol, config.atol, max_step=config.max_step)
    entry = math.nan
    inside = gap((x1, x2)) < 0
    min_norm = math.hypot(x1, x2)
    if inside:
        entry = y0
    for t_prev, s_prev, t, s in stepper.steps(y0, (x1, x2, y0), y0 + config.horizon):
        if not box.contains(s[0], s[1], s[2]):
            return TrajectoryRecord(index, y0, entry, t, s[2], BOX_EXIT, min_norm)
        g_prev, g = gap(s_prev), gap(s)
        if not inside:
            if g < 0 <= g_prev:
                entry, _ = locate_event(stepper, gap, t_prev, s_prev, t, s, EVENT_TOL)
                inside = True
        elif g >= 0 > g_prev:
            t_exit, s_exit = locate_event(stepper, gap, t_prev, s_prev, t, s, EVENT_TOL)
            min_norm = min(min_norm, math.hypot(s_exit[0], s_exit[1]))
            return TrajectoryRecord(index, y0, entry, t_exit, s_exit[2], TUBE_EXIT, min_norm)
        min_norm = min(min_norm, math.hypot(s[0], s[1]))
    return TrajectoryRecord(index, y0, entry, math.nan, math.nan, HORIZON_REACHED, min_norm)


@dataclass(frozen=True)
class EnsembleResult:
    records: tuple[TrajectoryRecord, ...]
    seed: int
    config: IntegratorConfig
    tube: TubeSpec
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.records)

    def tube_exits(self) -> list[TrajectoryRecord]:
        return [r for r in self.records if r.exit_kind == TUBE_EXIT]

    def y_star(self) -> np.ndarray:
        """Exit coordinates of TubeExit records, in index order."""
        return np.array([r.y_star for r in self.tube_exits()])

    def counts(self) -> dict:
        out = {TUBE_EXIT: 0, HORIZON_REACHED: 0, BOX_EXIT: 0}
        for r in self.records:
            out[r.exit_kind] += 1
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.records:
            buf.write(r.csv_line() + "\n")
        return buf.getvalue()

    def describe(self) -> dict:
        return {"seed": self.seed, "n": self.n, "config": asdict(self.config), "tube": asdict(self.tube),
                "counts": self.counts()}


def sample_entry(mu0: InputMeasure, seed: int, index: int) -> float:
    """y0 for sample ``index`` from its own stream, independent of scheduling."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return float(mu0.sample(rng))


def _run_chunk(args):
    system, mu0, seed, config, tube, indices = args
    return [integrate_one(system, sample_entry(mu0, seed, i), None, config, tube, i) for i in indices]


def run_ensemble(system: FastSlowSystem, mu0: InputMeasure, n: int, seed: int,
                 config: IntegratorConfig | None = None, tube: TubeSpec | None = None,
                 workers: int = 1) -> EnsembleResult:
    """N independent trajectories; output depends only on (seed, inputs), not on ``workers``."""
    if n < 1:
        raise ValueError("ensemble size must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    config = config or IntegratorConfig(eps=system.eps)
    tube = tube or TubeSpec()
    tube.check(system, config.eps, support_segment(mu0))

    indices = list(range(n))
    if workers == 1:
        records = _run_chunk((system, mu0, seed, config, tube, indices))
    else:
        chunks = [indices[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(system, mu0, seed, config, tube, c) for c in chunks])
            records = [r for part in parts for r in part]
        records.sort(key=lambda r: r.index)
    counts = {}
    for r in records:
        counts[r.exit_kind] = counts.get(r.exit_kind, 0) + 1
    if counts.get(BOX_EXIT) or counts.get(HORIZON_REACHED):
        log.warning("ensemble: %s", counts)
    return EnsembleResult(tuple(records), int(seed), config, tube)


def ks_distance(samples, cdf: Callable, cdf_left: Callable | None = None) -> float:
    """Kolmogorov-Smirnov sup distance between samples and a reference cdf.

    ``cdf_left(x) = P(X < x)`` is needed when the reference has atoms;
    for a continuous reference it defaults to ``cdf``.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    cdf_left = cdf_left or cdf
    f_hi = np.asarray(cdf(x), dtype=float)
    f_lo = np.asarray(cdf_left(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f_hi), np.max(f_lo - (i - 1) / n)))


def empirical_stats(result: EnsembleResult, reference: MixtureOutput | None = None,
                    predictor: Callable[[float], float] | None = None) -> dict:
    """Summary of the y* sample; BoxExit and HorizonReached records are excluded and counted."""
    if not result.records:
        raise ValueError("empty ensemble")
    recs = result.tube_exits()
    counts = result.counts()
    if counts[BOX_EXIT]:
        log.info("empirical_stats: excluding %d BoxExit samples", counts[BOX_EXIT])
    y = np.array([r.y_star for r in recs])
    out = {"n": result.n, "n_used": int(y.size), "counts": counts}
    if y.size == 0:
        return out
    qs = np.quantile(y, [0.05, 0.25, 0.5, 0.75, 0.95])
    out.update({
        "mean": float(np.mean(y)),
        "variance": float(np.var(y)),
        "quantiles": {"q05": qs[0], "q25": qs[1], "q50": qs[2], "q75": qs[3], "q95": qs[4]},
        "iqr": float(qs[3] - qs[1]),
    })
    out["quantiles"] = {k: float(v) for k, v in out["quantiles"].items()}
    if reference is not None:
        out["ks"] = ks_distance(y, reference.cdf, reference.cdf_left)
    if predictor is not None:
        err = np.array([abs(r.y_star - predictor(r.tau0)) for r in recs])
        out["median_error"] = float(np.median(err))
        out["max_error"] = float(np.max(err))
    return out


@dataclass(frozen=True)
class NoiseFloor:
    depth: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.depth <= self.bound


def noise_floor(phase: ComplexPhase, mu0: InputMeasure, eps: float, atol: float, warn: bool = True) -> NoiseFloor:
    """Compare the deepest contraction max relief(tau0) with 0.5 eps ln(1/atol).

    Deeper contraction than this pushes the tube deviation below what the
    integrator resolves, and the computed delay is truncated.
    """
    if isinstance(mu0, Empirical):
        lo = mu0.samples[0]
    else:
        lo = support_segment(mu0)[0]
    depth = phase.real_relief(lo)
    res = NoiseFloor(depth, 0.5 * eps * math.log(1.0 / atol))
    if warn and not res.ok:
        warnings.warn(
            f"contraction depth {depth:.4g} exceeds the noise-floor bound {res.bound:.4g} "
            f"(eps={eps}, atol={atol})", RuntimeWarning, stacklevel=2,
        )
    return res
