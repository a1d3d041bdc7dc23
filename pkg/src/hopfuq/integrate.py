"""Dormand-Prince 5(4) stepping with a scalar event function.

Works on plain Python float tuples: the systems here have three
components, where numpy's per-call overhead would dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .exceptions import IntegrationError

__all__ = ["StepResult", "Dopri5", "locate_event"]

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# error weights: fifth-order minus embedded fourth-order solution
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass(frozen=True)
class StepResult:
    t: float
    y: tuple
    h_next: float


class Dopri5:
    """Adaptive explicit Runge-Kutta pair with first-same-as-last reuse.

    Parameters
    ----------
    fun : callable
        ``fun(t, y) -> tuple`` returning the derivative as a tuple of floats.
    rtol, atol : float
        Mixed error control per component.
    max_step : float
        Upper bound on the step size.
    """

    def __init__(self, fun: Callable, rtol: float, atol: float, max_step: float = math.inf,
                 min_step: float = 1e-14):
        self.fun = fun
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.min_step = min_step
        self.nfev = 0

    def _stages(self, t, y, k1, h):
        f = self.fun
        n = len(y)
        y2 = tuple(y[i] + h * A21 * k1[i] for i in range(n))
        k2 = f(t + C2 * h, y2)
        y3 = tuple(y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in range(n))
        k3 = f(t + C3 * h, y3)
        y4 = tuple(y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(n))
        k4 = f(t + C4 * h, y4)
        y5 = tuple(y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]) for i in range(n))
        k5 = f(t + C5 * h, y5)
        y6 = tuple(y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
                   for i in range(n))
        k6 = f(t + h, y6)
        y_new = tuple(y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
                      for i in range(n))
        k7 = f(t + h, y_new)
        self.nfev += 6
        err = 0.0
        for i in range(n):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = self.atol + self.rtol * max(abs(y[i]), abs(y_new[i]))
            err += (e / sc) ** 2
        return y_new, k7, math.sqrt(err / n)

    def step_fixed(self, t, y, h):
        """One fifth-order step of size ``h`` without error control."""
        k1 = self.fun(t, y)
        self.nfev += 1
        return self._stages(t, y, k1, h)[0]

    def initial_step(self, t, y, k1) -> float:
        # Hairer-Norsett-Wanner starting step heuristic.
        d0 = math.sqrt(sum((yi / (self.atol + self.rtol * abs(yi))) ** 2 for yi in y) / len(y))
        d1 = math.sqrt(sum((ki / (self.atol + self.rtol * abs(yi))) ** 2 for ki, yi in zip(k1, y)) / len(y))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        return min(h0, self.max_step)

    def steps(self, t0: float, y0: Sequence[float], t_end: float, h0: float | None = None):
        """Yield accepted steps as (t_prev, y_prev, t, y) until ``t_end``."""
        t, y = float(t0), tuple(float(v) for v in y0)
        k1 = self.fun(t, y)
        self.nfev += 1
        h = self.initial_step(t, y, k1) if h0 is None else h0
        while t < t_end:
            h = min(h, self.max_step, t_end - t)
            if h < self.min_step:
                raise IntegrationError(f"step size underflow at t={t:.17g} (h={h:.3g})")
            y_new, k7, err = self._stages(t, y, k1, h)
            if err <= 1.0 and all(math.isfinite(v) for v in y_new):
                t_prev, y_prev = t, y
                t = t + h
                y, k1 = y_new, k7
                fac = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
                h = h * fac
                yield t_prev, y_prev, t, y
            else:
                fac = MIN_FACTOR if not math.isfinite(err) else max(MIN_FACTOR, SAFETY * err ** -0.2)
                h = h * fac


def locate_event(stepper: Dopri5, g: Callable, t_lo: float, y_lo, t_hi: float, y_hi, tol: float = 1e-12):
    """Bisect a sign change of ``g(y)`` inside an accepted step by re-stepping from its start.

    Each probe integrates from ``t_lo`` (the last accepted point) with a
    single fifth-order step, so the located state carries the same local
    accuracy as the accepted step.
    """
    g_lo = g(y_lo)
    lo, hi = t_lo, t_hi
    y_at_hi = y_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        y_mid = stepper.step_fixed(t_lo, y_lo, mid - t_lo)
        if (g(y_mid) < 0) == (g_lo < 0):
            lo = mid
        else:
            hi, y_at_hi = mid, y_mid
    return hi, y_at_hi
