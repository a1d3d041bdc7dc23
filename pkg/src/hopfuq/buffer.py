"""Buffer points: where the entry/exit construction breaks down.

Two kinds of obstruction are located in the upper half of the complex time
plane:

* zeros of lambda1 (seeded from grid cells where both Re and Im change
  sign, refined by complex Newton);
* stationary points of the relief along the vertical-tangency locus
  {Im lambda1 = 0}, traced by marching squares. By Cauchy-Riemann the
  relief derivative along that locus is Re(lambda1) * Re(lambda1'), so its
  stationary points are either lambda1-zeros or points where the locus
  itself turns vertical.

The buffer time is the smallest positive real time whose relief matches
the level of one of these points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .phase import ComplexPhase, relief

__all__ = [
    "SearchBox",
    "CriticalPoint",
    "BufferReport",
    "find_critical_points",
    "buffer_time",
]

log = logging.getLogger(__name__)

EIGENVALUE_ZERO = "EigenvalueZero"
VERTICAL_TANGENCY = "VerticalTangency"

NEWTON_ITERATIONS = 50
NEWTON_TOL = 1e-12
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class SearchBox:
    """Rectangle [u_min, u_max] x [0, v_max] in the upper half-plane."""

    u_min: float = -4.0
    u_max: float = 4.0
    v_max: float = 4.0

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_max > 0 and self.u_max > 0):
            raise ValueError(f"invalid search box {self}")

    def contains(self, tau: complex, slack: float = 1e-9) -> bool:
        return (self.u_min - slack <= tau.real <= self.u_max + slack
                and -slack <= tau.imag <= self.v_max + slack)

    def to_dict(self) -> dict:
        return {"u_min": self.u_min, "u_max": self.u_max, "v_min": 0.0, "v_max": self.v_max}


@dataclass(frozen=True)
class CriticalPoint:
    location: complex
    kind: str
    level: float
    residual: float

    def to_dict(self) -> dict:
        return {"re": self.location.real, "im": self.location.imag, "kind": self.kind, "level": self.level}


@dataclass(frozen=True)
class BufferReport:
    tau_plus: float | None
    limiting_point: CriticalPoint | None
    box: SearchBox
    resolution: int
    candidates: tuple[CriticalPoint, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "tau_plus": self.tau_plus,
            "limiting_point": None if self.limiting_point is None else self.limiting_point.to_dict(),
            "box": self.box.to_dict(),
            "resolution": self.resolution,
            "candidates": [c.to_dict() for c in self.candidates],
        }


def _newton_zero(fld, tau):
    for _ in range(NEWTON_ITERATIONS):
        lam = complex(fld.lambda1(tau))
        if abs(lam) <= NEWTON_TOL:
            return tau, abs(lam)
        d = complex(fld.dlambda1(tau))
        if d == 0 or not math.isfinite(abs(d)):
            return None
        tau = tau - lam / d
        if not math.isfinite(abs(tau)):
            return None
    lam = abs(complex(fld.lambda1(tau)))
    return (tau, lam) if lam <= NEWTON_TOL else None


def _newton_vertical(fld, tau):
    """Solve Im lambda1 = 0 and Re lambda1' = 0 by 2-D Newton in (u, v)."""
    u, v = tau.real, tau.imag
    for _ in range(NEWTON_ITERATIONS):
        t = complex(u, v)
        lam = complex(fld.lambda1(t))
        d1 = complex(fld.dlambda1(t))
        d2 = complex(fld.d2lambda1(t))
        f1, f2 = lam.imag, d1.real
        if max(abs(f1), abs(f2)) <= NEWTON_TOL:
            return t, max(abs(f1), abs(f2))
        # d/du = derivative, d/dv = i * derivative for analytic functions
        j11, j12 = d1.imag, d1.real
        j21, j22 = d2.real, -d2.imag
        det = j11 * j22 - j12 * j21
        if det == 0 or not math.isfinite(det):
            return None
        du = (f1 * j22 - f2 * j12) / det
        dv = (j11 * f2 - j21 * f1) / det
        u, v = u - du, v - dv
        if not (math.isfinite(u) and math.isfinite(v)):
            return None
    t = complex(u, v)
    res = max(abs(complex(fld.lambda1(t)).imag), abs(complex(fld.dlambda1(t)).real))
    return (t, res) if res <= NEWTON_TOL else None


def _sign_change(vals) -> bool:
    return np.min(vals) <= 0.0 <= np.max(vals)


def _cell_segments(u0, u1, v0, v1, g00, g10, g01, g11, gc):
    """Marching-squares segments of {g = 0} within one cell.

    Corners are (u0,v0)->g00, (u1,v0)->g10, (u0,v1)->g01, (u1,v1)->g11;
    ``gc`` is the centre value used to resolve saddle cells.
    """
    pts = []

    def cross(pa, pb, ga, gb):
        if (ga < 0) != (gb < 0):
            t = ga / (ga - gb)
            pts.append(complex(pa.real + t * (pb.real - pa.real), pa.imag + t * (pb.imag - pa.imag)))

    c00, c10, c01, c11 = complex(u0, v0), complex(u1, v0), complex(u0, v1), complex(u1, v1)
    cross(c00, c10, g00, g10)  # bottom
    cross(c10, c11, g10, g11)  # right
    cross(c11, c01, g11, g01)  # top
    cross(c01, c00, g01, g00)  # left
    if len(pts) == 2:
        return [(pts[0], pts[1])]
    if len(pts) == 4:
        # Saddle: connect so the centre sign separates the pairs.
        if (gc < 0) == (g00 < 0):
            return [(pts[0], pts[1]), (pts[2], pts[3])]
        return [(pts[0], pts[3]), (pts[1], pts[2])]
    return []


def _merge(points, new):
    for p in points:
        if abs(p.location - new.location) <= MERGE_TOL:
            return
    points.append(new)


def find_critical_points(phase: ComplexPhase, box: SearchBox | None = None, resolution: int = 128):
    """Eigenvalue zeros and vertical-tangency stationary points in ``box``.

    Points where both kinds coincide are reported once, as eigenvalue zeros.
    The result is sorted by (real, imag) so it does not depend on the order
    of grid traversal.
    """
    box = box or SearchBox()
    if resolution < 32:
        raise ValueError("resolution must be at least 32 cells per axis")
    fld = phase.field
    us = np.linspace(box.u_min, box.u_max, resolution + 1)
    vs = np.linspace(0.0, box.v_max, resolution + 1)
    U, V = np.meshgrid(us, vs)
    with np.errstate(over="ignore", invalid="ignore"):
        L = np.asarray(fld.lambda1(U + 1j * V), dtype=complex)
        Uc = 0.5 * (U[:-1, :-1] + U[1:, 1:])
        Vc = 0.5 * (V[:-1, :-1] + V[1:, 1:])
        Lc = np.asarray(fld.lambda1(Uc + 1j * Vc), dtype=complex)
    re, im = L.real, L.imag

    zeros: list[CriticalPoint] = []
    verticals: list[CriticalPoint] = []
    dropped = 0

    def corners(arr, i, j):
        return arr[i, j], arr[i, j + 1], arr[i + 1, j], arr[i + 1, j + 1]

    for i in range(resolution):
        for j in range(resolution):
            ci = corners(im, i, j)
            if not all(math.isfinite(x) for x in ci) or not _sign_change(ci):
                continue
            cr = corners(re, i, j)
            if _sign_change(cr):
                hit = _newton_zero(fld, complex(Uc[i, j], Vc[i, j]))
                if hit is None:
                    dropped += 1
                elif box.contains(hit[0]):
                    t, res = hit
                    _merge(zeros, CriticalPoint(t, EIGENVALUE_ZERO, relief(phase, t.real, t.imag), res))

            g00, g10, g01, g11 = ci
            segs = _cell_segments(us[j], us[j + 1], vs[i], vs[i + 1], g00, g10, g01, g11, Lc[i, j].imag)
            for p, q in segs:
                lp, lq = complex(fld.lambda1(p)), complex(fld.lambda1(q))
                dp, dq = complex(fld.dlambda1(p)), complex(fld.dlambda1(q))
                if (dp.real < 0) != (dq.real < 0) or dp.real == 0.0:
                    hit = _newton_vertical(fld, 0.5 * (p + q))
                    if hit is None:
                        dropped += 1
                    elif box.contains(hit[0]):
                        t, res = hit
                        lv = relief(phase, t.real, t.imag)
                        resid = max(abs(complex(fld.lambda1(t)).imag), res)
                        _merge(verticals, CriticalPoint(t, VERTICAL_TANGENCY, lv, resid))
                if (lp.real < 0) != (lq.real < 0) and not _sign_change(cr):
                    # Re lambda1 vanishes on the locus inside a cell missed by the corner test.
                    hit = _newton_zero(fld, 0.5 * (p + q))
                    if hit is not None and box.contains(hit[0]):
                        t, res = hit
                        _merge(zeros, CriticalPoint(t, EIGENVALUE_ZERO, relief(phase, t.real, t.imag), res))

    if dropped:
        log.warning("find_critical_points: %d Newton refinements did not converge", dropped)
    points = list(zeros)
    for p in verticals:
        _merge(points, p)
    points.sort(key=lambda p: (round(p.location.real, 9), round(p.location.imag, 9)))
    return points


def _solve_real_level(phase: ComplexPhase, level: float, u_max: float):
    """Smallest u in (0, u_max] with relief(u, 0) = level, or None."""
    if not level > 0:
        return None
    fun = phase.real_relief
    if fun(u_max) < level:
        return None
    lo, hi = 0.0, u_max
    while hi - lo > 1e-14 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fun(mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def buffer_time(phase: ComplexPhase, box: SearchBox | None = None, resolution: int = 128) -> BufferReport:
    """Buffer time tau+ from the lowest-crossing critical level.

    ``tau_plus`` is ``None`` when no critical level is attained on the real
    axis inside the box.
    """
    box = box or SearchBox()
    points = find_critical_points(phase, box, resolution)
    best = None
    for p in points:
        u = _solve_real_level(phase, p.level, box.u_max)
        if u is not None and (best is None or u < best[0]):
            best = (u, p)
    if best is None:
        return BufferReport(None, None, box, resolution, tuple(points))
    return BufferReport(best[0], best[1], box, resolution, tuple(points))
