"""Adaptive quadrature helpers.

Thin wrapper around scipy's adaptive integrator. Infinite endpoints are mapped
to a finite parameter by the rational substitution v = a + t/(1-t) (mirrored
for lower ends) before integrating, which behaves well for the smooth,
monotone-tailed integrands this package produces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _si
from scipy.optimize import brentq

from .errors import QuadratureFailure

__all__ = ["QuadratureConfig", "DEFAULT_QUADRATURE", "integrate", "upper_quantile"]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limits for adaptive quadrature.

    abs_tol may be set to 0.0 to force purely relative convergence, which is
    what the deep-tail TV computations use (their integrands live at scales
    far below any fixed absolute tolerance).
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    tail_map: str = "rational"

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive (abs_tol may be 0)")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")
        if self.tail_map != "rational":
            raise ValueError(f"unknown tail_map {self.tail_map!r}")


DEFAULT_QUADRATURE = QuadratureConfig()


def _quad_finite(f, a, b, cfg, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _si.IntegrationWarning)
        val, _ = _si.quad(
            f, a, b,
            epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
            limit=cfg.max_subdivisions,
            points=points,
        )
    if not np.isfinite(val):
        raise QuadratureFailure(f"integral over [{a}, {b}] returned {val}")
    return val


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    points: Sequence[float] | None = None,
) -> float:
    """Integrate f over [a, b]; either endpoint may be infinite.

    `points` marks known kinks inside a finite interval.
    """
    if a == b:
        return 0.0
    if a > b:
        return -integrate(f, b, a, cfg, points)
    lo_inf = np.isinf(a)
    hi_inf = np.isinf(b)
    if not lo_inf and not hi_inf:
        pts = None
        if points:
            pts = sorted(p for p in points if a < p < b)
            pts = pts or None
        return _quad_finite(f, a, b, cfg, points=pts)
    if lo_inf and hi_inf:
        return integrate(f, a, 0.0, cfg) + integrate(f, 0.0, b, cfg)
    if hi_inf:
        # v = a + t/(1-t), dv = dt/(1-t)^2
        def g(t):
            u = 1.0 - t
            return f(a + t / u) / (u * u)
        return _quad_finite(g, 0.0, 1.0, cfg)
    # lo_inf: mirror of the previous case
    def g(t):
        u = 1.0 - t
        return f(b - t / u) / (u * u)
    return _quad_finite(g, 0.0, 1.0, cfg)


def upper_quantile(
    density: Callable[[float], float],
    a: float,
    mass: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Smallest R with integral of `density` over [a, R] equal to `mass`.

    Used to truncate infinite supports where the proposal has already placed
    all but a negligible sliver of its mass.
    """
    if not 0.0 < mass < 1.0:
        raise ValueError("mass must lie strictly between 0 and 1")
    lo = a
    width = 1.0
    total = 0.0
    # grow the bracket geometrically, accumulating mass segment by segment
    for _ in range(200):
        seg = integrate(density, lo, lo + width, cfg)
        if total + seg >= mass:
            offset = total
            return brentq(
                lambda R: offset + integrate(density, lo, R, cfg) - mass,
                lo, lo + width, xtol=1e-12, rtol=8.9e-16,
            )
        total += seg
        lo += width
        width *= 2.0
    raise QuadratureFailure("quantile bracket did not close; density may not integrate to 1")
