"""Continuous-state exact machinery for the independence sampler.

The one-step kernel from x is p(y) min(1, w(y)/w(x)) dy plus a rejection atom
at x. Everything multi-step reduces to three scalar functions of the weight
level w:

  pi_tilde(w) = target mass of the sub-level set C(w) = {z : w(z) <= w},
  p_tilde(w)  = proposal mass of C(w),
  lam(w)      = p_tilde(w) - pi_tilde(w)/w
              (= the rejection probability of any state at weight level w,
               and = 1 - 1/w once w >= w*).

The n-step kernel is then

  P^n(x, dy) = T_n(max(w(x), w(y))) pi(y) dy + lam(w(x))^n delta_x(dy),
  T_n(w)     = integral_w^inf n lam(v)^{n-1} / v^2 dv,

whose tail piece past w* has the closed form 1 - (1 - 1/u)^n. TV distances
and per-point rates fall out of T_n's deficit 1 - T_n, which this module
computes directly at its own (possibly denormal) scale so that quantities
like 0.5^60 survive with full relative accuracy.

lam is cached on a log-spaced grid with monotone cubic interpolation; direct
quadrature evaluation stays available as a verification mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    DegenerateFit,
    NonMonotoneWeightWarning,
    PointOutsideSupport,
    UnboundedWeight,
)
from .measures import (
    GeneralModel,
    WeightSummary,
    compute_wstar,
    effective_interval,
    weight_at,
)
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, integrate
from .ratefit import fit_decay_rate

__all__ = [
    "WeightCdfPair",
    "RateReport",
    "GeneralPointRate",
    "weight_cdf_pair",
    "lambda_fn",
    "rejection_probability",
    "t_n",
    "n_step_kernel",
    "tv_at_point_general",
    "rate_report",
    "per_point_rate_general",
]

GRID_NODES_MONOTONE = 4097
GRID_NODES_FALLBACK = 513
MC_DRAWS = 1_000_000
_MC_SEED = 0xC0FFEE
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _gl_segments(f, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """16-point Gauss-Legendre on each [a_i, b_i], f vectorized."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    return (vals * _GL_W).sum(axis=1) * half


class WeightCdfPair:
    """Cached (pi_tilde, p_tilde, lam) triple for one model.

    Grid values are exact quadrature results accumulated from the small-w end
    (no cancellation); between nodes lam uses monotone cubic interpolation.
    pi_tilde/p_tilde methods evaluate by direct quadrature and cache.
    Immutable after construction; safe to share across threads.
    """

    def __init__(self, model, summary, w_grid, pi_grid, p_grid,
                 pi_total, p_total, mono, interval, cfg,
                 degenerate=False, pi_stderr=None, p_stderr=None, mc_draws=None):
        self.model = model
        self.wstar = float(summary.wstar)
        self.attained = bool(summary.attained)
        self.boundary_warning = bool(summary.boundary_warning)
        self.summary = summary
        self.w_grid = w_grid
        self.pi_grid = pi_grid
        self.p_grid = p_grid
        self.lam_grid = None
        self.pi_total = float(pi_total)
        self.p_total = float(p_total)
        self.mono = mono
        self.interval = interval
        self.cfg = cfg
        self.degenerate = bool(degenerate)
        self.pi_stderr = pi_stderr
        self.p_stderr = p_stderr
        self.mc_draws = mc_draws
        self._lam_interp = None
        if not self.degenerate:
            lam = np.maximum(p_grid - pi_grid / w_grid, 0.0)
            self.lam_grid = lam
            self._lam_interp = PchipInterpolator(w_grid, lam, extrapolate=False)
            for arr in (self.w_grid, self.pi_grid, self.p_grid, self.lam_grid):
                arr.setflags(write=False)
        self._exact_cache: dict[tuple[str, float], float] = {}
        self._tn_tables: dict[int, "_TnTable"] = {}

    @property
    def rate(self) -> float:
        return 1.0 - 1.0 / self.wstar

    # -- grid-backed lam -----------------------------------------------------
    def lam_grid_at(self, v: float) -> float:
        if self.degenerate or v <= 0.0:
            return 0.0
        if v >= self.wstar:
            return 1.0 - 1.0 / v
        g = self.w_grid
        if v >= g[-1]:
            # between the grid top and w* (supremum not attained inside the
            # searched region): continue with the accumulated totals
            return max(self.p_total - self.pi_total / v, 0.0)
        if v <= g[0]:
            return float(self.lam_grid[0])
        return float(self._lam_interp(v))

    def _lam_batch(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        hi = v >= self.wstar
        out[hi] = 1.0 - 1.0 / v[hi]
        mid = ~hi
        if self.degenerate:
            out[mid] = 0.0
            return out
        g = self.w_grid
        vm = np.clip(v[mid], g[0], g[-1])
        out[mid] = self._lam_interp(vm)
        cont = mid.copy()
        cont[mid] = v[mid] > g[-1]
        if np.any(cont):
            out[cont] = np.maximum(self.p_total - self.pi_total / v[cont], 0.0)
        return out

    # -- exact (quadrature) sub-level masses ----------------------------------
    def _sublevel_boundary(self, w: float) -> float | None:
        """x with w(x) = w on a monotone 1-D support; None outside the range."""
        a, b = self.interval
        wa = weight_at(self.model, a)
        wb = weight_at(self.model, b)
        lo_w, hi_w = min(wa, wb), max(wa, wb)
        if w < lo_w or w > hi_w:
            return None
        lo, hi = a, b
        increasing = self.mono == "increasing"
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (weight_at(self.model, mid) <= w) == increasing:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, abs(lo)):
                break
        return 0.5 * (lo + hi)

    def _exact_mass(self, which: str, w: float) -> float:
        key = (which, float(w))
        if key in self._exact_cache:
            return self._exact_cache[key]
        model = self.model
        dens = model.target_density if which == "pi" else model.proposal_density
        f = lambda y: float(dens(y))
        sup = model.support
        if self.degenerate:
            val = (self.pi_total if which == "pi" else self.p_total) if w >= self.wstar else 0.0
        elif self.mono in ("increasing", "decreasing"):
            x_w = self._sublevel_boundary(w)
            a, b = sup.lower, sup.upper
            if x_w is None:
                wa = weight_at(model, self.interval[0])
                wb = weight_at(model, self.interval[1])
                if w >= max(wa, wb):
                    val = integrate(f, a, b, self.cfg)
                else:
                    val = 0.0
            elif self.mono == "decreasing":
                val = integrate(f, x_w, b, self.cfg)
            else:
                val = integrate(f, a, x_w, self.cfg)
        elif sup.kind == "interval":
            a, b = self.interval
            ind = lambda y: float(dens(y)) if weight_at(model, y) <= w else 0.0
            wide = QuadratureConfig(
                abs_tol=self.cfg.abs_tol, rel_tol=self.cfg.rel_tol,
                max_subdivisions=2 * self.cfg.max_subdivisions,
            )
            val = integrate(ind, a, b, wide)
        else:
            raise PointOutsideSupport(
                "exact sub-level masses need a 1-D support; simplex pairs are grid/MC only"
            )
        self._exact_cache[key] = val
        return val

    def pi_tilde(self, w: float) -> float:
        """Target mass of C(w), by quadrature (cached)."""
        return self._exact_mass("pi", float(w))

    def p_tilde(self, w: float) -> float:
        """Proposal mass of C(w), by quadrature (cached)."""
        return self._exact_mass("p", float(w))

    def tn_table(self, n: int) -> "_TnTable":
        tbl = self._tn_tables.get(n)
        if tbl is None:
            tbl = _TnTable(self, n)
            self._tn_tables[n] = tbl
        return tbl


class _TnTable:
    """T_n and its deficit 1 - T_n at O(1) cost per evaluation.

    Precomputes cell integrals of n lam^{n-1}/v^2 over the lam grid
    (vectorized fixed-order Gauss-Legendre against the monotone cubic), so
    I_n(u) = integral_u^{w*} comes from a cumulative sum plus one partial
    cell. The deficit is assembled as rate^n - I_n(u): every term lives at
    the rate^n scale, so no precision is lost to cancellation against 1.
    """

    def __init__(self, pair: WeightCdfPair, n: int):
        self.pair = pair
        self.n = int(n)
        self.rn = pair.rate ** n
        if pair.degenerate:
            self._nodes = None
            self._top = 0.0
            return
        g = pair.w_grid
        f = lambda v: self.n * np.asarray(pair._lam_interp(v), dtype=float) ** (self.n - 1) / v**2
        cells = _gl_segments(f, g[:-1], g[1:])
        # I at node k counts everything from g[k] up to the grid top
        self._cum = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
        # continuation piece between the grid top and w* (empty when attained)
        if g[-1] < pair.wstar * (1.0 - 1e-15):
            cont = lambda v: (self.n
                              * np.maximum(pair.p_total - pair.pi_total / v, 0.0) ** (self.n - 1)
                              / v**2)
            self._top = float(_gl_segments(cont, np.array([g[-1]]), np.array([pair.wstar]))[0])
        else:
            self._top = 0.0
        self._nodes = g

    def _integral_to_wstar(self, u: float) -> float:
        pair = self.pair
        if u >= pair.wstar or pair.degenerate:
            return 0.0
        g = self._nodes
        if u >= g[-1]:
            cont = lambda v: (self.n
                              * np.maximum(pair.p_total - pair.pi_total / v, 0.0) ** (self.n - 1)
                              / v**2)
            return float(_gl_segments(cont, np.array([u]), np.array([pair.wstar]))[0])
        u = max(u, g[0])
        k = int(np.searchsorted(g, u, side="right")) - 1
        k = min(max(k, 0), g.size - 2)
        f = lambda v: self.n * np.asarray(pair._lam_interp(v), dtype=float) ** (self.n - 1) / v**2
        part = float(_gl_segments(f, np.array([u]), np.array([g[k + 1]]))[0])
        return part + self._cum[k + 1] + self._top

    def deficit(self, u: float) -> float:
        """1 - T_n(u), exact at its own scale."""
        if u >= self.pair.wstar:
            return (1.0 - 1.0 / u) ** self.n
        return self.rn - self._integral_to_wstar(u)

    def t(self, u: float) -> float:
        return 1.0 - self.deficit(u)


# ---------------------------------------------------------------------------
# pair construction
# ---------------------------------------------------------------------------

def _monotone_pair(model, summary, nodes, cfg):
    a_eff, b_eff, _, _ = effective_interval(model, cfg)
    mono = model.hints.weight_monotone
    wa = weight_at(model, a_eff)
    wb = weight_at(model, b_eff)
    w_lo = min(wa, wb)
    w_hi = min(max(wa, wb), summary.wstar)
    if w_hi - w_lo <= 1e-9 * max(w_hi, 1.0):
        # flat weight (target equals proposal): trivial pair
        return WeightCdfPair(
            model, summary, None, None, None,
            pi_total=1.0, p_total=1.0, mono=mono,
            interval=(a_eff, b_eff), cfg=cfg, degenerate=True,
        )
    w_lo = max(w_lo, w_hi * 1e-13)
    if nodes is None:
        grid = np.exp(np.linspace(math.log(w_lo), math.log(w_hi), GRID_NODES_MONOTONE))
    else:
        grid = np.sort(np.asarray(nodes, dtype=float))
    grid[-1] = w_hi

    increasing = mono == "increasing"
    lo = np.full_like(grid, a_eff)
    hi = np.full_like(grid, b_eff)
    w_of = lambda xs: (np.asarray(model.target_density(xs), dtype=float)
                       / np.asarray(model.proposal_density(xs), dtype=float))
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = w_of(mid) <= grid
        if increasing:
            # below the level: the boundary lies at or beyond mid
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        else:
            lo = np.where(below, lo, mid)
            hi = np.where(below, mid, hi)
    bound = 0.5 * (lo + hi)
    # C(w_k) is [a, bound_k] (increasing) or [bound_k, b] (decreasing);
    # accumulate masses from the small-w end so tiny values stay relatively exact
    pi_f = lambda xs: np.asarray(model.target_density(xs), dtype=float)
    p_f = lambda xs: np.asarray(model.proposal_density(xs), dtype=float)
    sup = model.support
    if increasing:
        seg_pi = _gl_segments(pi_f, bound[:-1], bound[1:])
        seg_p = _gl_segments(p_f, bound[:-1], bound[1:])
        head_pi = integrate(lambda y: float(model.target_density(y)), sup.lower, bound[0], cfg)
        head_p = integrate(lambda y: float(model.proposal_density(y)), sup.lower, bound[0], cfg)
        pi_grid = head_pi + np.concatenate([[0.0], np.cumsum(seg_pi)])
        p_grid = head_p + np.concatenate([[0.0], np.cumsum(seg_p)])
        rest_pi = integrate(lambda y: float(model.target_density(y)), bound[-1], sup.upper, cfg)
        rest_p = integrate(lambda y: float(model.proposal_density(y)), bound[-1], sup.upper, cfg)
    else:
        seg_pi = _gl_segments(pi_f, bound[1:], bound[:-1])
        seg_p = _gl_segments(p_f, bound[1:], bound[:-1])
        head_pi = integrate(lambda y: float(model.target_density(y)), bound[0], sup.upper, cfg)
        head_p = integrate(lambda y: float(model.proposal_density(y)), bound[0], sup.upper, cfg)
        pi_grid = head_pi + np.concatenate([[0.0], np.cumsum(seg_pi)])
        p_grid = head_p + np.concatenate([[0.0], np.cumsum(seg_p)])
        rest_pi = integrate(lambda y: float(model.target_density(y)), sup.lower, bound[-1], cfg)
        rest_p = integrate(lambda y: float(model.proposal_density(y)), sup.lower, bound[-1], cfg)
    return WeightCdfPair(
        model, summary, grid, pi_grid, p_grid,
        pi_total=pi_grid[-1] + rest_pi, p_total=p_grid[-1] + rest_p,
        mono=mono, interval=(a_eff, b_eff), cfg=cfg,
    )


def _fallback_pair(model, summary, nodes, cfg):
    warnings.warn(
        "no monotone weight hint for a 1-D model; building the weight-CDF pair "
        "by indicator quadrature (slower, coarser grid)",
        NonMonotoneWeightWarning, stacklevel=3,
    )
    a_eff, b_eff, _, _ = effective_interval(model, cfg)
    xs = np.linspace(a_eff, b_eff, 4001)
    pi_v = np.asarray(model.target_density(xs), dtype=float)
    p_v = np.asarray(model.proposal_density(xs), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        wv = np.where(p_v > 0, pi_v / p_v, 0.0)
    pos = wv[wv > 0]
    w_lo = max(float(pos.min()) if pos.size else summary.wstar * 1e-13,
               summary.wstar * 1e-13)
    w_hi = min(float(wv.max()), summary.wstar)
    if nodes is None:
        grid = np.exp(np.linspace(math.log(w_lo), math.log(w_hi), GRID_NODES_FALLBACK))
    else:
        grid = np.sort(np.asarray(nodes, dtype=float))
    grid[-1] = w_hi
    wide = QuadratureConfig(abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol,
                            max_subdivisions=2 * cfg.max_subdivisions)
    w_scalar = lambda y: weight_at(model, y)
    pi_grid = np.empty_like(grid)
    p_grid = np.empty_like(grid)
    for k, wk in enumerate(grid):
        pi_grid[k] = integrate(
            lambda y: float(model.target_density(y)) if w_scalar(y) <= wk else 0.0,
            a_eff, b_eff, wide)
        p_grid[k] = integrate(
            lambda y: float(model.proposal_density(y)) if w_scalar(y) <= wk else 0.0,
            a_eff, b_eff, wide)
    tot_pi = integrate(lambda y: float(model.target_density(y)),
                       model.support.lower, model.support.upper, cfg)
    tot_p = integrate(lambda y: float(model.proposal_density(y)),
                      model.support.lower, model.support.upper, cfg)
    return WeightCdfPair(model, summary, grid, pi_grid, p_grid,
                         pi_total=tot_pi, p_total=tot_p,
                         mono=None, interval=(a_eff, b_eff), cfg=cfg)


def _mc_pair(model, summary, nodes, cfg):
    rng = np.random.Generator(np.random.Philox(key=_MC_SEED))
    m = MC_DRAWS
    sampler = model.proposal_batch_sampler
    if sampler is not None:
        draws = sampler(rng, m)
    else:
        draws = np.array([model.proposal_sampler(rng) for _ in range(m)])
    pi_v = np.asarray(model.target_density(draws), dtype=float)
    p_v = np.asarray(model.proposal_density(draws), dtype=float)
    wv = pi_v / p_v
    order = np.argsort(wv)
    w_sorted = wv[order]
    cum_w = np.cumsum(w_sorted)
    if nodes is None:
        w_lo = max(float(w_sorted[0]), summary.wstar * 1e-13)
        grid = np.exp(np.linspace(math.log(w_lo), math.log(summary.wstar),
                                  GRID_NODES_MONOTONE))
        grid[-1] = summary.wstar
    else:
        grid = np.sort(np.asarray(nodes, dtype=float))
    counts = np.searchsorted(w_sorted, grid, side="right")
    # importance identities: pi(C(w)) = E_p[w(Y) 1{w(Y)<=w}], p(C(w)) = E_p[1{w(Y)<=w}]
    p_grid = counts / m
    pi_grid = np.where(counts > 0, cum_w[np.maximum(counts - 1, 0)], 0.0) / m
    p_stderr = np.sqrt(np.maximum(p_grid * (1 - p_grid), 0.0) / m)
    second = np.concatenate([[0.0], np.cumsum(w_sorted**2)])
    pi_var = second[counts] / m - pi_grid**2
    pi_stderr = np.sqrt(np.maximum(pi_var, 0.0) / m)
    return WeightCdfPair(model, summary, grid, pi_grid, p_grid,
                         pi_total=float(wv.mean()), p_total=1.0,
                         mono=None, interval=None, cfg=cfg,
                         pi_stderr=pi_stderr, p_stderr=p_stderr, mc_draws=m)


def weight_cdf_pair(
    model: GeneralModel,
    nodes=None,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    summary: WeightSummary | None = None,
) -> WeightCdfPair:
    """Build the cached (pi_tilde, p_tilde, lam) triple for a model.

    Monotone 1-D weights get sub-level boundaries by vectorized bisection and
    segment quadrature on the default 4097-node log grid; hint-less 1-D models
    fall back to indicator quadrature on a coarser grid (with a warning);
    simplex models use importance-weighted Monte Carlo with reported standard
    errors.
    """
    if summary is None:
        summary = compute_wstar(model, cfg=cfg)
    if model.support.kind == "interval":
        if model.hints.weight_monotone in ("increasing", "decreasing"):
            return _monotone_pair(model, summary, nodes, cfg)
        return _fallback_pair(model, summary, nodes, cfg)
    if model.support.kind == "simplex":
        return _mc_pair(model, summary, nodes, cfg)
    raise PointOutsideSupport(f"unsupported support kind {model.support.kind!r}")


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------

def lambda_fn(pair: WeightCdfPair, w: float, exact: bool = False) -> float:
    """lam(w) = p_tilde(w) - pi_tilde(w)/w for w <= w*, else 1 - 1/w.

    `exact` bypasses the grid cache and evaluates the sub-level masses by
    quadrature (verification mode).
    """
    w = float(w)
    if w <= 0:
        raise ValueError("lambda is defined for positive w")
    if w >= pair.wstar:
        return 1.0 - 1.0 / w
    if exact:
        return max(pair.p_tilde(w) - pair.pi_tilde(w) / w, 0.0)
    return pair.lam_grid_at(w)


def rejection_probability(
    model: GeneralModel,
    x,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    return_stderr: bool = False,
):
    """Probability that one step from x is rejected.

    R(x) = 1 - pi_tilde(w(x))/w(x) - (1 - p_tilde(w(x))), with the sub-level
    masses resolved exactly: by the monotone-boundary split when a hint is
    available, by indicator quadrature otherwise, and by Monte Carlo (with a
    standard error) on the simplex.
    """
    wx = weight_at(model, x)
    if wx <= 0:
        raise PointOutsideSupport("rejection probability needs w(x) > 0")
    sup = model.support
    if sup.kind == "interval":
        a, b = sup.lower, sup.upper
        mono = model.hints.weight_monotone
        if mono in ("increasing", "decreasing"):
            # the sub-level boundary at level w(x) is x itself
            if mono == "decreasing":
                pi_m = integrate(lambda y: float(model.target_density(y)), x, b, cfg)
                p_m = integrate(lambda y: float(model.proposal_density(y)), x, b, cfg)
            else:
                pi_m = integrate(lambda y: float(model.target_density(y)), a, x, cfg)
                p_m = integrate(lambda y: float(model.proposal_density(y)), a, x, cfg)
        else:
            warnings.warn(
                "no monotone hint; rejection probability via indicator quadrature",
                NonMonotoneWeightWarning, stacklevel=2,
            )
            wide = QuadratureConfig(abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol,
                                    max_subdivisions=2 * cfg.max_subdivisions)
            a_eff, b_eff, _, _ = effective_interval(model, cfg)
            pi_m = integrate(
                lambda y: float(model.target_density(y)) if weight_at(model, y) <= wx else 0.0,
                a_eff, b_eff, wide)
            p_m = integrate(
                lambda y: float(model.proposal_density(y)) if weight_at(model, y) <= wx else 0.0,
                a_eff, b_eff, wide)
        val = float(np.clip(1.0 - pi_m / wx - (1.0 - p_m), 0.0, 1.0))
        return (val, 0.0) if return_stderr else val
    if sup.kind == "simplex":
        rng = np.random.Generator(np.random.Philox(key=_MC_SEED + 1))
        m = MC_DRAWS
        sampler = model.proposal_batch_sampler
        if sampler is not None:
            draws = sampler(rng, m)
        else:
            draws = np.array([model.proposal_sampler(rng) for _ in range(m)])
        wv = (np.asarray(model.target_density(draws), dtype=float)
              / np.asarray(model.proposal_density(draws), dtype=float))
        # R(x) = E_p[(1 - w(Y)/w(x))^+]
        sample = np.maximum(1.0 - wv / wx, 0.0)
        val = float(np.clip(sample.mean(), 0.0, 1.0))
        err = float(sample.std(ddof=1) / math.sqrt(m))
        return (val, err) if return_stderr else val
    raise PointOutsideSupport(f"unsupported support kind {sup.kind!r}")


def t_n(
    pair: WeightCdfPair,
    n: int,
    w: float,
    cfg: QuadratureConfig | None = None,
    method: str = "split",
) -> float:
    """T_n(w) = integral_w^inf n lam(v)^{n-1} / v^2 dv.

    method="split" (default) integrates the head [w, w*] on the cached grid
    and uses the closed form 1 - (1 - 1/u)^n for the tail past w*.
    method="quadrature" integrates the whole range numerically from the lam
    branches themselves: the verification mode the closed form is tested
    against.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    w = float(w)
    if w <= 0:
        raise ValueError("T_n is defined for positive w")
    cfg = pair.cfg if cfg is None else cfg
    if method == "split":
        return pair.tn_table(n).t(w)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    deep = QuadratureConfig(abs_tol=0.0, rel_tol=min(cfg.rel_tol, 1e-10),
                            max_subdivisions=cfg.max_subdivisions)
    f = lambda v: n * lambda_fn(pair, v) ** (n - 1) / v**2
    if w >= pair.wstar:
        return integrate(f, w, np.inf, deep)
    head = integrate(f, w, pair.wstar, deep)
    tail = integrate(f, pair.wstar, np.inf, deep)
    return head + tail


def _split_regions(model, x, wx):
    """(constant-region, varying-region) of y-space for max(w(x), w(y)).

    On a monotone 1-D support the constant region is where w(y) <= w(x):
    beyond x for a decreasing weight, before x for an increasing one.
    """
    a, b = model.support.lower, model.support.upper
    if model.hints.weight_monotone == "decreasing":
        return (x, b), (a, x)
    if model.hints.weight_monotone == "increasing":
        return (a, x), (x, b)
    return None, (a, b)


def n_step_kernel(
    model: GeneralModel,
    pair: WeightCdfPair,
    n: int,
    x,
    interval=None,
    cfg: QuadratureConfig | None = None,
) -> float:
    """P^n(x, A) for an interval A (defaults to the whole support).

    Absolutely continuous part T_n(max(w(x), w(y))) pi(y) dy over A plus the
    rejection atom lam(w(x))^n when x lies in A.
    """
    cfg = pair.cfg if cfg is None else cfg
    sup = model.support
    if sup.kind != "interval":
        raise PointOutsideSupport("n-step kernel evaluation is 1-D only")
    lo, hi = (sup.lower, sup.upper) if interval is None else map(float, interval)
    if lo > hi:
        raise ValueError("interval endpoints out of order")
    wx = min(weight_at(model, x), pair.wstar)
    tbl = pair.tn_table(n)
    atom = lambda_fn(pair, wx) ** n if lo <= x <= hi else 0.0

    const_reg, vary_reg = _split_regions(model, x, wx)
    dens = lambda y: float(model.target_density(y))
    total = 0.0
    if const_reg is not None:
        c_lo, c_hi = max(const_reg[0], lo), min(const_reg[1], hi)
        if c_hi > c_lo:
            total += tbl.t(wx) * integrate(dens, c_lo, c_hi, cfg)
        v_lo, v_hi = max(vary_reg[0], lo), min(vary_reg[1], hi)
        if v_hi > v_lo:
            total += integrate(lambda y: tbl.t(weight_at(model, y)) * dens(y),
                               v_lo, v_hi, cfg)
    else:
        total += integrate(
            lambda y: tbl.t(max(wx, weight_at(model, y))) * dens(y),
            lo, hi, cfg,
            points=[x] if np.isfinite(lo) and np.isfinite(hi) and lo < x < hi else None,
        )
    return atom + total


def tv_at_point_general(
    model: GeneralModel,
    pair: WeightCdfPair,
    n: int,
    x,
    cfg: QuadratureConfig | None = None,
) -> float:
    """||P^n(x, .) - pi||_TV, exactly.

    P^n(x, .) is an atom at x plus a density; against the atomless pi the
    distance is half the atom mass plus half the L1 gap of the densities:

        TV = (lam(w(x))^n + integral |T_n(max(w(x), w(y))) - 1| pi(y) dy) / 2.

    The integrand is the T_n deficit, computed at its own scale, so values as
    small as rate^80 come out with full relative accuracy.
    """
    cfg = pair.cfg if cfg is None else cfg
    sup = model.support
    if sup.kind != "interval":
        raise PointOutsideSupport("pointwise TV evaluation is 1-D only")
    wx = min(weight_at(model, x), pair.wstar)
    tbl = pair.tn_table(n)
    atom = lambda_fn(pair, wx) ** n
    dens = lambda y: float(model.target_density(y))
    deep = QuadratureConfig(abs_tol=0.0, rel_tol=cfg.rel_tol,
                            max_subdivisions=cfg.max_subdivisions)
    const_reg, vary_reg = _split_regions(model, x, wx)
    total = 0.0
    if const_reg is not None:
        c_lo, c_hi = const_reg
        if c_hi > c_lo:
            total += abs(tbl.deficit(wx)) * integrate(dens, c_lo, c_hi, cfg)
        v_lo, v_hi = vary_reg
        if v_hi > v_lo:
            total += integrate(lambda y: abs(tbl.deficit(weight_at(model, y))) * dens(y),
                               v_lo, v_hi, deep)
    else:
        total += integrate(
            lambda y: abs(tbl.deficit(max(wx, weight_at(model, y)))) * dens(y),
            sup.lower, sup.upper, deep,
        )
    return 0.5 * (atom + total)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateReport:
    """Convergence-rate classification of one model.

    speed_kind: "exact-equality" (supremum attained: the worst-case TV equals
    rate^n), "rate-only" (supremum approached: rate^n is the upper envelope
    and the decay rate, but not an equality), or "not-geometric" (weight
    unbounded: no geometric rate exists).
    """

    wstar: float
    attained: bool
    exact_rate: float | None
    speed_kind: str
    boundary_warning: bool = False
    method: str = ""
    label: str = ""

    def steps_to_eps(self, eps: float) -> float:
        """Fractional n with rate^n = eps; the number of steps needed for
        eps-accuracy (both necessary and sufficient when the speed is exact)."""
        if self.exact_rate is None:
            raise UnboundedWeight("no geometric rate: steps-to-accuracy undefined")
        if not 0.0 < eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.exact_rate == 0.0:
            return 0.0
        return math.log(eps) / math.log(self.exact_rate)

    def steps_to_eps_ceil(self, eps: float) -> int:
        return int(math.ceil(self.steps_to_eps(eps)))

    def upper_envelope(self, n) -> np.ndarray:
        if self.exact_rate is None:
            raise UnboundedWeight("no geometric envelope for a non-geometric chain")
        return self.exact_rate ** np.asarray(n, dtype=float)

    def lower_envelope(self, n, slack: float = 0.0) -> np.ndarray:
        """Lower envelope (rate - slack)^n; slack > 0 is how the rate-only
        regime is stated (any positive slack works, none is canonical)."""
        if self.exact_rate is None:
            raise UnboundedWeight("no geometric envelope for a non-geometric chain")
        base = max(self.exact_rate - slack, 0.0)
        return base ** np.asarray(n, dtype=float)


def rate_report(
    model: GeneralModel,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    budget: int | None = None,
) -> RateReport:
    """Classify a continuous model and package its rate facts."""
    try:
        summary = compute_wstar(model, budget=budget, cfg=cfg)
    except UnboundedWeight:
        return RateReport(
            wstar=math.inf, attained=False, exact_rate=None,
            speed_kind="not-geometric", label=model.label,
        )
    rate = 1.0 - 1.0 / summary.wstar
    kind = "exact-equality" if summary.attained else "rate-only"
    return RateReport(
        wstar=summary.wstar, attained=summary.attained, exact_rate=rate,
        speed_kind=kind, boundary_warning=summary.boundary_warning,
        method=summary.method, label=model.label,
    )


@dataclass(frozen=True)
class GeneralPointRate:
    """Fitted decay rate of TV from one starting point.

    The true rate is bracketed by [R(x), 1 - 1/w*] and (for the models in the
    registry, whose densities are locally Lipschitz) equals the upper end.
    """

    x: Any
    ns: np.ndarray
    tv: np.ndarray
    fitted_rate: float
    lower_bound: float
    upper_bound: float
    predicted_rate: float


def per_point_rate_general(
    model: GeneralModel,
    pair: WeightCdfPair,
    x,
    n_max: int,
    cfg: QuadratureConfig | None = None,
    window_start: int | None = None,
) -> GeneralPointRate:
    """Fit the decay rate of ||P^n(x,.) - pi||_TV over the tail window."""
    cfg = pair.cfg if cfg is None else cfg
    ns = np.arange(1, int(n_max) + 1)
    tv = np.array([tv_at_point_general(model, pair, int(n), x, cfg) for n in ns])
    start = (n_max / 2.0) if window_start is None else window_start
    fitted = fit_decay_rate(ns, tv, window_start=start, floor=0.0)
    if fitted is None:
        if np.all(tv <= 0.0):
            fitted = 0.0
        else:
            raise DegenerateFit(f"TV from {x!r} leaves too few positive points to fit")
    rx = rejection_probability(model, x, cfg)
    return GeneralPointRate(
        x=x, ns=ns, tv=tv, fitted_rate=float(fitted),
        lower_bound=float(rx), upper_bound=pair.rate, predicted_rate=pair.rate,
    )
