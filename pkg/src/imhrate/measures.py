"""Probability-model types and the weight function w = target/proposal.

The weight function drives everything downstream: its supremum w* fixes the
geometric convergence rate 1 - 1/w* of an independence sampler, and whether
the supremum is attained decides between an exact-speed statement and a
rate-only statement.

Discrete models are kept in a canonical order (weights non-increasing), so the
first state always carries w*. The permutation back to the caller's indexing
is recorded on the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np
from scipy.optimize import minimize

from .errors import (
    BudgetExhausted,
    InvalidModel,
    PointOutsideSupport,
    UnboundedWeight,
    ZeroProposalDensity,
)
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, integrate, upper_quantile

__all__ = [
    "SupportDescriptor",
    "StructureHints",
    "WeightSummary",
    "DiscreteModel",
    "GeneralModel",
    "weight_at",
    "log_weight_at",
    "compute_wstar",
    "wstar_discrete",
]

PMF_SUM_TOL = 1e-12
HINT_CONSISTENCY_TOL = 1e-9
TRUNCATION_TAIL = 1e-10       # infinite ends cut where proposal mass beyond is this small
UNBOUNDED_THRESHOLD = 1e8
GRID_BUDGET_1D = 10_001
SCAN_BUDGET_SIMPLEX = 200_000
REFINE_XTOL = 1e-10
_SCAN_SEED = 0x5EED  # fixed stream so compute_wstar is a pure function of its inputs


# ---------------------------------------------------------------------------
# support and hints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportDescriptor:
    """Where a continuous model lives.

    kind is one of "interval" (1-D, possibly infinite endpoints), "simplex"
    (probability vectors of length K, stored in the first K-1 coordinates),
    or "box" (product of 1-D intervals).
    """

    kind: str
    dimension: int
    lower: float = math.nan
    upper: float = math.nan
    bounds: tuple = ()

    def __post_init__(self):
        if self.kind not in ("interval", "simplex", "box"):
            raise InvalidModel(f"unknown support kind {self.kind!r}")
        if self.dimension < 1:
            raise InvalidModel("support dimension must be positive")
        if self.kind == "interval" and not self.lower < self.upper:
            raise InvalidModel("interval endpoints must be ordered")
        if self.kind == "simplex" and self.dimension < 2:
            raise InvalidModel("simplex dimension K must be at least 2")
        if self.kind == "box":
            for a, b in self.bounds:
                if not a < b:
                    raise InvalidModel("box endpoints must be ordered")

    @classmethod
    def interval(cls, lower: float, upper: float) -> "SupportDescriptor":
        return cls(kind="interval", dimension=1, lower=float(lower), upper=float(upper))

    @classmethod
    def simplex(cls, k: int) -> "SupportDescriptor":
        return cls(kind="simplex", dimension=int(k))

    @classmethod
    def box(cls, bounds) -> "SupportDescriptor":
        bb = tuple((float(a), float(b)) for a, b in bounds)
        return cls(kind="box", dimension=len(bb), bounds=bb)

    def contains(self, x) -> bool:
        if self.kind == "interval":
            return self.lower <= float(x) <= self.upper
        if self.kind == "simplex":
            pt = np.atleast_1d(np.asarray(x, dtype=float))
            if pt.shape != (self.dimension - 1,):
                return False
            return bool(np.all(pt >= -1e-12) and pt.sum() <= 1.0 + 1e-12)
        pt = np.atleast_1d(np.asarray(x, dtype=float))
        return all(a <= v <= b for v, (a, b) in zip(pt, self.bounds))


@dataclass(frozen=True)
class StructureHints:
    """Optional analytic facts the caller knows about the weight function."""

    weight_monotone: str | None = None        # "increasing" | "decreasing" | "none"
    known_argmax: Any = None
    known_wstar: float | None = None
    wstar_attained: bool | None = None

    def __post_init__(self):
        if self.weight_monotone not in (None, "increasing", "decreasing", "none"):
            raise InvalidModel(f"bad weight_monotone hint {self.weight_monotone!r}")
        if self.known_wstar is not None and not self.known_wstar > 0:
            raise InvalidModel("known_wstar must be positive")


@dataclass(frozen=True)
class WeightSummary:
    """Result of a w* search.

    boundary_warning is set when the maximizer sits on a truncation boundary
    (the search cannot tell an attained supremum from an approached one there;
    it is reported as attained with this flag raised).
    """

    wstar: float
    argmax: Any
    attained: bool
    method: str  # "analytic-hint" | "grid-refine" | "monte-carlo-sup"
    boundary_warning: bool = False


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteModel:
    """Finite-state independence-sampler instance in canonical (w non-increasing) order.

    `order[k]` is the caller's index of canonical state k. States the proposal
    cannot reach (p_i = 0) are dropped at construction when their target mass
    is also zero, and rejected otherwise.
    """

    target: np.ndarray
    proposal: np.ndarray
    weight: np.ndarray
    order: np.ndarray
    label: str = ""

    @classmethod
    def from_pmfs(cls, target, proposal, label: str = "") -> "DiscreteModel":
        pi = np.asarray(target, dtype=float).copy()
        p = np.asarray(proposal, dtype=float).copy()
        if pi.ndim != 1 or p.shape != pi.shape or pi.size < 1:
            raise InvalidModel("target and proposal must be 1-D vectors of equal length")
        if np.any(pi < 0) or np.any(p < 0):
            raise InvalidModel("probability vectors must be nonnegative")
        if abs(pi.sum() - 1.0) > PMF_SUM_TOL or abs(p.sum() - 1.0) > PMF_SUM_TOL:
            raise InvalidModel("probability vectors must each sum to 1 within 1e-12")
        if np.any((pi > 0) & (p == 0)):
            raise InvalidModel("support containment violated: target mass where proposal is zero")
        keep = p > 0
        pi, p = pi[keep], p[keep]
        kept_idx = np.nonzero(keep)[0]
        w = pi / p
        order = np.argsort(-w, kind="stable")
        model = cls(
            target=pi[order],
            proposal=p[order],
            weight=w[order],
            order=kept_idx[order],
            label=label,
        )
        for arr in (model.target, model.proposal, model.weight, model.order):
            arr.setflags(write=False)
        return model

    def __post_init__(self):
        w = self.weight
        if np.any(np.diff(w) > 0):
            raise InvalidModel("weights must be non-increasing (use from_pmfs)")
        if np.any(self.proposal <= 0):
            raise InvalidModel("canonical model must have positive proposal mass everywhere")

    @property
    def n(self) -> int:
        return self.target.size

    def to_input_index(self, state: int) -> int:
        """Translate a canonical state index back to the caller's indexing."""
        return int(self.order[state])


@dataclass(frozen=True)
class GeneralModel:
    """Continuous-state independence-sampler instance.

    Density callables must be vectorized over numpy arrays (1-D supports take
    scalar-or-array x; simplex supports take points of shape (K-1,) or batches
    (m, K-1)). proposal_sampler(rng) draws one point from the proposal.
    """

    target_density: Callable
    target_log_density: Callable
    proposal_density: Callable
    proposal_sampler: Callable
    support: SupportDescriptor
    hints: StructureHints = field(default_factory=StructureHints)
    proposal_log_density: Callable | None = None
    proposal_batch_sampler: Callable | None = None
    label: str = ""

    def __post_init__(self):
        h = self.hints
        if h.known_argmax is not None and h.known_wstar is not None:
            got = weight_at(self, h.known_argmax)
            if abs(got - h.known_wstar) > HINT_CONSISTENCY_TOL * max(1.0, abs(h.known_wstar)):
                raise InvalidModel(
                    f"hinted argmax has weight {got!r}, not the hinted wstar {h.known_wstar!r}"
                )

    def with_hints(self, hints: StructureHints) -> "GeneralModel":
        return replace(self, hints=hints)

    def validate_normalization(self, cfg: QuadratureConfig = DEFAULT_QUADRATURE, tol: float = 1e-6):
        """Check both densities integrate to 1 over a 1-D support (quadrature)."""
        if self.support.kind != "interval":
            raise InvalidModel("normalization check by quadrature needs a 1-D interval support")
        a, b = self.support.lower, self.support.upper
        for name, dens in (("target", self.target_density), ("proposal", self.proposal_density)):
            total = integrate(lambda y: float(dens(y)), a, b, cfg)
            if abs(total - 1.0) > tol:
                raise InvalidModel(f"{name} density integrates to {total!r}, not 1")


# ---------------------------------------------------------------------------
# weight evaluation
# ---------------------------------------------------------------------------

def weight_at(model: DiscreteModel | GeneralModel, x) -> float:
    """w(x) = target(x)/proposal(x).

    For discrete models x is a canonical state index. For continuous models the
    ratio is computed in the log domain whenever both log densities are
    available.
    """
    if isinstance(model, DiscreteModel):
        i = int(x)
        if not 0 <= i < model.n:
            raise PointOutsideSupport(f"state {i} outside 0..{model.n - 1}")
        return float(model.weight[i])
    if not model.support.contains(x):
        raise PointOutsideSupport(f"point {x!r} outside the declared support")
    if model.proposal_log_density is not None and model.target_log_density is not None:
        lw = log_weight_at(model, x)
        return float(np.exp(lw)) if lw > -np.inf else 0.0
    p = float(model.proposal_density(x))
    if p <= 0.0:
        raise ZeroProposalDensity(f"proposal density vanishes at {x!r}")
    return float(model.target_density(x)) / p


def log_weight_at(model: GeneralModel, x) -> float:
    """log w(x), using log densities where available."""
    if model.target_log_density is not None:
        lt = float(model.target_log_density(x))
    else:
        lt = float(np.log(model.target_density(x)))
    if model.proposal_log_density is not None:
        lp = float(model.proposal_log_density(x))
    else:
        p = float(model.proposal_density(x))
        if p <= 0.0:
            raise ZeroProposalDensity(f"proposal density vanishes at {x!r}")
        lp = float(np.log(p))
    if not np.isfinite(lp):
        raise ZeroProposalDensity(f"proposal density vanishes at {x!r}")
    return lt - lp


def _weights_on_grid(model: GeneralModel, xs: np.ndarray) -> np.ndarray:
    pi = np.asarray(model.target_density(xs), dtype=float)
    p = np.asarray(model.proposal_density(xs), dtype=float)
    bad = (p <= 0) & (pi > 0)
    if np.any(bad):
        raise ZeroProposalDensity(
            f"proposal density vanishes at {xs[bad][0]!r} where the target does not"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(p > 0, pi / p, 0.0)
    return w


def effective_interval(
    model: GeneralModel, cfg: QuadratureConfig = DEFAULT_QUADRATURE
) -> tuple[float, float, bool, bool]:
    """Finite search interval for a 1-D model.

    Infinite endpoints are replaced by the quantile where the proposal has
    accumulated all but TRUNCATION_TAIL of its mass; the two booleans flag
    which ends were truncated.
    """
    a, b = model.support.lower, model.support.upper
    lo_trunc = hi_trunc = False
    dens = lambda y: float(model.proposal_density(y))
    if math.isinf(b):
        start = a if not math.isinf(a) else 0.0
        # mass below `start` is only nonzero when the lower end is infinite
        before = integrate(dens, -np.inf, start, cfg) if math.isinf(a) else 0.0
        b = upper_quantile(dens, start, (1.0 - TRUNCATION_TAIL) - before, cfg)
        hi_trunc = True
    if math.isinf(a):
        # mass of the proposal below b is 1 (finite b) or 1 - tail (truncated b)
        below_b = 1.0 - (TRUNCATION_TAIL if hi_trunc else 0.0)
        mirrored = lambda y: float(model.proposal_density(-y))
        a = -upper_quantile(mirrored, -b, below_b - TRUNCATION_TAIL, cfg)
        lo_trunc = True
    return a, b, lo_trunc, hi_trunc


def _golden_refine(f, xa, xm, xb):
    """Golden-section maximum of f on the bracketing cell [xa, xb].

    Returns at least the value at the grid node xm, so refinement never
    loses to the raw scan.
    """
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = xa, xb
    c = hi - inv * (hi - lo)
    d = lo + inv * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > REFINE_XTOL:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = f(d)
    mid = 0.5 * (lo + hi)
    best_x, best_f = xm, f(xm)
    for x, fx in ((mid, f(mid)), (c, fc), (d, fd)):
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def _wstar_interval(model: GeneralModel, budget: int, cfg: QuadratureConfig) -> WeightSummary:
    lo, hi, lo_trunc, hi_trunc = effective_interval(model, cfg)
    mono = model.hints.weight_monotone
    w_scalar = lambda t: weight_at(model, t) if model.support.contains(t) else 0.0

    if mono in ("increasing", "decreasing"):
        if mono == "decreasing":
            arg, on_trunc = (lo, lo_trunc)
        else:
            arg, on_trunc = (hi, hi_trunc)
        ws = w_scalar(arg)
        if ws > UNBOUNDED_THRESHOLD and on_trunc:
            raise UnboundedWeight(
                "weight exceeds threshold at the truncation boundary; "
                "the sampler is not geometrically ergodic"
            )
        attained = model.hints.wstar_attained
        if attained is None:
            attained = True
        return WeightSummary(wstar=ws, argmax=arg, attained=attained,
                             method="analytic-hint", boundary_warning=on_trunc)

    xs = np.linspace(lo, hi, budget)
    ws = _weights_on_grid(model, xs)
    k = int(np.argmax(ws))
    wmax = float(ws[k])
    at_lo_edge = k <= 1
    at_hi_edge = k >= budget - 2
    if wmax > UNBOUNDED_THRESHOLD:
        tail = ws[-10:] if at_hi_edge else ws[:10][::-1]
        if (at_hi_edge and hi_trunc or at_lo_edge and lo_trunc) and np.all(np.diff(tail) >= 0):
            raise UnboundedWeight(
                "weight grows beyond threshold toward an infinite support boundary; "
                "the sampler is not geometrically ergodic"
            )
    xa = xs[max(k - 1, 0)]
    xb = xs[min(k + 1, budget - 1)]
    arg, wmax = _golden_refine(w_scalar, xa, xs[k], xb)
    on_trunc = (at_lo_edge and lo_trunc) or (at_hi_edge and hi_trunc)
    return WeightSummary(wstar=float(wmax), argmax=float(arg), attained=True,
                         method="grid-refine", boundary_warning=on_trunc)


def _wstar_simplex(model: GeneralModel, budget: int) -> WeightSummary:
    k = model.support.dimension
    if k == 2:
        # one free coordinate; reuse the 1-D grid machinery
        xs = np.linspace(0.0, 1.0, budget)[:, None]
        ws = _weights_on_grid(model, xs)
        i = int(np.argmax(ws))
        f = lambda t: float(weight_at(model, np.array([t]))) if 0.0 <= t <= 1.0 else 0.0
        arg, wmax = _golden_refine(f, xs[max(i - 1, 0), 0], xs[i, 0], xs[min(i + 1, budget - 1), 0])
        return WeightSummary(wstar=float(wmax), argmax=np.array([arg]), attained=True,
                             method="grid-refine")
    rng = np.random.Generator(np.random.Philox(key=_SCAN_SEED))
    draws = rng.dirichlet(np.ones(k), size=budget)[:, : k - 1]
    ws = _weights_on_grid(model, draws)
    best = draws[int(np.argmax(ws))]

    def neg(theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < 0) or theta.sum() > 1.0:
            return np.inf
        return -float(weight_at(model, theta))

    res = minimize(neg, best, method="Nelder-Mead",
                   options={"xatol": REFINE_XTOL, "fatol": 1e-14, "maxiter": 20_000})
    arg = np.asarray(res.x, dtype=float)
    return WeightSummary(wstar=float(-res.fun), argmax=arg, attained=True,
                         method="monte-carlo-sup")


def compute_wstar(
    model: GeneralModel,
    budget: int | None = None,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> WeightSummary:
    """Locate w* = sup w for a continuous model.

    Hints win when present; otherwise 1-D interval supports get a dense grid
    scan with golden-section refinement of the bracketing cell, and simplex
    supports get a sampled scan with a local polish. Raises UnboundedWeight
    when the weight climbs past UNBOUNDED_THRESHOLD toward an infinite
    boundary (no geometric rate exists then).
    """
    h = model.hints
    if h.known_wstar is not None:
        attained = h.wstar_attained if h.wstar_attained is not None else (h.known_argmax is not None)
        return WeightSummary(wstar=float(h.known_wstar), argmax=h.known_argmax,
                             attained=attained, method="analytic-hint")
    if model.support.kind == "interval":
        budget = GRID_BUDGET_1D if budget is None else int(budget)
        if budget < 100:
            raise BudgetExhausted("w* search needs a budget of at least 100 evaluations")
        return _wstar_interval(model, budget, cfg)
    if model.support.kind == "simplex":
        budget = SCAN_BUDGET_SIMPLEX if budget is None else int(budget)
        if budget < 100:
            raise BudgetExhausted("w* search needs a budget of at least 100 evaluations")
        return _wstar_simplex(model, budget)
    raise InvalidModel(f"w* search not implemented for support kind {model.support.kind!r}")


def wstar_discrete(model: DiscreteModel) -> WeightSummary:
    """w* for a finite model: the first canonical weight, always attained."""
    return WeightSummary(
        wstar=float(model.weight[0]),
        argmax=model.to_input_index(0),
        attained=True,
        method="grid-refine",
    )
