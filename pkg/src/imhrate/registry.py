"""Executable registry of worked examples with analytic ground truth.

Each entry builds a model (or chain fixture) whose key quantities are known
in closed form, so the generic machinery can be tested against them. Truths
carry a provenance tag: LITERATURE for values quoted from published analyses
of these chains, DERIVED for values worked out here (with the derivation in
the docstring or note).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np
from scipy.special import gammaln

from .discrete import MatrixChain, TransitionMatrix
from .errors import DeltaOutOfRange, ModeUndefined, ThetaOutOfRange, UnknownModel
from .measures import DiscreteModel, GeneralModel, StructureHints, SupportDescriptor
from .quadrature import DEFAULT_QUADRATURE, integrate
from .samplers import ProposalKernel

__all__ = [
    "Provenance",
    "Truth",
    "RegistryEntry",
    "MhFixture",
    "three_point_chain",
    "exponential_exponential",
    "dirichlet_multinomial",
    "dirichlet_wstar",
    "dirichlet_argmax",
    "stirling_wstar",
    "rate_not_attained_model",
    "cauchy_rwmh",
    "uniform_rwmh",
    "sharpness_chains",
    "REGISTRY",
    "build_model",
    "registry_entry",
]


class Provenance(enum.Enum):
    LITERATURE = "literature"
    DERIVED = "derived"


@dataclass(frozen=True)
class Truth:
    """A named analytic quantity with its provenance."""

    value: Any
    provenance: Provenance
    note: str = ""


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    kind: str                      # "general" | "discrete" | "matrix" | "mh"
    build: Callable[..., Any]
    truths: Mapping[str, Truth]


@dataclass(frozen=True)
class MhFixture:
    """A random-walk Metropolis fixture: target plus a window proposal.

    Not an independence sampler; exists to contrast per-point behavior. The
    rejection probability at x is 1 - E_q[min(1, target(y)/target(x))] with
    y uniform on [x - window, x + window].
    """

    target_density: Callable
    target_log_density: Callable
    kernel: ProposalKernel
    window: float
    support: SupportDescriptor
    label: str = ""

    def rejection_probability(self, x: float, cfg=DEFAULT_QUADRATURE) -> float:
        fx = float(self.target_density(x))
        if fx <= 0.0:
            raise ValueError(f"target density is zero at {x!r}")
        q = 1.0 / (2.0 * self.window)

        def acc(y):
            return q * min(1.0, float(self.target_density(y)) / fx)

        kinks = [k for k in (self.support.lower, self.support.upper) if np.isfinite(k)]
        got = integrate(acc, x - self.window, x + self.window, cfg, points=kinks or None)
        return float(np.clip(1.0 - got, 0.0, 1.0))


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

def three_point_chain() -> MatrixChain:
    """Three-state chain whose first row already equals its stationary law.

    From state 0 the chain is exactly stationary after one step; from states
    1 and 2 the TV distance is (1/2)(2/3)^n. A stock example that different
    start points can converge at genuinely different rates.
    """
    P = TransitionMatrix.from_rows([
        [1 / 3, 1 / 3, 1 / 3],
        [1 / 3, 2 / 3, 0.0],
        [1 / 3, 0.0, 2 / 3],
    ])
    return MatrixChain(kernel=P, stationary=np.full(3, 1 / 3), label="three_point")


def exponential_exponential(theta: float) -> GeneralModel:
    """Exp(1) target with Exp(theta) proposal on [0, inf).

    w(x) = exp(-(1-theta)x)/theta is decreasing with supremum 1/theta at 0
    for theta in (0, 1]; the worst-case TV is then exactly (1-theta)^n.
    """
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise ThetaOutOfRange(
            f"theta={theta} outside (0, 1]: the weight exp((theta-1)x)/theta is "
            "unbounded, so the sampler is not geometrically ergodic (a bounded "
            "weight is necessary and sufficient for geometric ergodicity)"
        )

    def target(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, np.exp(-np.clip(x, 0.0, None)))

    def target_log(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, -np.inf, -x)

    def proposal(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, theta * np.exp(-theta * np.clip(x, 0.0, None)))

    def proposal_log(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, -np.inf, math.log(theta) - theta * x)

    return GeneralModel(
        target_density=target,
        target_log_density=target_log,
        proposal_density=proposal,
        proposal_log_density=proposal_log,
        proposal_sampler=lambda rng: rng.exponential(1.0 / theta),
        support=SupportDescriptor.interval(0.0, math.inf),
        hints=StructureHints(
            weight_monotone="decreasing",
            known_argmax=0.0,
            known_wstar=1.0 / theta,
            wstar_attained=True,
        ),
        label=f"exponential(theta={theta})",
    )


def dirichlet_argmax(alpha, counts) -> np.ndarray:
    """Mode of the Dirichlet(alpha + counts) posterior (full K coordinates).

    Needs every alpha_i + x_i >= 1; the all-ones case is the uniform
    posterior, whose weight is flat, and the simplex center is returned.
    """
    a = np.asarray(alpha, dtype=float) + np.asarray(counts, dtype=float)
    if np.any(a < 1.0):
        raise ModeUndefined("need every alpha_i + x_i >= 1 for the mode formula")
    denom = a.sum() - a.size
    if denom == 0.0:
        return np.full(a.size, 1.0 / a.size)
    return (a - 1.0) / denom


def dirichlet_wstar(alpha, counts) -> float:
    """sup of posterior-density / uniform-density on the simplex, in closed form.

    Equals Gamma(N + A) / (Gamma(K) prod Gamma(a_i)) * prod m_i^{m_i} / M^M
    with a = alpha + counts, m = a - 1, M = sum m; all factorial arithmetic in
    the log-gamma domain (overflow-free far past N ~ 1e6).
    """
    a = np.asarray(alpha, dtype=float) + np.asarray(counts, dtype=float)
    if np.any(a < 1.0):
        raise ModeUndefined("need every alpha_i + x_i >= 1 for the mode formula")
    k = a.size
    m = a - 1.0
    big_m = m.sum()
    s = gammaln(a.sum()) - gammaln(k) - gammaln(a).sum()
    s += float(np.sum(np.where(m > 0, m * np.log(np.where(m > 0, m, 1.0)), 0.0)))
    if big_m > 0:
        s -= big_m * math.log(big_m)
    return float(math.exp(s))


def stirling_wstar(k: int, n: int, p) -> float:
    """Large-sample approximation of dirichlet_wstar along counts ~ n*p:
    (1/(K-1)!) sqrt(n^{K-1} / ((2 pi)^{K-1} prod p_i))."""
    p = np.asarray(p, dtype=float)
    return float(
        math.sqrt(n ** (k - 1) / ((2 * math.pi) ** (k - 1) * np.prod(p)))
        / math.factorial(k - 1)
    )


def dirichlet_multinomial(alpha, counts) -> GeneralModel:
    """Dirichlet(alpha + counts) posterior target with a uniform simplex proposal.

    Models are parameterized by the first K-1 simplex coordinates; densities
    accept points of shape (K-1,) or batches (m, K-1). Hints carry the
    closed-form w* and its maximizer.
    """
    alpha = np.asarray(alpha, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if alpha.shape != counts.shape or alpha.ndim != 1 or alpha.size < 2:
        raise ModeUndefined("alpha and counts must be equal-length vectors, K >= 2")
    a = alpha + counts
    if np.any(a < 1.0):
        raise ModeUndefined("need every alpha_i + x_i >= 1 for the mode formula")
    k = a.size
    logc = gammaln(a.sum()) - gammaln(a).sum()
    log_uniform = gammaln(k)  # log (K-1)!

    def _full(pts):
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        pts2 = np.atleast_2d(pts)
        last = 1.0 - pts2.sum(axis=1)
        full = np.column_stack([pts2, last])
        return full, single

    def target(pts):
        full, single = _full(pts)
        ok = np.all(full > -1e-15, axis=1)
        safe = np.clip(full, 1e-300, None)
        expo = a - 1.0
        # 0 * log(0) is 0 here: exponent-zero coordinates contribute nothing
        logs = np.where(expo[None, :] == 0.0, 0.0, expo[None, :] * np.log(safe))
        out = np.where(ok, np.exp(logc + logs.sum(axis=1)), 0.0)
        return float(out[0]) if single else out

    def target_log(pts):
        full, single = _full(pts)
        safe = np.clip(full, 1e-300, None)
        expo = a - 1.0
        logs = np.where(expo[None, :] == 0.0, 0.0, expo[None, :] * np.log(safe))
        out = logc + logs.sum(axis=1)
        out = np.where(np.all(full > -1e-15, axis=1), out, -np.inf)
        return float(out[0]) if single else out

    def proposal(pts):
        full, single = _full(pts)
        ok = np.all(full > -1e-15, axis=1)
        out = np.where(ok, math.exp(log_uniform), 0.0)
        return float(out[0]) if single else out

    def proposal_log(pts):
        full, single = _full(pts)
        ok = np.all(full > -1e-15, axis=1)
        out = np.where(ok, log_uniform, -np.inf)
        return float(out[0]) if single else out

    mode = dirichlet_argmax(alpha, counts)
    return GeneralModel(
        target_density=target,
        target_log_density=target_log,
        proposal_density=proposal,
        proposal_log_density=proposal_log,
        proposal_sampler=lambda rng: rng.dirichlet(np.ones(k))[: k - 1],
        proposal_batch_sampler=lambda rng, size: rng.dirichlet(np.ones(k), size=size)[:, : k - 1],
        support=SupportDescriptor.simplex(k),
        hints=StructureHints(
            known_argmax=mode[: k - 1],
            known_wstar=dirichlet_wstar(alpha, counts),
            wstar_attained=True,
        ),
        label=f"dirichlet_multinomial(alpha={alpha.tolist()}, counts={counts.tolist()})",
    )


def rate_not_attained_model() -> GeneralModel:
    """Exp(1) target against p(x) = (2/3) e^{-x} (1 + e^{-x}) on [0, inf).

    p integrates to (2/3)(1 + 1/2) = 1. The weight w(x) = 1.5/(1 + e^{-x})
    increases strictly from w(0) = 0.75 toward 1.5 without ever getting
    there, so the supremum is not attained: the chain still converges at rate
    1 - 1/1.5 = 1/3, but the exact-speed equality is unavailable.
    """
    def target(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, np.exp(-np.clip(x, 0.0, None)))

    def target_log(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, -np.inf, -x)

    def proposal(x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, None)
        return np.where(x < 0, 0.0, (2.0 / 3.0) * np.exp(-xc) * (1.0 + np.exp(-xc)))

    def proposal_log(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, -np.inf,
                        math.log(2.0 / 3.0) - x + np.log1p(np.exp(-np.clip(x, 0.0, None))))

    def sampler(rng):
        # mixture: 2/3 Exp(1) + 1/3 Exp(2)
        return rng.exponential(1.0) if rng.random() < 2.0 / 3.0 else rng.exponential(0.5)

    return GeneralModel(
        target_density=target,
        target_log_density=target_log,
        proposal_density=proposal,
        proposal_log_density=proposal_log,
        proposal_sampler=sampler,
        support=SupportDescriptor.interval(0.0, math.inf),
        hints=StructureHints(
            weight_monotone="increasing",
            known_wstar=1.5,
            wstar_attained=False,
        ),
        label="rate_not_attained",
    )


def cauchy_rwmh() -> MhFixture:
    """Cauchy target with a unit-window random-walk proposal.

    The rejection probability is maximal at 0 and stays below 1 everywhere,
    yet the chain is only polynomially ergodic: the walk moves at most 1 per
    step, so the mass beyond distance n from the start, at least 1/(2 pi n)
    by the tail integral, is unreachable in n steps.
    """
    def target(x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (math.pi * (1.0 + x * x))

    def target_log(x):
        x = np.asarray(x, dtype=float)
        return -math.log(math.pi) - np.log1p(x * x)

    kernel = ProposalKernel(
        sample=lambda x, rng: x + rng.uniform(-1.0, 1.0),
        density=lambda x, y: 0.5 if abs(y - x) <= 1.0 else 0.0,
    )
    return MhFixture(
        target_density=target,
        target_log_density=target_log,
        kernel=kernel,
        window=1.0,
        support=SupportDescriptor.interval(-math.inf, math.inf),
        label="cauchy_rwmh",
    )


def cauchy_tail_mass(radius: float, cfg=DEFAULT_QUADRATURE) -> float:
    """Cauchy mass outside [-radius, radius], by quadrature."""
    dens = lambda x: 1.0 / (math.pi * (1.0 + x * x))
    return 2.0 * integrate(dens, radius, math.inf, cfg)


def uniform_rwmh(delta: float) -> MhFixture:
    """Uniform[-1, 1] target with a window-delta random-walk proposal.

    For 1 <= delta < 2 the rejection probability at y is
    ((delta-1+y)^+ + (delta-1-y)^+) / (2 delta): zero on [1-delta, delta-1]
    (the window never leaves the support there) and (delta-1+|y|)/(2 delta)
    outside, so different start points converge at different rates.
    """
    delta = float(delta)
    if not 1.0 <= delta < 2.0:
        raise DeltaOutOfRange(f"delta={delta} outside [1, 2)")

    def target(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= 1.0, 0.5, 0.0)

    def target_log(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= 1.0, math.log(0.5), -np.inf)

    kernel = ProposalKernel(
        sample=lambda x, rng: x + rng.uniform(-delta, delta),
        density=lambda x, y: 0.5 / delta if abs(y - x) <= delta else 0.0,
    )
    return MhFixture(
        target_density=target,
        target_log_density=target_log,
        kernel=kernel,
        window=delta,
        support=SupportDescriptor.interval(-1.0, 1.0),
        label=f"uniform_rwmh(delta={delta})",
    )


def uniform_rwmh_rejection(delta: float, y0: float) -> float:
    """Closed-form rejection probability for the uniform RWMH fixture."""
    if not 1.0 <= delta < 2.0:
        raise DeltaOutOfRange(f"delta={delta} outside [1, 2)")
    if abs(y0) > 1.0:
        raise ValueError("y0 must lie in the support [-1, 1]")
    over = max(delta - 1.0 + y0, 0.0) + max(delta - 1.0 - y0, 0.0)
    return over / (2.0 * delta)


def sharpness_chains(k: int = 2) -> tuple[DiscreteModel, DiscreteModel]:
    """Two w* = 2 chains pinning both ends of the discrete envelope.

    Phi1 (uniform over the first K of 2K states) attains the upper envelope
    d_max(t) = 0.5^t; Phi2 (half the mass on one state, proposal thinned
    there) attains the lower envelope (1 - pi_1) 0.5^t = 0.5^{t+1}.
    """
    k = int(k)
    if k < 2:
        raise ValueError("need K >= 2")
    pi1 = np.concatenate([np.full(k, 1.0 / k), np.zeros(k)])
    p1 = np.full(2 * k, 1.0 / (2 * k))
    phi1 = DiscreteModel.from_pmfs(pi1, p1, label=f"sharpness_phi1(K={k})")
    pi2 = np.concatenate([[0.5], np.full(k, 0.5 / k)])
    p2 = np.concatenate([[0.25], np.full(k, 0.75 / k)])
    phi2 = DiscreteModel.from_pmfs(pi2, p2, label=f"sharpness_phi2(K={k})")
    return phi1, phi2


# ---------------------------------------------------------------------------
# registry table
# ---------------------------------------------------------------------------

def _build_phi1(K: int = 2):
    return sharpness_chains(int(K))[0]


def _build_phi2(K: int = 2):
    return sharpness_chains(int(K))[1]


REGISTRY: dict[str, RegistryEntry] = {
    "exponential": RegistryEntry(
        name="exponential",
        kind="general",
        build=lambda theta=0.5: exponential_exponential(float(theta)),
        truths={
            "wstar": Truth(lambda theta: 1.0 / theta, Provenance.LITERATURE,
                           "attained at x = 0"),
            "exact_speed": Truth(lambda theta, n: (1.0 - theta) ** n, Provenance.LITERATURE,
                                 "worst-case TV after n steps"),
            "steps_for_eps_001": Truth({0.5: 6.64, 0.1: 43.71, 0.01: 458.21},
                                       Provenance.LITERATURE,
                                       "log(0.01)/log(1-theta), two decimals"),
        },
    ),
    "dirichlet_multinomial": RegistryEntry(
        name="dirichlet_multinomial",
        kind="general",
        build=lambda alpha=(1.0, 1.0), counts=(1.0, 1.0): dirichlet_multinomial(alpha, counts),
        truths={
            "wstar_closed_form": Truth(dirichlet_wstar, Provenance.LITERATURE,
                                       "log-gamma evaluation of the posterior mode ratio"),
            "wstar_K2_unit": Truth(1.5, Provenance.DERIVED,
                                   "alpha=(1,1), counts=(1,1): 6 * (1/2)(1/2) / 1"),
            "stirling": Truth(stirling_wstar, Provenance.LITERATURE,
                              "sqrt-growth in N; steps scale like N^{(K-1)/2}"),
        },
    ),
    "rate_not_attained": RegistryEntry(
        name="rate_not_attained",
        kind="general",
        build=lambda: rate_not_attained_model(),
        truths={
            "wstar": Truth(1.5, Provenance.DERIVED, "sup of 1.5/(1+e^{-x}), never attained"),
            "w_at_zero": Truth(0.75, Provenance.DERIVED, "1.5/(1+1)"),
            "rate": Truth(1.0 / 3.0, Provenance.DERIVED, "1 - 1/1.5"),
        },
    ),
    "cauchy_rwmh": RegistryEntry(
        name="cauchy_rwmh",
        kind="mh",
        build=lambda: cauchy_rwmh(),
        truths={
            "rejection_at_0": Truth(1.0 - math.pi / 4.0, Provenance.DERIVED,
                                    "1 - (1/2) int_{-1}^{1} dy/(1+y^2) = 1 - pi/4; "
                                    "sometimes misprinted as 1 - pi/2, which is negative "
                                    "and impossible for a probability; cross-checked here "
                                    "by Monte Carlo acceptance simulation"),
            "tail_lower_bound": Truth(lambda n: 1.0 / (2.0 * math.pi * n), Provenance.LITERATURE,
                                      "mass outside [-n, n] exceeds 1/(2 pi n)"),
        },
    ),
    "uniform_rwmh": RegistryEntry(
        name="uniform_rwmh",
        kind="mh",
        build=lambda delta=1.5: uniform_rwmh(float(delta)),
        truths={
            "rejection": Truth(uniform_rwmh_rejection, Provenance.LITERATURE,
                               "(delta-1+|y|)/(2 delta) outside the safe window"),
            "inside_rate_bound": Truth(lambda delta: 1.0 - 1.0 / delta, Provenance.LITERATURE,
                                       "coupling-style bound inside [1-delta, delta-1]"),
        },
    ),
    "sharpness_phi1": RegistryEntry(
        name="sharpness_phi1",
        kind="discrete",
        build=_build_phi1,
        truths={
            "wstar": Truth(2.0, Provenance.DERIVED, "elementwise target/proposal ratio"),
            "d_max": Truth(lambda t: 0.5 ** t, Provenance.LITERATURE, "upper envelope, attained"),
        },
    ),
    "sharpness_phi2": RegistryEntry(
        name="sharpness_phi2",
        kind="discrete",
        build=_build_phi2,
        truths={
            "wstar": Truth(2.0, Provenance.DERIVED, "elementwise target/proposal ratio"),
            "d_max": Truth(lambda t: 0.5 ** (t + 1), Provenance.LITERATURE,
                           "lower envelope (1 - pi_1) 0.5^t, attained"),
        },
    ),
    "three_point": RegistryEntry(
        name="three_point",
        kind="matrix",
        build=lambda: three_point_chain(),
        truths={
            "tv_from_state1": Truth(lambda n: 0.5 * (2.0 / 3.0) ** n, Provenance.LITERATURE,
                                    "also from state 2; state 0 is stationary after one step"),
        },
    ),
}


def registry_entry(name: str) -> RegistryEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownModel(
            f"unknown registry model {name!r}; known: {', '.join(sorted(REGISTRY))}"
        ) from None


def build_model(name: str, **params):
    """Instantiate a registry model by name."""
    return registry_entry(name).build(**params)
