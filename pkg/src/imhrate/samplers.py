"""Monte Carlo layer: samplers, the split-chain coupling, and empirical TV.

Randomness is counter-based (Philox): stream i of a master seed is derived
from (seed, i), so replicas are reproducible bit for bit and embarrassingly
parallel. Equal (model, seed, length) always reproduce identical runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .discrete import MatrixChain, TransitionMatrix, build_kernel
from .errors import InvalidModel, ResidualNegative, ZeroDensityAtStart
from .measures import DiscreteModel, GeneralModel, compute_wstar, log_weight_at

__all__ = [
    "ChainRun",
    "CouplingRun",
    "ProposalKernel",
    "TvEstimate",
    "stream_rng",
    "run_mh",
    "run_imh",
    "run_coupling",
    "residual_pmf",
    "empirical_tv",
    "rejection_frequency_mh",
    "rejection_frequency_imh",
]

RESIDUAL_FLOOR = -1e-14
_MEETING_CAP = 10_000_000


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for stream `stream` of master `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 128) - 1),
                                spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChainRun:
    """One sampler trajectory; flags[i] says whether step i's proposal was taken."""

    states: np.ndarray
    acceptance_flags: np.ndarray
    seed: int
    model_id: str

    @property
    def acceptance_rate(self) -> float:
        return float(self.acceptance_flags.mean()) if self.acceptance_flags.size else 0.0


@dataclass(frozen=True)
class CouplingRun:
    """Result of one split-chain coupling run.

    meeting_time T counts steps until the shared 1/w* coin lands heads, so
    P(T >= n+1) = (1 - 1/w*)^n exactly; the chains evolve jointly from index
    T onward. pre_meeting_states holds the paired trajectory at times
    0..T-1 (empty for continuous models, where only T is simulated).
    """

    meeting_time: int
    pre_meeting_states: np.ndarray
    seed: int
    model_id: str
    meeting_state: float | int | None = None


@dataclass(frozen=True)
class ProposalKernel:
    """Conditional proposal: draw y ~ q(x, .) and evaluate q(x, y)."""

    sample: Callable[[float, np.random.Generator], float]
    density: Callable[[float, float], float]


@dataclass(frozen=True)
class TvEstimate:
    estimate: float
    stderr: float
    replicas: int
    t: int


def run_mh(
    target_density: Callable[[float], float],
    proposal_kernel: ProposalKernel,
    x0: float,
    steps: int,
    seed: int,
    model_id: str = "mh",
    stream: int = 0,
) -> ChainRun:
    """Plain Metropolis-Hastings with a conditional proposal kernel."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if float(target_density(x0)) <= 0.0:
        raise ZeroDensityAtStart(f"target density is zero at the start point {x0!r}")
    rng = stream_rng(seed, stream)
    states = np.empty(steps + 1)
    flags = np.empty(steps, dtype=bool)
    x = float(x0)
    fx = float(target_density(x))
    states[0] = x
    for i in range(steps):
        y = float(proposal_kernel.sample(x, rng))
        fy = float(target_density(y))
        q_xy = float(proposal_kernel.density(x, y))
        q_yx = float(proposal_kernel.density(y, x))
        a = (fy * q_yx) / (fx * q_xy) if fx * q_xy > 0 else math.inf
        accept = rng.random() < a
        if accept:
            x, fx = y, fy
        states[i + 1] = x
        flags[i] = accept
    return ChainRun(states=states, acceptance_flags=flags, seed=int(seed), model_id=model_id)


def run_imh(
    model: DiscreteModel | GeneralModel,
    x0,
    steps: int,
    seed: int,
    stream: int = 0,
) -> ChainRun:
    """Independence sampler: proposals ignore the current state.

    Acceptance probability is w(y)/w(x) capped at 1, evaluated in the log
    domain for continuous models. From a zero-weight state any positive-weight
    proposal is accepted; moves between zero-weight states are rejected.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    rng = stream_rng(seed, stream)
    if isinstance(model, DiscreteModel):
        cum = np.cumsum(model.proposal)
        w = model.weight
        x = int(x0)
        if not 0 <= x < model.n:
            raise InvalidModel(f"start state {x} outside 0..{model.n - 1}")
        states = np.empty(steps + 1, dtype=np.int64)
        flags = np.empty(steps, dtype=bool)
        states[0] = x
        for i in range(steps):
            j = int(np.searchsorted(cum, rng.random(), side="right"))
            j = min(j, model.n - 1)
            u = rng.random()
            if w[j] == 0.0:
                accept = False
            elif w[x] == 0.0:
                accept = True
            else:
                accept = u < w[j] / w[x]
            if accept:
                x = j
            states[i + 1] = x
            flags[i] = accept
        return ChainRun(states=states, acceptance_flags=flags, seed=int(seed),
                        model_id=model.label or "discrete")
    states = np.empty(steps + 1)
    flags = np.empty(steps, dtype=bool)
    x = float(x0)
    lw_x = log_weight_at(model, x)
    states[0] = x
    for i in range(steps):
        y = float(model.proposal_sampler(rng))
        lw_y = log_weight_at(model, y)
        log_u = math.log(rng.random())
        accept = bool(lw_y - lw_x > log_u)  # NaN (0/0 weights) compares False
        if accept:
            x, lw_x = y, lw_y
        states[i + 1] = x
        flags[i] = accept
    return ChainRun(states=states, acceptance_flags=flags, seed=int(seed),
                    model_id=model.label or "general")


def residual_pmf(model: DiscreteModel) -> np.ndarray:
    """Row-wise residual q_res(x, .) = (P(x, .) - pi/w*) / (1 - 1/w*).

    The kernel dominates pi/w* everywhere (that is the minorization the
    coupling runs on), so the residual rows are genuine distributions. The
    off-diagonal entries are assembled as p_j (min(1, w_j/w_i) - w_j/w*),
    whose bracket is nonnegative even in floating point (w_j <= w_i <= w*
    and division is monotone), so no noise gets amplified by the small
    denominator; the diagonal absorbs the remainder.
    """
    wstar = float(model.weight[0])
    if wstar <= 1.0:
        raise InvalidModel("residual split is degenerate when w* = 1 (target equals proposal)")
    w = model.weight
    p = model.proposal
    n = model.n
    accept = np.empty((n, n))
    pos = w > 0
    accept[pos] = np.minimum(1.0, w[None, :] / w[pos, None])
    accept[~pos] = (w > 0).astype(float)[None, :]
    bracket = accept - (w / wstar)[None, :]
    Q = p[None, :] * bracket / (1.0 - 1.0 / wstar)
    np.fill_diagonal(Q, 0.0)
    diag = 1.0 - Q.sum(axis=1)
    if Q.min() < RESIDUAL_FLOOR or diag.min() < RESIDUAL_FLOOR:
        raise ResidualNegative(
            f"residual mass {min(Q.min(), diag.min()):.3e} below floor; this is a bug"
        )
    np.fill_diagonal(Q, np.clip(diag, 0.0, None))
    Q = np.clip(Q, 0.0, None)
    Q /= Q.sum(axis=1, keepdims=True)
    return Q


def _categorical(cum: np.ndarray, rng: np.random.Generator) -> int:
    j = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(j, cum.size - 1)


def run_coupling(
    model: DiscreteModel | GeneralModel,
    x0,
    seed: int,
    stream: int = 0,
) -> CouplingRun:
    """Couple a chain from x0 with a stationary twin via the 1/w* coin.

    Each step before coalescence flips a shared coin with head probability
    1/w*: heads draws one point from the target and merges both chains there;
    tails moves each chain independently by its residual distribution. The
    meeting time is therefore exactly geometric. Continuous models simulate
    only the coin (their residual trajectories do not affect T). `stream`
    selects an independent substream of `seed` (the replica index).
    """
    if isinstance(model, DiscreteModel):
        wstar = float(model.weight[0])
        label = model.label or "discrete"
    else:
        wstar = float(compute_wstar(model).wstar)
        label = model.label or "general"
    if not math.isfinite(wstar) or wstar < 1.0:
        raise InvalidModel(f"coupling needs a finite w* >= 1, got {wstar!r}")
    rng = stream_rng(seed, stream)
    p_meet = 1.0 / wstar

    if isinstance(model, GeneralModel):
        T = int(rng.geometric(p_meet))
        return CouplingRun(meeting_time=T, pre_meeting_states=np.empty((0, 2)),
                           seed=int(seed), model_id=label, meeting_state=None)

    cum_pi = np.cumsum(model.target)
    x = int(x0)
    if not 0 <= x < model.n:
        raise InvalidModel(f"start state {x} outside 0..{model.n - 1}")
    y = _categorical(cum_pi, rng)  # stationary twin
    residual_cum = None
    if wstar > 1.0:
        residual_cum = np.cumsum(residual_pmf(model), axis=1)
    pairs = []
    for step in range(1, _MEETING_CAP + 1):
        pairs.append((x, y))
        if rng.random() < p_meet:
            z = _categorical(cum_pi, rng)
            return CouplingRun(
                meeting_time=step,
                pre_meeting_states=np.array(pairs, dtype=np.int64),
                seed=int(seed), model_id=label, meeting_state=z,
            )
        x = _categorical(residual_cum[x], rng)
        y = _categorical(residual_cum[y], rng)
    raise RuntimeError("coupling did not coalesce within the step cap")


def rejection_frequency_mh(
    target_density: Callable[[float], float],
    proposal_kernel: ProposalKernel,
    x: float,
    proposals: int,
    seed: int,
) -> TvEstimate:
    """Monte Carlo rejection frequency of single MH steps from a fixed x."""
    rng = stream_rng(seed, 4)
    fx = float(target_density(x))
    if fx <= 0.0:
        raise ZeroDensityAtStart(f"target density is zero at {x!r}")
    rejected = 0
    for _ in range(proposals):
        y = float(proposal_kernel.sample(x, rng))
        fy = float(target_density(y))
        q_xy = float(proposal_kernel.density(x, y))
        q_yx = float(proposal_kernel.density(y, x))
        a = (fy * q_yx) / (fx * q_xy) if fx * q_xy > 0 else math.inf
        if not rng.random() < a:
            rejected += 1
    freq = rejected / proposals
    return TvEstimate(estimate=freq,
                      stderr=math.sqrt(max(freq * (1 - freq), 1e-300) / proposals),
                      replicas=proposals, t=1)


def rejection_frequency_imh(
    model: GeneralModel,
    x: float,
    proposals: int,
    seed: int,
) -> TvEstimate:
    """Monte Carlo rejection frequency of single independence-sampler steps from x."""
    rng = stream_rng(seed, 5)
    lw_x = log_weight_at(model, x)
    rejected = 0
    for _ in range(proposals):
        y = float(model.proposal_sampler(rng))
        lw_y = log_weight_at(model, y)
        if not lw_y - lw_x > math.log(rng.random()):
            rejected += 1
    freq = rejected / proposals
    return TvEstimate(estimate=freq,
                      stderr=math.sqrt(max(freq * (1 - freq), 1e-300) / proposals),
                      replicas=proposals, t=1)


def _as_chain(model) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(model, DiscreteModel):
        return build_kernel(model).entries, model.target
    if isinstance(model, MatrixChain):
        return model.kernel.entries, np.asarray(model.stationary, dtype=float)
    if isinstance(model, TransitionMatrix):
        raise InvalidModel("need a stationary vector; wrap the matrix in a MatrixChain")
    raise InvalidModel(f"cannot simulate {type(model).__name__} as a finite chain")


def empirical_tv(
    model: DiscreteModel | MatrixChain,
    x0: int,
    t: int,
    replicas: int,
    seed: int,
    n_boot: int = 200,
) -> TvEstimate:
    """Estimate ||P^t(x0, .) - pi||_TV from independent replicas.

    Runs `replicas` chains for t steps in vectorized batches from one Philox
    stream, takes half the L1 distance between the empirical time-t law and
    pi, and attaches a bootstrap standard error (multinomial resampling of
    the endpoint counts).
    """
    if replicas < 1000:
        raise ValueError("need at least 1000 replicas for a stable estimate")
    P, pi = _as_chain(model)
    n = P.shape[0]
    x0 = int(x0)
    if not 0 <= x0 < n:
        raise InvalidModel(f"start state {x0} outside 0..{n - 1}")
    if t == 0:
        exact = 0.5 * float(np.abs(np.eye(n)[x0] - pi).sum())
        return TvEstimate(estimate=exact, stderr=0.0, replicas=replicas, t=0)
    rng = stream_rng(seed)
    cum = np.cumsum(P, axis=1)
    states = np.full(replicas, x0, dtype=np.int64)
    for _ in range(t):
        u = rng.random(replicas)
        states = (cum[states] <= u[:, None]).sum(axis=1)
        np.clip(states, 0, n - 1, out=states)
    counts = np.bincount(states, minlength=n)
    phat = counts / replicas
    tv = 0.5 * float(np.abs(phat - pi).sum())
    boots = rng.multinomial(replicas, phat, size=n_boot) / replicas
    tvs = 0.5 * np.abs(boots - pi[None, :]).sum(axis=1)
    return TvEstimate(estimate=tv, stderr=float(tvs.std(ddof=1)),
                      replicas=replicas, t=t)
