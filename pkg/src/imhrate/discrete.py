"""Exact finite-state machinery for the independence sampler.

Everything here is closed-form or exact linear algebra: the transition
matrix, its full spectrum (the classical closed form going back to Liu's
analysis of the metropolized independence sampler), exact n-step total
variation curves, and the two-sided envelope

    (1 - pi_1) (1 - 1/w*)^t  <=  max_x ||P^t(x,.) - pi||_TV  <=  (1 - 1/w*)^t,

where pi_1 is the target mass of the top-weight state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFit,
    DegeneratePerturbation,
    InvalidModel,
    NotStationary,
    SandwichViolated,
    ZeroWeightState,
)
from .measures import DiscreteModel
from .ratefit import fit_decay_rate

__all__ = [
    "TransitionMatrix",
    "MatrixChain",
    "SpectralDecomposition",
    "TvTrajectory",
    "DiscreteRateBounds",
    "DiscretePointRates",
    "build_kernel",
    "reversibility_gap",
    "liu_spectrum",
    "rank_one_eigen",
    "exact_tv",
    "rate_bounds_discrete",
    "per_point_rate_discrete",
    "default_fit_horizon",
]

ROW_SUM_TOL = 1e-12
REVERSIBILITY_TOL = 1e-12
STATIONARY_TOL = 1e-10
SANDWICH_SLACK = 1e-12
HORIZON_CAP = 200
TV_REPORT_FLOOR = 1e-14   # default reporting cutoff for trajectories
TV_FIT_FLOOR = 1e-280     # rate fits may use the full accurate range


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix for a finite chain."""

    entries: np.ndarray
    n: int

    @classmethod
    def from_rows(cls, entries) -> "TransitionMatrix":
        P = np.asarray(entries, dtype=float).copy()
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise InvalidModel("transition matrix must be square")
        if np.any(P < -1e-15):
            raise InvalidModel("transition matrix must be nonnegative")
        np.clip(P, 0.0, None, out=P)
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise InvalidModel("rows must sum to 1 within 1e-12")
        P.setflags(write=False)
        return cls(entries=P, n=P.shape[0])


@dataclass(frozen=True)
class MatrixChain:
    """A finite chain given directly by its kernel and stationary vector.

    Lets non-sampler fixtures (arbitrary stochastic matrices) flow through the
    same TV and simulation machinery as constructed models.
    """

    kernel: TransitionMatrix
    stationary: np.ndarray
    label: str = ""

    def __post_init__(self):
        pi = np.asarray(self.stationary, dtype=float)
        gap = np.max(np.abs(pi @ self.kernel.entries - pi))
        if gap > STATIONARY_TOL:
            raise NotStationary(f"claimed stationary vector misses by {gap:.2e}")


@dataclass(frozen=True)
class SpectralDecomposition:
    """Closed-form spectrum of an independence-sampler kernel.

    eigenvalues[0] = 1; eigenvalues[k] for k >= 1 pair with eigenvectors[:, k-1].
    normalized[:, k-1] holds f_k = v_k / sqrt(<v_k, v_k>_pi), the pi-orthonormal
    scaling under which ||P^t(x,.)/pi - 1||^2_{2,pi} = sum_k f_k(x)^2 lambda_k^{2t}.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    normalized: np.ndarray


@dataclass(frozen=True)
class TvTrajectory:
    """Exact TV-to-stationarity curves: per_state[x, t] and d_max[t] = max_x."""

    per_state: np.ndarray
    d_max: np.ndarray
    horizon: int


@dataclass(frozen=True)
class DiscreteRateBounds:
    """The exact envelope sandwich for d_max(t)."""

    wstar: float
    rate: float
    pi1: float
    lower: np.ndarray
    upper: np.ndarray
    trajectory: TvTrajectory
    sandwich_ok: bool


@dataclass(frozen=True)
class DiscretePointRates:
    """Per-state fitted decay rates against the common theoretical rate.

    spectral_lower_const[x] is (pi_min/2)|f_1(x)|, the per-state constant in
    TV(x,t) >= (pi_min/2) ||P^t(x,.)/pi - 1||_{2,pi} >= const * rate^t; it is
    None for models with zero-weight states (no closed-form spectrum there).
    """

    rates: np.ndarray
    rate_theory: float
    spectral_lower_const: np.ndarray | None
    horizon: int
    window_start: int


def build_kernel(model: DiscreteModel) -> TransitionMatrix:
    """Independence-sampler kernel: P(i,j) = p_j min(1, w_j/w_i) off-diagonal.

    A state with zero weight (zero target mass) accepts every positive-weight
    proposal and rejects moves to other zero-weight states. The diagonal
    absorbs the rejected mass, so rows sum to 1 exactly.
    """
    w = model.weight
    p = model.proposal
    n = model.n
    accept = np.empty((n, n))
    pos = w > 0
    accept[pos] = np.minimum(1.0, w[None, :] / w[pos, None])
    accept[~pos] = (w > 0).astype(float)[None, :]
    P = p[None, :] * accept
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    tm = TransitionMatrix.from_rows(P)
    gap = reversibility_gap(tm, model.target)
    if gap > REVERSIBILITY_TOL:
        raise InvalidModel(f"constructed kernel broke reversibility by {gap:.2e}")
    return tm


def reversibility_gap(P: TransitionMatrix, pi) -> float:
    """max |pi_i P(i,j) - pi_j P(j,i)|, zero for reversible chains."""
    pi = np.asarray(pi, dtype=float)
    F = pi[:, None] * P.entries
    return float(np.max(np.abs(F - F.T)))


def liu_spectrum(model: DiscreteModel) -> SpectralDecomposition:
    """Closed-form eigenvalues and right eigenvectors of the kernel.

    With weights sorted non-increasing, lambda_k = sum_{i>=k} (p_i - pi_i/w_k)
    and v_k = (0,...,0, S_pi(k+1), -pi_k, ..., -pi_k) with k-1 leading zeros,
    S_pi(j) = pi_j + ... + pi_n. Evaluated via exclusive prefix sums, which
    keeps lambda_1 = 1 - 1/w* bit-exact. Requires every w_k > 0.
    """
    if np.any(model.weight <= 0):
        raise ZeroWeightState(
            "closed-form spectrum needs all weights positive; "
            "use exact_tv / per_point_rate_discrete for this model"
        )
    pi = model.target
    p = model.proposal
    w = model.weight
    n = model.n
    pref_p = np.concatenate([[0.0], np.cumsum(p)[:-1]])   # pref[j] = sum of the first j entries
    pref_pi = np.concatenate([[0.0], np.cumsum(pi)[:-1]])
    lams = np.empty(n)
    lams[0] = 1.0
    lams[1:] = (1.0 - pref_p[:-1]) - (1.0 - pref_pi[:-1]) / w[:-1]
    suffix_pi = np.concatenate([np.cumsum(pi[::-1])[::-1], [0.0]])  # suffix_pi[j] = pi_j+...+pi_{n-1}
    V = np.zeros((n, n - 1))
    for k in range(1, n):
        V[k - 1, k - 1] = suffix_pi[k]
        V[k:, k - 1] = -pi[k - 1]
    norms = np.sqrt(np.einsum("ik,i,ik->k", V, pi, V))
    F = V / norms
    for arr in (lams, V, F):
        arr.setflags(write=False)
    return SpectralDecomposition(eigenvalues=lams, eigenvectors=V, normalized=F)


def rank_one_eigen(eigvals, eigvecs, u, want_vectors: bool = False):
    """Spectrum of B = A + u_n u^T from A's eigenpairs.

    The last supplied pair (lambda_n, u_n) is the perturbed one: B keeps
    lambda_1..lambda_{n-1} and replaces lambda_n by lambda_n + u.u_n. When
    `want_vectors`, the retained eigenvectors are sheared along u_n:

        v_j = u_j - (u.u_j / (mu - lambda_j)) u_n,   mu = lambda_n + u.u_n,

    undefined when mu collides with a retained eigenvalue
    (DegeneratePerturbation; the eigenvalues are still well defined).
    """
    vals = np.asarray(eigvals, dtype=float)
    vecs = np.asarray(eigvecs, dtype=float)
    u = np.asarray(u, dtype=float)
    n = vals.size
    if vecs.shape != (n, n) or u.shape != (n,):
        raise ValueError("need n eigenpairs (vectors as columns) and an n-vector u")
    u_n = vecs[:, -1]
    mu = vals[-1] + float(u @ u_n)
    new_vals = np.concatenate([vals[:-1], [mu]])
    if not want_vectors:
        return new_vals, None
    scale = max(1.0, float(np.max(np.abs(vals))), abs(mu))
    if np.any(np.abs(mu - vals[:-1]) <= 1e-12 * scale):
        raise DegeneratePerturbation(
            "perturbed eigenvalue equals a retained one; eigenvector shear undefined"
        )
    gammas = (u @ vecs[:, :-1]) / (mu - vals[:-1])
    new_vecs = np.empty_like(vecs)
    new_vecs[:, :-1] = vecs[:, :-1] - u_n[:, None] * gammas[None, :]
    new_vecs[:, -1] = u_n
    return new_vals, new_vecs


def exact_tv(P, pi, horizon: int, stop_below: float | None = None) -> TvTrajectory:
    """Exact TV curves by iterated multiplication.

    Tracks the signed difference D_t = P^t - 1 pi^T directly (D_{t+1} = D_t P)
    and re-projects its row sums to zero each step; the zero-sum component is
    the one direction rounding noise would otherwise park mass in, and with it
    removed the entries stay relatively accurate down to denormal scale.

    `stop_below` truncates the trajectory once d_max drops under it.
    """
    if isinstance(P, TransitionMatrix):
        Pm = P.entries
    else:
        Pm = TransitionMatrix.from_rows(P).entries
    pi = np.asarray(pi, dtype=float)
    n = Pm.shape[0]
    if pi.shape != (n,):
        raise InvalidModel("stationary vector length mismatch")
    gap = np.max(np.abs(pi @ Pm - pi))
    if gap > STATIONARY_TOL:
        raise NotStationary(f"vector is not stationary for P (gap {gap:.2e})")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")

    D = np.eye(n) - np.outer(np.ones(n), pi)
    rows = [0.5 * np.abs(D).sum(axis=1)]
    for _ in range(horizon):
        D = D @ Pm
        D -= np.outer(D.sum(axis=1), pi)
        tv = 0.5 * np.abs(D).sum(axis=1)
        rows.append(tv)
        if stop_below is not None and tv.max() < stop_below:
            break
    per_state = np.clip(np.column_stack(rows), 0.0, 1.0)
    d_max = per_state.max(axis=0)
    return TvTrajectory(per_state=per_state, d_max=d_max, horizon=per_state.shape[1] - 1)


def rate_bounds_discrete(
    model: DiscreteModel,
    horizon: int,
    stop_below: float | None = None,
) -> DiscreteRateBounds:
    """Exact d_max(t) together with its proven envelope for t = 0..horizon."""
    P = build_kernel(model)
    traj = exact_tv(P, model.target, horizon, stop_below=stop_below)
    wstar = float(model.weight[0])
    rate = 1.0 - 1.0 / wstar
    pi1 = float(model.target[0])
    t = np.arange(traj.horizon + 1)
    upper = rate ** t
    lower = (1.0 - pi1) * upper
    ok = bool(
        np.all(traj.d_max <= upper + SANDWICH_SLACK)
        and np.all(traj.d_max >= lower - SANDWICH_SLACK)
    )
    if not ok:
        raise SandwichViolated(
            "exact d_max escaped the (1-pi_1)r^t .. r^t envelope; this is a bug"
        )
    return DiscreteRateBounds(
        wstar=wstar, rate=rate, pi1=pi1, lower=lower, upper=upper,
        trajectory=traj, sandwich_ok=ok,
    )


def default_fit_horizon(model: DiscreteModel) -> int:
    """Longest horizon worth fitting: deep into the decay but inside the cap."""
    rate = 1.0 - 1.0 / float(model.weight[0])
    if rate <= 1e-6:
        return 40
    t = int(np.log(1e-100) / np.log(rate))
    return int(np.clip(t, 40, HORIZON_CAP))


def per_point_rate_discrete(
    model: DiscreteModel,
    horizon: int | None = None,
    window_start: int | None = None,
    floor: float = TV_FIT_FLOOR,
) -> DiscretePointRates:
    """Fit the per-state TV decay rate; every state shares 1 - 1/w*.

    Fits the slope of log TV(x, t) over the tail window [horizon/2, horizon]
    by least squares. States whose TV is identically zero past t = 0 (the
    proposal equals the target) report rate 0 by convention.
    """
    horizon = default_fit_horizon(model) if horizon is None else int(horizon)
    if horizon < 20:
        raise ValueError("need horizon >= 20 for a meaningful tail fit")
    window_start = horizon // 2 if window_start is None else int(window_start)
    if model.weight[0] <= 1.0 + 1e-12:
        # w* = 1 forces target = proposal: TV vanishes after one step, rate 0
        return DiscretePointRates(
            rates=np.zeros(model.n), rate_theory=0.0,
            spectral_lower_const=None, horizon=horizon, window_start=window_start,
        )
    P = build_kernel(model)
    traj = exact_tv(P, model.target, horizon)
    t = np.arange(traj.horizon + 1)
    rates = np.empty(model.n)
    for x in range(model.n):
        tv = traj.per_state[x]
        fitted = fit_decay_rate(t, tv, window_start=window_start, floor=floor)
        if fitted is None:
            if np.all(tv[1:] <= floor):
                rates[x] = 0.0
                continue
            fitted = fit_decay_rate(t[1:], tv[1:], window_start=1, floor=floor)
            if fitted is None:
                raise DegenerateFit(f"TV from state {x} leaves too few points to fit")
        rates[x] = fitted
    rate_theory = 1.0 - 1.0 / float(model.weight[0])
    const = None
    if np.all(model.weight > 0):
        spec = liu_spectrum(model)
        const = 0.5 * float(model.target.min()) * np.abs(spec.normalized[:, 0])
    return DiscretePointRates(
        rates=rates, rate_theory=rate_theory, spectral_lower_const=const,
        horizon=traj.horizon, window_start=window_start,
    )
