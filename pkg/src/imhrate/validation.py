"""Fixed-seed validation suites behind `imhrate validate`.

Each suite returns a list of Check records; a check compares a computed
quantity against an independent reference at an explicit tolerance. The
random-model generators used here draw target and proposal entries as
0.2 + U(0, 1) before normalizing, which keeps weights (and hence rates)
moderate. The rate-fit generator additionally rejects models whose second
eigenvalue ratio exceeds 0.9, so the tail window cleanly isolates the
leading rate at the suite's 1e-4 tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import discrete as disc
from . import general as gen
from .measures import DiscreteModel, weight_at
from .registry import exponential_exponential, sharpness_chains, three_point_chain
from .samplers import empirical_tv, residual_pmf, run_coupling, stream_rng

__all__ = [
    "Check",
    "random_discrete_model",
    "random_ratefit_model",
    "validate_discrete",
    "validate_general",
    "validate_coupling",
    "run_suites",
    "SUITES",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""


def _check(name, value, tol, detail="") -> Check:
    return Check(name=name, passed=bool(value <= tol), value=float(value),
                 tol=float(tol), detail=detail)


def random_discrete_model(rng, n_max: int = 10, n_min: int = 2) -> DiscreteModel:
    n = int(rng.integers(n_min, n_max + 1))
    pi = 0.2 + rng.random(n)
    p = 0.2 + rng.random(n)
    return DiscreteModel.from_pmfs(pi / pi.sum(), p / p.sum())


def random_ratefit_model(rng, n_max: int = 10) -> DiscreteModel:
    """Random model conditioned on a clean spectral gap (lambda_2/lambda_1 <= 0.9)."""
    while True:
        model = random_discrete_model(rng, n_max=n_max, n_min=3)
        lam = disc.liu_spectrum(model).eigenvalues
        if lam[1] < 1e-3 or lam[2] / lam[1] <= 0.9:
            return model


# ---------------------------------------------------------------------------
# discrete suite
# ---------------------------------------------------------------------------

def validate_discrete(seed: int = 7, models: int = 200, fit_models: int = 50) -> list[Check]:
    rng = stream_rng(seed, 1)
    checks = []

    worst_rev = worst_resid = worst_orth = worst_lam1 = 0.0
    worst_low = worst_high = -np.inf
    for _ in range(models):
        m = random_discrete_model(rng)
        P = disc.build_kernel(m)
        worst_rev = max(worst_rev, disc.reversibility_gap(P, m.target))
        spec = disc.liu_spectrum(m)
        lams, V = spec.eigenvalues, spec.eigenvectors
        for k in range(1, m.n):
            r = np.max(np.abs(P.entries @ V[:, k - 1] - lams[k] * V[:, k - 1]))
            worst_resid = max(worst_resid, float(r))
        G = V.T @ (m.target[:, None] * V)
        off = np.abs(G - np.diag(np.diag(G)))
        worst_orth = max(worst_orth, float(off.max()))
        worst_lam1 = max(worst_lam1, abs(lams[1] - (1.0 - 1.0 / m.weight[0])))
        bounds = disc.rate_bounds_discrete(m, horizon=50)
        d = bounds.trajectory.d_max
        worst_high = max(worst_high, float(np.max(d - bounds.upper)))
        worst_low = max(worst_low, float(np.max(bounds.lower - d)))
    checks.append(_check("kernel reversibility gap", worst_rev, 1e-12,
                         f"{models} random models"))
    checks.append(_check("spectrum eigen-residual", worst_resid, 1e-10))
    checks.append(_check("spectrum pi-orthogonality", worst_orth, 1e-10))
    checks.append(_check("lambda_1 equals 1 - 1/w*", worst_lam1, 0.0, "bit-exact"))
    checks.append(_check("sandwich: d_max above lower envelope", worst_low, 1e-12))
    checks.append(_check("sandwich: d_max below upper envelope", worst_high, 1e-12))

    phi1, phi2 = sharpness_chains(2)
    t = np.arange(51)
    d1 = disc.rate_bounds_discrete(phi1, 50).trajectory.d_max
    d2 = disc.rate_bounds_discrete(phi2, 50).trajectory.d_max
    checks.append(_check("phi1 attains the upper envelope",
                         float(np.max(np.abs(d1 - 0.5 ** t))), 1e-12))
    checks.append(_check("phi2 attains the lower envelope",
                         float(np.max(np.abs(d2[1:] - 0.5 ** (t[1:] + 1)))), 1e-12))

    # top-state mixture identity and the spectral summation identity
    worst_mix = worst_spec = 0.0
    for _ in range(10):
        m = random_discrete_model(rng)
        P = disc.build_kernel(m).entries
        rate = 1.0 - 1.0 / m.weight[0]
        spec = disc.liu_spectrum(m)
        F, lams = spec.normalized, spec.eigenvalues
        Pt = np.eye(m.n)
        for s in range(1, 31):
            Pt = Pt @ P
            mix = rate ** s * np.eye(m.n)[0] + (1 - rate ** s) * m.target
            worst_mix = max(worst_mix, float(np.max(np.abs(Pt[0] - mix))))
            lhs = ((Pt / m.target[None, :] - 1.0) ** 2 * m.target[None, :]).sum(axis=1)
            rhs = (F ** 2 * lams[1:] ** (2 * s)).sum(axis=1)
            worst_spec = max(worst_spec, float(np.max(np.abs(lhs - rhs))))
    checks.append(_check("top state is a delta/pi mixture", worst_mix, 1e-10))
    checks.append(_check("spectral chi-square identity", worst_spec, 1e-9))

    worst_fit = 0.0
    for _ in range(fit_models):
        m = random_ratefit_model(rng)
        rates = disc.per_point_rate_discrete(m)
        worst_fit = max(worst_fit, float(np.max(np.abs(rates.rates - rates.rate_theory))))
    checks.append(_check("per-state fitted rates", worst_fit, 1e-4,
                         f"{fit_models} gap-conditioned models"))
    return checks


# ---------------------------------------------------------------------------
# general (continuous) suite
# ---------------------------------------------------------------------------

def validate_general(seed: int = 7) -> list[Check]:
    rng = stream_rng(seed, 2)
    checks = []
    model = exponential_exponential(0.5)
    pair = gen.weight_cdf_pair(model)
    rate = pair.rate

    worst = 0.0
    for _ in range(50):
        w = pair.wstar * (1.0 + 9.0 * rng.random())
        n = int(rng.integers(1, 21))
        quadrature = gen.t_n(pair, n, w, method="quadrature")
        closed = 1.0 - (1.0 - 1.0 / w) ** n
        worst = max(worst, abs(quadrature - closed))
    checks.append(_check("T_n quadrature vs closed form (w >= w*)", worst, 1e-8))

    worst = max(
        abs(gen.n_step_kernel(model, pair, n, x) - 1.0)
        for x in (0.0, 1.0, 4.0) for n in (1, 2, 5)
    )
    checks.append(_check("n-step kernel normalization", worst, 1e-6))

    worst = 0.0
    for x in (0.0, 0.7, 2.0, 2 * np.log(2)):
        rx = gen.rejection_probability(model, x)
        lam = gen.lambda_fn(pair, min(weight_at(model, x), pair.wstar))
        for n in (1, 3, 7):
            worst = max(worst, abs(lam ** n - rx ** n))
    checks.append(_check("lam(w(x))^n matches R(x)^n", worst, 1e-8))

    worst_lo = worst_hi = worst_mono = -np.inf
    for x in (0.0, 1.0, 2 * np.log(2)):
        rx = gen.rejection_probability(model, x)
        prev = np.inf
        for n in range(1, 11):
            tv = gen.tv_at_point_general(model, pair, n, x)
            worst_lo = max(worst_lo, rx ** n - tv)
            worst_hi = max(worst_hi, tv - rate ** n)
            worst_mono = max(worst_mono, tv - prev)
            prev = tv
    checks.append(_check("TV above rejection lower bound", worst_lo, 1e-8))
    checks.append(_check("TV below geometric upper bound", worst_hi, 1e-8))
    checks.append(_check("TV non-increasing in n", worst_mono, 1e-8))

    worst = max(
        abs(gen.tv_at_point_general(model, pair, n, 0.0) - 0.5 ** n)
        for n in range(1, 11)
    )
    checks.append(_check("exact speed at the maximizer", worst, 1e-6))

    table = {0.5: 6.64, 0.1: 43.71, 0.01: 458.21}
    worst = max(
        abs(gen.rate_report(exponential_exponential(th)).steps_to_eps(0.01) - n_ref)
        for th, n_ref in table.items()
    )
    checks.append(_check("steps-to-1% table", worst, 0.01))
    return checks


# ---------------------------------------------------------------------------
# coupling / sampling suite
# ---------------------------------------------------------------------------

def validate_coupling(seed: int = 7, replicas: int = 100_000) -> list[Check]:
    checks = []
    phi1, _ = sharpness_chains(2)
    wstar = float(phi1.weight[0])
    times = np.array([
        run_coupling(phi1, 3, seed=seed, stream=i).meeting_time
        for i in range(replicas)
    ])
    worst_sigma = 0.0
    for n in range(1, 11):
        p_emp = float(np.mean(times >= n))
        p_theory = (1.0 - 1.0 / wstar) ** (n - 1)
        se = max(np.sqrt(p_theory * (1 - p_theory) / replicas), 1e-12)
        worst_sigma = max(worst_sigma, abs(p_emp - p_theory) / se)
    checks.append(_check("meeting-time tail vs geometric law (sigmas)", worst_sigma, 3.0,
                         f"{replicas} replicas, w*={wstar}"))
    mean_se = np.sqrt(wstar * (wstar - 1.0) / replicas)
    checks.append(_check("mean meeting time vs w* (sigmas)",
                         abs(times.mean() - wstar) / mean_se, 3.0))

    rng = stream_rng(seed, 3)
    worst_mix = 0.0
    worst_neg = 0.0
    for _ in range(25):
        m = random_discrete_model(rng)
        if m.weight[0] <= 1.0 + 1e-12:
            continue
        P = disc.build_kernel(m).entries
        q = residual_pmf(m)
        ws = float(m.weight[0])
        recon = m.target[None, :] / ws + (1.0 - 1.0 / ws) * q
        worst_mix = max(worst_mix, float(np.max(np.abs(recon - P))))
        raw = (P - m.target[None, :] / ws) / (1.0 - 1.0 / ws)
        worst_neg = max(worst_neg, float(max(0.0, -raw.min())))
    checks.append(_check("kernel equals coin/residual mixture", worst_mix, 1e-12))
    checks.append(_check("residual nonnegativity", worst_neg, 1e-14))

    chain = three_point_chain()
    est = empirical_tv(chain, x0=1, t=3, replicas=replicas, seed=seed + 1)
    target = 0.5 * (2.0 / 3.0) ** 3
    checks.append(_check("empirical TV, three-point chain (sigmas)",
                         abs(est.estimate - target) / max(est.stderr, 1e-12), 3.0,
                         f"t=3 from state 1, target {target:.6f}"))

    # coupling inequality: exact TV below the meeting-tail envelope
    traj = disc.exact_tv(disc.build_kernel(phi1), phi1.target, 10)
    worst = -np.inf
    for n in range(1, 11):
        p_emp = float(np.mean(times >= n + 1))  # chains differ at step n if T > n
        se = max(np.sqrt(p_emp * (1 - p_emp) / replicas), 1e-12)
        worst = max(worst, float(traj.d_max[n]) - (p_emp + 3 * se))
    checks.append(_check("coupling bound: TV <= P(T > n)", max(worst, 0.0), 0.0))

    # consistency: error shrinks like 1/sqrt(replicas) (within a factor of 3)
    exact = 0.5 * (2.0 / 3.0) ** 3
    ladder = [2000, 8000, 32000]
    errs = [abs(empirical_tv(chain, 1, 3, m, seed + 2).estimate - exact) for m in ladder]
    bound = [3.0 / np.sqrt(m) for m in ladder]
    worst = max(e - b for e, b in zip(errs, bound))
    checks.append(_check("empirical TV consistency ladder", max(worst, 0.0), 0.0,
                         "error within 3/sqrt(replicas)"))
    return checks


SUITES = {
    "discrete": lambda seed, replicas: validate_discrete(seed),
    "general": lambda seed, replicas: validate_general(seed),
    "coupling": lambda seed, replicas: validate_coupling(seed, replicas),
}


def run_suites(names, seed: int = 7, replicas: int = 100_000):
    checks: list[Check] = []
    for name in names:
        checks.extend(SUITES[name](seed, replicas))
    failures = sum(not c.passed for c in checks)
    return checks, failures
