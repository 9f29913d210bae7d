import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imhrate.discrete import (
    build_kernel,
    exact_tv,
    liu_spectrum,
    per_point_rate_discrete,
    rank_one_eigen,
    rate_bounds_discrete,
    reversibility_gap,
)
from imhrate.errors import DegeneratePerturbation, NotStationary, ZeroWeightState
from imhrate.measures import DiscreteModel
from imhrate.registry import sharpness_chains, three_point_chain
from imhrate.validation import random_discrete_model


@st.composite
def discrete_models(draw, n_max=12, allow_zero=False):
    n = draw(st.integers(min_value=2, max_value=n_max))
    pi = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    p = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    if allow_zero and n >= 3 and draw(st.booleans()):
        pi[draw(st.integers(0, n - 1))] = 0.0
    return DiscreteModel.from_pmfs(pi / pi.sum(), p / p.sum())


# ---------------------------------------------------------------------------
# kernel construction
# ---------------------------------------------------------------------------

def test_kernel_identity_when_target_equals_proposal():
    p = np.array([0.2, 0.3, 0.5])
    m = DiscreteModel.from_pmfs(p, p)
    P = build_kernel(m).entries
    assert np.allclose(P, np.tile(m.proposal, (3, 1)), atol=1e-15)


def test_kernel_phi2_row_by_hand():
    # w = (2, 2/3, 2/3); off-diagonal P(0, j) = p_j w_j / w_0 = pi_j / w_0
    _, phi2 = sharpness_chains(2)
    P = build_kernel(phi2).entries
    assert np.allclose(P[0], [0.75, 0.125, 0.125], atol=1e-15)
    assert abs(P[0].sum() - 1.0) < 1e-15
    assert reversibility_gap(build_kernel(phi2), phi2.target) <= 1e-12


def test_three_point_fixture_ingests_directly():
    chain = three_point_chain()
    traj = exact_tv(chain.kernel, chain.stationary, 6)
    # stationary from the first state after one step; (1/2)(2/3)^n from the others
    assert np.all(traj.per_state[0, 1:] <= 1e-15)
    for n in range(1, 7):
        assert traj.per_state[1, n] == pytest.approx(0.5 * (2 / 3) ** n, abs=1e-14)
        assert traj.per_state[2, n] == pytest.approx(0.5 * (2 / 3) ** n, abs=1e-14)


@given(discrete_models(allow_zero=True))
@settings(max_examples=60, deadline=None)
def test_kernel_reversible_and_stochastic(m):
    P = build_kernel(m)
    assert np.max(np.abs(P.entries.sum(axis=1) - 1.0)) <= 1e-12
    assert reversibility_gap(P, m.target) <= 1e-12


# ---------------------------------------------------------------------------
# closed-form spectrum
# ---------------------------------------------------------------------------

def test_spectrum_zero_when_target_equals_proposal():
    p = np.array([0.2, 0.3, 0.5])
    m = DiscreteModel.from_pmfs(p, p)
    spec = liu_spectrum(m)
    assert np.allclose(spec.eigenvalues[1:], 0.0, atol=1e-15)


def test_lambda1_is_one_minus_inverse_wstar(rng):
    for _ in range(20):
        m = random_discrete_model(rng)
        spec = liu_spectrum(m)
        assert spec.eigenvalues[1] == 1.0 - 1.0 / m.weight[0]


def test_spectrum_residuals_random_5_state():
    rng = np.random.default_rng(5)
    m = random_discrete_model(rng, n_max=5, n_min=5)
    P = build_kernel(m).entries
    spec = liu_spectrum(m)
    for k in range(1, m.n):
        v = spec.eigenvectors[:, k - 1]
        assert np.max(np.abs(P @ v - spec.eigenvalues[k] * v)) <= 1e-10


def test_spectrum_rejects_zero_weight_states():
    m = DiscreteModel.from_pmfs([0.5, 0.5, 0.0], [0.25, 0.25, 0.5])
    with pytest.raises(ZeroWeightState):
        liu_spectrum(m)


@given(discrete_models())
@settings(max_examples=60, deadline=None)
def test_spectrum_invariants(m):
    P = build_kernel(m).entries
    spec = liu_spectrum(m)
    lams, V = spec.eigenvalues, spec.eigenvectors
    assert np.all(np.diff(lams[1:]) <= 1e-12)
    assert lams[-1] >= -1e-15
    for k in range(1, m.n):
        assert np.max(np.abs(P @ V[:, k - 1] - lams[k] * V[:, k - 1])) <= 1e-10
    gram = V.T @ (m.target[:, None] * V)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) <= 1e-10
    # normalized columns are pi-orthonormal
    F = spec.normalized
    gram_f = F.T @ (m.target[:, None] * F)
    assert np.max(np.abs(gram_f - np.eye(m.n - 1))) <= 1e-9


def test_spectrum_insensitive_to_tie_order():
    # equal top weights: swapping the tied states permutes nothing material
    pi = np.array([0.3, 0.3, 0.4])
    p = np.array([0.2, 0.2, 0.6])
    a = liu_spectrum(DiscreteModel.from_pmfs(pi, p))
    b = liu_spectrum(DiscreteModel.from_pmfs(pi[[1, 0, 2]], p[[1, 0, 2]]))
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-15)


def test_spectral_chi_square_identity(rng):
    m = random_discrete_model(rng, n_max=8)
    P = build_kernel(m).entries
    spec = liu_spectrum(m)
    F, lams = spec.normalized, spec.eigenvalues
    Pt = np.eye(m.n)
    for t in range(1, 16):
        Pt = Pt @ P
        lhs = ((Pt / m.target[None, :] - 1.0) ** 2 * m.target[None, :]).sum(axis=1)
        rhs = (F ** 2 * lams[1:] ** (2 * t)).sum(axis=1)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


# ---------------------------------------------------------------------------
# rank-one perturbation
# ---------------------------------------------------------------------------

def test_rank_one_zero_perturbation_keeps_eigenvalues():
    vals = np.array([2.0, 0.5, 0.1])
    new_vals, _ = rank_one_eigen(vals, np.eye(3), np.zeros(3))
    assert np.allclose(new_vals, vals)


def test_rank_one_two_by_two_by_hand():
    # A = diag(3, 1), perturb the second pair with u = (0, 2): char poly gives {3, 3}
    new_vals, _ = rank_one_eigen([3.0, 1.0], np.eye(2), [0.0, 2.0])
    assert sorted(new_vals) == [3.0, 3.0]
    with pytest.raises(DegeneratePerturbation):
        rank_one_eigen([3.0, 1.0], np.eye(2), [0.0, 2.0], want_vectors=True)


def test_rank_one_reproduces_closed_form_spectrum(rng):
    # P = D + e p^T: feed D's numeric eigenpairs, recover the kernel's spectrum
    m = random_discrete_model(rng, n_max=7, n_min=4)
    P = build_kernel(m).entries
    D = P - np.outer(np.ones(m.n), m.proposal)
    dvals = np.diag(D).copy()  # upper triangular
    evals, evecs = np.linalg.eig(D)
    idx = [int(np.argmin(np.abs(evals - d))) for d in dvals]
    A_vals = np.array([evals[i].real for i in idx])
    A_vecs = np.column_stack([evecs[:, i].real for i in idx])
    A_vecs[:, -1] = 1.0  # the known eigenvector e of D at eigenvalue 0
    new_vals, new_vecs = rank_one_eigen(A_vals, A_vecs, m.proposal, want_vectors=True)
    spec = liu_spectrum(m)
    assert np.allclose(np.sort(new_vals),
                       np.sort(np.concatenate([spec.eigenvalues[1:], [1.0]])), atol=1e-9)
    for j in range(m.n):
        r = np.max(np.abs(P @ new_vecs[:, j] - new_vals[j] * new_vecs[:, j]))
        assert r <= 1e-8


# ---------------------------------------------------------------------------
# exact TV and envelopes
# ---------------------------------------------------------------------------

def test_exact_tv_three_point_values():
    chain = three_point_chain()
    traj = exact_tv(chain.kernel, chain.stationary, 5)
    for t in range(1, 6):
        assert traj.d_max[t] == pytest.approx(0.5 * (2 / 3) ** t, abs=1e-14)


def test_exact_tv_requires_stationary_vector():
    chain = three_point_chain()
    with pytest.raises(NotStationary):
        exact_tv(chain.kernel, np.array([0.5, 0.3, 0.2]), 3)


def test_phi1_per_state_values():
    phi1, _ = sharpness_chains(2)
    traj = exact_tv(build_kernel(phi1), phi1.target, 12)
    t = np.arange(13)
    # positive-weight states sit at (1 - 1/K) 0.5^t, zero-weight states at 0.5^t
    for s in range(phi1.n):
        expected = 0.5 * 0.5 ** t if phi1.weight[s] > 0 else 0.5 ** t
        assert np.allclose(traj.per_state[s, 1:], expected[1:], atol=1e-13)
    assert np.allclose(traj.d_max[1:], 0.5 ** t[1:], atol=1e-13)


def test_rate_bounds_sharpness_chains_pin_both_ends():
    phi1, phi2 = sharpness_chains(2)
    t = np.arange(51)
    b1 = rate_bounds_discrete(phi1, 50)
    assert np.max(np.abs(b1.trajectory.d_max - 0.5 ** t)) <= 1e-12
    b2 = rate_bounds_discrete(phi2, 50)
    assert np.max(np.abs(b2.trajectory.d_max[1:] - 0.5 ** (t[1:] + 1))) <= 1e-12
    assert b2.lower[5] == pytest.approx((1 - 0.5) * 0.5 ** 5)


def test_rate_bounds_trivial_when_equal():
    p = np.array([0.25, 0.25, 0.5])
    m = DiscreteModel.from_pmfs(p, p)
    b = rate_bounds_discrete(m, 10)
    assert b.rate == 0.0
    assert np.all(b.trajectory.d_max[1:] <= 1e-15)


@given(discrete_models(allow_zero=True))
@settings(max_examples=40, deadline=None)
def test_sandwich_and_monotone_dmax(m):
    b = rate_bounds_discrete(m, 50)
    d = b.trajectory.d_max
    assert np.all(d <= b.upper + 1e-12)
    assert np.all(d >= b.lower - 1e-12)
    assert np.all(np.diff(d) <= 1e-12)
    assert np.all((b.trajectory.per_state >= 0) & (b.trajectory.per_state <= 1))


def test_top_state_mixture_identity(rng):
    m = random_discrete_model(rng)
    P = build_kernel(m).entries
    rate = 1.0 - 1.0 / m.weight[0]
    Pt = np.eye(m.n)
    for t in range(1, 25):
        Pt = Pt @ P
        mix = rate ** t * np.eye(m.n)[0] + (1.0 - rate ** t) * m.target
        assert np.max(np.abs(Pt[0] - mix)) <= 1e-10


def test_norm_chain_inequalities(rng):
    # TV = half the pi-weighted L1 gap >= (pi_min/2) * sup gap, and the
    # pi-weighted L2 gap is below the sup gap
    m = random_discrete_model(rng, n_max=7)
    P = build_kernel(m).entries
    pi = m.target
    pi_min = pi.min()
    Pt = np.linalg.matrix_power(P, 4)
    for x in range(m.n):
        dev = Pt[x] / pi - 1.0
        tv = 0.5 * np.abs(dev * pi).sum()
        sup = np.max(np.abs(dev))
        l2 = np.sqrt((dev ** 2 * pi).sum())
        assert tv >= 0.5 * pi_min * sup - 1e-15
        assert l2 <= sup + 1e-15


def test_spectral_lower_bound_chain(rng):
    m = random_discrete_model(rng, n_max=6)
    spec = liu_spectrum(m)
    rate = 1.0 - 1.0 / m.weight[0]
    traj = exact_tv(build_kernel(m), m.target, 30)
    pi_min = m.target.min()
    P = build_kernel(m).entries
    Pt = np.eye(m.n)
    for t in range(1, 31):
        Pt = Pt @ P
        for x in range(m.n):
            dev = Pt[x] / m.target - 1.0
            l2 = np.sqrt((dev ** 2 * m.target).sum())
            lhs = traj.per_state[x, t]
            assert lhs >= 0.5 * pi_min * l2 - 1e-12
            assert l2 >= abs(spec.normalized[x, 0]) * rate ** t - 1e-12


# ---------------------------------------------------------------------------
# per-point rates
# ---------------------------------------------------------------------------

def test_per_point_rates_phi2_hit_half():
    _, phi2 = sharpness_chains(2)
    res = per_point_rate_discrete(phi2)
    assert np.max(np.abs(res.rates - 0.5)) <= 1e-6
    assert res.rate_theory == 0.5


def test_per_point_rates_zero_when_equal():
    p = np.array([0.3, 0.7])
    m = DiscreteModel.from_pmfs(p, p)
    res = per_point_rate_discrete(m, horizon=40)
    assert np.all(res.rates == 0.0)


def test_per_point_rates_against_exact_tv_oracle():
    rng = np.random.default_rng(6)
    from imhrate.validation import random_ratefit_model
    m = random_ratefit_model(rng, n_max=6)
    res = per_point_rate_discrete(m)
    assert np.max(np.abs(res.rates - (1.0 - 1.0 / m.weight[0]))) <= 1e-4
    assert res.spectral_lower_const is not None
    assert np.all(res.spectral_lower_const > 0)
