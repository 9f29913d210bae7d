import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imhrate.errors import (
    InvalidModel,
    PointOutsideSupport,
    UnboundedWeight,
    ZeroProposalDensity,
)
from imhrate.measures import (
    DiscreteModel,
    GeneralModel,
    StructureHints,
    SupportDescriptor,
    compute_wstar,
    weight_at,
    wstar_discrete,
)
from imhrate.registry import exponential_exponential


# ---------------------------------------------------------------------------
# discrete model canonicalization
# ---------------------------------------------------------------------------

def test_canonical_order_sorts_weights_descending():
    m = DiscreteModel.from_pmfs([0.5, 0.25, 0.25], [0.25, 0.5, 0.25])
    assert np.all(np.diff(m.weight) <= 0)
    assert m.weight[0] == 2.0
    # order maps canonical back to input indices: w = (2, 0.5, 1) -> [0, 2, 1]
    assert m.order.tolist() == [0, 2, 1]
    assert m.to_input_index(0) == 0


def test_zero_target_states_sort_last_and_dead_states_drop():
    m = DiscreteModel.from_pmfs([0.5, 0.5, 0.0, 0.0], [0.25, 0.25, 0.25, 0.25])
    assert m.n == 4
    assert np.all(m.weight[-2:] == 0.0)
    # a state with zero mass under both measures disappears
    m2 = DiscreteModel.from_pmfs([0.5, 0.5, 0.0], [0.5, 0.5, 0.0])
    assert m2.n == 2


def test_ties_keep_input_order():
    m = DiscreteModel.from_pmfs([0.4, 0.4, 0.2], [0.2, 0.2, 0.6])
    assert m.order.tolist()[:2] == [0, 1]


@pytest.mark.parametrize("target,proposal,err", [
    ([0.5, 0.6], [0.5, 0.5], InvalidModel),          # does not sum to 1
    ([-0.1, 1.1], [0.5, 0.5], InvalidModel),         # negative mass
    ([0.5, 0.5], [1.0, 0.0], InvalidModel),          # containment broken
])
def test_discrete_validation(target, proposal, err):
    with pytest.raises(err):
        DiscreteModel.from_pmfs(target, proposal)


def test_wstar_discrete_examples():
    m = DiscreteModel.from_pmfs([0.5, 0.5, 0.0, 0.0], [0.25] * 4)
    s = wstar_discrete(m)
    assert s.wstar == 2.0 and s.argmax == 0 and s.attained

    m = DiscreteModel.from_pmfs([1 / 3] * 3, [1 / 3] * 3)
    assert wstar_discrete(m).wstar == pytest.approx(1.0, abs=1e-12)

    m = DiscreteModel.from_pmfs([0.5, 0.25, 0.25], [0.25, 0.5, 0.25])
    s = wstar_discrete(m)
    assert s.wstar == 2.0 and s.argmax == 0


# ---------------------------------------------------------------------------
# weight evaluation
# ---------------------------------------------------------------------------

def test_weight_at_exponential_values():
    m = exponential_exponential(0.5)
    assert weight_at(m, 0.0) == pytest.approx(2.0, abs=1e-14)
    assert weight_at(m, 2 * math.log(2)) == pytest.approx(1.0, rel=1e-12)
    m1 = exponential_exponential(1.0)
    for x in (0.0, 0.3, 5.0):
        assert weight_at(m1, x) == pytest.approx(1.0, rel=1e-12)


def test_weight_at_outside_support():
    m = exponential_exponential(0.5)
    with pytest.raises(PointOutsideSupport):
        weight_at(m, -1.0)


def test_weight_at_discrete_bounds():
    m = DiscreteModel.from_pmfs([0.5, 0.5], [0.5, 0.5])
    assert weight_at(m, 1) == 1.0
    with pytest.raises(PointOutsideSupport):
        weight_at(m, 2)


@given(x=st.floats(min_value=0.0, max_value=40.0), theta=st.floats(min_value=0.05, max_value=1.0))
@settings(max_examples=60, deadline=None)
def test_log_and_ratio_paths_agree(x, theta):
    m = exponential_exponential(theta)
    ratio = float(m.target_density(x)) / float(m.proposal_density(x))
    assert weight_at(m, x) == pytest.approx(ratio, rel=1e-12)


# ---------------------------------------------------------------------------
# w* search
# ---------------------------------------------------------------------------

def _strip_hints(model: GeneralModel, keep_monotone=False) -> GeneralModel:
    hints = StructureHints(
        weight_monotone=model.hints.weight_monotone if keep_monotone else None
    )
    return model.with_hints(hints)


def test_wstar_from_hints():
    s = compute_wstar(exponential_exponential(0.5))
    assert s.method == "analytic-hint"
    assert s.wstar == 2.0 and s.argmax == 0.0 and s.attained


def test_wstar_monotone_hint_returns_left_endpoint():
    m = _strip_hints(exponential_exponential(0.5), keep_monotone=True)
    s = compute_wstar(m)
    assert s.argmax == 0.0
    assert s.wstar == pytest.approx(2.0, rel=1e-12)


def test_wstar_grid_refine_without_hints():
    m = _strip_hints(exponential_exponential(0.5))
    s = compute_wstar(m)
    assert s.method == "grid-refine"
    assert s.wstar == pytest.approx(2.0, rel=1e-9)
    assert abs(s.argmax) < 1e-6


def test_wstar_trivial_theta_one():
    s = compute_wstar(_strip_hints(exponential_exponential(1.0)))
    assert s.wstar == pytest.approx(1.0, rel=1e-10)


def test_wstar_at_least_one(rng):
    # both densities integrate to 1, so sup of their ratio cannot be below 1
    for theta in rng.uniform(0.05, 1.0, size=8):
        s = compute_wstar(_strip_hints(exponential_exponential(theta)))
        assert s.wstar >= 1.0 - 1e-9


def test_unbounded_weight_detected():
    # Exp(0.05) target against an Exp(1) proposal: the weight 0.05 e^{0.95 x}
    # climbs past the 1e8 threshold before the proposal tail is exhausted
    m = GeneralModel(
        target_density=lambda x: np.where(np.asarray(x) < 0, 0.0,
                                          0.05 * np.exp(-0.05 * np.clip(x, 0, None))),
        target_log_density=lambda x: np.where(np.asarray(x) < 0, -np.inf,
                                              math.log(0.05) - 0.05 * np.asarray(x)),
        proposal_density=lambda x: np.where(np.asarray(x) < 0, 0.0,
                                            np.exp(-np.clip(x, 0, None))),
        proposal_sampler=lambda rng: rng.exponential(1.0),
        support=SupportDescriptor.interval(0.0, math.inf),
    )
    with pytest.raises(UnboundedWeight):
        compute_wstar(m)
    # the increasing-hint shortcut detects it too
    with pytest.raises(UnboundedWeight):
        compute_wstar(m.with_hints(StructureHints(weight_monotone="increasing")))


def test_boundary_warning_when_sup_sits_on_truncation():
    from imhrate.registry import rate_not_attained_model
    m = _strip_hints(rate_not_attained_model(), keep_monotone=True)
    s = compute_wstar(m)
    assert s.boundary_warning
    assert s.wstar == pytest.approx(1.5, abs=1e-6)


def test_hint_consistency_enforced():
    with pytest.raises(InvalidModel):
        m = exponential_exponential(0.5)
        m.with_hints(StructureHints(known_argmax=1.0, known_wstar=2.0))


def test_simplex_grid_matches_brute_force():
    from imhrate.registry import dirichlet_multinomial
    m = dirichlet_multinomial([1.0, 1.0], [1.0, 1.0]).with_hints(StructureHints())
    s = compute_wstar(m)
    # brute force: step-1e-4 grid over the K=2 simplex edge
    grid = np.arange(0.0, 1.0 + 1e-4, 1e-4)
    brute = np.max(6.0 * grid * (1.0 - grid))
    assert s.wstar == pytest.approx(brute, abs=1e-6)
    assert s.wstar == pytest.approx(1.5, abs=1e-6)
    assert np.allclose(s.argmax, [0.5], atol=1e-5)


@given(budgets=st.lists(st.integers(min_value=150, max_value=4000), min_size=2, max_size=5))
@settings(max_examples=20, deadline=None)
def test_wstar_monotone_in_budget(budgets):
    # a two-bump weight: mixture proposal leaves a spike the coarse grids miss
    def target(x):
        x = np.asarray(x, dtype=float)
        return np.where((x < 0) | (x > 1), 0.0, 1.0)

    def proposal(x):
        x = np.asarray(x, dtype=float)
        base = 0.5 + 4.0 * (x - 0.31) ** 2
        return np.where((x < 0) | (x > 1), 0.0, base / 0.71413333333)

    norm = float(np.trapezoid(proposal(np.linspace(0, 1, 200001)), np.linspace(0, 1, 200001)))
    m = GeneralModel(
        target_density=lambda x: target(x),
        target_log_density=lambda x: np.log(np.clip(target(x), 1e-300, None)),
        proposal_density=lambda x: proposal(x) / norm,
        proposal_sampler=lambda rng: rng.random(),
        support=SupportDescriptor.interval(0.0, 1.0),
    )
    values = [compute_wstar(m, budget=b).wstar for b in sorted(budgets)]
    for lo, hi in zip(values, values[1:]):
        assert hi >= lo - 1e-9


def test_support_descriptor_validation():
    with pytest.raises(InvalidModel):
        SupportDescriptor.interval(2.0, 1.0)
    with pytest.raises(InvalidModel):
        SupportDescriptor.simplex(1)
    s = SupportDescriptor.simplex(3)
    assert s.contains(np.array([0.2, 0.3]))
    assert not s.contains(np.array([0.8, 0.5]))


def test_zero_proposal_density_raises():
    m = GeneralModel(
        target_density=lambda x: np.where((np.asarray(x) >= 0) & (np.asarray(x) <= 1), 1.0, 0.0),
        target_log_density=None,
        proposal_density=lambda x: np.where((np.asarray(x) >= 0) & (np.asarray(x) <= 0.5), 2.0, 0.0),
        proposal_sampler=lambda rng: 0.5 * rng.random(),
        support=SupportDescriptor.interval(0.0, 1.0),
    )
    with pytest.raises(ZeroProposalDensity):
        weight_at(m, 0.75)
