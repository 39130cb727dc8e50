import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from agents import (
    DecisionRule,
    Manipulation,
    best_response_l2,
    best_response_weighted_l1,
    brute_force_best_response,
    main,
    manipulation_cost,
    respond,
    utility,
)
from core_types import (
    DimensionError,
    L2Cost,
    OracleGridTooLargeError,
    ParameterError,
    WeightedL1Cost,
    as_vector,
    on_threshold,
    zeros,
)

COORDS = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)


def test_l2_agent_at_cost_exactly_one_moves(vec):
    # Example 1: C = (-0.5, -1) is exactly alpha = 0.5 short of x·w >= 0 under w = (1, 0).
    rule = DecisionRule(w=vec(1.0, 0.0), threshold=0.0)
    response = best_response_l2(vec(-0.5, -1.0), rule, 0.5)
    assert response.moved
    np.testing.assert_array_equal(response.x, [0.0, -1.0])
    assert response.cost == 1.0


def test_l2_agent_out_of_reach_stays(vec):
    rule = DecisionRule(w=vec(1.0, 1.0), threshold=0.0)
    response = best_response_l2(vec(0.0, -1.0), rule, 0.5)
    assert not response.moved
    np.testing.assert_array_equal(response.x, [0.0, -1.0])


def test_l2_agent_already_positive_stays(vec):
    rule = DecisionRule(w=vec(1.0, 0.0), threshold=0.5)
    response = best_response_l2(vec(2.0, 0.0), rule, 1.0)
    assert not response.moved
    assert response.cost == 0.0
    np.testing.assert_array_equal(response.x, Manipulation.stay(vec(2.0, 0.0)).x)


def test_l2_agents_of_example2_stay_put(vec):
    rule = DecisionRule(w=vec(-4.0, -3.0), threshold=5.0)
    response = best_response_l2(vec(3.0, 2.0), rule, 5.0)
    assert not response.moved
    response = best_response_l2(vec(-1.0, -7.0), rule, 5.0)
    assert not response.moved


def test_zero_weight_rule(vec):
    positive = DecisionRule(w=zeros(2))
    negative = DecisionRule(w=zeros(2), zero_positive=False)
    assert positive.everything_positive
    assert not negative.everything_positive
    assert not negative.is_positive(vec(100.0, 100.0))
    assert not best_response_l2(vec(1.0, 1.0), negative, 10.0).moved


def test_l2_rejects_negative_budget(vec):
    with pytest.raises(ParameterError):
        best_response_l2(vec(0.0, 0.0), DecisionRule(w=vec(1.0, 0.0)), -1.0)


def test_weighted_l1_agent_uses_best_axis(vec):
    rule = DecisionRule(w=vec(1.0, 1.0), threshold=math.sqrt(2.0))
    response = best_response_weighted_l1(vec(0.0, 0.0), rule, (2.0, 1.0))
    assert response.moved
    assert response.coordinate == 0
    np.testing.assert_allclose(response.x, [2.0, 0.0])
    assert response.cost == pytest.approx(1.0)


def test_weighted_l1_tie_goes_to_lowest_index(vec):
    rule = DecisionRule(w=vec(1.0, 1.0), threshold=0.2)
    response = best_response_weighted_l1(vec(-0.2, -0.2), rule, (1.0, 1.0))
    assert response.coordinate == 0
    assert on_threshold(response.x, rule.w, rule.threshold)


def test_weighted_l1_agent_cannot_use_frozen_axis(vec):
    # alpha = (0.6, 0): only the first coordinate can move.
    rule = DecisionRule(w=vec(0.0, 1.0), threshold=0.0)
    assert not best_response_weighted_l1(vec(0.0, -0.1), rule, (0.6, 0.0)).moved
    rule = DecisionRule(w=vec(1.0, 0.0), threshold=0.0)
    response = best_response_weighted_l1(vec(-0.5, -1.0), rule, (0.6, 0.0))
    assert response.moved
    np.testing.assert_allclose(response.x, [0.0, -1.0])


def test_weighted_l1_rejects_wrong_dimension(vec):
    with pytest.raises(ParameterError):
        best_response_weighted_l1(vec(0.0, 0.0), DecisionRule(w=vec(1.0, 0.0)), (1.0,))


def test_respond_dispatches_on_cost_model(vec):
    rule = DecisionRule(w=vec(1.0, 0.0), threshold=0.0)
    z = vec(-0.5, -1.0)
    np.testing.assert_array_equal(respond(z, rule, L2Cost(0.5)).x, best_response_l2(z, rule, 0.5).x)
    assert respond(z, rule, WeightedL1Cost((0.6, 0.0))).coordinate == 0


def test_manipulation_cost_and_utility(vec):
    z = vec(0.0, 0.0)
    assert manipulation_cost(L2Cost(2.0), z, vec(3.0, 4.0)) == pytest.approx(2.5)
    assert manipulation_cost(WeightedL1Cost((1.0, 2.0)), z, vec(1.0, -1.0)) == pytest.approx(1.5)
    assert manipulation_cost(WeightedL1Cost((1.0, 0.0)), z, vec(0.0, 0.1)) == math.inf
    rule = DecisionRule(w=vec(1.0, 0.0), threshold=1.0)
    assert utility(z, vec(1.0, 0.0), rule, L2Cost(2.0)) == pytest.approx(0.5)
    assert utility(z, z, rule, L2Cost(2.0)) == 0.0


@settings(max_examples=300, deadline=None)
@given(
    z=arrays(np.float64, (3,), elements=COORDS),
    w=arrays(np.float64, (3,), elements=COORDS),
    threshold=st.floats(min_value=0.0, max_value=3.0),
    alpha=st.floats(min_value=0.0, max_value=3.0),
)
def test_l2_best_response_is_rational(z, w, threshold, alpha):
    if np.linalg.norm(w) < 1e-3:
        return
    rule = DecisionRule(w=as_vector(w), threshold=threshold)
    response = best_response_l2(as_vector(z), rule, alpha)
    if response.moved:
        assert on_threshold(response.x, rule.w, threshold)
        assert response.cost <= 1.0
        assert manipulation_cost(L2Cost(alpha), as_vector(z), response.x) <= 1.0 + 1e-9
    else:
        np.testing.assert_array_equal(response.x, z)
    assert utility(as_vector(z), response.x, rule, L2Cost(alpha)) >= -1e-9


@settings(max_examples=300, deadline=None)
@given(
    z=arrays(np.float64, (3,), elements=COORDS),
    w=arrays(np.float64, (3,), elements=COORDS),
    threshold=st.floats(min_value=0.0, max_value=3.0),
    alphas=arrays(np.float64, (3,), elements=st.floats(min_value=0.0, max_value=3.0)),
)
def test_weighted_l1_best_response_moves_one_axis(z, w, threshold, alphas):
    if np.linalg.norm(w) < 1e-3:
        return
    rule = DecisionRule(w=as_vector(w), threshold=threshold)
    response = best_response_weighted_l1(as_vector(z), rule, tuple(alphas))
    changed = np.flatnonzero(response.x != z)
    assert len(changed) <= 1
    if response.moved:
        assert on_threshold(response.x, rule.w, threshold)
        assert response.cost <= 1.0


def test_oracle_matches_closed_form_l2(vec):
    z = vec(-0.3, -0.2)
    rule = DecisionRule(w=vec(1.0, 1.0), threshold=0.2)
    oracle = brute_force_best_response(z, rule, L2Cost(1.0), grid_step=1.0 / 200.0, grid_radius=1.05)
    closed = best_response_l2(z, rule, 1.0).x
    assert utility(z, oracle, rule, L2Cost(1.0)) == pytest.approx(utility(z, closed, rule, L2Cost(1.0)), abs=1e-6)


def test_oracle_stays_on_utility_ties_and_agrees_in_utility(vec):
    z = vec(-0.5, -1.0)
    rule = DecisionRule(w=vec(1.0, 0.0), threshold=0.0)
    # Moving costs exactly 1, which ties with staying at utility 0.
    oracle = brute_force_best_response(z, rule, L2Cost(0.5), grid_step=0.01, grid_radius=0.6)
    closed = best_response_l2(z, rule, 0.5).x
    np.testing.assert_array_equal(oracle, z)
    np.testing.assert_allclose(closed, [0.0, -1.0], atol=1e-12)
    assert utility(z, oracle, rule, L2Cost(0.5)) == pytest.approx(utility(z, closed, rule, L2Cost(0.5)), abs=1e-12)


def test_oracle_stays_when_no_destination_is_positive(vec):
    z = vec(-0.2, 0.0)
    rule = DecisionRule(w=vec(0.0, 0.0), zero_positive=False)
    oracle = brute_force_best_response(z, rule, L2Cost(5.0), grid_step=0.05, grid_radius=0.5)
    np.testing.assert_array_equal(oracle, z)


def test_oracle_matches_weighted_l1_with_frozen_axis(vec):
    z = vec(-0.2, -0.4)
    rule = DecisionRule(w=vec(1.0, 2.0), threshold=0.0)
    model = WeightedL1Cost((1.0, 0.0))
    oracle = brute_force_best_response(z, rule, model, grid_step=1.0 / 200.0, grid_radius=1.05)
    closed = best_response_weighted_l1(z, rule, model.alphas).x
    assert utility(z, oracle, rule, model) == pytest.approx(utility(z, closed, rule, model), abs=1e-6)


def test_oracle_grid_limits(vec):
    z = zeros(10)
    rule = DecisionRule(w=as_vector(np.ones(10)))
    with pytest.raises(OracleGridTooLargeError):
        brute_force_best_response(z, rule, L2Cost(1.0), grid_step=0.01, grid_radius=1.0)
    with pytest.raises(ParameterError):
        brute_force_best_response(vec(0.0), DecisionRule(w=vec(1.0)), L2Cost(1.0), grid_step=0.0, grid_radius=1.0)


@pytest.mark.parametrize("w", [["0", "0", "0"], ["1", "0", "0"]])
def test_cli_rejects_weight_of_wrong_dimension(w):
    with pytest.raises(DimensionError):
        main(["--z", "0", "0", "--w", *w, "--alpha", "1"])


def test_cli_accepts_zero_weight_of_right_dimension(capsys):
    main(["--z", "-1", "0", "--w", "0", "0", "--alpha", "1"])
    assert capsys.readouterr().out.strip() == "[-1.0, 0.0]"
