import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core_types import Label, ParameterError, RationalityViolation, UndefinedMarginError, as_vector, zeros
from learners import (
    Classifier,
    L1LearnerState,
    L2LearnerState,
    LearnerFaults,
    PhaseEvent,
    UnknownCostState,
    classic_step,
    correction_step,
    eta_schedule,
    initial_state,
    initial_unknown_cost_state,
    learner_step,
    mistake_budget,
    published_rule,
    state_from_json,
    strategic_l1_step,
    strategic_l2_step,
    surrogate_l1,
    surrogate_l2,
    tie_break,
    unknown_cost_controller_step,
    unknown_cost_l1_single_direction,
)

POS, NEG = Label.POSITIVE, Label.NEGATIVE


# =============================================================================
# classic
# =============================================================================

def test_classic_predicts_positive_on_zero_w_and_updates(vec):
    outcome = classic_step(Classifier(w=zeros(2)), vec(-1.0, 0.0), NEG)
    assert outcome.prediction == POS
    assert outcome.mistake
    np.testing.assert_array_equal(outcome.state.w, [1.0, 0.0])


def test_classic_zero_prediction_negative(vec):
    state = Classifier(w=zeros(2), zero_prediction=NEG)
    outcome = classic_step(state, vec(1.0, 0.0), POS)
    assert outcome.prediction == NEG
    np.testing.assert_array_equal(outcome.state.w, [1.0, 0.0])
    assert not published_rule(state).zero_positive


def test_classic_sign_of_zero_margin_is_positive(vec):
    outcome = classic_step(Classifier(w=vec(1.0, 0.0)), vec(0.0, -1.0), POS)
    assert not outcome.mistake
    assert outcome.surrogate is None


# =============================================================================
# strategic ℓ2
# =============================================================================

def test_example2_first_surrogate_is_exact(vec):
    state = L2LearnerState(w=vec(-4.0, -3.0), alpha_published=5.0)
    outcome = strategic_l2_step(state, vec(-1.0, -7.0), NEG)
    assert outcome.prediction == POS
    assert outcome.surrogate.tolist() == [3.0, -4.0]
    assert outcome.state.w.tolist() == [-7.0, 1.0]


def test_example2_positive_is_plain_perceptron_update(vec):
    state = L2LearnerState(w=vec(-7.0, 1.0), alpha_published=5.0)
    outcome = strategic_l2_step(state, vec(3.0, 2.0), POS)
    assert outcome.mistake
    assert outcome.surrogate.tolist() == [3.0, 2.0]
    assert outcome.state.w.tolist() == [-4.0, 3.0]


def test_strategic_l2_zero_w_follows_zero_prediction(vec):
    state = initial_state("strategic-l2", 2, alpha=5.0, zero_prediction=NEG)
    outcome = strategic_l2_step(state, vec(-4.0, -3.0), POS)
    assert outcome.mistake
    assert outcome.state.w.tolist() == [-4.0, -3.0]


def test_surrogate_l2_rejects_band_points(vec):
    with pytest.raises(RationalityViolation):
        surrogate_l2(vec(0.5, 0.0), vec(1.0, 0.0), 1.0, NEG)
    with pytest.raises(UndefinedMarginError):
        surrogate_l2(vec(0.5, 0.0), zeros(2), 1.0, NEG)
    np.testing.assert_array_equal(surrogate_l2(vec(0.5, 0.0), vec(1.0, 0.0), 1.0, NEG, strict=False), [0.5, 0.0])


def test_strategic_l2_flags_band_point_and_keeps_going(vec):
    state = L2LearnerState(w=vec(1.0, 0.0), alpha_published=1.0)
    outcome = strategic_l2_step(state, vec(0.5, 0.0), POS)
    assert outcome.mistake
    assert outcome.rationality_violation
    np.testing.assert_array_equal(outcome.state.w, [1.5, 0.0])


def test_flipped_surrogate_fault(vec):
    state = L2LearnerState(w=vec(-4.0, -3.0), alpha_published=5.0)
    outcome = strategic_l2_step(state, vec(-1.0, -7.0), NEG, faults=LearnerFaults(flip_surrogate=True))
    assert outcome.surrogate.tolist() == [-5.0, -10.0]


@settings(max_examples=200, deadline=None)
@given(
    w=arrays(np.float64, (3,), elements=st.floats(min_value=-5.0, max_value=5.0)),
    y=arrays(np.float64, (3,), elements=st.floats(min_value=-5.0, max_value=5.0)),
    alpha=st.floats(min_value=0.0, max_value=3.0),
)
def test_threshold_negatives_map_to_zero_hyperplane(w, y, alpha):
    w_norm = np.linalg.norm(w)
    if w_norm < 1e-2:
        return
    u = w / w_norm
    # Put x exactly on the manipulation hyperplane: x·u = alpha.
    x = as_vector(y - np.dot(y, u) * u + alpha * u)
    x_tilde = surrogate_l2(x, as_vector(w), alpha, NEG, strict=False)
    assert abs(float(np.dot(x_tilde, w))) <= 1e-8 * max(1.0, w_norm * (np.linalg.norm(x) + alpha))


# =============================================================================
# strategic weighted ℓ1
# =============================================================================

def test_correction_step_zeroes_negative_coordinates(vec):
    w, mus = correction_step(vec(1.0, -2.0, 3.0))
    assert w.tolist() == [1.0, 0.0, 3.0]
    assert mus.tolist() == [0.0, 2.0, 0.0]
    w, mus = correction_step(vec(-1.0, -2.0), coordinates=(0,))
    assert w.tolist() == [0.0, -2.0]
    assert mus.tolist() == [1.0, 0.0]


def test_tie_break_adds_eta_to_lowest_argmax(vec):
    i, w = tie_break(vec(1.0, 1.0), (1.0, 1.0), 0.125)
    assert i == 0
    assert w.tolist() == [1.125, 1.0]
    i, _ = tie_break(vec(1.0, 1.0), (0.5, 2.0), 0.125)
    assert i == 1
    with pytest.raises(UndefinedMarginError):
        tie_break(zeros(2), (1.0, 1.0), 0.1)
    with pytest.raises(ParameterError):
        tie_break(vec(1.0, 1.0), (1.0, 1.0), -0.1)


def test_eta_schedule_formula():
    assert eta_schedule(0.0, 1.0, 1.0) == pytest.approx(1.0 / 18.0)
    assert eta_schedule(2.0, 1.0, 0.5) == pytest.approx(1.0 / 22.0)


def test_surrogate_l1_moves_back_along_axis(vec):
    w = vec(1.0, 1.0)
    threshold_point = vec(1.0, 0.0)
    np.testing.assert_array_equal(surrogate_l1(threshold_point, w, (1.0, 1.0), 0, NEG), [0.0, 0.0])
    np.testing.assert_array_equal(surrogate_l1(vec(3.0, 0.0), w, (1.0, 1.0), 0, NEG), [3.0, 0.0])


def test_tie_fixture_first_update(vec):
    state = initial_state("strategic-l1", 2, alphas=(1.0, 1.0), R=math.sqrt(2.0))
    outcome = strategic_l1_step(state, vec(-1.0, -1.0), NEG, R_known=math.sqrt(2.0))
    eta = eta_schedule(0.0, math.sqrt(2.0), 1.0)
    assert outcome.mistake
    assert outcome.eta == pytest.approx(eta)
    assert outcome.state.dir_index == 0
    np.testing.assert_allclose(outcome.state.w, [1.0 + eta, 1.0])


def test_zero_eta_fault_leaves_the_tie(vec):
    state = initial_state("strategic-l1", 2, alphas=(1.0, 1.0), R=math.sqrt(2.0))
    outcome = strategic_l1_step(state, vec(-1.0, -1.0), NEG, 1.0, faults=LearnerFaults(zero_eta=True))
    assert outcome.state.w.tolist() == [1.0, 1.0]


def test_strategic_l1_corrects_after_update(vec):
    state = L1LearnerState(w=vec(1.0, 0.1), alphas=(1.0, 1.0), dir_index=0)
    # A positive far on the negative side of axis 1 drags w_2 below zero.
    outcome = strategic_l1_step(state, vec(-0.5, -3.0), POS, R_known=5.0)
    assert outcome.mistake
    assert np.all(outcome.state.w >= 0.0)
    assert outcome.mus[1] == pytest.approx(2.9)
    skipped = strategic_l1_step(state, vec(-0.5, -3.0), POS, R_known=5.0, faults=LearnerFaults(skip_correction=True))
    assert skipped.state.w[1] < 0.0


def test_strategic_l1_back_to_zero(vec):
    state = L1LearnerState(w=vec(1.0, 0.0), alphas=(1.0, 1.0), dir_index=0)
    outcome = strategic_l1_step(state, vec(2.0, 0.0), NEG, R_known=5.0)
    assert outcome.mistake
    assert outcome.state.w.tolist() == [0.0, 0.0]
    assert outcome.state.dir_index is None
    assert published_rule(outcome.state).everything_positive


# =============================================================================
# unknown cost
# =============================================================================

@pytest.mark.parametrize(
    "R, alpha_guess, gamma, expected",
    [(5.0, 0.0, 1.0, 121), (1.0, 0.5, 1.0, 16), (2.0, 1.0, 0.5, 169), (1.0, 0.0, 2.0, 4)],
)
def test_mistake_budget(R, alpha_guess, gamma, expected):
    assert mistake_budget(R, alpha_guess, gamma) == expected


POSITIVE_PARAMS = st.floats(min_value=0.01, max_value=50.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(
    R=POSITIVE_PARAMS,
    alpha_guess=st.floats(min_value=0.0, max_value=50.0),
    gamma=POSITIVE_PARAMS,
    grow=st.floats(min_value=0.01, max_value=10.0),
)
def test_mistake_budget_grows_with_radius_and_guess_and_shrinks_with_margin(R, alpha_guess, gamma, grow):
    base = mistake_budget(R, alpha_guess, gamma)
    assert mistake_budget(R + grow, alpha_guess, gamma) >= base
    assert mistake_budget(R, alpha_guess + grow, gamma) >= base
    assert mistake_budget(R, alpha_guess, gamma + grow) <= base


def test_mistake_budget_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        mistake_budget(0.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        mistake_budget(1.0, -0.5, 1.0)


def test_phase_up_from_zero_goes_to_half_gamma(vec):
    state = initial_unknown_cost_state(2, R_known=1.0, gamma_known=1.0)
    assert state.phase_budget == 9
    state = replace(state, phase_mistakes=9)
    outcome = unknown_cost_controller_step(state, vec(0.3, 0.0), NEG)
    assert outcome.event == PhaseEvent.PHASE_UP
    new = outcome.state
    assert (new.alpha_lo, new.alpha_guess) == (0.0, 0.5)
    assert new.phase_budget == 16
    assert new.phase_index == 1
    assert new.phase_mistakes == 0
    assert new.inner.w.tolist() == [0.0, 0.0]


def test_phase_up_is_capped_at_R(vec):
    state = replace(initial_unknown_cost_state(2, R_known=1.0, gamma_known=0.5), alpha_guess=0.8, phase_mistakes=10**6)
    state = replace(state, inner=L2LearnerState(w=zeros(2), alpha_published=0.8))
    outcome = unknown_cost_controller_step(state, vec(0.3, 0.0), NEG)
    assert outcome.event == PhaseEvent.PHASE_UP
    assert outcome.state.alpha_guess == 1.0
    assert outcome.state.alpha_lo == 0.8


def test_phase_down_takes_the_midpoint(vec):
    gamma = 1.0
    state = UnknownCostState(
        alpha_lo=gamma / 2.0,
        alpha_guess=2.0 * gamma,
        inner=L2LearnerState(w=vec(1.0, 0.0), alpha_published=2.0 * gamma),
        phase_mistakes=3,
        phase_budget=mistake_budget(10.0, 2.0 * gamma, gamma),
        R_known=10.0,
        gamma_known=gamma,
        phase_index=4,
    )
    outcome = unknown_cost_controller_step(state, vec(1.0, 0.0), POS)
    assert outcome.event == PhaseEvent.PHASE_DOWN
    assert outcome.state.alpha_guess == pytest.approx(1.25 * gamma)
    assert outcome.state.alpha_lo == gamma / 2.0
    assert outcome.state.phase_mistakes == 0
    assert outcome.state.inner.w.tolist() == [0.0, 0.0]


def test_band_edges_do_not_trigger_phase_down(vec):
    state = UnknownCostState(
        alpha_lo=0.0,
        alpha_guess=2.0,
        inner=L2LearnerState(w=vec(1.0, 0.0), alpha_published=2.0),
        phase_mistakes=0,
        phase_budget=100,
        R_known=10.0,
        gamma_known=1.0,
    )
    for x in (vec(2.0, 1.0), vec(0.0, 1.0)):
        assert unknown_cost_controller_step(state, x, POS).event == PhaseEvent.NONE


def test_single_direction_band_uses_first_coordinate(vec):
    state = UnknownCostState(
        alpha_lo=0.0,
        alpha_guess=1.0,
        inner=L1LearnerState(w=vec(1.0, 1.0), alphas=(1.0, 0.0), dir_index=0),
        phase_mistakes=0,
        phase_budget=100,
        R_known=5.0,
        gamma_known=0.5,
    )
    rule = published_rule(state)
    assert rule.threshold == pytest.approx(1.0 / math.sqrt(2.0))
    outcome = unknown_cost_l1_single_direction(state, vec(0.3, 0.0), NEG)
    assert outcome.event == PhaseEvent.PHASE_DOWN
    assert outcome.state.alpha_guess == 0.5
    assert outcome.state.single_direction
    with pytest.raises(ParameterError):
        unknown_cost_controller_step(state, vec(0.3, 0.0), NEG)


def test_single_direction_corrects_first_coordinate_only(vec):
    state = UnknownCostState(
        alpha_lo=0.0,
        alpha_guess=0.5,
        inner=L1LearnerState(w=vec(0.5, 1.0), alphas=(0.5, 0.0), dir_index=0),
        phase_mistakes=0,
        phase_budget=100,
        R_known=5.0,
        gamma_known=0.5,
    )
    outcome = unknown_cost_l1_single_direction(state, vec(2.0, -3.0), POS)
    assert outcome.mistake
    assert outcome.state.inner.w.tolist() == [2.5, -2.0]
    outcome = unknown_cost_l1_single_direction(state, vec(3.0, 4.0), NEG)
    assert outcome.state.inner.w[0] == 0.0
    assert outcome.mus.tolist() == [2.5, 0.0]


# =============================================================================
# dispatch and snapshots
# =============================================================================

@pytest.mark.parametrize(
    "algorithm, params",
    [
        ("classic", {"zero_prediction": NEG}),
        ("strategic-l2", {"alpha": 1.5}),
        ("strategic-l1", {"alphas": (1.0, 2.0), "R": 3.0}),
        ("unknown-l2", {"R": 3.0, "gamma": 0.5}),
        ("unknown-l1-single", {"R": 3.0, "gamma": 0.5}),
    ],
)
def test_snapshots_round_trip_through_json(vec, algorithm, params):
    state = initial_state(algorithm, 2, **params)
    for x, label in [(vec(1.0, 2.0), NEG), (vec(-1.0, 0.5), POS), (vec(2.0, -1.0), NEG)]:
        state = learner_step(state, x, label, R_known=params.get("R")).state
    restored = state_from_json(json.loads(json.dumps(state.to_json())))
    assert type(restored) is type(state)
    assert restored.to_json() == state.to_json()


@pytest.mark.parametrize(
    "algorithm, params",
    [
        ("strategic-l2", {}),
        ("strategic-l1", {"alphas": (1.0, 1.0)}),
        ("strategic-l1", {"alphas": (1.0,), "R": 1.0}),
        ("unknown-l2", {"R": 1.0}),
        ("perceptron", {}),
    ],
)
def test_initial_state_validates_parameters(algorithm, params):
    with pytest.raises(ParameterError):
        initial_state(algorithm, 2, **params)


def test_learner_step_needs_R_for_l1(vec):
    state = initial_state("strategic-l1", 2, alphas=(1.0, 1.0), R=1.0)
    with pytest.raises(ParameterError):
        learner_step(state, vec(1.0, 1.0), NEG)


def test_state_from_json_rejects_unknown_kind():
    with pytest.raises(ParameterError):
        state_from_json({"kind": "svm"})
