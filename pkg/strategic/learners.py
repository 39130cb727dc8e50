#!/usr/bin/env python3
"""
learners.py

Online learners for strategic classification, as pure state machines:

  - classic_step: the plain Perceptron, predicting sgn(x·w).
  - strategic_l2_step: the strategic Perceptron for ℓ2 costs. It raises the
    bar to x·w/|w| >= alpha and updates with a surrogate point that pulls
    negatives on the manipulation hyperplane back by alpha·w/|w|.
  - strategic_l1_step: the weighted-ℓ1 variant with its correction step
    (negative coordinates of w zeroed) and tie-breaking step (w += eta·e_i).
  - unknown_cost_controller_step: binary search over the ℓ2 budget. Each
    phase runs the ℓ2 learner from scratch with a guess alpha'. A mistake
    count above mistake_budget means alpha' is too small; a point seen in the
    open band 0 < x·w/|w| < alpha' means alpha' is too large.
  - unknown_cost_l1_single_direction: the same controller for a weighted-ℓ1
    cost that is finite along e_1 only.

Every step takes a state and an observed point with its true label and
returns a StepOutcome holding the prediction, the new state and what the
update used. States are frozen dataclasses that serialize to JSON snapshots.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from agents import DecisionRule
from core_types import (
    Label,
    ParameterError,
    RationalityViolation,
    UndefinedMarginError,
    Vector,
    as_vector,
    in_open_band,
    label_from_int,
    norm,
    on_threshold,
    sign_predict,
    threshold_gap,
    vector_from_json,
    vector_to_json,
    zeros,
)

# =============================================================================
# MODULE PUBLIC API
# =============================================================================
__all__ = [
    "LEARNER_IDS",
    "LearnerFaults",
    "NO_FAULTS",
    "PhaseEvent",
    "Classifier",
    "L2LearnerState",
    "L1LearnerState",
    "UnknownCostState",
    "StepOutcome",
    "classic_step",
    "surrogate_l2",
    "strategic_l2_step",
    "correction_step",
    "tie_break",
    "eta_schedule",
    "surrogate_l1",
    "strategic_l1_step",
    "mistake_budget",
    "initial_unknown_cost_state",
    "unknown_cost_controller_step",
    "unknown_cost_l1_single_direction",
    "published_rule",
    "initial_state",
    "learner_step",
    "state_from_json",
]

# =============================================================================
# CONSTANTS SECTION
# =============================================================================

#: Algorithm identifiers accepted by initial_state and the CLI.
LEARNER_IDS: Tuple[str, ...] = (
    "classic",
    "strategic-l2",
    "strategic-l1",
    "unknown-l2",
    "unknown-l1-single",
)

#: Coordinate the single-direction ℓ1 controller lets agents move along.
SINGLE_DIRECTION_INDEX: int = 0


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class LearnerFaults:
    """Deliberate defects used to show that the verification suite bites."""

    flip_surrogate: bool = False
    skip_correction: bool = False
    zero_eta: bool = False

    @property
    def any(self) -> bool:
        return self.flip_surrogate or self.skip_correction or self.zero_eta


NO_FAULTS = LearnerFaults()


class PhaseEvent(str, Enum):
    NONE = "none"
    PHASE_UP = "phase_up"
    PHASE_DOWN = "phase_down"


@dataclass(frozen=True)
class Classifier:
    """
    Classic Perceptron state.

    zero_prediction is the label given to every point while w = 0: positive
    by default, negative for the variant that starts out rejecting everyone
    until its first update.
    """

    w: Vector
    zero_prediction: Label = Label.POSITIVE

    def to_json(self) -> dict:
        return {"kind": "classic", "w": vector_to_json(self.w), "zero_prediction": int(self.zero_prediction)}


@dataclass(frozen=True)
class L2LearnerState:
    """Strategic ℓ2 Perceptron: weights plus the published budget alpha."""

    w: Vector
    alpha_published: float
    zero_prediction: Label = Label.POSITIVE

    def to_json(self) -> dict:
        return {
            "kind": "strategic-l2",
            "w": vector_to_json(self.w),
            "alpha_published": self.alpha_published,
            "zero_prediction": int(self.zero_prediction),
        }


@dataclass(frozen=True)
class L1LearnerState:
    """
    Strategic weighted-ℓ1 Perceptron.

    dir_index is the coordinate agents move along under the current w; it is
    None while w = 0.
    """

    w: Vector
    alphas: Tuple[float, ...]
    dir_index: Optional[int] = None
    eta_last: float = 0.0

    def to_json(self) -> dict:
        return {
            "kind": "strategic-l1",
            "w": vector_to_json(self.w),
            "alphas": list(self.alphas),
            "dir_index": self.dir_index,
            "eta_last": self.eta_last,
        }


InnerState = Union[L2LearnerState, L1LearnerState]


@dataclass(frozen=True)
class UnknownCostState:
    """
    Binary-search controller over the manipulation budget.

    alpha_lo is the best known lower bound alpha'', alpha_guess the current
    estimate alpha'. The inner learner runs with alpha' and is restarted at
    every phase change.
    """

    alpha_lo: float
    alpha_guess: float
    inner: InnerState
    phase_mistakes: int
    phase_budget: int
    R_known: float
    gamma_known: float
    phase_index: int = 0

    @property
    def single_direction(self) -> bool:
        return isinstance(self.inner, L1LearnerState)

    def to_json(self) -> dict:
        return {
            "kind": "unknown-l1-single" if self.single_direction else "unknown-l2",
            "alpha_lo": self.alpha_lo,
            "alpha_guess": self.alpha_guess,
            "inner": self.inner.to_json(),
            "phase_mistakes": self.phase_mistakes,
            "phase_budget": self.phase_budget,
            "R_known": self.R_known,
            "gamma_known": self.gamma_known,
            "phase_index": self.phase_index,
        }


LearnerState = Union[Classifier, L2LearnerState, L1LearnerState, UnknownCostState]


@dataclass(frozen=True)
class StepOutcome:
    """
    Result of one predict/update round.

    w_updated is the weight vector right after the update and before any
    phase reset; surrogate is present iff an update happened.
    """

    prediction: Label
    state: LearnerState
    mistake: bool
    threshold: float
    w_updated: Vector
    surrogate: Optional[Vector] = None
    mus: Optional[Vector] = None
    eta: Optional[float] = None
    event: PhaseEvent = PhaseEvent.NONE
    rationality_violation: bool = False
    extras: dict = field(default_factory=dict)


# =============================================================================
# CLASSIC PERCEPTRON
# =============================================================================

def _predict(x: Vector, w: Vector, threshold: float, zero_prediction: Label = Label.POSITIVE) -> Label:
    if norm(w) == 0.0:
        return zero_prediction
    return sign_predict(threshold_gap(x, w, threshold))


def classic_step(state: Classifier, x: Vector, true_label: Label) -> StepOutcome:
    """Predict sgn(x·w); on a mistake add x (positives) or subtract it (negatives)."""
    prediction = _predict(x, state.w, 0.0, state.zero_prediction)
    if prediction == true_label:
        return StepOutcome(prediction=prediction, state=state, mistake=False, threshold=0.0, w_updated=state.w)
    w_new = as_vector(state.w + true_label.sign * x)
    return StepOutcome(
        prediction=prediction,
        state=replace(state, w=w_new),
        mistake=True,
        threshold=0.0,
        w_updated=w_new,
        surrogate=x,
    )


# =============================================================================
# STRATEGIC PERCEPTRON, ℓ2 COSTS
# =============================================================================

def surrogate_l2(
    x: Vector,
    w: Vector,
    alpha_published: float,
    true_label: Label,
    flip: bool = False,
    strict: bool = True,
) -> Vector:
    """
    Surrogate point for an ℓ2 update.

    Negatives on the manipulation hyperplane x·w/|w| = alpha are pulled back
    to x - alpha·w/|w|; every other point is its own surrogate.

    Raises:
        UndefinedMarginError: for w = 0.
        RationalityViolation: with strict set, for a point strictly inside
            0 < x·w/|w| < alpha, where no rational agent can be observed.
    """
    w_norm = norm(w)
    if w_norm == 0.0:
        raise UndefinedMarginError("undefined margin: |w| = 0")
    if true_label == Label.NEGATIVE and on_threshold(x, w, alpha_published):
        shift = alpha_published * (w / w_norm)
        return as_vector(x + shift if flip else x - shift)
    if strict and in_open_band(x, w, 0.0, alpha_published):
        raise RationalityViolation(
            f"observed point {x.tolist()} lies inside the forbidden band (0, {alpha_published})"
        )
    return x


def strategic_l2_step(
    state: L2LearnerState,
    x: Vector,
    true_label: Label,
    faults: LearnerFaults = NO_FAULTS,
    strict: bool = True,
) -> StepOutcome:
    """
    One round of the strategic ℓ2 Perceptron.

    With w = 0 every point gets state.zero_prediction and a mistake sets
    w = +x or -x.
    Otherwise the prediction is sgn(x·w/|w| - alpha) and a mistake moves w
    by plus or minus the surrogate point.
    """
    w, alpha = state.w, state.alpha_published
    prediction = _predict(x, w, alpha, state.zero_prediction)
    if prediction == true_label:
        return StepOutcome(prediction=prediction, state=state, mistake=False, threshold=alpha, w_updated=w)

    violation = False
    if norm(w) == 0.0:
        surrogate = x
    else:
        try:
            surrogate = surrogate_l2(x, w, alpha, true_label, flip=faults.flip_surrogate, strict=strict)
        except RationalityViolation as e:
            logging.warning(f"Rationality violation: {e}")
            surrogate, violation = x, True

    w_new = as_vector(w + true_label.sign * surrogate)
    return StepOutcome(
        prediction=prediction,
        state=replace(state, w=w_new),
        mistake=True,
        threshold=alpha,
        w_updated=w_new,
        surrogate=surrogate,
        rationality_violation=violation,
    )


# =============================================================================
# STRATEGIC PERCEPTRON, WEIGHTED ℓ1 COSTS
# =============================================================================

def correction_step(w: Vector, coordinates: Optional[Sequence[int]] = None) -> Tuple[Vector, Vector]:
    """
    Zero the negative coordinates of w.

    Returns the corrected vector and the multipliers mu_j = max(0, -w_j),
    so that w_new = w + sum_j mu_j·e_j. coordinates restricts the step to
    the listed axes.
    """
    mus = np.maximum(0.0, -np.asarray(w, dtype=np.float64))
    if coordinates is not None:
        keep = np.zeros_like(mus, dtype=bool)
        keep[list(coordinates)] = True
        mus = np.where(keep, mus, 0.0)
    return as_vector(w + mus), as_vector(mus)


def tie_break(w: Vector, alphas: Sequence[float], eta: float) -> Tuple[int, Vector]:
    """
    Pick the agents' manipulation axis i = argmax_j alpha_j·w_j and add
    eta·e_i, which makes i the unique maximizer whenever alpha_i > 0 and
    eta > 0. Ties in the argmax go to the lowest index.

    Raises:
        UndefinedMarginError: for w = 0; the caller falls back to the
            predict-all-positive mode.
    """
    if norm(w) == 0.0:
        raise UndefinedMarginError("tie-breaking needs a nonzero w")
    if not math.isfinite(eta) or eta < 0:
        raise ParameterError(f"eta must be finite and >= 0, got {eta}")
    gains = np.asarray(alphas, dtype=np.float64) * w
    i = int(np.argmax(gains))
    w_new = np.array(w, dtype=np.float64)
    w_new[i] += eta
    return i, as_vector(w_new)


def eta_schedule(w_norm: float, R: float, alpha_max: float) -> float:
    """eta = 1 / (4|w| + 8(R + alpha_max) + 2), from the pre-update |w|."""
    return 1.0 / (4.0 * w_norm + 8.0 * (R + alpha_max) + 2.0)


def _l1_threshold(w: Vector, alphas: Sequence[float], i: int) -> float:
    w_norm = norm(w)
    if w_norm == 0.0:
        return 0.0
    return alphas[i] * w[i] / w_norm


def surrogate_l1(
    x: Vector,
    w: Vector,
    alphas: Sequence[float],
    i: int,
    true_label: Label,
    flip: bool = False,
) -> Vector:
    """
    Surrogate point for a weighted-ℓ1 update: negatives on the hyperplane
    x·w/|w| = alpha_i·w_i/|w| become x - alpha_i·e_i, all else stays x.
    """
    if norm(w) == 0.0:
        raise UndefinedMarginError("undefined margin: |w| = 0")
    if true_label == Label.NEGATIVE and on_threshold(x, w, _l1_threshold(w, alphas, i)):
        shifted = np.array(x, dtype=np.float64)
        shifted[i] += alphas[i] if flip else -alphas[i]
        return as_vector(shifted)
    return x


def strategic_l1_step(
    state: L1LearnerState,
    x: Vector,
    true_label: Label,
    R_known: float,
    faults: LearnerFaults = NO_FAULTS,
) -> StepOutcome:
    """
    One round of the strategic weighted-ℓ1 Perceptron.

    The prediction threshold is alpha_i·w_i/|w| for the current direction i.
    A mistake adds or subtracts the surrogate, then runs the correction and
    tie-breaking steps. A corrected w of zero returns the learner to the
    predict-all-positive mode.
    """
    w = state.w
    w_norm = norm(w)
    i = state.dir_index
    if w_norm > 0.0 and i is None:
        i = int(np.argmax(np.asarray(state.alphas) * w))
    threshold = _l1_threshold(w, state.alphas, i) if w_norm > 0.0 else 0.0
    prediction = _predict(x, w, threshold)
    if prediction == true_label:
        return StepOutcome(prediction=prediction, state=state, mistake=False, threshold=threshold, w_updated=w)

    if w_norm == 0.0:
        surrogate = x
    else:
        surrogate = surrogate_l1(x, w, state.alphas, i, true_label, flip=faults.flip_surrogate)
    w_new = as_vector(w + true_label.sign * surrogate)

    mus = zeros(w.size)
    if not faults.skip_correction:
        w_new, mus = correction_step(w_new)

    if norm(w_new) == 0.0:
        logging.debug("Corrected w is zero; back to predicting everything positive.")
        new_state = L1LearnerState(w=w_new, alphas=state.alphas, dir_index=None, eta_last=0.0)
        return StepOutcome(
            prediction=prediction,
            state=new_state,
            mistake=True,
            threshold=threshold,
            w_updated=w_new,
            surrogate=surrogate,
            mus=mus,
            eta=0.0,
        )

    eta = 0.0 if faults.zero_eta else eta_schedule(w_norm, R_known, max(state.alphas))
    new_i, w_new = tie_break(w_new, state.alphas, eta)
    return StepOutcome(
        prediction=prediction,
        state=L1LearnerState(w=w_new, alphas=state.alphas, dir_index=new_i, eta_last=eta),
        mistake=True,
        threshold=threshold,
        w_updated=w_new,
        surrogate=surrogate,
        mus=mus,
        eta=eta,
    )


# =============================================================================
# UNKNOWN MANIPULATION COST
# =============================================================================

def mistake_budget(R: float, alpha_guess: float, gamma: float) -> int:
    """
    Mistakes a phase may make before its guess is declared too small:
    floor(4(R + alpha' + gamma/2)^2 / gamma^2), using |w*| = 1/gamma.
    """
    if not R > 0 or not gamma > 0:
        raise ParameterError(f"R and gamma must be > 0, got R={R}, gamma={gamma}")
    if alpha_guess < 0:
        raise ParameterError(f"alpha' must be >= 0, got {alpha_guess}")
    return int(math.floor(4.0 * (R + alpha_guess + gamma / 2.0) ** 2 / gamma ** 2))


def _fresh_inner(d: int, alpha_guess: float, single_direction: bool) -> InnerState:
    if single_direction:
        alphas = tuple(alpha_guess if j == SINGLE_DIRECTION_INDEX else 0.0 for j in range(d))
        return L1LearnerState(w=zeros(d), alphas=alphas, dir_index=SINGLE_DIRECTION_INDEX)
    return L2LearnerState(w=zeros(d), alpha_published=alpha_guess)


def initial_unknown_cost_state(
    d: int,
    R_known: float,
    gamma_known: float,
    single_direction: bool = False,
) -> UnknownCostState:
    """Controller state before the first example: alpha'' = alpha' = 0."""
    return UnknownCostState(
        alpha_lo=0.0,
        alpha_guess=0.0,
        inner=_fresh_inner(d, 0.0, single_direction),
        phase_mistakes=0,
        phase_budget=mistake_budget(R_known, 0.0, gamma_known),
        R_known=R_known,
        gamma_known=gamma_known,
        phase_index=0,
    )


def _next_phase(state: UnknownCostState, alpha_lo: float, alpha_guess: float) -> UnknownCostState:
    return replace(
        state,
        alpha_lo=alpha_lo,
        alpha_guess=alpha_guess,
        inner=_fresh_inner(state.inner.w.size, alpha_guess, state.single_direction),
        phase_mistakes=0,
        phase_budget=mistake_budget(state.R_known, alpha_guess, state.gamma_known),
        phase_index=state.phase_index + 1,
    )


def _single_direction_threshold(state: UnknownCostState) -> float:
    return _l1_threshold(state.inner.w, state.inner.alphas, SINGLE_DIRECTION_INDEX)


def _single_direction_inner_step(
    inner: L1LearnerState,
    x: Vector,
    true_label: Label,
    faults: LearnerFaults,
) -> StepOutcome:
    """
    The weighted-ℓ1 learner pinned to direction e_1.

    Agents can only move along e_1, so no tie-breaking is needed and only
    the first coordinate is corrected.
    """
    w = inner.w
    threshold = _l1_threshold(w, inner.alphas, SINGLE_DIRECTION_INDEX)
    prediction = _predict(x, w, threshold)
    if prediction == true_label:
        return StepOutcome(prediction=prediction, state=inner, mistake=False, threshold=threshold, w_updated=w)

    if norm(w) == 0.0:
        surrogate = x
    else:
        surrogate = surrogate_l1(
            x, w, inner.alphas, SINGLE_DIRECTION_INDEX, true_label, flip=faults.flip_surrogate
        )
    w_new = as_vector(w + true_label.sign * surrogate)
    mus = zeros(w.size)
    if not faults.skip_correction:
        w_new, mus = correction_step(w_new, coordinates=(SINGLE_DIRECTION_INDEX,))
    return StepOutcome(
        prediction=prediction,
        state=replace(inner, w=w_new),
        mistake=True,
        threshold=threshold,
        w_updated=w_new,
        surrogate=surrogate,
        mus=mus,
    )


def _controller_step(
    state: UnknownCostState,
    x: Vector,
    true_label: Label,
    threshold: float,
    inner_step,
) -> StepOutcome:
    w = state.inner.w
    prediction = _predict(x, w, threshold)

    # Band check precedes the update: a point inside (0, threshold) ends the phase.
    if norm(w) > 0.0 and in_open_band(x, w, 0.0, threshold):
        alpha_guess = (state.alpha_lo + state.alpha_guess) / 2.0
        logging.info(
            f"Phase {state.phase_index}: point in band (0, {threshold:.6g}); "
            f"alpha' {state.alpha_guess:.6g} -> {alpha_guess:.6g}"
        )
        return StepOutcome(
            prediction=prediction,
            state=_next_phase(state, state.alpha_lo, alpha_guess),
            mistake=prediction != true_label,
            threshold=threshold,
            w_updated=w,
            event=PhaseEvent.PHASE_DOWN,
        )

    inner_outcome = inner_step(state.inner, x, true_label)
    phase_mistakes = state.phase_mistakes + int(inner_outcome.mistake)
    new_state = replace(state, inner=inner_outcome.state, phase_mistakes=phase_mistakes)
    event = PhaseEvent.NONE
    if inner_outcome.mistake and phase_mistakes > state.phase_budget:
        alpha_guess = min(max(2.0 * state.alpha_guess, state.gamma_known / 2.0), state.R_known)
        logging.info(
            f"Phase {state.phase_index}: {phase_mistakes} mistakes > budget {state.phase_budget}; "
            f"alpha' {state.alpha_guess:.6g} -> {alpha_guess:.6g}"
        )
        new_state = _next_phase(state, state.alpha_guess, alpha_guess)
        event = PhaseEvent.PHASE_UP

    return replace(inner_outcome, state=new_state, event=event)


def unknown_cost_controller_step(
    state: UnknownCostState,
    x: Vector,
    true_label: Label,
    faults: LearnerFaults = NO_FAULTS,
) -> StepOutcome:
    """
    One round of the unknown-cost ℓ2 controller.

    The inner ℓ2 learner predicts with alpha'. Before it updates, a point in
    0 < x·w/|w| < alpha' triggers phase_down: alpha' <- (alpha'' + alpha')/2.
    After an inner mistake that takes the phase above its budget,
    phase_up sets alpha'' <- alpha' and alpha' <- min(max(2alpha', gamma/2), R).
    Both events restart the inner learner from w = 0.
    """
    if state.single_direction:
        raise ParameterError("state belongs to the single-direction ℓ1 controller")

    def inner_step(inner, x_, label_):
        return strategic_l2_step(inner, x_, label_, faults=faults, strict=False)

    return _controller_step(state, x, true_label, state.alpha_guess, inner_step)


def unknown_cost_l1_single_direction(
    state: UnknownCostState,
    x: Vector,
    true_label: Label,
    faults: LearnerFaults = NO_FAULTS,
) -> StepOutcome:
    """
    Unknown-cost controller for weighted-ℓ1 costs finite along e_1 only.

    The published threshold is alpha'_1·w_1/|w|; the band is the open
    interval between 0 and that threshold and is empty while w_1 = 0.
    """
    if not state.single_direction:
        raise ParameterError("state belongs to the ℓ2 controller")

    def inner_step(inner, x_, label_):
        return _single_direction_inner_step(inner, x_, label_, faults)

    return _controller_step(state, x, true_label, _single_direction_threshold(state), inner_step)


# =============================================================================
# DISPATCH
# =============================================================================

def published_rule(state: LearnerState) -> DecisionRule:
    """The decision rule agents see before the learner predicts."""
    if isinstance(state, Classifier):
        return DecisionRule(w=state.w, threshold=0.0, zero_positive=state.zero_prediction == Label.POSITIVE)
    if isinstance(state, L2LearnerState):
        return DecisionRule(
            w=state.w, threshold=state.alpha_published, zero_positive=state.zero_prediction == Label.POSITIVE
        )
    if isinstance(state, L1LearnerState):
        if norm(state.w) == 0.0:
            return DecisionRule(w=state.w, threshold=0.0)
        i = state.dir_index if state.dir_index is not None else int(np.argmax(np.asarray(state.alphas) * state.w))
        return DecisionRule(w=state.w, threshold=_l1_threshold(state.w, state.alphas, i))
    if isinstance(state, UnknownCostState):
        if state.single_direction:
            return DecisionRule(w=state.inner.w, threshold=_single_direction_threshold(state))
        return DecisionRule(w=state.inner.w, threshold=state.alpha_guess)
    raise ParameterError(f"unknown learner state {state!r}")


def initial_state(
    algorithm: str,
    d: int,
    alpha: Optional[float] = None,
    alphas: Optional[Sequence[float]] = None,
    R: Optional[float] = None,
    gamma: Optional[float] = None,
    zero_prediction: Label = Label.POSITIVE,
) -> LearnerState:
    """
    Fresh state for one of LEARNER_IDS.

    zero_prediction only applies to the classic and strategic-l2 learners;
    the others always start by predicting everything positive.
    """
    if algorithm == "classic":
        return Classifier(w=zeros(d), zero_prediction=zero_prediction)
    if algorithm == "strategic-l2":
        if alpha is None or alpha < 0:
            raise ParameterError("strategic-l2 needs a budget alpha >= 0")
        return L2LearnerState(w=zeros(d), alpha_published=float(alpha), zero_prediction=zero_prediction)
    if algorithm == "strategic-l1":
        if alphas is None or len(alphas) != d:
            raise ParameterError(f"strategic-l1 needs {d} budgets")
        if R is None:
            raise ParameterError("strategic-l1 needs R for its eta schedule")
        return L1LearnerState(w=zeros(d), alphas=tuple(float(a) for a in alphas))
    if algorithm in ("unknown-l2", "unknown-l1-single"):
        if R is None or gamma is None:
            raise ParameterError(f"{algorithm} needs both R and gamma")
        return initial_unknown_cost_state(d, R, gamma, single_direction=algorithm == "unknown-l1-single")
    raise ParameterError(f"unknown learner {algorithm!r}; expected one of {LEARNER_IDS}")


def learner_step(
    state: LearnerState,
    x: Vector,
    true_label: Label,
    R_known: Optional[float] = None,
    faults: LearnerFaults = NO_FAULTS,
) -> StepOutcome:
    """Route one round to the step function matching the state type."""
    if isinstance(state, Classifier):
        return classic_step(state, x, true_label)
    if isinstance(state, L2LearnerState):
        return strategic_l2_step(state, x, true_label, faults=faults)
    if isinstance(state, L1LearnerState):
        if R_known is None:
            raise ParameterError("strategic-l1 needs R_known")
        return strategic_l1_step(state, x, true_label, R_known, faults=faults)
    if isinstance(state, UnknownCostState):
        if state.single_direction:
            return unknown_cost_l1_single_direction(state, x, true_label, faults=faults)
        return unknown_cost_controller_step(state, x, true_label, faults=faults)
    raise ParameterError(f"unknown learner state {state!r}")


def _zero_prediction(payload: dict) -> Label:
    return label_from_int(payload.get("zero_prediction", 1))


def state_from_json(payload: dict) -> LearnerState:
    """Rebuild a learner state from its to_json() snapshot."""
    kind = payload.get("kind")
    if kind == "classic":
        return Classifier(w=vector_from_json(payload["w"]), zero_prediction=_zero_prediction(payload))
    if kind == "strategic-l2":
        return L2LearnerState(
            w=vector_from_json(payload["w"]),
            alpha_published=float(payload["alpha_published"]),
            zero_prediction=_zero_prediction(payload),
        )
    if kind == "strategic-l1":
        return L1LearnerState(
            w=vector_from_json(payload["w"]),
            alphas=tuple(float(a) for a in payload["alphas"]),
            dir_index=payload.get("dir_index"),
            eta_last=float(payload.get("eta_last", 0.0)),
        )
    if kind in ("unknown-l2", "unknown-l1-single"):
        return UnknownCostState(
            alpha_lo=float(payload["alpha_lo"]),
            alpha_guess=float(payload["alpha_guess"]),
            inner=state_from_json(payload["inner"]),
            phase_mistakes=int(payload["phase_mistakes"]),
            phase_budget=int(payload["phase_budget"]),
            R_known=float(payload["R_known"]),
            gamma_known=float(payload["gamma_known"]),
            phase_index=int(payload.get("phase_index", 0)),
        )
    raise ParameterError(f"unknown learner snapshot kind {kind!r}")
