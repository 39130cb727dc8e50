#!/usr/bin/env python3
"""
harness.py

Runs (learner, agent, stream) triples round by round and checks the
resulting transcripts.

Every round follows the same protocol: the agent sees the learner's current
published rule and reports its best response x_t, the learner predicts on
x_t, the true label is revealed and the learner updates. The harness owns
the true points z_t; learners only ever see x_t.

The checkers never raise on a broken invariant. They return Violation
records, so that planted-fault runs can assert the failure is detected:

  - check_forbidden_region: observed points strictly between the zero
    hyperplane and the published threshold.
  - check_agent_rationality: costs above 1 and moved points off the threshold.
  - check_mistake_bound: closed-form mistake bounds against observed counts.
  - audit_lemma_invariants: per-update geometry of the surrogate points.
  - check_phase_accounting / check_search_correctness: the unknown-cost
    binary search.
  - detect_cycle / replay_transcript: periodicity and exact reproducibility.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import islice
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from agents import Manipulation, respond
from core_types import (
    EPS_EQ,
    BoundUnverifiableError,
    CostModel,
    DimensionError,
    L2Cost,
    Label,
    ParameterError,
    Vector,
    WeightedL1Cost,
    as_vector,
    cost_model_from_json,
    in_open_band,
    label_from_int,
    norm,
    on_threshold,
)
from learners import (
    LEARNER_IDS,
    NO_FAULTS,
    SINGLE_DIRECTION_INDEX,
    Classifier,
    L1LearnerState,
    L2LearnerState,
    LearnerFaults,
    LearnerState,
    PhaseEvent,
    StepOutcome,
    UnknownCostState,
    initial_state,
    learner_step,
    published_rule,
)
from streams import StreamRecord

# =============================================================================
# MODULE PUBLIC API
# =============================================================================
__all__ = [
    "BOUND_IDS",
    "AGENT_KINDS",
    "LearnerConfig",
    "AgentConfig",
    "RoundRecord",
    "Transcript",
    "Violation",
    "BoundCheck",
    "PhaseSummary",
    "AuditReport",
    "run_experiment",
    "check_forbidden_region",
    "check_agent_rationality",
    "check_mistake_bound",
    "applicable_bounds",
    "theorem4_bound",
    "max_phase_events",
    "detect_cycle",
    "audit_lemma_invariants",
    "phase_summaries",
    "check_phase_accounting",
    "check_search_correctness",
    "in_converged_band",
    "search_converged",
    "stop_after_convergence",
    "replay_transcript",
    "summarize",
]

# =============================================================================
# CONSTANTS SECTION
# =============================================================================

#: Closed-form mistake bounds check_mistake_bound knows how to evaluate.
BOUND_IDS: Tuple[str, ...] = ("theorem1", "theorem3", "proposition1", "proposition2", "theorem4")

#: Agent behaviours: best-responding, or reporting the recorded point verbatim.
AGENT_KINDS: Tuple[str, ...] = ("rational", "replay")

#: Longest period detect_cycle looks for when the caller does not say.
DEFAULT_MAX_PERIOD: int = 8

#: A tail counts as periodic once it repeats this many times.
CYCLE_REPETITIONS: int = 3

#: Relative slack for the audit inequalities.
AUDIT_TOLERANCE: float = 1e-9


# =============================================================================
# CONFIGURATION TYPES
# =============================================================================

@dataclass(frozen=True)
class LearnerConfig:
    """Which learner to run and the parameters it is told."""

    algorithm: str
    alpha: Optional[float] = None
    alphas: Optional[Tuple[float, ...]] = None
    R: Optional[float] = None
    gamma: Optional[float] = None
    zero_prediction: Label = Label.POSITIVE
    faults: LearnerFaults = NO_FAULTS

    def __post_init__(self):
        if self.algorithm not in LEARNER_IDS:
            raise ParameterError(f"unknown learner {self.algorithm!r}; expected one of {LEARNER_IDS}")
        if self.alphas is not None:
            object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    @property
    def is_unknown_cost(self) -> bool:
        return self.algorithm.startswith("unknown-")

    def fresh_state(self, d: int) -> LearnerState:
        return initial_state(
            self.algorithm,
            d,
            alpha=self.alpha,
            alphas=self.alphas,
            R=self.R,
            gamma=self.gamma,
            zero_prediction=self.zero_prediction,
        )

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "alpha": self.alpha,
            "alphas": list(self.alphas) if self.alphas is not None else None,
            "R": self.R,
            "gamma": self.gamma,
            "zero_prediction": int(self.zero_prediction),
            "faults": {
                "flip_surrogate": self.faults.flip_surrogate,
                "skip_correction": self.faults.skip_correction,
                "zero_eta": self.faults.zero_eta,
            },
        }

    @classmethod
    def from_json(cls, payload: dict) -> "LearnerConfig":
        faults = payload.get("faults") or {}
        return cls(
            algorithm=payload["algorithm"],
            alpha=payload.get("alpha"),
            alphas=tuple(payload["alphas"]) if payload.get("alphas") is not None else None,
            R=payload.get("R"),
            gamma=payload.get("gamma"),
            zero_prediction=label_from_int(payload.get("zero_prediction", 1)),
            faults=LearnerFaults(**faults),
        )


@dataclass(frozen=True)
class AgentConfig:
    """
    How individuals respond to the published rule.

    Rational agents best-respond under cost_model. Replay agents report the
    stream's points unchanged; cost_model, if given, is only the budget the
    audits assume.
    """

    cost_model: Optional[CostModel] = None
    kind: str = "rational"

    def __post_init__(self):
        if self.kind not in AGENT_KINDS:
            raise ParameterError(f"unknown agent kind {self.kind!r}; expected one of {AGENT_KINDS}")
        if self.kind == "rational" and self.cost_model is None:
            raise ParameterError("rational agents need a cost model")

    def act(self, z: Vector, rule) -> Manipulation:
        if self.kind == "replay":
            return Manipulation.stay(z)
        return respond(z, rule, self.cost_model)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "cost_model": self.cost_model.to_json() if self.cost_model is not None else None,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "AgentConfig":
        model = payload.get("cost_model")
        return cls(
            cost_model=cost_model_from_json(model) if model is not None else None,
            kind=payload.get("kind", "rational"),
        )


# =============================================================================
# TRANSCRIPT TYPES
# =============================================================================

@dataclass(frozen=True)
class RoundRecord:
    """
    Everything that happened in one round.

    w_before is the rule agents saw; w_updated is the weight vector right
    after the update and before any phase reset; w_after is the state the
    next round starts from. x_tilde is present iff an update happened.
    """

    t: int
    z: Vector
    x: Vector
    x_tilde: Optional[Vector]
    prediction: Label
    truth: Label
    mistake: bool
    w_before: Vector
    w_updated: Vector
    w_after: Vector
    alpha_published: float
    threshold: float
    alpha_lo: float
    phase: int
    event: str
    agent_cost: float
    moved: bool
    mus: Optional[Vector] = None
    eta: Optional[float] = None
    dir_index: Optional[int] = None
    violation: bool = False


@dataclass
class Transcript:
    rounds: List[RoundRecord]
    learner_config: LearnerConfig
    agent_config: AgentConfig
    stream_meta: dict = field(default_factory=dict)

    @property
    def total_mistakes(self) -> int:
        return sum(1 for r in self.rounds if r.mistake)

    @property
    def learner_meta(self) -> dict:
        return self.learner_config.to_json()

    @property
    def R(self) -> Optional[float]:
        value = self.stream_meta.get("R")
        return float(value) if value is not None else None

    @property
    def separable(self) -> bool:
        return bool(self.stream_meta.get("separable", True))

    def w_star(self) -> Vector:
        """
        The certified separator of the stream.

        Raises:
            BoundUnverifiableError: when the stream has none, or only a
                reference vector that does not separate it.
        """
        coords = self.stream_meta.get("w_star")
        if coords is None:
            raise BoundUnverifiableError("bound unverifiable: the stream carries no separator w*")
        if not self.separable:
            raise BoundUnverifiableError("bound unverifiable: the stream's reference vector does not separate it")
        return as_vector(coords)

    def hidden_alpha(self) -> Optional[float]:
        """The agents' true ℓ2 budget (or e_1 budget for single-direction runs)."""
        model = self.agent_config.cost_model
        if self.agent_config.kind != "rational" or model is None:
            return None
        if isinstance(model, L2Cost):
            return model.alpha
        if isinstance(model, WeightedL1Cost) and self.learner_config.algorithm == "unknown-l1-single":
            return model.alphas[SINGLE_DIRECTION_INDEX]
        return None


@dataclass(frozen=True)
class Violation:
    t: int
    check: str
    detail: str


@dataclass(frozen=True)
class BoundCheck:
    formula_id: str
    holds: bool
    bound: float
    observed: int
    detail: str = ""


@dataclass(frozen=True)
class PhaseSummary:
    phase: int
    alpha_lo: float
    alpha_guess: float
    first_round: int
    rounds: int
    mistakes: int
    updates: int
    end_event: str


@dataclass
class AuditReport:
    mode: str
    checked_updates: int = 0
    violations: List[Violation] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    phase_modes: Dict[int, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


# =============================================================================
# RUNNING EXPERIMENTS
# =============================================================================

def _state_w(state: LearnerState) -> Vector:
    if isinstance(state, UnknownCostState):
        return state.inner.w
    return state.w


def _published_alpha(state: LearnerState) -> float:
    if isinstance(state, Classifier):
        return 0.0
    if isinstance(state, L2LearnerState):
        return state.alpha_published
    if isinstance(state, L1LearnerState):
        if state.dir_index is None or norm(state.w) == 0.0:
            return 0.0
        return state.alphas[state.dir_index]
    return state.alpha_guess


def _check_dimensions(learner_config: LearnerConfig, agent_config: AgentConfig, d: int) -> None:
    if learner_config.alphas is not None and len(learner_config.alphas) != d:
        raise DimensionError(f"learner has {len(learner_config.alphas)} budgets for dimension {d}")
    model = agent_config.cost_model
    if isinstance(model, WeightedL1Cost) and model.d != d:
        raise DimensionError(f"agent cost model has {model.d} budgets for dimension {d}")


def _round_record(
    t: int,
    record: StreamRecord,
    response: Manipulation,
    state: LearnerState,
    outcome: StepOutcome,
) -> RoundRecord:
    new_state = outcome.state
    dir_index = None
    if isinstance(new_state, L1LearnerState):
        dir_index = new_state.dir_index
    elif isinstance(new_state, UnknownCostState) and new_state.single_direction:
        dir_index = SINGLE_DIRECTION_INDEX
    return RoundRecord(
        t=t,
        z=record.z,
        x=response.x,
        x_tilde=outcome.surrogate,
        prediction=outcome.prediction,
        truth=record.label,
        mistake=outcome.mistake,
        w_before=_state_w(state),
        w_updated=outcome.w_updated,
        w_after=_state_w(new_state),
        alpha_published=_published_alpha(state),
        threshold=outcome.threshold,
        alpha_lo=state.alpha_lo if isinstance(state, UnknownCostState) else 0.0,
        phase=state.phase_index if isinstance(state, UnknownCostState) else 0,
        event=outcome.event.value,
        agent_cost=float(response.cost),
        moved=response.moved,
        mus=outcome.mus,
        eta=outcome.eta,
        dir_index=dir_index,
        violation=outcome.rationality_violation,
    )


def run_experiment(
    learner_config: LearnerConfig,
    agent_config: AgentConfig,
    stream: Iterable[StreamRecord],
    max_rounds: int,
    stream_meta: Optional[dict] = None,
    until: Optional[Callable[[RoundRecord], bool]] = None,
) -> Transcript:
    """
    Play up to max_rounds rounds of the online protocol.

    The run is deterministic in its inputs; a stream shorter than
    max_rounds simply ends the run early, and so does until, which sees
    every round record and stops the run after the first one it accepts.

    Raises:
        ParameterError: for max_rounds < 1 or an incomplete learner config.
        DimensionError: when stream, learner and agent disagree on d.
    """
    if max_rounds < 1:
        raise ParameterError(f"max_rounds must be >= 1, got {max_rounds}")
    transcript = Transcript(
        rounds=[],
        learner_config=learner_config,
        agent_config=agent_config,
        stream_meta=dict(stream_meta or {}),
    )

    state: Optional[LearnerState] = None
    d: Optional[int] = None
    for t, record in enumerate(islice(stream, max_rounds)):
        if state is None:
            d = record.z.size
            _check_dimensions(learner_config, agent_config, d)
            state = learner_config.fresh_state(d)
        elif record.z.size != d:
            raise DimensionError(f"round {t}: dimension {record.z.size} differs from {d}")

        rule = published_rule(state)
        response = agent_config.act(record.z, rule)
        outcome = learner_step(state, response.x, record.label, R_known=learner_config.R, faults=learner_config.faults)
        transcript.rounds.append(_round_record(t, record, response, state, outcome))
        if outcome.mistake:
            logging.debug(f"Round {t}: mistake on {record.label.name}, w -> {outcome.w_updated.tolist()}")
        state = outcome.state
        if until is not None and until(transcript.rounds[-1]):
            logging.debug(f"Round {t}: stop condition met")
            break

    logging.info(
        f"Ran {learner_config.algorithm} for {len(transcript.rounds)} rounds: "
        f"{transcript.total_mistakes} mistakes."
    )
    return transcript


# =============================================================================
# PER-ROUND CHECKS
# =============================================================================

def check_forbidden_region(transcript: Transcript) -> List[Violation]:
    """
    Rounds whose observed point lies strictly inside 0 < x·w/|w| < threshold
    under the rule published that round. Rational agents never land there;
    in unknown-cost runs such points are exactly the phase_down rounds.
    """
    violations = []
    for r in transcript.rounds:
        if r.threshold <= 0.0 or norm(r.w_before) == 0.0:
            continue
        if in_open_band(r.x, r.w_before, 0.0, r.threshold):
            margin = float(np.dot(r.x, r.w_before)) / norm(r.w_before)
            violations.append(
                Violation(r.t, "forbidden-region", f"x·w/|w| = {margin!r} inside (0, {r.threshold!r})")
            )
    return violations


def check_agent_rationality(transcript: Transcript) -> List[Violation]:
    """Agents pay at most 1, and every agent that moved landed on the threshold."""
    violations = []
    for r in transcript.rounds:
        if r.agent_cost > 1.0 + EPS_EQ:
            violations.append(Violation(r.t, "agent-cost", f"cost {r.agent_cost!r} exceeds the gain of 1"))
        if r.moved and not on_threshold(r.x, r.w_before, r.threshold):
            violations.append(
                Violation(r.t, "agent-overshoot", f"moved point {r.x.tolist()} is off the threshold {r.threshold!r}")
            )
    return violations


# =============================================================================
# MISTAKE BOUNDS
# =============================================================================

def theorem4_bound(R: float, gamma: float) -> float:
    """Total-mistake cap of the unknown-cost search: 8(2R + γ/2)²/γ² · (⌈log₂(2R/γ)⌉ + 2)."""
    return 8.0 * (2.0 * R + gamma / 2.0) ** 2 / gamma ** 2 * max_phase_events(R, gamma)


def max_phase_events(R: float, gamma: float) -> int:
    """⌈log₂(2R/γ)⌉ + 2."""
    if not R > 0 or not gamma > 0:
        raise ParameterError(f"R and gamma must be > 0, got R={R}, gamma={gamma}")
    return int(math.ceil(math.log2(2.0 * R / gamma))) + 2


def applicable_bounds(algorithm: str) -> Tuple[str, ...]:
    if algorithm == "strategic-l2":
        return ("theorem1",)
    if algorithm == "strategic-l1":
        return ("theorem3",)
    if algorithm in ("unknown-l2", "unknown-l1-single"):
        return ("proposition1", "proposition2", "theorem4")
    return ()


def _require_R(transcript: Transcript) -> float:
    if transcript.R is None:
        raise BoundUnverifiableError("bound unverifiable: the stream metadata carries no R")
    return transcript.R


def _phase_bound(transcript: Transcript, formula_id: str, R: float, w_star_sq: float) -> BoundCheck:
    alpha_true = transcript.hidden_alpha()
    if alpha_true is None:
        raise BoundUnverifiableError(f"bound unverifiable: {formula_id} needs the agents' true budget")
    gamma = 1.0 / math.sqrt(w_star_sq)
    worst: Optional[Tuple[float, PhaseSummary]] = None
    checked = 0
    for summary in phase_summaries(transcript):
        gap = alpha_true - summary.alpha_guess
        if formula_id == "proposition1":
            if not 0.0 <= gap <= gamma / 2.0:
                continue
            bound = 4.0 * (R + summary.alpha_guess + gamma / 2.0) ** 2 * w_star_sq
        else:
            if not summary.alpha_guess > alpha_true:
                continue
            bound = (R + summary.alpha_guess) ** 2 * w_star_sq + 1.0
        checked += 1
        if worst is None or bound - summary.mistakes < worst[0] - worst[1].mistakes:
            worst = (bound, summary)

    if worst is None:
        return BoundCheck(formula_id, True, math.inf, 0, detail="no phase meets the precondition")
    bound, summary = worst
    return BoundCheck(
        formula_id,
        summary.mistakes <= bound,
        bound,
        summary.mistakes,
        detail=f"tightest of {checked} phases: phase {summary.phase} (alpha'={summary.alpha_guess!r})",
    )


def check_mistake_bound(transcript: Transcript, formula_id: str) -> BoundCheck:
    """
    Evaluate a closed-form mistake bound and compare it with the transcript.

    theorem1 and theorem3 cover whole known-cost runs; proposition1 and
    proposition2 are checked per phase of an unknown-cost run, reporting
    the phase with the least slack; theorem4 caps the whole search.

    Raises:
        BoundUnverifiableError: without a certified w* (or R) in the stream
            metadata.
        ParameterError: for an unknown formula id or a learner config
            missing the budgets the formula needs.
    """
    if formula_id not in BOUND_IDS:
        raise ParameterError(f"unknown bound {formula_id!r}; expected one of {BOUND_IDS}")
    w_star = transcript.w_star()
    w_star_sq = float(np.dot(w_star, w_star))
    R = _require_R(transcript)
    config = transcript.learner_config
    observed = transcript.total_mistakes

    if formula_id == "theorem1":
        if config.alpha is None:
            raise ParameterError("theorem1 needs the learner's budget alpha")
        bound = (R + config.alpha) ** 2 * w_star_sq
    elif formula_id == "theorem3":
        if config.alphas is None:
            raise ParameterError("theorem3 needs the learner's budgets alphas")
        d = w_star.size
        bound = (1.0 + (d + 1) * (R + max(config.alphas)) ** 2) * w_star_sq
    elif formula_id == "theorem4":
        bound = theorem4_bound(R, 1.0 / math.sqrt(w_star_sq))
    else:
        return _phase_bound(transcript, formula_id, R, w_star_sq)

    return BoundCheck(formula_id, observed <= bound, bound, observed)


# =============================================================================
# CYCLES
# =============================================================================

def detect_cycle(transcript: Transcript, max_period: int = DEFAULT_MAX_PERIOD) -> Optional[int]:
    """
    Smallest p <= max_period such that the last CYCLE_REPETITIONS·p entries
    of the w_after sequence are p-periodic; None if there is none.
    """
    if max_period < 1:
        raise ParameterError(f"max_period must be >= 1, got {max_period}")
    ws = [r.w_after for r in transcript.rounds]
    for p in range(1, max_period + 1):
        span = CYCLE_REPETITIONS * p
        if len(ws) < span:
            break
        tail = np.stack(ws[-span:])
        if np.allclose(tail[:-p], tail[p:], rtol=EPS_EQ, atol=EPS_EQ):
            return p
    return None


# =============================================================================
# PHASES OF THE UNKNOWN-COST SEARCH
# =============================================================================

def phase_summaries(transcript: Transcript) -> List[PhaseSummary]:
    """Group consecutive rounds by phase; known-cost runs form a single phase 0."""
    summaries: List[PhaseSummary] = []
    rounds = transcript.rounds
    start = 0
    while start < len(rounds):
        end = start
        while end + 1 < len(rounds) and rounds[end + 1].phase == rounds[start].phase:
            end += 1
        chunk = rounds[start:end + 1]
        first = chunk[0]
        summaries.append(
            PhaseSummary(
                phase=first.phase,
                alpha_lo=first.alpha_lo,
                alpha_guess=first.alpha_published,
                first_round=first.t,
                rounds=len(chunk),
                mistakes=sum(1 for r in chunk if r.mistake),
                updates=sum(1 for r in chunk if r.x_tilde is not None),
                end_event=chunk[-1].event,
            )
        )
        start = end + 1
    return summaries


def check_phase_accounting(transcript: Transcript) -> List[Violation]:
    """
    Per-phase mistakes must add up to the total, and the number of phase
    events must stay within ⌈log₂(2R/γ)⌉ + 2 for unknown-cost learners.
    """
    violations = []
    summaries = phase_summaries(transcript)
    per_phase = sum(s.mistakes for s in summaries)
    if per_phase != transcript.total_mistakes:
        violations.append(
            Violation(-1, "phase-accounting", f"phases sum to {per_phase}, total is {transcript.total_mistakes}")
        )

    config = transcript.learner_config
    if config.is_unknown_cost and config.R is not None and config.gamma is not None:
        events = [r for r in transcript.rounds if r.event != PhaseEvent.NONE.value]
        limit = max_phase_events(config.R, config.gamma)
        if len(events) > limit:
            violations.append(
                Violation(events[-1].t, "phase-count", f"{len(events)} phase events exceed {limit}")
            )
    return violations


def check_search_correctness(transcript: Transcript, alpha_true: Optional[float] = None) -> List[Violation]:
    """
    Post-hoc check of every phase event against the agents' true budget:
    phase_down requires alpha' > alpha, phase_up requires alpha' < alpha - γ/2.
    """
    alpha = alpha_true if alpha_true is not None else transcript.hidden_alpha()
    if alpha is None:
        raise ParameterError("search correctness needs the agents' true budget")
    gamma = transcript.learner_config.gamma
    if gamma is None:
        raise ParameterError("search correctness needs the learner's gamma")

    violations = []
    for s in phase_summaries(transcript):
        last_round = s.first_round + s.rounds - 1
        if s.end_event == PhaseEvent.PHASE_DOWN.value and not s.alpha_guess > alpha:
            violations.append(
                Violation(last_round, "search-down", f"phase_down at alpha'={s.alpha_guess!r} <= alpha={alpha!r}")
            )
        if s.end_event == PhaseEvent.PHASE_UP.value and not s.alpha_guess < alpha - gamma / 2.0:
            violations.append(
                Violation(
                    last_round,
                    "search-up",
                    f"phase_up at alpha'={s.alpha_guess!r} >= alpha - gamma/2 = {alpha - gamma / 2.0!r}",
                )
            )
    return violations


def in_converged_band(alpha_guess: float, alpha_true: float, gamma: float) -> bool:
    """True when alpha_true - gamma/2 <= alpha_guess <= alpha_true, up to round-off."""
    slack = _tolerance(alpha_true, gamma)
    return alpha_true - gamma / 2.0 - slack <= alpha_guess <= alpha_true + slack


def search_converged(transcript: Transcript, alpha_true: Optional[float] = None) -> bool:
    """
    Whether an unknown-cost run ended in its final phase: the last guess sits
    within γ/2 below the true budget and no phase event closed it.
    """
    alpha = alpha_true if alpha_true is not None else transcript.hidden_alpha()
    gamma = transcript.learner_config.gamma
    if alpha is None or gamma is None:
        raise ParameterError("convergence needs the agents' true budget and the learner's gamma")
    summaries = phase_summaries(transcript)
    if not summaries:
        return False
    last = summaries[-1]
    return last.end_event == PhaseEvent.NONE.value and in_converged_band(last.alpha_guess, alpha, gamma)


def stop_after_convergence(
    alpha_true: float,
    gamma: float,
    tail_rounds: int,
    mistake_cap: Optional[float] = None,
) -> Callable[[RoundRecord], bool]:
    """
    Stop condition for run_experiment's until: fires once tail_rounds
    consecutive event-free rounds have published a guess in the converged
    band, or as soon as the mistakes exceed mistake_cap.
    """
    if tail_rounds < 1:
        raise ParameterError(f"tail_rounds must be >= 1, got {tail_rounds}")
    mistakes = 0
    settled = 0

    def done(record: RoundRecord) -> bool:
        nonlocal mistakes, settled
        mistakes += int(record.mistake)
        if record.event == PhaseEvent.NONE.value and in_converged_band(record.alpha_published, alpha_true, gamma):
            settled += 1
        else:
            settled = 0
        return settled >= tail_rounds or (mistake_cap is not None and mistakes > mistake_cap)

    return done


# =============================================================================
# LEMMA AUDIT
# =============================================================================

def _tolerance(*scales: float) -> float:
    return AUDIT_TOLERANCE * max([1.0] + [abs(s) for s in scales])


def _base_mode(transcript: Transcript) -> str:
    algorithm = transcript.learner_config.algorithm
    if algorithm == "classic":
        return "classic"
    if algorithm == "strategic-l1":
        return "known-l1"
    if algorithm == "strategic-l2":
        return "known-l2"
    return "unknown"


def _round_mode(base: str, alpha_guess: float, alpha_true: Optional[float], gamma: Optional[float]) -> str:
    """Classify one ℓ2-style round by how the published budget compares with the true one."""
    if alpha_true is None:
        return "unclassified"
    if base == "known-l2" and math.isclose(alpha_guess, alpha_true, rel_tol=EPS_EQ, abs_tol=EPS_EQ):
        return "known-l2"
    if gamma is None:
        return "unclassified"
    gap = alpha_true - alpha_guess
    if 0.0 <= gap <= gamma / 2.0:
        return "underestimate"
    if gap < 0.0:
        return "overestimate"
    return "far-underestimate"


def _growth_cap(
    mode: str,
    R: float,
    alpha_guess: float,
    gamma: Optional[float],
    d: int,
    alpha_max: float,
) -> Optional[float]:
    if mode == "known-l2":
        return (R + alpha_guess) ** 2
    if mode == "known-l1":
        return 1.0 + (d + 1) * (R + alpha_max) ** 2
    if mode == "underestimate":
        return (R + alpha_guess + gamma / 2.0) ** 2
    if mode == "overestimate":
        return (R + alpha_guess) ** 2
    return None


def _audit_l1_state(r: RoundRecord, alphas: Tuple[float, ...], R: Optional[float], report: AuditReport) -> None:
    """Correction and tie-breaking invariants of the weighted-ℓ1 learner."""
    if np.any(r.w_after < -EPS_EQ):
        report.violations.append(
            Violation(r.t, "nonnegativity", f"w has negative coordinates after the update: {r.w_after.tolist()}")
        )
    gains = np.asarray(alphas) * r.w_after
    top = float(np.max(gains))
    if top > 0.0:
        ties = int(np.count_nonzero(gains >= top - EPS_EQ * max(1.0, top)))
        if ties > 1:
            report.violations.append(
                Violation(r.t, "unique-argmax", f"{ties} coordinates share the largest alpha_j·w_j = {top!r}")
            )
    if r.mus is not None and R is not None:
        for j, (mu, a) in enumerate(zip(r.mus, alphas)):
            if mu > R + a + _tolerance(R + a):
                report.violations.append(Violation(r.t, "correction-size", f"mu_{j} = {mu!r} > R + alpha_{j}"))


def audit_lemma_invariants(transcript: Transcript, w_star: Optional[Vector] = None) -> AuditReport:
    """
    Audit the geometry of every update against the separator w*.

    Per update round, depending on the round's mode:
      - sign·(x̃·w) <= 0 for the pre-update w (every strategic mode);
      - sign·(x̃·w*) >= 1 and Δ(w·w*) >= 1 in known-cost modes, >= 1/2 for
        an underestimate alpha' with alpha - alpha' <= γ/2;
      - Δ|w|² below the cap of the matching mistake-bound argument;
      - nonnegative w, a unique manipulation axis and mu_j <= R + alpha_j
        for the weighted-ℓ1 learner.

    Rounds of an overestimate or far-underestimate phase only get the
    checks whose preconditions they meet; the report notes what was skipped.
    """
    base = _base_mode(transcript)
    report = AuditReport(mode=base)
    if base == "classic":
        report.notes.append("classic Perceptron: no strategic invariant applies")
        return report

    if w_star is None:
        try:
            w_star = transcript.w_star()
        except BoundUnverifiableError:
            coords = transcript.stream_meta.get("w_star")
            w_star = as_vector(coords) if coords is not None else None
            report.notes.append("no certified separator: separability and progress checks skipped")
            separable = False
        else:
            separable = True
    else:
        w_star = as_vector(w_star)
        separable = True

    config = transcript.learner_config
    R = transcript.R
    alpha_true = transcript.hidden_alpha()
    gamma = 1.0 / norm(w_star) if w_star is not None and separable else config.gamma
    alphas = config.alphas if base == "known-l1" else None
    skipped = set()

    for r in transcript.rounds:
        if base == "known-l1":
            mode = "known-l1"
        else:
            mode = _round_mode(base, r.alpha_published, alpha_true, gamma)
        report.phase_modes.setdefault(r.phase, mode)
        if r.x_tilde is None:
            continue
        report.checked_updates += 1
        s = r.truth.sign
        x_tilde = r.x_tilde

        if norm(r.w_before) > 0.0:
            along_w = s * float(np.dot(x_tilde, r.w_before))
            if along_w > _tolerance(norm(x_tilde) * norm(r.w_before)):
                report.violations.append(
                    Violation(r.t, "surrogate-direction", f"sign·(x̃·w) = {along_w!r} > 0 for x̃ = {x_tilde.tolist()}")
                )

        if mode in ("known-l2", "known-l1", "underestimate"):
            required = 0.5 if mode == "underestimate" else 1.0
            if separable and w_star is not None:
                along_star = s * float(np.dot(x_tilde, w_star))
                if along_star < required - _tolerance(along_star):
                    report.violations.append(
                        Violation(r.t, "separability", f"sign·(x̃·w*) = {along_star!r} < {required}")
                    )
                progress = float(np.dot(r.w_updated - r.w_before, w_star))
                if progress < required - _tolerance(progress):
                    report.violations.append(
                        Violation(r.t, "progress", f"Δ(w·w*) = {progress!r} < {required}")
                    )
        else:
            skipped.add(mode)

        if R is not None:
            alpha_max = max(alphas) if alphas else 0.0
            cap = _growth_cap(mode, R, r.alpha_published, gamma, r.x.size, alpha_max)
            if cap is not None:
                growth = float(np.dot(r.w_updated, r.w_updated) - np.dot(r.w_before, r.w_before))
                if growth > cap + _tolerance(cap, float(np.dot(r.w_updated, r.w_updated))):
                    report.violations.append(Violation(r.t, "growth", f"Δ|w|² = {growth!r} > {cap!r}"))

        if base == "known-l1":
            _audit_l1_state(r, alphas, R, report)
        elif config.algorithm == "unknown-l1-single" and r.w_updated[SINGLE_DIRECTION_INDEX] < -EPS_EQ:
            report.violations.append(
                Violation(r.t, "nonnegativity", f"w_1 = {r.w_updated[SINGLE_DIRECTION_INDEX]!r} after correction")
            )

    for mode in sorted(skipped):
        report.notes.append(f"{mode} rounds: separability and progress checks not applied")
    if report.violations:
        logging.warning(f"Lemma audit found {len(report.violations)} violations ({report.mode}).")
    return report


# =============================================================================
# REPLAY AND SUMMARY
# =============================================================================

def _optional_equal(a: Optional[Vector], b: Optional[Vector]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return bool(np.array_equal(a, b))


def replay_transcript(transcript: Transcript) -> List[int]:
    """
    Re-run the transcript's stream with its configs; return the rounds whose
    observed point, prediction, surrogate, weights or event differ.
    """
    if not transcript.rounds:
        return []
    records = [StreamRecord(z=r.z, label=r.truth) for r in transcript.rounds]
    rerun = run_experiment(
        transcript.learner_config,
        transcript.agent_config,
        iter(records),
        max_rounds=len(records),
        stream_meta=transcript.stream_meta,
    )
    mismatches = []
    for original, fresh in zip(transcript.rounds, rerun.rounds):
        same = (
            np.array_equal(original.x, fresh.x)
            and original.prediction == fresh.prediction
            and original.event == fresh.event
            and np.array_equal(original.w_after, fresh.w_after)
            and _optional_equal(original.x_tilde, fresh.x_tilde)
        )
        if not same:
            mismatches.append(original.t)
    if mismatches:
        logging.warning(f"Replay diverged on {len(mismatches)} rounds, first at t={mismatches[0]}.")
    return mismatches


def summarize(transcript: Transcript, max_period: int = DEFAULT_MAX_PERIOD) -> dict:
    """Headline numbers of a run, as written to the summary JSON."""
    bounds = {}
    for formula_id in applicable_bounds(transcript.learner_config.algorithm):
        try:
            check = check_mistake_bound(transcript, formula_id)
        except (BoundUnverifiableError, ParameterError) as e:
            bounds[formula_id] = {"status": "unverifiable", "reason": str(e)}
            continue
        bounds[formula_id] = {
            "status": "holds" if check.holds else "violated",
            "bound": check.bound if math.isfinite(check.bound) else None,
            "observed": check.observed,
        }

    events = [r.event for r in transcript.rounds]
    return {
        "rounds": len(transcript.rounds),
        "total_mistakes": transcript.total_mistakes,
        "phases": len(phase_summaries(transcript)),
        "phase_up": events.count(PhaseEvent.PHASE_UP.value),
        "phase_down": events.count(PhaseEvent.PHASE_DOWN.value),
        "cycle_period": detect_cycle(transcript, max_period) if transcript.rounds else None,
        "forbidden_region_violations": len(check_forbidden_region(transcript)),
        "rationality_violations": len(check_agent_rationality(transcript)),
        "lemma_violations": len(audit_lemma_invariants(transcript).violations),
        "bounds": bounds,
        "learner": transcript.learner_meta,
        "agent": transcript.agent_config.to_json(),
        "stream": transcript.stream_meta,
    }
