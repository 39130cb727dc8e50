#!/usr/bin/env python3
"""
verify.py

The acceptance suite, as named checks grouped into suites:

  - fixtures: the hand-built streams. The classic Perceptron cycles on
    Example 1, the strategic ℓ2 Perceptron repairs it, Example 2 follows
    its exact trajectory, and the tie fixture exercises ℓ1 tie-breaking.
  - lemmas: per-update audits on seeded separable ℓ2 and weighted-ℓ1 runs.
  - bounds: mistake bounds on the same runs plus the unknown-cost search.
  - oracle: closed-form best responses against the brute-force oracle.
  - unknown: the unknown-cost search on its own.
  - all: everything, plus a coverage check that every public operation of
    agents and learners was exercised by at least one check.

Every check is tagged with the operations it exercises. Running the suite
with a planted learner fault must make it fail.

Usage example (CLI):
    python verify.py --suite fixtures
    python verify.py --suite all --seeds 20 --plant-fault zero-eta
"""

import argparse
import inspect
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import agents
import learners
from agents import DecisionRule, best_response_l2, best_response_weighted_l1, brute_force_best_response, respond, utility
from core_types import L2Cost, MarginTooDemandingError, WeightedL1Cost, as_vector, exact_margin_sign
from harness import (
    AgentConfig,
    BoundCheck,
    LearnerConfig,
    Transcript,
    Violation,
    audit_lemma_invariants,
    check_agent_rationality,
    check_forbidden_region,
    check_mistake_bound,
    check_phase_accounting,
    check_search_correctness,
    detect_cycle,
    replay_transcript,
    run_experiment,
    search_converged,
    stop_after_convergence,
    theorem4_bound,
)
from learners import NO_FAULTS, LearnerFaults, initial_state, learner_step, published_rule, state_from_json
from streams import FIXTURES, Fixture, StreamSpec, generate_separable_stream, generated_meta, iter_separable_stream
from transcripts import read_transcript_jsonl, write_transcript_csv, write_transcript_jsonl

# =============================================================================
# MODULE PUBLIC API
# =============================================================================
__all__ = [
    "SUITES",
    "FAULTS",
    "REQUIRED_OPS",
    "VerifyOptions",
    "CheckResult",
    "run_suite",
    "main",
]

# =============================================================================
# CONSTANTS SECTION
# =============================================================================

#: Suite names accepted by run_suite and the CLI.
SUITES: Tuple[str, ...] = ("fixtures", "lemmas", "bounds", "oracle", "unknown", "all")

#: Planted faults, by CLI name.
FAULTS: Dict[str, LearnerFaults] = {
    "surrogate-sign": LearnerFaults(flip_surrogate=True),
    "no-correction": LearnerFaults(skip_correction=True),
    "zero-eta": LearnerFaults(zero_eta=True),
}

#: Every public function of agents and learners; the coverage check wants them all.
REQUIRED_OPS: Tuple[str, ...] = tuple(
    sorted(
        name
        for module in (agents, learners)
        for name in module.__all__
        if name != "main" and inspect.isfunction(getattr(module, name))
    )
)

#: Rounds per seeded property run.
DEFAULT_SUITE_ROUNDS: int = 500

#: Round cap of one unknown-cost run; runs stop earlier once converged.
UNKNOWN_MAX_ROUNDS: int = 60_000

#: Event-free rounds an unknown-cost run keeps playing after it converges.
CONVERGED_TAIL_ROUNDS: int = 1_000

#: Least share of unknown-cost runs that must record a phase_down.
MIN_PHASE_DOWN_SHARE: float = 0.1

#: Least share of unknown-cost runs that must converge.
MIN_CONVERGED_SHARE: float = 0.1

#: Seeded separable runs per property check.
DEFAULT_SEEDS: int = 100

#: Seeded runs of the unknown-cost search.
DEFAULT_UNKNOWN_RUNS: int = 50

#: Random instances per agent-oracle check.
DEFAULT_ORACLE_INSTANCES: int = 1000

#: Oracle grid spacing as a fraction of the largest budget.
DEFAULT_ORACLE_STEP_FRACTION: float = 1.0 / 200.0

#: Oracle grid half-width as a multiple of the largest budget.
ORACLE_RADIUS_FACTOR: float = 1.05

#: Closed-form and oracle utilities closer than this agree.
ORACLE_UTILITY_TOLERANCE: float = 1e-6

#: Rounds of the Example-1 runs: the opener plus 100 (B, C) cycles.
EXAMPLE1_ROUNDS: int = 201

#: Mistakes the classic Perceptron makes in EXAMPLE1_ROUNDS rounds.
EXAMPLE1_CLASSIC_MISTAKES: int = 200

#: Rounds given to the strategic Perceptron to settle on Example 1.
EXAMPLE1_REPAIR_ROUNDS: int = 10_000

#: floor((sqrt(1.25) + 0.5)^2 * 17), the Example-1 mistake bound under w* = (4, -1).
EXAMPLE1_REPAIR_BOUND: int = 44

#: Rounds of the Example-2 run: z_0 plus 100 cycles of four.
EXAMPLE2_ROUNDS: int = 401

#: Violations kept per run in a verdict.
MAX_REPORTED_VIOLATIONS: int = 20

# Dimension, R and gamma grids of the seeded property runs.
PROPERTY_DIMENSIONS: Tuple[int, ...] = (2, 5, 10)
PROPERTY_RADII: Tuple[float, ...] = (1.0, 5.0, 10.0)
PROPERTY_MARGINS: Tuple[float, ...] = (0.1, 0.5, 1.0)
UNKNOWN_DIMENSIONS: Tuple[int, ...] = (2, 3)
UNKNOWN_RADII: Tuple[float, ...] = (1.0, 2.0)
UNKNOWN_MARGINS: Tuple[float, ...] = (0.25, 0.5)


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class VerifyOptions:
    seeds: int = DEFAULT_SEEDS
    rounds: int = DEFAULT_SUITE_ROUNDS
    unknown_runs: int = DEFAULT_UNKNOWN_RUNS
    unknown_rounds: int = UNKNOWN_MAX_ROUNDS
    oracle_instances: int = DEFAULT_ORACLE_INSTANCES
    oracle_step_fraction: float = DEFAULT_ORACLE_STEP_FRACTION
    seed: int = 0
    faults: LearnerFaults = NO_FAULTS


@dataclass
class CheckResult:
    name: str
    suites: Tuple[str, ...]
    passed: bool
    detail: str
    ops: Tuple[str, ...]
    seconds: float = 0.0


@dataclass(frozen=True)
class _Check:
    name: str
    suites: Tuple[str, ...]
    ops: Tuple[str, ...]
    fn: Callable[[VerifyOptions], Tuple[bool, str]]


@dataclass(frozen=True)
class RunVerdict:
    """What one seeded run produced, reduced to what the checks look at."""

    label: str
    mistakes: int
    bounds: Tuple[BoundCheck, ...] = ()
    violations: Tuple[Violation, ...] = ()
    extra_failures: Tuple[str, ...] = field(default=())
    skipped: bool = False
    phase_downs: int = 0
    converged: bool = False

    @property
    def failed(self) -> bool:
        return bool(self.violations or self.extra_failures or not all(b.holds for b in self.bounds))


CHECKS: List[_Check] = []


def _check(name: str, suites: Sequence[str], ops: Sequence[str]):
    def register(fn: Callable[[VerifyOptions], Tuple[bool, str]]):
        CHECKS.append(_Check(name=name, suites=tuple(suites), ops=tuple(ops), fn=fn))
        return fn

    return register


# =============================================================================
# HELPERS
# =============================================================================

def _run_fixture(
    fixture: Fixture,
    learner_config: LearnerConfig,
    rounds: int,
    cost_model=None,
) -> Transcript:
    config = replace(learner_config, zero_prediction=fixture.zero_prediction)
    return run_experiment(
        config,
        AgentConfig(cost_model=cost_model or fixture.cost_model),
        fixture.records(),
        max_rounds=rounds,
        stream_meta=fixture.meta(),
    )


def _property_grid(
    dimensions: Sequence[int], radii: Sequence[float], margins: Sequence[float]
) -> List[Tuple[int, float, float]]:
    return [(d, R, gamma) for d in dimensions for R in radii for gamma in margins]


def _skipped(label: str, error: MarginTooDemandingError) -> RunVerdict:
    logging.warning(f"Skipping {label}: {error}")
    return RunVerdict(label=label, mistakes=0, skipped=True)


def _first(violations: Sequence[Violation]) -> Tuple[Violation, ...]:
    return tuple(violations[:MAX_REPORTED_VIOLATIONS])


def _describe_failures(verdicts: Sequence[RunVerdict], total: int) -> str:
    skipped = sum(1 for v in verdicts if v.skipped)
    note = f" ({skipped} skipped: margin too demanding)" if skipped else ""
    failed = [v for v in verdicts if v.failed]
    if not failed:
        return f"{total - skipped} runs clean{note}"
    first = failed[0]
    reasons = [f"{v.check}@{v.t}: {v.detail}" for v in first.violations[:3]]
    reasons += list(first.extra_failures[:3])
    reasons += [f"{b.formula_id}: {b.observed} > {b.bound:.6g}" for b in first.bounds if not b.holds]
    return f"{len(failed)}/{total} runs failed{note}; first ({first.label}): " + "; ".join(reasons)


# =============================================================================
# SEEDED RUNS
# =============================================================================

@lru_cache(maxsize=None)
def _l2_verdicts(seeds: int, rounds: int, seed: int, faults: LearnerFaults) -> Tuple[RunVerdict, ...]:
    grid = _property_grid(PROPERTY_DIMENSIONS, PROPERTY_RADII, PROPERTY_MARGINS)
    verdicts = []
    for k in range(seeds):
        d, R, gamma = grid[k % len(grid)]
        rng = np.random.default_rng(seed + k)
        alpha = float(R * rng.uniform(0.05, 1.0))
        spec = StreamSpec(d=d, R=R, gamma=gamma, length=rounds, seed=seed + k)
        label = f"seed={seed + k} d={d} R={R} gamma={gamma} alpha={alpha:.4g}"
        try:
            transcript = run_experiment(
                LearnerConfig("strategic-l2", alpha=alpha, faults=faults),
                AgentConfig(cost_model=L2Cost(alpha)),
                iter_separable_stream(spec),
                max_rounds=rounds,
                stream_meta=generated_meta(spec),
            )
        except MarginTooDemandingError as e:
            verdicts.append(_skipped(label, e))
            continue
        violations = (
            check_forbidden_region(transcript)
            + check_agent_rationality(transcript)
            + audit_lemma_invariants(transcript).violations
        )
        verdicts.append(
            RunVerdict(
                label=label,
                mistakes=transcript.total_mistakes,
                bounds=(check_mistake_bound(transcript, "theorem1"),),
                violations=_first(violations),
            )
        )
    return tuple(verdicts)


@lru_cache(maxsize=None)
def _l1_verdicts(seeds: int, rounds: int, seed: int, faults: LearnerFaults) -> Tuple[RunVerdict, ...]:
    grid = _property_grid(PROPERTY_DIMENSIONS, PROPERTY_RADII, PROPERTY_MARGINS)
    verdicts = []
    for k in range(seeds):
        d, R, gamma = grid[k % len(grid)]
        rng = np.random.default_rng(seed + k)
        alphas = tuple(float(a) for a in R * rng.uniform(0.05, 1.0, size=d))
        spec = StreamSpec(d=d, R=R, gamma=gamma, length=rounds, seed=seed + k, coordinate_sign_constraint=True)
        label = f"seed={seed + k} d={d} R={R} gamma={gamma}"
        try:
            transcript = run_experiment(
                LearnerConfig("strategic-l1", alphas=alphas, R=R, faults=faults),
                AgentConfig(cost_model=WeightedL1Cost(alphas)),
                iter_separable_stream(spec),
                max_rounds=rounds,
                stream_meta=generated_meta(spec),
            )
        except MarginTooDemandingError as e:
            verdicts.append(_skipped(label, e))
            continue
        violations = check_agent_rationality(transcript) + audit_lemma_invariants(transcript).violations
        verdicts.append(
            RunVerdict(
                label=label,
                mistakes=transcript.total_mistakes,
                bounds=(check_mistake_bound(transcript, "theorem3"),),
                violations=_first(violations),
            )
        )
    return tuple(verdicts)


def _unknown_verdict(transcript: Transcript, label: str) -> RunVerdict:
    violations = (
        check_search_correctness(transcript)
        + check_phase_accounting(transcript)
        + check_agent_rationality(transcript)
        + audit_lemma_invariants(transcript).violations
    )
    band_rounds = {v.t for v in check_forbidden_region(transcript)}
    down_rounds = {r.t for r in transcript.rounds if r.event == "phase_down"}
    extra = ()
    if band_rounds != down_rounds:
        extra = (f"in-band rounds {sorted(band_rounds)[:5]} differ from phase_down rounds {sorted(down_rounds)[:5]}",)
    bounds = tuple(check_mistake_bound(transcript, f) for f in ("proposition1", "proposition2", "theorem4"))
    return RunVerdict(
        label=label,
        mistakes=transcript.total_mistakes,
        bounds=bounds,
        violations=_first(violations),
        extra_failures=extra,
        phase_downs=len(down_rounds),
        converged=search_converged(transcript),
    )


def _unknown_run(
    learner_config: LearnerConfig,
    cost_model,
    spec: StreamSpec,
    alpha_true: float,
    label: str,
) -> RunVerdict:
    until = stop_after_convergence(
        alpha_true,
        spec.gamma,
        CONVERGED_TAIL_ROUNDS,
        mistake_cap=theorem4_bound(spec.R, spec.gamma),
    )
    try:
        transcript = run_experiment(
            learner_config,
            AgentConfig(cost_model=cost_model),
            iter_separable_stream(spec),
            max_rounds=spec.length,
            stream_meta=generated_meta(spec),
            until=until,
        )
    except MarginTooDemandingError as e:
        return _skipped(label, e)
    return _unknown_verdict(transcript, f"{label} rounds={len(transcript.rounds)}")


@lru_cache(maxsize=None)
def _unknown_verdicts(runs: int, rounds: int, seed: int, faults: LearnerFaults) -> Tuple[RunVerdict, ...]:
    grid = _property_grid(UNKNOWN_DIMENSIONS, UNKNOWN_RADII, UNKNOWN_MARGINS)
    verdicts = []
    for k in range(runs):
        d, R, gamma = grid[k % len(grid)]
        rng = np.random.default_rng(seed + 10_000 + k)
        alpha = float(rng.uniform(gamma / 2.0, R))
        spec = StreamSpec(d=d, R=R, gamma=gamma, length=rounds, seed=seed + 10_000 + k)
        verdicts.append(
            _unknown_run(
                LearnerConfig("unknown-l2", R=R, gamma=gamma, faults=faults),
                L2Cost(alpha),
                spec,
                alpha,
                f"seed={spec.seed} d={d} R={R} gamma={gamma} alpha={alpha:.4g}",
            )
        )
    return tuple(verdicts)


@lru_cache(maxsize=None)
def _single_direction_verdicts(runs: int, rounds: int, seed: int, faults: LearnerFaults) -> Tuple[RunVerdict, ...]:
    grid = _property_grid(UNKNOWN_DIMENSIONS, UNKNOWN_RADII, UNKNOWN_MARGINS)
    verdicts = []
    for k in range(runs):
        d, R, gamma = grid[k % len(grid)]
        rng = np.random.default_rng(seed + 20_000 + k)
        alpha = float(rng.uniform(gamma / 2.0, R))
        alphas = (alpha,) + (0.0,) * (d - 1)
        spec = StreamSpec(
            d=d, R=R, gamma=gamma, length=rounds, seed=seed + 20_000 + k, coordinate_sign_constraint=True
        )
        verdicts.append(
            _unknown_run(
                LearnerConfig("unknown-l1-single", R=R, gamma=gamma, faults=faults),
                WeightedL1Cost(alphas),
                spec,
                alpha,
                f"seed={spec.seed} d={d} R={R} gamma={gamma} alpha_1={alpha:.4g}",
            )
        )
    return tuple(verdicts)


def _clean(verdicts: Sequence[RunVerdict], with_bounds: bool, with_violations: bool) -> Tuple[bool, str]:
    selected = [
        replace(
            v,
            bounds=v.bounds if with_bounds else (),
            violations=v.violations if with_violations else (),
            extra_failures=v.extra_failures if with_violations else (),
        )
        for v in verdicts
    ]
    detail = _describe_failures(selected, len(selected))
    if selected and all(v.skipped for v in selected):
        return False, f"every run skipped; {detail}"
    return not any(v.failed for v in selected), detail


def _search_shares(verdicts: Sequence[RunVerdict]) -> Tuple[bool, str]:
    """Enough runs must exercise phase_down and reach the converged band."""
    ran = [v for v in verdicts if not v.skipped]
    downs = sum(1 for v in ran if v.phase_downs > 0)
    converged = sum(1 for v in ran if v.converged)
    need_downs = max(1, math.ceil(MIN_PHASE_DOWN_SHARE * len(ran)))
    need_converged = max(1, math.ceil(MIN_CONVERGED_SHARE * len(ran)))
    ok = downs >= need_downs and converged >= need_converged
    return ok, f"phase_down in {downs}/{len(ran)} (need {need_downs}), converged {converged}/{len(ran)} (need {need_converged})"


def _unknown_outcome(verdicts: Sequence[RunVerdict]) -> Tuple[bool, str]:
    clean, detail = _clean(verdicts, True, True)
    shares_ok, shares = _search_shares(verdicts)
    return clean and shares_ok, f"{detail}; {shares}"


# =============================================================================
# FIXTURE CHECKS
# =============================================================================

@_check(
    "example1_classic_cycle",
    ("fixtures",),
    ("classic_step", "best_response_l2", "respond", "published_rule", "initial_state", "learner_step"),
)
def _example1_classic_cycle(options: VerifyOptions) -> Tuple[bool, str]:
    failures = []
    for fixture_id in ("example1-footnote", "example1"):
        t = _run_fixture(FIXTURES[fixture_id], LearnerConfig("classic", faults=options.faults), EXAMPLE1_ROUNDS)
        period = detect_cycle(t, max_period=4)
        steady = all(r.mistake for r in t.rounds[3:])
        if t.total_mistakes != EXAMPLE1_CLASSIC_MISTAKES or period != 2 or not steady:
            failures.append(f"{fixture_id}: {t.total_mistakes} mistakes, period {period}, steady={steady}")
    return not failures, "; ".join(failures) or "2 mistakes per (B, C) cycle, period 2"


@_check("example1_l1_cycle", ("fixtures",), ("best_response_weighted_l1", "classic_step"))
def _example1_l1_cycle(options: VerifyOptions) -> Tuple[bool, str]:
    t = _run_fixture(
        FIXTURES["example1-footnote"],
        LearnerConfig("classic", faults=options.faults),
        EXAMPLE1_ROUNDS,
        cost_model=WeightedL1Cost((0.6, 0.0)),
    )
    period = detect_cycle(t, max_period=4)
    ok = t.total_mistakes == EXAMPLE1_CLASSIC_MISTAKES and period == 2
    return ok, f"weighted ℓ1 (0.6, 0): {t.total_mistakes} mistakes, period {period}"


@_check("example1_strategic_repair", ("fixtures",), ("strategic_l2_step", "surrogate_l2", "best_response_l2"))
def _example1_strategic_repair(options: VerifyOptions) -> Tuple[bool, str]:
    t = _run_fixture(
        FIXTURES["example1-footnote"],
        LearnerConfig("strategic-l2", alpha=0.5, faults=options.faults),
        EXAMPLE1_REPAIR_ROUNDS,
    )
    bound = check_mistake_bound(t, "theorem1")
    tail_mistakes = sum(1 for r in t.rounds[EXAMPLE1_REPAIR_ROUNDS // 2:] if r.mistake)
    ok = bound.holds and t.total_mistakes <= EXAMPLE1_REPAIR_BOUND and tail_mistakes == 0
    return ok, f"{t.total_mistakes} mistakes (bound {bound.bound:.4g}), {tail_mistakes} in the second half"


@_check(
    "example2_trajectory",
    ("fixtures",),
    ("strategic_l2_step", "surrogate_l2", "best_response_l2"),
)
def _example2_trajectory(options: VerifyOptions) -> Tuple[bool, str]:
    t = _run_fixture(
        FIXTURES["example2"],
        LearnerConfig("strategic-l2", alpha=5.0, faults=options.faults),
        EXAMPLE2_ROUNDS,
    )
    failures = []
    expected = [(-4.0, -3.0), (-7.0, 1.0), (-4.0, 3.0), (-7.0, -1.0), (-4.0, -3.0)]
    observed = [tuple(r.w_after.tolist()) for r in t.rounds[:5]]
    if observed != expected:
        failures.append(f"trajectory {observed}")
    surrogates = {1: (3.0, -4.0), 3: (3.0, 4.0)}
    for k, want in surrogates.items():
        got = t.rounds[k].x_tilde
        if got is None or tuple(got.tolist()) != want:
            failures.append(f"x̃_{k} = {None if got is None else got.tolist()}, want {want}")
        r = t.rounds[k]
        if exact_margin_sign(r.x.tolist(), r.w_before.tolist(), 5.0) != 0:
            failures.append(f"z_{k} is not exactly on the threshold")
    period = detect_cycle(t, max_period=8)
    if period != 4:
        failures.append(f"period {period}")
    if t.total_mistakes != EXAMPLE2_ROUNDS:
        failures.append(f"{t.total_mistakes} mistakes in {EXAMPLE2_ROUNDS} rounds")
    report = audit_lemma_invariants(t)
    if report.violations:
        v = report.violations[0]
        failures.append(f"{len(report.violations)} audit violations, first {v.check}@{v.t}")
    return not failures, "; ".join(failures) or "exact trajectory, period 4, 4 mistakes per cycle"


@_check(
    "tie_breaking",
    ("fixtures",),
    ("strategic_l1_step", "tie_break", "eta_schedule", "correction_step", "surrogate_l1", "best_response_weighted_l1"),
)
def _tie_breaking(options: VerifyOptions) -> Tuple[bool, str]:
    fixture = FIXTURES["tie"]
    t = _run_fixture(
        fixture,
        LearnerConfig("strategic-l1", alphas=fixture.cost_model.alphas, R=fixture.R, faults=options.faults),
        20,
    )
    report = audit_lemma_invariants(t)
    first = t.rounds[0].w_after
    ok = report.ok and first[0] > first[1]
    detail = f"w after the tie = {first.tolist()}, {len(report.violations)} audit violations"
    return ok, detail


@_check(
    "state_snapshots",
    ("fixtures",),
    (
        "state_from_json",
        "initial_state",
        "learner_step",
        "unknown_cost_controller_step",
        "unknown_cost_l1_single_direction",
        "initial_unknown_cost_state",
        "mistake_budget",
    ),
)
def _state_snapshots(options: VerifyOptions) -> Tuple[bool, str]:
    spec = StreamSpec(d=3, R=5.0, gamma=0.5, length=300, seed=options.seed, coordinate_sign_constraint=True)
    records = generate_separable_stream(spec)
    setups = [
        ("classic", {}, L2Cost(1.0)),
        ("strategic-l2", {"alpha": 1.0}, L2Cost(1.0)),
        ("strategic-l1", {"alphas": (1.0, 0.5, 2.0), "R": 5.0}, WeightedL1Cost((1.0, 0.5, 2.0))),
        ("unknown-l2", {"R": 5.0, "gamma": 0.5}, L2Cost(2.0)),
        ("unknown-l1-single", {"R": 5.0, "gamma": 0.5}, WeightedL1Cost((2.0, 0.0, 0.0))),
    ]
    failures = []
    for algorithm, params, model in setups:
        state = initial_state(algorithm, spec.d, **params)
        for t, record in enumerate(records):
            rule = published_rule(state)
            x = respond(record.z, rule, model).x
            restored = state_from_json(json.loads(json.dumps(state.to_json())))
            direct = learner_step(state, x, record.label, R_known=params.get("R"), faults=options.faults)
            via_snapshot = learner_step(restored, x, record.label, R_known=params.get("R"), faults=options.faults)
            if direct.prediction != via_snapshot.prediction or not np.array_equal(direct.w_updated, via_snapshot.w_updated):
                failures.append(f"{algorithm} diverges from its snapshot at t={t}")
                break
            state = direct.state
    return not failures, "; ".join(failures) or "snapshots reproduce every step"


@_check("transcript_replay", ("fixtures",), ())
def _transcript_replay(options: VerifyOptions) -> Tuple[bool, str]:
    spec = StreamSpec(d=4, R=5.0, gamma=0.5, length=200, seed=options.seed)
    learner_config = LearnerConfig("unknown-l2", R=5.0, gamma=0.5, faults=options.faults)
    agent_config = AgentConfig(cost_model=L2Cost(1.5))

    def run() -> Transcript:
        return run_experiment(learner_config, agent_config, generate_separable_stream(spec), 200, generated_meta(spec))

    with tempfile.TemporaryDirectory() as tmp:
        first, second = run(), run()
        paths = [os.path.join(tmp, f"run{k}.csv") for k in range(2)]
        write_transcript_csv(first, paths[0])
        write_transcript_csv(second, paths[1])
        with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
            identical = a.read() == b.read()
        jsonl = os.path.join(tmp, "run.jsonl")
        write_transcript_jsonl(first, jsonl)
        mismatches = replay_transcript(read_transcript_jsonl(jsonl))
    ok = identical and not mismatches
    return ok, f"csv identical={identical}, replay mismatches={len(mismatches)}"


# =============================================================================
# PROPERTY CHECKS
# =============================================================================

@_check("l2_lemmas", ("lemmas",), ("strategic_l2_step", "surrogate_l2", "best_response_l2"))
def _l2_lemmas(options: VerifyOptions) -> Tuple[bool, str]:
    return _clean(_l2_verdicts(options.seeds, options.rounds, options.seed, options.faults), False, True)


@_check("l1_lemmas", ("lemmas",), ("strategic_l1_step", "correction_step", "tie_break", "surrogate_l1"))
def _l1_lemmas(options: VerifyOptions) -> Tuple[bool, str]:
    return _clean(_l1_verdicts(options.seeds, options.rounds, options.seed, options.faults), False, True)


@_check("theorem1_bound", ("bounds",), ("strategic_l2_step",))
def _theorem1_bound(options: VerifyOptions) -> Tuple[bool, str]:
    return _clean(_l2_verdicts(options.seeds, options.rounds, options.seed, options.faults), True, False)


@_check("theorem3_bound", ("bounds",), ("strategic_l1_step",))
def _theorem3_bound(options: VerifyOptions) -> Tuple[bool, str]:
    return _clean(_l1_verdicts(options.seeds, options.rounds, options.seed, options.faults), True, False)


@_check(
    "unknown_cost_search",
    ("bounds", "unknown"),
    ("unknown_cost_controller_step", "initial_unknown_cost_state", "mistake_budget", "strategic_l2_step"),
)
def _unknown_cost_search(options: VerifyOptions) -> Tuple[bool, str]:
    verdicts = _unknown_verdicts(options.unknown_runs, options.unknown_rounds, options.seed, options.faults)
    return _unknown_outcome(verdicts)


@_check(
    "unknown_cost_single_direction",
    ("bounds", "unknown"),
    ("unknown_cost_l1_single_direction", "correction_step", "surrogate_l1", "best_response_weighted_l1"),
)
def _unknown_cost_single_direction(options: VerifyOptions) -> Tuple[bool, str]:
    runs = max(1, options.unknown_runs // 5)
    verdicts = _single_direction_verdicts(runs, options.unknown_rounds, options.seed, options.faults)
    return _unknown_outcome(verdicts)


# =============================================================================
# AGENT ORACLE CHECKS
# =============================================================================

def _oracle_disagreements(options: VerifyOptions, weighted: bool) -> Tuple[int, str]:
    rng = np.random.default_rng(options.seed + (40_000 if weighted else 30_000))
    disagreements = 0
    first = ""
    for k in range(options.oracle_instances):
        z = as_vector(rng.uniform(-2.0, 2.0, size=2))
        rule = DecisionRule(w=as_vector(rng.standard_normal(2)), threshold=float(rng.uniform(0.0, 1.5)))
        if weighted:
            alphas = rng.uniform(0.1, 2.0, size=2)
            if rng.random() < 0.2:
                alphas[rng.integers(2)] = 0.0
            model = WeightedL1Cost(tuple(float(a) for a in alphas))
            closed = best_response_weighted_l1(z, rule, model.alphas).x
        else:
            model = L2Cost(float(rng.uniform(0.1, 2.0)))
            closed = best_response_l2(z, rule, model.alpha).x
        budget = model.alpha_max
        oracle = brute_force_best_response(
            z,
            rule,
            model,
            grid_step=budget * options.oracle_step_fraction,
            grid_radius=budget * ORACLE_RADIUS_FACTOR,
        )
        u_closed = utility(z, closed, rule, model)
        u_oracle = utility(z, oracle, rule, model)
        if abs(u_closed - u_oracle) > ORACLE_UTILITY_TOLERANCE:
            disagreements += 1
            if not first:
                first = f"instance {k}: closed {closed.tolist()} u={u_closed:.9g}, oracle {oracle.tolist()} u={u_oracle:.9g}"
    return disagreements, first


@_check(
    "oracle_l2",
    ("oracle",),
    ("best_response_l2", "brute_force_best_response", "utility", "manipulation_cost"),
)
def _oracle_l2(options: VerifyOptions) -> Tuple[bool, str]:
    disagreements, first = _oracle_disagreements(options, weighted=False)
    return disagreements == 0, first or f"{options.oracle_instances} instances agree"


@_check(
    "oracle_weighted_l1",
    ("oracle",),
    ("best_response_weighted_l1", "brute_force_best_response", "utility", "manipulation_cost"),
)
def _oracle_weighted_l1(options: VerifyOptions) -> Tuple[bool, str]:
    disagreements, first = _oracle_disagreements(options, weighted=True)
    return disagreements == 0, first or f"{options.oracle_instances} instances agree"


# =============================================================================
# SUITE RUNNER
# =============================================================================

def _selected(suite: str) -> List[_Check]:
    if suite == "all":
        return list(CHECKS)
    return [c for c in CHECKS if suite in c.suites]


def _coverage(checks: Sequence[_Check]) -> CheckResult:
    exercised = {op for c in checks for op in c.ops}
    missing = [op for op in REQUIRED_OPS if op not in exercised]
    detail = f"missing: {', '.join(missing)}" if missing else f"all {len(REQUIRED_OPS)} operations exercised"
    return CheckResult(name="coverage", suites=("all",), passed=not missing, detail=detail, ops=())


def run_suite(suite: str, options: VerifyOptions = VerifyOptions()) -> List[CheckResult]:
    """
    Run every check of suite and return one result per check. Exceptions
    inside a check count as a failure of that check.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    checks = _selected(suite)
    results = []
    for c in checks:
        start = time.perf_counter()
        try:
            passed, detail = c.fn(options)
        except Exception as e:
            logging.exception(f"Check {c.name} raised.")
            passed, detail = False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - start
        level = logging.INFO if passed else logging.ERROR
        logging.log(level, f"[{'PASS' if passed else 'FAIL'}] {c.name} ({elapsed:.2f}s): {detail}")
        results.append(CheckResult(c.name, c.suites, passed, detail, c.ops, elapsed))
    if suite == "all":
        coverage = _coverage(checks)
        logging.log(logging.INFO if coverage.passed else logging.ERROR, f"[{'PASS' if coverage.passed else 'FAIL'}] coverage: {coverage.detail}")
        results.append(coverage)
    return results


# =============================================================================
# MAIN
# =============================================================================

def main(args_list: Optional[list] = None) -> None:
    """Run a suite and exit 1 if any check fails."""
    parser = argparse.ArgumentParser(description="Run the acceptance suite.")
    parser.add_argument("--suite", choices=SUITES, default="all", help="Suite to run (default: all).")
    parser.add_argument("--seeds", type=int, default=DEFAULT_SEEDS, help="Seeded runs per property check.")
    parser.add_argument("--rounds", type=int, default=DEFAULT_SUITE_ROUNDS, help="Rounds per seeded run.")
    parser.add_argument("--unknown-runs", type=int, default=DEFAULT_UNKNOWN_RUNS, help="Seeded unknown-cost runs.")
    parser.add_argument(
        "--unknown-rounds", type=int, default=UNKNOWN_MAX_ROUNDS, help="Round cap of each unknown-cost run."
    )
    parser.add_argument("--plant-fault", choices=sorted(FAULTS), help="Run against a deliberately broken learner.")
    args = parser.parse_args(args_list)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

    faults = FAULTS[args.plant_fault] if args.plant_fault else NO_FAULTS
    options = VerifyOptions(
        seeds=args.seeds,
        rounds=args.rounds,
        unknown_runs=args.unknown_runs,
        unknown_rounds=args.unknown_rounds,
        faults=faults,
    )
    results = run_suite(args.suite, options)
    failed = [r.name for r in results if not r.passed]
    print(json.dumps({"passed": not failed, "failed": failed}, indent=2))
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
