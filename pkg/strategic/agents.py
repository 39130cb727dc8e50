#!/usr/bin/env python3
"""
agents.py

Rational agents for the strategic classification protocol.

Each arriving individual holds a true point z and sees the learner's
published decision rule {x : x·w/|w| >= T}. Being classified positive is
worth 1, moving costs |x - z| / alpha (ℓ2) or sum_i |x_i - z_i| / alpha_i
(weighted ℓ1), and the individual reports the observed point x that
maximizes utility. Utility maximizers never overshoot: a manipulated point
lands exactly on the threshold hyperplane.

brute_force_best_response enumerates a grid of destinations and serves as
an independent oracle for the closed-form best responses.

Usage example (CLI):
    python agents.py --z -0.5 -1 --w 1 0 --threshold 0 --alpha 0.5
    python agents.py --z 0 0 --w 1 1 --threshold 1.4142135623730951 --alphas 2 1
"""

import argparse
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from core_types import (
    EPS_EQ,
    CostModel,
    DimensionError,
    L2Cost,
    OracleGridTooLargeError,
    ParameterError,
    Vector,
    WeightedL1Cost,
    as_vector,
    norm,
    threshold_gap,
)

# =============================================================================
# MODULE PUBLIC API
# =============================================================================
__all__ = [
    "DecisionRule",
    "Manipulation",
    "best_response_l2",
    "best_response_weighted_l1",
    "respond",
    "manipulation_cost",
    "utility",
    "brute_force_best_response",
    "main",
]

# =============================================================================
# CONSTANTS SECTION
# =============================================================================

#: Largest number of grid destinations the oracle agrees to enumerate.
MAX_ORACLE_CANDIDATES: int = 10 ** 7

#: Number of grid rows evaluated per numpy batch inside the oracle.
ORACLE_BATCH_ROWS: int = 1 << 16

#: Utilities closer than this are treated as a tie by the oracle.
UTILITY_TIE_TOLERANCE: float = 1e-12


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class DecisionRule:
    """
    Published positive region {x : x·w/|w| >= threshold}.

    A zero weight vector classifies every point alike: positive by default,
    negative for learners that start out rejecting everyone.
    """

    w: Vector
    threshold: float = 0.0
    zero_positive: bool = True

    @property
    def everything_positive(self) -> bool:
        return norm(self.w) == 0.0 and self.zero_positive

    def is_positive(self, x: Vector) -> bool:
        if norm(self.w) == 0.0:
            return self.zero_positive
        return threshold_gap(x, self.w, self.threshold) >= 0.0


@dataclass(frozen=True)
class Manipulation:
    """An agent's best response: where it reports itself and what it paid."""

    x: Vector
    moved: bool
    distance: float = 0.0
    cost: float = 0.0
    direction: Optional[Vector] = None
    coordinate: Optional[int] = None

    @classmethod
    def stay(cls, z: Vector) -> "Manipulation":
        return cls(x=z, moved=False)


# =============================================================================
# BEST RESPONSES
# =============================================================================

def _within_budget(required: float, budget: float) -> bool:
    return required <= budget + EPS_EQ * max(1.0, budget)


def best_response_l2(z: Vector, rule: DecisionRule, alpha_true: float) -> Manipulation:
    """
    Best response of an agent with ℓ2 budget alpha_true.

    The agent moves along w/|w| by exactly the gap to the threshold when the
    gap is positive and affordable; an agent whose cost is exactly 1 moves.
    """
    if not math.isfinite(alpha_true) or alpha_true < 0:
        raise ParameterError(f"alpha_true must be finite and >= 0, got {alpha_true}")
    if rule.is_positive(z) or norm(rule.w) == 0.0:
        return Manipulation.stay(z)

    w_norm = norm(rule.w)
    gap = rule.threshold - float(np.dot(z, rule.w)) / w_norm
    if gap <= 0.0 or not _within_budget(gap, alpha_true) or alpha_true == 0.0:
        return Manipulation.stay(z)

    direction = rule.w / w_norm
    x = as_vector(z + gap * direction)
    cost = min(gap / alpha_true, 1.0)
    return Manipulation(x=x, moved=True, distance=gap, cost=cost, direction=as_vector(direction))


def best_response_weighted_l1(z: Vector, rule: DecisionRule, alphas_true: Sequence[float]) -> Manipulation:
    """
    Best response of an agent with per-coordinate budgets alphas_true.

    Linear gain and linear cost make a single coordinate optimal: the agent
    uses the signed axis maximizing alpha_j·|w_j| (lowest index on ties) and
    moves iff the required distance fits into alpha_j.
    """
    alphas = np.asarray(alphas_true, dtype=np.float64)
    if alphas.shape != z.shape:
        raise ParameterError(f"expected {z.size} budgets, got {alphas.size}")
    if np.any(~np.isfinite(alphas)) or np.any(alphas < 0):
        raise ParameterError(f"budgets must be finite and >= 0, got {alphas.tolist()}")
    if rule.is_positive(z):
        return Manipulation.stay(z)

    gap_raw = rule.threshold * norm(rule.w) - float(np.dot(z, rule.w))
    gains = alphas * np.abs(rule.w)
    j = int(np.argmax(gains))
    if gap_raw <= 0.0 or gains[j] == 0.0:
        return Manipulation.stay(z)

    delta = gap_raw / abs(rule.w[j])
    if not _within_budget(delta, alphas[j]):
        return Manipulation.stay(z)

    step = math.copysign(delta, rule.w[j])
    moved = np.array(z, dtype=np.float64)
    moved[j] += step
    direction = np.zeros_like(moved)
    direction[j] = math.copysign(1.0, rule.w[j])
    return Manipulation(
        x=as_vector(moved),
        moved=True,
        distance=delta,
        cost=min(delta / alphas[j], 1.0),
        direction=as_vector(direction),
        coordinate=j,
    )


def respond(z: Vector, rule: DecisionRule, model: CostModel) -> Manipulation:
    """Dispatch to the best response matching the agent's cost model."""
    if isinstance(model, L2Cost):
        return best_response_l2(z, rule, model.alpha)
    if isinstance(model, WeightedL1Cost):
        return best_response_weighted_l1(z, rule, model.alphas)
    raise ParameterError(f"unsupported cost model {model!r}")


# =============================================================================
# COSTS AND UTILITY
# =============================================================================

def _l2_costs(moves: np.ndarray, alpha: float) -> np.ndarray:
    distances = np.linalg.norm(moves, axis=-1)
    if alpha == 0.0:
        return np.where(distances > 0.0, np.inf, 0.0)
    return distances / alpha


def _l1_costs(moves: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    magnitude = np.abs(moves)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_coord = np.where(magnitude > 0.0, magnitude / alphas, 0.0)
    return per_coord.sum(axis=-1)


def manipulation_cost(model: CostModel, z: Vector, x: Vector) -> float:
    """Cost of reporting x instead of z; infinite across an unmovable coordinate."""
    if z.shape != x.shape:
        raise DimensionError(f"dimension mismatch: {z.size} vs {x.size}")
    move = np.asarray(x, dtype=np.float64) - z
    if isinstance(model, L2Cost):
        return float(_l2_costs(move, model.alpha))
    if isinstance(model, WeightedL1Cost):
        if len(model.alphas) != z.size:
            raise DimensionError(f"cost model has {len(model.alphas)} budgets for dimension {z.size}")
        return float(_l1_costs(move, model.as_array()))
    raise ParameterError(f"unsupported cost model {model!r}")


def utility(z: Vector, x: Vector, rule: DecisionRule, model: CostModel) -> float:
    """1 for a positive classification minus the cost of getting from z to x."""
    return (1.0 if rule.is_positive(x) else 0.0) - manipulation_cost(model, z, x)


# =============================================================================
# BRUTE-FORCE ORACLE
# =============================================================================

def _exact_candidates(z: Vector, rule: DecisionRule) -> np.ndarray:
    """z itself plus every threshold projection a closed-form agent could use."""
    rows = [np.array(z, dtype=np.float64)]
    if norm(rule.w) == 0.0:
        return np.vstack(rows)
    w_norm = norm(rule.w)
    gap_raw = rule.threshold * w_norm - float(np.dot(z, rule.w))
    if gap_raw > 0.0:
        rows.append(z + (gap_raw / w_norm) * (rule.w / w_norm))
        for j in np.flatnonzero(rule.w):
            moved = np.array(z, dtype=np.float64)
            moved[j] += gap_raw / rule.w[j]
            rows.append(moved)
    return np.vstack(rows)


def _batch_scores(
    z: Vector, candidates: np.ndarray, rule: DecisionRule, model: CostModel
) -> Tuple[np.ndarray, np.ndarray]:
    """Utilities of every candidate, and which candidates are classified positive."""
    moves = candidates - z
    if norm(rule.w) == 0.0:
        positive = np.full(len(candidates), rule.zero_positive, dtype=bool)
    else:
        dots = candidates @ rule.w
        gaps = dots - rule.threshold * norm(rule.w)
        positive = gaps >= -EPS_EQ * np.maximum(1.0, np.abs(dots))
    if isinstance(model, L2Cost):
        costs = _l2_costs(moves, model.alpha)
    else:
        costs = _l1_costs(moves, model.as_array())
    return positive.astype(np.float64) - costs, positive


def brute_force_best_response(
    z: Vector,
    rule: DecisionRule,
    model: CostModel,
    grid_step: float,
    grid_radius: float,
) -> Vector:
    """
    Exhaustive search for the utility-maximizing destination.

    Candidates are z, the exact threshold projections (along w/|w| and along
    every axis) and every point of the box grid of spacing grid_step and
    half-width grid_radius around z. Among destinations of equal utility the
    cheapest wins, so the oracle stays put on a tie with staying. The closed
    forms move at cost exactly 1 instead, so the oracle agrees with them in
    utility, not necessarily in position: on Example 1's point C the oracle
    returns z and best_response_l2 returns (0, -1), both at utility 0.

    Raises:
        ParameterError: for a non-positive grid_step or negative radius.
        OracleGridTooLargeError: beyond MAX_ORACLE_CANDIDATES grid points.
    """
    if not grid_step > 0:
        raise ParameterError(f"grid_step must be > 0, got {grid_step}")
    if grid_radius < 0:
        raise ParameterError(f"grid_radius must be >= 0, got {grid_radius}")
    d = z.size
    per_axis = 2 * int(math.floor(grid_radius / grid_step)) + 1
    total = per_axis ** d
    if total > MAX_ORACLE_CANDIDATES:
        raise OracleGridTooLargeError(
            f"oracle grid of {per_axis}^{d} = {total} candidates exceeds {MAX_ORACLE_CANDIDATES}"
        )

    best_x: Optional[np.ndarray] = None
    best_u = -math.inf
    best_cost = math.inf

    def consider(candidates: np.ndarray, utils: np.ndarray, positive: np.ndarray) -> None:
        nonlocal best_x, best_u, best_cost
        top = float(np.max(utils))
        if top > best_u + UTILITY_TIE_TOLERANCE:
            best_x, best_u, best_cost = None, top, math.inf
        elif top < best_u - UTILITY_TIE_TOLERANCE:
            return
        tied = np.flatnonzero(utils >= best_u - UTILITY_TIE_TOLERANCE)
        costs = positive[tied].astype(np.float64) - utils[tied]
        first = int(np.argmin(costs))
        if best_x is None or costs[first] < best_cost:
            best_x, best_cost = candidates[tied[first]], float(costs[first])

    exact = _exact_candidates(z, rule)
    consider(exact, *_batch_scores(z, exact, rule, model))

    half = per_axis // 2
    for start in range(0, total, ORACLE_BATCH_ROWS):
        flat = np.arange(start, min(start + ORACLE_BATCH_ROWS, total))
        index = np.stack(np.unravel_index(flat, (per_axis,) * d), axis=-1)
        candidates = z + (index - half) * grid_step
        consider(candidates, *_batch_scores(z, candidates, rule, model))

    return as_vector(best_x)


# =============================================================================
# MAIN
# =============================================================================

def main(args_list: Optional[list] = None) -> None:
    """Compute and print one agent's best response."""
    parser = argparse.ArgumentParser(description="Compute a rational agent's best response.")
    parser.add_argument("--z", type=float, nargs="+", required=True, help="True point.")
    parser.add_argument("--w", type=float, nargs="+", required=True, help="Published weight vector.")
    parser.add_argument("--threshold", type=float, default=0.0, help="Published threshold T (default: 0).")
    budget = parser.add_mutually_exclusive_group(required=True)
    budget.add_argument("--alpha", type=float, help="ℓ2 budget.")
    budget.add_argument("--alphas", type=float, nargs="+", help="Weighted ℓ1 budgets.")
    args = parser.parse_args(args_list)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

    z = as_vector(args.z)
    w = as_vector(args.w, d=z.size)
    rule = DecisionRule(w=w, threshold=args.threshold)
    model: CostModel = L2Cost(args.alpha) if args.alpha is not None else WeightedL1Cost(tuple(args.alphas))
    result = respond(z, rule, model)
    logging.info(f"moved={result.moved} distance={result.distance:.6g} cost={result.cost:.6g}")
    print(result.x.tolist())


if __name__ == "__main__":
    main()
