#!/usr/bin/env python3
"""
core_types.py

Shared geometric types, label conventions and normalized-margin arithmetic
used by every other module of the strategic Perceptron laboratory.

Vectors are plain numpy float64 arrays flagged read-only, so they can be
shared between rounds and threads without copying. The exact-rational
helpers re-check float comparisons with fractions.Fraction when a fixture
needs to be validated digit-for-digit.

This module can be imported to use its functions or executed directly to
evaluate a single margin:

Usage example (CLI):
    python core_types.py --w -4 -3 --x -1 -7
"""

import argparse
import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

# =============================================================================
# MODULE PUBLIC API
# =============================================================================
__all__ = [
    "EPS_EQ",
    "Label",
    "Vector",
    "GroundTruth",
    "L2Cost",
    "WeightedL1Cost",
    "CostModel",
    "cost_model_from_json",
    "StrategicError",
    "DimensionError",
    "ParameterError",
    "UndefinedMarginError",
    "RationalityViolation",
    "StreamFormatError",
    "BoundUnverifiableError",
    "OracleGridTooLargeError",
    "MarginTooDemandingError",
    "as_vector",
    "zeros",
    "norm",
    "normalized_margin",
    "sign_predict",
    "threshold_gap",
    "on_threshold",
    "in_open_band",
    "exact_margin_sign",
    "vector_to_json",
    "vector_from_json",
    "label_from_int",
    "main",
]

# =============================================================================
# CONSTANTS SECTION
# =============================================================================

#: Relative tolerance for comparisons the algorithms state as exact equalities.
EPS_EQ: float = 1e-9

Vector = np.ndarray


# =============================================================================
# EXCEPTIONS
# =============================================================================

class StrategicError(Exception):
    """Base class for every error raised by the laboratory."""


class DimensionError(StrategicError, ValueError):
    """Vectors of different dimension met in one computation."""


class ParameterError(StrategicError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class UndefinedMarginError(StrategicError, ValueError):
    """The margin x·w/|w| was requested for a zero weight vector."""


class RationalityViolation(StrategicError):
    """An observed point sits where no utility-maximizing agent can land."""


class StreamFormatError(StrategicError, ValueError):
    """A stream file line could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class BoundUnverifiableError(StrategicError):
    """A mistake bound was requested but no separator is known."""


class OracleGridTooLargeError(StrategicError):
    """The brute-force agent oracle would enumerate too many candidates."""


class MarginTooDemandingError(StrategicError):
    """Rejection sampling could not meet the requested margin."""


# =============================================================================
# LABELS AND VALUE TYPES
# =============================================================================

class Label(IntEnum):
    """Binary label, serialized as +1 / -1."""

    POSITIVE = 1
    NEGATIVE = -1

    @property
    def sign(self) -> int:
        return int(self)


def label_from_int(value: Union[int, float, str]) -> Label:
    """Parse +1 / -1 (or their string forms) into a Label."""
    try:
        as_int = int(value)
    except (TypeError, ValueError) as e:
        raise ParameterError(f"label must be +1 or -1, got {value!r}") from e
    if as_int == 1 and float(value) == 1.0:
        return Label.POSITIVE
    if as_int == -1 and float(value) == -1.0:
        return Label.NEGATIVE
    raise ParameterError(f"label must be +1 or -1, got {value!r}")


def as_vector(coords: Iterable[float], d: Optional[int] = None) -> Vector:
    """
    Validate coordinates and return a read-only float64 vector.

    Args:
        coords: Any iterable of real numbers.
        d: Expected dimension; a mismatch raises DimensionError.

    Returns:
        np.ndarray: One-dimensional, finite, read-only.
    """
    vec = np.array(list(coords) if not isinstance(coords, np.ndarray) else coords, dtype=np.float64)
    if vec.ndim != 1 or vec.size < 1:
        raise DimensionError(f"expected a non-empty 1-d vector, got shape {vec.shape}")
    if d is not None and vec.size != d:
        raise DimensionError(f"expected dimension {d}, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise ParameterError(f"vector has non-finite coordinates: {vec.tolist()}")
    vec.flags.writeable = False
    return vec


def zeros(d: int) -> Vector:
    """The zero weight vector of dimension d."""
    if d < 1:
        raise DimensionError(f"dimension must be at least 1, got {d}")
    vec = np.zeros(d, dtype=np.float64)
    vec.flags.writeable = False
    return vec


def _check_same_dimension(a: Vector, b: Vector) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")


def norm(w: Vector) -> float:
    return float(np.linalg.norm(w))


@dataclass(frozen=True)
class GroundTruth:
    """A perfect separator w* of margin gamma = 1/|w*|."""

    w_star: Vector

    @property
    def gamma(self) -> float:
        return 1.0 / norm(self.w_star)

    @classmethod
    def from_coords(cls, coords: Sequence[float]) -> "GroundTruth":
        w_star = as_vector(coords)
        if norm(w_star) == 0.0:
            raise ParameterError("w* must be nonzero")
        return cls(w_star=w_star)


@dataclass(frozen=True)
class L2Cost:
    """ℓ2 manipulation cost: moving distance alpha costs exactly 1."""

    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ParameterError(f"ℓ2 budget alpha must be finite and >= 0, got {self.alpha}")

    @property
    def alpha_max(self) -> float:
        return float(self.alpha)

    def to_json(self) -> dict:
        return {"kind": "l2", "alpha": self.alpha}


@dataclass(frozen=True)
class WeightedL1Cost:
    """
    Weighted ℓ1 manipulation cost with per-coordinate budgets alpha_i = 1/c_i.

    A budget of 0 marks a coordinate that cannot be moved at any price.
    """

    alphas: Tuple[float, ...]

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas:
            raise ParameterError("weighted ℓ1 cost needs at least one budget")
        for i, a in enumerate(alphas):
            if math.isnan(a) or a < 0 or math.isinf(a):
                raise ParameterError(f"budget alpha_{i + 1} must be finite and >= 0, got {a}")
        object.__setattr__(self, "alphas", alphas)

    @property
    def d(self) -> int:
        return len(self.alphas)

    @property
    def alpha_max(self) -> float:
        return max(self.alphas)

    def as_array(self) -> Vector:
        return as_vector(self.alphas)

    def to_json(self) -> dict:
        return {"kind": "weighted-l1", "alphas": list(self.alphas)}


CostModel = Union[L2Cost, WeightedL1Cost]


def cost_model_from_json(payload: dict) -> CostModel:
    kind = payload.get("kind")
    if kind == "l2":
        return L2Cost(alpha=float(payload["alpha"]))
    if kind == "weighted-l1":
        return WeightedL1Cost(alphas=tuple(payload["alphas"]))
    raise ParameterError(f"unknown cost model kind {kind!r}")


# =============================================================================
# MARGIN ARITHMETIC
# =============================================================================

def normalized_margin(w: Vector, x: Vector) -> float:
    """
    Return x·w / |w|, the signed distance of x from the hyperplane w·x = 0.

    Raises:
        UndefinedMarginError: if w is the zero vector.
    """
    _check_same_dimension(w, x)
    w_norm = norm(w)
    if w_norm == 0.0:
        raise UndefinedMarginError("undefined margin: |w| = 0")
    return float(np.dot(x, w)) / w_norm


def sign_predict(value: float) -> Label:
    """Positive iff value >= 0; sgn(0) is positive."""
    if not math.isfinite(value):
        raise ParameterError(f"cannot take the sign of {value}")
    return Label.POSITIVE if value >= 0 else Label.NEGATIVE


def _tolerance(dot: float) -> float:
    return EPS_EQ * max(1.0, abs(dot))


def threshold_gap(x: Vector, w: Vector, threshold: float) -> float:
    """
    Signed raw gap x·w − T|w| with values within EPS_EQ snapped to 0.

    Working on the raw form avoids dividing by |w|.
    """
    _check_same_dimension(w, x)
    dot = float(np.dot(x, w))
    gap = dot - threshold * norm(w)
    if abs(gap) <= _tolerance(dot):
        return 0.0
    return gap


def on_threshold(x: Vector, w: Vector, threshold: float) -> bool:
    """True when x·w/|w| equals threshold up to EPS_EQ (raw form)."""
    return threshold_gap(x, w, threshold) == 0.0


def in_open_band(x: Vector, w: Vector, lo: float, hi: float) -> bool:
    """True when lo < x·w/|w| < hi strictly, with both edges EPS_EQ-guarded."""
    if hi <= lo or norm(w) == 0.0:
        return False
    return threshold_gap(x, w, lo) > 0.0 and threshold_gap(x, w, hi) < 0.0


def _to_fraction(value: float) -> Fraction:
    return Fraction(value)


def exact_margin_sign(x: Sequence[float], w: Sequence[float], threshold: float) -> int:
    """
    Exact sign of x·w − T|w|, computed over the rationals.

    |w| is irrational in general, so the comparison of x·w against T|w| is
    decided through the squares (x·w)² vs T²|w|², guarded by the signs of
    both sides.
    """
    if len(x) != len(w):
        raise DimensionError(f"dimension mismatch: {len(x)} vs {len(w)}")
    dot = sum((_to_fraction(a) * _to_fraction(b) for a, b in zip(x, w)), Fraction(0))
    t = _to_fraction(threshold)
    norm_sq = sum((_to_fraction(b) ** 2 for b in w), Fraction(0))
    rhs_sign = (t > 0) - (t < 0) if norm_sq != 0 else 0
    lhs_sign = (dot > 0) - (dot < 0)
    if lhs_sign != rhs_sign or lhs_sign == 0:
        return (lhs_sign > rhs_sign) - (lhs_sign < rhs_sign)
    lhs_sq = dot * dot
    rhs_sq = t * t * norm_sq
    magnitude = (lhs_sq > rhs_sq) - (lhs_sq < rhs_sq)
    return magnitude if lhs_sign > 0 else -magnitude


# =============================================================================
# SERIALIZATION
# =============================================================================

def vector_to_json(v: Vector) -> List[float]:
    return [float(c) for c in v]


def vector_from_json(payload: Sequence[float], d: Optional[int] = None) -> Vector:
    if not isinstance(payload, (list, tuple)):
        raise ParameterError(f"vector must be a JSON array, got {type(payload).__name__}")
    for c in payload:
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise ParameterError(f"vector coordinates must be numbers, got {c!r}")
    return as_vector(payload, d=d)


# =============================================================================
# MAIN
# =============================================================================

def main(args_list: Optional[list] = None) -> None:
    """Print the normalized margin of x under w and the resulting label."""
    parser = argparse.ArgumentParser(description="Evaluate x·w/|w| and its sign.")
    parser.add_argument("--w", type=float, nargs="+", required=True, help="Weight vector coordinates.")
    parser.add_argument("--x", type=float, nargs="+", required=True, help="Point coordinates.")
    args = parser.parse_args(args_list)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

    w = as_vector(args.w)
    x = as_vector(args.x, d=w.size)
    margin = normalized_margin(w, x)
    logging.info(f"x·w/|w| = {margin!r}")
    print(f"{margin!r} {int(sign_predict(margin)):+d}")


if __name__ == "__main__":
    main()
