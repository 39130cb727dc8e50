#!/usr/bin/env python3
"""
streams.py

Sources of labeled true points z_t:

  - generate_separable_stream: seeded random streams, uniform in the R-ball,
    rejection-sampled so every point has |z·w*| >= 1 under a separator of
    margin gamma = 1/|w*|. iter_separable_stream draws the same records lazily.
  - example1_stream / example2_stream: the adversarial fixtures that make
    the classic Perceptron cycle and the strategic Perceptron fail on
    inseparable data. Both are infinite iterators.
  - load_stream / save_stream: JSON Lines replay files, one
    {"z": [...], "label": +1|-1} object per line.

Fixtures carry their own cost model and separator in FIXTURES, so harness
commands can run them without extra flags.

Usage examples (CLI):
    python streams.py --d 5 --R 10 --gamma 0.5 --length 1000 --seed 7 --out stream.jsonl
    python streams.py --fixture example2 --length 9 --out example2.jsonl
"""

import argparse
import itertools
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from core_types import (
    CostModel,
    DimensionError,
    L2Cost,
    Label,
    MarginTooDemandingError,
    ParameterError,
    StreamFormatError,
    Vector,
    WeightedL1Cost,
    as_vector,
    label_from_int,
    norm,
    vector_from_json,
    vector_to_json,
)

# =============================================================================
# MODULE PUBLIC API
# =============================================================================
__all__ = [
    "StreamSpec",
    "StreamRecord",
    "Fixture",
    "FIXTURES",
    "generate_separable_stream",
    "iter_separable_stream",
    "sample_w_star",
    "stream_w_star",
    "generated_meta",
    "example1_stream",
    "example2_stream",
    "tie_stream",
    "take",
    "load_stream",
    "save_stream",
    "main",
]

# =============================================================================
# CONSTANTS SECTION
# =============================================================================

#: Rejected draws allowed per emitted point before giving up.
MAX_REJECTIONS_PER_POINT: int = 10 ** 4

#: Separator certified for both Example-1 variants: A·w*, B·w* >= 1 and C·w* <= -1.
EXAMPLE1_W_STAR: Sequence[float] = (4.0, -1.0)

#: Vertical separator of Example 2; it misclassifies z_0 only.
EXAMPLE2_REFERENCE_W: Sequence[float] = (1.0, 0.0)


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class StreamRecord:
    z: Vector
    label: Label

    def to_json(self) -> dict:
        return {"z": vector_to_json(self.z), "label": int(self.label)}


@dataclass(frozen=True)
class StreamSpec:
    """
    Parameters of a random separable stream.

    w_star is sampled (norm 1/gamma) when absent; coordinate_sign_constraint
    keeps it in the nonnegative orthant, as weighted-ℓ1 runs require.
    """

    d: int
    R: float
    gamma: float
    length: int
    seed: int = 0
    w_star: Optional[Sequence[float]] = None
    label_mix: float = 0.5
    coordinate_sign_constraint: bool = False

    def to_json(self) -> dict:
        return {
            "kind": "generated",
            "d": self.d,
            "R": self.R,
            "gamma": self.gamma,
            "length": self.length,
            "seed": self.seed,
            "w_star": list(self.w_star) if self.w_star is not None else None,
            "label_mix": self.label_mix,
            "coordinate_sign_constraint": self.coordinate_sign_constraint,
        }


@dataclass(frozen=True)
class Fixture:
    """A hand-built stream together with the metadata needed to run it."""

    fixture_id: str
    factory: Callable[[], Iterator[StreamRecord]]
    cost_model: CostModel
    w_star: Optional[Sequence[float]]
    R: float
    separable: bool
    description: str = ""
    zero_prediction: Label = Label.POSITIVE

    def records(self) -> Iterator[StreamRecord]:
        return self.factory()

    def meta(self) -> dict:
        return {
            "kind": "fixture",
            "fixture_id": self.fixture_id,
            "cost_model": self.cost_model.to_json(),
            "w_star": list(self.w_star) if self.w_star is not None else None,
            "R": self.R,
            "separable": self.separable,
            "zero_prediction": int(self.zero_prediction),
        }


# =============================================================================
# RANDOM SEPARABLE STREAMS
# =============================================================================

def _validate_spec(spec: StreamSpec) -> None:
    if spec.d < 1:
        raise ParameterError(f"dimension must be >= 1, got {spec.d}")
    if not spec.gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {spec.gamma}")
    if spec.R < spec.gamma:
        raise ParameterError(f"infeasible stream: R={spec.R} < gamma={spec.gamma} admits no point with |z·w*| >= 1")
    if spec.length < 0:
        raise ParameterError(f"length must be >= 0, got {spec.length}")
    if not 0.0 <= spec.label_mix <= 1.0:
        raise ParameterError(f"label_mix must lie in [0, 1], got {spec.label_mix}")


def sample_w_star(rng: np.random.Generator, d: int, gamma: float, nonnegative: bool = False) -> Vector:
    """A uniformly random direction scaled to |w*| = 1/gamma."""
    while True:
        direction = rng.standard_normal(d)
        if nonnegative:
            direction = np.abs(direction)
        length = np.linalg.norm(direction)
        if length > 0.0:
            return as_vector(direction / length / gamma)


def _resolve_w_star(spec: StreamSpec, rng: np.random.Generator) -> Vector:
    if spec.w_star is None:
        return sample_w_star(rng, spec.d, spec.gamma, nonnegative=spec.coordinate_sign_constraint)
    w_star = as_vector(spec.w_star, d=spec.d)
    if not math.isclose(norm(w_star), 1.0 / spec.gamma, rel_tol=1e-9):
        raise ParameterError(f"|w*| = {norm(w_star)} does not match 1/gamma = {1.0 / spec.gamma}")
    if spec.coordinate_sign_constraint and np.any(w_star < 0):
        raise ParameterError("coordinate_sign_constraint requires a nonnegative w*")
    return w_star


def _uniform_in_ball(rng: np.random.Generator, d: int, R: float) -> np.ndarray:
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    return direction * R * rng.random() ** (1.0 / d)


def _draw_points(spec: StreamSpec, rng: np.random.Generator, w_star: Vector, signs: np.ndarray) -> Iterator[StreamRecord]:
    for t, sign in enumerate(signs):
        for _ in range(MAX_REJECTIONS_PER_POINT):
            z = _uniform_in_ball(rng, spec.d, spec.R)
            if sign * float(np.dot(z, w_star)) >= 1.0:
                break
        else:
            raise MarginTooDemandingError(
                f"margin too demanding: {MAX_REJECTIONS_PER_POINT} rejections at point {t} "
                f"(d={spec.d}, R={spec.R}, gamma={spec.gamma})"
            )
        yield StreamRecord(z=as_vector(z), label=Label(int(sign)))


def iter_separable_stream(spec: StreamSpec) -> Iterator[StreamRecord]:
    """
    Lazy form of generate_separable_stream: the same records, drawn on demand.

    The spec is validated immediately; MarginTooDemandingError surfaces at
    the point that cannot be drawn.
    """
    _validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    w_star = _resolve_w_star(spec, rng)
    n_positive = int(round(spec.length * spec.label_mix))
    signs = np.array([1] * n_positive + [-1] * (spec.length - n_positive))
    rng.shuffle(signs)
    return _draw_points(spec, rng, w_star, signs)


def generate_separable_stream(spec: StreamSpec) -> List[StreamRecord]:
    """
    Draw spec.length labeled points, deterministic in spec.seed.

    Labels are stratified: round(length·label_mix) positives in a shuffled
    order. Each point is rejection-sampled uniformly from the R-ball until
    label·(z·w*) >= 1; rejection keeps |z| honest, where projecting onto the
    margin would bias it toward R.

    Raises:
        ParameterError: for an infeasible spec (R < gamma and the like).
        MarginTooDemandingError: after MAX_REJECTIONS_PER_POINT misses.
    """
    records = list(iter_separable_stream(spec))
    logging.debug(f"Generated {len(records)} records (d={spec.d}, R={spec.R}, gamma={spec.gamma}, seed={spec.seed})")
    return records


def stream_w_star(spec: StreamSpec) -> Vector:
    """The separator generate_separable_stream uses for spec."""
    return _resolve_w_star(spec, np.random.default_rng(spec.seed))


def generated_meta(spec: StreamSpec) -> dict:
    """Stream metadata for a generated stream, with its resolved separator."""
    meta = spec.to_json()
    meta["w_star"] = vector_to_json(stream_w_star(spec))
    meta["separable"] = True
    return meta


# =============================================================================
# FIXTURES
# =============================================================================

def _record(coords: Sequence[float], label: Label) -> StreamRecord:
    return StreamRecord(z=as_vector(coords), label=label)


def example1_stream(variant: str = "footnote") -> Iterator[StreamRecord]:
    """
    A, then (B, C) forever, with B = (0, -1) positive and C = (-0.5, -1)
    negative. The original variant opens with A = (1, 0) positive and is
    meant for learners that predict everything negative while w = 0; the
    footnote variant opens with A = (-1, 0) negative, so that a learner
    starting out positive follows the same cycle.
    """
    if variant == "original":
        opener = _record((1.0, 0.0), Label.POSITIVE)
    elif variant == "footnote":
        opener = _record((-1.0, 0.0), Label.NEGATIVE)
    else:
        raise ParameterError(f"unknown Example-1 variant {variant!r}; expected 'original' or 'footnote'")
    b = _record((0.0, -1.0), Label.POSITIVE)
    c = _record((-0.5, -1.0), Label.NEGATIVE)
    return itertools.chain([opener], itertools.cycle([b, c]))


def example2_stream() -> Iterator[StreamRecord]:
    """
    z_0 = (-4, -3) positive, then z_1..z_4 repeating with labels -, +, -, +.

    Run it with a learner that predicts everything negative while w = 0:
    z_0 is then a mistake and sets w = (-4, -3).
    """
    opener = _record((-4.0, -3.0), Label.POSITIVE)
    cycle = [
        _record((-1.0, -7.0), Label.NEGATIVE),
        _record((3.0, 2.0), Label.POSITIVE),
        _record((-1.0, 7.0), Label.NEGATIVE),
        _record((3.0, -2.0), Label.POSITIVE),
    ]
    return itertools.chain([opener], itertools.cycle(cycle))


def tie_stream() -> Iterator[StreamRecord]:
    """
    A single negative at (-1, -1), repeated. Under budgets (1, 1) the first
    update leaves w = (1, 1), where both axes are equally attractive to
    agents until the tie-breaking step separates them.
    """
    return itertools.repeat(_record((-1.0, -1.0), Label.NEGATIVE))


def take(stream: Iterable[StreamRecord], n: int) -> List[StreamRecord]:
    return list(itertools.islice(stream, n))


FIXTURES: Dict[str, Fixture] = {
    "example1": Fixture(
        fixture_id="example1",
        factory=lambda: example1_stream("original"),
        cost_model=L2Cost(alpha=0.5),
        w_star=EXAMPLE1_W_STAR,
        R=math.sqrt(1.25),
        separable=True,
        description="A=(1,0)+, then (B,C) repeated; classic Perceptron cycles.",
        zero_prediction=Label.NEGATIVE,
    ),
    "example1-footnote": Fixture(
        fixture_id="example1-footnote",
        factory=lambda: example1_stream("footnote"),
        cost_model=L2Cost(alpha=0.5),
        w_star=EXAMPLE1_W_STAR,
        R=math.sqrt(1.25),
        separable=True,
        description="A=(-1,0)-, then (B,C) repeated; for learners that start predicting positive.",
    ),
    "example2": Fixture(
        fixture_id="example2",
        factory=example2_stream,
        cost_model=L2Cost(alpha=5.0),
        w_star=EXAMPLE2_REFERENCE_W,
        R=math.sqrt(50.0),
        separable=False,
        description="Inseparable data; the strategic ℓ2 Perceptron cycles with period 4.",
        zero_prediction=Label.NEGATIVE,
    ),
    "tie": Fixture(
        fixture_id="tie",
        factory=tie_stream,
        cost_model=WeightedL1Cost(alphas=(1.0, 1.0)),
        w_star=(0.5, 0.5),
        R=math.sqrt(2.0),
        separable=True,
        description="Forces an exact tie in the weighted-ℓ1 manipulation direction.",
    ),
}


# =============================================================================
# JSON LINES REPLAY FILES
# =============================================================================

def _parse_line(line: str, line_number: int, d: Optional[int]) -> StreamRecord:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as e:
        raise StreamFormatError(f"invalid JSON: {e.msg}", line_number) from e
    if not isinstance(payload, dict) or "z" not in payload or "label" not in payload:
        raise StreamFormatError('expected an object with keys "z" and "label"', line_number)
    try:
        z = vector_from_json(payload["z"])
        label = label_from_int(payload["label"])
    except ParameterError as e:
        raise StreamFormatError(str(e), line_number) from e
    if isinstance(payload["label"], bool):
        raise StreamFormatError("label must be +1 or -1, not a boolean", line_number)
    if d is not None and z.size != d:
        raise DimensionError(f"line {line_number}: dimension {z.size} differs from earlier records ({d})")
    return StreamRecord(z=z, label=label)


def load_stream(path: str) -> List[StreamRecord]:
    """
    Read a JSON Lines stream file. Blank lines are skipped.

    Raises:
        StreamFormatError: for a malformed line (with its line number).
        DimensionError: when records disagree on the dimension.
    """
    records: List[StreamRecord] = []
    d: Optional[int] = None
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, line_number, d)
            d = record.z.size
            records.append(record)
    logging.info(f"Loaded {len(records)} records from '{path}'.")
    return records


def save_stream(path: str, records: Iterable[StreamRecord]) -> int:
    """Write records as UTF-8, LF-terminated JSON Lines; returns the count."""
    count = 0
    d: Optional[int] = None
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            if d is not None and record.z.size != d:
                raise DimensionError(f"record {count + 1} has dimension {record.z.size}, expected {d}")
            d = record.z.size
            f.write(json.dumps(record.to_json(), separators=(",", ":")) + "\n")
            count += 1
    logging.info(f"Wrote {count} records to '{path}'.")
    return count


# =============================================================================
# MAIN
# =============================================================================

def main(args_list: Optional[list] = None) -> None:
    """Write a generated or fixture stream to a JSON Lines file."""
    parser = argparse.ArgumentParser(description="Generate a labeled stream as JSON Lines.")
    parser.add_argument("--fixture", choices=sorted(FIXTURES), help="Write a fixture instead of a random stream.")
    parser.add_argument("--d", type=int, default=2, help="Dimension (default: 2).")
    parser.add_argument("--R", type=float, default=1.0, help="Max true-point norm (default: 1).")
    parser.add_argument("--gamma", type=float, default=0.5, help="Margin (default: 0.5).")
    parser.add_argument("--length", type=int, default=100, help="Number of records (default: 100).")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0).")
    parser.add_argument("--out", type=str, required=True, help="Output JSON Lines path.")
    args = parser.parse_args(args_list)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

    if args.fixture:
        records = take(FIXTURES[args.fixture].records(), args.length)
    else:
        records = generate_separable_stream(
            StreamSpec(d=args.d, R=args.R, gamma=args.gamma, length=args.length, seed=args.seed)
        )
    try:
        save_stream(args.out, records)
    except OSError as e:
        logging.error(f"Error writing {args.out}: {e}")
        sys.exit(3)


if __name__ == "__main__":
    main()
