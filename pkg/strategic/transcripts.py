#!/usr/bin/env python3
"""
transcripts.py

Reading and writing run transcripts.

  - CSV (pandas): one row per round with the columns
    t, z, x, x_tilde, prediction, truth, mistake, w_after, alpha_published,
    phase, event, agent_cost. Vectors are semicolon-joined shortest
    round-trip decimals; x_tilde is empty on rounds without an update.
  - JSON Lines: a header object with the configs and stream metadata, then
    one object per round with every float written as float.hex(), so a
    transcript can be re-executed and compared bit for bit.

Usage example (CLI):
    python transcripts.py --jsonl run.jsonl --csv run.csv
"""

import argparse
import json
import logging
from typing import List, Optional

import pandas as pd

from core_types import StreamFormatError, Vector, as_vector, label_from_int
from harness import AgentConfig, LearnerConfig, RoundRecord, Transcript

# =============================================================================
# MODULE PUBLIC API
# =============================================================================
__all__ = [
    "CSV_COLUMNS",
    "transcript_frame",
    "write_transcript_csv",
    "write_transcript_jsonl",
    "read_transcript_jsonl",
    "main",
]

# =============================================================================
# CONSTANTS SECTION
# =============================================================================

#: Column order of transcript CSV files.
CSV_COLUMNS: List[str] = [
    "t",
    "z",
    "x",
    "x_tilde",
    "prediction",
    "truth",
    "mistake",
    "w_after",
    "alpha_published",
    "phase",
    "event",
    "agent_cost",
]

#: Value of the "type" key on the first line of a JSONL transcript.
HEADER_TYPE: str = "header"

#: Value of the "type" key on every round line.
ROUND_TYPE: str = "round"


# =============================================================================
# CSV
# =============================================================================

def _join(v: Optional[Vector]) -> str:
    if v is None:
        return ""
    return ";".join(repr(float(c)) for c in v)


def transcript_frame(transcript: Transcript) -> pd.DataFrame:
    """The transcript as a DataFrame with CSV_COLUMNS."""
    rows = [
        {
            "t": r.t,
            "z": _join(r.z),
            "x": _join(r.x),
            "x_tilde": _join(r.x_tilde),
            "prediction": int(r.prediction),
            "truth": int(r.truth),
            "mistake": int(r.mistake),
            "w_after": _join(r.w_after),
            "alpha_published": r.alpha_published,
            "phase": r.phase,
            "event": r.event,
            "agent_cost": r.agent_cost,
        }
        for r in transcript.rounds
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_transcript_csv(transcript: Transcript, path: str) -> None:
    transcript_frame(transcript).to_csv(path, index=False, lineterminator="\n")
    logging.info(f"Wrote {len(transcript.rounds)} rounds to '{path}'.")


# =============================================================================
# JSON LINES WITH HEX FLOATS
# =============================================================================

def _hex_vector(v: Optional[Vector]) -> Optional[List[str]]:
    if v is None:
        return None
    return [float(c).hex() for c in v]


def _unhex_vector(payload: Optional[List[str]]) -> Optional[Vector]:
    if payload is None:
        return None
    return as_vector(float.fromhex(c) for c in payload)


def _round_to_json(r: RoundRecord) -> dict:
    return {
        "type": ROUND_TYPE,
        "t": r.t,
        "z": _hex_vector(r.z),
        "x": _hex_vector(r.x),
        "x_tilde": _hex_vector(r.x_tilde),
        "prediction": int(r.prediction),
        "truth": int(r.truth),
        "mistake": r.mistake,
        "w_before": _hex_vector(r.w_before),
        "w_updated": _hex_vector(r.w_updated),
        "w_after": _hex_vector(r.w_after),
        "alpha_published": r.alpha_published.hex(),
        "threshold": r.threshold.hex(),
        "alpha_lo": r.alpha_lo.hex(),
        "phase": r.phase,
        "event": r.event,
        "agent_cost": r.agent_cost.hex(),
        "moved": r.moved,
        "mus": _hex_vector(r.mus),
        "eta": r.eta.hex() if r.eta is not None else None,
        "dir_index": r.dir_index,
        "violation": r.violation,
    }


def _round_from_json(payload: dict) -> RoundRecord:
    eta = payload.get("eta")
    return RoundRecord(
        t=int(payload["t"]),
        z=_unhex_vector(payload["z"]),
        x=_unhex_vector(payload["x"]),
        x_tilde=_unhex_vector(payload.get("x_tilde")),
        prediction=label_from_int(payload["prediction"]),
        truth=label_from_int(payload["truth"]),
        mistake=bool(payload["mistake"]),
        w_before=_unhex_vector(payload["w_before"]),
        w_updated=_unhex_vector(payload["w_updated"]),
        w_after=_unhex_vector(payload["w_after"]),
        alpha_published=float.fromhex(payload["alpha_published"]),
        threshold=float.fromhex(payload["threshold"]),
        alpha_lo=float.fromhex(payload["alpha_lo"]),
        phase=int(payload["phase"]),
        event=payload["event"],
        agent_cost=float.fromhex(payload["agent_cost"]),
        moved=bool(payload["moved"]),
        mus=_unhex_vector(payload.get("mus")),
        eta=float.fromhex(eta) if eta is not None else None,
        dir_index=payload.get("dir_index"),
        violation=bool(payload.get("violation", False)),
    )


def write_transcript_jsonl(transcript: Transcript, path: str) -> None:
    header = {
        "type": HEADER_TYPE,
        "learner": transcript.learner_config.to_json(),
        "agent": transcript.agent_config.to_json(),
        "stream": transcript.stream_meta,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(header, separators=(",", ":")) + "\n")
        for r in transcript.rounds:
            f.write(json.dumps(_round_to_json(r), separators=(",", ":")) + "\n")
    logging.info(f"Wrote {len(transcript.rounds)} rounds to '{path}'.")


def read_transcript_jsonl(path: str) -> Transcript:
    """
    Load a transcript written by write_transcript_jsonl.

    Raises:
        StreamFormatError: for a missing header or a malformed line.
    """
    transcript: Optional[Transcript] = None
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as e:
                raise StreamFormatError(f"invalid JSON: {e.msg}", line_number) from e
            kind = payload.get("type") if isinstance(payload, dict) else None
            if transcript is None:
                if kind != HEADER_TYPE:
                    raise StreamFormatError("transcript must start with a header line", line_number)
                transcript = Transcript(
                    rounds=[],
                    learner_config=LearnerConfig.from_json(payload["learner"]),
                    agent_config=AgentConfig.from_json(payload["agent"]),
                    stream_meta=payload.get("stream") or {},
                )
                continue
            if kind != ROUND_TYPE:
                raise StreamFormatError(f"unexpected line type {kind!r}", line_number)
            try:
                transcript.rounds.append(_round_from_json(payload))
            except (KeyError, TypeError, ValueError) as e:
                raise StreamFormatError(f"malformed round: {e}", line_number) from e
    if transcript is None:
        raise StreamFormatError("empty transcript file")
    logging.info(f"Loaded {len(transcript.rounds)} rounds from '{path}'.")
    return transcript


# =============================================================================
# MAIN
# =============================================================================

def main(args_list: Optional[list] = None) -> None:
    """Convert a JSONL transcript to the CSV layout."""
    parser = argparse.ArgumentParser(description="Convert a JSONL transcript to CSV.")
    parser.add_argument("--jsonl", type=str, required=True, help="Input JSONL transcript.")
    parser.add_argument("--csv", type=str, required=True, help="Output CSV path.")
    args = parser.parse_args(args_list)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

    write_transcript_csv(read_transcript_jsonl(args.jsonl), args.csv)


if __name__ == "__main__":
    main()
