"""Replay logs: seed plus timestamped inputs reproduce a run bit-exactly.

A log is a JSON document carrying the full canonical game definition (and
its digest), the seed, the effective duration, every executed tap, and
the final rolling state hash.  Verification re-simulates the run and
compares tick count, score, and the hash chain; because the chain folds
every tick's quantized positions, any divergence at any step surfaces in
the final value.  See docs/FORMATS.md for the schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .definition import (
    GameDefinition,
    definition_hash,
    deserialize,
    serialize,
)
from .rng import RNG_TAG
from .rules import InputEvent, TapSource

REPLAY_SCHEMA_VERSION = 1
HASH_TAG = "fnv1a64-chain/v1"


class ReplayError(ValueError):
    """A log is unreadable or inconsistent with this engine. See `code`."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class ReplayLog:
    definition: GameDefinition
    seed: int
    duration_override: float | None
    inputs: tuple[InputEvent, ...]
    final_ticks: int
    final_score: int
    final_state_hash: int


def dump_replay(log: ReplayLog) -> str:
    doc = {
        "schema_version": REPLAY_SCHEMA_VERSION,
        "kind": "replay",
        "engine": {
            "rng": RNG_TAG,
            "state_hash": HASH_TAG,
            "ticks_per_second": 60,
        },
        "definition": json.loads(serialize(log.definition)),
        "definition_sha256": definition_hash(log.definition),
        "seed": log.seed,
        "duration_override": log.duration_override,
        "inputs": [
            {
                "tick": e.time,
                "x": e.x,
                "y": e.y,
                "source": e.source.name.lower(),
            }
            for e in log.inputs
        ],
        "final": {
            "ticks": log.final_ticks,
            "score": log.final_score,
            "state_hash": f"{log.final_state_hash:016x}",
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_replay(path: str | Path, log: ReplayLog) -> None:
    Path(path).write_text(dump_replay(log), encoding="utf-8")


def _source_from_name(name: str) -> TapSource:
    try:
        return TapSource[name.upper()]
    except KeyError:
        raise ReplayError("bad_field", f"unknown tap source {name!r}") from None


def parse_replay(text: str) -> ReplayLog:
    """Parse and structurally check a log; raises ReplayError when corrupt."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReplayError("malformed_log", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("kind") != "replay":
        raise ReplayError("malformed_log", "not a replay document")
    if doc.get("schema_version") != REPLAY_SCHEMA_VERSION:
        raise ReplayError("unknown_schema_version",
                          f"replay schema {doc.get('schema_version')!r} not supported")
    engine = doc.get("engine", {})
    if engine.get("rng") != RNG_TAG or engine.get("state_hash") != HASH_TAG:
        raise ReplayError(
            "engine_mismatch",
            f"log was produced by an incompatible engine build: {engine!r}",
        )
    try:
        definition = deserialize(json.dumps(doc["definition"]))
        recorded_hash = doc["definition_sha256"]
        seed = int(doc["seed"])
        duration_override = doc["duration_override"]
        if duration_override is not None:
            duration_override = float(duration_override)
        inputs = tuple(
            InputEvent(int(e["tick"]), float(e["x"]), float(e["y"]),
                       _source_from_name(e["source"]))
            for e in doc["inputs"]
        )
        final = doc["final"]
        log = ReplayLog(
            definition=definition,
            seed=seed,
            duration_override=duration_override,
            inputs=inputs,
            final_ticks=int(final["ticks"]),
            final_score=int(final["score"]),
            final_state_hash=int(final["state_hash"], 16),
        )
    except ReplayError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ReplayError("malformed_log", f"bad replay field: {exc}") from None

    if definition_hash(log.definition) != recorded_hash:
        raise ReplayError(
            "definition_hash_mismatch",
            "embedded definition does not match its recorded digest",
        )
    prev = -1
    for e in log.inputs:
        if e.time < prev:
            raise ReplayError("inputs_out_of_order",
                              "input timestamps must be non-decreasing")
        prev = e.time
    return log


def read_replay(path: str | Path) -> ReplayLog:
    return parse_replay(Path(path).read_text(encoding="utf-8"))
