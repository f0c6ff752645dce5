"""Command-line entry point.

Subcommands: play-headless, batch, generate, balance, validate,
replay-verify, export-preset.  Exit codes: 0 ok, 1 usage error,
2 validation failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ai import AssistConfig, PolicyId
from .definition import (
    PRESET_NAMES,
    DocumentError,
    InvalidDefinition,
    definition_hash,
    deserialize,
    preset,
    serialize,
    validate,
)
from .generator import (
    SamplingConstraints,
    UnsatisfiableConstraints,
    balance_scores,
    compute_balance_report,
    estimate_frequencies,
    generate_balanced,
    is_playable,
)
from .harness import batch, replay_verify, run_game
from .replay import ReplayError
from .rng import SplitMix64

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_VERIFICATION = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_definition(args):
    if getattr(args, "preset", None):
        return preset(args.preset)
    return deserialize(Path(args.definition).read_text(encoding="utf-8"))


def _add_definition_args(p, required=True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--preset", choices=PRESET_NAMES,
                       help="use a built-in game")
    group.add_argument("--def", dest="definition", metavar="FILE",
                       help="load a definition document")


def _policy(name: str) -> PolicyId:
    return PolicyId(name)


def _write_or_print(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_validate(args) -> int:
    try:
        d = deserialize(Path(args.file).read_text(encoding="utf-8"))
    except InvalidDefinition as exc:
        for v in exc.violations:
            print(f"{v.path}: {v.code} ({v.message})")
        return EXIT_VALIDATION
    except (DocumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"valid: {d.name} ({definition_hash(d)[:12]})")
    return EXIT_OK


def _cmd_export_preset(args) -> int:
    _write_or_print(serialize(preset(args.name)), args.out)
    return EXIT_OK


def _cmd_play_headless(args) -> int:
    d = _load_definition(args)
    assist = None
    if args.policy == "assistant":
        assist = AssistConfig(level=args.assist)
    result = run_game(d, _policy(args.policy), assist, seed=args.seed,
                      duration_override=args.duration, log_path=args.log)
    bursts = result.bursts_by_kind()
    summary = {
        "score": result.final_score,
        "ticks": result.ticks,
        "seed": result.seed,
        "bursts": {k.key: v for k, v in bursts.items()},
        "taps": len(result.tap_events),
        "state_hash": result.state_hash,
        "definition_sha256": result.definition_hash,
    }
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    return EXIT_OK


def _cmd_batch(args) -> int:
    d = _load_definition(args)
    levels = tuple(float(x) for x in args.assist.split(",")) if args.assist else ()
    metrics = batch(d, args.games, _policy(args.policy), levels,
                    base_seed=args.seed, workers=args.workers,
                    duration_override=args.duration)
    doc = {
        "runs": metrics.runs,
        "mean_score": metrics.mean_score,
        "score_variance": metrics.score_variance,
        "bursts_per_kind": {
            "positive": metrics.bursts_per_kind[0],
            "negative": metrics.bursts_per_kind[1],
        },
        "difficulty_gap": metrics.difficulty_gap,
        "per_level": [
            {
                "level": s.level,
                "runs": s.runs,
                "mean_score": s.mean_score,
                "score_variance": s.score_variance,
                "bursts_per_kind": {
                    "positive": s.bursts_per_kind[0],
                    "negative": s.bursts_per_kind[1],
                },
            }
            for s in metrics.per_level
        ],
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _report_path(out: str, explicit: str | None) -> Path:
    return Path(explicit) if explicit else Path(out).with_suffix(
        Path(out).suffix + ".report.json")


def _cmd_generate(args) -> int:
    d, report = generate_balanced(SplitMix64(args.seed),
                                  SamplingConstraints(),
                                  n_games=args.games,
                                  tolerance=args.tolerance,
                                  max_attempts=args.attempts,
                                  horizon_seconds=args.horizon)
    Path(args.out).write_text(serialize(d), encoding="utf-8")
    hist = estimate_frequencies(d, args.games, seed=args.seed,
                                horizon_seconds=args.horizon)
    doc = {"balance": report.to_dict(), "histogram": hist.to_dict()}
    _report_path(args.out, args.report).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {args.out} (imbalance {report.imbalance:.3f}"
          f"{', unplayable' if report.unplayable else ''})")
    return EXIT_OK


def _cmd_balance(args) -> int:
    d = _load_definition(args)
    hist = estimate_frequencies(d, args.games, seed=args.seed,
                                horizon_seconds=args.horizon)
    outcome = balance_scores(d, hist, args.tolerance)
    adjusted = outcome.definition
    Path(args.out).write_text(serialize(adjusted), encoding="utf-8")
    doc = {
        "balance": outcome.report.to_dict(),
        "playable": is_playable(adjusted, hist),
        "histogram": hist.to_dict(),
    }
    _report_path(args.out, args.report).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {args.out} (imbalance {outcome.report.imbalance:.3f})")
    return EXIT_OK


def _cmd_replay_verify(args) -> int:
    try:
        ok = replay_verify(args.file)
    except (ReplayError, OSError) as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    if not ok:
        print("replay mismatch: simulation does not reproduce the log")
        return EXIT_VERIFICATION
    print("ok: replay reproduces bit-exactly")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clusterburst",
                     description="cluster-burst game space: play, verify, generate")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a definition document")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("export-preset", help="write a built-in definition")
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(fn=_cmd_export_preset)

    p = sub.add_parser("play-headless", help="run one game without a UI")
    _add_definition_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("idle", "novice", "assistant"),
                   default="idle")
    p.add_argument("--assist", type=float, default=1.0,
                   help="assistant level in [0,1]")
    p.add_argument("--duration", type=float, default=None,
                   help="override game duration in seconds")
    p.add_argument("--log", metavar="FILE", help="write a replay log")
    p.add_argument("--report", metavar="FILE", help="write the summary JSON")
    p.set_defaults(fn=_cmd_play_headless)

    p = sub.add_parser("batch", help="run many games and aggregate metrics")
    _add_definition_args(p)
    p.add_argument("--games", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("idle", "novice", "assistant"),
                   default="idle")
    p.add_argument("--assist", default="",
                   help="comma-separated assist levels, e.g. 0,0.5,1")
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(fn=_cmd_batch)

    p = sub.add_parser("generate", help="sample a balanced new game variant")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--games", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=0.25)
    p.add_argument("--attempts", type=int, default=20)
    p.add_argument("--horizon", type=float, default=45.0,
                   help="seconds of simulated play per balancing game")
    p.add_argument("--out", metavar="FILE", required=True)
    p.add_argument("--report", metavar="FILE")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("balance", help="re-balance an existing definition's scores")
    _add_definition_args(p)
    p.add_argument("--games", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=float, default=45.0)
    p.add_argument("--out", metavar="FILE", required=True)
    p.add_argument("--report", metavar="FILE")
    p.set_defaults(fn=_cmd_balance)

    p = sub.add_parser("replay-verify", help="re-simulate a log and compare")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_replay_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidDefinition, DocumentError, UnsatisfiableConstraints) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ReplayError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
