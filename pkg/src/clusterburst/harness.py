"""Headless runners: single games, parallel batches, and replay checking.

run_game drives a state to the end of its clock under a policy, collecting
burst and tap events plus audit counters, and can write a replay log.
batch fans games out over a thread pool (the compiled kernels drop the
GIL) and reduces in seed order, so metrics are identical no matter how
many workers ran them.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .ai import AssistConfig, NoviceConfig, PolicyId, assistant_act, novice_act
from .definition import KINDS, BallKind, GameDefinition, definition_hash
from .replay import ReplayLog, read_replay, write_replay
from .rng import SplitMix64, derive_seed
from .rules import InputEvent, TapResult, TapSource, _tap_result_from_row
from .state import GameState, init_state

WORKERS_ENV = "CLUSTERBURST_WORKERS"

# sub-stream index for policy randomness, decorrelated from the physics RNG
STREAM_POLICY = 1


@dataclass(frozen=True)
class BurstEvent:
    tick: int
    kind: BallKind
    size: int


@dataclass(frozen=True)
class GameResult:
    """Everything observable from one headless run."""

    final_score: int
    ticks: int
    seed: int
    definition_hash: str
    state_hash: str  # final rolling digest, hex
    burst_events: tuple[BurstEvent, ...]
    tap_events: tuple[TapResult, ...]
    counters: dict[str, tuple[int, int]]  # per-kind audit totals

    def bursts_by_kind(self) -> dict[BallKind, int]:
        out = {k: 0 for k in KINDS}
        for ev in self.burst_events:
            out[ev.kind] += 1
        return out


@dataclass(frozen=True)
class LevelStats:
    level: float | None
    runs: int
    mean_score: float
    score_variance: float
    bursts_per_kind: tuple[float, float]  # mean burst events per game


@dataclass(frozen=True)
class BatchMetrics:
    runs: int
    mean_score: float
    score_variance: float
    bursts_per_kind: tuple[float, float]
    difficulty_gap: float | None  # mean score at assist 1.0 minus at 0.0
    per_level: tuple[LevelStats, ...]


class _Schedule:
    """Kernel-ready tap schedule (sorted by tick, stable)."""

    def __init__(self, entries):
        entries = sorted(entries, key=lambda t: t[0])
        n = len(entries)
        self.tick = np.array([e[0] for e in entries], dtype=np.int64)
        self.mode = np.array([e[1] for e in entries], dtype=np.int64)
        self.x = np.array([e[2] for e in entries], dtype=np.float64)
        self.y = np.array([e[3] for e in entries], dtype=np.float64)
        self.target = np.array([e[4] for e in entries], dtype=np.int64)
        self.source = np.array([e[5] for e in entries], dtype=np.int64)
        self.n = n


def advance(state: GameState, n_ticks: int, schedule_entries=(),
            record: bool = True, hash_on: bool = True):
    """Run up to n_ticks full ticks through the compiled fast path.

    schedule_entries rows are (tick, mode, x, y, target_id, source).
    Returns (ticks_done, spawns, exits, bursts, tap_results) with events as
    plain tuples in occurrence order.
    """
    pack = state.pack
    cap = pack.capacity
    sched = _Schedule(schedule_entries)
    buf = max(4096, cap + 1)
    ev_spawn = np.zeros((buf, 2), dtype=np.int64)
    ev_exit = np.zeros((buf, 4), dtype=np.int64)
    ev_burst = np.zeros((buf, 3), dtype=np.int64)
    ev_tap = np.zeros((sched.n + 1, 5), dtype=np.int64)
    ev_tap_xy = np.zeros((sched.n + 1, 2), dtype=np.float64)
    ev_counts = np.zeros(4, dtype=np.int64)
    empty_deltas = np.zeros(0, dtype=np.int64)

    spawns: list[tuple[int, int]] = []
    exits: list[tuple[int, int, int, int]] = []
    bursts: list[BurstEvent] = []
    taps: list[TapResult] = []
    done_total = 0
    tap_start = 0
    while done_total < n_ticks and not state.finished:
        done, consumed = K.k_advance(
            state.istate, state.fstate, state.ustate,
            state.bid, state.bkind, state.bx, state.by, state.bvx, state.bvy,
            state.brad,
            pack.thr, pack.burst, pack.tapact, pack.tapscore, pack.cap,
            pack.rad, pack.phys,
            pack.sp_lo, pack.sp_hi, pack.sp_off, pack.segs,
            pack.ex_edge, pack.ex_lo, pack.ex_hi, pack.ex_score,
            pack.duration_ticks, n_ticks - done_total,
            sched.tick, sched.mode, sched.x, sched.y, sched.target,
            sched.source, tap_start,
            ev_spawn, ev_exit, ev_burst, ev_tap, ev_tap_xy, ev_counts,
            state._remove, state._parent, state._sizes,
            1 if record else 0, 1 if hash_on else 0, empty_deltas,
        )
        for i in range(int(ev_counts[0])):
            spawns.append((int(ev_spawn[i, 0]), int(ev_spawn[i, 1])))
        for i in range(int(ev_counts[1])):
            exits.append(tuple(int(v) for v in ev_exit[i]))
        for i in range(int(ev_counts[2])):
            bursts.append(BurstEvent(int(ev_burst[i, 0]),
                                     BallKind(int(ev_burst[i, 1])),
                                     int(ev_burst[i, 2])))
        for i in range(int(ev_counts[3])):
            taps.append(_tap_result_from_row(ev_tap[i], ev_tap_xy[i]))
        ev_counts[:] = 0
        tap_start += int(consumed)
        done_total += int(done)
        if done == 0 and not state.finished:
            raise RuntimeError("advance made no progress")  # buffers >= cap+1
    return done_total, tuple(spawns), tuple(exits), tuple(bursts), tuple(taps)


def _audit_counters(state: GameState) -> dict[str, tuple[int, int]]:
    slots = {
        "fill_spawns": K.I_FILL,
        "respawn_spawns": K.I_CONSUMED,
        "pending_respawns": K.I_PEND,
        "queued_respawns": K.I_QUEUED,
        "burst_removed": K.I_BURST_REM,
        "destroy_removed": K.I_DESTROY_REM,
        "tap_explode_removed": K.I_TAPEXP_REM,
        "exit_removed": K.I_EXIT_REM,
        "tap_hits": K.I_TAP_HITS,
        "max_seen": K.I_MAX_SEEN,
    }
    return {
        name: (int(state.istate[base]), int(state.istate[base + 1]))
        for name, base in slots.items()
    }


def run_game(definition: GameDefinition,
             policy: PolicyId = PolicyId.IDLE,
             assist_cfg: AssistConfig | None = None,
             seed: int = 0,
             duration_override: float | None = None,
             log_path=None,
             novice_cfg: NoviceConfig = NoviceConfig()) -> GameResult:
    """Play one full game headlessly; deterministic in all arguments.

    Untimed definitions need a duration_override.  When log_path is given,
    a replay log reproducing this run bit-exactly is written there.
    """
    state = init_state(definition, seed, duration_override)
    horizon = state.pack.duration_ticks
    if horizon == 0 and not state.finished:
        raise ValueError("untimed definition: pass duration_override")
    if policy is PolicyId.ASSISTANT and assist_cfg is None:
        raise ValueError("assistant policy requires assist_cfg")

    bursts: list[BurstEvent] = []
    taps: list[TapResult] = []
    if policy is PolicyId.IDLE:
        _, _, _, bursts_t, taps_t = advance(state, horizon)
        bursts.extend(bursts_t)
        taps.extend(taps_t)
    else:
        period = (assist_cfg.decision_period if policy is PolicyId.ASSISTANT
                  else novice_cfg.decision_period)
        policy_rng = SplitMix64(derive_seed(seed, STREAM_POLICY))
        while not state.finished:
            entries = []
            if policy is PolicyId.ASSISTANT:
                plan = assistant_act(state, assist_cfg, policy_rng)
                if plan is not None:
                    entries.append((plan.due_tick, K.TAP_TARGETED, 0.0, 0.0,
                                    plan.target_id, int(plan.source)))
            else:
                ev = novice_act(state, policy_rng, novice_cfg)
                if ev is not None:
                    entries.append((ev.time, K.TAP_POSITIONAL, ev.x, ev.y,
                                    -1, int(ev.source)))
            chunk = min(period, horizon - state.tick)
            _, _, _, bursts_t, taps_t = advance(state, chunk, entries)
            bursts.extend(bursts_t)
            taps.extend(taps_t)

    result = GameResult(
        final_score=state.score,
        ticks=state.tick,
        seed=seed,
        definition_hash=definition_hash(definition),
        state_hash=f"{state.state_hash:016x}",
        burst_events=tuple(bursts),
        tap_events=tuple(taps),
        counters=_audit_counters(state),
    )
    if log_path is not None:
        inputs = tuple(
            InputEvent(t.time, t.x, t.y, t.source) for t in result.tap_events
        )
        write_replay(log_path, ReplayLog(
            definition=definition,
            seed=seed,
            duration_override=duration_override,
            inputs=inputs,
            final_ticks=result.ticks,
            final_score=result.final_score,
            final_state_hash=int(result.state_hash, 16),
        ))
    return result


def replay_run(log: ReplayLog) -> GameState:
    """Re-simulate a parsed log and return the resulting state."""
    state = init_state(log.definition, log.seed, log.duration_override)
    horizon = state.pack.duration_ticks
    entries = [
        (e.time, K.TAP_POSITIONAL, e.x, e.y, -1, int(e.source))
        for e in log.inputs
    ]
    if horizon > 0:
        advance(state, horizon, entries, record=False)
    return state


def replay_verify(path) -> bool:
    """True iff re-simulating the log reproduces it bit-exactly.

    Raises ReplayError for unreadable logs, incompatible engine builds, and
    definition digest mismatches.
    """
    log = read_replay(path)
    state = replay_run(log)
    return (state.tick == log.final_ticks
            and state.score == log.final_score
            and state.state_hash == log.final_state_hash)


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def _mean(xs) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def _variance(xs) -> float:
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return sum((x - m) ** 2 for x in xs) / (len(xs) - 1)


def batch(definition: GameDefinition,
          n: int,
          policy: PolicyId = PolicyId.IDLE,
          assist_levels: tuple[float, ...] = (),
          base_seed: int = 0,
          workers: int | None = None,
          duration_override: float | None = None,
          novice_cfg: NoviceConfig = NoviceConfig(),
          assist_template: AssistConfig | None = None) -> BatchMetrics:
    """n games per assist level with seeds base_seed + i; order-independent.

    Games run in a thread pool but results reduce in (level, seed) order,
    so the metrics never depend on scheduling or worker count.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if policy is PolicyId.ASSISTANT:
        levels: tuple[float | None, ...] = tuple(assist_levels) or (1.0,)
    else:
        levels = (None,)

    def job(level, i):
        cfg = None
        if level is not None:
            base = assist_template or AssistConfig(level=0.0)
            cfg = AssistConfig(level=level,
                               decision_period=base.decision_period,
                               reaction_jitter=base.reaction_jitter)
        return run_game(definition, policy, cfg, base_seed + i,
                        duration_override, novice_cfg=novice_cfg)

    results: dict[tuple[int, int], GameResult] = {}
    with ThreadPoolExecutor(max_workers=workers or _default_workers()) as pool:
        futures = {
            pool.submit(job, level, i): (li, i)
            for li, level in enumerate(levels)
            for i in range(n)
        }
        for fut, key in futures.items():
            results[key] = fut.result()

    per_level: list[LevelStats] = []
    level_means: dict[float | None, float] = {}
    for li, level in enumerate(levels):
        ordered = [results[(li, i)] for i in range(n)]
        scores = [r.final_score for r in ordered]
        bursts_pos = [r.bursts_by_kind()[BallKind.POSITIVE] for r in ordered]
        bursts_neg = [r.bursts_by_kind()[BallKind.NEGATIVE] for r in ordered]
        stats = LevelStats(
            level=level,
            runs=n,
            mean_score=_mean(scores),
            score_variance=_variance(scores),
            bursts_per_kind=(_mean(bursts_pos), _mean(bursts_neg)),
        )
        per_level.append(stats)
        level_means[level] = stats.mean_score

    all_scores = [results[(li, i)].final_score
                  for li in range(len(levels)) for i in range(n)]
    all_pos = [results[(li, i)].bursts_by_kind()[BallKind.POSITIVE]
               for li in range(len(levels)) for i in range(n)]
    all_neg = [results[(li, i)].bursts_by_kind()[BallKind.NEGATIVE]
               for li in range(len(levels)) for i in range(n)]
    gap = None
    if 1.0 in level_means and 0.0 in level_means:
        gap = level_means[1.0] - level_means[0.0]
    return BatchMetrics(
        runs=len(all_scores),
        mean_score=_mean(all_scores),
        score_variance=_variance(all_scores),
        bursts_per_kind=(_mean(all_pos), _mean(all_neg)),
        difficulty_gap=gap,
        per_level=tuple(per_level),
    )


def measure_throughput(definition: GameDefinition, seed: int = 7,
                       sim_seconds: float = 20.0, repeats: int = 3) -> float:
    """Simulated ticks per wall-clock second for one headless game."""
    best = 0.0
    for r in range(repeats):
        state = init_state(definition, seed + r)
        t0 = time.perf_counter()
        advance(state, int(sim_seconds * 60), record=False, hash_on=False)
        dt = time.perf_counter() - t0
        if dt > 0:
            best = max(best, state.tick / dt)
    return best
