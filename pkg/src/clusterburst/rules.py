"""Game semantics over the physics layer.

Clusters are maximal connected components of the same-kind contact graph;
a component bursts the tick its size first reaches the kind's threshold.
Taps hit the nearest ball within radius + slop and apply the kind's tap
action.  A tick runs in a fixed order: taps, physics step, exit scoring,
cluster detection, bursts.

tick() composes exactly the compiled pieces the batch runner executes, so
interactive play, replay verification, and headless batches stay bitwise
identical.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .definition import KINDS, BallKind, GameDefinition, TapAction
from .state import ExitedBall, GameState, SimulationError, StepEvents, contact_graph

TAP_SLOP = K.TAP_SLOP
IMPULSE_KICK = K.IMPULSE_KICK


class TapSource(enum.IntEnum):
    HUMAN = K.SRC_HUMAN
    ASSISTANT = K.SRC_ASSISTANT
    POLICY = K.SRC_POLICY


class TapOutcome(enum.IntEnum):
    MISS = K.OUT_MISS
    EXPLODED = K.OUT_EXPLODED
    DESTROYED = K.OUT_DESTROYED
    IMPULSED = K.OUT_IMPULSED
    NO_ACTION = K.OUT_NO_ACTION


@dataclass(frozen=True)
class InputEvent:
    """A timestamped tap; the unit the replay log stores."""

    time: int  # tick index
    x: float
    y: float
    source: TapSource = TapSource.HUMAN


@dataclass(frozen=True)
class TapResult:
    time: int
    source: TapSource
    outcome: TapOutcome
    target_id: int | None
    score_delta: int
    x: float
    y: float


@dataclass(frozen=True)
class Cluster:
    kind: BallKind
    ball_ids: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.ball_ids)


@dataclass(frozen=True)
class ClusterReport:
    """Components at or over threshold, ordered by smallest member id."""

    clusters: tuple[Cluster, ...]

    def __bool__(self) -> bool:
        return bool(self.clusters)


@dataclass(frozen=True)
class TickReport:
    """Everything one tick did; the wire unit for UIs and loggers."""

    tick: int
    events: StepEvents
    clusters: ClusterReport
    tap_results: tuple[TapResult, ...]
    tap_delta: int
    exit_delta: int
    burst_delta: int
    score_delta: int
    score_after: int
    finished: bool

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "contacts_changed": self.events.contacts_changed,
            "spawned": list(self.events.spawned),
            "exited": [
                {"ball_id": e.ball_id, "region_id": e.region_id, "kind": e.kind.key}
                for e in self.events.exited
            ],
            "bursts": [
                {"kind": c.kind.key, "size": c.size, "ball_ids": list(c.ball_ids)}
                for c in self.clusters.clusters
            ],
            "taps": [
                {
                    "tick": t.time,
                    "source": t.source.name.lower(),
                    "outcome": t.outcome.name.lower(),
                    "target_id": t.target_id,
                    "score_delta": t.score_delta,
                    "x": t.x,
                    "y": t.y,
                }
                for t in self.tap_results
            ],
            "score_delta": self.score_delta,
            "score_after": self.score_after,
            "finished": self.finished,
        }


def detect_clusters(graph: dict[BallKind, dict[int, tuple[int, ...]]],
                    definition: GameDefinition) -> ClusterReport:
    """Connected components of the contact graph at or over threshold.

    `graph` must come from contact_graph() on the same state.  Components
    are reported in order of their smallest ball id, members ascending.
    """
    found: list[Cluster] = []
    for kind in KINDS:
        adjacency = graph.get(kind, {})
        threshold = definition.cluster_threshold[kind]
        seen: set[int] = set()
        for start in sorted(adjacency):
            if start in seen:
                continue
            stack = [start]
            comp: list[int] = []
            seen.add(start)
            while stack:
                node = stack.pop()
                comp.append(node)
                for nbr in adjacency[node]:
                    if nbr not in seen:
                        seen.add(nbr)
                        stack.append(nbr)
            if len(comp) >= threshold:
                found.append(Cluster(kind, tuple(sorted(comp))))
    found.sort(key=lambda c: c.ball_ids[0])
    return ClusterReport(tuple(found))


def apply_bursts(state: GameState, report: ClusterReport) -> int:
    """Remove every reported cluster; returns the score delta.

    Per cluster of size s and kind k: score += s * cluster_score_per_ball[k]
    and s respawns of kind k are queued.  Raises on a stale report (ids no
    longer in the state).
    """
    n = state.n_balls
    index_of = {int(state.bid[i]): i for i in range(n)}
    delta = 0
    keep = np.ones(n, dtype=bool)
    for cluster in report.clusters:
        k = int(cluster.kind)
        for ball_id in cluster.ball_ids:
            idx = index_of.get(ball_id)
            if idx is None or not keep[idx]:
                raise ValueError(f"stale cluster report: ball {ball_id} not in state")
            keep[idx] = False
        size = cluster.size
        delta += size * state.definition.cluster_score_per_ball[cluster.kind]
        state.istate[K.I_PEND + k] += size
        state.istate[K.I_QUEUED + k] += size
        state.istate[K.I_BURST_REM + k] += size
    if report.clusters:
        new_n = int(keep.sum())
        for arr in (state.bid, state.bkind):
            arr[:new_n] = arr[:n][keep]
        for arr in (state.bx, state.by, state.bvx, state.bvy, state.brad):
            arr[:new_n] = arr[:n][keep]
        state.istate[K.I_N] = new_n
    state.istate[K.I_SCORE] += delta
    return delta


def apply_tap(state: GameState, event: InputEvent) -> TapResult:
    """Hit-test and act on one tap; returns what happened.

    A hit is any ball whose center is within radius + TAP_SLOP of the tap
    point; the nearest center wins, exact ties go to the lower ball id.
    The hit kind's action fires: Explode removes the ball (tap explosions
    are not replaced; only cluster bursts queue respawns), Destroy removes
    it, Impulse kicks it upward; each scores tap_score for the kind.  A
    tap on a None-action kind or on empty space changes nothing.
    """
    if event.time != state.tick:
        raise ValueError(f"tap timestamped {event.time} applied at tick {state.tick}")
    ev_tap = np.zeros((1, 5), dtype=np.int64)
    ev_tap_xy = np.zeros((1, 2), dtype=np.float64)
    ev_counts = np.zeros(4, dtype=np.int64)
    K.k_tap(
        state.istate, state.bid, state.bkind, state.bx, state.by,
        state.bvx, state.bvy, state.brad,
        state.pack.tapact, state.pack.tapscore,
        float(event.x), float(event.y), int(event.source),
        state._remove, ev_tap, ev_tap_xy, ev_counts,
    )
    return _tap_result_from_row(ev_tap[0], ev_tap_xy[0])


def _tap_result_from_row(row, xy) -> TapResult:
    target = int(row[3])
    return TapResult(
        time=int(row[0]),
        source=TapSource(int(row[1])),
        outcome=TapOutcome(int(row[2])),
        target_id=None if target < 0 else target,
        score_delta=int(row[4]),
        x=float(xy[0]),
        y=float(xy[1]),
    )


def apply_exit_scoring(state: GameState, exited) -> int:
    """Score balls that left through exit regions; returns the delta.

    Exited balls were already removed by the physics step and are never
    respawned.
    """
    regions = state.definition.exit_regions
    delta = 0
    for e in exited:
        if not (0 <= e.region_id < len(regions)):
            raise ValueError(f"unknown exit region id {e.region_id}")
        delta += regions[e.region_id].score[e.kind]
    state.istate[K.I_SCORE] += delta
    return delta


def tick(state: GameState, inputs: tuple[InputEvent, ...] = ()) -> TickReport:
    """Run one full game tick: taps, physics, exit scoring, bursts.

    All inputs must be timestamped for the current tick.  Returns the
    complete report; raises if the state is already finished.
    """
    if state.finished:
        raise SimulationError("cannot tick a finished state")
    for e in inputs:
        if e.time != state.tick:
            raise ValueError(f"input timestamped {e.time} at tick {state.tick}")
    pack = state.pack

    tap_results = tuple(apply_tap(state, e) for e in inputs)
    tap_delta = sum(t.score_delta for t in tap_results)

    cap = pack.capacity
    ev_spawn = np.zeros((cap, 2), dtype=np.int64)
    ev_exit = np.zeros((cap, 4), dtype=np.int64)
    ev_counts = np.zeros(4, dtype=np.int64)
    K.k_physics_raw(
        state.istate, state.fstate, state.ustate,
        state.bid, state.bkind, state.bx, state.by, state.bvx, state.bvy,
        state.brad,
        pack.cap, pack.rad, pack.phys, pack.sp_lo, pack.sp_hi, pack.sp_off,
        pack.segs, pack.ex_edge, pack.ex_lo, pack.ex_hi,
        ev_spawn, ev_exit, ev_counts, state._remove,
    )
    spawned = tuple(int(ev_spawn[i, 1]) for i in range(ev_counts[0]))
    exited = tuple(
        ExitedBall(int(ev_exit[i, 1]), int(ev_exit[i, 2]), BallKind(int(ev_exit[i, 3])))
        for i in range(ev_counts[1])
    )
    exit_delta = apply_exit_scoring(state, exited)

    changed = K.k_refresh_contact_hash(
        state.istate, state.ustate, state.bid, state.bkind, state.bx, state.by,
        state.brad, pack.phys[3], state._parent,
    )
    report = detect_clusters(contact_graph(state), state.definition)
    burst_delta = apply_bursts(state, report)

    K.k_fold_hash(state.istate, state.ustate, state.bid, state.bkind,
                  state.bx, state.by)
    this_tick = state.tick
    K.k_advance_clock(state.istate, pack.duration_ticks)

    events = StepEvents(bool(changed), exited, spawned)
    return TickReport(
        tick=this_tick,
        events=events,
        clusters=report,
        tap_results=tap_results,
        tap_delta=tap_delta,
        exit_delta=exit_delta,
        burst_delta=burst_delta,
        score_delta=tap_delta + exit_delta + burst_delta,
        score_after=state.score,
        finished=state.finished,
    )


def tappable_kinds(definition: GameDefinition) -> tuple[BallKind, ...]:
    """Kinds whose tap action actually does something."""
    return tuple(k for k in KINDS if definition.tap_action[k] != TapAction.NONE)
