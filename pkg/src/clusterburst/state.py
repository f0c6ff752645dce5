"""Live game state and the physics-level operations over it.

A GameState owns flat numpy arrays the compiled kernels mutate in place:
ball attributes in spawn order (so index order equals id order), integer
counters, spawn credits, and the RNG / hash-chain words.  Copies of a
state are cheap and fully independent, which is what the paired-seed
experiments and batch runners rely on.

The clock is a tick counter; elapsed seconds are always tick / 60.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .definition import (
    KINDS,
    BallKind,
    GameDefinition,
    PerKind,
    require_valid,
)
from .rng import MASK64

TICKS_PER_SECOND = K.TICKS_PER_SECOND
TIMESTEP = K.DT


class SimulationError(RuntimeError):
    """Raised when an operation is applied to a state that cannot accept it."""


@dataclass(frozen=True)
class Ball:
    """Read-only snapshot of one ball."""

    id: int
    kind: BallKind
    x: float
    y: float
    vx: float
    vy: float
    radius: float


@dataclass(frozen=True)
class ExitedBall:
    ball_id: int
    region_id: int
    kind: BallKind


@dataclass(frozen=True)
class StepEvents:
    """What one physics step did: see step()."""

    contacts_changed: bool
    exited: tuple[ExitedBall, ...]
    spawned: tuple[int, ...]


class DefPack:
    """A GameDefinition flattened into kernel-ready arrays (cached per def)."""

    def __init__(self, d: GameDefinition, duration_override: float | None = None):
        self.definition = d
        self.thr = np.array([d.cluster_threshold[k] for k in KINDS], dtype=np.int64)
        self.burst = np.array([d.cluster_score_per_ball[k] for k in KINDS], dtype=np.int64)
        self.tapact = np.array([int(d.tap_action[k]) for k in KINDS], dtype=np.int64)
        self.tapscore = np.array([d.tap_score[k] for k in KINDS], dtype=np.int64)
        self.cap = np.array([d.max_balls[k] for k in KINDS], dtype=np.int64)
        self.rad = np.array([d.ball_radius[k] for k in KINDS], dtype=np.float64)
        self.phys = np.array(
            [
                d.physics.gravity,
                d.physics.restitution,
                d.physics.noise_amplitude,
                d.physics.contact_slop,
                d.spawn_rate,
            ],
            dtype=np.float64,
        )
        # spawn intervals inset by the ball radius so spawned centers always
        # fit; validation guarantees the inset interval is non-empty
        lo: list[float] = []
        hi: list[float] = []
        off = [0]
        for k in KINDS:
            r = d.ball_radius[k]
            for iv in d.spawn_regions[k]:
                lo.append(iv.lo + r)
                hi.append(iv.hi - r)
            off.append(len(lo))
        self.sp_lo = np.array(lo, dtype=np.float64)
        self.sp_hi = np.array(hi, dtype=np.float64)
        self.sp_off = np.array(off, dtype=np.int64)
        self.segs = np.array(
            [[s.x1, s.y1, s.x2, s.y2] for s in d.grid.segments], dtype=np.float64
        ).reshape(len(d.grid.segments), 4)
        n_exit = len(d.exit_regions)
        self.ex_edge = np.array([int(r.edge) for r in d.exit_regions], dtype=np.int64)
        self.ex_lo = np.array([r.lo for r in d.exit_regions], dtype=np.float64)
        self.ex_hi = np.array([r.hi for r in d.exit_regions], dtype=np.float64)
        self.ex_score = np.array(
            [[r.score[k] for k in KINDS] for r in d.exit_regions], dtype=np.int64
        ).reshape(n_exit, 2)
        seconds = d.game_duration if duration_override is None else duration_override
        self.duration_ticks = int(round(seconds * TICKS_PER_SECOND))
        if seconds > 0 and self.duration_ticks == 0:
            self.duration_ticks = 1  # sub-tick durations still end
        self.capacity = max(1, int(self.cap.sum()))


class GameState:
    """Mutable simulation state for one game. Confine to one thread at a time."""

    def __init__(self, pack: DefPack, seed: int):
        self.pack = pack
        self.seed = seed & MASK64
        cap = pack.capacity
        self.istate = np.zeros(K.ISTATE_LEN, dtype=np.int64)
        self.fstate = np.zeros(K.FSTATE_LEN, dtype=np.float64)
        self.ustate = np.zeros(K.USTATE_LEN, dtype=np.uint64)
        self.ustate[K.U_RNG] = np.uint64(self.seed)
        self.ustate[K.U_HASH] = np.uint64(K.FNV_OFFSET)
        self.ustate[K.U_CONTACT] = np.uint64(K.FNV_OFFSET)
        self.bid = np.zeros(cap, dtype=np.int64)
        self.bkind = np.zeros(cap, dtype=np.int64)
        self.bx = np.zeros(cap, dtype=np.float64)
        self.by = np.zeros(cap, dtype=np.float64)
        self.bvx = np.zeros(cap, dtype=np.float64)
        self.bvy = np.zeros(cap, dtype=np.float64)
        self.brad = np.zeros(cap, dtype=np.float64)
        self._remove = np.zeros(cap, dtype=np.bool_)
        self._parent = np.zeros(cap, dtype=np.int64)
        self._sizes = np.zeros(cap, dtype=np.int64)

    # -- scalar views -------------------------------------------------------

    @property
    def definition(self) -> GameDefinition:
        return self.pack.definition

    @property
    def n_balls(self) -> int:
        return int(self.istate[K.I_N])

    @property
    def score(self) -> int:
        return int(self.istate[K.I_SCORE])

    @property
    def tick(self) -> int:
        return int(self.istate[K.I_TICK])

    @property
    def elapsed(self) -> float:
        return self.tick * TIMESTEP

    @property
    def finished(self) -> bool:
        return bool(self.istate[K.I_FINISHED])

    @property
    def state_hash(self) -> int:
        return int(self.ustate[K.U_HASH])

    @property
    def pending_respawns(self) -> PerKind:
        return PerKind(int(self.istate[K.I_PEND + 0]), int(self.istate[K.I_PEND + 1]))

    def kind_count(self, kind: BallKind) -> int:
        n = self.n_balls
        return int(np.count_nonzero(self.bkind[:n] == int(kind)))

    @property
    def balls(self) -> tuple[Ball, ...]:
        n = self.n_balls
        return tuple(
            Ball(
                int(self.bid[i]),
                BallKind(int(self.bkind[i])),
                float(self.bx[i]),
                float(self.by[i]),
                float(self.bvx[i]),
                float(self.bvy[i]),
                float(self.brad[i]),
            )
            for i in range(n)
        )

    def ball_by_id(self, ball_id: int) -> Ball | None:
        n = self.n_balls
        for i in range(n):
            if self.bid[i] == ball_id:
                return Ball(
                    int(self.bid[i]),
                    BallKind(int(self.bkind[i])),
                    float(self.bx[i]),
                    float(self.by[i]),
                    float(self.bvx[i]),
                    float(self.bvy[i]),
                    float(self.brad[i]),
                )
        return None

    def counter(self, base: int, kind: BallKind) -> int:
        """Read one per-kind audit counter (kernels.I_* slot base)."""
        return int(self.istate[base + int(kind)])

    # -- lifecycle ----------------------------------------------------------

    def clone(self) -> "GameState":
        other = GameState.__new__(GameState)
        other.pack = self.pack
        other.seed = self.seed
        for name in ("istate", "fstate", "ustate", "bid", "bkind", "bx", "by",
                     "bvx", "bvy", "brad", "_remove", "_parent", "_sizes"):
            setattr(other, name, getattr(self, name).copy())
        return other

    def fingerprint(self) -> str:
        """Digest of the complete state; equal runs give equal fingerprints."""
        n = self.n_balls
        h = hashlib.sha256()
        h.update(self.istate.tobytes())
        h.update(self.fstate.tobytes())
        h.update(self.ustate.tobytes())
        for arr in (self.bid, self.bkind, self.bx, self.by, self.bvx, self.bvy):
            h.update(arr[:n].tobytes())
        return h.hexdigest()

    # -- test and scenario support -----------------------------------------

    def place_ball(self, kind: BallKind, x: float, y: float,
                   vx: float = 0.0, vy: float = 0.0) -> int:
        """Insert a ball directly (scenario construction); returns its id."""
        idx = self.n_balls
        if idx >= self.pack.capacity:
            raise SimulationError("state is at capacity")
        self.bid[idx] = self.istate[K.I_NEXT_ID]
        self.bkind[idx] = int(kind)
        self.bx[idx] = x
        self.by[idx] = y
        self.bvx[idx] = vx
        self.bvy[idx] = vy
        self.brad[idx] = self.definition.ball_radius[kind]
        self.istate[K.I_NEXT_ID] += 1
        self.istate[K.I_N] = idx + 1
        return int(self.bid[idx])

    def mark_fill_done(self, kind: BallKind | None = None) -> None:
        """Latch the fill phase off so only pending respawns can spawn."""
        for k in KINDS if kind is None else (kind,):
            self.istate[K.I_FILL_DONE + int(k)] = 1


def init_state(definition: GameDefinition, seed: int,
               duration_override: float | None = None) -> GameState:
    """Fresh state: empty playfield, zero score, RNG seeded from `seed`.

    Balls pour in gradually during stepping.  duration_override replaces the
    definition's duration for this run; an override of 0 finishes the game
    immediately.
    """
    require_valid(definition)
    pack = DefPack(definition, duration_override)
    state = GameState(pack, seed)
    if duration_override is not None and duration_override == 0:
        state.istate[K.I_FINISHED] = 1
    return state


def _empty_events():
    return (np.zeros((0, 2), dtype=np.int64),
            np.zeros((0, 4), dtype=np.int64),
            np.zeros(4, dtype=np.int64))


def step(state: GameState, dt: float = TIMESTEP) -> StepEvents:
    """Advance physics by one fixed timestep.

    Integrates gravity, applies seeded noise impulses, resolves collisions
    with the definition's restitution, spawns per the spawn policy, removes
    balls that crossed an exit region, and advances the clock.  Pure
    physics: taps, bursts, and exit scoring are rules-layer operations.
    """
    if dt != TIMESTEP:
        raise ValueError(f"dt must be the fixed timestep {TIMESTEP!r}, got {dt!r}")
    if state.finished:
        raise SimulationError("cannot step a finished state")
    pack = state.pack
    cap = pack.capacity
    ev_spawn = np.zeros((cap, 2), dtype=np.int64)
    ev_exit = np.zeros((cap, 4), dtype=np.int64)
    ev_counts = np.zeros(4, dtype=np.int64)
    changed = K.k_physics_step(
        state.istate, state.fstate, state.ustate,
        state.bid, state.bkind, state.bx, state.by, state.bvx, state.bvy,
        state.brad,
        pack.cap, pack.rad, pack.phys, pack.sp_lo, pack.sp_hi, pack.sp_off,
        pack.segs, pack.ex_edge, pack.ex_lo, pack.ex_hi,
        pack.duration_ticks, ev_spawn, ev_exit, ev_counts,
        state._remove, state._parent, 1,
    )
    spawned = tuple(int(ev_spawn[i, 1]) for i in range(ev_counts[0]))
    exited = tuple(
        ExitedBall(int(ev_exit[i, 1]), int(ev_exit[i, 2]), BallKind(int(ev_exit[i, 3])))
        for i in range(ev_counts[1])
    )
    return StepEvents(bool(changed), exited, spawned)


def contact_graph(state: GameState) -> dict[BallKind, dict[int, tuple[int, ...]]]:
    """Symmetric same-kind contact adjacency, keyed by kind then ball id.

    Two balls are in contact when their center distance is at most
    r_i + r_j + contact_slop (boundary inclusive).  Every live ball appears
    as a key for its kind, isolated balls with an empty neighbor tuple.
    """
    n = state.n_balls
    max_edges = n * (n - 1) // 2 if n > 1 else 1
    edges = np.zeros((max_edges, 2), dtype=np.int64)
    m = K.k_contact_edges(
        state.istate, state.bid, state.bkind, state.bx, state.by, state.brad,
        state.pack.phys[3], edges,
    )
    adj: dict[BallKind, dict[int, list[int]]] = {k: {} for k in KINDS}
    kind_of: dict[int, BallKind] = {}
    for i in range(n):
        ball, kind = int(state.bid[i]), BallKind(int(state.bkind[i]))
        adj[kind][ball] = []
        kind_of[ball] = kind
    for e in range(m):
        a, b = int(edges[e, 0]), int(edges[e, 1])
        adj[kind_of[a]][a].append(b)
        adj[kind_of[a]][b].append(a)
    return {
        k: {ball: tuple(sorted(nbrs)) for ball, nbrs in kind_adj.items()}
        for k, kind_adj in adj.items()
    }
