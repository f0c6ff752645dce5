"""Automated players: the on-screen assistant and the novice tester.

The assistant watches for balls whose bursting would lose points and taps
the most urgent one, acting with a configurable probability per decision
opportunity: level 0 never helps, level 1 acts at every opportunity that
has a threat.  Its taps are delayed by a small randomized reaction time
and land wherever the target has moved to, so every emitted tap is a hit.

The novice is a deliberately unskilled stochastic player used to estimate
cluster frequencies for balancing: most decisions it taps some random
tappable ball, sometimes it taps a random point, and it never ranks
targets.

Policies draw from their own generator, never from the simulation RNG, so
running a policy does not perturb the physics stream.  Draw order is
fixed: one gate draw per decision, then whatever the chosen branch needs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .definition import FIELD_HEIGHT, FIELD_WIDTH, BallKind
from .rng import SplitMix64
from .rules import InputEvent, TapSource, tappable_kinds
from .state import GameState, contact_graph


class PolicyId(enum.Enum):
    ASSISTANT = "assistant"
    NOVICE = "novice"
    IDLE = "idle"


@dataclass(frozen=True)
class AssistConfig:
    """How much and how fast the assistant helps."""

    level: float  # action probability per opportunity, in [0, 1]
    decision_period: int = 15  # ticks between decision opportunities (4 Hz)
    reaction_jitter: int = 10  # max extra ticks before the tap lands

    def __post_init__(self):
        if not (0.0 <= self.level <= 1.0):
            raise ValueError(f"assist level must be in [0, 1], got {self.level}")
        if self.decision_period < 1:
            raise ValueError("decision_period must be at least 1")
        if self.reaction_jitter < 0:
            raise ValueError("reaction_jitter cannot be negative")


@dataclass(frozen=True)
class NoviceConfig:
    """Tunable low-skill policy parameters (defaults are this project's)."""

    ball_tap_prob: float = 0.6
    wild_tap_prob: float = 0.1
    decision_period: int = 15


@dataclass(frozen=True)
class PlannedTap:
    """An assistant decision: tap ball `target_id` when `due_tick` arrives.

    The tap position is resolved at the due tick from the target's center;
    if the target is gone by then, nothing is emitted.
    """

    due_tick: int
    target_id: int
    source: TapSource = TapSource.ASSISTANT


def assess_threats(state: GameState) -> list[tuple[int, float]]:
    """Balls worth removing before they burst, most urgent first.

    Candidates are balls of kinds that lose points per burst and react to
    taps.  Urgency is the ball's contact-component size over its kind's
    burst threshold; ties keep ascending id order.
    """
    d = state.definition
    candidate_kinds = tuple(
        k for k in tappable_kinds(d) if d.cluster_score_per_ball[k] < 0
    )
    if not candidate_kinds:
        return []
    graph = contact_graph(state)
    out: list[tuple[int, float]] = []
    for kind in candidate_kinds:
        adjacency = graph[kind]
        threshold = d.cluster_threshold[kind]
        seen: set[int] = set()
        for start in sorted(adjacency):
            if start in seen:
                continue
            stack = [start]
            comp = []
            seen.add(start)
            while stack:
                node = stack.pop()
                comp.append(node)
                for nbr in adjacency[node]:
                    if nbr not in seen:
                        seen.add(nbr)
                        stack.append(nbr)
            urgency = len(comp) / threshold
            for ball_id in comp:
                out.append((ball_id, urgency))
    out.sort(key=lambda t: (-t[1], t[0]))
    return out


def assistant_act(state: GameState, cfg: AssistConfig,
                  rng: SplitMix64) -> PlannedTap | None:
    """One assistant decision; call once per cfg.decision_period ticks.

    With probability cfg.level, plans a tap on the highest-urgency threat,
    delayed by a random reaction of up to cfg.reaction_jitter ticks (capped
    to land before the next opportunity).  Otherwise does nothing.
    """
    gate = rng.uniform()
    if gate >= cfg.level:
        return None
    threats = assess_threats(state)
    if not threats:
        return None
    jitter_cap = min(cfg.reaction_jitter, cfg.decision_period - 1)
    jitter = rng.randint(0, jitter_cap)
    return PlannedTap(due_tick=state.tick + jitter, target_id=threats[0][0])


def novice_act(state: GameState, rng: SplitMix64,
               cfg: NoviceConfig = NoviceConfig()) -> InputEvent | None:
    """One novice decision; call once per cfg.decision_period ticks.

    Taps a uniformly random on-screen ball of a tappable kind with
    probability ball_tap_prob, a uniformly random screen point with
    probability wild_tap_prob, and otherwise does nothing.
    """
    u = rng.uniform()
    if u < cfg.ball_tap_prob:
        kinds = tappable_kinds(state.definition)
        if not kinds:
            return None
        n = state.n_balls
        candidates = [
            i for i in range(n)
            if BallKind(int(state.bkind[i])) in kinds and state.by[i] <= FIELD_HEIGHT
        ]
        if not candidates:
            return None
        i = candidates[rng.randint(0, len(candidates) - 1)]
        return InputEvent(state.tick, float(state.bx[i]), float(state.by[i]),
                          TapSource.POLICY)
    if u < cfg.ball_tap_prob + cfg.wild_tap_prob:
        x = rng.uniform() * FIELD_WIDTH
        y = rng.uniform() * FIELD_HEIGHT
        return InputEvent(state.tick, x, y, TapSource.POLICY)
    return None
