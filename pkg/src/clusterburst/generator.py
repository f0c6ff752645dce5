"""Random generation of balanced game variants.

The generator samples every facet of the design space from configurable
ranges, estimates how often clusters of each size and kind actually burst
by running headless novice games, and then searches the integer score
grid for assignments whose expected positive gain and expected negative
loss per game come out even.

Everything is a pure function of (rng seed, constraints, n_games,
tolerance), so generation is reproducible across runs and machines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .ai import NoviceConfig, PolicyId
from .definition import (
    FIELD_HEIGHT,
    FIELD_WIDTH,
    GRID_CATALOG,
    KINDS,
    BallKind,
    Edge,
    ExitRegion,
    GameDefinition,
    Interval,
    PerKind,
    PhysicsParams,
    TapAction,
    definition_hash,
    validate,
)
from .harness import run_game
from .rng import SplitMix64, derive_seed

SCORE_GRID_MIN = -5
SCORE_GRID_MAX = 5


class UnsatisfiableConstraints(ValueError):
    pass


@dataclass(frozen=True)
class SamplingConstraints:
    """Inclusive per-facet ranges the sampler draws from.

    Action tuples are drawn uniformly, so repeating an entry weights it.
    fixed_spawn_regions / fixed_exit_regions bypass random region layout
    entirely (used to pin a sample to an exact definition).
    """

    cluster_threshold: tuple[int, int] = (3, 6)
    burst_score_positive: tuple[int, int] = (1, 3)
    burst_score_negative: tuple[int, int] = (-3, -1)
    tap_actions_positive: tuple[TapAction, ...] = (
        TapAction.NONE, TapAction.NONE, TapAction.IMPULSE)
    tap_actions_negative: tuple[TapAction, ...] = (
        TapAction.EXPLODE, TapAction.EXPLODE, TapAction.DESTROY, TapAction.IMPULSE)
    tap_score_positive: tuple[int, int] = (0, 1)
    tap_score_negative: tuple[int, int] = (-2, 0)
    ball_radius: tuple[float, float] = (0.30, 0.55)
    max_balls: tuple[int, int] = (6, 24)
    grids: tuple[str, ...] = tuple(GRID_CATALOG)
    gravity: tuple[float, float] = (7.0, 13.0)
    restitution: tuple[float, float] = (0.1, 0.9)
    noise_amplitude: tuple[float, float] = (0.0, 1.5)
    contact_slop: tuple[float, float] = (0.02, 0.08)
    spawn_rate: tuple[float, float] = (2.5, 6.0)
    game_duration: tuple[float, float] = (60.0, 120.0)
    spawn_region_count: tuple[int, int] = (1, 2)
    exit_region_count: tuple[int, int] = (0, 2)
    exit_score: tuple[int, int] = (-2, 2)
    fixed_spawn_regions: PerKind | None = None
    fixed_exit_regions: tuple[ExitRegion, ...] | None = None

    @classmethod
    def pinned(cls, d: GameDefinition) -> "SamplingConstraints":
        """Degenerate constraints that force the sampler to reproduce `d`.

        Requires per-kind-symmetric threshold, radius, and cap values (true
        of let_it_snow); region layouts are pinned exactly.
        """
        def point(v):
            return (v, v)

        return cls(
            cluster_threshold=point(d.cluster_threshold.positive),
            burst_score_positive=point(d.cluster_score_per_ball.positive),
            burst_score_negative=point(d.cluster_score_per_ball.negative),
            tap_actions_positive=(d.tap_action.positive,),
            tap_actions_negative=(d.tap_action.negative,),
            tap_score_positive=point(d.tap_score.positive),
            tap_score_negative=point(d.tap_score.negative),
            ball_radius=point(d.ball_radius.positive),
            max_balls=point(d.max_balls.positive),
            grids=(d.grid.catalog_id,),
            gravity=point(d.physics.gravity),
            restitution=point(d.physics.restitution),
            noise_amplitude=point(d.physics.noise_amplitude),
            contact_slop=point(d.physics.contact_slop),
            spawn_rate=point(d.spawn_rate),
            game_duration=point(d.game_duration),
            fixed_spawn_regions=d.spawn_regions,
            fixed_exit_regions=d.exit_regions,
        )


@dataclass(frozen=True)
class FrequencyHistogram:
    """Burst counts by (kind, size) plus action-firing tap counts.

    Collected from headless novice simulations; the per-kind tap counts
    feed the expected-loss side of balancing.  definition_hash records
    which definition the games were played under.
    """

    counts: dict[tuple[BallKind, int], int]
    tap_hits: tuple[int, int]
    games_simulated: int
    total_steps: int
    definition_hash: str

    def bursts_of_kind(self, kind: BallKind) -> int:
        return sum(c for (k, _), c in self.counts.items() if k == kind)

    def ball_turnover(self, kind: BallKind) -> int:
        """Total balls removed by bursts of `kind` (count times size)."""
        return sum(c * s for (k, s), c in self.counts.items() if k == kind)

    def to_dict(self) -> dict:
        return {
            "counts": [
                {"kind": k.key, "size": s, "count": c}
                for (k, s), c in sorted(self.counts.items())
            ],
            "tap_hits": {"positive": self.tap_hits[0], "negative": self.tap_hits[1]},
            "games_simulated": self.games_simulated,
            "total_steps": self.total_steps,
            "definition_sha256": self.definition_hash,
        }


@dataclass(frozen=True)
class BalanceReport:
    """How even a definition's scoring is under the observed frequencies."""

    expected_positive: float  # expected score gained per game from bursts
    expected_negative: float  # expected magnitude lost per game (bursts + taps)
    imbalance: float  # |gain - loss| / max(gain, loss, 1)
    games: int
    unplayable: bool = False

    def to_dict(self) -> dict:
        return {
            "expected_positive": self.expected_positive,
            "expected_negative": self.expected_negative,
            "imbalance": self.imbalance,
            "games": self.games,
            "unplayable": self.unplayable,
        }


@dataclass(frozen=True)
class BalanceOutcome:
    definition: GameDefinition
    report: BalanceReport


def _check_range(name: str, rng_pair, lo_limit=None):
    lo, hi = rng_pair
    if lo > hi:
        raise UnsatisfiableConstraints(f"{name}: empty range [{lo}, {hi}]")
    if lo_limit is not None and lo < lo_limit:
        raise UnsatisfiableConstraints(f"{name}: range below minimum {lo_limit}")


def sample_definition(rng: SplitMix64,
                      constraints: SamplingConstraints = SamplingConstraints()
                      ) -> GameDefinition:
    """Draw one valid definition; every facet comes from its range via rng.

    The draw order is fixed (thresholds, scores, actions, sizes, caps,
    grid, physics, rates, duration, then regions), so equal rng states give
    equal definitions.
    """
    c = constraints
    _check_range("cluster_threshold", c.cluster_threshold, 2)
    _check_range("ball_radius", c.ball_radius, 1e-6)
    _check_range("max_balls", c.max_balls, 0)
    _check_range("spawn_rate", c.spawn_rate, 1e-9)
    _check_range("game_duration", c.game_duration, 0.0)
    for name in ("burst_score_positive", "burst_score_negative",
                 "tap_score_positive", "tap_score_negative",
                 "gravity", "restitution", "noise_amplitude", "contact_slop",
                 "spawn_region_count", "exit_region_count", "exit_score"):
        _check_range(name, getattr(c, name))
    if not c.grids:
        raise UnsatisfiableConstraints("grids: no layouts to choose from")
    for g in c.grids:
        if g not in GRID_CATALOG:
            raise UnsatisfiableConstraints(f"grids: unknown catalog id {g!r}")
    if not c.tap_actions_positive or not c.tap_actions_negative:
        raise UnsatisfiableConstraints("tap actions: empty choice set")

    thr = PerKind(*(rng.randint(*c.cluster_threshold) for _ in KINDS))
    burst = PerKind(rng.randint(*c.burst_score_positive),
                    rng.randint(*c.burst_score_negative))
    action = PerKind(rng.choice(c.tap_actions_positive),
                     rng.choice(c.tap_actions_negative))
    tap = PerKind(rng.randint(*c.tap_score_positive),
                  rng.randint(*c.tap_score_negative))
    radius = PerKind(*(rng.uniform_in(*c.ball_radius) for _ in KINDS))
    caps = PerKind(*(rng.randint(*c.max_balls) for _ in KINDS))
    grid = GRID_CATALOG[rng.choice(c.grids)]
    physics = PhysicsParams(
        gravity=rng.uniform_in(*c.gravity),
        restitution=rng.uniform_in(*c.restitution),
        noise_amplitude=rng.uniform_in(*c.noise_amplitude),
        contact_slop=rng.uniform_in(*c.contact_slop),
    )
    spawn_rate = rng.uniform_in(*c.spawn_rate)
    duration = rng.uniform_in(*c.game_duration)

    if c.fixed_spawn_regions is not None:
        spawn_regions = c.fixed_spawn_regions
    else:
        per_kind: list[tuple[Interval, ...]] = []
        for k in KINDS:
            count = rng.randint(*c.spawn_region_count)
            min_w = 2.0 * radius[k] + 0.3
            regions = []
            for _ in range(max(1, count)):
                width = rng.uniform_in(min_w, min(FIELD_WIDTH, min_w + 4.0))
                lo = rng.uniform_in(0.0, FIELD_WIDTH - width)
                regions.append(Interval(lo, lo + width))
            per_kind.append(tuple(regions))
        spawn_regions = PerKind(*per_kind)

    if c.fixed_exit_regions is not None:
        exit_regions = c.fixed_exit_regions
    else:
        count = rng.randint(*c.exit_region_count)
        placed: list[ExitRegion] = []
        for _ in range(count):
            for _attempt in range(20):
                edge = (Edge.BOTTOM, Edge.LEFT, Edge.RIGHT)[rng.randint(0, 2)]
                extent = FIELD_WIDTH if edge is Edge.BOTTOM else FIELD_HEIGHT
                width = rng.uniform_in(1.0, 3.0)
                lo = rng.uniform_in(0.0, extent - width)
                candidate = ExitRegion(
                    edge, lo, lo + width,
                    PerKind(rng.randint(*c.exit_score), rng.randint(*c.exit_score)),
                )
                overlap = any(
                    r.edge == candidate.edge
                    and min(r.hi, candidate.hi) - max(r.lo, candidate.lo) > 0.0
                    for r in placed
                )
                if not overlap:
                    placed.append(candidate)
                    break
        exit_regions = tuple(placed)

    d = GameDefinition(
        cluster_threshold=thr,
        cluster_score_per_ball=burst,
        tap_action=action,
        tap_score=tap,
        ball_radius=radius,
        max_balls=caps,
        grid=grid,
        physics=physics,
        spawn_regions=spawn_regions,
        exit_regions=exit_regions,
        spawn_rate=spawn_rate,
        game_duration=duration,
        name="generated",
    )
    violations = validate(d)
    if violations:
        raise UnsatisfiableConstraints(
            f"constraints produced an invalid definition: {violations}")
    return d


def estimate_frequencies(definition: GameDefinition,
                         n_games: int,
                         policy: PolicyId = PolicyId.NOVICE,
                         seed: int = 0,
                         horizon_seconds: float | None = None,
                         novice_cfg: NoviceConfig = NoviceConfig()
                         ) -> FrequencyHistogram:
    """Burst frequencies observed over n_games headless games.

    Game i runs with the sub-seed derive_seed(seed, i).  horizon_seconds
    caps each game's length (required for untimed definitions; defaults to
    the definition's own duration).
    """
    if n_games < 1:
        raise ValueError("n_games must be at least 1")
    override = None
    if horizon_seconds is not None:
        override = (horizon_seconds if definition.game_duration <= 0
                    else min(horizon_seconds, definition.game_duration))
    elif definition.game_duration <= 0:
        raise ValueError("untimed definition: pass horizon_seconds")
    counts: dict[tuple[BallKind, int], int] = {}
    tap_hits = [0, 0]
    total_steps = 0
    for i in range(n_games):
        result = run_game(definition, policy, None,
                          seed=derive_seed(seed, i),
                          duration_override=override,
                          novice_cfg=novice_cfg)
        for ev in result.burst_events:
            key = (ev.kind, ev.size)
            counts[key] = counts.get(key, 0) + 1
        hits = result.counters["tap_hits"]
        tap_hits[0] += hits[0]
        tap_hits[1] += hits[1]
        total_steps += result.ticks
    return FrequencyHistogram(
        counts=counts,
        tap_hits=(tap_hits[0], tap_hits[1]),
        games_simulated=n_games,
        total_steps=total_steps,
        definition_hash=definition_hash(definition),
    )


def _expectations(hist: FrequencyHistogram,
                  s_pos: int, s_neg: int, tap_neg: int) -> tuple[float, float]:
    """(expected gain, expected loss magnitude) per game for a score tuple."""
    gain_raw = 0
    loss_raw = 0
    for (kind, size), count in hist.counts.items():
        if kind == BallKind.POSITIVE:
            gain_raw += count * size * s_pos
        else:
            loss_raw += count * size * s_neg
    loss_raw += hist.tap_hits[1] * tap_neg
    games = hist.games_simulated
    gain = max(0.0, gain_raw / games)
    loss = max(0.0, -loss_raw / games)
    return gain, loss


def _imbalance(gain: float, loss: float) -> float:
    return abs(gain - loss) / max(gain, loss, 1.0)


def compute_balance_report(definition: GameDefinition,
                           hist: FrequencyHistogram,
                           unplayable: bool = False) -> BalanceReport:
    """Balance of `definition`'s current scores under `hist` frequencies."""
    if hist.definition_hash != definition_hash(definition):
        raise ValueError("histogram was collected under a different definition")
    gain, loss = _expectations(
        hist,
        definition.cluster_score_per_ball.positive,
        definition.cluster_score_per_ball.negative,
        definition.tap_score.negative,
    )
    return BalanceReport(gain, loss, _imbalance(gain, loss),
                         hist.games_simulated, unplayable)


def balance_scores(definition: GameDefinition,
                   hist: FrequencyHistogram,
                   tolerance: float,
                   locked: frozenset[str] = frozenset()) -> BalanceOutcome:
    """Search integer score assignments that even out expected score impact.

    The grid keeps the sign structure: positive bursts score in [0, 5],
    negative bursts in [-5, 0], and the negative kind's tap score (searched
    only when its tap action fires) in [-5, 0].  Enumeration runs from
    large magnitudes down, accepting the first assignment whose imbalance
    is within tolerance and otherwise returning the argmin; equal-imbalance
    ties therefore resolve toward larger scores.  Lock fields by name
    ("cluster_score_per_ball.positive", "cluster_score_per_ball.negative",
    "tap_score.negative") to exclude them from the search.

    An empty histogram marks the outcome unplayable and leaves the
    definition untouched.
    """
    if not (0.0 < tolerance <= 1.0):
        raise ValueError("tolerance must lie in (0, 1]")
    if hist.definition_hash != definition_hash(definition):
        raise ValueError("histogram was collected under a different definition")
    if not hist.counts:
        return BalanceOutcome(definition,
                              compute_balance_report(definition, hist,
                                                     unplayable=True))

    def axis(locked_name: str, current: int, values: tuple[int, ...]):
        return (current,) if locked_name in locked else values

    descending_pos = tuple(range(SCORE_GRID_MAX, -1, -1))
    descending_neg = tuple(range(SCORE_GRID_MIN, 1))  # -5 first: magnitude desc
    pos_axis = axis("cluster_score_per_ball.positive",
                    definition.cluster_score_per_ball.positive, descending_pos)
    neg_axis = axis("cluster_score_per_ball.negative",
                    definition.cluster_score_per_ball.negative, descending_neg)
    if definition.tap_action.negative != TapAction.NONE:
        tap_axis = axis("tap_score.negative",
                        definition.tap_score.negative, descending_neg)
    else:
        tap_axis = (definition.tap_score.negative,)

    best: tuple[float, int, int, int] | None = None
    for s_pos in pos_axis:
        for s_neg in neg_axis:
            for tap_neg in tap_axis:
                gain, loss = _expectations(hist, s_pos, s_neg, tap_neg)
                imb = _imbalance(gain, loss)
                if best is None or imb < best[0]:
                    best = (imb, s_pos, s_neg, tap_neg)
                    if imb <= tolerance:
                        adjusted = definition.with_scores(
                            cluster_score_per_ball=PerKind(s_pos, s_neg),
                            tap_score=PerKind(definition.tap_score.positive, tap_neg),
                        )
                        return BalanceOutcome(
                            adjusted,
                            BalanceReport(gain, loss, imb, hist.games_simulated),
                        )
    imb, s_pos, s_neg, tap_neg = best
    adjusted = definition.with_scores(
        cluster_score_per_ball=PerKind(s_pos, s_neg),
        tap_score=PerKind(definition.tap_score.positive, tap_neg),
    )
    gain, loss = _expectations(hist, s_pos, s_neg, tap_neg)
    return BalanceOutcome(
        adjusted, BalanceReport(gain, loss, imb, hist.games_simulated))


def is_playable(definition: GameDefinition, hist: FrequencyHistogram) -> bool:
    """True when every kind with a nonzero cap actually burst in simulation."""
    for k in KINDS:
        if definition.max_balls[k] > 0 and hist.bursts_of_kind(k) == 0:
            return False
    return True


def generate_balanced(rng: SplitMix64 | int,
                      constraints: SamplingConstraints = SamplingConstraints(),
                      n_games: int = 100,
                      tolerance: float = 0.25,
                      max_attempts: int = 20,
                      horizon_seconds: float = 45.0,
                      novice_cfg: NoviceConfig = NoviceConfig()
                      ) -> tuple[GameDefinition, BalanceReport]:
    """Sample, playtest, and balance until a variant lands within tolerance.

    Accepts the first attempt that is playable (every capped kind bursts at
    least once under the novice) with imbalance within tolerance; after
    max_attempts returns the best candidate seen.  Deterministic given the
    rng state and arguments.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    if isinstance(rng, int):
        rng = SplitMix64(rng)
    best: tuple[bool, float, GameDefinition, BalanceReport] | None = None
    for _attempt in range(max_attempts):
        candidate = sample_definition(rng, constraints)
        sim_seed = rng.next_u64()
        hist = estimate_frequencies(candidate, n_games, PolicyId.NOVICE,
                                    seed=sim_seed,
                                    horizon_seconds=horizon_seconds,
                                    novice_cfg=novice_cfg)
        outcome = balance_scores(candidate, hist, tolerance)
        playable = is_playable(outcome.definition, hist)
        report = replace(outcome.report, unplayable=not playable)
        if playable and report.imbalance <= tolerance:
            return outcome.definition, report
        key = (not playable, report.imbalance)
        if best is None or key < (not best[0], best[1]):
            best = (playable, report.imbalance, outcome.definition, report)
    return best[2], best[3]
