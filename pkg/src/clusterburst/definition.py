"""Points in the game design space: types, validation, presets, and files.

A GameDefinition pins every player-facing rule of one game variant: the
cluster sizes at which each ball kind bursts, the scoring of bursts and
taps, ball sizes, per-kind population caps, the static grid, physical
environment, spawn and exit regions, and what a tap does to each kind.

Definitions are immutable and serialize to a canonical, versioned JSON
document (sorted keys, two-space indent, trailing newline), so equal
definitions always produce byte-identical files.  See docs/FORMATS.md.

The playfield is a fixed 9:16 rectangle in abstract world units, origin
at the bottom-left corner, y pointing up.  Balls enter from above the top
edge and fall in.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, replace

FIELD_WIDTH = 9.0
FIELD_HEIGHT = 16.0

SCHEMA_VERSION = 1

PRESET_NAMES = ("let_it_snow", "rain_rain", "jack_frost", "slush_slosh")


class BallKind(enum.IntEnum):
    POSITIVE = 0
    NEGATIVE = 1

    @property
    def key(self) -> str:
        return "positive" if self is BallKind.POSITIVE else "negative"


KINDS = (BallKind.POSITIVE, BallKind.NEGATIVE)


class TapAction(enum.IntEnum):
    NONE = 0
    EXPLODE = 1
    DESTROY = 2
    IMPULSE = 3


class Edge(enum.IntEnum):
    BOTTOM = 0
    LEFT = 1
    RIGHT = 2
    TOP = 3


@dataclass(frozen=True)
class PerKind:
    """One value per ball kind, indexable by BallKind."""

    positive: object
    negative: object

    def __getitem__(self, kind: BallKind):
        return self.positive if kind == BallKind.POSITIVE else self.negative

    def as_dict(self, convert=lambda v: v) -> dict:
        return {"positive": convert(self.positive), "negative": convert(self.negative)}


@dataclass(frozen=True)
class Segment:
    """A static line segment balls collide with, endpoints in world units."""

    x1: float
    y1: float
    x2: float
    y2: float


@dataclass(frozen=True)
class Interval:
    """A horizontal stretch along the top edge where a kind may spawn."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ExitRegion:
    """An open stretch of one playfield edge; balls crossing it leave play.

    The interval coordinate runs along the edge: x for bottom/top, y for
    left/right.  Each kind scores `score[kind]` when one of its balls exits.
    """

    edge: Edge
    lo: float
    hi: float
    score: PerKind  # int per kind


@dataclass(frozen=True)
class GridLayout:
    segments: tuple[Segment, ...] = ()
    catalog_id: str | None = None


@dataclass(frozen=True)
class PhysicsParams:
    gravity: float  # downward acceleration, world units / s^2
    restitution: float  # bounciness in [0, 1]
    noise_amplitude: float  # magnitude of random per-ball impulses, >= 0
    contact_slop: float  # extra contact distance for clustering, >= 0


@dataclass(frozen=True)
class GameDefinition:
    cluster_threshold: PerKind  # int >= 2 per kind
    cluster_score_per_ball: PerKind  # int per kind
    tap_action: PerKind  # TapAction per kind
    tap_score: PerKind  # int per kind, applied only when the action fires
    ball_radius: PerKind  # float > 0 per kind
    max_balls: PerKind  # int >= 0 per kind, on-screen cap
    grid: GridLayout
    physics: PhysicsParams
    spawn_regions: PerKind  # tuple[Interval, ...] per kind
    exit_regions: tuple[ExitRegion, ...] = ()
    spawn_rate: float = 4.0  # balls per second per kind while spawning
    game_duration: float = 120.0  # seconds; 0 means untimed
    name: str = "untitled"
    seed_hint: int | None = None

    def with_scores(
        self,
        cluster_score_per_ball: PerKind | None = None,
        tap_score: PerKind | None = None,
    ) -> "GameDefinition":
        """Copy with score facets replaced; everything else untouched."""
        out = self
        if cluster_score_per_ball is not None:
            out = replace(out, cluster_score_per_ball=cluster_score_per_ball)
        if tap_score is not None:
            out = replace(out, tap_score=tap_score)
        return out


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str


class InvalidDefinition(ValueError):
    """Raised when an operation requires a definition that fails validate()."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        summary = "; ".join(f"{v.path}: {v.code}" for v in violations)
        super().__init__(f"invalid game definition: {summary}")


class DocumentError(ValueError):
    """A definition document could not be parsed. `code` is machine-readable."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


# ---------------------------------------------------------------------------
# validation


def _edge_extent(edge: Edge) -> float:
    return FIELD_WIDTH if edge in (Edge.BOTTOM, Edge.TOP) else FIELD_HEIGHT


def validate(d: GameDefinition) -> list[Violation]:
    """Every invariant violation in `d`, empty when the definition is valid."""
    out: list[Violation] = []

    def bad(code: str, path: str, message: str) -> None:
        out.append(Violation(code, path, message))

    for k in KINDS:
        if d.cluster_threshold[k] < 2:
            bad("threshold_below_2", f"cluster_threshold.{k.key}",
                f"burst threshold must be at least 2, got {d.cluster_threshold[k]}")
        if d.ball_radius[k] <= 0:
            bad("radius_nonpositive", f"ball_radius.{k.key}",
                f"ball radius must be positive, got {d.ball_radius[k]}")
        if d.max_balls[k] < 0:
            bad("max_balls_negative", f"max_balls.{k.key}",
                f"ball cap cannot be negative, got {d.max_balls[k]}")
        if not isinstance(d.tap_action[k], TapAction):
            bad("unknown_tap_action", f"tap_action.{k.key}",
                f"not a tap action: {d.tap_action[k]!r}")

    if d.spawn_rate <= 0:
        bad("spawn_rate_nonpositive", "spawn_rate",
            f"spawn rate must be positive, got {d.spawn_rate}")
    if d.game_duration < 0:
        bad("duration_negative", "game_duration",
            f"duration cannot be negative, got {d.game_duration}")

    p = d.physics
    if not (0.0 <= p.restitution <= 1.0):
        bad("restitution_out_of_range", "physics.restitution",
            f"restitution must lie in [0, 1], got {p.restitution}")
    if p.noise_amplitude < 0:
        bad("noise_negative", "physics.noise_amplitude",
            f"noise amplitude cannot be negative, got {p.noise_amplitude}")
    if p.contact_slop < 0:
        bad("contact_slop_negative", "physics.contact_slop",
            f"contact slop cannot be negative, got {p.contact_slop}")

    for i, seg in enumerate(d.grid.segments):
        for x, y in ((seg.x1, seg.y1), (seg.x2, seg.y2)):
            if not (0.0 <= x <= FIELD_WIDTH and 0.0 <= y <= FIELD_HEIGHT):
                bad("segment_out_of_bounds", f"grid.segments[{i}]",
                    f"endpoint ({x}, {y}) outside the playfield")
                break

    for k in KINDS:
        diameter = 2.0 * d.ball_radius[k]
        for i, iv in enumerate(d.spawn_regions[k]):
            path = f"spawn_regions.{k.key}[{i}]"
            if not (0.0 <= iv.lo < iv.hi <= FIELD_WIDTH):
                bad("spawn_out_of_bounds", path,
                    f"interval [{iv.lo}, {iv.hi}] not within the playfield width")
            elif iv.width <= diameter:
                bad("spawn_too_narrow", path,
                    f"interval width {iv.width} not wider than ball diameter {diameter}")

    for i, r in enumerate(d.exit_regions):
        extent = _edge_extent(r.edge)
        if not (0.0 <= r.lo < r.hi <= extent):
            bad("exit_out_of_bounds", f"exit_regions[{i}]",
                f"interval [{r.lo}, {r.hi}] not within the {r.edge.name.lower()} edge")
    for i, a in enumerate(d.exit_regions):
        for j in range(i + 1, len(d.exit_regions)):
            b = d.exit_regions[j]
            if a.edge == b.edge and min(a.hi, b.hi) - max(a.lo, b.lo) > 0.0:
                bad("exit_overlap", f"exit_regions[{j}]",
                    f"overlaps exit_regions[{i}] on the {a.edge.name.lower()} edge")

    return out


def require_valid(d: GameDefinition) -> GameDefinition:
    violations = validate(d)
    if violations:
        raise InvalidDefinition(violations)
    return d


# ---------------------------------------------------------------------------
# grid catalog

def _segments(*coords: tuple[float, float, float, float]) -> tuple[Segment, ...]:
    return tuple(Segment(*c) for c in coords)


GRID_CATALOG: dict[str, GridLayout] = {
    # no structure at all
    "open": GridLayout((), "open"),
    # vertical walls forming five bins along the floor; traps small groups
    "bins_five": GridLayout(_segments(
        (1.8, 0.0, 1.8, 4.2),
        (3.6, 0.0, 3.6, 4.2),
        (5.4, 0.0, 5.4, 4.2),
        (7.2, 0.0, 7.2, 4.2),
    ), "bins_five"),
    # three wider bins
    "bins_three": GridLayout(_segments(
        (3.0, 0.0, 3.0, 5.0),
        (6.0, 0.0, 6.0, 5.0),
    ), "bins_three"),
    # staggered sloped ledges balls roll off
    "shelves": GridLayout(_segments(
        (0.0, 10.2, 3.4, 9.6),
        (9.0, 7.8, 5.6, 7.2),
        (0.0, 5.0, 3.4, 4.6),
    ), "shelves"),
    # a V that funnels everything through a central gap
    "funnel": GridLayout(_segments(
        (0.0, 11.5, 3.8, 8.0),
        (9.0, 11.5, 5.2, 8.0),
    ), "funnel"),
    # an open-topped box floating mid-field
    "cup": GridLayout(_segments(
        (2.6, 6.0, 2.6, 3.2),
        (2.6, 3.2, 6.4, 3.2),
        (6.4, 3.2, 6.4, 6.0),
    ), "cup"),
    # two rows of short deflectors
    "pachinko": GridLayout(_segments(
        (1.5, 11.2, 2.5, 10.8),
        (4.0, 11.2, 5.0, 10.8),
        (6.5, 11.2, 7.5, 10.8),
        (2.7, 7.4, 3.7, 7.0),
        (5.2, 7.4, 6.2, 7.0),
    ), "pachinko"),
}


# ---------------------------------------------------------------------------
# presets

def _let_it_snow() -> GameDefinition:
    return GameDefinition(
        cluster_threshold=PerKind(4, 4),
        cluster_score_per_ball=PerKind(1, -1),
        tap_action=PerKind(TapAction.NONE, TapAction.EXPLODE),
        tap_score=PerKind(0, -1),
        ball_radius=PerKind(0.42, 0.42),
        max_balls=PerKind(20, 20),
        grid=GRID_CATALOG["bins_five"],
        physics=PhysicsParams(gravity=9.0, restitution=0.35,
                              noise_amplitude=0.5, contact_slop=0.04),
        spawn_regions=PerKind((Interval(0.5, 8.5),), (Interval(0.5, 8.5),)),
        exit_regions=(),
        spawn_rate=4.0,
        game_duration=120.0,
        name="let_it_snow",
    )


def _rain_rain() -> GameDefinition:
    return GameDefinition(
        cluster_threshold=PerKind(3, 4),
        cluster_score_per_ball=PerKind(2, -1),
        tap_action=PerKind(TapAction.NONE, TapAction.EXPLODE),
        tap_score=PerKind(0, -1),
        ball_radius=PerKind(0.38, 0.38),
        max_balls=PerKind(14, 22),
        grid=GRID_CATALOG["funnel"],
        physics=PhysicsParams(gravity=11.0, restitution=0.55,
                              noise_amplitude=0.8, contact_slop=0.04),
        spawn_regions=PerKind(
            (Interval(0.5, 3.0), Interval(6.0, 8.5)),
            (Interval(0.5, 8.5),),
        ),
        exit_regions=(),
        spawn_rate=5.0,
        game_duration=90.0,
        name="rain_rain",
    )


def _jack_frost() -> GameDefinition:
    return GameDefinition(
        cluster_threshold=PerKind(5, 3),
        cluster_score_per_ball=PerKind(1, -2),
        tap_action=PerKind(TapAction.NONE, TapAction.DESTROY),
        tap_score=PerKind(0, -1),
        ball_radius=PerKind(0.5, 0.4),
        max_balls=PerKind(20, 12),
        grid=GRID_CATALOG["shelves"],
        physics=PhysicsParams(gravity=8.0, restitution=0.1,
                              noise_amplitude=0.15, contact_slop=0.05),
        spawn_regions=PerKind((Interval(0.6, 8.4),), (Interval(0.6, 8.4),)),
        exit_regions=(),
        spawn_rate=3.5,
        game_duration=120.0,
        name="jack_frost",
    )


def _slush_slosh() -> GameDefinition:
    drain = PerKind(-1, 2)
    return GameDefinition(
        cluster_threshold=PerKind(4, 4),
        cluster_score_per_ball=PerKind(1, -1),
        tap_action=PerKind(TapAction.IMPULSE, TapAction.EXPLODE),
        tap_score=PerKind(0, -1),
        ball_radius=PerKind(0.36, 0.36),
        max_balls=PerKind(16, 16),
        grid=GRID_CATALOG["open"],
        physics=PhysicsParams(gravity=9.5, restitution=0.8,
                              noise_amplitude=1.2, contact_slop=0.04),
        spawn_regions=PerKind((Interval(2.5, 6.5),), (Interval(2.5, 6.5),)),
        exit_regions=(
            ExitRegion(Edge.BOTTOM, 0.0, 2.0, drain),
            ExitRegion(Edge.BOTTOM, 7.0, 9.0, drain),
        ),
        spawn_rate=4.5,
        game_duration=75.0,
        name="slush_slosh",
    )


_PRESET_BUILDERS = {
    "let_it_snow": _let_it_snow,
    "rain_rain": _rain_rain,
    "jack_frost": _jack_frost,
    "slush_slosh": _slush_slosh,
}


def preset(name: str) -> GameDefinition:
    """One of the four built-in game variants.

    let_it_snow follows the original game's published rules exactly.  The
    other three are house variants: their names are traditional, but every
    parameter value is original to this project.
    """
    try:
        builder = _PRESET_BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None
    return builder()


# ---------------------------------------------------------------------------
# canonical serialization

def _to_document(d: GameDefinition) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": d.name,
        "seed_hint": d.seed_hint,
        "cluster_threshold": d.cluster_threshold.as_dict(int),
        "cluster_score_per_ball": d.cluster_score_per_ball.as_dict(int),
        "tap_action": d.tap_action.as_dict(lambda a: a.name.lower()),
        "tap_score": d.tap_score.as_dict(int),
        "ball_radius": d.ball_radius.as_dict(float),
        "max_balls": d.max_balls.as_dict(int),
        "grid": {
            "catalog_id": d.grid.catalog_id,
            "segments": [[s.x1, s.y1, s.x2, s.y2] for s in d.grid.segments],
        },
        "physics": {
            "gravity": float(d.physics.gravity),
            "restitution": float(d.physics.restitution),
            "noise_amplitude": float(d.physics.noise_amplitude),
            "contact_slop": float(d.physics.contact_slop),
        },
        "spawn_regions": {
            k.key: [[iv.lo, iv.hi] for iv in d.spawn_regions[k]] for k in KINDS
        },
        "exit_regions": [
            {
                "edge": r.edge.name.lower(),
                "lo": float(r.lo),
                "hi": float(r.hi),
                "score": r.score.as_dict(int),
            }
            for r in d.exit_regions
        ],
        "spawn_rate": float(d.spawn_rate),
        "game_duration": float(d.game_duration),
    }


def serialize(d: GameDefinition) -> str:
    """Canonical document text: key-sorted JSON, newline-terminated.

    A pure function of the definition value; equal definitions serialize to
    byte-identical text.
    """
    return json.dumps(_to_document(d), sort_keys=True, indent=2) + "\n"


def _need(doc: dict, key: str, path: str = ""):
    if key not in doc:
        raise DocumentError("missing_field", f"document missing field {path}{key}")
    return doc[key]


def _per_kind(doc: dict, key: str, convert) -> PerKind:
    sub = _need(doc, key)
    if not isinstance(sub, dict):
        raise DocumentError("bad_field", f"{key} must be a mapping with per-kind entries")
    values = {}
    for k in KINDS:
        values[k.key] = convert(_need(sub, k.key, f"{key}."))
    return PerKind(values["positive"], values["negative"])


def _parse_tap_action(raw) -> TapAction:
    try:
        return TapAction[str(raw).upper()]
    except KeyError:
        raise DocumentError("bad_field", f"unknown tap action {raw!r}") from None


def _parse_edge(raw) -> Edge:
    try:
        return Edge[str(raw).upper()]
    except KeyError:
        raise DocumentError("bad_field", f"unknown edge {raw!r}") from None


def deserialize(text: str) -> GameDefinition:
    """Parse a definition document; inverse of serialize for valid definitions."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError("malformed_document", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DocumentError("malformed_document", "top level must be an object")
    version = _need(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise DocumentError("unknown_schema_version",
                            f"schema version {version!r} not supported")

    grid_doc = _need(doc, "grid")
    try:
        segments = tuple(Segment(*(float(c) for c in row))
                         for row in _need(grid_doc, "segments", "grid."))
        grid = GridLayout(segments, grid_doc.get("catalog_id"))
        spawn_doc = _need(doc, "spawn_regions")
        spawn = PerKind(*(
            tuple(Interval(float(lo), float(hi))
                  for lo, hi in _need(spawn_doc, k.key, "spawn_regions."))
            for k in KINDS
        ))
        exits = tuple(
            ExitRegion(
                edge=_parse_edge(_need(r, "edge", "exit_regions.")),
                lo=float(_need(r, "lo", "exit_regions.")),
                hi=float(_need(r, "hi", "exit_regions.")),
                score=PerKind(*(int(_need(_need(r, "score", "exit_regions."),
                                          k.key, "score.")) for k in KINDS)),
            )
            for r in _need(doc, "exit_regions")
        )
        physics_doc = _need(doc, "physics")
        physics = PhysicsParams(
            gravity=float(_need(physics_doc, "gravity", "physics.")),
            restitution=float(_need(physics_doc, "restitution", "physics.")),
            noise_amplitude=float(_need(physics_doc, "noise_amplitude", "physics.")),
            contact_slop=float(_need(physics_doc, "contact_slop", "physics.")),
        )
        seed_hint = doc.get("seed_hint")
        d = GameDefinition(
            cluster_threshold=_per_kind(doc, "cluster_threshold", int),
            cluster_score_per_ball=_per_kind(doc, "cluster_score_per_ball", int),
            tap_action=_per_kind(doc, "tap_action", _parse_tap_action),
            tap_score=_per_kind(doc, "tap_score", int),
            ball_radius=_per_kind(doc, "ball_radius", float),
            max_balls=_per_kind(doc, "max_balls", int),
            grid=grid,
            physics=physics,
            spawn_regions=spawn,
            exit_regions=exits,
            spawn_rate=float(_need(doc, "spawn_rate")),
            game_duration=float(_need(doc, "game_duration")),
            name=str(_need(doc, "name")),
            seed_hint=None if seed_hint is None else int(seed_hint),
        )
    except DocumentError:
        raise
    except (TypeError, ValueError) as exc:
        raise DocumentError("bad_field", f"malformed field value: {exc}") from None

    return require_valid(d)


def definition_hash(d: GameDefinition) -> str:
    """SHA-256 hex digest of the canonical document; names replay headers."""
    return hashlib.sha256(serialize(d).encode("utf-8")).hexdigest()


def gameplay_fields_equal(a: GameDefinition, b: GameDefinition) -> bool:
    """Equality over everything except name and seed_hint metadata."""
    strip = {"name": "", "seed_hint": None}
    return replace(a, **strip) == replace(b, **strip)
