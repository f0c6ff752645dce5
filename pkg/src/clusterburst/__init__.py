"""A playable, modifiable, generatable space of cluster-burst ball games.

The package simulates deterministic 2D games of falling balls that burst
when same-kind clusters reach a threshold, exposes the nine-facet design
space those games live in, plays them with assistant and novice policies,
and samples new score-balanced variants by Monte-Carlo playtesting.
"""

from .definition import (
    FIELD_HEIGHT,
    FIELD_WIDTH,
    PRESET_NAMES,
    BallKind,
    Edge,
    ExitRegion,
    GameDefinition,
    GridLayout,
    Interval,
    InvalidDefinition,
    PerKind,
    PhysicsParams,
    Segment,
    TapAction,
    Violation,
    definition_hash,
    deserialize,
    preset,
    serialize,
    validate,
)
from .state import (
    TICKS_PER_SECOND,
    TIMESTEP,
    Ball,
    GameState,
    SimulationError,
    StepEvents,
    contact_graph,
    init_state,
    step,
)
from .rules import (
    Cluster,
    ClusterReport,
    InputEvent,
    TapOutcome,
    TapResult,
    TapSource,
    TickReport,
    apply_bursts,
    apply_exit_scoring,
    apply_tap,
    detect_clusters,
    tick,
)
from .ai import (
    AssistConfig,
    NoviceConfig,
    PlannedTap,
    PolicyId,
    assess_threats,
    assistant_act,
    novice_act,
)
from .generator import (
    BalanceOutcome,
    BalanceReport,
    FrequencyHistogram,
    SamplingConstraints,
    UnsatisfiableConstraints,
    balance_scores,
    compute_balance_report,
    estimate_frequencies,
    generate_balanced,
    is_playable,
    sample_definition,
)
from .harness import (
    BatchMetrics,
    BurstEvent,
    GameResult,
    LevelStats,
    batch,
    measure_throughput,
    replay_verify,
    run_game,
)
from .replay import ReplayError, ReplayLog, read_replay, write_replay
from .rng import SplitMix64, derive_seed

__version__ = "0.1.0"
