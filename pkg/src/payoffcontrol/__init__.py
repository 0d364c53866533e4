"""Payoff control in generalized repeated games.

Models repeated interactions where play continues after each round with a
round-dependent probability, builds the ruling-vector family of Markov
strategies and alliances, detects linear payoff relations those strategies
enforce, verifies or falsifies candidate relations numerically, and
synthesizes controller strategies for a requested relation.
"""

from .control import (
    FalsificationReport,
    PayoffRelation,
    RulingBasis,
    VerificationReport,
    detect_relations,
    enforces_relation,
    falsify_candidate,
    is_trivial,
    joint_conditionals,
    joint_initial,
    relation_vector,
    repeat_indicator,
    ruling_basis,
    sample_markov_strategy,
    verify_relation,
)
from .dynamics import (
    AvgDistributionResult,
    ConstantContinuation,
    ContinuationSchedule,
    Custom,
    Delta,
    FiniteHorizon,
    Infinite,
    InfiniteExpectedRounds,
    MarkovStrategy,
    MonteCarloResult,
    OtherSchedule,
    StrategyProfile,
    average_distribution,
    cesaro_average_estimate,
    classify_schedule,
    effective_payoffs,
    expected_rounds,
    initial_distribution,
    monte_carlo_play,
    repeat_strategy,
    survival_probabilities,
    transition_matrix,
)
from .errors import (
    DimensionMismatchError,
    DuplicateActionLabelError,
    InconsistentStrategyError,
    IndexOutOfRangeError,
    InvalidParamsError,
    MissingRoundCapError,
    NoConvergenceError,
    NonFiniteEntryError,
    ParseError,
    PayoffControlError,
    PlayerOutOfRangeError,
    TrivialTargetError,
    UnknownActionError,
    UnknownKindError,
    UnsupportedScheduleError,
    ValidationError,
)
from .games import (
    GameSpec,
    MixedAction,
    ProfileDistribution,
    build_game,
    builtin_game,
    donation_game,
    expected_payoff,
    prisoners_dilemma,
    profile_from_index,
    profile_index,
    public_goods_game,
)
from .synthesis import Infeasible, SynthesisResult, SynthesisTarget, synthesize

__version__ = "0.1.0"

__all__ = [
    "AvgDistributionResult",
    "ConstantContinuation",
    "ContinuationSchedule",
    "Custom",
    "Delta",
    "DimensionMismatchError",
    "DuplicateActionLabelError",
    "FalsificationReport",
    "FiniteHorizon",
    "GameSpec",
    "InconsistentStrategyError",
    "IndexOutOfRangeError",
    "Infeasible",
    "Infinite",
    "InfiniteExpectedRounds",
    "InvalidParamsError",
    "MarkovStrategy",
    "MissingRoundCapError",
    "MixedAction",
    "MonteCarloResult",
    "NoConvergenceError",
    "NonFiniteEntryError",
    "OtherSchedule",
    "ParseError",
    "PayoffControlError",
    "PayoffRelation",
    "PlayerOutOfRangeError",
    "ProfileDistribution",
    "RulingBasis",
    "StrategyProfile",
    "SynthesisResult",
    "SynthesisTarget",
    "TrivialTargetError",
    "UnknownActionError",
    "UnknownKindError",
    "UnsupportedScheduleError",
    "ValidationError",
    "VerificationReport",
    "average_distribution",
    "build_game",
    "builtin_game",
    "cesaro_average_estimate",
    "classify_schedule",
    "detect_relations",
    "donation_game",
    "effective_payoffs",
    "enforces_relation",
    "expected_payoff",
    "expected_rounds",
    "falsify_candidate",
    "initial_distribution",
    "is_trivial",
    "joint_conditionals",
    "joint_initial",
    "monte_carlo_play",
    "prisoners_dilemma",
    "profile_from_index",
    "profile_index",
    "public_goods_game",
    "relation_vector",
    "repeat_indicator",
    "repeat_strategy",
    "ruling_basis",
    "sample_markov_strategy",
    "survival_probabilities",
    "synthesize",
    "transition_matrix",
    "verify_relation",
]
