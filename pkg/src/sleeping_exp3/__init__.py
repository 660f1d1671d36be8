"""Sleeping EXP3 for adversarial bandits with multiple plays and stochastic availability."""

from .core import (
    ConfigError,
    EmptyAvailabilitySet,
    EnumerationTooLarge,
    FeedbackMismatch,
    FeedbackPending,
    InfeasibleCapping,
    InsufficientArms,
    InvalidK,
    LossOutOfRange,
    NotInScaledCappedSimplex,
    SleepingBanditError,
    TraceTooShort,
    make_rng,
    normalize_over_set,
    sample_bernoulli_set,
)
from .decomposition import CornerDecomposition, decompose, sample_corner
from .environment import (
    Environment,
    EnvironmentConfig,
    LossGeneratorSpec,
    RoundRecord,
    run_episode,
    write_trace_csv,
)
from .estimator import (
    AvailabilityEstimate,
    exact_joint_probability,
    monte_carlo_joint_probability,
    record_availability,
)
from .oracle import best_policy, regret, regret_curve
from .policy import ParameterSchedule, SelectionResult, SleepingExp3MP, lambda_at
from .projection import CappedDistribution, ScaledProbabilityVector, cap_project, scaled_probabilities
from .runner import ExperimentSpec, compare_estimators, load_spec, oracle_check, run_experiment

__version__ = "0.1.0"
