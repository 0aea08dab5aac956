"""Preference-based policy optimization on desk-scale problems.

The library trains small parametric policies from accepted/rejected samples.
The central objective weighs an accept log-likelihood term against a reject
term and a forward KL penalty that keeps the policy near a reference;
weighted-likelihood, direct-preference, and behavior-cloning baselines share
the same policies, labeling rules, and training loop. An exact
expectation-maximization module covers the discrete case end to end, and
the environments module provides the benchmark functions, gridworld,
sequence task, and offline datasets used by the experiment harness.
"""

from .em_exact import (
    DiscreteDistribution,
    EmIterate,
    argmax_softmax,
    em_step,
    expected_value,
    kl_discrete,
    logsumexp_bound,
    regularized_objective,
    run_em,
)
from .envs import (
    BenchmarkFunction,
    GridworldMdp,
    OfflineDataset,
    SequenceTask,
    Transition,
    dataset_from_jsonl,
    dataset_to_jsonl,
    default_gridworld,
    episode_return,
    evaluate,
    expected_sequence_reward,
    fit_state_values,
    generate_offline_dataset,
    greedy_policy_from_q,
    gridworld_from_json,
    mean_greedy_return,
    policy_q_critic,
    sequence_reward,
    value_iteration,
)
from .errors import CapacityError, ConfigError, DegenerateInputError, InputError
from .kl import (
    KlMode,
    kl_autoregressive,
    kl_closed_form,
    kl_closed_form_with_grad,
    kl_exact_enumeration,
    kl_monte_carlo,
)
from .labeling import (
    LabeledSampleSet,
    compute_baseline,
    label_advantage,
    label_baseline,
    label_best_worst,
    label_topk,
    labeled_sets_from_jsonl,
    labeled_sets_to_jsonl,
)
from .objectives import (
    LossResult,
    LossSpec,
    PreferenceBatch,
    bc_loss,
    dpo_loss,
    expected_squared_margin,
    ipo_loss,
    log_ratio_variance,
    mpo_weighted_ml_loss,
    mpo_weights,
    negative_form_loss,
    pmpo_loss,
    positive_form_loss,
)
from .policies import (
    AutoregressivePolicy,
    CategoricalPolicy,
    GaussianPolicy,
    enumerate_sequences,
    policy_from_json,
    policy_to_json,
    sequence_log_probs,
)
from .presets import preset_config, preset_json, preset_names
from .studies import SeedHeadline, StudyResult, run_study
from .trainer import (
    LabelConfig,
    OptimizerConfig,
    OptimizerState,
    RunRecord,
    TrainResult,
    TrainerConfig,
    optimizer_step,
    records_to_csv,
    train_bandit,
    train_mdp,
    train_offline,
    train_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "AutoregressivePolicy",
    "BenchmarkFunction",
    "CapacityError",
    "CategoricalPolicy",
    "ConfigError",
    "DegenerateInputError",
    "DiscreteDistribution",
    "EmIterate",
    "GaussianPolicy",
    "GridworldMdp",
    "InputError",
    "KlMode",
    "LabelConfig",
    "LabeledSampleSet",
    "LossResult",
    "LossSpec",
    "OfflineDataset",
    "OptimizerConfig",
    "OptimizerState",
    "PreferenceBatch",
    "RunRecord",
    "SeedHeadline",
    "SequenceTask",
    "StudyResult",
    "TrainResult",
    "TrainerConfig",
    "Transition",
    "argmax_softmax",
    "bc_loss",
    "compute_baseline",
    "dataset_from_jsonl",
    "dataset_to_jsonl",
    "default_gridworld",
    "dpo_loss",
    "em_step",
    "enumerate_sequences",
    "episode_return",
    "evaluate",
    "expected_sequence_reward",
    "expected_squared_margin",
    "expected_value",
    "fit_state_values",
    "generate_offline_dataset",
    "greedy_policy_from_q",
    "gridworld_from_json",
    "ipo_loss",
    "kl_autoregressive",
    "kl_closed_form",
    "kl_closed_form_with_grad",
    "kl_discrete",
    "kl_exact_enumeration",
    "kl_monte_carlo",
    "label_advantage",
    "label_baseline",
    "label_best_worst",
    "label_topk",
    "labeled_sets_from_jsonl",
    "labeled_sets_to_jsonl",
    "log_ratio_variance",
    "logsumexp_bound",
    "mean_greedy_return",
    "mpo_weighted_ml_loss",
    "mpo_weights",
    "negative_form_loss",
    "optimizer_step",
    "pmpo_loss",
    "policy_from_json",
    "policy_q_critic",
    "policy_to_json",
    "positive_form_loss",
    "preset_config",
    "preset_json",
    "preset_names",
    "records_to_csv",
    "regularized_objective",
    "run_em",
    "run_study",
    "sequence_log_probs",
    "sequence_reward",
    "train_bandit",
    "train_mdp",
    "train_offline",
    "train_sequence",
    "value_iteration",
]
