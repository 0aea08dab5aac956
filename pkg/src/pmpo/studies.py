"""Run a named preset across its seeds and summarize the headline numbers.

This is the one place that defines, per regime, which scalar a study is
judged by:

bandit    best (minimum) objective value at the policy mean over the whole
          trajectory; convergence means getting close to 0 at least once.
mdp       exact mean greedy return over all non-terminal starts at the
          final iteration.
sequence  exact expected reward of the final policy by full-support
          enumeration (the per-iteration CSV metric is the noisier sampled
          mean over that iteration's four generations).
offline   sampled greedy return at the final evaluation point.
em-exact  final expected value of the EM trajectory.

Tests and demo scripts share this module so a threshold checked in one
place is the same number a reader sees printed in another.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .cli import parse_config
from .em_exact import DiscreteDistribution, run_em
from .envs import (
    expected_sequence_reward,
    generate_offline_dataset,
    greedy_policy_from_q,
    value_iteration,
)
from .errors import ConfigError
from .presets import preset_config
from .trainer import train_bandit, train_mdp, train_offline, train_sequence


@dataclass(frozen=True)
class SeedHeadline:
    seed: int
    headline: float
    final_metric: float
    collapsed: bool


@dataclass(frozen=True)
class StudyResult:
    name: str
    regime: str
    per_seed: tuple[SeedHeadline, ...]

    @property
    def headlines(self) -> np.ndarray:
        return np.array([s.headline for s in self.per_seed], dtype=float)

    @property
    def median_headline(self) -> float:
        return float(np.median(self.headlines))

    @property
    def collapse_count(self) -> int:
        return sum(1 for s in self.per_seed if s.collapsed)

    @property
    def collapsed_in_majority(self) -> bool:
        return 2 * self.collapse_count > len(self.per_seed)


def _best_finite(values: np.ndarray, minimize: bool) -> float:
    finite = values[np.isfinite(values)]
    if not finite.size:
        return float("nan")
    return float(finite.min() if minimize else finite.max())


def run_study(name: str, seeds=None) -> StudyResult:
    """Execute a preset across seeds (default: the preset's own list)."""
    plan, problems = parse_config(preset_config(name))
    if problems or plan is None:
        raise ConfigError(f"preset {name!r} failed to parse: {problems}")

    if plan.regime == "em-exact":
        spec = plan.em_spec
        prior = DiscreteDistribution.from_weights(np.asarray(spec["prior"], dtype=float))
        trajectory = run_em(prior, np.asarray(spec["f"], dtype=float), spec["tau"], spec["iterations"])
        final = float(trajectory[-1].expected_value)
        return StudyResult(name, plan.regime, (SeedHeadline(0, final, final, False),))

    per_seed = []
    for seed in plan.seeds if seeds is None else seeds:
        config = replace(plan.trainer, seed=int(seed))
        if plan.regime == "bandit":
            result = train_bandit(plan.function, config)
            metrics = np.array([r.metric for r in result.records], dtype=float)
            headline = _best_finite(metrics, minimize=True)
        elif plan.regime == "mdp":
            result = train_mdp(plan.mdp, config)
            headline = result.final_metric
        elif plan.regime == "sequence":
            result = train_sequence(plan.task, config)
            headline = expected_sequence_reward(plan.task, result.policy)
        else:
            _, q_star = value_iteration(plan.mdp)
            expert = greedy_policy_from_q(q_star)
            dataset = generate_offline_dataset(
                plan.mdp,
                expert,
                plan.dataset_spec["corruption_fraction"],
                plan.dataset_spec["episodes"],
                np.random.default_rng([int(seed), 1001]),
                plan.dataset_spec["max_steps"],
            )
            result = train_offline(dataset, plan.mdp, config)
            headline = result.final_metric
        per_seed.append(
            SeedHeadline(int(seed), float(headline), result.final_metric, result.collapsed)
        )
    return StudyResult(name, plan.regime, tuple(per_seed))
