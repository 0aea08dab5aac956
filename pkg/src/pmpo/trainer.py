"""The improvement loop: sample from the reference, evaluate, label, step.

Four regimes share one skeleton. Per iteration: draw M outputs per condition
from pi_ref, score them, turn scores into accept/reject labels, take one
ascent step on the configured loss, and refresh pi_ref every N iterations.
All randomness flows from one seeded generator per run, so a run is
bit-reproducible given its config.

Collapse handling: a non-finite score, gradient, or parameter halts the run
with a diagnostic record; parameter-norm growth beyond 10x the starting
scale flags the run as collapsed but lets it continue (divergence is a
valid, measurable outcome). The norm baseline is floored at sqrt(n_params)
so zero-initialized logit tables are not flagged by ordinary convergence.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .envs import (
    BenchmarkFunction,
    GridworldMdp,
    N_ACTIONS,
    OfflineDataset,
    SequenceTask,
    episode_rewards_to_go,
    evaluate,
    fit_state_values,
    mean_greedy_return,
    policy_q_critic,
    sampled_greedy_return,
    sequence_reward,
)
from .errors import ConfigError, InputError
from .kl import KlMode, kl_autoregressive, kl_closed_form
from .labeling import (
    LabeledSampleSet,
    compute_baseline,
    label_advantage,
    label_baseline,
    label_best_worst,
    label_topk,
)
from .objectives import (
    LossSpec,
    _output_key,
    bc_loss,
    dpo_loss,
    ipo_loss,
    mpo_weighted_ml_loss,
    pmpo_loss,
)
from .policies import (
    AutoregressivePolicy,
    CategoricalPolicy,
    GaussianPolicy,
)

ALGORITHMS = ("pmpo", "mpo", "dpo", "ipo", "bc", "mixture")
MIXTURE_TERMS = ("bc", "accept", "reject")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def problems(self) -> list[str]:
        out = []
        if self.kind not in ("sgd", "adam"):
            out.append(f"optimizer.kind must be 'sgd' or 'adam', got {self.kind!r}")
        if not np.isfinite(self.learning_rate) or self.learning_rate <= 0.0:
            out.append(f"optimizer.learning_rate must be > 0, got {self.learning_rate}")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not np.isfinite(v) or not 0.0 <= v < 1.0:
                out.append(f"optimizer.{name} must be in [0, 1), got {v}")
        if not np.isfinite(self.adam_epsilon) or self.adam_epsilon <= 0.0:
            out.append(f"optimizer.adam_epsilon must be > 0, got {self.adam_epsilon}")
        return out


@dataclass
class OptimizerState:
    step: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def optimizer_step(
    params: np.ndarray, gradient: np.ndarray, state: OptimizerState, config: OptimizerConfig
) -> tuple[np.ndarray, OptimizerState]:
    """One ascent step on the maximization objective."""
    params = np.asarray(params, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    if params.shape != gradient.shape:
        raise InputError("params and gradient shapes differ")
    if not np.all(np.isfinite(gradient)):
        raise InputError("non-finite gradient")
    if config.kind == "sgd":
        return params + config.learning_rate * gradient, OptimizerState(state.step + 1)
    m = state.m if state.m is not None else np.zeros_like(params)
    v = state.v if state.v is not None else np.zeros_like(params)
    t = state.step + 1
    m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * gradient
    v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * gradient * gradient
    m_hat = m / (1.0 - config.adam_beta1**t)
    v_hat = v / (1.0 - config.adam_beta2**t)
    update = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
    return params + update, OptimizerState(t, m, v)


@dataclass(frozen=True)
class LabelConfig:
    rule: str = "top_k"
    k: int = 2
    baseline_kind: str = "mean"

    def problems(self) -> list[str]:
        out = []
        if self.rule not in ("top_k", "baseline", "best_worst"):
            out.append(f"label.rule must be top_k, baseline, or best_worst, got {self.rule!r}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            out.append(f"label.k must be a positive integer, got {self.k!r}")
        if self.baseline_kind not in ("mean", "median"):
            out.append(f"label.baseline_kind must be mean or median, got {self.baseline_kind!r}")
        return out


@dataclass(frozen=True)
class TrainerConfig:
    """Declarative description of one training run.

    ref_update_interval None means the reference is never refreshed.
    init_mean/init_std override the bandit policy initialization (default:
    domain center, a quarter of the domain width). mixture maps term names
    (bc, accept, reject) to nonnegative weights for the offline regime.
    """

    algorithm: str = "pmpo"
    loss: LossSpec = field(default_factory=LossSpec)
    label: LabelConfig = field(default_factory=LabelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    samples_per_condition: int = 4
    ref_update_interval: int | None = 1
    iterations: int = 500
    seed: int = 0
    eval_interval: int = 25
    grad_clip_norm: float = 10.0
    max_steps: int = 100
    init_mean: tuple | None = None
    init_std: float | None = None
    context_order: int = 1
    mixture: dict | None = None
    labeled_fraction: float = 1.0
    eval_episodes: int = 100

    def problems(self) -> list[str]:
        out = []
        if self.algorithm not in ALGORITHMS:
            out.append(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        out.extend(self.loss.problems())
        out.extend(self.label.problems())
        out.extend(self.optimizer.problems())
        m = self.samples_per_condition
        if not isinstance(m, (int, np.integer)) or m < 1:
            out.append(f"samples_per_condition must be a positive integer, got {m!r}")
        else:
            if self.label.rule == "top_k" and self.label.k > m:
                out.append(f"samples_per_condition < k ({m} < {self.label.k})")
            if self.label.rule in ("top_k", "best_worst") and m < 2:
                out.append("samples_per_condition must be >= 2 for ranking label rules")
        n = self.ref_update_interval
        if n is not None and (not isinstance(n, (int, np.integer)) or n < 1):
            out.append(f"ref_update_interval must be a positive integer or null, got {n!r}")
        for name, minimum in (("iterations", 1), ("eval_interval", 1), ("max_steps", 1), ("eval_episodes", 1)):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < minimum:
                out.append(f"{name} must be an integer >= {minimum}, got {v!r}")
        if not np.isfinite(self.grad_clip_norm) or self.grad_clip_norm <= 0.0:
            out.append(f"grad_clip_norm must be > 0, got {self.grad_clip_norm}")
        if not isinstance(self.context_order, (int, np.integer)) or self.context_order < 0:
            out.append(f"context_order must be a nonnegative integer, got {self.context_order!r}")
        if self.init_std is not None and (not np.isfinite(self.init_std) or self.init_std <= 0.0):
            out.append(f"init_std must be > 0, got {self.init_std}")
        if not 0.0 < self.labeled_fraction <= 1.0:
            out.append(f"labeled_fraction must be in (0, 1], got {self.labeled_fraction}")
        if self.algorithm == "mixture":
            if not self.mixture:
                out.append("mixture weights required when algorithm is 'mixture'")
            else:
                unknown = set(self.mixture) - set(MIXTURE_TERMS)
                if unknown:
                    out.append(f"mixture has unknown terms {sorted(unknown)}; expected {MIXTURE_TERMS}")
                bad = {k: v for k, v in self.mixture.items() if not np.isfinite(v) or v < 0.0}
                if bad:
                    out.append(f"mixture weights must be finite and >= 0, got {bad}")
                elif not unknown and sum(self.mixture.values()) <= 0.0:
                    out.append("mixture weights must not all be zero")
        elif self.mixture:
            out.append("mixture weights only apply when algorithm is 'mixture'")
        return out

    def check(self):
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class RunRecord:
    """One training iteration's trace.

    metric is the regime's headline number: raw objective value at the
    policy mean (bandit, lower is better), greedy mean return at the last
    evaluation point (gridworld/offline), or mean sampled reward this
    iteration (sequence). kl_term repeats the loss's KL component; for the
    offline regime both KL fields hold the theta-dependent part of the
    behavior KL (the negative mean log-likelihood on all data).
    """

    iteration: int
    metric: float
    mean_score: float
    loss_value: float
    accept_term: float
    reject_term: float
    kl_term: float
    kl_to_ref: float
    param_norm: float
    wall_clock_ms: float


CSV_SCHEMA = "pmpo-csv-1"
CSV_COLUMNS = (
    "iteration",
    "metric",
    "mean_score",
    "loss_value",
    "accept_term",
    "reject_term",
    "kl_term",
    "kl_to_ref",
    "param_norm",
)


def records_to_csv(records) -> str:
    """Deterministic CSV: schema comment, header, one row per iteration.

    Wall-clock is deliberately not a column; rows must be byte-identical
    across reruns of the same config and seed.
    """
    lines = [f"# schema: {CSV_SCHEMA}", ",".join(CSV_COLUMNS)]
    for r in records:
        row = [str(r.iteration)] + [repr(float(getattr(r, c))) for c in CSV_COLUMNS[1:]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@dataclass
class TrainResult:
    records: list[RunRecord]
    policy: object
    collapsed: bool
    halted: str | None = None

    @property
    def final_metric(self) -> float:
        return self.records[-1].metric if self.records else float("nan")


def _collapse_threshold(params: np.ndarray) -> float:
    return 10.0 * max(float(np.linalg.norm(params)), math.sqrt(params.size), 1.0)


def _clip(gradient: np.ndarray, clip_norm: float) -> np.ndarray:
    norm = float(np.linalg.norm(gradient))
    if norm > clip_norm:
        return gradient * (clip_norm / norm)
    return gradient


def _label_samples(config: TrainerConfig, samples, scores, condition) -> LabeledSampleSet:
    rule = config.label.rule
    if rule == "top_k":
        return label_topk(samples, scores, config.label.k, condition)
    if rule == "baseline":
        return label_baseline(samples, scores, compute_baseline(scores, config.label.baseline_kind), condition)
    return label_best_worst(samples, scores, condition)


def _preference_step(config: TrainerConfig, labeled: LabeledSampleSet, theta, ref, rng):
    """Loss result and ascent gradient for one condition; None if unusable.

    dpo/ipo always consume the best/worst pair of the labeled samples and
    are skipped for a condition whose best and worst outputs coincide.
    """
    algorithm = config.algorithm
    spec = config.loss
    if algorithm == "pmpo":
        batch = labeled.to_preference_batch()
        if not batch.accepted and not batch.rejected:
            return None
        res = pmpo_loss(batch, theta, ref, spec, rng)
        return res, res.gradient
    if algorithm == "mpo":
        res = mpo_weighted_ml_loss(labeled.condition, labeled.samples, labeled.f_values, theta, spec.eta)
        return res, res.gradient
    if algorithm == "bc":
        accepted = labeled.accepted()
        if not accepted:
            return None
        res = bc_loss(labeled.condition, accepted, theta)
        return res, res.gradient
    pair = label_best_worst(labeled.samples, labeled.f_values, labeled.condition)
    y_best, y_worst = pair.samples
    if _output_key(y_best) == _output_key(y_worst):
        return None
    if algorithm == "dpo":
        res = dpo_loss(labeled.condition, y_best, y_worst, theta, ref, spec.dpo_beta)
    else:
        res = ipo_loss(labeled.condition, y_best, y_worst, theta, ref, spec.ipo_beta)
    # dpo/ipo are minimization losses; ascend their negation.
    return res, -res.gradient


def _diagnostic_record(iteration: int, metric: float, started: float) -> RunRecord:
    nan = float("nan")
    return RunRecord(
        iteration, metric, nan, nan, nan, nan, nan, nan, nan,
        (time.perf_counter() - started) * 1000.0,
    )


def train_bandit(fn: BenchmarkFunction, config: TrainerConfig) -> TrainResult:
    """Benchmark-function regime with a diagonal Gaussian policy.

    The recorded metric is the raw function value at the policy mean after
    each update (lower is better).
    """
    config.check()
    rng = np.random.default_rng([config.seed, 0])
    lo, hi = fn.domain
    mean = np.asarray(config.init_mean, dtype=float) if config.init_mean is not None else np.full(
        fn.dimension, (lo + hi) / 2.0
    )
    if mean.shape != (fn.dimension,):
        raise ConfigError(f"init_mean shape {mean.shape} does not match dimension {fn.dimension}")
    std = config.init_std if config.init_std is not None else (hi - lo) / 4.0
    policy = GaussianPolicy(mean, np.full(fn.dimension, np.log(std)))
    ref = policy
    state = OptimizerState()
    threshold = _collapse_threshold(policy.params())
    records: list[RunRecord] = []
    collapsed = False
    halted = None
    for it in range(config.iterations):
        started = time.perf_counter()
        kl_start = kl_closed_form(ref, policy)
        samples = ref.sample(None, rng, config.samples_per_condition)
        if not all(np.all(np.isfinite(y)) for y in samples):
            collapsed, halted = True, "non-finite sample"
            records.append(_diagnostic_record(it, _bandit_metric(fn, policy), started))
            break
        scores = [evaluate(fn, y) for y in samples]
        if not np.all(np.isfinite(scores)):
            collapsed, halted = True, "non-finite evaluation score"
            records.append(_diagnostic_record(it, _bandit_metric(fn, policy), started))
            break
        labeled = _label_samples(config, samples, scores, None)
        out = _preference_step(config, labeled, policy, ref, rng)
        if out is None:
            res_values = (0.0, 0.0, 0.0, 0.0)
            gradient = np.zeros(policy.n_params)
        else:
            res, gradient = out
            res_values = (res.value, res.accept_term, res.reject_term, res.kl_term)
        if not np.all(np.isfinite(gradient)):
            collapsed, halted = True, "non-finite gradient"
            records.append(_diagnostic_record(it, _bandit_metric(fn, policy), started))
            break
        params, state = optimizer_step(policy.params(), _clip(gradient, config.grad_clip_norm), state, config.optimizer)
        if not np.all(np.isfinite(params)):
            collapsed, halted = True, "non-finite parameters"
            records.append(_diagnostic_record(it, _bandit_metric(fn, policy), started))
            break
        policy = policy.with_params(params)
        norm = float(np.linalg.norm(params))
        if norm > threshold:
            collapsed = True
        records.append(
            RunRecord(
                it,
                _bandit_metric(fn, policy),
                float(np.mean(scores)),
                res_values[0],
                res_values[1],
                res_values[2],
                res_values[3],
                kl_start,
                norm,
                (time.perf_counter() - started) * 1000.0,
            )
        )
        if config.ref_update_interval is not None and (it + 1) % config.ref_update_interval == 0:
            ref = policy
    return TrainResult(records, policy, collapsed, halted)


def _bandit_metric(fn: BenchmarkFunction, policy: GaussianPolicy) -> float:
    value = fn.function_value(policy.mean) if np.all(np.isfinite(policy.mean)) else float("inf")
    return float(value) if np.isfinite(value) else float("inf")


def _mean_categorical_kl(ref: CategoricalPolicy, theta: CategoricalPolicy, conditions) -> float:
    ref_log = ref.log_prob_table[conditions]
    theta_log = theta.log_prob_table[conditions]
    return float(np.mean(np.sum(np.exp(ref_log) * (ref_log - theta_log), axis=1)))


def train_mdp(mdp: GridworldMdp, config: TrainerConfig) -> TrainResult:
    """Gridworld regime with a tabular categorical policy over all states.

    Actions are proposed by the reference policy and ranked by the exact Q
    of the current policy, recomputed every iteration; this is the tabular
    analog of a critic trained alongside the actor, so ranking quality
    degrades when the policy itself does. The metric is the exact mean
    undiscounted greedy return over all non-terminal starts, refreshed
    every eval_interval iterations and on the final one.
    """
    config.check()
    rng = np.random.default_rng([config.seed, 1])
    policy = CategoricalPolicy(np.zeros((mdp.n_states, N_ACTIONS)))
    ref = policy
    state = OptimizerState()
    threshold = _collapse_threshold(policy.params())
    conditions = [int(s) for s in mdp.non_terminal_indices()]
    records: list[RunRecord] = []
    collapsed = False
    halted = None
    metric = float("nan")
    for it in range(config.iterations):
        started = time.perf_counter()
        kl_start = _mean_categorical_kl(ref, policy, conditions)
        q_table = policy_q_critic(mdp, policy, tol=1e-10)
        total_grad = np.zeros(policy.n_params)
        sums = np.zeros(4)
        n_used = 0
        score_sum = 0.0
        score_n = 0
        for s in conditions:
            actions = ref.sample(s, rng, config.samples_per_condition)
            f = [float(q_table[s, a]) for a in actions]
            score_sum += sum(f)
            score_n += len(f)
            labeled = _label_samples(config, actions, f, s)
            out = _preference_step(config, labeled, policy, ref, rng)
            if out is None:
                continue
            res, gradient = out
            total_grad += gradient
            sums += (res.value, res.accept_term, res.reject_term, res.kl_term)
            n_used += 1
        if n_used:
            total_grad /= n_used
            sums /= n_used
        if not np.all(np.isfinite(total_grad)):
            collapsed, halted = True, "non-finite gradient"
            records.append(_diagnostic_record(it, metric, started))
            break
        params, state = optimizer_step(policy.params(), _clip(total_grad, config.grad_clip_norm), state, config.optimizer)
        policy = policy.with_params(params)
        norm = float(np.linalg.norm(params))
        if norm > threshold:
            collapsed = True
        if it == 0 or (it + 1) % config.eval_interval == 0 or it == config.iterations - 1:
            metric = mean_greedy_return(mdp, policy, config.max_steps)
        records.append(
            RunRecord(
                it,
                metric,
                score_sum / max(score_n, 1),
                float(sums[0]),
                float(sums[1]),
                float(sums[2]),
                float(sums[3]),
                kl_start,
                norm,
                (time.perf_counter() - started) * 1000.0,
            )
        )
        if config.ref_update_interval is not None and (it + 1) % config.ref_update_interval == 0:
            ref = policy
    return TrainResult(records, policy, collapsed, halted)


def train_sequence(task: SequenceTask, config: TrainerConfig) -> TrainResult:
    """Sequence regime with a single-condition autoregressive policy.

    The KL term uses the per-token estimator; a closed-form KL mode in the
    config falls back to it, since no closed form exists for sequences. The
    metric is the mean reward of this iteration's sampled generations.
    """
    config.check()
    loss = config.loss
    if loss.kl_mode.kind == "closed_form":
        loss = replace(loss, kl_mode=KlMode.per_token())
        config = replace(config, loss=loss)
    rng = np.random.default_rng([config.seed, 2])
    n_contexts = (task.vocab_size + 1) ** config.context_order
    policy = AutoregressivePolicy(
        np.zeros((1, n_contexts, task.vocab_size)), config.context_order, task.vocab_size, task.length
    )
    ref = policy
    state = OptimizerState()
    threshold = _collapse_threshold(policy.params())
    records: list[RunRecord] = []
    collapsed = False
    halted = None
    for it in range(config.iterations):
        started = time.perf_counter()
        kl_start = kl_autoregressive(ref, policy, 0, ref.sample(0, rng, 1)[0])
        samples = ref.sample(0, rng, config.samples_per_condition)
        rewards = [sequence_reward(task, y) for y in samples]
        labeled = _label_samples(config, samples, rewards, 0)
        out = _preference_step(config, labeled, policy, ref, rng)
        if out is None:
            res_values = (0.0, 0.0, 0.0, 0.0)
            gradient = np.zeros(policy.n_params)
        else:
            res, gradient = out
            res_values = (res.value, res.accept_term, res.reject_term, res.kl_term)
        if not np.all(np.isfinite(gradient)):
            collapsed, halted = True, "non-finite gradient"
            records.append(_diagnostic_record(it, float(np.mean(rewards)), started))
            break
        params, state = optimizer_step(policy.params(), _clip(gradient, config.grad_clip_norm), state, config.optimizer)
        policy = policy.with_params(params)
        norm = float(np.linalg.norm(params))
        if norm > threshold:
            collapsed = True
        records.append(
            RunRecord(
                it,
                float(np.mean(rewards)),
                float(np.mean(rewards)),
                res_values[0],
                res_values[1],
                res_values[2],
                res_values[3],
                kl_start,
                norm,
                (time.perf_counter() - started) * 1000.0,
            )
        )
        if config.ref_update_interval is not None and (it + 1) % config.ref_update_interval == 0:
            ref = policy
    return TrainResult(records, policy, collapsed, halted)


def _count_grad(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    return counts - counts.sum(axis=1, keepdims=True) * probs


def train_offline(dataset: OfflineDataset, mdp: GridworldMdp, config: TrainerConfig) -> TrainResult:
    """Offline loss-mixture regime on a fixed transition dataset.

    The first labeled_fraction of episodes get advantage-sign labels against
    a first-visit Monte Carlo value table fit on the full dataset. The
    objective is sum_t w_t * term_t over the configured mixture:

        bc:     mean log-likelihood over all transitions
        accept: mean log-likelihood over accepted labeled transitions
        reject: negated mean log-likelihood over rejected labeled
                transitions, minus loss.beta times the theta-dependent part
                of KL(behavior || theta) estimated on all transitions

    The reference policy is never refreshed (and never enters the sample
    -based KL). The metric is the sampled greedy return over eval_episodes
    episodes; the final record holds the run's headline return.
    """
    config.check()
    if config.algorithm != "mixture":
        raise ConfigError("offline training requires algorithm 'mixture'")
    episodes = dataset.episodes
    if not episodes:
        raise ConfigError("dataset has no episodes")
    weights = {k: float(v) for k, v in config.mixture.items() if v > 0.0}
    values = fit_state_values(dataset, mdp.gamma)
    n_labeled = max(1, math.ceil(config.labeled_fraction * len(episodes)))
    triples = []
    for ep in episodes[:n_labeled]:
        rtg = episode_rewards_to_go(ep, mdp.gamma)
        triples.extend((tr.state, tr.action, float(g)) for tr, g in zip(ep, rtg))
    labeled_sets = label_advantage(triples, values)

    shape = (mdp.n_states, N_ACTIONS)
    counts_all = np.zeros(shape)
    for tr in dataset.transitions():
        counts_all[tr.state, tr.action] += 1.0
    counts_acc = np.zeros(shape)
    counts_rej = np.zeros(shape)
    for s in labeled_sets:
        for y, accept in zip(s.samples, s.labels):
            (counts_acc if accept else counts_rej)[s.condition, y] += 1.0
    n_all = counts_all.sum()
    n_acc = counts_acc.sum()
    n_rej = counts_rej.sum()
    if weights.get("accept") and n_acc == 0:
        raise ConfigError("mixture uses the accept term but no transitions were accepted")
    if weights.get("reject") and n_rej == 0:
        raise ConfigError("mixture uses the reject term but no transitions were rejected")

    beta = config.loss.beta
    policy = CategoricalPolicy(np.zeros(shape))
    state = OptimizerState()
    threshold = _collapse_threshold(policy.params())
    records: list[RunRecord] = []
    collapsed = False
    metric = float("nan")
    for it in range(config.iterations):
        started = time.perf_counter()
        log_p = policy.log_prob_table
        probs = np.exp(log_p)
        mean_all = float((counts_all * log_p).sum() / n_all)
        grad_all = _count_grad(counts_all, probs) / n_all
        value = 0.0
        gradient = np.zeros(shape)
        accept_term = reject_term = 0.0
        if "bc" in weights:
            value += weights["bc"] * mean_all
            gradient += weights["bc"] * grad_all
        if "accept" in weights:
            accept_term = float((counts_acc * log_p).sum() / n_acc)
            value += weights["accept"] * accept_term
            gradient += weights["accept"] * _count_grad(counts_acc, probs) / n_acc
        if "reject" in weights:
            reject_term = float((counts_rej * log_p).sum() / n_rej)
            value += weights["reject"] * (-reject_term + beta * mean_all)
            gradient += weights["reject"] * (
                -_count_grad(counts_rej, probs) / n_rej + beta * grad_all
            )
        params, state = optimizer_step(
            policy.params(), _clip(gradient.ravel(), config.grad_clip_norm), state, config.optimizer
        )
        policy = policy.with_params(params)
        norm = float(np.linalg.norm(params))
        if norm > threshold:
            collapsed = True
        if it == 0 or (it + 1) % config.eval_interval == 0 or it == config.iterations - 1:
            eval_rng = np.random.default_rng([config.seed, 4])
            metric = sampled_greedy_return(mdp, policy, config.eval_episodes, eval_rng, config.max_steps)
        records.append(
            RunRecord(
                it,
                metric,
                mean_all,
                value,
                accept_term,
                reject_term,
                -mean_all,
                -mean_all,
                norm,
                (time.perf_counter() - started) * 1000.0,
            )
        )
    return TrainResult(records, policy, collapsed, None)
