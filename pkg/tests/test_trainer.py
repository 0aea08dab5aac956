import numpy as np
import pytest

from pmpo import (
    BenchmarkFunction,
    ConfigError,
    InputError,
    KlMode,
    LabelConfig,
    LossSpec,
    OptimizerConfig,
    OptimizerState,
    SequenceTask,
    TrainerConfig,
    default_gridworld,
    generate_offline_dataset,
    greedy_policy_from_q,
    optimizer_step,
    records_to_csv,
    train_bandit,
    train_mdp,
    train_offline,
    train_sequence,
    value_iteration,
)
from pmpo.trainer import CSV_COLUMNS


class TestOptimizerStep:
    def test_sgd_ascends(self):
        config = OptimizerConfig(kind="sgd", learning_rate=0.1)
        params, state = optimizer_step(np.zeros(2), np.array([1.0, 0.0]), OptimizerState(), config)
        np.testing.assert_allclose(params, [0.1, 0.0])
        assert state.step == 1

    def test_adam_first_step_magnitude(self):
        config = OptimizerConfig(kind="adam", learning_rate=0.1)
        params, _ = optimizer_step(np.zeros(2), np.array([1.0, -4.0]), OptimizerState(), config)
        # Bias correction makes the first Adam step lr * g / (|g| + eps).
        np.testing.assert_allclose(params, [0.09999999900000002, -0.09999999975], rtol=1e-12)

    def test_zero_gradient_leaves_params(self):
        for kind in ("sgd", "adam"):
            config = OptimizerConfig(kind=kind, learning_rate=0.5)
            params, _ = optimizer_step(np.array([1.0, 2.0]), np.zeros(2), OptimizerState(), config)
            np.testing.assert_allclose(params, [1.0, 2.0])

    def test_adam_state_threads_through(self):
        config = OptimizerConfig(kind="adam", learning_rate=0.1)
        params = np.zeros(1)
        state = OptimizerState()
        for _ in range(3):
            params, state = optimizer_step(params, np.array([1.0]), state, config)
        assert state.step == 3
        # Constant gradient keeps each Adam step at roughly the learning rate.
        np.testing.assert_allclose(params, [0.3], atol=0.01)

    def test_non_finite_gradient_raises(self):
        config = OptimizerConfig(kind="sgd")
        with pytest.raises(InputError):
            optimizer_step(np.zeros(1), np.array([np.nan]), OptimizerState(), config)

    def test_shape_mismatch_raises(self):
        with pytest.raises(InputError):
            optimizer_step(np.zeros(2), np.zeros(3), OptimizerState(), OptimizerConfig())


class TestTrainerConfigValidation:
    def test_defaults_valid(self):
        assert TrainerConfig().problems() == []

    def test_messages_name_offending_fields(self):
        config = TrainerConfig(
            loss=LossSpec(alpha=1.5),
            samples_per_condition=1,
            label=LabelConfig(rule="top_k", k=2),
        )
        messages = config.problems()
        assert any("alpha" in m for m in messages)
        assert any("samples_per_condition < k" in m for m in messages)

    def test_ranking_rules_need_two_samples(self):
        config = TrainerConfig(samples_per_condition=1, label=LabelConfig(rule="best_worst"))
        assert any("samples_per_condition" in m for m in config.problems())
        ok = TrainerConfig(samples_per_condition=1, label=LabelConfig(rule="baseline"))
        assert ok.problems() == []

    def test_never_refresh_is_valid(self):
        assert TrainerConfig(ref_update_interval=None).problems() == []
        bad = TrainerConfig(ref_update_interval=0)
        assert any("ref_update_interval" in m for m in bad.problems())

    def test_unknown_algorithm(self):
        assert any("algorithm" in m for m in TrainerConfig(algorithm="sarsa").problems())

    def test_mixture_validation(self):
        missing = TrainerConfig(algorithm="mixture")
        assert any("mixture" in m for m in missing.problems())
        unknown = TrainerConfig(algorithm="mixture", mixture={"bc": 1.0, "q": 1.0})
        assert any("unknown terms" in m for m in unknown.problems())
        negative = TrainerConfig(algorithm="mixture", mixture={"bc": -1.0})
        assert any(">= 0" in m for m in negative.problems())
        stray = TrainerConfig(algorithm="pmpo", mixture={"bc": 1.0})
        assert any("mixture" in m for m in stray.problems())

    def test_check_raises_config_error(self):
        with pytest.raises(ConfigError):
            TrainerConfig(iterations=0).check()


class TestCsvOutput:
    def test_schema_and_columns(self):
        fn = BenchmarkFunction("sphere", 2)
        config = TrainerConfig(iterations=3, init_mean=(2.0, 2.0), init_std=1.0)
        result = train_bandit(fn, config)
        text = records_to_csv(result.records)
        lines = text.strip().split("\n")
        assert lines[0].startswith("# schema:")
        assert lines[1] == ",".join(CSV_COLUMNS)
        assert "wall_clock" not in lines[1]
        assert len(lines) == 2 + 3

    def test_byte_identical_reruns(self):
        fn = BenchmarkFunction("sphere", 2)
        config = TrainerConfig(iterations=20, seed=3, init_mean=(2.0, -1.0), init_std=1.0)
        a = records_to_csv(train_bandit(fn, config).records)
        b = records_to_csv(train_bandit(fn, config).records)
        assert a == b

    def test_different_seeds_differ(self):
        fn = BenchmarkFunction("sphere", 2)
        base = TrainerConfig(iterations=10, init_mean=(2.0, -1.0), init_std=1.0)
        from dataclasses import replace

        a = records_to_csv(train_bandit(fn, base).records)
        b = records_to_csv(train_bandit(fn, replace(base, seed=1)).records)
        assert a != b


class TestTrainBandit:
    def test_improves_on_sphere(self):
        fn = BenchmarkFunction("sphere", 2)
        config = TrainerConfig(
            iterations=300,
            init_mean=(3.0, -2.0),
            init_std=1.0,
            optimizer=OptimizerConfig(learning_rate=0.05),
        )
        result = train_bandit(fn, config)
        initial = fn.function_value(np.array([3.0, -2.0]))
        assert result.final_metric < 0.05 * initial
        assert not result.collapsed

    def test_invalid_config_raises(self):
        fn = BenchmarkFunction("sphere", 2)
        with pytest.raises(ConfigError):
            train_bandit(fn, TrainerConfig(iterations=0))
        with pytest.raises(ConfigError):
            train_bandit(fn, TrainerConfig(init_mean=(1.0, 2.0, 3.0)))

    def test_record_fields_are_finite_while_healthy(self):
        fn = BenchmarkFunction("rosenbrock", 2)
        config = TrainerConfig(iterations=30, init_mean=(-1.0, 1.0), init_std=0.5)
        result = train_bandit(fn, config)
        for r in result.records:
            assert np.isfinite(r.metric)
            assert np.isfinite(r.loss_value)
            assert np.isfinite(r.param_norm)
        assert result.records[-1].iteration == 29

    def test_reject_only_without_kl_fails(self):
        # Pushing mass away from rejected samples with no anchor destabilizes
        # the Gaussian; the run must end collapsed or clearly worse than an
        # anchored run.
        fn = BenchmarkFunction("sphere", 2)
        config = TrainerConfig(
            iterations=500,
            seed=0,
            loss=LossSpec(alpha=0.0, beta=0.0),
            ref_update_interval=10,
            init_mean=(3.0, -2.0),
            init_std=1.0,
            optimizer=OptimizerConfig(learning_rate=0.05),
        )
        result = train_bandit(fn, config)
        initial = fn.function_value(np.array([3.0, -2.0]))
        assert result.collapsed or result.final_metric > 0.5 * initial


class TestTrainMdp:
    def test_learns_default_gridworld(self):
        mdp = default_gridworld()
        config = TrainerConfig(
            iterations=150,
            seed=0,
            loss=LossSpec(alpha=0.5, beta=0.5),
            ref_update_interval=10,
            eval_interval=25,
            optimizer=OptimizerConfig(learning_rate=0.05),
        )
        result = train_mdp(mdp, config)
        assert result.final_metric > 0.9
        assert not result.collapsed

    def test_metric_refreshed_on_final_iteration(self):
        mdp = default_gridworld()
        config = TrainerConfig(iterations=7, eval_interval=100)
        result = train_mdp(mdp, config)
        assert np.isfinite(result.records[-1].metric)

    def test_deterministic(self):
        mdp = default_gridworld()
        config = TrainerConfig(iterations=10, seed=5, eval_interval=5)
        a = records_to_csv(train_mdp(mdp, config).records)
        b = records_to_csv(train_mdp(mdp, config).records)
        assert a == b


class TestTrainSequence:
    def test_learns_target_token(self):
        task = SequenceTask(4, 6, 0)
        config = TrainerConfig(
            iterations=400,
            seed=0,
            loss=LossSpec(alpha=0.5, beta=0.5, kl_mode=KlMode.per_token()),
            ref_update_interval=5,
            optimizer=OptimizerConfig(learning_rate=0.05),
        )
        result = train_sequence(task, config)
        assert result.final_metric > 4.5
        assert not result.collapsed

    def test_closed_form_mode_falls_back_to_per_token(self):
        task = SequenceTask(3, 4, 1)
        config = TrainerConfig(iterations=5, loss=LossSpec(kl_mode=KlMode.closed_form()))
        result = train_sequence(task, config)
        assert len(result.records) == 5

    def test_deterministic(self):
        task = SequenceTask(4, 6, 0)
        config = TrainerConfig(
            iterations=15, seed=2, loss=LossSpec(kl_mode=KlMode.per_token())
        )
        a = records_to_csv(train_sequence(task, config).records)
        b = records_to_csv(train_sequence(task, config).records)
        assert a == b


class TestTrainOffline:
    def _dataset(self, episodes=20, corruption=0.7, seed=0):
        mdp = default_gridworld()
        _, q = value_iteration(mdp)
        expert = greedy_policy_from_q(q)
        rng = np.random.default_rng([seed, 1001])
        return mdp, generate_offline_dataset(mdp, expert, corruption, episodes, rng, 40)

    def test_requires_mixture_algorithm(self):
        mdp, ds = self._dataset()
        with pytest.raises(ConfigError):
            train_offline(ds, mdp, TrainerConfig(algorithm="pmpo"))

    def test_bc_only_runs(self):
        mdp, ds = self._dataset()
        config = TrainerConfig(
            algorithm="mixture", mixture={"bc": 1.0}, iterations=80, eval_interval=40
        )
        result = train_offline(ds, mdp, config)
        assert len(result.records) == 80
        assert np.isfinite(result.final_metric)
        # The behavior log-likelihood term must improve under ascent.
        assert result.records[-1].mean_score > result.records[0].mean_score

    def test_reject_mixture_uses_beta(self):
        mdp, ds = self._dataset()
        base = TrainerConfig(
            algorithm="mixture",
            mixture={"reject": 1.0, "bc": 1.0},
            iterations=40,
            eval_interval=20,
            loss=LossSpec(beta=1.0),
        )
        result = train_offline(ds, mdp, base)
        assert np.isfinite(result.final_metric)
        assert result.records[0].reject_term != 0.0

    def test_deterministic(self):
        mdp, ds = self._dataset()
        config = TrainerConfig(
            algorithm="mixture", mixture={"accept": 1.0, "bc": 0.5}, iterations=25
        )
        a = records_to_csv(train_offline(ds, mdp, config).records)
        b = records_to_csv(train_offline(ds, mdp, config).records)
        assert a == b

    def test_fraction_zero_like_config_rejected(self):
        mdp, ds = self._dataset()
        with pytest.raises(ConfigError):
            train_offline(
                ds, mdp, TrainerConfig(algorithm="mixture", mixture={"bc": 1.0}, labeled_fraction=0.0)
            )
