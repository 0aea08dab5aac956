import numpy as np
import pytest

from pmpo import (
    AutoregressivePolicy,
    BenchmarkFunction,
    CategoricalPolicy,
    GridworldMdp,
    InputError,
    SequenceTask,
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
from pmpo.envs import (
    ACTION_DELTAS,
    N_ACTIONS,
    episode_rewards_to_go,
    greedy_actions,
    sampled_greedy_return,
)


class TestBenchmarkFunctions:
    def test_sphere_values(self):
        fn = BenchmarkFunction("sphere", 2)
        np.testing.assert_allclose(fn.function_value([0.0, 0.0]), 0.0)
        np.testing.assert_allclose(fn.function_value([1.0, 2.0]), 5.0)
        assert fn.domain == (-5.12, 5.12)

    def test_rosenbrock_values(self):
        fn = BenchmarkFunction("rosenbrock", 2)
        np.testing.assert_allclose(fn.function_value([1.0, 1.0]), 0.0)
        np.testing.assert_allclose(fn.function_value([0.0, 0.0]), 1.0)
        np.testing.assert_allclose(fn.function_value([-1.0, 1.0]), 4.0)
        assert fn.domain == (-2.048, 2.048)

    def test_schwefel_near_zero_at_optimum(self):
        fn = BenchmarkFunction("schwefel", 3)
        point = fn.optimum_point()
        assert fn.function_value(point) < 1e-3
        assert fn.domain == (-500.0, 500.0)

    def test_evaluate_negates(self):
        fn = BenchmarkFunction("sphere", 2)
        np.testing.assert_allclose(evaluate(fn, [1.0, 2.0]), -5.0)

    def test_optimum_point_is_argmin(self, rng):
        for kind, dim in (("sphere", 3), ("rosenbrock", 2), ("schwefel", 2)):
            fn = BenchmarkFunction(kind, dim)
            best = fn.function_value(fn.optimum_point())
            lo, hi = fn.domain
            for _ in range(50):
                assert best <= fn.function_value(rng.uniform(lo, hi, size=dim)) + 1e-9

    def test_invalid_construction(self):
        with pytest.raises(InputError):
            BenchmarkFunction("cubic", 2)
        with pytest.raises(InputError):
            BenchmarkFunction("rosenbrock", 1)
        with pytest.raises(InputError):
            BenchmarkFunction("sphere", 0)


class TestGridworldMdp:
    def _self_loop(self):
        # One free cell whose every move bounces back, earning its entry
        # reward each step: V = r / (1 - gamma).
        return GridworldMdp(
            n_rows=1,
            n_cols=1,
            walls=frozenset(),
            rewards={(0, 0): 1.0},
            terminals=frozenset(),
            gamma=0.9,
        )

    def test_self_loop_value_is_ten(self):
        mdp = self._self_loop()
        v, q = value_iteration(mdp, tol=1e-10)
        np.testing.assert_allclose(v, [10.0], rtol=1e-8)
        np.testing.assert_allclose(q, np.full((1, N_ACTIONS), 10.0), rtol=1e-8)

    def test_step_semantics(self):
        mdp = default_gridworld()
        # Wall bump and boundary bump are no-ops.
        assert mdp.step((0, 0), 0) == (0, 0)
        assert mdp.step((0, 0), 2) == (0, 0)
        assert mdp.step((0, 0), 1) == (1, 0)
        assert mdp.step((0, 0), 3) == (0, 1)
        # Terminals absorb.
        assert mdp.step((7, 7), 0) == (7, 7)

    def test_default_grid_shape(self):
        mdp = default_gridworld()
        assert mdp.n_states == 44
        assert len(mdp.non_terminal_indices()) == 42
        assert (7, 7) in mdp.terminals and (4, 4) in mdp.terminals
        assert mdp.rewards[(7, 7)] == 1.0 and mdp.rewards[(4, 4)] == -1.0

    def test_every_start_can_reach_goal(self):
        mdp = default_gridworld()
        _, q = value_iteration(mdp)
        policy = greedy_policy_from_q(q)
        np.testing.assert_allclose(mean_greedy_return(mdp, policy, 100), 1.0)
        actions = greedy_actions(policy)
        for s in mdp.non_terminal_indices():
            assert episode_return(mdp, actions, int(s), 100) == 1.0

    def test_pit_is_reachable(self):
        mdp = default_gridworld()
        _, q = value_iteration(mdp)
        s = mdp.state_index((4, 5))
        # Moving left from (4,5) enters the pit.
        assert q[s, 2] < 0.0

    def test_policy_critic_matches_linear_solve(self, rng):
        mdp = default_gridworld()
        logits = rng.normal(size=(mdp.n_states, N_ACTIONS))
        policy = CategoricalPolicy(logits)
        q = policy_q_critic(mdp, policy, tol=1e-12)
        # Independent check: solve the linear system for V^pi directly.
        n = mdp.n_states
        pi = np.stack([policy.probs(s) for s in range(n)])
        p_mat = np.zeros((n, n))
        r_vec = np.zeros(n)
        for s in range(n):
            if mdp.terminal_mask[s]:
                continue
            for a in range(N_ACTIONS):
                nxt = mdp.next_state[s, a]
                r_vec[s] += pi[s, a] * mdp.entry_reward[s, a]
                if not mdp.next_terminal[s, a]:
                    p_mat[s, nxt] += pi[s, a]
        v = np.linalg.solve(np.eye(n) - mdp.gamma * p_mat, r_vec)
        expected_q = np.zeros((n, N_ACTIONS))
        for s in range(n):
            if mdp.terminal_mask[s]:
                continue
            for a in range(N_ACTIONS):
                nxt = mdp.next_state[s, a]
                expected_q[s, a] = mdp.entry_reward[s, a]
                if not mdp.next_terminal[s, a]:
                    expected_q[s, a] += mdp.gamma * v[nxt]
        np.testing.assert_allclose(q, expected_q, atol=1e-8)

    def test_optimal_critic_matches_value_iteration(self):
        mdp = default_gridworld()
        _, q_star = value_iteration(mdp, tol=1e-12)
        policy = greedy_policy_from_q(q_star)
        q_pi = policy_q_critic(mdp, policy, tol=1e-12)
        greedy = q_star.argmax(axis=1)
        rows = np.arange(mdp.n_states)
        np.testing.assert_allclose(q_pi[rows, greedy], q_star[rows, greedy], atol=1e-7)

    def test_sampled_return_matches_exact_in_expectation(self):
        mdp = default_gridworld()
        _, q = value_iteration(mdp)
        policy = greedy_policy_from_q(q)
        sampled = sampled_greedy_return(mdp, policy, 200, np.random.default_rng(0), 100)
        np.testing.assert_allclose(sampled, 1.0)

    def test_from_json_validation(self):
        with pytest.raises(InputError):
            gridworld_from_json({"grid": [".X"], "rewards": {}, "terminals": [], "gamma": 0.9})
        with pytest.raises(InputError):
            gridworld_from_json({"grid": [".."], "rewards": {}, "terminals": [], "gamma": 1.0})

    def test_episode_return_cuts_zero_reward_loops(self):
        mdp = default_gridworld()
        # An action table that always moves up loops forever at the top wall.
        actions = np.zeros(mdp.n_states, dtype=int)
        value = episode_return(mdp, actions, mdp.state_index((0, 3)), 10000)
        assert value == 0.0


class TestSequenceTask:
    def test_reward_counts_target(self):
        task = SequenceTask(4, 6, 0)
        assert sequence_reward(task, (0, 0, 1, 0, 2, 3)) == 3.0
        assert sequence_reward(task, (1, 2, 3, 1, 2, 3)) == 0.0
        assert sequence_reward(task, (0,) * 6) == 6.0

    def test_rejects_bad_sequences(self):
        task = SequenceTask(4, 6, 0)
        with pytest.raises(InputError):
            sequence_reward(task, (0, 1, 2, 3, 0, 4))
        with pytest.raises(InputError):
            sequence_reward(task, (0,) * 7)

    def test_task_validation(self):
        with pytest.raises(InputError):
            SequenceTask(4, 6, 4)
        with pytest.raises(InputError):
            SequenceTask(0, 6, 0)
        with pytest.raises(InputError):
            SequenceTask(4, 0, 0)

    def test_expected_reward_uniform_is_length_over_vocab(self):
        task = SequenceTask(4, 6, 0)
        policy = AutoregressivePolicy(np.zeros((1, 5, 4)), 1, 4, 6)
        np.testing.assert_allclose(expected_sequence_reward(task, policy), 1.5, rtol=1e-12)

    def test_expected_reward_concentrated_policy(self):
        task = SequenceTask(3, 4, 2)
        logits = np.zeros((1, 4, 3))
        logits[:, :, 2] = 20.0
        policy = AutoregressivePolicy(logits, 1, 3, 4)
        np.testing.assert_allclose(expected_sequence_reward(task, policy), 4.0, atol=1e-6)

    def test_expected_reward_matches_sampled_mean(self, rng):
        task = SequenceTask(3, 4, 1)
        policy = AutoregressivePolicy(rng.normal(size=(1, 4, 3)), 1, 3, 4)
        exact = expected_sequence_reward(task, policy)
        draws = policy.sample(0, np.random.default_rng(5), 4000)
        sampled = np.mean([sequence_reward(task, y) for y in draws])
        assert abs(exact - sampled) < 0.1

    def test_expected_reward_rejects_mismatched_policy(self):
        task = SequenceTask(4, 6, 0)
        policy = AutoregressivePolicy(np.zeros((1, 4, 3)), 1, 3, 4)
        with pytest.raises(InputError):
            expected_sequence_reward(task, policy)


class TestOfflineData:
    def _expert(self, mdp):
        _, q = value_iteration(mdp)
        return greedy_policy_from_q(q)

    def test_generation_is_deterministic(self):
        mdp = default_gridworld()
        expert = self._expert(mdp)
        a = generate_offline_dataset(mdp, expert, 0.7, 10, np.random.default_rng(3), 40)
        b = generate_offline_dataset(mdp, expert, 0.7, 10, np.random.default_rng(3), 40)
        assert dataset_to_jsonl(a) == dataset_to_jsonl(b)

    def test_corruption_fraction_near_target(self):
        mdp = default_gridworld()
        expert = self._expert(mdp)
        ds = generate_offline_dataset(mdp, expert, 0.7, 60, np.random.default_rng(5), 40)
        flags = [tr.corrupted for tr in ds.transitions()]
        assert abs(np.mean(flags) - 0.7) < 0.05
        assert ds.corruption_fraction == 0.7

    def test_uncorrupted_dataset_follows_expert(self):
        mdp = default_gridworld()
        expert = self._expert(mdp)
        ds = generate_offline_dataset(mdp, expert, 0.0, 10, np.random.default_rng(1), 40)
        greedy = np.stack([expert.probs(s) for s in range(mdp.n_states)]).argmax(axis=1)
        for tr in ds.transitions():
            assert tr.action == greedy[tr.state]
            assert not tr.corrupted

    def test_episodes_end_at_terminal_or_cap(self):
        mdp = default_gridworld()
        expert = self._expert(mdp)
        ds = generate_offline_dataset(mdp, expert, 0.5, 20, np.random.default_rng(2), 15)
        for ep in ds.episodes:
            assert len(ep) <= 15
            for tr in ep[:-1]:
                assert not tr.terminal

    def test_rewards_to_go(self):
        mdp = default_gridworld()
        expert = self._expert(mdp)
        ds = generate_offline_dataset(mdp, expert, 0.0, 3, np.random.default_rng(4), 40)
        ep = ds.episodes[0]
        rtg = episode_rewards_to_go(ep, 0.9)
        assert rtg.shape == (len(ep),)
        direct = sum(tr.reward * 0.9**i for i, tr in enumerate(ep))
        np.testing.assert_allclose(rtg[0], direct, rtol=1e-12)

    def test_fit_state_values_first_visit(self):
        mdp = default_gridworld()
        expert = self._expert(mdp)
        ds = generate_offline_dataset(mdp, expert, 0.0, 40, np.random.default_rng(6), 60)
        values = fit_state_values(ds, mdp.gamma)
        v_star, _ = value_iteration(mdp)
        # Expert rollouts from uniform starts recover V* at visited states.
        for s, v in values.items():
            np.testing.assert_allclose(v, v_star[s], atol=1e-6)

    def test_jsonl_round_trip(self):
        mdp = default_gridworld()
        expert = self._expert(mdp)
        ds = generate_offline_dataset(mdp, expert, 0.4, 5, np.random.default_rng(8), 30)
        clone = dataset_from_jsonl(dataset_to_jsonl(ds))
        assert clone.corruption_fraction == ds.corruption_fraction
        assert len(clone.episodes) == len(ds.episodes)
        assert dataset_to_jsonl(clone) == dataset_to_jsonl(ds)
