import numpy as np
import pytest
from scipy import stats

from pmpo import (
    AutoregressivePolicy,
    CapacityError,
    CategoricalPolicy,
    GaussianPolicy,
    InputError,
    enumerate_sequences,
    policy_from_json,
    policy_to_json,
    sequence_log_probs,
)
from pmpo.policies import STD_FLOOR

from conftest import assert_gradient_close


class TestGaussianPolicy:
    def test_standard_normal_log_prob(self):
        policy = GaussianPolicy(np.zeros(1), np.zeros(1))
        np.testing.assert_allclose(policy.log_prob(None, [0.0]), -0.9189385332046727, rtol=1e-14)
        policy2 = GaussianPolicy(np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(policy2.log_prob(None, [0.0, 0.0]), -1.8378770664093453, rtol=1e-14)

    def test_log_prob_matches_scipy(self, rng):
        for _ in range(20):
            d = int(rng.integers(1, 5))
            mean = rng.normal(size=d)
            log_std = rng.normal(size=d) * 0.5
            y = rng.normal(size=d) * 3.0
            policy = GaussianPolicy(mean, log_std)
            expected = stats.norm.logpdf(y, mean, np.exp(log_std)).sum()
            np.testing.assert_allclose(policy.log_prob(None, y), expected, rtol=1e-12)

    def test_params_layout_round_trip(self):
        policy = GaussianPolicy([1.0, 2.0], [0.1, -0.3])
        np.testing.assert_allclose(policy.params(), [1.0, 2.0, 0.1, -0.3])
        clone = policy.with_params(policy.params())
        np.testing.assert_allclose(clone.mean, policy.mean)
        np.testing.assert_allclose(clone.log_std, policy.log_std)

    def test_grad_matches_finite_difference(self, rng):
        for _ in range(15):
            d = int(rng.integers(1, 4))
            policy = GaussianPolicy(rng.normal(size=d), rng.normal(size=d) * 0.4)
            y = rng.normal(size=d) * 2.0
            grad = policy.grad_log_prob(None, y)
            assert_gradient_close(
                lambda p: policy.with_params(p).log_prob(None, y), grad, policy.params()
            )

    def test_sample_determinism_and_moments(self):
        policy = GaussianPolicy([1.0, -2.0], np.log([0.5, 2.0]))
        a = policy.sample(None, np.random.default_rng(7), 5)
        b = policy.sample(None, np.random.default_rng(7), 5)
        np.testing.assert_array_equal(np.array(a), np.array(b))
        draws = np.array(policy.sample(None, np.random.default_rng(0), 20000))
        np.testing.assert_allclose(draws.mean(axis=0), [1.0, -2.0], atol=0.05)
        np.testing.assert_allclose(draws.std(axis=0), [0.5, 2.0], rtol=0.05)

    def test_std_floor_clamps_and_zeroes_gradient(self):
        policy = GaussianPolicy([0.0], [-20.0])
        np.testing.assert_allclose(policy.std, [STD_FLOOR])
        grad = policy.grad_log_prob(None, [5e-5])
        assert grad[1] == 0.0
        assert grad[0] != 0.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(InputError):
            GaussianPolicy([np.inf], [0.0])
        with pytest.raises(InputError):
            GaussianPolicy([0.0, 1.0], [0.0])
        policy = GaussianPolicy([0.0], [0.0])
        with pytest.raises(InputError):
            policy.log_prob(None, [0.0, 1.0])
        with pytest.raises(InputError):
            policy.log_prob(None, [np.nan])
        with pytest.raises(InputError):
            policy.with_params([1.0, 2.0, 3.0])
        with pytest.raises(InputError):
            policy.sample(None, np.random.default_rng(0), 0)


class TestCategoricalPolicy:
    def test_uniform_log_probs(self):
        policy = CategoricalPolicy(np.zeros((1, 4)))
        for y in range(4):
            np.testing.assert_allclose(policy.log_prob(0, y), -1.3862943611198906, rtol=1e-14)

    def test_probs_match_scipy_softmax(self, rng):
        from scipy.special import softmax

        logits = rng.normal(size=(3, 5)) * 2.0
        policy = CategoricalPolicy(logits)
        for x in range(3):
            np.testing.assert_allclose(policy.probs(x), softmax(logits[x]), rtol=1e-12)
            np.testing.assert_allclose(policy.probs(x).sum(), 1.0, rtol=1e-12)

    def test_grad_matches_finite_difference(self, rng):
        for _ in range(15):
            policy = CategoricalPolicy(rng.normal(size=(2, 4)))
            x = int(rng.integers(0, 2))
            y = int(rng.integers(0, 4))
            grad = policy.grad_log_prob(x, y)
            assert_gradient_close(
                lambda p: policy.with_params(p).log_prob(x, y), grad, policy.params()
            )

    def test_out_of_range_logits_project_onto_box(self):
        policy = CategoricalPolicy(np.array([[31.0, 0.0, -31.0]]))
        np.testing.assert_array_equal(policy.logits, [[30.0, 0.0, -30.0]])
        boxed = np.array([30.0, 0.0, -30.0])
        expected = np.exp(boxed - 30.0) / np.sum(np.exp(boxed - 30.0))
        np.testing.assert_allclose(policy.probs(0), expected, rtol=1e-12)
        # Gradients stay the plain softmax gradient at the boundary, so a
        # later update can pull a saturated coordinate back inside the box.
        grad = policy.grad_log_prob(0, 1).reshape(1, 3)
        onehot = np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(grad[0], onehot - policy.probs(0), rtol=1e-12)
        assert grad[0, 0] != 0.0

    def test_sample_frequencies(self):
        policy = CategoricalPolicy(np.log([[0.6, 0.3, 0.1]]))
        draws = policy.sample(0, np.random.default_rng(3), 30000)
        freqs = np.bincount(draws, minlength=3) / 30000.0
        np.testing.assert_allclose(freqs, [0.6, 0.3, 0.1], atol=0.01)

    def test_sample_determinism(self):
        policy = CategoricalPolicy(np.array([[0.5, -0.5, 1.0]]))
        a = policy.sample(0, np.random.default_rng(11), 20)
        b = policy.sample(0, np.random.default_rng(11), 20)
        assert a == b

    def test_rejects_bad_indices(self):
        policy = CategoricalPolicy(np.zeros((2, 3)))
        with pytest.raises(InputError):
            policy.log_prob(2, 0)
        with pytest.raises(InputError):
            policy.log_prob(0, 3)
        with pytest.raises(InputError):
            policy.log_prob(0, True)


class TestAutoregressivePolicy:
    def _tiny(self):
        # V=2, order 1: contexts are (token 0, token 1, pad).
        logits = np.array([[[0.3, -0.2], [1.0, 0.5], [-0.4, 0.8]]])
        return AutoregressivePolicy(logits, 1, 2, 3)

    def test_context_index_uses_pad_for_short_prefixes(self):
        policy = self._tiny()
        assert policy.n_contexts == 3
        assert policy.context_index([]) == 2
        assert policy.context_index([0]) == 0
        assert policy.context_index([1, 0]) == 0
        assert policy.context_index([0, 1]) == 1

    def test_context_index_order_two(self):
        policy = AutoregressivePolicy(np.zeros((1, 9, 2)), 2, 2, 4)
        assert policy.context_index([]) == 8
        # window [pad, 0] -> 2*3 + 0
        assert policy.context_index([0]) == 6
        # window [0, 1] -> 0*3 + 1
        assert policy.context_index([0, 1]) == 1
        assert policy.context_index([1, 0, 1]) == 1

    def test_log_prob_is_sum_of_steps(self):
        policy = self._tiny()
        seq = (0, 1, 1)
        total = sum(float(policy.step_log_probs(0, seq[:t])[seq[t]]) for t in range(3))
        np.testing.assert_allclose(policy.log_prob(0, seq), total, rtol=1e-14)

    def test_probabilities_sum_to_one_over_support(self, rng):
        logits = rng.normal(size=(1, 3, 2))
        policy = AutoregressivePolicy(logits, 1, 2, 4)
        seqs = enumerate_sequences(2, 4)
        log_p = sequence_log_probs(policy, 0, seqs)
        np.testing.assert_allclose(np.exp(log_p).sum(), 1.0, rtol=1e-12)

    def test_sequence_log_probs_matches_scalar_path(self, rng):
        logits = rng.normal(size=(2, 9, 2))
        policy = AutoregressivePolicy(logits, 2, 2, 3)
        seqs = enumerate_sequences(2, 3)
        vec = sequence_log_probs(policy, 1, seqs)
        scalar = [policy.log_prob(1, tuple(int(t) for t in s)) for s in seqs]
        np.testing.assert_allclose(vec, scalar, rtol=1e-12)

    def test_sample_distribution_matches_enumeration(self):
        logits = np.random.default_rng(5).normal(size=(1, 3, 2))
        policy = AutoregressivePolicy(logits, 1, 2, 2)
        seqs = enumerate_sequences(2, 2)
        probs = np.exp(sequence_log_probs(policy, 0, seqs))
        draws = policy.sample(0, np.random.default_rng(9), 20000)
        keys = {tuple(int(t) for t in s): i for i, s in enumerate(seqs)}
        counts = np.zeros(len(keys))
        for d in draws:
            counts[keys[d]] += 1
        np.testing.assert_allclose(counts / 20000.0, probs, atol=0.012)

    def test_sample_determinism(self):
        policy = self._tiny()
        a = policy.sample(0, np.random.default_rng(2), 6)
        b = policy.sample(0, np.random.default_rng(2), 6)
        assert a == b

    def test_grad_matches_finite_difference(self, rng):
        for _ in range(10):
            logits = rng.normal(size=(1, 3, 2))
            policy = AutoregressivePolicy(logits, 1, 2, 3)
            seq = tuple(int(t) for t in rng.integers(0, 2, size=3))
            grad = policy.grad_log_prob(0, seq)
            assert_gradient_close(
                lambda p: policy.with_params(p).log_prob(0, seq), grad, policy.params()
            )

    def test_order_zero_has_single_context(self):
        policy = AutoregressivePolicy(np.array([[[0.2, -0.1, 0.4]]]), 0, 3, 2)
        assert policy.n_contexts == 1
        assert policy.context_index([2]) == 0
        step = policy.step_log_probs(0, [])
        np.testing.assert_allclose(policy.log_prob(0, (1, 2)), step[1] + step[2], rtol=1e-14)

    def test_rejects_bad_sequences(self):
        policy = self._tiny()
        with pytest.raises(InputError):
            policy.log_prob(0, (0, 1))
        with pytest.raises(InputError):
            policy.log_prob(0, (0, 1, 2))
        with pytest.raises(InputError):
            AutoregressivePolicy(np.zeros((1, 2, 2)), 1, 2, 3)


class TestEnumeration:
    def test_counts_and_order(self):
        seqs = enumerate_sequences(3, 2)
        assert seqs.shape == (9, 2)
        np.testing.assert_array_equal(seqs[0], [0, 0])
        np.testing.assert_array_equal(seqs[1], [0, 1])
        np.testing.assert_array_equal(seqs[-1], [2, 2])

    def test_capacity_limit(self):
        with pytest.raises(CapacityError):
            enumerate_sequences(10, 3, limit=999)


class TestPolicyJson:
    def test_round_trip_exact(self, rng):
        policies = [
            GaussianPolicy(rng.normal(size=3), rng.normal(size=3)),
            CategoricalPolicy(rng.normal(size=(2, 4))),
            AutoregressivePolicy(rng.normal(size=(1, 5, 4)), 1, 4, 6),
        ]
        for policy in policies:
            clone = policy_from_json(policy_to_json(policy))
            assert type(clone) is type(policy)
            np.testing.assert_array_equal(clone.params(), policy.params())

    def test_rejects_garbage(self):
        with pytest.raises(InputError):
            policy_from_json("not json")
        with pytest.raises(InputError):
            policy_from_json("{}")
