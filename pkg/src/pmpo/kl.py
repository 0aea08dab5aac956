"""KL divergence between policies of one family.

Direction is fixed: everything here computes D_KL(ref || theta), the
expectation under the first (reference) argument of log(ref/theta). This is
the mass-covering direction used by the regularizer; there is deliberately no
reverse-KL option.

Paths:
- closed form for Gaussian and categorical pairs,
- a per-token estimator for autoregressive pairs (sum of exact per-step
  categorical KLs along one reference-sampled prefix; unbiased for the
  sequence-level KL),
- exact enumeration over all sequences (test oracle),
- Monte Carlo log-ratio averaging from reference samples.

The *_with_grad variants additionally return the analytic gradient with
respect to theta's flat parameters. For logit-parameterized families this is
the plain softmax gradient; the box constraint on stored logits is enforced
by projection at policy construction, not by zeroing gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .policies import (
    STD_FLOOR,
    AutoregressivePolicy,
    CategoricalPolicy,
    GaussianPolicy,
    _check_condition_index,
    enumerate_sequences,
    sequence_log_probs,
)

KL_MODE_KINDS = ("closed_form", "per_token", "monte_carlo")


@dataclass(frozen=True)
class KlMode:
    """How the regularizer is computed inside a loss.

    closed_form: exact, Gaussian/categorical only.
    per_token: autoregressive estimator, needs an rng to draw the prefix.
    monte_carlo: log-ratio average over `sample_count` reference draws.
    """

    kind: str
    sample_count: int = 1

    def __post_init__(self):
        if self.kind not in KL_MODE_KINDS:
            raise InputError(f"unknown KL mode {self.kind!r}; expected one of {KL_MODE_KINDS}")
        if not isinstance(self.sample_count, (int, np.integer)) or self.sample_count < 1:
            raise InputError("sample_count must be a positive integer")

    @classmethod
    def closed_form(cls) -> "KlMode":
        return cls("closed_form")

    @classmethod
    def per_token(cls) -> "KlMode":
        return cls("per_token")

    @classmethod
    def monte_carlo(cls, sample_count: int) -> "KlMode":
        return cls("monte_carlo", sample_count)


def _check_same_family(p, q):
    if type(p) is not type(q):
        raise InputError(
            f"policy families differ: {type(p).__name__} vs {type(q).__name__}"
        )
    if isinstance(p, GaussianPolicy):
        if p.dim != q.dim:
            raise InputError("Gaussian dimensions differ")
    elif isinstance(p, CategoricalPolicy):
        if p.logits.shape != q.logits.shape:
            raise InputError("categorical shapes differ")
    elif isinstance(p, AutoregressivePolicy):
        if p.vocab_size != q.vocab_size or p.max_length != q.max_length:
            raise InputError("autoregressive vocab/length differ")
        if p.n_conditions != q.n_conditions:
            raise InputError("autoregressive condition counts differ")
    else:
        raise InputError(f"unknown policy type {type(p).__name__}")


def _categorical_row_kl(ref_log_p: np.ndarray, theta_log_p: np.ndarray) -> float:
    p = np.exp(ref_log_p)
    return float(np.sum(p * (ref_log_p - theta_log_p)))


def kl_closed_form(p, q, x=None) -> float:
    """Exact D_KL(p || q) for a Gaussian or categorical pair."""
    value, _ = kl_closed_form_with_grad(p, q, x)
    return value


def kl_closed_form_with_grad(p, q, x=None) -> tuple[float, np.ndarray]:
    """Closed-form KL and its gradient with respect to q's parameters."""
    _check_same_family(p, q)
    if isinstance(p, GaussianPolicy):
        sp, sq = p.std, q.std
        dmu = p.mean - q.mean
        ratio = (sp * sp + dmu * dmu) / (sq * sq)
        value = float(np.sum(np.log(sq) - np.log(sp) + 0.5 * ratio - 0.5))
        grad_mean = -dmu / (sq * sq)
        active = np.exp(q.log_std) > STD_FLOOR
        grad_log_std = np.where(active, 1.0 - ratio, 0.0)
        return value, np.concatenate([grad_mean, grad_log_std])
    if isinstance(p, CategoricalPolicy):
        ref_log = p.log_probs(x)
        theta_log = q.log_probs(x)
        value = _categorical_row_kl(ref_log, theta_log)
        grad = np.zeros_like(q.logits)
        grad[x] = np.exp(theta_log) - np.exp(ref_log)
        return value, grad.ravel()
    raise InputError(
        "no closed-form KL for autoregressive policies; use kl_autoregressive, "
        "kl_exact_enumeration, or kl_monte_carlo"
    )


def kl_autoregressive(p_ref: AutoregressivePolicy, p_theta: AutoregressivePolicy, x, sampled_sequence) -> float:
    """Per-token KL estimate along one reference-sampled sequence.

    Returns sum over i in [0, len) of the exact categorical KL between the
    two step distributions conditioned on the prefix y_{1:i}. The final
    token's value is never consumed, only its preceding prefix; in
    expectation over p_ref sampling this equals the exact sequence KL.
    """
    value, _ = kl_autoregressive_with_grad(p_ref, p_theta, x, sampled_sequence)
    return value


def kl_autoregressive_with_grad(
    p_ref: AutoregressivePolicy, p_theta: AutoregressivePolicy, x, sampled_sequence
) -> tuple[float, np.ndarray]:
    _check_same_family(p_ref, p_theta)
    seq = p_ref._check_prefix(tuple(sampled_sequence))
    value = 0.0
    grad = np.zeros_like(p_theta.logits)
    x = _check_condition_index(x, p_ref.n_conditions)
    ref_table = p_ref.step_log_prob_table[x]
    theta_table = p_theta.step_log_prob_table[x]
    ref_base, ref_mod = p_ref._context_walk()
    theta_base, theta_mod = p_theta._context_walk()
    ref_ctx = ref_mod - 1
    theta_ctx = theta_mod - 1
    for tok in seq:
        ref_log = ref_table[ref_ctx]
        theta_log = theta_table[theta_ctx]
        value += _categorical_row_kl(ref_log, theta_log)
        grad[x, theta_ctx] += np.exp(theta_log) - np.exp(ref_log)
        ref_ctx = (ref_ctx * ref_base + tok) % ref_mod
        theta_ctx = (theta_ctx * theta_base + tok) % theta_mod
    return float(value), grad.ravel()


def kl_exact_enumeration(p, q, x=None) -> float:
    """Exact sequence-level KL by summing over the full support.

    Defined for autoregressive pairs (all V^L sequences) and categorical
    pairs (all outputs, where it coincides with the closed form).
    """
    _check_same_family(p, q)
    if isinstance(p, CategoricalPolicy):
        return _categorical_row_kl(p.log_probs(x), q.log_probs(x))
    if not isinstance(p, AutoregressivePolicy):
        raise InputError("exact enumeration requires a discrete policy family")
    seqs = enumerate_sequences(p.vocab_size, p.max_length)
    log_p = sequence_log_probs(p, x, seqs)
    log_q = sequence_log_probs(q, x, seqs)
    return float(np.sum(np.exp(log_p) * (log_p - log_q)))


def kl_monte_carlo(p, q, x, samples) -> float:
    """Mean log-ratio over samples drawn from p; unbiased for D_KL(p || q)."""
    value, _ = kl_monte_carlo_with_grad(p, q, x, samples)
    return value


def kl_monte_carlo_with_grad(p, q, x, samples) -> tuple[float, np.ndarray]:
    _check_same_family(p, q)
    samples = list(samples)
    if not samples:
        raise InputError("Monte Carlo KL needs at least one sample")
    total = 0.0
    grad = np.zeros(q.params().shape)
    for y in samples:
        total += p.log_prob(x, y) - q.log_prob(x, y)
        grad -= q.grad_log_prob(x, y)
    n = len(samples)
    return total / n, grad / n
