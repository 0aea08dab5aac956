"""Loss values and analytic parameter-gradients.

pmpo_loss is the central objective: a convex mix of mean log-likelihood over
accepted samples and negated mean log-likelihood over rejected samples, minus
a KL(ref || theta) regularizer. mpo_weighted_ml_loss, bc_loss, dpo_loss and
ipo_loss are the comparison losses. positive_form_loss / negative_form_loss
are enumeration oracles certifying that preference weighting and
dispreference weighting are the same objective up to a theta-independent
constant; they are not used in training.

Sign conventions: pmpo, mpo, bc, positive and negative forms are maximization
objectives. dpo and ipo return their conventional minimization losses; a
trainer ascending the others must descend these (or ascend the negation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .errors import DegenerateInputError, InputError
from .kl import (
    KlMode,
    _check_same_family,
    kl_autoregressive_with_grad,
    kl_closed_form_with_grad,
    kl_monte_carlo_with_grad,
)
from .policies import AutoregressivePolicy, CategoricalPolicy


def _output_key(y):
    """Hashable canonical form of an output, for disjointness/equality checks."""
    if isinstance(y, np.ndarray):
        return ("array", y.shape, tuple(y.ravel().tolist()))
    if isinstance(y, (tuple, list)):
        return ("seq", tuple(int(t) for t in y))
    return ("scalar", y)


@dataclass(frozen=True)
class LossSpec:
    """Tunables for pmpo_loss plus the baseline losses' temperatures."""

    alpha: float = 0.5
    beta: float = 0.5
    kl_mode: KlMode = field(default_factory=KlMode.closed_form)
    eta: float = 1.0
    dpo_beta: float = 1.0
    ipo_beta: float = 1.0

    def problems(self) -> list[str]:
        out = []
        if not np.isfinite(self.alpha) or not 0.0 <= self.alpha <= 1.0:
            out.append(f"alpha must be in [0, 1], got {self.alpha}")
        if not np.isfinite(self.beta) or self.beta < 0.0:
            out.append(f"beta must be >= 0, got {self.beta}")
        if not np.isfinite(self.eta) or self.eta <= 0.0:
            out.append(f"eta must be > 0, got {self.eta}")
        if not np.isfinite(self.dpo_beta) or self.dpo_beta <= 0.0:
            out.append(f"dpo_beta must be > 0, got {self.dpo_beta}")
        if not np.isfinite(self.ipo_beta) or self.ipo_beta <= 0.0:
            out.append(f"ipo_beta must be > 0, got {self.ipo_beta}")
        return out


@dataclass(frozen=True)
class PreferenceBatch:
    """Accepted and rejected sample lists for one condition.

    Either side may be empty. Each entry is one labeled sample; no sample is
    labeled both ways, but the same output value may appear on both sides as
    distinct samples (rank-based labeling of duplicate draws produces this),
    and the loss means then weight it by its multiplicity on each side.
    Scores, when present, are the evaluation values that produced the
    labels, parallel to each side.
    """

    condition: object
    accepted: tuple
    rejected: tuple
    accepted_scores: tuple | None = None
    rejected_scores: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "accepted", tuple(self.accepted))
        object.__setattr__(self, "rejected", tuple(self.rejected))
        for name in ("accepted_scores", "rejected_scores"):
            scores = getattr(self, name)
            if scores is not None:
                scores = tuple(float(s) for s in scores)
                side = self.accepted if name == "accepted_scores" else self.rejected
                if len(scores) != len(side):
                    raise InputError(f"{name} not parallel to samples")
                object.__setattr__(self, name, scores)


@dataclass(frozen=True)
class LossResult:
    """Value, analytic gradient, and the three named components.

    For pmpo_loss the composition value = alpha*accept_term -
    (1-alpha)*reject_term - beta*kl_term holds exactly. For the other losses
    the components are informational (documented per op).
    """

    value: float
    gradient: np.ndarray
    accept_term: float
    reject_term: float
    kl_term: float

    @property
    def components(self) -> dict[str, float]:
        return {
            "accept_term": self.accept_term,
            "reject_term": self.reject_term,
            "kl_term": self.kl_term,
        }


def _mean_log_prob_and_grad(theta, x, samples) -> tuple[float, np.ndarray]:
    if isinstance(theta, CategoricalPolicy):
        ys = np.asarray(samples)
        if (
            ys.ndim == 1
            and ys.size
            and np.issubdtype(ys.dtype, np.integer)
            and 0 <= ys.min()
            and ys.max() < theta.n_outputs
        ):
            # Vectorized path for well-formed integer outputs; malformed
            # inputs fall through to the per-sample loop, which raises the
            # precise per-sample error.
            row_log = theta.log_probs(x)
            n = ys.size
            counts = np.bincount(ys, minlength=theta.n_outputs)
            grad = np.zeros_like(theta.logits)
            grad[x] = counts - n * np.exp(row_log)
            return float(row_log[ys].sum()) / n, grad.ravel() / n
    total = 0.0
    grad = np.zeros(theta.params().shape)
    for y in samples:
        total += theta.log_prob(x, y)
        grad += theta.grad_log_prob(x, y)
    n = len(samples)
    return total / n, grad / n


def pmpo_loss(batch: PreferenceBatch, theta, ref, spec: LossSpec, rng=None) -> LossResult:
    """The combined preference objective (maximization form).

    value = alpha * mean_{accepted} log pi_theta
          - (1-alpha) * mean_{rejected} log pi_theta
          - beta * KL(ref || theta), computed per spec.kl_mode.

    An empty side contributes zero. The rng is consumed only by the
    sampling-based KL modes (per_token draws one reference sequence,
    monte_carlo draws spec.kl_mode.sample_count reference samples); it is
    consumed regardless of beta so that a run's random stream does not depend
    on the beta value.
    """
    problems = spec.problems()
    if problems:
        raise InputError("; ".join(problems))
    _check_same_family(theta, ref)
    if not batch.accepted and not batch.rejected:
        raise InputError("batch has neither accepted nor rejected samples")

    x = batch.condition
    zeros = np.zeros(theta.params().shape)
    accept_term, accept_grad = (
        _mean_log_prob_and_grad(theta, x, batch.accepted) if batch.accepted else (0.0, zeros)
    )
    reject_term, reject_grad = (
        _mean_log_prob_and_grad(theta, x, batch.rejected) if batch.rejected else (0.0, zeros)
    )

    mode = spec.kl_mode
    if mode.kind == "closed_form":
        kl_term, kl_grad = kl_closed_form_with_grad(ref, theta, x)
    elif mode.kind == "per_token":
        if not isinstance(theta, AutoregressivePolicy):
            raise InputError("per_token KL mode requires autoregressive policies")
        if rng is None:
            raise InputError("per_token KL mode needs an rng to draw the reference sequence")
        sequence = ref.sample(x, rng, 1)[0]
        kl_term, kl_grad = kl_autoregressive_with_grad(ref, theta, x, sequence)
    else:
        if rng is None:
            raise InputError("monte_carlo KL mode needs an rng to draw reference samples")
        samples = ref.sample(x, rng, mode.sample_count)
        kl_term, kl_grad = kl_monte_carlo_with_grad(ref, theta, x, samples)

    alpha, beta = spec.alpha, spec.beta
    value = alpha * accept_term - (1.0 - alpha) * reject_term - beta * kl_term
    gradient = alpha * accept_grad - (1.0 - alpha) * reject_grad - beta * kl_grad
    return LossResult(float(value), gradient, float(accept_term), float(reject_term), float(kl_term))


def mpo_weighted_ml_loss(condition, samples, f_values, theta, eta: float) -> LossResult:
    """Softmax-of-f weighted maximum likelihood (maximization form).

    Weights w_j = softmax(f_j / eta) over the sample set; value is the
    weighted mean log-likelihood. accept_term mirrors the value; the other
    components are zero.
    """
    samples = list(samples)
    f = np.asarray(f_values, dtype=float)
    if not samples:
        raise InputError("MPO loss needs at least one sample")
    if f.shape != (len(samples),):
        raise InputError(f"f_values shape {f.shape} not parallel to {len(samples)} samples")
    if not np.all(np.isfinite(f)):
        raise InputError("non-finite f_values")
    if not np.isfinite(eta) or eta <= 0.0:
        raise InputError(f"eta must be > 0, got {eta}")
    scaled = f / eta
    log_w = scaled - logsumexp(scaled)
    weights = np.exp(log_w)
    value = 0.0
    grad = np.zeros(theta.params().shape)
    for w, y in zip(weights, samples):
        value += w * theta.log_prob(condition, y)
        grad += w * theta.grad_log_prob(condition, y)
    return LossResult(float(value), grad, float(value), 0.0, 0.0)


def mpo_weights(f_values, eta: float) -> np.ndarray:
    """The softmax(f/eta) weights used by mpo_weighted_ml_loss."""
    f = np.asarray(f_values, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise InputError("f_values must be a nonempty vector")
    if not np.isfinite(eta) or eta <= 0.0:
        raise InputError(f"eta must be > 0, got {eta}")
    scaled = f / eta
    return np.exp(scaled - logsumexp(scaled))


def bc_loss(condition, samples, theta) -> LossResult:
    """Mean log-likelihood of the given samples (maximization form)."""
    samples = list(samples)
    if not samples:
        raise InputError("BC loss needs at least one sample")
    value, grad = _mean_log_prob_and_grad(theta, condition, samples)
    return LossResult(float(value), grad, float(value), 0.0, 0.0)


def _pair_margins(condition, y_accept, y_reject, theta, ref):
    if _output_key(y_accept) == _output_key(y_reject):
        raise InputError("accepted and rejected outputs must differ")
    _check_same_family(theta, ref)
    lt_a = theta.log_prob(condition, y_accept)
    lt_r = theta.log_prob(condition, y_reject)
    delta_a = lt_a - ref.log_prob(condition, y_accept)
    delta_r = lt_r - ref.log_prob(condition, y_reject)
    grad_a = theta.grad_log_prob(condition, y_accept)
    grad_r = theta.grad_log_prob(condition, y_reject)
    return lt_a, lt_r, delta_a, delta_r, grad_a, grad_r


def dpo_loss(condition, y_accept, y_reject, theta, ref, dpo_beta: float) -> LossResult:
    """Standard DPO logistic loss (minimization form).

    value = -log sigmoid(dpo_beta * (delta_a - delta_r)) with
    delta = log pi_theta - log pi_ref. Components report delta_a and delta_r.
    """
    if not np.isfinite(dpo_beta) or dpo_beta <= 0.0:
        raise InputError(f"dpo_beta must be > 0, got {dpo_beta}")
    _, _, delta_a, delta_r, grad_a, grad_r = _pair_margins(condition, y_accept, y_reject, theta, ref)
    z = dpo_beta * (delta_a - delta_r)
    value = float(np.logaddexp(0.0, -z))
    gradient = -dpo_beta * expit(-z) * (grad_a - grad_r)
    return LossResult(value, gradient, float(delta_a), float(delta_r), 0.0)


def ipo_loss(condition, y_accept, y_reject, theta, ref, ipo_beta: float) -> LossResult:
    """IPO pair loss (minimization form).

    value = -log pi_theta(y_a) + log pi_theta(y_r) + ipo_beta*(delta_a - delta_r)^2.
    Components report delta_a and delta_r.
    """
    if not np.isfinite(ipo_beta) or ipo_beta <= 0.0:
        raise InputError(f"ipo_beta must be > 0, got {ipo_beta}")
    lt_a, lt_r, delta_a, delta_r, grad_a, grad_r = _pair_margins(condition, y_accept, y_reject, theta, ref)
    gap = delta_a - delta_r
    value = float(-lt_a + lt_r + ipo_beta * gap * gap)
    gradient = -grad_a + grad_r + 2.0 * ipo_beta * gap * (grad_a - grad_r)
    return LossResult(value, gradient, float(delta_a), float(delta_r), 0.0)


def _support_log_probs(policy, condition, samples):
    log_p = np.array([policy.log_prob(condition, y) for y in samples])
    grads = np.stack([policy.grad_log_prob(condition, y) for y in samples])
    return log_p, grads


def _check_support_probs(samples, probs, name):
    samples = list(samples)
    p = np.asarray(probs, dtype=float)
    if p.shape != (len(samples),):
        raise InputError(f"{name} not parallel to samples")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise InputError(f"{name} must lie in [0, 1]")
    if len({_output_key(y) for y in samples}) != len(samples):
        raise InputError("support samples must be distinct")
    return samples, p


def _check_support_coverage(ref_probs):
    # Both oracle forms assume the sample list enumerates the whole support;
    # the negative form's exact-KL rewrite is only an identity in that case.
    if abs(float(np.sum(ref_probs)) - 1.0) > 1e-9:
        raise InputError("samples must cover the policy's full support exactly once")


def positive_form_loss(condition, samples, pref_probs, theta, ref) -> LossResult:
    """Preference-weighted maximum likelihood over an enumerated support.

    samples must cover the support (each output once); pref_probs are
    p(S|y,x) in [0,1]. value = sum_y ref(y)*p(S|y)*log theta(y) / Z with
    Z = sum_y ref(y)*p(S|y). Oracle only, not used in training.
    """
    samples, p = _check_support_probs(samples, pref_probs, "pref_probs")
    _check_same_family(theta, ref)
    ref_probs = np.exp([ref.log_prob(condition, y) for y in samples])
    _check_support_coverage(ref_probs)
    weights = ref_probs * p
    z = float(np.sum(weights))
    if z <= 0.0:
        raise DegenerateInputError("preference normalizer Z is zero")
    log_t, grads = _support_log_probs(theta, condition, samples)
    value = float(np.dot(weights, log_t) / z)
    gradient = weights @ grads / z
    return LossResult(value, gradient, value, 0.0, 0.0)


def negative_form_loss(condition, samples, dispref_probs, theta, ref) -> LossResult:
    """The same objective rewritten against dispreference probabilities.

    With p'(y) = 1 - p(y) and Z' = sum_y ref(y)*p'(y), the exact rewrite of
    positive_form_loss is

        value = -[sum_y ref(y)*p'(y)*log theta(y)] / (1-Z')
                - KL(ref || theta) / (1-Z'),

    which differs from the positive form by the theta-independent constant
    H(ref)/(1-Z'); gradients agree identically. Requires 0 < Z' < 1: Z' = 0
    means no dispreference mass anywhere and Z' = 1 (all mass dispreferred)
    leaves nothing to prefer. Oracle only, not used in training.
    """
    samples, p_prime = _check_support_probs(samples, dispref_probs, "dispref_probs")
    _check_same_family(theta, ref)
    ref_log = np.array([ref.log_prob(condition, y) for y in samples])
    ref_probs = np.exp(ref_log)
    _check_support_coverage(ref_probs)
    z_prime = float(np.sum(ref_probs * p_prime))
    if z_prime <= 0.0:
        raise DegenerateInputError("dispreference normalizer Z' is zero")
    z = float(np.sum(ref_probs * (1.0 - p_prime)))
    if z <= 0.0:
        raise DegenerateInputError("preference normalizer 1 - Z' is zero")
    log_t, grads = _support_log_probs(theta, condition, samples)
    weights = ref_probs * p_prime
    # Exact KL over the same support, so value and gradient share one route.
    kl = float(np.dot(ref_probs, ref_log - log_t))
    kl_grad = -(ref_probs @ grads)
    dispref_mean = float(np.dot(weights, log_t) / z_prime)
    value = float(-np.dot(weights, log_t) / z - kl / z)
    gradient = -(weights @ grads) / z - kl_grad / z
    return LossResult(value, gradient, 0.0, dispref_mean, kl)


def log_ratio_variance(theta, ref, condition, support) -> float:
    """Var under ref of log(theta(y)/ref(y)), by enumeration over support."""
    _check_same_family(theta, ref)
    support = list(support)
    ref_probs = np.exp([ref.log_prob(condition, y) for y in support])
    deltas = np.array(
        [theta.log_prob(condition, y) - ref.log_prob(condition, y) for y in support]
    )
    mean = float(np.dot(ref_probs, deltas))
    return float(np.dot(ref_probs, (deltas - mean) ** 2))


def expected_squared_margin(theta, ref, condition, support) -> float:
    """E over independent ref pairs (a, b) of (delta_a - delta_b)^2, by enumeration."""
    _check_same_family(theta, ref)
    support = list(support)
    ref_probs = np.exp([ref.log_prob(condition, y) for y in support])
    deltas = np.array(
        [theta.log_prob(condition, y) - ref.log_prob(condition, y) for y in support]
    )
    diff = deltas[:, None] - deltas[None, :]
    return float(ref_probs @ (diff * diff) @ ref_probs)
