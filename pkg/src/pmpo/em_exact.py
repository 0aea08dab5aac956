"""Exact EM over a finite set: softmax reweighting with improvement guarantees.

The iteration delta' proportional to delta * exp(f/tau) strictly increases
E_delta[f] unless it is already at a fixed point. The KL-regularized
objective L_tau(delta) = E_delta[f] - tau*KL(delta || prior) has closed-form
argmax delta* proportional to prior * exp(f/tau), whose value equals the
logsumexp majorant tau * log E_prior[exp(f/tau)]. Everything here is exact
(up to float arithmetic) and serves both as a standalone optimizer and as
the oracle layer for the sample-based losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import InputError

SUPPORT_LIMIT = 1_000_000
CONVERGENCE_TV = 1e-14


@dataclass(frozen=True)
class DiscreteDistribution:
    """Exact probability vector over a finite set."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise InputError("probs must be a nonempty 1-D vector")
        if probs.size > SUPPORT_LIMIT:
            raise InputError(f"support size {probs.size} exceeds limit {SUPPORT_LIMIT}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0.0):
            raise InputError("probs must be finite and nonnegative")
        if abs(float(np.sum(probs)) - 1.0) > 1e-12:
            raise InputError("probs must sum to 1 within 1e-12")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, n: int) -> "DiscreteDistribution":
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise InputError("support size must be a positive integer")
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDistribution":
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InputError("weights must be a nonempty 1-D vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise InputError("weights must be finite and nonnegative")
        total = float(np.sum(w))
        if total <= 0.0:
            raise InputError("weights must have positive sum")
        return cls(w / total)

    @property
    def size(self) -> int:
        return self.probs.size

    def total_variation(self, other: "DiscreteDistribution") -> float:
        if self.size != other.size:
            raise InputError("support sizes differ")
        return 0.5 * float(np.sum(np.abs(self.probs - other.probs)))


def _check_f(f, size: int) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.shape != (size,):
        raise InputError(f"f has shape {arr.shape}, expected ({size},)")
    if not np.all(np.isfinite(arr)):
        raise InputError("f must be finite")
    return arr


def _check_tau(tau: float) -> float:
    if not np.isfinite(tau) or tau <= 0.0:
        raise InputError(f"tau must be > 0, got {tau}")
    return float(tau)


def _softmax_reweight(probs: np.ndarray, f: np.ndarray, tau: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_w = np.where(probs > 0.0, np.log(probs, where=probs > 0.0) + f / tau, -np.inf)
    log_w -= np.max(log_w)
    w = np.exp(log_w)
    return w / np.sum(w)


def em_step(delta: DiscreteDistribution, f, tau: float) -> DiscreteDistribution:
    """One exact E/M round: delta' proportional to delta * exp(f/tau)."""
    tau = _check_tau(tau)
    f = _check_f(f, delta.size)
    return DiscreteDistribution(_softmax_reweight(delta.probs, f, tau))


def expected_value(delta: DiscreteDistribution, f) -> float:
    f = _check_f(f, delta.size)
    return float(np.dot(delta.probs, f))


def kl_discrete(delta: DiscreteDistribution, prior: DiscreteDistribution) -> float:
    """KL(delta || prior) with the 0*log(0) = 0 convention."""
    if delta.size != prior.size:
        raise InputError("support sizes differ")
    d, p = delta.probs, prior.probs
    support = d > 0.0
    if np.any(support & (p <= 0.0)):
        raise InputError("delta has mass where prior is zero; KL undefined")
    terms = np.zeros_like(d)
    terms[support] = d[support] * (np.log(d[support]) - np.log(p[support]))
    return float(np.sum(terms))


def regularized_objective(delta: DiscreteDistribution, f, tau: float, prior: DiscreteDistribution) -> float:
    """L_tau(delta) = E_delta[f] - tau * KL(delta || prior)."""
    tau = _check_tau(tau)
    return expected_value(delta, f) - tau * kl_discrete(delta, prior)


def argmax_softmax(prior: DiscreteDistribution, f, tau: float) -> DiscreteDistribution:
    """Closed-form maximizer of L_tau: delta* proportional to prior * exp(f/tau)."""
    tau = _check_tau(tau)
    f = _check_f(f, prior.size)
    return DiscreteDistribution(_softmax_reweight(prior.probs, f, tau))


def logsumexp_bound(prior: DiscreteDistribution, f, tau: float) -> float:
    """tau * log E_prior[exp(f/tau)], the tight upper bound on L_tau."""
    tau = _check_tau(tau)
    f = _check_f(f, prior.size)
    with np.errstate(divide="ignore"):
        log_prior = np.where(prior.probs > 0.0, np.log(prior.probs, where=prior.probs > 0.0), -np.inf)
    return tau * float(logsumexp(log_prior + f / tau))


@dataclass(frozen=True)
class EmIterate:
    iteration: int
    distribution: DiscreteDistribution
    expected_value: float


def run_em(delta0: DiscreteDistribution, f, tau: float, max_iters: int = 10_000) -> list[EmIterate]:
    """Iterate em_step until total-variation change < 1e-14 or max_iters.

    The returned trajectory includes the initial distribution, so it holds
    between 2 and max_iters + 1 entries; expected values are non-decreasing.
    """
    tau = _check_tau(tau)
    f = _check_f(f, delta0.size)
    if not isinstance(max_iters, (int, np.integer)) or max_iters < 1:
        raise InputError("max_iters must be a positive integer")
    trajectory = [EmIterate(0, delta0, expected_value(delta0, f))]
    current = delta0
    for k in range(1, max_iters + 1):
        nxt = em_step(current, f, tau)
        trajectory.append(EmIterate(k, nxt, expected_value(nxt, f)))
        if current.total_variation(nxt) < CONVERGENCE_TV:
            break
        current = nxt
    return trajectory
