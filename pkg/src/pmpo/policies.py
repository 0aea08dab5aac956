"""Policy families: exact log-densities, sampling, and analytic gradients.

Three families share one interface (log_prob / sample / grad_log_prob /
params / with_params):

- GaussianPolicy: diagonal Gaussian over R^d; the condition is ignored.
- CategoricalPolicy: one softmax logit row per condition.
- AutoregressivePolicy: fixed-length token sequences, one categorical step
  per position conditioned on the last `context_order` tokens.

Parameters live in flat vectors with a fixed documented layout per family so
optimizers and finite-difference checks treat every family uniformly.
Policies are immutable values; updates construct a new policy via
`with_params`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, InputError

# Stored logits are projected into [-LOGIT_CLAMP, LOGIT_CLAMP] when a policy
# is constructed, so probabilities stay inside (0, 1) and log-probabilities
# stay finite even when training diverges. Gradients are those of the
# unconstrained softmax; optimizer steps that leave the box are absorbed by
# the projection at the next construction (projected gradient ascent).
LOGIT_CLAMP = 30.0

# Effective Gaussian std is exp(log_std) floored here; a floored coordinate
# contributes zero gradient through log_std.
STD_FLOOR = 1e-4

ENUMERATION_LIMIT = 1_000_000

LOG_2PI = float(np.log(2.0 * np.pi))


def _as_param_vector(params, expected: int) -> np.ndarray:
    arr = np.asarray(params, dtype=float)
    if arr.shape != (expected,):
        raise InputError(f"parameter vector has shape {arr.shape}, expected ({expected},)")
    if not np.all(np.isfinite(arr)):
        raise InputError("parameter vector contains non-finite entries")
    return arr


def _check_count(count) -> int:
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise InputError(f"sample count must be a positive integer, got {count!r}")
    return int(count)


def _check_condition_index(x, n_conditions: int) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
        raise InputError(f"condition must be an integer index, got {x!r}")
    if not 0 <= x < n_conditions:
        raise InputError(f"condition {x} out of range [0, {n_conditions})")
    return int(x)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _log_softmax(raw_logits: np.ndarray) -> np.ndarray:
    z = np.clip(raw_logits, -LOGIT_CLAMP, LOGIT_CLAMP)
    return z - logsumexp(z, axis=-1, keepdims=True)


def _inverse_cdf_draw(probs: np.ndarray, u: float | np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, probs.shape[-1] - 1)


@dataclass(frozen=True)
class GaussianPolicy:
    """Diagonal Gaussian over R^d, condition-independent.

    Flat parameter layout: [mean_0 .. mean_{d-1}, log_std_0 .. log_std_{d-1}].
    """

    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        log_std = np.array(self.log_std, dtype=float)
        if mean.ndim != 1 or mean.size == 0:
            raise InputError("mean must be a nonempty 1-D vector")
        if log_std.shape != mean.shape:
            raise InputError("mean and log_std must have equal shape")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(log_std))):
            raise InputError("non-finite Gaussian parameters")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "log_std", _freeze(log_std))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def std(self) -> np.ndarray:
        return np.maximum(np.exp(self.log_std), STD_FLOOR)

    @property
    def n_params(self) -> int:
        return 2 * self.dim

    def params(self) -> np.ndarray:
        return np.concatenate([self.mean, self.log_std])

    def with_params(self, params) -> "GaussianPolicy":
        vec = _as_param_vector(params, self.n_params)
        return GaussianPolicy(vec[: self.dim], vec[self.dim :])

    def _check_output(self, y) -> np.ndarray:
        arr = np.asarray(y, dtype=float)
        if arr.shape != (self.dim,):
            raise InputError(f"output shape {arr.shape} does not match dimension {self.dim}")
        if not np.all(np.isfinite(arr)):
            raise InputError("non-finite output")
        return arr

    def log_prob(self, x, y) -> float:
        arr = self._check_output(y)
        std = self.std
        z = (arr - self.mean) / std
        return float(np.sum(-0.5 * z * z - np.log(std) - 0.5 * LOG_2PI))

    def sample(self, x, rng: np.random.Generator, count: int = 1) -> list[np.ndarray]:
        count = _check_count(count)
        draws = self.mean + self.std * rng.standard_normal((count, self.dim))
        return [draws[i] for i in range(count)]

    def grad_log_prob(self, x, y) -> np.ndarray:
        arr = self._check_output(y)
        std = self.std
        z = (arr - self.mean) / std
        grad_mean = z / std
        # d std / d log_std vanishes once exp(log_std) sits below the floor.
        active = np.exp(self.log_std) > STD_FLOOR
        grad_log_std = np.where(active, z * z - 1.0, 0.0)
        return np.concatenate([grad_mean, grad_log_std])


@dataclass(frozen=True)
class CategoricalPolicy:
    """Per-condition categorical distribution over {0 .. n_outputs-1}.

    Stored logits are projected into [-LOGIT_CLAMP, LOGIT_CLAMP] at
    construction; `grad_log_prob` is the plain softmax gradient, so a
    saturated coordinate can still be pushed back into the box by a later
    update. Flat layout is row-major over (condition, output).
    """

    logits: np.ndarray

    def __post_init__(self):
        logits = np.array(self.logits, dtype=float)
        if logits.ndim != 2 or logits.size == 0:
            raise InputError("logits must be a nonempty 2-D (condition, output) matrix")
        if not np.all(np.isfinite(logits)):
            raise InputError("non-finite logits")
        object.__setattr__(self, "logits", _freeze(np.clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP)))

    @property
    def n_conditions(self) -> int:
        return self.logits.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.logits.shape[1]

    @property
    def n_params(self) -> int:
        return self.logits.size

    def params(self) -> np.ndarray:
        return self.logits.ravel().copy()

    def with_params(self, params) -> "CategoricalPolicy":
        vec = _as_param_vector(params, self.n_params)
        return CategoricalPolicy(vec.reshape(self.logits.shape))

    def _check_output(self, y) -> int:
        if isinstance(y, bool) or not isinstance(y, (int, np.integer)):
            raise InputError(f"output must be an integer index, got {y!r}")
        if not 0 <= y < self.n_outputs:
            raise InputError(f"output {y} out of range [0, {self.n_outputs})")
        return int(y)

    @cached_property
    def log_prob_table(self) -> np.ndarray:
        """Full (n_conditions, n_outputs) log-probability table, read-only.

        Computed once per policy instance; immutability of the logits makes
        the cache safe.
        """
        return _freeze(_log_softmax(self.logits))

    def log_probs(self, x) -> np.ndarray:
        x = _check_condition_index(x, self.n_conditions)
        return self.log_prob_table[x]

    def probs(self, x) -> np.ndarray:
        return np.exp(self.log_probs(x))

    def log_prob(self, x, y) -> float:
        y = self._check_output(y)
        return float(self.log_probs(x)[y])

    def sample(self, x, rng: np.random.Generator, count: int = 1) -> list[int]:
        count = _check_count(count)
        draws = _inverse_cdf_draw(self.probs(x), rng.random(count))
        return [int(v) for v in draws]

    def grad_log_prob(self, x, y) -> np.ndarray:
        x = _check_condition_index(x, self.n_conditions)
        y = self._check_output(y)
        grad = np.zeros_like(self.logits)
        row = -np.exp(self.log_prob_table[x])
        row[y] += 1.0
        grad[x] = row
        return grad.ravel()


@dataclass(frozen=True)
class AutoregressivePolicy:
    """Fixed-length sequence policy built from per-position categorical steps.

    Sequences are tuples of exactly `max_length` tokens from
    {0 .. vocab_size-1}. Each step conditions on the previous `context_order`
    tokens; slots before the sequence start hold the reserved pad id
    `vocab_size`. A context is encoded base (vocab_size + 1) with the most
    recent token in the least significant digit's complement position, i.e.
    index = sum_i ctx[i] * (V+1)^(n-1-i) over the padded window ctx.

    Logits have shape (n_conditions, (vocab_size+1)^context_order,
    vocab_size). Flat layout is row-major over that shape. The same
    projection rule as CategoricalPolicy applies to every step row.
    """

    logits: np.ndarray
    context_order: int
    vocab_size: int
    max_length: int

    def __post_init__(self):
        if not isinstance(self.context_order, (int, np.integer)) or self.context_order < 0:
            raise InputError("context_order must be a nonnegative integer")
        if not isinstance(self.vocab_size, (int, np.integer)) or self.vocab_size < 1:
            raise InputError("vocab_size must be a positive integer")
        if not isinstance(self.max_length, (int, np.integer)) or self.max_length < 1:
            raise InputError("max_length must be a positive integer")
        logits = np.array(self.logits, dtype=float)
        n_contexts = (self.vocab_size + 1) ** self.context_order
        if logits.ndim != 3 or logits.shape[1] != n_contexts or logits.shape[2] != self.vocab_size:
            raise InputError(
                f"logits shape {logits.shape} incompatible with "
                f"(conditions, {n_contexts}, {self.vocab_size})"
            )
        if not np.all(np.isfinite(logits)):
            raise InputError("non-finite logits")
        object.__setattr__(self, "logits", _freeze(np.clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP)))
        object.__setattr__(self, "context_order", int(self.context_order))
        object.__setattr__(self, "vocab_size", int(self.vocab_size))
        object.__setattr__(self, "max_length", int(self.max_length))

    @property
    def n_conditions(self) -> int:
        return self.logits.shape[0]

    @property
    def n_contexts(self) -> int:
        return self.logits.shape[1]

    @property
    def n_params(self) -> int:
        return self.logits.size

    def params(self) -> np.ndarray:
        return self.logits.ravel().copy()

    def with_params(self, params) -> "AutoregressivePolicy":
        vec = _as_param_vector(params, self.n_params)
        return AutoregressivePolicy(
            vec.reshape(self.logits.shape),
            self.context_order,
            self.vocab_size,
            self.max_length,
        )

    def _check_prefix(self, prefix: Sequence[int]) -> list[int]:
        if len(prefix) > self.max_length:
            raise InputError(f"prefix length {len(prefix)} exceeds max_length {self.max_length}")
        out = []
        for t in prefix:
            if isinstance(t, bool) or not isinstance(t, (int, np.integer)):
                raise InputError(f"token must be an integer, got {t!r}")
            if not 0 <= t < self.vocab_size:
                raise InputError(f"token {t} out of range [0, {self.vocab_size})")
            out.append(int(t))
        return out

    def _check_sequence(self, y) -> list[int]:
        seq = self._check_prefix(tuple(y))
        if len(seq) != self.max_length:
            raise InputError(f"sequence length {len(seq)} must equal max_length {self.max_length}")
        return seq

    @cached_property
    def step_log_prob_table(self) -> np.ndarray:
        """Full (n_conditions, n_contexts, vocab_size) step table, read-only.

        Computed once per policy instance; immutability of the logits makes
        the cache safe.
        """
        return _freeze(_log_softmax(self.logits))

    def _context_walk(self) -> tuple[int, int]:
        """Base and modulus for the rolling context update.

        Starting from the all-pad index `mod - 1`, appending token t maps
        context index c to (c * base + t) % mod. Covers context_order 0,
        where mod is 1 and the index stays 0.
        """
        base = self.vocab_size + 1
        return base, base**self.context_order

    def context_index(self, prefix: Sequence[int]) -> int:
        """Row index of the padded length-n context that ends the prefix."""
        n = self.context_order
        if n == 0:
            return 0
        tail = self._check_prefix(prefix)[-n:] if len(prefix) else []
        window = [self.vocab_size] * (n - len(tail)) + tail
        idx = 0
        for tok in window:
            idx = idx * (self.vocab_size + 1) + tok
        return idx

    def step_log_probs(self, x, prefix: Sequence[int]) -> np.ndarray:
        x = _check_condition_index(x, self.n_conditions)
        return self.step_log_prob_table[x, self.context_index(prefix)]

    def log_prob(self, x, y) -> float:
        x = _check_condition_index(x, self.n_conditions)
        seq = self._check_sequence(y)
        table = self.step_log_prob_table[x]
        base, mod = self._context_walk()
        ctx = mod - 1
        total = 0.0
        for tok in seq:
            total += float(table[ctx, tok])
            ctx = (ctx * base + tok) % mod
        return total

    def sample(self, x, rng: np.random.Generator, count: int = 1) -> list[tuple[int, ...]]:
        count = _check_count(count)
        x = _check_condition_index(x, self.n_conditions)
        table = self.step_log_prob_table[x]
        base, mod = self._context_walk()
        out = []
        for _ in range(count):
            u = rng.random(self.max_length)
            ctx = mod - 1
            seq: list[int] = []
            for t in range(self.max_length):
                tok = int(_inverse_cdf_draw(np.exp(table[ctx]), u[t]))
                seq.append(tok)
                ctx = (ctx * base + tok) % mod
            out.append(tuple(seq))
        return out

    def grad_log_prob(self, x, y) -> np.ndarray:
        x = _check_condition_index(x, self.n_conditions)
        seq = self._check_sequence(y)
        grad = np.zeros_like(self.logits)
        table = self.step_log_prob_table[x]
        base, mod = self._context_walk()
        ctx = mod - 1
        for tok in seq:
            row = -np.exp(table[ctx])
            row[tok] += 1.0
            grad[x, ctx] += row
            ctx = (ctx * base + tok) % mod
        return grad.ravel()


def enumerate_sequences(vocab_size: int, max_length: int, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    """All length-L token sequences as an int array of shape (V^L, L), lexicographic."""
    total = vocab_size**max_length
    if total > limit:
        raise CapacityError(f"support size {total} exceeds enumeration limit {limit}")
    cols = np.unravel_index(np.arange(total), (vocab_size,) * max_length)
    return np.stack(cols, axis=1).astype(int)


def sequence_log_probs(policy: AutoregressivePolicy, x, sequences: np.ndarray) -> np.ndarray:
    """Vectorized log-probability of many sequences under one condition.

    `sequences` is an int array of shape (n, max_length). Used by the
    enumeration oracles, where a per-sequence Python loop would be too slow.
    """
    x = _check_condition_index(x, policy.n_conditions)
    seqs = np.asarray(sequences)
    if seqs.ndim != 2 or seqs.shape[1] != policy.max_length:
        raise InputError(f"sequences must have shape (n, {policy.max_length})")
    if seqs.size and (seqs.min() < 0 or seqs.max() >= policy.vocab_size):
        raise InputError("token out of range")
    log_table = policy.step_log_prob_table[x]
    base = policy.vocab_size + 1
    mod = base**policy.context_order
    # Index of the all-pad context: every digit equals vocab_size.
    ctx = np.full(seqs.shape[0], mod - 1, dtype=np.int64)
    total = np.zeros(seqs.shape[0])
    for t in range(policy.max_length):
        tok = seqs[:, t]
        total += log_table[ctx, tok]
        ctx = (ctx * base + tok) % mod
    return total


def policy_to_json(policy) -> str:
    """Serialize a policy to JSON with decimal-string parameters.

    Parameters are written with 17 significant digits, which round-trips
    IEEE doubles exactly.
    """
    params = [format(v, ".17g") for v in policy.params()]
    if isinstance(policy, GaussianPolicy):
        doc = {"family": "gaussian", "dim": policy.dim, "params": params}
    elif isinstance(policy, CategoricalPolicy):
        doc = {
            "family": "categorical",
            "n_conditions": policy.n_conditions,
            "n_outputs": policy.n_outputs,
            "params": params,
        }
    elif isinstance(policy, AutoregressivePolicy):
        doc = {
            "family": "autoregressive",
            "n_conditions": policy.n_conditions,
            "vocab_size": policy.vocab_size,
            "context_order": policy.context_order,
            "max_length": policy.max_length,
            "params": params,
        }
    else:
        raise InputError(f"unknown policy type {type(policy).__name__}")
    return json.dumps(doc)


def policy_from_json(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid policy JSON: {exc}") from exc
    if not isinstance(doc, dict) or "family" not in doc:
        raise InputError("policy JSON must be an object with a 'family' field")
    try:
        params = np.array([float(v) for v in doc["params"]])
        family = doc["family"]
        if family == "gaussian":
            d = int(doc["dim"])
            template = GaussianPolicy(np.zeros(d), np.zeros(d))
        elif family == "categorical":
            template = CategoricalPolicy(np.zeros((int(doc["n_conditions"]), int(doc["n_outputs"]))))
        elif family == "autoregressive":
            v = int(doc["vocab_size"])
            n = int(doc["context_order"])
            template = AutoregressivePolicy(
                np.zeros((int(doc["n_conditions"]), (v + 1) ** n, v)),
                n,
                v,
                int(doc["max_length"]),
            )
        else:
            raise InputError(f"unknown policy family {family!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed policy JSON: {exc}") from exc
    return template.with_params(params)
