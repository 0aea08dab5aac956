"""Turn evaluation scores or advantage estimates into accept/reject labels.

Boundary conventions differ on purpose: the baseline rule accepts scores
equal to the baseline (f >= b), while the advantage rule accepts only
strictly positive advantages. Ties in ranking rules break by lower sample
index, so labeling is deterministic across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .objectives import PreferenceBatch

LABEL_RULES = ("top_k", "baseline", "advantage_sign", "best_worst")


@dataclass(frozen=True, eq=False)
class LabeledSampleSet:
    """Samples for one condition with parallel scores and binary labels."""

    condition: object
    samples: tuple
    f_values: tuple
    labels: tuple  # True = accept
    rule: str

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "f_values", tuple(float(f) for f in self.f_values))
        object.__setattr__(self, "labels", tuple(bool(b) for b in self.labels))
        if not (len(self.samples) == len(self.f_values) == len(self.labels)):
            raise InputError("samples, f_values, and labels must be parallel")
        if self.rule not in LABEL_RULES:
            raise InputError(f"unknown label rule {self.rule!r}")

    def accepted(self) -> list:
        return [y for y, b in zip(self.samples, self.labels) if b]

    def rejected(self) -> list:
        return [y for y, b in zip(self.samples, self.labels) if not b]

    def to_preference_batch(self) -> PreferenceBatch:
        """Build the training batch, preserving sample multiplicity.

        Every labeled sample lands on its side. With small discrete supports
        the same output value can be drawn into both halves of a ranking
        cut; both copies are kept, so the loss means weight the value by its
        multiplicity on each side exactly as the per-sample objective does.
        """
        accept, acc_scores = [], []
        reject, rej_scores = [], []
        for y, f, b in zip(self.samples, self.f_values, self.labels):
            if b:
                accept.append(y)
                acc_scores.append(f)
            else:
                reject.append(y)
                rej_scores.append(f)
        return PreferenceBatch(self.condition, accept, reject, tuple(acc_scores), tuple(rej_scores))


def _check_parallel(samples, f_values):
    samples = list(samples)
    f = np.asarray(f_values, dtype=float)
    if f.shape != (len(samples),):
        raise InputError(f"f_values shape {f.shape} not parallel to {len(samples)} samples")
    if not np.all(np.isfinite(f)):
        raise InputError("non-finite f_values")
    if not samples:
        raise InputError("need at least one sample")
    return samples, f


def label_topk(samples, f_values, k: int, condition=None) -> LabeledSampleSet:
    """Accept the k highest-f samples; ties break by lower index."""
    samples, f = _check_parallel(samples, f_values)
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InputError(f"k must be a positive integer, got {k!r}")
    if k > len(samples):
        raise InputError(f"k={k} exceeds sample count {len(samples)}")
    order = np.argsort(-f, kind="stable")
    labels = np.zeros(len(samples), dtype=bool)
    labels[order[:k]] = True
    return LabeledSampleSet(condition, samples, f, labels, "top_k")


def label_baseline(samples, f_values, baseline: float, condition=None) -> LabeledSampleSet:
    """Accept iff f >= baseline (inclusive)."""
    samples, f = _check_parallel(samples, f_values)
    if not np.isfinite(baseline):
        raise InputError("baseline must be finite")
    return LabeledSampleSet(condition, samples, f, f >= baseline, "baseline")


def compute_baseline(f_values, kind: str = "mean") -> float:
    f = np.asarray(f_values, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise InputError("f_values must be a nonempty vector")
    if kind == "mean":
        return float(np.mean(f))
    if kind == "median":
        return float(np.median(f))
    raise InputError(f"unknown baseline kind {kind!r}")


def label_best_worst(samples, f_values, condition=None) -> LabeledSampleSet:
    """Keep only the best and worst samples: one accept, one reject.

    The best is the first maximum, the worst the last minimum, so the two
    are distinct whenever there are at least two samples.
    """
    samples, f = _check_parallel(samples, f_values)
    if len(samples) < 2:
        raise InputError("best/worst labeling needs at least two samples")
    best = int(np.argmax(f))
    worst = int(len(f) - 1 - np.argmin(f[::-1]))
    if best == worst:
        raise InputError("cannot split best and worst on a single sample")
    return LabeledSampleSet(
        condition,
        (samples[best], samples[worst]),
        (f[best], f[worst]),
        (True, False),
        "best_worst",
    )


def label_advantage(dataset, values) -> list[LabeledSampleSet]:
    """Advantage-sign labels for (condition, output, reward-to-go) triples.

    Accept iff reward_to_go - values[condition] > 0 (strict). Returns one
    LabeledSampleSet per condition, in order of first appearance, with the
    advantage stored as the f value.
    """
    grouped: dict = {}
    order = []
    for condition, output, reward_to_go in dataset:
        try:
            v = values[condition]
        except (KeyError, IndexError):
            raise InputError(f"no state value for condition {condition!r}") from None
        advantage = float(reward_to_go) - float(v)
        if condition not in grouped:
            grouped[condition] = ([], [], [])
            order.append(condition)
        s, f, l = grouped[condition]
        s.append(output)
        f.append(advantage)
        l.append(advantage > 0.0)
    return [
        LabeledSampleSet(c, grouped[c][0], grouped[c][1], grouped[c][2], "advantage_sign")
        for c in order
    ]


def _output_to_json(y):
    if isinstance(y, np.ndarray):
        return [float(v) for v in y]
    if isinstance(y, tuple):
        return [int(t) for t in y]
    if isinstance(y, (int, np.integer)):
        return int(y)
    raise InputError(f"cannot serialize output {y!r}")


def _output_from_json(v):
    if isinstance(v, list):
        if all(isinstance(t, int) for t in v):
            return tuple(v)
        return np.array([float(t) for t in v])
    return int(v)


def labeled_sets_to_jsonl(sets) -> str:
    """One JSON record per sample: condition, output, f, label, rule."""
    lines = []
    for s in sets:
        for y, f, b in zip(s.samples, s.f_values, s.labels):
            lines.append(
                json.dumps(
                    {
                        "condition": s.condition,
                        "output": _output_to_json(y),
                        "f": f,
                        "label": "accept" if b else "reject",
                        "rule": s.rule,
                    }
                )
            )
    return "\n".join(lines) + ("\n" if lines else "")


def labeled_sets_from_jsonl(text: str) -> list[LabeledSampleSet]:
    grouped: dict = {}
    order = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            key = (rec["condition"], rec["rule"])
            sample = _output_from_json(rec["output"])
            f = float(rec["f"])
            label = {"accept": True, "reject": False}[rec["label"]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad JSONL record on line {line_no}: {exc}") from exc
        if key not in grouped:
            grouped[key] = ([], [], [])
            order.append(key)
        s, fv, l = grouped[key]
        s.append(sample)
        fv.append(f)
        l.append(label)
    return [
        LabeledSampleSet(cond, grouped[(cond, rule)][0], grouped[(cond, rule)][1], grouped[(cond, rule)][2], rule)
        for cond, rule in order
    ]
