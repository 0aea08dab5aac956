"""Canonical experiment configurations.

Each preset is a JSON-style config document in the exact shape the CLI
accepts (see cli.parse_config), so the same dictionaries back the sample
files in configs/, the demo scripts, and the experiment tests. Presets are
returned as fresh deep copies; mutating one never affects later calls.

Preset families
---------------
bandit-*     Gaussian policy on 2-D benchmark functions. Off-center init
             (the domain center would coincide with Sphere's optimum);
             accept/reject regimes share one optimizer setting, and the
             reject-only regime refreshes the reference every 10 steps so
             the KL anchor has a nonzero gradient.
mdp-*        Tabular categorical policy on the default 8x8 gridworld,
             four proposals per state ranked by the exact Q of the current
             policy, top-2/bottom-2 labels.
sequence-*   Autoregressive policy on the count-the-target-token task
             (V=4, L=6), four sampled generations ranked by reward.
offline-*    Loss mixtures (behavior cloning, accept, reject terms) on a
             frozen corrupted dataset of expert episodes.
em-*         Exact discrete EM on a small categorical instance.

The *-beta0/-beta05/-beta2 sweep presets deliberately use an aggressive
optimizer (Adam, learning rate 1.0) and a slow reference refresh (every 25
iterations). Reject-only learning needs a material destabilizing force
before the role of the KL weight is visible: at small learning rates the
run converges in every regime and the sweep shows nothing. Accept-only
sweeps share the same aggressive setting so that any contrast between the
regimes is attributable to the loss, not to tuning.
"""

from __future__ import annotations

import copy
import json

SWEEP_OPTIMIZER = {"kind": "adam", "learning_rate": 1.0}
SWEEP_REF_INTERVAL = 25
BETA_SWEEP = {"beta0": 0.0, "beta05": 0.5, "beta2": 2.0}


def _bandit(kind: str, init_mean: list, alpha: float, beta: float, interval: int) -> dict:
    return {
        "regime": "bandit",
        "seeds": list(range(10)),
        "function": {"kind": kind, "dimension": 2},
        "trainer": {
            "algorithm": "pmpo",
            "loss": {"alpha": alpha, "beta": beta},
            "optimizer": {"kind": "adam", "learning_rate": 0.05},
            "samples_per_condition": 4,
            "ref_update_interval": interval,
            "iterations": 2000,
            "init_mean": init_mean,
            "init_std": 1.0,
        },
    }


def _mdp(algorithm: str, loss: dict, optimizer: dict, interval: int) -> dict:
    return {
        "regime": "mdp",
        "seeds": list(range(10)),
        "mdp": "default",
        "trainer": {
            "algorithm": algorithm,
            "loss": loss,
            "optimizer": optimizer,
            "samples_per_condition": 4,
            "ref_update_interval": interval,
            "iterations": 500,
            "max_steps": 40,
        },
    }


def _sequence(loss: dict, optimizer: dict, interval: int, seeds: int) -> dict:
    return {
        "regime": "sequence",
        "seeds": list(range(seeds)),
        "sequence": {"vocab_size": 4, "length": 6, "target_token": 0},
        "trainer": {
            "algorithm": "pmpo",
            "loss": loss,
            "optimizer": optimizer,
            "samples_per_condition": 4,
            "ref_update_interval": interval,
            "iterations": 1000,
        },
    }


def _offline(mixture: dict, episodes: int = 30, corruption: float = 0.7) -> dict:
    return {
        "regime": "offline",
        "seeds": list(range(10)),
        "mdp": "default",
        "dataset": {
            "episodes": episodes,
            "corruption_fraction": corruption,
            "max_steps": 40,
        },
        "trainer": {
            "algorithm": "mixture",
            "mixture": mixture,
            "loss": {"alpha": 0.5, "beta": 2.0},
            "optimizer": {"kind": "adam", "learning_rate": 0.05},
            "iterations": 500,
            "max_steps": 40,
            "labeled_fraction": 1.0,
        },
    }


def _build_presets() -> dict[str, dict]:
    presets: dict[str, dict] = {}

    for kind, init in (("sphere", [3.5, -3.5]), ("rosenbrock", [-1.5, 1.5])):
        presets[f"bandit-{kind}-ar"] = _bandit(kind, init, 0.5, 0.5, 1)
        presets[f"bandit-{kind}-accept"] = _bandit(kind, init, 1.0, 0.0, 1)
        presets[f"bandit-{kind}-reject"] = _bandit(kind, init, 0.0, 2.0, 10)

    presets["mdp-ar"] = _mdp(
        "pmpo", {"alpha": 0.5, "beta": 0.5},
        {"kind": "adam", "learning_rate": 0.05}, 1,
    )
    presets["mdp-dpo"] = _mdp(
        "dpo", {"dpo_beta": 0.1},
        {"kind": "adam", "learning_rate": 0.05}, 1,
    )
    for tag, beta in BETA_SWEEP.items():
        presets[f"mdp-reject-{tag}"] = _mdp(
            "pmpo", {"alpha": 0.0, "beta": beta}, dict(SWEEP_OPTIMIZER), SWEEP_REF_INTERVAL
        )
        presets[f"mdp-accept-{tag}"] = _mdp(
            "pmpo", {"alpha": 1.0, "beta": beta}, dict(SWEEP_OPTIMIZER), SWEEP_REF_INTERVAL
        )

    presets["sequence-ar"] = _sequence(
        {"alpha": 0.5, "beta": 0.5}, {"kind": "adam", "learning_rate": 0.01}, 1, 5
    )
    for tag, beta in BETA_SWEEP.items():
        presets[f"sequence-reject-{tag}"] = _sequence(
            {"alpha": 0.0, "beta": beta}, dict(SWEEP_OPTIMIZER), SWEEP_REF_INTERVAL, 10
        )
        presets[f"sequence-accept-{tag}"] = _sequence(
            {"alpha": 1.0, "beta": beta}, dict(SWEEP_OPTIMIZER), SWEEP_REF_INTERVAL, 10
        )

    presets["offline-bc"] = _offline({"bc": 1.0})
    presets["offline-accept"] = _offline({"accept": 1.0})
    presets["offline-accept-bc"] = _offline({"accept": 1.0, "bc": 1.0})
    presets["offline-reject-bc"] = _offline({"reject": 1.0, "bc": 1.0})
    presets["offline-accept-reject-bc"] = _offline({"accept": 1.0, "reject": 1.0, "bc": 1.0})
    presets["offline-clean-bc"] = _offline({"bc": 1.0}, episodes=200, corruption=0.0)

    presets["em-demo"] = {
        "regime": "em-exact",
        "seeds": [0],
        "em": {
            "prior": [0.3, 0.25, 0.2, 0.15, 0.06, 0.04],
            "f": [-1.0, 0.5, 2.0, -0.5, 3.0, 1.0],
            "tau": 1.0,
            "iterations": 50,
        },
    }

    for name, doc in presets.items():
        doc["name"] = name
    return presets


_PRESETS = _build_presets()


def preset_names() -> tuple[str, ...]:
    return tuple(_PRESETS)


def preset_config(name: str) -> dict:
    """A deep copy of the named preset's config document."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(_PRESETS)}")
    return copy.deepcopy(_PRESETS[name])


def preset_json(name: str) -> str:
    """The preset as the canonical indented JSON written under configs/."""
    return json.dumps(preset_config(name), indent=2, sort_keys=True) + "\n"
