"""Desk-scale evaluation targets.

- Benchmark functions (sphere, rosenbrock, schwefel) for the bandit regime;
  `evaluate` negates them so higher is better.
- A deterministic gridworld MDP with exact value iteration and exact policy
  evaluation as critics. Rewards are earned on entering a cell; bumping a
  wall or the boundary is a no-op; terminal cells absorb.
- A toy sequence task whose reward counts a target token.
- An offline dataset generator mixing expert and uniform-random actions,
  plus the first-visit Monte Carlo value table used for advantage labels.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .policies import (
    LOGIT_CLAMP,
    CategoricalPolicy,
    enumerate_sequences,
    sequence_log_probs,
)

BENCHMARK_KINDS = ("sphere", "rosenbrock", "schwefel")
BENCHMARK_DOMAINS = {
    "sphere": (-5.12, 5.12),
    "rosenbrock": (-2.048, 2.048),
    "schwefel": (-500.0, 500.0),
}
SCHWEFEL_OFFSET = 418.9829
SCHWEFEL_OPT_COORD = 420.9687


@dataclass(frozen=True)
class BenchmarkFunction:
    """One of the standard minimization benchmarks, optimum value ~ 0."""

    kind: str
    dimension: int

    def __post_init__(self):
        if self.kind not in BENCHMARK_KINDS:
            raise InputError(f"unknown benchmark {self.kind!r}; expected one of {BENCHMARK_KINDS}")
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise InputError("dimension must be a positive integer")
        if self.kind == "rosenbrock" and self.dimension < 2:
            raise InputError("rosenbrock needs dimension >= 2")
        object.__setattr__(self, "dimension", int(self.dimension))

    @property
    def domain(self) -> tuple[float, float]:
        return BENCHMARK_DOMAINS[self.kind]

    def optimum_point(self) -> np.ndarray:
        if self.kind == "sphere":
            return np.zeros(self.dimension)
        if self.kind == "rosenbrock":
            return np.ones(self.dimension)
        return np.full(self.dimension, SCHWEFEL_OPT_COORD)

    def _check_point(self, point) -> np.ndarray:
        arr = np.asarray(point, dtype=float)
        if arr.shape != (self.dimension,):
            raise InputError(f"point shape {arr.shape} does not match dimension {self.dimension}")
        if not np.all(np.isfinite(arr)):
            raise InputError("non-finite point")
        return arr

    def function_value(self, point) -> float:
        """The raw minimization value (0 at the optimum)."""
        x = self._check_point(point)
        if self.kind == "sphere":
            return float(np.sum(x * x))
        if self.kind == "rosenbrock":
            return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))
        return float(SCHWEFEL_OFFSET * self.dimension - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def evaluate(fn: BenchmarkFunction, point) -> float:
    """Evaluation score: the negated function value, so higher is better."""
    return -fn.function_value(point)


# Deterministic gridworld actions, in fixed order.
ACTION_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))
ACTION_NAMES = ("up", "down", "left", "right")
N_ACTIONS = 4


@dataclass(frozen=True)
class GridworldMdp:
    """Deterministic four-action gridworld with reward on cell entry."""

    n_rows: int
    n_cols: int
    walls: frozenset
    rewards: dict
    terminals: frozenset
    gamma: float

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise InputError("grid dimensions must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise InputError(f"gamma must be in [0, 1), got {self.gamma}")
        walls = frozenset((int(r), int(c)) for r, c in self.walls)
        terminals = frozenset((int(r), int(c)) for r, c in self.terminals)
        rewards = {(int(r), int(c)): float(v) for (r, c), v in self.rewards.items()}
        for cell in itertools.chain(walls, terminals, rewards):
            r, c = cell
            if not (0 <= r < self.n_rows and 0 <= c < self.n_cols):
                raise InputError(f"cell {cell} out of bounds")
        for cell in itertools.chain(terminals, rewards):
            if cell in walls:
                raise InputError(f"cell {cell} cannot be both wall and reward/terminal")
        object.__setattr__(self, "walls", walls)
        object.__setattr__(self, "terminals", terminals)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "gamma", float(self.gamma))

        states = tuple(
            (r, c)
            for r in range(self.n_rows)
            for c in range(self.n_cols)
            if (r, c) not in walls
        )
        if not any(cell not in terminals for cell in states):
            raise InputError("grid needs at least one non-terminal free cell")
        index = {cell: i for i, cell in enumerate(states)}
        n = len(states)
        next_state = np.zeros((n, N_ACTIONS), dtype=int)
        entry_reward = np.zeros((n, N_ACTIONS))
        next_terminal = np.zeros((n, N_ACTIONS), dtype=bool)
        terminal_mask = np.array([cell in terminals for cell in states])
        for i, cell in enumerate(states):
            for a in range(N_ACTIONS):
                nxt = self.step(cell, a)
                next_state[i, a] = index[nxt]
                entry_reward[i, a] = rewards.get(nxt, 0.0)
                next_terminal[i, a] = nxt in terminals
        for arr in (next_state, entry_reward, next_terminal, terminal_mask):
            arr.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "next_state", next_state)
        object.__setattr__(self, "entry_reward", entry_reward)
        object.__setattr__(self, "next_terminal", next_terminal)
        object.__setattr__(self, "terminal_mask", terminal_mask)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_index(self, cell) -> int:
        try:
            return self._index[tuple(cell)]
        except KeyError:
            raise InputError(f"cell {cell} is not a free cell") from None

    def non_terminal_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.terminal_mask)

    def step(self, cell, action: int):
        """Next cell for a deterministic move; walls and bounds are no-ops."""
        if not isinstance(action, (int, np.integer)) or not 0 <= action < N_ACTIONS:
            raise InputError(f"action must be in [0, {N_ACTIONS}), got {action!r}")
        r, c = cell
        if (r, c) in self.terminals:
            return (r, c)
        dr, dc = ACTION_DELTAS[action]
        nr, nc = r + dr, c + dc
        if not (0 <= nr < self.n_rows and 0 <= nc < self.n_cols) or (nr, nc) in self.walls:
            return (r, c)
        return (nr, nc)


def value_iteration(mdp: GridworldMdp, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Exact optimal values: V(s) = max_a Q(s,a), Bellman residual below tol."""
    if not tol > 0.0:
        raise InputError("tol must be > 0")
    q = np.zeros((mdp.n_states, N_ACTIONS))
    while True:
        v = np.where(mdp.terminal_mask, 0.0, q.max(axis=1))
        new_q = mdp.entry_reward + mdp.gamma * np.where(mdp.next_terminal, 0.0, v[mdp.next_state])
        new_q[mdp.terminal_mask] = 0.0
        if np.max(np.abs(new_q - q)) < tol:
            q = new_q
            break
        q = new_q
    v = np.where(mdp.terminal_mask, 0.0, q.max(axis=1))
    return v, q


def policy_q_critic(mdp: GridworldMdp, policy: CategoricalPolicy, tol: float = 1e-10) -> np.ndarray:
    """Exact Q^pi by iterative policy evaluation."""
    if not tol > 0.0:
        raise InputError("tol must be > 0")
    if policy.n_conditions != mdp.n_states or policy.n_outputs != N_ACTIONS:
        raise InputError(
            f"policy shape ({policy.n_conditions}, {policy.n_outputs}) does not match "
            f"({mdp.n_states}, {N_ACTIONS})"
        )
    probs = np.stack([policy.probs(s) for s in range(mdp.n_states)])
    q = np.zeros((mdp.n_states, N_ACTIONS))
    while True:
        v = np.where(mdp.terminal_mask, 0.0, np.sum(probs * q, axis=1))
        new_q = mdp.entry_reward + mdp.gamma * np.where(mdp.next_terminal, 0.0, v[mdp.next_state])
        new_q[mdp.terminal_mask] = 0.0
        if np.max(np.abs(new_q - q)) < tol:
            return new_q
        q = new_q


def greedy_actions(policy: CategoricalPolicy) -> np.ndarray:
    """Deterministic action per condition: argmax logit, lowest index on ties."""
    return np.argmax(policy.logits, axis=1)


def greedy_policy_from_q(q_table: np.ndarray) -> CategoricalPolicy:
    """Near-deterministic categorical policy playing argmax Q."""
    q = np.asarray(q_table, dtype=float)
    if q.ndim != 2:
        raise InputError("q_table must be 2-D")
    logits = np.full(q.shape, -LOGIT_CLAMP)
    logits[np.arange(q.shape[0]), np.argmax(q, axis=1)] = LOGIT_CLAMP
    return CategoricalPolicy(logits)


def episode_return(mdp: GridworldMdp, actions: np.ndarray, start_index: int, max_steps: int = 100) -> float:
    """Undiscounted return of the deterministic action table from one start."""
    s = int(start_index)
    total = 0.0
    for _ in range(max_steps):
        a = int(actions[s])
        total += mdp.entry_reward[s, a]
        if mdp.next_terminal[s, a]:
            break
        nxt = int(mdp.next_state[s, a])
        if nxt == s:
            # Deterministic self-loop without reward never escapes; cut early.
            if mdp.entry_reward[s, a] == 0.0:
                break
            s = nxt
        else:
            s = nxt
    return total


def mean_greedy_return(mdp: GridworldMdp, policy: CategoricalPolicy, max_steps: int = 100) -> float:
    """Exact mean undiscounted greedy return over all non-terminal starts."""
    actions = greedy_actions(policy)
    starts = mdp.non_terminal_indices()
    return float(np.mean([episode_return(mdp, actions, s, max_steps) for s in starts]))


def sampled_greedy_return(
    mdp: GridworldMdp,
    policy: CategoricalPolicy,
    episodes: int,
    rng: np.random.Generator,
    max_steps: int = 100,
) -> float:
    """Mean undiscounted greedy return over uniformly sampled starts."""
    if episodes < 1:
        raise InputError("episodes must be >= 1")
    actions = greedy_actions(policy)
    starts = mdp.non_terminal_indices()
    picks = starts[rng.integers(0, len(starts), size=episodes)]
    return float(np.mean([episode_return(mdp, actions, s, max_steps) for s in picks]))


DEFAULT_GRID_DOC = {
    "grid": [
        "........",
        ".####.#.",
        ".#....#.",
        ".#.##.#.",
        "...#P.#.",
        ".#.#....",
        ".#.####.",
        ".......G",
    ],
    "rewards": {"G": 1.0, "P": -1.0},
    "terminals": ["G", "P"],
    "gamma": 0.9,
}


def gridworld_from_json(doc) -> GridworldMdp:
    """Build a gridworld from {grid: [row strings], rewards, terminals, gamma}.

    Grid characters: '.' free, '#' wall; any other character names a cell
    that the rewards map and terminals list may reference.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid gridworld JSON: {exc}") from exc
    try:
        rows = list(doc["grid"])
        reward_by_char = {str(k): float(v) for k, v in doc.get("rewards", {}).items()}
        terminal_chars = {str(c) for c in doc.get("terminals", [])}
        gamma = float(doc["gamma"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed gridworld document: {exc}") from exc
    if not rows or any(not isinstance(r, str) for r in rows):
        raise InputError("grid must be a nonempty list of strings")
    n_cols = len(rows[0])
    if any(len(r) != n_cols for r in rows):
        raise InputError("grid rows must have equal length")
    walls, rewards, terminals = set(), {}, set()
    seen_chars = set()
    for r, row in enumerate(rows):
        for c, ch in enumerate(row):
            if ch == "#":
                walls.add((r, c))
            elif ch != ".":
                seen_chars.add(ch)
                if ch in reward_by_char:
                    rewards[(r, c)] = reward_by_char[ch]
                if ch in terminal_chars:
                    terminals.add((r, c))
    unknown = seen_chars - set(reward_by_char) - terminal_chars
    if unknown:
        raise InputError(f"grid characters {sorted(unknown)} not named in rewards or terminals")
    return GridworldMdp(len(rows), n_cols, frozenset(walls), rewards, frozenset(terminals), gamma)


def default_gridworld() -> GridworldMdp:
    """The 8x8 experiment grid: one +1 goal, one -1 pit, gamma 0.9."""
    return gridworld_from_json(DEFAULT_GRID_DOC)


@dataclass(frozen=True)
class SequenceTask:
    """Reward a sequence by how many times it contains the target token."""

    vocab_size: int = 4
    length: int = 6
    target_token: int = 0

    def __post_init__(self):
        if self.vocab_size < 1 or self.length < 1:
            raise InputError("vocab_size and length must be positive")
        if not 0 <= self.target_token < self.vocab_size:
            raise InputError("target_token out of range")


def sequence_reward(task: SequenceTask, y) -> float:
    tokens = list(y)
    if len(tokens) > task.length:
        raise InputError(f"sequence length {len(tokens)} exceeds task length {task.length}")
    for t in tokens:
        if isinstance(t, bool) or not isinstance(t, (int, np.integer)):
            raise InputError(f"token must be an integer, got {t!r}")
        if not 0 <= t < task.vocab_size:
            raise InputError(f"token {t} out of range [0, {task.vocab_size})")
    return float(sum(1 for t in tokens if t == task.target_token))


def expected_sequence_reward(task: SequenceTask, policy) -> float:
    """Exact expected reward under the policy by full-support enumeration.

    Evaluated for condition 0, the single condition the sequence regime
    uses. Uniform policies give exactly length / vocab_size.
    """
    if policy.vocab_size != task.vocab_size or policy.max_length != task.length:
        raise InputError("policy does not match the task's vocabulary or length")
    seqs = enumerate_sequences(task.vocab_size, task.length)
    log_p = sequence_log_probs(policy, 0, seqs)
    rewards = (seqs == task.target_token).sum(axis=1)
    return float(np.sum(np.exp(log_p) * rewards))


@dataclass(frozen=True)
class Transition:
    state: int
    action: int
    reward: float
    next_state: int
    terminal: bool
    corrupted: bool


@dataclass(frozen=True)
class OfflineDataset:
    """Episodes of gridworld transitions with a known corruption rate."""

    episodes: tuple
    corruption_fraction: float

    def __post_init__(self):
        object.__setattr__(self, "episodes", tuple(tuple(ep) for ep in self.episodes))
        if not 0.0 <= self.corruption_fraction <= 1.0:
            raise InputError("corruption_fraction must be in [0, 1]")

    @property
    def n_transitions(self) -> int:
        return sum(len(ep) for ep in self.episodes)

    def transitions(self):
        return itertools.chain.from_iterable(self.episodes)


def episode_rewards_to_go(episode, gamma: float) -> np.ndarray:
    """Discounted reward-to-go at each step of one episode."""
    out = np.zeros(len(episode))
    acc = 0.0
    for i in range(len(episode) - 1, -1, -1):
        acc = episode[i].reward + gamma * acc
        out[i] = acc
    return out


def generate_offline_dataset(
    mdp: GridworldMdp,
    expert_policy: CategoricalPolicy,
    corruption_fraction: float,
    episodes: int,
    rng: np.random.Generator,
    max_steps: int = 40,
) -> OfflineDataset:
    """Roll out episodes where each action is uniformly random with the given probability.

    Starts are uniform over non-terminal cells; episodes end on terminal
    entry or after max_steps transitions.
    """
    if not 0.0 <= corruption_fraction <= 1.0:
        raise InputError("corruption_fraction must be in [0, 1]")
    if episodes < 1:
        raise InputError("episodes must be >= 1")
    starts = mdp.non_terminal_indices()
    all_episodes = []
    for _ in range(episodes):
        s = int(starts[rng.integers(0, len(starts))])
        ep = []
        for _ in range(max_steps):
            corrupted = bool(rng.random() < corruption_fraction)
            if corrupted:
                a = int(rng.integers(0, N_ACTIONS))
            else:
                a = expert_policy.sample(s, rng, 1)[0]
            ep.append(
                Transition(
                    s,
                    a,
                    float(mdp.entry_reward[s, a]),
                    int(mdp.next_state[s, a]),
                    bool(mdp.next_terminal[s, a]),
                    corrupted,
                )
            )
            if ep[-1].terminal:
                break
            s = ep[-1].next_state
        all_episodes.append(tuple(ep))
    return OfflineDataset(tuple(all_episodes), corruption_fraction)


def fit_state_values(dataset: OfflineDataset, gamma: float) -> dict[int, float]:
    """First-visit Monte Carlo state values from the full dataset."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for ep in dataset.episodes:
        rtg = episode_rewards_to_go(ep, gamma)
        seen = set()
        for tr, g in zip(ep, rtg):
            if tr.state in seen:
                continue
            seen.add(tr.state)
            sums[tr.state] = sums.get(tr.state, 0.0) + float(g)
            counts[tr.state] = counts.get(tr.state, 0) + 1
    return {s: sums[s] / counts[s] for s in sums}


def dataset_to_jsonl(dataset: OfflineDataset) -> str:
    """One JSON record per transition, with episode ids; header carries metadata."""
    lines = [json.dumps({"corruption_fraction": dataset.corruption_fraction})]
    for ep_id, ep in enumerate(dataset.episodes):
        for tr in ep:
            lines.append(
                json.dumps(
                    {
                        "episode": ep_id,
                        "state": tr.state,
                        "action": tr.action,
                        "reward": tr.reward,
                        "next_state": tr.next_state,
                        "terminal": tr.terminal,
                        "corrupted": tr.corrupted,
                    }
                )
            )
    return "\n".join(lines) + "\n"


def dataset_from_jsonl(text: str) -> OfflineDataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty dataset document")
    try:
        header = json.loads(lines[0])
        fraction = float(header["corruption_fraction"])
        by_episode: dict[int, list] = {}
        for ln in lines[1:]:
            rec = json.loads(ln)
            by_episode.setdefault(int(rec["episode"]), []).append(
                Transition(
                    int(rec["state"]),
                    int(rec["action"]),
                    float(rec["reward"]),
                    int(rec["next_state"]),
                    bool(rec["terminal"]),
                    bool(rec["corrupted"]),
                )
            )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad dataset JSONL: {exc}") from exc
    episodes = tuple(tuple(by_episode[k]) for k in sorted(by_episode))
    return OfflineDataset(episodes, fraction)
