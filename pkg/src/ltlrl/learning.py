"""Tabular learners and the training loop.

Two layers live here. The object layer (QTable, select_action, the update
rules, ReplayBuffer) states the learning contract one transition at a time.
The array layer (train_loop) runs the same contract over precomputed integer
tables so a full run stays cheap; its equivalence to the object layer is
pinned by tests that replay both side by side.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .automata import find_sinks, step_ldba
from .baselines import lcer_relabel
from .config import ExperimentConfig
from .environments import TaskBundle, rect_cells
from .product import EnvAction, EpsilonAction, NondeterministicStep
from .rng import named_stream
from .shaping import (
    build_mrp,
    empirical_kernel,
    expected_values,
    init_prior,
    partially_informed_prior,
    solve_values,
    update_posterior,
    vi_kernel,
)

SHAPED_METHODS = ("drl2", "drl2-empirical", "drl2-vi", "drl2-partial")


class QTable:
    """Action values keyed by (state, action); unseen pairs read as zero."""

    __slots__ = ("_values",)

    def __init__(self):
        self._values: dict = {}

    def value(self, state, action) -> float:
        return self._values.get((state, action), 0.0)

    def set_value(self, state, action, value: float) -> None:
        self._values[(state, action)] = float(value)

    def best_value(self, state, action_count: int) -> float:
        return max(self.value(state, a) for a in range(action_count))

    def greedy_action(self, state, action_count: int, rng) -> int:
        """Argmax with uniform tie-breaking; always consumes one index draw.

        Random ties matter: zero-initialized tables would otherwise pin
        the greedy policy to one action and freeze exploration wherever
        the intrinsic signal is flat.
        """
        values = [self.value(state, a) for a in range(action_count)]
        best = max(values)
        ties = [a for a, v in enumerate(values) if v == best]
        return ties[int(rng.integers(len(ties)))]


def select_action(q: QTable, state, action_count: int, epsilon: float, rng) -> int:
    """Epsilon-greedy draw: the explore coin is flipped before the index."""
    if rng.random() < epsilon:
        return int(rng.integers(action_count))
    return q.greedy_action(state, action_count, rng)


def q_learning_update(
    q: QTable,
    state,
    action,
    reward: float,
    discount: float,
    next_state,
    next_action_count: int,
    learning_rate: float = 1.0,
) -> float:
    """Off-policy update toward reward + discount * max_a Q(next, a)."""
    target = reward + discount * q.best_value(next_state, next_action_count)
    if learning_rate == 1.0:
        # Exact overwrite: no residual arithmetic on the stored value.
        q.set_value(state, action, target)
    else:
        old = q.value(state, action)
        q.set_value(state, action, old + learning_rate * (target - old))
    return target


def sarsa_update(
    q: QTable,
    state,
    action,
    reward: float,
    discount: float,
    next_state,
    next_action,
    learning_rate: float = 1.0,
) -> float:
    """On-policy update toward reward + discount * Q(next, next_action)."""
    target = reward + discount * q.value(next_state, next_action)
    if learning_rate == 1.0:
        q.set_value(state, action, target)
    else:
        old = q.value(state, action)
        q.set_value(state, action, old + learning_rate * (target - old))
    return target


class ReplayBuffer:
    """Fixed-capacity transition store; once full, the oldest entry goes first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self._capacity = int(capacity)
        self._items: list = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    @property
    def capacity(self) -> int:
        return self._capacity

    def append(self, item) -> None:
        if len(self._items) < self._capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
            self._cursor = (self._cursor + 1) % self._capacity

    def sample_indices(self, batch_size: int, rng) -> np.ndarray:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, len(self._items), size=batch_size)

    def sample(self, batch_size: int, rng) -> list:
        return [self._items[i] for i in self.sample_indices(batch_size, rng)]


@dataclass(frozen=True)
class EvalRecord:
    """One greedy evaluation episode, keyed by the training step it ran at."""

    step: int
    edr: float
    violation: bool
    satisfied: bool
    accept_visits: int


@dataclass(frozen=True)
class EpisodeRecord:
    """One completed training episode."""

    end_step: int
    accept_visits: int
    violated: bool
    satisfied: bool


@dataclass(frozen=True, eq=False)
class RunResult:
    config: ExperimentConfig
    seed: int
    metrics: tuple[EvalRecord, ...]
    episodes: tuple[EpisodeRecord, ...]
    posterior: np.ndarray | None
    duration_seconds: float


class FastTables:
    """Integer lookup tables for one task: movement, labels, automaton steps.

    Building them requires every (state, letter) pair to have a unique
    letter successor, the same restriction step_product enforces per step.
    """

    def __init__(self, task: TaskBundle):
        grid, auto = task.grid, task.automaton
        self.cells = grid.cells()
        self.cell_index = {cell: i for i, cell in enumerate(self.cells)}
        self.cell_count = len(self.cells)
        self.state_count = auto.state_count
        self.initial = auto.initial

        self.move = np.empty((self.cell_count, 5), dtype=np.int64)
        for ci, cell in enumerate(self.cells):
            for action in range(5):
                self.move[ci, action] = self.cell_index[grid.move(cell, action)]

        self.letters = [task.label(cell) for cell in self.cells]
        self.successor = np.empty((self.state_count, self.cell_count), dtype=np.int64)
        for ci, letter in enumerate(self.letters):
            for b in range(self.state_count):
                targets = step_ldba(auto, b, letter)
                if len(targets) != 1:
                    raise NondeterministicStep(
                        f"state {b} has {len(targets)} successors on {set(letter)}"
                    )
                self.successor[b, ci] = next(iter(targets))

        # Epsilon jumps in declaration order, matching available_actions.
        self.eps_targets = tuple(
            tuple(t for s, t in auto.epsilon if s == b) for b in range(self.state_count)
        )
        self.action_counts = np.array(
            [5 + len(t) for t in self.eps_targets], dtype=np.int64
        )

        accepting = np.zeros(self.state_count, dtype=bool)
        accepting[list(auto.accepting)] = True
        self.accepting = accepting
        self.reward = accepting.astype(np.float64)
        sinks = find_sinks(auto)
        self.failure_sink = np.array(
            [b in sinks and not accepting[b] for b in range(self.state_count)]
        )
        self.start_id = self.cell_index[task.start]
        if task.start_region is not None:
            self.region_ids = [self.cell_index[c] for c in rect_cells(task.start_region)]
        else:
            self.region_ids = None


def discount_vector(tables: FastTables, gamma: float) -> np.ndarray:
    """Per-state occupancy discount: gamma on accepting states, 1 elsewhere."""
    return np.where(tables.accepting, gamma, 1.0)


def _tied_argmax(row: np.ndarray, rng) -> int:
    """Uniform draw among the row's maxima; always consumes one index draw.

    Invalid action slots are padded with -inf and can never tie.
    """
    ties = np.flatnonzero(row == row.max())
    return int(ties[int(rng.integers(ties.size))])


class _Potentials:
    """Potential state for shaped methods, refreshed on a fixed cadence."""

    def __init__(self, task: TaskBundle, config: ExperimentConfig, posterior_rng):
        self.config = config
        self.rng = posterior_rng
        self.values: np.ndarray | None = None
        self.phi: np.ndarray | None = None
        self.model = None
        self.prior = None
        self.static_values = None
        method = config.method
        if method in SHAPED_METHODS:
            self.model = build_mrp(
                task.automaton, config.gamma, add_virtual_sink=config.add_virtual_sink
            )
            if method == "drl2":
                self.prior = init_prior(self.model, config.alpha)
            elif method == "drl2-partial":
                self.prior = partially_informed_prior(self.model, config.alpha)
            elif method == "drl2-vi":
                self.static_values = solve_values(self.model, vi_kernel(self.model))

    def refresh(self, counts: np.ndarray, visits: np.ndarray, real_states: int) -> None:
        method = self.config.method
        if method == "count":
            self.phi = 1.0 / np.sqrt(np.maximum(visits, 1.0))
            return
        if self.model is None:
            return
        n = self.model.state_count
        embedded = np.zeros((n, n), dtype=counts.dtype)
        embedded[:real_states, :real_states] = counts
        if method in ("drl2", "drl2-partial"):
            posterior = update_posterior(self.prior, embedded)
            full = expected_values(
                self.model, posterior, self.config.posterior_samples, self.rng
            )
        elif method == "drl2-empirical":
            full = solve_values(self.model, empirical_kernel(embedded, self.model))
        else:  # drl2-vi: the kernel ignores observations
            full = self.static_values
        self.values = full[:real_states]


def _shaped_rewards(
    base: np.ndarray,
    bb: np.ndarray,
    bb2: np.ndarray,
    method: str,
    scale: float,
    disc: np.ndarray,
    potentials: _Potentials,
) -> np.ndarray:
    if method in SHAPED_METHODS:
        v = potentials.values
        return base + scale * (disc[bb2] * v[bb2] - v[bb])
    if method == "count":
        phi = potentials.phi
        return base + scale * (disc[bb2] * phi[bb2] - phi[bb])
    if method == "reward-shift":
        return 2.0 * base - 1.0
    return base


def _relabel_batch(
    tables: FastTables,
    auto,
    cb2: np.ndarray,
    bb: np.ndarray,
    ab: np.ndarray,
    bb2: np.ndarray,
    rng,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counterfactual relabeling of a sampled batch, one draw chain per row."""
    new_b = bb.copy()
    new_a = ab.copy()
    new_b2 = bb2.copy()
    for i in range(len(bb)):
        a = int(ab[i])
        if a < 5:
            action = EnvAction(a)
        else:
            action = EpsilonAction(tables.eps_targets[int(bb[i])][a - 5])
        b_hat, b_hat2 = lcer_relabel(
            auto,
            int(bb[i]),
            int(bb2[i]),
            action,
            tables.letters[int(cb2[i])],
            rng,
        )
        new_b[i] = b_hat
        new_b2[i] = b_hat2
        if a >= 5:
            # The stored jump keeps its target; re-derive its slot at b_hat.
            if b_hat != bb[i]:
                new_a[i] = 5 + tables.eps_targets[b_hat].index(action.target)
    return new_b, new_a, new_b2


def _greedy_rollout(
    tables: FastTables,
    task: TaskBundle,
    q: np.ndarray,
    ldba_keyed: bool,
    gamma: float,
    stream,
) -> EvalRecord:
    """One greedy episode on a dedicated stream; returns its summary."""
    n_b = tables.state_count
    if tables.region_ids is not None:
        cell = tables.region_ids[int(stream.integers(len(tables.region_ids)))]
    else:
        cell = tables.start_id
    b = int(tables.successor[tables.initial, cell])
    total, running, visits = 0.0, 1.0, 0
    violated = bool(tables.failure_sink[b])
    if tables.accepting[b]:
        total += running
        running *= gamma
        visits += 1
    last_action = None
    sticky = task.sticky_prob
    for _ in range(task.episode_length):
        sid = b if ldba_keyed else cell * n_b + b
        a = _tied_argmax(q[sid], stream)
        if a < 5:
            executed = a
            if sticky > 0.0 and last_action is not None and stream.random() < sticky:
                executed = last_action
            cell = int(tables.move[cell, executed])
            b = int(tables.successor[b, cell])
            last_action = executed
        else:
            b = tables.eps_targets[b][a - 5]
        if tables.accepting[b]:
            total += running
            running *= gamma
            visits += 1
        violated |= bool(tables.failure_sink[b])
    return EvalRecord(
        step=-1, edr=total, violation=violated, satisfied=visits > 0, accept_visits=visits
    )


def train_loop(task: TaskBundle, config: ExperimentConfig, seed: int) -> RunResult:
    """Run one seed of one configuration and return its full record.

    Batch targets are computed against the table as it stood when the batch
    was drawn, then written back in sample order; at learning rate 1 a pair
    sampled twice keeps the last write. Bootstrapping is never cut at
    episode boundaries: a fixed-length episode is a reset, not a terminal.
    """
    config.validate()
    started = time.monotonic()
    method, learner = config.method, config.learner
    tables = FastTables(task)
    n_b, n_c = tables.state_count, tables.cell_count
    gamma = config.gamma
    ldba_keyed = method == "ldba-only"

    env_rng = named_stream(seed, "env")
    policy_rng = named_stream(seed, "policy")
    replay_rng = named_stream(seed, "replay")
    posterior_rng = named_stream(seed, "posterior")
    lcer_rng = named_stream(seed, "lcer")
    sarsa_rng = named_stream(seed, "sarsa")

    state_count = n_b if ldba_keyed else n_c * n_b
    max_actions = int(tables.action_counts.max())
    q = np.zeros((state_count, max_actions))
    for b in range(n_b):
        n_act = int(tables.action_counts[b])
        if n_act < max_actions:
            rows = slice(b, b + 1) if ldba_keyed else slice(b, None, n_b)
            q[rows, n_act:] = -np.inf

    potentials = _Potentials(task, config, posterior_rng)
    counts = np.zeros((n_b, n_b), dtype=np.int64)
    visits = np.zeros(n_b, dtype=np.int64)
    disc = discount_vector(tables, gamma)
    rew = tables.reward

    capacity = min(config.buffer_capacity, config.total_steps)
    buf_c = np.empty(capacity, dtype=np.int64)
    buf_b = np.empty(capacity, dtype=np.int64)
    buf_a = np.empty(capacity, dtype=np.int64)
    buf_c2 = np.empty(capacity, dtype=np.int64)
    buf_b2 = np.empty(capacity, dtype=np.int64)
    buf_size = 0
    buf_pos = 0

    metrics: list[EvalRecord] = []
    episodes: list[EpisodeRecord] = []
    sticky = task.sticky_prob
    episode_length = task.episode_length
    scale = config.intrinsic_scale
    batch = config.batch_size
    epsilon = config.epsilon
    lr = config.learning_rate

    cell = b = 0
    last_action: int | None = None
    step_in_episode = episode_length
    ep_visits = 0
    ep_violated = False

    def record_eval(step: int) -> None:
        rollout = _greedy_rollout(
            tables, task, q, ldba_keyed, gamma, named_stream(seed, f"eval-{step}")
        )
        metrics.append(
            EvalRecord(
                step=step,
                edr=rollout.edr,
                violation=rollout.violation,
                satisfied=rollout.satisfied,
                accept_visits=rollout.accept_visits,
            )
        )

    for step in range(config.total_steps):
        if step % config.potential_update_period == 0:
            potentials.refresh(counts, visits, n_b)
        if step % config.eval_cadence == 0:
            record_eval(step)
        if step_in_episode == episode_length:
            if step > 0:
                episodes.append(
                    EpisodeRecord(
                        end_step=step,
                        accept_visits=ep_visits,
                        violated=ep_violated,
                        satisfied=ep_visits > 0,
                    )
                )
            if tables.region_ids is not None:
                cell = tables.region_ids[int(env_rng.integers(len(tables.region_ids)))]
            else:
                cell = tables.start_id
            b = int(tables.successor[tables.initial, cell])
            counts[tables.initial, b] += 1
            visits[b] += 1
            ep_visits = int(tables.accepting[b])
            ep_violated = bool(tables.failure_sink[b])
            last_action = None
            step_in_episode = 0

        n_act = int(tables.action_counts[b])
        sid = b if ldba_keyed else cell * n_b + b
        effective_epsilon = 1.0 if step < config.initial_exploration_steps else epsilon
        if policy_rng.random() < effective_epsilon:
            action = int(policy_rng.integers(n_act))
        else:
            action = _tied_argmax(q[sid], policy_rng)

        if action < 5:
            executed = action
            if sticky > 0.0 and last_action is not None and env_rng.random() < sticky:
                executed = last_action
            cell2 = int(tables.move[cell, executed])
            b2 = int(tables.successor[b, cell2])
            next_last = executed
            counted = True
        else:
            cell2 = cell
            b2 = tables.eps_targets[b][action - 5]
            next_last = last_action
            counted = config.count_epsilon_transitions
        if counted:
            counts[b, b2] += 1
        visits[b2] += 1
        ep_visits += int(tables.accepting[b2])
        ep_violated |= bool(tables.failure_sink[b2])

        buf_c[buf_pos] = cell
        buf_b[buf_pos] = b
        buf_a[buf_pos] = action
        buf_c2[buf_pos] = cell2
        buf_b2[buf_pos] = b2
        buf_pos = (buf_pos + 1) % capacity
        buf_size = min(buf_size + 1, capacity)

        cell, b, last_action = cell2, b2, next_last
        step_in_episode += 1

        if step < config.initial_exploration_steps:
            continue

        idx = replay_rng.integers(0, buf_size, size=batch)
        cb = buf_c[idx]
        bb = buf_b[idx]
        ab = buf_a[idx]
        cb2 = buf_c2[idx]
        bb2 = buf_b2[idx]
        if method == "lcer":
            bb, ab, bb2 = _relabel_batch(
                tables, task.automaton, cb2, bb, ab, bb2, lcer_rng
            )
        rewards = _shaped_rewards(rew[bb2], bb, bb2, method, scale, disc, potentials)
        if config.use_eventual_discounting:
            discounts = disc[bb2]
        else:
            discounts = np.full(batch, gamma)
        sid_batch = bb if ldba_keyed else cb * n_b + bb
        sid2_batch = bb2 if ldba_keyed else cb2 * n_b + bb2
        if learner == "qlearning":
            bootstrap = q[sid2_batch].max(axis=1)
        else:
            explore = sarsa_rng.random(batch) < epsilon
            chosen = np.empty(batch, dtype=np.int64)
            for i in range(batch):
                if explore[i]:
                    chosen[i] = int(sarsa_rng.integers(tables.action_counts[bb2[i]]))
                else:
                    chosen[i] = _tied_argmax(q[sid2_batch[i]], sarsa_rng)
            bootstrap = q[sid2_batch, chosen]
        targets = rewards + discounts * bootstrap
        flat = q.ravel()
        slots = (sid_batch * max_actions + ab).tolist()
        if lr == 1.0:
            for slot, target in zip(slots, targets.tolist()):
                flat[slot] = target
        else:
            for slot, target in zip(slots, targets.tolist()):
                flat[slot] += lr * (target - flat[slot])

    if step_in_episode == episode_length:
        episodes.append(
            EpisodeRecord(
                end_step=config.total_steps,
                accept_visits=ep_visits,
                violated=ep_violated,
                satisfied=ep_visits > 0,
            )
        )
    record_eval(config.total_steps)

    posterior = None
    if potentials.prior is not None:
        full_n = potentials.model.state_count
        embedded = np.zeros((full_n, full_n), dtype=np.int64)
        embedded[:n_b, :n_b] = counts
        posterior = update_posterior(potentials.prior, embedded)

    return RunResult(
        config=config,
        seed=seed,
        metrics=tuple(metrics),
        episodes=tuple(episodes),
        posterior=posterior,
        duration_seconds=time.monotonic() - started,
    )
