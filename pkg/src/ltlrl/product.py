"""The synchronized product of a gridworld task and its automaton.

Transitions carry a state-dependent reward and discount: entering an
accepting automaton state yields reward 1 and discount gamma, every
other state yields reward 0 and discount 1. Episode returns are formed
by weighting each reward with the running product of prior discounts,
so a trajectory visiting accepting states N times is worth
sum(gamma**i for i in range(N)) regardless of when the visits happen.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automata import step_ldba
from .environments import EnvState, TaskBundle
from .ltl import Letter

DEFAULT_GAMMA = 0.99


class InvalidEpsilon(ValueError):
    """An epsilon action was taken where the automaton offers no such edge."""


class NondeterministicStep(RuntimeError):
    """A letter-driven step had several successors; the learner needs one."""


@dataclass(frozen=True)
class EnvAction:
    action: int


@dataclass(frozen=True)
class EpsilonAction:
    target: int


ProductAction = EnvAction | EpsilonAction


@dataclass(frozen=True)
class ProductState:
    env: EnvState
    ldba_state: int

    @property
    def cell(self):
        return self.env.cell


@dataclass(frozen=True)
class Transition:
    state: ProductState
    action: ProductAction
    next_state: ProductState
    reward: float
    discount: float


def state_reward_discount(task: TaskBundle, ldba_state: int, gamma: float) -> tuple[float, float]:
    """Reward and discount earned by occupying an automaton state."""
    if ldba_state in task.automaton.accepting:
        return 1.0, gamma
    return 0.0, 1.0


def available_actions(task: TaskBundle, state: ProductState) -> tuple[ProductAction, ...]:
    """Environment actions, then epsilon jumps offered at the current state."""
    moves: list[ProductAction] = [EnvAction(a) for a in range(5)]
    for source, target in task.automaton.epsilon:
        if source == state.ldba_state:
            moves.append(EpsilonAction(target))
    return tuple(moves)


def _unique_successor(task: TaskBundle, ldba_state: int, letter: Letter) -> int:
    successors = step_ldba(task.automaton, ldba_state, letter)
    if len(successors) != 1:
        raise NondeterministicStep(
            f"state {ldba_state} has {len(successors)} successors on {set(letter)}"
        )
    return next(iter(successors))


def reset_product(task: TaskBundle, rng) -> ProductState:
    """Reset the environment and feed the start cell's label to the automaton.

    Applying the initial label once means starting inside a labeled region
    (random-start experiments) is registered immediately.
    """
    env = task.reset_env(rng)
    ldba_state = _unique_successor(task, task.automaton.initial, task.label(env.cell))
    return ProductState(env, ldba_state)


def step_product(
    task: TaskBundle,
    state: ProductState,
    action: ProductAction,
    rng,
    gamma: float = DEFAULT_GAMMA,
) -> tuple[ProductState, float, float]:
    """Advance the product by one action; returns (next, reward, discount)."""
    if isinstance(action, EpsilonAction):
        pair = (state.ldba_state, action.target)
        if pair not in task.automaton.epsilon:
            raise InvalidEpsilon(f"no epsilon edge {pair[0]} -> {pair[1]}")
        nxt = ProductState(state.env, action.target)
    else:
        env = task.step_env(state.env, action.action, rng)
        ldba_state = _unique_successor(task, state.ldba_state, task.label(env.cell))
        nxt = ProductState(env, ldba_state)
    reward, discount = state_reward_discount(task, nxt.ldba_state, gamma)
    return nxt, reward, discount


@dataclass(frozen=True)
class EpisodeAccumulator:
    """Running eventually-discounted return bookkeeping for one episode."""

    gamma: float
    running_gamma: float = 1.0
    accept_visits: int = 0
    step_index: int = 0
    total: float = 0.0

    @classmethod
    def fresh(cls, gamma: float = DEFAULT_GAMMA) -> "EpisodeAccumulator":
        return cls(gamma=gamma)


def accumulate(
    acc: EpisodeAccumulator, discount: float, reward: float
) -> tuple[EpisodeAccumulator, float]:
    """Credit one occupied state; the reward is weighted by the prior product.

    Call once for the reset state and once per step thereafter. The
    contribution uses the running product before the update, so the i-th
    accepting visit is worth gamma**i.
    """
    contribution = acc.running_gamma * reward
    updated = EpisodeAccumulator(
        gamma=acc.gamma,
        running_gamma=acc.running_gamma * discount,
        accept_visits=acc.accept_visits + (1 if reward > 0.0 else 0),
        step_index=acc.step_index + 1,
        total=acc.total + contribution,
    )
    return updated, contribution
