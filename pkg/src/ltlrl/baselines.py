"""Comparison methods: count-based potentials, counterfactual replay
relabeling, reward shifting, and the automaton-only state abstraction.
"""

from __future__ import annotations

import math

from .automata import Ldba, NoMatchingGuard, step_ldba
from .ltl import Letter
from .product import EpsilonAction, ProductAction, ProductState
from .shaping import MrpModel


def count_potential(visits, b: int) -> float:
    """Inverse-square-root visitation potential; unseen states act as new."""
    return 1.0 / math.sqrt(max(int(visits[b]), 1))


def count_potential_reward(visits, model: MrpModel, b: int, b_next: int) -> float:
    """Potential-shaped novelty bonus over automaton states."""
    return model.discount[b_next] * count_potential(visits, b_next) - count_potential(
        visits, b
    )


def lcer_relabel(
    ldba: Ldba,
    b: int,
    b_next: int,
    action: ProductAction,
    letter_next: Letter,
    rng,
    max_tries: int = 10,
) -> tuple[int, int]:
    """Counterfactually replay a stored transition from a random automaton state.

    The start state is resampled uniformly; the successor is recomputed so
    the relabeled transition still obeys the product kernel. Draws whose
    action is unavailable (epsilon edge absent) or ambiguous are rejected;
    after max_tries the original pair is kept.
    """
    n = ldba.state_count
    for _ in range(max_tries):
        b_hat = int(rng.integers(n))
        if isinstance(action, EpsilonAction):
            if (b_hat, action.target) in ldba.epsilon:
                return b_hat, action.target
            continue
        try:
            successors = step_ldba(ldba, b_hat, letter_next)
        except NoMatchingGuard:
            continue
        if len(successors) == 1:
            return b_hat, next(iter(successors))
    return b, b_next


def reward_shift(reward: float) -> float:
    """Map the {0, 1} transition reward to {-1, 1} for training targets."""
    if reward not in (0.0, 1.0):
        raise ValueError(f"reward must be 0 or 1, got {reward}")
    return 2.0 * reward - 1.0


def ldba_only_key(state: ProductState) -> int:
    """Abstraction that drops the environment cell entirely."""
    return state.ldba_state
