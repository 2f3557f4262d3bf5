"""Directed exploration from the automaton: kernel posterior and potentials.

The automaton induces a small Markov reward process over its own states.
We keep a Dirichlet posterior over that process's transition kernel,
solve each sampled kernel for its eventually-discounted values, and turn
the averaged values into a potential-based intrinsic reward.

Value solving is decomposed by reachability classes of the sampled
kernel's support graph rather than inverting the full system:

* states that cannot reach an accepting state have value exactly 0;
* states that cannot reach any of those doomed states must revisit
  accepting states forever, so their value is exactly 1/(1-gamma);
* only the remaining fringe needs a linear solve, and its reduced
  system is nonsingular because every fringe state eventually leaves
  the fringe.

This keeps the solver exact where the answer is structurally forced
(uniform no-sink automata, absorbing failure states) instead of
relying on a nearly singular full-matrix inversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automata import Ldba, adjacency_mask, find_sinks


class SingularSystem(RuntimeError):
    """The reduced value system could not be solved."""


class CountOffMask(ValueError):
    """Observed transition counts include a structurally disallowed move."""


@dataclass(frozen=True, eq=False)
class MrpModel:
    """The automaton-level Markov reward process skeleton."""

    state_count: int
    mask: np.ndarray
    reward: np.ndarray
    discount: np.ndarray
    gamma: float
    virtual_sink_index: int | None = None


def build_mrp(ldba: Ldba, gamma: float, add_virtual_sink: bool = False) -> MrpModel:
    """Derive the reward process skeleton from the automaton structure.

    When requested, automata with no absorbing state are augmented with a
    virtual sink reachable from every state (reward 0, discount 1) so that
    failing to progress is distinguishable from guaranteed success.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    mask = adjacency_mask(ldba)
    n = ldba.state_count
    sink_index = None
    if add_virtual_sink and not find_sinks(ldba):
        sink_index = n
        n += 1
        grown = np.zeros((n, n), dtype=bool)
        grown[: n - 1, : n - 1] = mask
        grown[:, sink_index] = True
        grown[sink_index, : n - 1] = False
        mask = grown
    reward = np.zeros(n)
    discount = np.ones(n)
    for b in ldba.accepting:
        reward[b] = 1.0
        discount[b] = gamma
    return MrpModel(
        state_count=n,
        mask=mask,
        reward=reward,
        discount=discount,
        gamma=gamma,
        virtual_sink_index=sink_index,
    )


def init_prior(model: MrpModel, alpha: float) -> np.ndarray:
    """Spread concentration alpha evenly over each row's allowed successors."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    params = np.zeros((model.state_count, model.state_count))
    for i in range(model.state_count):
        allowed = model.mask[i]
        params[i, allowed] = alpha / int(allowed.sum())
    return params


def partially_informed_prior(model: MrpModel, alpha: float) -> np.ndarray:
    """Ablation prior that forgets connectivity except for sink rows."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    n = model.state_count
    params = np.full((n, n), alpha / n)
    for i in range(n):
        row = model.mask[i]
        if row.sum() == 1 and row[i]:
            params[i] = 0.0
            params[i, i] = alpha
    return params


def new_counts(model: MrpModel) -> np.ndarray:
    return np.zeros((model.state_count, model.state_count), dtype=np.int64)


def update_posterior(params: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Conjugate update: add observed transition counts to the parameters."""
    if params.shape != counts.shape:
        raise ValueError("parameter and count shapes differ")
    if np.any((counts > 0) & (params == 0.0)):
        raise CountOffMask("counts recorded on a disallowed transition")
    return params + counts


def sample_kernel(params: np.ndarray, rng) -> np.ndarray:
    """Draw one kernel: each row an independent Dirichlet sample."""
    n = params.shape[0]
    kernel = np.zeros_like(params)
    for i in range(n):
        idx = np.flatnonzero(params[i])
        if idx.size == 0:
            raise ValueError(f"row {i} has no allowed successors")
        if idx.size == 1:
            kernel[i, idx[0]] = 1.0
        else:
            kernel[i, idx] = rng.dirichlet(params[i, idx])
    return kernel


def posterior_mean_kernel(params: np.ndarray) -> np.ndarray:
    """The posterior-mean kernel: cheaper than sampling but biased, since
    values are nonlinear in the kernel."""
    return params / params.sum(axis=1, keepdims=True)


def _backward_reachable(support: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """States with a support path into the target set (targets included)."""
    reach = targets.copy()
    while True:
        grown = reach | (support[:, reach].any(axis=1) if reach.any() else reach)
        if (grown == reach).all():
            return reach
        reach = grown


def solve_values(model: MrpModel, kernel: np.ndarray) -> np.ndarray:
    """Exact eventually-discounted values of a kernel over the skeleton."""
    support = kernel > 0.0
    accepting = model.reward > 0.0
    can_accept = _backward_reachable(support, accepting)
    doomed = ~can_accept
    in_danger = _backward_reachable(support, doomed)
    safe = can_accept & ~in_danger
    fringe = can_accept & in_danger

    values = np.zeros(model.state_count)
    values[safe] = 1.0 / (1.0 - model.gamma)
    if fringe.any():
        idx = np.flatnonzero(fringe)
        scaled = model.discount[idx, None] * kernel[np.ix_(idx, idx)]
        system = np.eye(idx.size) - scaled
        inflow = kernel[np.ix_(idx, np.flatnonzero(safe))] @ values[safe]
        rhs = model.reward[idx] + model.discount[idx] * inflow
        try:
            values[idx] = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
    return values


def solve_values_iterative(
    model: MrpModel,
    kernel: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 128,
) -> np.ndarray:
    """Fixed-point fallback for V <- R + discount * (K V), by map squaring.

    Each squaring doubles the number of applied sweeps, so slowly mixing
    kernels (spectral radius near 1) still settle in a few dozen rounds
    where plain sweeps would need millions to push the true error, not
    just the per-sweep change, below tolerance. max_iter caps squarings.
    """
    matrix = model.discount[:, None] * kernel
    values = model.reward.copy()
    for _ in range(max_iter):
        grown = matrix @ values + values
        if np.max(np.abs(grown - values)) < tol:
            return grown
        values = grown
        matrix = matrix @ matrix
    raise SingularSystem(f"no fixed point within {max_iter} squarings")


def expected_values(model: MrpModel, params: np.ndarray, samples: int, rng) -> np.ndarray:
    """Average the value vector over kernels sampled from the posterior.

    samples=1 is Thompson sampling. The mean is over solved values, not
    over kernels, because values are nonlinear in the kernel.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    total = np.zeros(model.state_count)
    for _ in range(samples):
        kernel = sample_kernel(params, rng)
        try:
            total += solve_values(model, kernel)
        except SingularSystem:
            total += solve_values_iterative(model, kernel)
    return total / samples


def intrinsic_reward(values: np.ndarray, model: MrpModel, b: int, b_next: int) -> float:
    """Potential-shaped bonus for the automaton moving from b to b_next."""
    return model.discount[b_next] * values[b_next] - values[b]


def empirical_kernel(counts: np.ndarray, model: MrpModel) -> np.ndarray:
    """Ablation kernel: row-normalized counts; unvisited rows self-loop."""
    kernel = np.zeros((model.state_count, model.state_count))
    for i in range(model.state_count):
        row_total = counts[i].sum()
        if row_total > 0:
            kernel[i] = counts[i] / row_total
        else:
            kernel[i, i] = 1.0
    return kernel


def vi_kernel(
    model: MrpModel,
    tol: float = 1e-12,
    properize: float = 1e-9,
    max_iter: int = 1_000_000,
) -> np.ndarray:
    """Ablation kernel: deterministic successor choice by value iteration.

    Each allowed successor is an action. Undiscounted non-accepting
    states make stalling and progressing exactly value-tied at the
    fixed point, so all discounts are damped by (1 - properize): every
    extra step then costs something, and the greedy policy in the
    damped problem is the vanishing-discount limit policy, which takes
    the shortest route between accepting visits. Remaining exact ties
    break to the lowest successor index.
    """
    n = model.state_count
    damped = model.discount * (1.0 - properize)
    values = np.zeros(n)
    for _ in range(max_iter):
        best = np.array([values[model.mask[i]].max() for i in range(n)])
        updated = model.reward + damped * best
        if np.max(np.abs(updated - values)) < tol:
            values = updated
            break
        values = updated
    else:
        raise SingularSystem(f"value iteration did not settle in {max_iter} sweeps")
    kernel = np.zeros((n, n))
    for i in range(n):
        idx = np.flatnonzero(model.mask[i])
        kernel[i, idx[int(np.argmax(values[idx]))]] = 1.0
    return kernel
