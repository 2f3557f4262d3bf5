"""Tests for the synchronized product and the return accumulator."""

import numpy as np
import pytest

from ltlrl.automata import Edge, Ldba, load_automaton, validate_ldba
from ltlrl.datafiles import data_path
from ltlrl.environments import EnvState, GridWorld, Labeling, TaskBundle, random_start_wrapper
from ltlrl.ltl import TrueBool, parse
from ltlrl.product import (
    EnvAction,
    EpisodeAccumulator,
    EpsilonAction,
    InvalidEpsilon,
    NondeterministicStep,
    ProductState,
    accumulate,
    available_actions,
    reset_product,
    state_reward_discount,
    step_product,
)
from ltlrl.environments import EAST, NORTH, STAY, WEST, make_task

GAMMA = 0.99


def t0_task():
    """A 5x5 arena wired to the three-atom recurrence automaton."""
    automaton = load_automaton(data_path("automata", "t0.json"))
    text = "GF(a & XF c) & G !b"
    return TaskBundle(
        name="t0",
        difficulty="easy",
        grid=GridWorld(5, 5, frozenset()),
        labeling=Labeling(
            (
                ("a", ((0, 2, 0, 2),)),
                ("b", ((2, 4, 2, 4),)),
                ("c", ((4, 2, 4, 2),)),
            )
        ),
        start=(2, 0),
        formula_text=text,
        formula=parse(text, automaton.atoms),
        automaton_file="t0.json",
        automaton=automaton,
        episode_length=30,
    )


def nondet_task():
    """A task whose automaton has two letter successors at the initial state."""
    automaton = Ldba(
        atoms=(),
        state_count=2,
        initial=0,
        accepting=frozenset({1}),
        deterministic=frozenset({1}),
        edges=(
            Edge(0, TrueBool(), "true", (0,)),
            Edge(0, TrueBool(), "true", (1,)),
            Edge(1, TrueBool(), "true", (1,)),
        ),
        epsilon=(),
        name="nondet",
    )
    validate_ldba(automaton)
    return TaskBundle(
        name="nondet",
        difficulty="easy",
        grid=GridWorld(2, 2, frozenset()),
        labeling=Labeling(()),
        start=(0, 0),
        formula_text="true",
        formula=TrueBool(),
        automaton_file="",
        automaton=automaton,
        episode_length=5,
    )


class TestReset:
    def test_plain_start(self):
        task = make_task("reach-avoid", "hard")
        state = reset_product(task, np.random.default_rng(0))
        assert state.cell == (0, 2)
        assert state.ldba_state == 0

    def test_start_inside_avoid_region_hits_sink(self):
        task = random_start_wrapper(make_task("reach-avoid", "hard"), (3, 0, 3, 0))
        state = reset_product(task, np.random.default_rng(0))
        assert state.cell == (3, 0)
        assert state.ldba_state == 2

    def test_fga_jump_starts_nondeterministic(self):
        task = make_task("fga-jump", "easy")
        state = reset_product(task, np.random.default_rng(0))
        assert state.ldba_state == 0
        assert 0 not in task.automaton.deterministic

    def test_circular_start_registers_zone_a(self):
        task = make_task("circular", "easy")
        state = reset_product(task, np.random.default_rng(0))
        assert state.ldba_state == 1


class TestAvailableActions:
    def test_plain_states_offer_env_actions(self):
        task = make_task("reach-avoid", "easy")
        state = reset_product(task, np.random.default_rng(0))
        assert available_actions(task, state) == tuple(EnvAction(a) for a in range(5))

    def test_epsilon_jump_offered_only_at_source(self):
        task = make_task("fga-jump", "easy")
        state = reset_product(task, np.random.default_rng(0))
        actions = available_actions(task, state)
        assert actions[:5] == tuple(EnvAction(a) for a in range(5))
        assert actions[5:] == (EpsilonAction(1),)
        jumped, _, _ = step_product(task, state, EpsilonAction(1), np.random.default_rng(0))
        assert available_actions(task, jumped) == tuple(EnvAction(a) for a in range(5))


class TestStepProduct:
    def test_recurrence_path_rewards(self):
        task = t0_task()
        rng = np.random.default_rng(0)
        state = reset_product(task, rng)
        assert (state.cell, state.ldba_state) == ((2, 0), 0)
        for action, expected_b in ((WEST, 0), (WEST, 0), (NORTH, 0), (NORTH, 1)):
            state, reward, discount = step_product(task, state, EnvAction(action), rng, GAMMA)
            assert state.ldba_state == expected_b
            assert (reward, discount) == (0.0, 1.0)
        for action, expected_b in ((EAST, 1), (EAST, 1), (EAST, 1)):
            state, reward, discount = step_product(task, state, EnvAction(action), rng, GAMMA)
            assert state.ldba_state == expected_b
        state, reward, discount = step_product(task, state, EnvAction(EAST), rng, GAMMA)
        assert state.cell == (4, 2)
        assert state.ldba_state == 2
        assert (reward, discount) == (1.0, GAMMA)
        state, reward, discount = step_product(task, state, EnvAction(STAY), rng, GAMMA)
        assert state.ldba_state == 0
        assert (reward, discount) == (0.0, 1.0)

    def test_avoid_region_leads_to_sink(self):
        task = t0_task()
        rng = np.random.default_rng(0)
        state = ProductState(EnvState((2, 3)), 1)
        nxt, reward, discount = step_product(task, state, EnvAction(NORTH), rng, GAMMA)
        assert nxt.ldba_state == 3
        assert (reward, discount) == (0.0, 1.0)

    def test_epsilon_keeps_cell(self):
        task = make_task("fga-jump", "easy")
        rng = np.random.default_rng(2)
        state = reset_product(task, rng)
        for _ in range(6):
            state, _, _ = step_product(task, state, EnvAction(int(rng.integers(5))), rng)
        before = state.cell
        jumped, reward, discount = step_product(task, state, EpsilonAction(1), rng, GAMMA)
        assert jumped.cell == before
        assert jumped.ldba_state == 1
        assert (reward, discount) == (1.0, GAMMA)

    def test_premature_jump_dooms_on_next_step(self):
        task = make_task("fga-jump", "easy")
        rng = np.random.default_rng(0)
        state = reset_product(task, rng)
        state, _, _ = step_product(task, state, EpsilonAction(1), rng)
        state, reward, discount = step_product(task, state, EnvAction(STAY), rng, GAMMA)
        assert state.ldba_state == 2
        assert (reward, discount) == (0.0, 1.0)

    def test_invalid_epsilon(self):
        task = make_task("fga-jump", "easy")
        rng = np.random.default_rng(0)
        state = reset_product(task, rng)
        state, _, _ = step_product(task, state, EpsilonAction(1), rng)
        with pytest.raises(InvalidEpsilon):
            step_product(task, state, EpsilonAction(1), rng)

    def test_nondeterministic_step_detected(self):
        task = nondet_task()
        rng = np.random.default_rng(0)
        with pytest.raises(NondeterministicStep):
            reset_product(task, rng)


class TestAccumulator:
    def test_first_visits(self):
        acc = EpisodeAccumulator.fresh(GAMMA)
        acc, first = accumulate(acc, GAMMA, 1.0)
        assert first == 1.0
        acc, second = accumulate(acc, GAMMA, 1.0)
        assert second == GAMMA
        assert acc.accept_visits == 2
        assert acc.total == 1.0 + GAMMA

    def test_running_gamma_tracks_visit_count(self):
        rng = np.random.default_rng(4)
        acc = EpisodeAccumulator.fresh(GAMMA)
        expected = 1.0
        for _ in range(200):
            accepting = bool(rng.integers(2))
            reward, discount = (1.0, GAMMA) if accepting else (0.0, 1.0)
            prev = acc.running_gamma
            acc, _ = accumulate(acc, discount, reward)
            assert acc.running_gamma <= prev
            if accepting:
                expected *= GAMMA
            assert acc.running_gamma == expected
        assert acc.step_index == 200

    def test_projection_equality(self):
        # The return computed while stepping the full product must equal
        # the return recomputed from the automaton-state sequence alone.
        task = t0_task()
        for seed in range(20):
            rng = np.random.default_rng(seed)
            state = reset_product(task, rng)
            states = [state.ldba_state]
            acc = EpisodeAccumulator.fresh(GAMMA)
            reward, discount = state_reward_discount(task, state.ldba_state, GAMMA)
            acc, _ = accumulate(acc, discount, reward)
            for _ in range(task.episode_length):
                state, reward, discount = step_product(
                    task, state, EnvAction(int(rng.integers(5))), rng, GAMMA
                )
                states.append(state.ldba_state)
                acc, _ = accumulate(acc, discount, reward)
            projected = EpisodeAccumulator.fresh(GAMMA)
            for b in states:
                reward, discount = state_reward_discount(task, b, GAMMA)
                projected, _ = accumulate(projected, discount, reward)
            assert projected.total == acc.total
            assert projected.accept_visits == acc.accept_visits

    def test_reward_discount_pairs(self):
        task = t0_task()
        assert state_reward_discount(task, 2, GAMMA) == (1.0, GAMMA)
        for b in (0, 1, 3):
            assert state_reward_discount(task, b, GAMMA) == (0.0, 1.0)
