"""Tests for gridworld dynamics, labeling, and the task catalog."""

import json

import numpy as np
import pytest

from ltlrl.automata import cross_validate
from ltlrl.environments import (
    ACTION_DELTAS,
    ACTION_NAMES,
    EAST,
    NORTH,
    SOUTH,
    STAY,
    WEST,
    EnvState,
    GridWorld,
    Labeling,
    LayoutError,
    UnknownTask,
    catalog,
    load_task,
    make_task,
    random_start_wrapper,
    sticky_wrapper,
)

ALL_TASKS = [
    ("reach-avoid", "easy"),
    ("reach-avoid", "medium"),
    ("reach-avoid", "hard"),
    ("umaze", "easy"),
    ("umaze", "medium"),
    ("umaze", "hard"),
    ("sequential", "easy"),
    ("sequential", "medium"),
    ("sequential", "hard"),
    ("sequential-maze", "easy"),
    ("sequential-maze", "medium"),
    ("sequential-maze", "hard"),
    ("circular", "easy"),
    ("circular", "medium"),
    ("circular", "hard"),
    ("fga-jump", "easy"),
    ("fga-jump", "medium"),
    ("fga-jump", "hard"),
]


class TestGridWorld:
    def test_unit_moves(self):
        grid = GridWorld(3, 3, frozenset())
        assert grid.move((0, 0), NORTH) == (0, 1)
        assert grid.move((0, 1), SOUTH) == (0, 0)
        assert grid.move((0, 0), EAST) == (1, 0)
        assert grid.move((1, 0), WEST) == (0, 0)
        assert grid.move((1, 1), STAY) == (1, 1)

    def test_boundary_moves_unchanged(self):
        grid = GridWorld(3, 3, frozenset())
        assert grid.move((0, 2), NORTH) == (0, 2)
        assert grid.move((0, 0), SOUTH) == (0, 0)
        assert grid.move((2, 0), EAST) == (2, 0)
        assert grid.move((0, 0), WEST) == (0, 0)

    def test_blocked_moves_unchanged(self):
        grid = GridWorld(3, 3, frozenset({(1, 1)}))
        assert grid.move((1, 0), NORTH) == (1, 0)
        assert grid.move((0, 1), EAST) == (0, 1)
        assert (1, 1) not in grid.cells()
        assert len(grid.cells()) == 8

    def test_action_tables_consistent(self):
        assert len(ACTION_NAMES) == len(ACTION_DELTAS) == 5
        assert ACTION_DELTAS[STAY] == (0, 0)


class TestLabeling:
    def test_ordered_regions(self):
        labeling = Labeling((("a", ((0, 0, 1, 1),)), ("b", ((1, 1, 2, 2),))))
        assert labeling.letter((0, 0)) == frozenset({"a"})
        assert labeling.letter((1, 1)) == frozenset({"a", "b"})
        assert labeling.letter((2, 0)) == frozenset()


class TestCatalog:
    def test_catalog_contents(self):
        assert catalog() == sorted(ALL_TASKS)

    def test_unknown_task(self):
        with pytest.raises(UnknownTask):
            make_task("reach-avoid", "extreme")
        with pytest.raises(UnknownTask):
            make_task("cartpole", "easy")

    @pytest.mark.parametrize("name,difficulty", ALL_TASKS)
    def test_all_tasks_load(self, name, difficulty):
        task = make_task(name, difficulty)
        assert task.name == name
        assert task.difficulty == difficulty
        assert task.episode_length > 0
        assert task.grid.passable(task.start)
        if name != "circular":
            # Circular starts inside zone a; everything else starts on
            # unlabeled floor.
            assert task.label(task.start) == frozenset()

    @pytest.mark.parametrize("name,difficulty", ALL_TASKS)
    def test_formula_matches_automaton(self, name, difficulty):
        task = make_task(name, difficulty)
        rng = np.random.default_rng(7)
        report = cross_validate(task.automaton, task.formula, samples=200, rng=rng)
        assert report.ok, report.witnesses


class TestReachAvoid:
    def test_hard_layout(self):
        task = make_task("reach-avoid", "hard")
        assert task.formula_text == "F a & G !b"
        assert task.episode_length == 21
        assert task.start == (0, 2)
        assert task.label((11, 2)) == frozenset({"a"})
        assert task.label((10, 2)) == frozenset()
        assert task.label((0, 0)) == frozenset({"b"})
        assert task.label((0, 4)) == frozenset({"b"})

    @pytest.mark.parametrize("difficulty,distance", [("easy", 7), ("medium", 9), ("hard", 11)])
    def test_corridor_walk_reaches_goal(self, difficulty, distance):
        task = make_task("reach-avoid", difficulty)
        cell = task.start
        for step in range(1, distance + 1):
            cell = task.grid.move(cell, EAST)
            letter = task.label(cell)
            assert "b" not in letter
            assert ("a" in letter) == (step == distance)
        assert task.episode_length == distance + 10


class TestUmaze:
    @pytest.mark.parametrize("difficulty,path_len", [("easy", 9), ("medium", 11), ("hard", 13)])
    def test_safe_u_path(self, difficulty, path_len):
        task = make_task("umaze", difficulty)
        w, h = task.grid.width, task.grid.height
        cell = task.start
        plan = [SOUTH] * (h - 1) + [EAST] * (w - 1) + [NORTH] * (h - 1)
        assert len(plan) == path_len
        for action in plan[:-1]:
            cell = task.grid.move(cell, action)
            assert task.label(cell) == frozenset()
        cell = task.grid.move(cell, plan[-1])
        assert task.label(cell) == frozenset({"a"})
        assert task.episode_length == path_len + 10

    def test_direct_path_is_unsafe(self):
        task = make_task("umaze", "medium")
        cell = task.grid.move(task.start, EAST)
        assert task.label(cell) == frozenset({"b"})


class TestSequential:
    def test_medium_formula_and_zones(self):
        task = make_task("sequential", "medium")
        assert task.formula_text == "F (a & X F (b & X F (c & X F d)))"
        assert task.episode_length == 70
        assert task.label((10, 3)) == frozenset({"a"})
        assert task.label((17, 3)) == frozenset({"b"})
        assert task.label((24, 3)) == frozenset({"c"})
        assert task.label((31, 3)) == frozenset({"d"})
        assert task.label(task.start) == frozenset()

    def test_zone_count_scales(self):
        for difficulty, zones in (("easy", 3), ("medium", 4), ("hard", 5)):
            task = make_task("sequential", difficulty)
            assert len(task.labeling.regions) == zones
            assert task.grid.width == 7 * (zones + 1)


class TestCircular:
    def test_obstacle_impassable(self):
        task = make_task("circular", "easy")
        assert task.grid.move((14, 10), WEST) == (14, 10)
        for x in range(8, 14):
            for y in range(8, 14):
                assert not task.grid.passable((x, y))

    def test_ring_labeled_e(self):
        task = make_task("circular", "hard")
        for cell in ((7, 10), (10, 7)):
            assert task.label(cell) == frozenset({"e"})
            assert task.grid.passable(cell)

    def test_start_at_zone_a_inner_boundary(self):
        task = make_task("circular", "easy")
        assert task.start == (14, 10)
        assert task.label(task.start) == frozenset({"a"})

    def test_corners_walkable_and_unlabeled(self):
        task = make_task("circular", "hard")
        for corner in ((0, 0), (0, 20), (20, 0), (20, 20)):
            assert task.grid.passable(corner)
            assert task.label(corner) == frozenset()

    def test_easy_only_references_two_zones(self):
        task = make_task("circular", "easy")
        atoms = {atom for atom, _ in task.labeling.regions}
        assert atoms == {"a", "b", "e"}


class TestSequentialMaze:
    def test_zone_chain_is_walkable(self):
        task = make_task("sequential-maze", "easy")
        # Follow the intended weave through the row gaps and check each
        # zone letter appears in order.
        plan = (
            [EAST] * 4
            + [SOUTH] * 2
            + [WEST] * 2 + [SOUTH] * 2
            + [EAST] * 4
            + [WEST] * 2 + [SOUTH] * 2
            + [EAST] * 4
        )
        expected = "abcdef"
        seen = []
        cell = task.start
        for action in plan:
            nxt = task.grid.move(cell, action)
            assert nxt != cell, f"bumped a wall at {cell} going {ACTION_NAMES[action]}"
            cell = nxt
            letter = task.label(cell)
            if letter:
                (atom,) = letter
                if not seen or seen[-1] != atom:
                    seen.append(atom)
        assert "".join(seen) == expected

    def test_scaled_grids(self):
        for difficulty, scale in (("easy", 1), ("medium", 2), ("hard", 3)):
            task = make_task("sequential-maze", difficulty)
            assert task.grid.width == 9 * scale
            assert task.grid.height == 7 * scale
            assert task.episode_length == 70 * scale
            assert task.grid.passable(task.start)


class TestFgaJump:
    def test_goal_region_only(self):
        task = make_task("fga-jump", "medium")
        assert task.formula_text == "FGa"
        assert task.episode_length == 19
        assert task.label((9, 2)) == frozenset({"a"})
        assert task.label((8, 2)) == frozenset()
        assert task.label((0, 0)) == frozenset()
        assert task.automaton.epsilon


class TestWrappers:
    def test_sticky_zero_identical(self):
        base = make_task("reach-avoid", "easy")
        wrapped = sticky_wrapper(base, 0.0)
        rng_a = np.random.default_rng(3)
        rng_b = np.random.default_rng(3)
        actions = np.random.default_rng(9).integers(0, 5, 60)
        state_a = base.reset_env(rng_a)
        state_b = wrapped.reset_env(rng_b)
        for action in actions:
            state_a = base.step_env(state_a, int(action), rng_a)
            state_b = wrapped.step_env(state_b, int(action), rng_b)
            assert state_a == state_b

    def test_sticky_one_repeats_first_action(self):
        task = sticky_wrapper(make_task("sequential", "easy"), 1.0)
        rng = np.random.default_rng(0)
        state = task.reset_env(rng)
        state = task.step_env(state, NORTH, rng)
        assert state.last_action == NORTH
        for action in (SOUTH, EAST, WEST, STAY, SOUTH):
            state = task.step_env(state, action, rng)
            assert state.last_action == NORTH

    def test_sticky_repeat_fraction(self):
        task = sticky_wrapper(make_task("sequential", "easy"), 0.1)
        rng = np.random.default_rng(11)
        state = task.reset_env(rng)
        state = task.step_env(state, 0, rng)
        repeats = 0
        trials = 100_000
        for _ in range(trials):
            # Choose an action guaranteed to differ from the last executed
            # one, so any repeat is an observable sticky event.
            chosen = (state.last_action + 1) % 5
            state = task.step_env(state, chosen, rng)
            repeats += state.last_action != chosen
        assert abs(repeats / trials - 0.1) < 0.01

    def test_sticky_bounds(self):
        task = make_task("reach-avoid", "easy")
        with pytest.raises(ValueError):
            sticky_wrapper(task, -0.1)
        with pytest.raises(ValueError):
            sticky_wrapper(task, 1.5)

    def test_random_start_single_cell(self):
        task = random_start_wrapper(make_task("reach-avoid", "easy"), (2, 2, 2, 2))
        rng = np.random.default_rng(1)
        for _ in range(5):
            assert task.reset_env(rng) == EnvState((2, 2))

    def test_random_start_uniform(self):
        task = random_start_wrapper(make_task("reach-avoid", "easy"), (0, 1, 1, 2))
        rng = np.random.default_rng(5)
        counts = {}
        resets = 10_000
        for _ in range(resets):
            cell = task.reset_env(rng).cell
            counts[cell] = counts.get(cell, 0) + 1
        assert set(counts) == {(0, 1), (0, 2), (1, 1), (1, 2)}
        for n in counts.values():
            assert abs(n / resets - 0.25) < 0.02

    def test_random_start_rejects_blocked(self):
        task = make_task("circular", "easy")
        with pytest.raises(LayoutError):
            random_start_wrapper(task, (8, 8, 9, 9))
        with pytest.raises(LayoutError):
            random_start_wrapper(task, (-1, 0, 0, 0))


class TestLoaderValidation:
    def _doc(self):
        return {
            "name": "toy",
            "difficulty": "easy",
            "width": 4,
            "height": 3,
            "blocked": [],
            "start": [0, 0],
            "regions": {"a": [[3, 0, 3, 2]], "b": [[1, 2, 2, 2]]},
            "formula": "F a & G !b",
            "automaton": "reach_avoid.json",
            "episode_length": 10,
        }

    def _write(self, tmp_path, doc):
        path = tmp_path / "task.json"
        path.write_text(json.dumps(doc))
        return path

    def test_valid_document(self, tmp_path):
        task = load_task(self._write(tmp_path, self._doc()))
        assert task.grid.width == 4
        assert task.label((3, 1)) == frozenset({"a"})

    def test_missing_field(self, tmp_path):
        doc = self._doc()
        del doc["start"]
        with pytest.raises(LayoutError):
            load_task(self._write(tmp_path, doc))

    def test_unknown_field(self, tmp_path):
        doc = self._doc()
        doc["colour"] = "red"
        with pytest.raises(LayoutError):
            load_task(self._write(tmp_path, doc))

    def test_blocked_start(self, tmp_path):
        doc = self._doc()
        doc["blocked"] = [[0, 0, 0, 0]]
        with pytest.raises(LayoutError):
            load_task(self._write(tmp_path, doc))

    def test_region_outside_grid(self, tmp_path):
        doc = self._doc()
        doc["regions"]["a"] = [[3, 0, 4, 2]]
        with pytest.raises(LayoutError):
            load_task(self._write(tmp_path, doc))

    def test_region_atom_not_in_alphabet(self, tmp_path):
        doc = self._doc()
        doc["regions"]["z"] = [[0, 1, 0, 1]]
        with pytest.raises(LayoutError):
            load_task(self._write(tmp_path, doc))

    def test_formula_over_wrong_alphabet(self, tmp_path):
        doc = self._doc()
        doc["formula"] = "F q"
        with pytest.raises(Exception):
            load_task(self._write(tmp_path, doc))

    def test_bad_episode_length(self, tmp_path):
        doc = self._doc()
        doc["episode_length"] = 0
        with pytest.raises(LayoutError):
            load_task(self._write(tmp_path, doc))
