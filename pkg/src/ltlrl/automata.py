"""Limit-deterministic Buchi automata: loading, validation, and semantics.

An automaton accepts an infinite word when some run over it visits an
accepting state infinitely often. Nondeterminism is restricted to epsilon
moves, which consume no input; the deterministic component is closed under
letter transitions and contains every accepting state.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ltl import (
    And,
    Atom,
    FalseBool,
    Formula,
    LassoWord,
    Letter,
    Not,
    Or,
    TrueBool,
    evaluate_lasso,
    make_word,
    parse,
)


class FormatError(ValueError):
    """Malformed automaton document."""


class NotLimitDeterministic(ValueError):
    """Deterministic-component or epsilon-placement invariant violated."""


class NonTotal(ValueError):
    """Some (state, letter) has no matching guard in a total automaton."""


class NoMatchingGuard(RuntimeError):
    """Stepping a partial automaton on a letter no guard matches."""


@dataclass(frozen=True)
class Edge:
    source: int
    guard: Formula
    guard_text: str
    targets: tuple[int, ...]


def guard_satisfied(guard: Formula, letter: Letter) -> bool:
    """Evaluate a propositional guard against a set of true atoms."""
    if isinstance(guard, TrueBool):
        return True
    if isinstance(guard, FalseBool):
        return False
    if isinstance(guard, Atom):
        return guard.name in letter
    if isinstance(guard, Not):
        return not guard_satisfied(guard.operand, letter)
    if isinstance(guard, And):
        return guard_satisfied(guard.left, letter) and guard_satisfied(guard.right, letter)
    if isinstance(guard, Or):
        return guard_satisfied(guard.left, letter) or guard_satisfied(guard.right, letter)
    raise FormatError(f"guard is not propositional: {guard!r}")


def _is_propositional(formula: Formula) -> bool:
    if isinstance(formula, (TrueBool, FalseBool, Atom)):
        return True
    if isinstance(formula, Not):
        return _is_propositional(formula.operand)
    if isinstance(formula, (And, Or)):
        return _is_propositional(formula.left) and _is_propositional(formula.right)
    return False


@dataclass(frozen=True)
class Ldba:
    atoms: tuple[str, ...]
    state_count: int
    initial: int
    accepting: frozenset[int]
    deterministic: frozenset[int]
    edges: tuple[Edge, ...]
    epsilon: tuple[tuple[int, int], ...]
    partial: bool = False
    name: str = ""
    edges_from: tuple[tuple[Edge, ...], ...] = field(init=False, repr=False, compare=False)
    epsilon_from: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_state = [[] for _ in range(self.state_count)]
        for edge in self.edges:
            by_state[edge.source].append(edge)
        eps_by_state = [[] for _ in range(self.state_count)]
        for source, target in self.epsilon:
            eps_by_state[source].append(target)
        object.__setattr__(self, "edges_from", tuple(tuple(e) for e in by_state))
        object.__setattr__(
            self, "epsilon_from", tuple(tuple(sorted(t)) for t in eps_by_state)
        )

    def letters(self):
        """All 2^|atoms| letters, in subset order."""
        out = []
        for bits in itertools.product((False, True), repeat=len(self.atoms)):
            out.append(frozenset(a for a, b in zip(self.atoms, bits) if b))
        return out


def step_ldba(ldba: Ldba, state: int, letter: Letter) -> frozenset[int]:
    """Letter successors of a state (epsilon moves excluded)."""
    targets: set[int] = set()
    for edge in ldba.edges_from[state]:
        if guard_satisfied(edge.guard, letter):
            targets.update(edge.targets)
    if not targets:
        raise NoMatchingGuard(f"state {state} has no guard matching {set(letter)}")
    return frozenset(targets)


def validate_ldba(ldba: Ldba) -> None:
    """Check limit determinism, epsilon placement, and (unless partial) totality."""
    n = ldba.state_count
    ids = range(n)
    if ldba.initial not in ids:
        raise FormatError(f"initial state {ldba.initial} out of range")
    for label, group in (("accepting", ldba.accepting), ("deterministic", ldba.deterministic)):
        for state in group:
            if state not in ids:
                raise FormatError(f"{label} state {state} out of range")
    for edge in ldba.edges:
        if edge.source not in ids or any(t not in ids for t in edge.targets):
            raise FormatError(f"edge {edge.source} -> {edge.targets} out of range")
        if not edge.targets:
            raise FormatError(f"edge from {edge.source} has no targets")
    for source, target in ldba.epsilon:
        if source not in ids or target not in ids:
            raise FormatError(f"epsilon edge {source} -> {target} out of range")

    if not ldba.accepting <= ldba.deterministic:
        raise NotLimitDeterministic("accepting states must lie in the deterministic component")
    for source, target in ldba.epsilon:
        if source in ldba.deterministic and target not in ldba.deterministic:
            raise NotLimitDeterministic(
                f"epsilon edge {source} -> {target} originates in the deterministic "
                "component without targeting it"
            )
    letters = ldba.letters()
    for state in ids:
        for letter in letters:
            matches = [e for e in ldba.edges_from[state] if guard_satisfied(e.guard, letter)]
            if state in ldba.deterministic:
                if len(matches) > 1:
                    raise NotLimitDeterministic(
                        f"state {state} has {len(matches)} guards matching {set(letter)}"
                    )
                if matches and (
                    len(matches[0].targets) != 1
                    or matches[0].targets[0] not in ldba.deterministic
                ):
                    raise NotLimitDeterministic(
                        f"state {state} on {set(letter)} must move to exactly one "
                        "deterministic state"
                    )
            if not matches and not ldba.partial:
                raise NonTotal(f"state {state} has no guard matching {set(letter)}")


_SCHEMA = {
    "atoms": list,
    "states": int,
    "initial": int,
    "accepting": list,
    "deterministic": list,
    "edges": list,
    "epsilon": list,
}


def _require(cond: bool, message: str):
    if not cond:
        raise FormatError(message)


def load_automaton(path: str | Path) -> Ldba:
    """Load and validate an automaton document.

    Required fields: atoms, states, initial, accepting, deterministic,
    edges ({from, guard, to}), epsilon ({from, to}). Optional: name, partial.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise FormatError(f"{path}: not valid JSON: {err}") from err
    _require(isinstance(doc, dict), f"{path}: document must be an object")
    for key, kind in _SCHEMA.items():
        _require(key in doc, f"{path}: missing field {key!r}")
        _require(
            isinstance(doc[key], kind) and not isinstance(doc[key], bool),
            f"{path}: field {key!r} must be {kind.__name__}",
        )
    extra = set(doc) - set(_SCHEMA) - {"name", "partial"}
    _require(not extra, f"{path}: unknown fields {sorted(extra)}")

    atoms = doc["atoms"]
    _require(
        all(isinstance(a, str) for a in atoms) and len(set(atoms)) == len(atoms),
        f"{path}: atoms must be distinct strings",
    )
    edges = []
    for i, item in enumerate(doc["edges"]):
        where = f"{path}: edges[{i}]"
        _require(isinstance(item, dict), f"{where} must be an object")
        _require(
            set(item) == {"from", "guard", "to"},
            f"{where} must have exactly fields from/guard/to",
        )
        _require(isinstance(item["from"], int), f"{where}.from must be an int")
        _require(isinstance(item["guard"], str), f"{where}.guard must be a string")
        _require(
            isinstance(item["to"], list) and all(isinstance(t, int) for t in item["to"]),
            f"{where}.to must be a list of ints",
        )
        try:
            guard = parse(item["guard"], atoms)
        except ValueError as err:
            raise FormatError(f"{where}.guard: {err}") from err
        _require(_is_propositional(guard), f"{where}.guard must be propositional")
        edges.append(Edge(item["from"], guard, item["guard"], tuple(item["to"])))
    epsilon = []
    for i, item in enumerate(doc["epsilon"]):
        where = f"{path}: epsilon[{i}]"
        _require(
            isinstance(item, dict) and set(item) == {"from", "to"},
            f"{where} must be an object with fields from/to",
        )
        _require(
            isinstance(item["from"], int) and isinstance(item["to"], int),
            f"{where} fields must be ints",
        )
        epsilon.append((item["from"], item["to"]))

    ldba = Ldba(
        atoms=tuple(atoms),
        state_count=doc["states"],
        initial=doc["initial"],
        accepting=frozenset(doc["accepting"]),
        deterministic=frozenset(doc["deterministic"]),
        edges=tuple(edges),
        epsilon=tuple(epsilon),
        partial=bool(doc.get("partial", False)),
        name=str(doc.get("name", path.stem)),
    )
    validate_ldba(ldba)
    return ldba


def find_sinks(ldba: Ldba) -> frozenset[int]:
    """States all of whose guard and epsilon edges self-target."""
    sinks = []
    for state in range(ldba.state_count):
        guard_ok = all(set(e.targets) == {state} for e in ldba.edges_from[state])
        eps_ok = all(t == state for t in ldba.epsilon_from[state])
        if guard_ok and eps_ok:
            sinks.append(state)
    return frozenset(sinks)


def adjacency_mask(ldba: Ldba) -> np.ndarray:
    """Boolean reachability-in-one-step matrix, letter and epsilon moves alike.

    Semantic, not syntactic: a guard no letter satisfies contributes nothing.
    """
    mask = np.zeros((ldba.state_count, ldba.state_count), dtype=bool)
    letters = ldba.letters()
    for state in range(ldba.state_count):
        for letter in letters:
            for edge in ldba.edges_from[state]:
                if guard_satisfied(edge.guard, letter):
                    for target in edge.targets:
                        mask[state, target] = True
        for target in ldba.epsilon_from[state]:
            mask[state, target] = True
    return mask


def accepts_lasso(ldba: Ldba, word: LassoWord) -> bool:
    """Does some run over the word visit an accepting state infinitely often?

    Search runs over nodes (position class, state). A run must consume the
    whole word, so an accepting node must sit on a reachable cycle that
    contains at least one letter-consuming edge.
    """
    n_pos = word.positions

    def consuming_moves(pos: int, state: int):
        try:
            succs = step_ldba(ldba, state, word.letter(pos))
        except NoMatchingGuard:
            return ()
        return tuple((word.successor(pos), s) for s in succs)

    # Forward reachability with epsilon closure.
    start = (0, ldba.initial)
    reachable = {start}
    frontier = [start]
    while frontier:
        pos, state = frontier.pop()
        moves = list(consuming_moves(pos, state))
        moves.extend((pos, t) for t in ldba.epsilon_from[state])
        for node in moves:
            if node not in reachable:
                reachable.add(node)
                frontier.append(node)

    accepting_nodes = [(p, s) for (p, s) in reachable if s in ldba.accepting]
    for anchor in accepting_nodes:
        # Return to the anchor having consumed at least one letter.
        seen = {(anchor, False)}
        frontier = [(anchor, False)]
        while frontier:
            (pos, state), consumed = frontier.pop()
            for node in consuming_moves(pos, state):
                if node == anchor:
                    return True
                key = (node, True)
                if key not in seen:
                    seen.add(key)
                    frontier.append(key)
            for target in ldba.epsilon_from[state]:
                node = (pos, target)
                if node == anchor and consumed:
                    return True
                key = (node, consumed)
                if key not in seen:
                    seen.add(key)
                    frontier.append(key)
    return False


@dataclass
class CrossValidationReport:
    samples: int
    disagreements: int
    witnesses: list[tuple[LassoWord, bool, bool]]

    @property
    def ok(self) -> bool:
        return self.disagreements == 0


def cross_validate(
    ldba: Ldba,
    formula: Formula,
    samples: int,
    rng: np.random.Generator,
    max_prefix: int = 8,
    max_cycle: int = 6,
    max_witnesses: int = 10,
) -> CrossValidationReport:
    """Compare automaton acceptance with LTL satisfaction on random lassos."""
    atoms = ldba.atoms
    disagreements = 0
    witnesses: list[tuple[LassoWord, bool, bool]] = []
    for _ in range(samples):
        prefix_len = int(rng.integers(0, max_prefix + 1))
        cycle_len = int(rng.integers(1, max_cycle + 1))
        draws = rng.random((prefix_len + cycle_len, len(atoms))) < 0.5
        letters = [frozenset(a for a, on in zip(atoms, row) if on) for row in draws]
        word = make_word(letters[:prefix_len], letters[prefix_len:])
        by_automaton = accepts_lasso(ldba, word)
        by_formula = evaluate_lasso(formula, word)
        if by_automaton != by_formula:
            disagreements += 1
            if len(witnesses) < max_witnesses:
                witnesses.append((word, by_automaton, by_formula))
    return CrossValidationReport(samples, disagreements, witnesses)
