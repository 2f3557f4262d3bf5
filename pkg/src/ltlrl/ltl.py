"""LTL formulas, parsing, and semantics on ultimately periodic (lasso) words.

A lasso word is ``prefix . cycle^omega``; every formula of the supported
fragment has a decidable truth value on such words, which makes this module
the ground-truth oracle that automata are validated against.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable


class ParseError(ValueError):
    """Raised when formula text cannot be parsed."""


class UnknownAtom(ParseError):
    """Raised when a formula references an atom outside the alphabet."""


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class TrueBool(Formula):
    pass


@dataclass(frozen=True)
class FalseBool(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Finally(Formula):
    operand: Formula


@dataclass(frozen=True)
class Globally(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


Letter = frozenset[str]

# Words identifying operators; atoms may not use these names.
RESERVED = frozenset({"U", "X", "F", "G", "true", "false"})
_UNARY_LETTERS = frozenset("XFG")
_UNARY_NODE = {"X": Next, "F": Finally, "G": Globally}


@dataclass(frozen=True)
class LassoWord:
    """An infinite word ``prefix . cycle^omega`` over sets of atoms."""

    prefix: tuple[Letter, ...]
    cycle: tuple[Letter, ...]

    def __post_init__(self) -> None:
        if not self.cycle:
            raise ValueError("lasso cycle must be non-empty")

    @property
    def period_start(self) -> int:
        return len(self.prefix)

    @property
    def positions(self) -> int:
        """Number of distinct position classes (prefix + one cycle period)."""
        return len(self.prefix) + len(self.cycle)

    def normalize(self, i: int) -> int:
        """Map an absolute position to its class in [0, positions)."""
        if i < self.positions:
            return i
        return self.period_start + (i - self.period_start) % len(self.cycle)

    def successor(self, pos: int) -> int:
        """Successor of a normalized position, wrapping at the period end."""
        return pos + 1 if pos + 1 < self.positions else self.period_start

    def letter(self, i: int) -> Letter:
        i = self.normalize(i)
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[i - len(self.prefix)]


def make_word(prefix: Iterable[Iterable[str]], cycle: Iterable[Iterable[str]]) -> LassoWord:
    return LassoWord(
        tuple(frozenset(p) for p in prefix),
        tuple(frozenset(c) for c in cycle),
    )


_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[!&|()])|(?P<bad>\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    for m in _TOKEN.finditer(text):
        if m.group("bad"):
            raise ParseError(f"unexpected character {m.group('bad')!r} at index {m.start('bad')}")
        if m.group("ident"):
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
    return tokens


class _Parser:
    """Recursive descent over: Or < And < Until < unary < primary."""

    def __init__(self, text: str, alphabet: frozenset[str]):
        self.text = text
        self.alphabet = alphabet
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of formula: {self.text!r}")
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        formula = self.parse_or()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"trailing input at index {tok[2]}: {tok[1]!r}")
        return formula

    def parse_or(self) -> Formula:
        node = self.parse_and()
        while self._at_op("|"):
            self.advance()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Formula:
        node = self.parse_until()
        while self._at_op("&"):
            self.advance()
            node = And(node, self.parse_until())
        return node

    def parse_until(self) -> Formula:
        # Right-associative: a U b U c == a U (b U c).
        node = self.parse_unary()
        tok = self.peek()
        if tok is not None and tok[0] == "ident" and tok[1] == "U":
            self.advance()
            return Until(node, self.parse_until())
        return node

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of formula: {self.text!r}")
        kind, value, index = tok
        if kind == "op" and value == "!":
            self.advance()
            return Not(self.parse_unary())
        if kind == "ident" and value not in self.alphabet and value != "U":
            ops, remainder = self._split_unary_run(value, index)
            if ops is not None:
                self.advance()
                if remainder is None:
                    inner = self.parse_unary()
                else:
                    inner = Atom(remainder)
                for op in reversed(ops):
                    inner = _UNARY_NODE[op](inner)
                return inner
        return self.parse_primary()

    def _split_unary_run(self, ident: str, index: int):
        """Interpret an identifier like ``GF`` or ``XFc`` as unary operators.

        Returns (ops, trailing_atom_or_None), or (None, None) when the
        identifier is not a unary-operator run.
        """
        if ident in ("true", "false"):
            return None, None
        run = 0
        while run < len(ident) and ident[run] in _UNARY_LETTERS:
            run += 1
        if run == 0:
            return None, None
        rest = ident[run:]
        if not rest:
            return ident, None
        if rest in self.alphabet:
            return ident[:run], rest
        raise UnknownAtom(
            f"unknown atom {rest!r} in {ident!r} at index {index}; alphabet is "
            f"{sorted(self.alphabet)}"
        )

    def parse_primary(self) -> Formula:
        kind, value, index = self.advance()
        if kind == "op" and value == "(":
            node = self.parse_or()
            tok = self.peek()
            if tok is None or tok[1] != ")":
                raise ParseError(f"unclosed parenthesis opened at index {index}")
            self.advance()
            return node
        if kind == "ident":
            if value == "true":
                return TrueBool()
            if value == "false":
                return FalseBool()
            if value in self.alphabet:
                return Atom(value)
            raise UnknownAtom(
                f"unknown atom {value!r} at index {index}; alphabet is {sorted(self.alphabet)}"
            )
        raise ParseError(f"unexpected token {value!r} at index {index}")

    def _at_op(self, op: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "op" and tok[1] == op


def parse(text: str, alphabet: Iterable[str]) -> Formula:
    """Parse formula text over the given atom alphabet.

    Grammar (loosest to tightest): ``|``, ``&``, ``U`` (right-assoc), then
    the unary operators ``!``, ``X``, ``F``, ``G``. Juxtaposed unary runs
    such as ``GF a`` or ``XFc`` are accepted. Atom names collide with no
    reserved word (U, X, F, G, true, false).
    """
    atoms = frozenset(alphabet)
    bad = atoms & RESERVED
    if bad:
        raise ParseError(f"alphabet uses reserved names: {sorted(bad)}")
    return _Parser(text, atoms).parse()


def atoms_of(formula: Formula) -> frozenset[str]:
    if isinstance(formula, Atom):
        return frozenset({formula.name})
    if isinstance(formula, (Not, Next, Finally, Globally)):
        return atoms_of(formula.operand)
    if isinstance(formula, (And, Or, Until)):
        return atoms_of(formula.left) | atoms_of(formula.right)
    return frozenset()


_PREC = {Or: 1, And: 2, Until: 3, Not: 4, Next: 4, Finally: 4, Globally: 4}


def to_text(formula: Formula) -> str:
    """Render a formula in the concrete syntax accepted by parse()."""
    return _render(formula, 0)


def _render(formula: Formula, parent_prec: int) -> str:
    if isinstance(formula, TrueBool):
        return "true"
    if isinstance(formula, FalseBool):
        return "false"
    if isinstance(formula, Atom):
        return formula.name
    if isinstance(formula, Not):
        return f"!{_render(formula.operand, _PREC[Not])}"
    if isinstance(formula, (Next, Finally, Globally)):
        op = {Next: "X", Finally: "F", Globally: "G"}[type(formula)]
        return f"{op} {_render(formula.operand, _PREC[type(formula)])}"
    prec = _PREC[type(formula)]
    if isinstance(formula, Until):
        # Right-associative: parenthesize a left child that is itself an Until.
        text = f"{_render(formula.left, prec + 1)} U {_render(formula.right, prec)}"
    else:
        # Left-associative: a same-precedence right child keeps its parens.
        op = "&" if isinstance(formula, And) else "|"
        text = f"{_render(formula.left, prec)} {op} {_render(formula.right, prec + 1)}"
    return f"({text})" if prec < parent_prec else text


def _truth_vector(formula: Formula, word: LassoWord, cache: dict) -> list[bool]:
    """Truth value of the formula at every normalized position."""
    hit = cache.get(formula)
    if hit is not None:
        return hit
    n = word.positions
    succ = [word.successor(p) for p in range(n)]
    if isinstance(formula, TrueBool):
        vec = [True] * n
    elif isinstance(formula, FalseBool):
        vec = [False] * n
    elif isinstance(formula, Atom):
        vec = [formula.name in word.letter(p) for p in range(n)]
    elif isinstance(formula, Not):
        vec = [not v for v in _truth_vector(formula.operand, word, cache)]
    elif isinstance(formula, And):
        left = _truth_vector(formula.left, word, cache)
        right = _truth_vector(formula.right, word, cache)
        vec = [l and r for l, r in zip(left, right)]
    elif isinstance(formula, Or):
        left = _truth_vector(formula.left, word, cache)
        right = _truth_vector(formula.right, word, cache)
        vec = [l or r for l, r in zip(left, right)]
    elif isinstance(formula, Next):
        sub = _truth_vector(formula.operand, word, cache)
        vec = [sub[succ[p]] for p in range(n)]
    elif isinstance(formula, (Until, Finally)):
        # Least fixpoint over one period: the right operand must actually occur.
        if isinstance(formula, Until):
            hold = _truth_vector(formula.left, word, cache)
            goal = _truth_vector(formula.right, word, cache)
        else:
            hold = [True] * n
            goal = _truth_vector(formula.operand, word, cache)
        vec = [False] * n
        changed = True
        while changed:
            changed = False
            for p in range(n - 1, -1, -1):
                new = goal[p] or (hold[p] and vec[succ[p]])
                if new != vec[p]:
                    vec[p] = new
                    changed = True
    elif isinstance(formula, Globally):
        # Greatest fixpoint: start from all-true and prune.
        sub = _truth_vector(formula.operand, word, cache)
        vec = [True] * n
        changed = True
        while changed:
            changed = False
            for p in range(n - 1, -1, -1):
                new = sub[p] and vec[succ[p]]
                if new != vec[p]:
                    vec[p] = new
                    changed = True
    else:
        raise TypeError(f"not a formula node: {formula!r}")
    cache[formula] = vec
    return vec


def evaluate_lasso(formula: Formula, word: LassoWord) -> bool:
    """Decide whether the infinite word satisfies the formula."""
    return _truth_vector(formula, word, {})[0]
