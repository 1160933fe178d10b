#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Word arithmetic for the finitely generated groups ℤ, ℤᵈ and F_k.

Elements are plain tuples of ints so they hash and sort cheaply:

* lattice groups (ℤ is the lattice of rank 1) use the coordinate vector;
* free groups use the reduced word of signed generator indices, ``1`` for the first
  generator and ``-1`` for its inverse. The identity is ``()``.

Balls and the canonical enumeration list elements in shortlex order over the letter
sequence s1, s1⁻¹, s2, s2⁻¹, ..., which fixes the enumeration behind the shift metric.
"""

import enum
import logging
import re
from typing import Iterable, Sequence

from networkx.utils import UnionFind

from errors import MalformedElementError

logger = logging.getLogger(__name__)

GroupElement = tuple[int, ...]

# "e" is reserved for the identity literal.
FREE_GENERATOR_NAMES = "abcdfghijklmnopqrstuvwxyz"

_INT_RE = re.compile(r"^[+-]?\d+$")
_VECTOR_RE = re.compile(r"^\(\s*[+-]?\d+(\s*,\s*[+-]?\d+)*\s*\)$")
_FREE_TOKEN_RE = re.compile(r"^([a-z])(?:\^([+-]?\d+))?$")


class GroupKind(enum.Enum):
    """Supported group families."""

    INTEGERS = "Z"
    LATTICE = "Z^d"
    FREE = "free"


class GroupCtx:
    """A finitely generated group with a fixed ordered generating set."""

    def __init__(self, kind: GroupKind, rank: int = 1):
        if rank < 1:
            raise MalformedElementError(f"group rank must be positive, got {rank}")
        if kind == GroupKind.INTEGERS and rank != 1:
            kind = GroupKind.LATTICE
        if kind == GroupKind.LATTICE and rank == 1:
            kind = GroupKind.INTEGERS
        if kind == GroupKind.FREE and rank > len(FREE_GENERATOR_NAMES):
            raise MalformedElementError(f"free groups of rank {rank} are not supported")
        self._kind = kind
        self._rank = rank

    @classmethod
    def integers(cls) -> "GroupCtx":
        """Return ℤ."""
        return cls(GroupKind.INTEGERS, 1)

    @classmethod
    def lattice(cls, d: int) -> "GroupCtx":
        """Return ℤᵈ."""
        return cls(GroupKind.LATTICE, d)

    @classmethod
    def free(cls, k: int) -> "GroupCtx":
        """Return the free group on k generators."""
        return cls(GroupKind.FREE, k)

    @property
    def kind(self) -> GroupKind:
        """Return the group family."""
        return self._kind

    @property
    def rank(self) -> int:
        """Return the number of generators."""
        return self._rank

    @property
    def is_lattice(self) -> bool:
        """Return True for ℤ and ℤᵈ."""
        return self._kind != GroupKind.FREE

    @property
    def is_integers(self) -> bool:
        """Return True for ℤ."""
        return self._kind == GroupKind.INTEGERS

    @property
    def identity(self) -> GroupElement:
        """Return e_G."""
        return (0,) * self._rank if self.is_lattice else ()

    @property
    def generators(self) -> tuple[GroupElement, ...]:
        """Return the generators in index order."""
        if self.is_lattice:
            return tuple(
                tuple(1 if i == j else 0 for j in range(self._rank)) for i in range(self._rank)
            )
        return tuple((i,) for i in range(1, self._rank + 1))

    @property
    def generator_names(self) -> tuple[str, ...]:
        """Return the names used for generators in workspace files."""
        if self.is_integers:
            return ("+1",)
        if self.is_lattice:
            return tuple(f"e{i}" for i in range(1, self._rank + 1))
        return tuple(FREE_GENERATOR_NAMES[: self._rank])

    def generator(self, name: str) -> GroupElement:
        """Return the generator called name."""
        aliases = {"1": 0, "e1": 0} if self.is_integers else {}
        if name in aliases:
            return self.generators[aliases[name]]
        try:
            return self.generators[self.generator_names.index(name)]
        except ValueError:
            raise MalformedElementError(f"unknown generator {name!r} for {self}") from None

    def __eq__(self, other: object) -> bool:
        """Compare group contexts."""
        if not isinstance(other, GroupCtx):
            return NotImplemented
        return (self._kind, self._rank) == (other._kind, other._rank)

    def __hash__(self) -> int:
        """Hash the group context."""
        return hash((self._kind, self._rank))

    def __repr__(self) -> str:
        """Represent the group context."""
        return f"GroupCtx({self._kind.name}, {self._rank})"

    def __str__(self) -> str:
        """Return the workspace spelling of the group."""
        if self.is_integers:
            return "Z"
        if self.is_lattice:
            return f"Z^{self._rank}"
        return f"free {self._rank}"

    # arithmetic

    def check(self, g: Sequence[int]) -> GroupElement:
        """Return g as a canonical element, or raise MalformedElementError."""
        g = tuple(g)
        if any(not isinstance(v, int) or isinstance(v, bool) for v in g):
            raise MalformedElementError(f"non-integer entry in {g!r}")
        if self.is_lattice:
            if len(g) != self._rank:
                raise MalformedElementError(f"expected {self._rank} coordinates, got {g!r}")
            return g
        for i, letter in enumerate(g):
            if letter == 0 or abs(letter) > self._rank:
                raise MalformedElementError(f"unknown generator index {letter} in {g!r}")
            if i and g[i - 1] == -letter:
                raise MalformedElementError(f"word {g!r} is not reduced")
        return g

    def mul(self, g: GroupElement, h: GroupElement) -> GroupElement:
        """Return g·h."""
        if self.is_lattice:
            return tuple(a + b for a, b in zip(g, h))
        out = list(g)
        for letter in h:
            if out and out[-1] == -letter:
                out.pop()
            else:
                out.append(letter)
        return tuple(out)

    def inv(self, g: GroupElement) -> GroupElement:
        """Return g⁻¹."""
        if self.is_lattice:
            return tuple(-a for a in g)
        return tuple(-letter for letter in reversed(g))

    def power(self, g: GroupElement, n: int) -> GroupElement:
        """Return gⁿ for any integer n."""
        base = g if n >= 0 else self.inv(g)
        out = self.identity
        for _ in range(abs(n)):
            out = self.mul(out, base)
        return out

    def product(self, elements: Iterable[GroupElement]) -> GroupElement:
        """Return the ordered product of elements."""
        out = self.identity
        for g in elements:
            out = self.mul(out, g)
        return out

    def length(self, g: GroupElement) -> int:
        """Return the word length of g over all generators and their inverses."""
        return sum(abs(a) for a in g) if self.is_lattice else len(g)

    def letters(
        self, S: Sequence[GroupElement] | None = None, symmetric: bool = True
    ) -> list[GroupElement]:
        """Return the step set used for balls: s1, s1⁻¹, s2, s2⁻¹, ..."""
        S = self.generators if S is None else S
        out: list[GroupElement] = []
        for s in S:
            s = self.check(s)
            for t in (s, self.inv(s)) if symmetric else (s,):
                if t != self.identity and t not in out:
                    out.append(t)
        return out

    def ball(
        self, S: Sequence[GroupElement] | None = None, radius: int = 1, symmetric: bool = True
    ) -> list[GroupElement]:
        """Return the elements of length at most radius over S, in shortlex order."""
        if radius < 0:
            raise MalformedElementError(f"radius must be non-negative, got {radius}")
        steps = self.letters(S, symmetric)
        out = [self.identity]
        seen = {self.identity}
        layer = [self.identity]
        for _ in range(radius):
            nxt = []
            for g in layer:
                for s in steps:
                    h = self.mul(g, s)
                    if h not in seen:
                        seen.add(h)
                        nxt.append(h)
            if not nxt:
                break
            out.extend(nxt)
            layer = nxt
        return out

    def enumeration(self, n: int) -> list[GroupElement]:
        """Return the first n elements of the canonical enumeration."""
        if n < 1:
            raise MalformedElementError(f"enumeration length must be positive, got {n}")
        radius = 0
        while True:
            elements = self.ball(None, radius)
            if len(elements) >= n:
                return elements[:n]
            radius += 1

    def radius_of(self, elements: Iterable[GroupElement]) -> int:
        """Return the least radius whose ball contains every element."""
        return max((self.length(g) for g in elements), default=0)

    # literals

    def parse(self, text: str) -> GroupElement:
        """Parse a group-element literal such as ``-2``, ``(1,0)`` or ``a.b^-1``."""
        text = text.strip()
        if self.is_integers and _INT_RE.match(text):
            return (int(text),)
        if self.is_lattice:
            if _VECTOR_RE.match(text):
                g = tuple(int(v) for v in text.strip("()").split(","))
                return self.check(g)
            if text in self.generator_names or (self.is_integers and text in ("e1",)):
                return self.generator(text)
            raise MalformedElementError(f"malformed element {text!r} for {self}")
        if text == "e":
            return ()
        out = self.identity
        for token in text.split("."):
            m = _FREE_TOKEN_RE.match(token)
            if not m or m.group(1) not in self.generator_names:
                raise MalformedElementError(f"malformed element {text!r} for {self}")
            exponent = int(m.group(2)) if m.group(2) else 1
            out = self.mul(out, self.power(self.generator(m.group(1)), exponent))
        return out

    def format(self, g: GroupElement) -> str:
        """Return the literal for g, the inverse of :meth:`parse`."""
        if self.is_integers:
            return str(g[0])
        if self.is_lattice:
            return "(" + ",".join(str(v) for v in g) + ")"
        if not g:
            return "e"
        tokens = []
        i = 0
        while i < len(g):
            j = i
            while j < len(g) and g[j] == g[i]:
                j += 1
            name = FREE_GENERATOR_NAMES[abs(g[i]) - 1]
            exponent = (j - i) * (1 if g[i] > 0 else -1)
            tokens.append(name if exponent == 1 else f"{name}^{exponent}")
            i = j
        return ".".join(tokens)

    def subgroup(self, S: Sequence[GroupElement]) -> "Subgroup":
        """Return the subgroup generated by S."""
        return Subgroup(self, S)


class Subgroup:
    """Membership oracle for a finitely generated subgroup ⟨S⟩."""

    def __init__(self, ctx: GroupCtx, S: Sequence[GroupElement]):
        self.ctx = ctx
        self.gens = tuple(ctx.check(s) for s in S)
        if ctx.is_lattice:
            self._basis = _echelon_basis([list(s) for s in self.gens], ctx.rank)
        else:
            self._out, self._in, self._base = _folded_graph(self.gens)

    def __contains__(self, g: GroupElement) -> bool:
        """Return True if g lies in the subgroup."""
        if self.ctx.is_lattice:
            v = list(g)
            for col, row in self._basis:
                if v[col] % row[col]:
                    return False
                q = v[col] // row[col]
                v = [a - q * b for a, b in zip(v, row)]
            return not any(v)
        vertex: int | None = self._base
        for letter in g:
            edges = self._out if letter > 0 else self._in
            vertex = edges.get((vertex, abs(letter)))  # type: ignore[arg-type]
            if vertex is None:
                return False
        return vertex == self._base

    def same_right_coset(self, g: GroupElement, h: GroupElement) -> bool:
        """Return True if Hg = Hh."""
        return self.ctx.mul(g, self.ctx.inv(h)) in self

    @property
    def is_whole_group(self) -> bool:
        """Return True if the subgroup contains every generator."""
        return all(s in self for s in self.ctx.generators)


def _echelon_basis(rows: list[list[int]], d: int) -> list[tuple[int, list[int]]]:
    """Integer row echelon form of the lattice spanned by rows."""
    rows = [r for r in rows if any(r)]
    basis: list[tuple[int, list[int]]] = []
    for col in range(d):
        while True:
            nonzero = sorted((r for r in rows if r[col]), key=lambda r: abs(r[col]))
            if len(nonzero) <= 1:
                break
            pivot = nonzero[0]
            for r in nonzero[1:]:
                q = r[col] // pivot[col]
                for i in range(d):
                    r[i] -= q * pivot[i]
            rows = [r for r in rows if any(r)]
        nonzero = [r for r in rows if r[col]]
        if nonzero:
            pivot = nonzero[0]
            rows = [r for r in rows if r is not pivot]
            if pivot[col] < 0:
                pivot = [-v for v in pivot]
            basis.append((col, pivot))
    return basis


def _folded_graph(
    words: Sequence[GroupElement],
) -> tuple[dict[tuple[int, int], int], dict[tuple[int, int], int], int]:
    """Fold the bouquet of loops spelling words into a deterministic subgroup graph."""
    edges: set[tuple[int, int, int]] = set()
    count = 1
    for w in words:
        current = 0
        for pos, letter in enumerate(w):
            if pos == len(w) - 1:
                nxt = 0
            else:
                nxt = count
                count += 1
            edges.add((current, letter, nxt) if letter > 0 else (nxt, -letter, current))
            current = nxt

    uf = UnionFind(range(count))
    while True:
        out: dict[tuple[int, int], int] = {}
        inc: dict[tuple[int, int], int] = {}
        merged = False
        for u, a, v in sorted(edges):
            u, v = uf[u], uf[v]
            if (u, a) in out and uf[out[(u, a)]] != v:
                uf.union(out[(u, a)], v)
                merged = True
            if (v, a) in inc and uf[inc[(v, a)]] != u:
                uf.union(inc[(v, a)], u)
                merged = True
            out[(u, a)] = v
            inc[(v, a)] = u
        edges = {(uf[u], a, uf[v]) for u, a, v in edges}
        if not merged:
            break

    out = {(u, a): v for u, a, v in edges}
    inc = {(v, a): u for u, a, v in edges}
    return out, inc, uf[0]


def group_arith(ctx: GroupCtx, op: str, args: Sequence[GroupElement] = ()) -> GroupElement:
    """Evaluate ``mul``, ``inv`` or ``id`` on canonical elements."""
    args = [ctx.check(g) for g in args]
    if op == "mul":
        return ctx.product(args)
    if op == "inv":
        if len(args) != 1:
            raise MalformedElementError(f"inv takes one argument, got {len(args)}")
        return ctx.inv(args[0])
    if op == "id":
        return ctx.identity
    raise MalformedElementError(f"unknown group operation {op!r}")


def ball(
    ctx: GroupCtx, S: Sequence[GroupElement] | None, radius: int, symmetric: bool = True
) -> list[GroupElement]:
    """Return the ball of the given radius over S (all generators if None)."""
    return ctx.ball(S, radius, symmetric)


def enumeration(ctx: GroupCtx, n: int) -> list[GroupElement]:
    """Return the first n elements of the canonical enumeration."""
    return ctx.enumeration(n)
