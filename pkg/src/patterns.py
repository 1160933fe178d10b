#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Patterns, languages, the shift metric and subshift presentations.

Subshifts over ℤ are handled exactly through trimmed transfer graphs: every vertex of
a trimmed graph lies on a bi-infinite path, so the label words of finite paths are
exactly the language. Over ℤᵈ (d ≥ 2) and free groups only local admissibility is
decidable, and every slice computed there is flagged as an upper bound.
"""

import enum
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

import networkx as nx
import numpy as np

from errors import (
    EmptySetError,
    InsufficientWindowError,
    MalformedPresentationError,
    UnsupportedGroupError,
)
from group_core import GroupCtx, GroupElement

logger = logging.getLogger(__name__)

Symbol = str
Word = tuple[Symbol, ...]


class Pattern:
    """A finite assignment of symbols to group elements."""

    def __init__(self, cells: Mapping[GroupElement, Symbol]):
        if not cells:
            raise InsufficientWindowError("a pattern needs a nonempty window")
        self._cells = dict(sorted(cells.items()))

    @classmethod
    def from_word(cls, word: Sequence[Symbol], start: int = 0) -> "Pattern":
        """Place a word over ℤ starting at position start."""
        return cls({(start + i,): a for i, a in enumerate(word)})

    @property
    def window(self) -> tuple[GroupElement, ...]:
        """Return the window in sorted order."""
        return tuple(self._cells)

    def items(self) -> Iterable[tuple[GroupElement, Symbol]]:
        """Iterate over (cell, symbol) pairs."""
        return self._cells.items()

    def get(self, g: GroupElement, default: Symbol | None = None) -> Symbol | None:
        """Return the symbol at g, or default outside the window."""
        return self._cells.get(g, default)

    def __getitem__(self, g: GroupElement) -> Symbol:
        """Return the symbol at g."""
        return self._cells[g]

    def __contains__(self, g: object) -> bool:
        """Return True if g is in the window."""
        return g in self._cells

    def restrict(self, window: Iterable[GroupElement]) -> "Pattern":
        """Return the restriction to a subwindow."""
        window = list(window)
        missing = [g for g in window if g not in self._cells]
        if missing:
            raise InsufficientWindowError(f"cells {missing} are outside the pattern window")
        return Pattern({g: self._cells[g] for g in window})

    def values(self, window: Sequence[GroupElement]) -> tuple[Symbol, ...]:
        """Return the symbols on window, in the order given."""
        return tuple(self._cells[g] for g in window)

    def word(self) -> Word:
        """Return the symbols in window order, for interval patterns over ℤ."""
        return tuple(self._cells.values())

    def __eq__(self, other: object) -> bool:
        """Compare patterns."""
        if not isinstance(other, Pattern):
            return NotImplemented
        return self._cells == other._cells

    def __hash__(self) -> int:
        """Hash the pattern."""
        return hash(tuple(self._cells.items()))

    def __repr__(self) -> str:
        """Represent the pattern."""
        return f"Pattern({self._cells!r})"


def shift_apply(x: Pattern, g: GroupElement, ctx: GroupCtx) -> Pattern:
    """Return σ_g(x), defined by σ_g(x)(h) = x(hg) on the window A·g⁻¹."""
    g_inv = ctx.inv(g)
    return Pattern({ctx.mul(a, g_inv): s for a, s in x.items()})


@dataclass(frozen=True)
class ShiftDistance:
    """A dyadic distance 2^(-exponent); an upper bound when the windows agree throughout."""

    exponent: int
    upper_bound: bool = False

    @property
    def value(self) -> float:
        """Return the numeric distance, or its bound."""
        return 2.0**-self.exponent

    def __str__(self) -> str:
        """Return a readable form."""
        rel = "<=" if self.upper_bound else "="
        return f"d {rel} 2^-{self.exponent}"


def shift_metric(
    x: Pattern, y: Pattern, ctx: GroupCtx, precision: int | None = None
) -> ShiftDistance:
    """Return the enumeration metric between two patterns.

    Args:
        x: First pattern.
        y: Second pattern.
        ctx: Group whose canonical enumeration fixes the metric.
        precision: If given, the common window must contain the first ``precision``
            enumerated elements.

    Returns:
        ShiftDistance: Exact at the first disagreement, otherwise an upper bound.
    """
    common = sum(1 for g in x.window if g in y)
    prefix = ctx.enumeration(common + 1)
    covered = 0
    for n, g in enumerate(prefix):
        if g not in x or g not in y:
            break
        if x[g] != y[g]:
            return ShiftDistance(n)
        covered = n + 1
    if precision is not None and covered < precision:
        raise InsufficientWindowError(
            f"windows cover {covered} enumerated elements, precision {precision} requested"
        )
    return ShiftDistance(covered, upper_bound=True)


class Exactness(enum.Enum):
    """How a language slice was obtained."""

    EXACT = "exact"
    UPPER_BOUND = "locally-admissible-upper-bound"


@dataclass(frozen=True)
class LanguageSlice:
    """The patterns of a subshift seen on a finite window."""

    window: tuple[GroupElement, ...]
    patterns: frozenset[tuple[Symbol, ...]]
    exactness: Exactness

    def __contains__(self, item: object) -> bool:
        """Accept value tuples aligned with the window, or patterns."""
        if isinstance(item, Pattern):
            try:
                item = item.values(self.window)
            except KeyError:
                return False
        return item in self.patterns

    def __len__(self) -> int:
        """Return the number of patterns."""
        return len(self.patterns)

    def restrict(self, window: Sequence[GroupElement]) -> "LanguageSlice":
        """Project the slice to a subwindow."""
        idx = [self.window.index(g) for g in window]
        patterns = frozenset(tuple(p[i] for i in idx) for p in self.patterns)
        return LanguageSlice(tuple(window), patterns, self.exactness)

    def as_patterns(self) -> list[Pattern]:
        """Return members as Pattern objects, sorted."""
        return [Pattern(dict(zip(self.window, p))) for p in sorted(self.patterns)]


class TransferGraph:
    """An edge-labelled directed graph, trimmed so every vertex is bi-extendable."""

    def __init__(
        self,
        alphabet: Sequence[Symbol],
        edges: Iterable[tuple[Hashable, Hashable, Symbol]],
        trim: bool = True,
    ):
        self.alphabet = tuple(alphabet)
        graph = nx.MultiDiGraph()
        for u, v, label in edges:
            graph.add_edge(u, v, label=label)
        if trim:
            while True:
                drop = [
                    v for v in graph if graph.in_degree(v) == 0 or graph.out_degree(v) == 0
                ]
                if not drop:
                    break
                graph.remove_nodes_from(drop)
        self.graph = graph
        self.vertices: tuple[Hashable, ...] = tuple(graph.nodes)
        self._index = {v: i for i, v in enumerate(self.vertices)}
        self.edges: tuple[tuple[Hashable, Hashable, Symbol], ...] = tuple(
            (u, v, d["label"]) for u, v, d in graph.edges(data=True)
        )
        self._succ: dict[tuple[int, Symbol], frozenset[int]] = {}
        for u, v, a in self.edges:
            key = (self._index[u], a)
            self._succ[key] = self._succ.get(key, frozenset()) | {self._index[v]}

    @property
    def is_empty(self) -> bool:
        """Return True if the graph carries no bi-infinite path."""
        return not self.vertices

    @property
    def size(self) -> int:
        """Return the number of vertices."""
        return len(self.vertices)

    @property
    def all_states(self) -> frozenset[int]:
        """Return the set of all vertex indices."""
        return frozenset(range(self.size))

    def index(self, vertex: Hashable) -> int:
        """Return the index of a vertex."""
        return self._index[vertex]

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Return the boolean adjacency matrix, ignoring labels."""
        m = np.zeros((self.size, self.size), dtype=bool)
        for u, v, _ in self.edges:
            m[self._index[u], self._index[v]] = True
        return m

    def label_matrix(self, a: Symbol) -> np.ndarray:
        """Return the boolean matrix of a-labelled edges."""
        m = np.zeros((self.size, self.size), dtype=bool)
        for u, v, label in self.edges:
            if label == a:
                m[self._index[u], self._index[v]] = True
        return m

    def word_matrix(self, word: Sequence[Symbol]) -> np.ndarray:
        """Return the boolean matrix of paths labelled word."""
        m = np.eye(self.size, dtype=bool)
        for a in word:
            m = (m.astype(np.int64) @ self.label_matrix(a).astype(np.int64)) > 0
        return m

    def step(self, states: frozenset[int], a: Symbol) -> frozenset[int]:
        """Return the vertices reached from states along one a-edge."""
        out: frozenset[int] = frozenset()
        for s in states:
            out |= self._succ.get((s, a), frozenset())
        return out

    def follow(
        self, word: Sequence[Symbol], states: frozenset[int] | None = None
    ) -> frozenset[int]:
        """Return the end vertices of paths labelled word starting in states."""
        current = self.all_states if states is None else states
        for a in word:
            current = self.step(current, a)
            if not current:
                break
        return current

    def accepts(self, word: Sequence[Symbol]) -> bool:
        """Return True if word is in the language."""
        return bool(self.follow(word))

    def end_set(self, word: Sequence[Symbol]) -> frozenset[int]:
        """Return the vertices where a path labelled word can end."""
        return self.follow(word)

    def start_set(self, word: Sequence[Symbol]) -> frozenset[int]:
        """Return the vertices where a path labelled word can start."""
        return frozenset(i for i in range(self.size) if self.follow(word, frozenset({i})))

    def words(self, n: int) -> set[Word]:
        """Return the language words of length n."""
        if self.is_empty:
            return set()
        frontier: dict[int, set[Word]] = {i: {()} for i in range(self.size)}
        for _ in range(n):
            nxt: dict[int, set[Word]] = {}
            for (u, a), targets in self._succ.items():
                for w in frontier.get(u, ()):
                    for v in targets:
                        nxt.setdefault(v, set()).add(w + (a,))
            frontier = nxt
        return set().union(*frontier.values()) if frontier else set()

    def inclusion_witness(self, other: "TransferGraph") -> Word | None:
        """Return a shortest word of this language missing from other's, or None."""
        start = (self.all_states, other.all_states)
        seen = {start}
        queue: deque = deque([(start, ())])
        symbols = sorted(set(self.alphabet) | set(other.alphabet))
        while queue:
            (s1, s2), word = queue.popleft()
            for a in symbols:
                n1 = self.step(s1, a)
                if not n1:
                    continue
                n2 = other.step(s2, a)
                if not n2:
                    return word + (a,)
                if (n1, n2) not in seen:
                    seen.add((n1, n2))
                    queue.append(((n1, n2), word + (a,)))
        return None

    def product(self, other: "TransferGraph") -> "TransferGraph":
        """Return the graph of the product subshift, labels joined by '|'."""
        alphabet = [f"{a}|{b}" for a in self.alphabet for b in other.alphabet]
        edges = [
            ((u1, u2), (v1, v2), f"{a}|{b}")
            for u1, v1, a in self.edges
            for u2, v2, b in other.edges
        ]
        return TransferGraph(alphabet, edges)

    def relabel(
        self, mapping: Mapping[Symbol, Symbol], alphabet: Sequence[Symbol]
    ) -> "TransferGraph":
        """Return the graph with edge labels replaced through mapping."""
        return TransferGraph(alphabet, [(u, v, mapping[a]) for u, v, a in self.edges])

    def block_edges(self, k: int) -> list[tuple[tuple, tuple, Word]]:
        """Return the paths of k edges as (source, target, word) triples.

        Source and target are the paths of k - 1 edges at either end, each given as
        (vertex indices, label word), so parallel edges stay distinct.
        """
        if k < 1:
            raise InsufficientWindowError("block length must be positive")
        paths: list[tuple[tuple[int, ...], Word]] = [((i,), ()) for i in range(self.size)]
        for _ in range(k - 1):
            paths = [(p + (v,), w + (a,)) for p, w in paths for a, v in self.successors(p[-1])]
        edges = []
        for p, w in paths:
            for a, v in self.successors(p[-1]):
                full_p, full_w = p + (v,), w + (a,)
                edges.append(((p, w), (full_p[1:], full_w[1:]), full_w))
        return edges

    def successors(self, u: int) -> list[tuple[Symbol, int]]:
        """Return (label, target) pairs of the edges leaving vertex index u, sorted."""
        return sorted((a, v) for (s, a), targets in self._succ.items() if s == u for v in targets)

    def predecessors(self, v: int) -> list[tuple[Symbol, int]]:
        """Return (label, source) pairs of the edges entering vertex index v, sorted."""
        return sorted((a, s) for (s, a), targets in self._succ.items() if v in targets)


class PresentationMode(enum.Enum):
    """How a subshift is presented."""

    SFT = "sft"
    SOFIC = "sofic"


class SubshiftPresentation:
    """A subshift given by forbidden patterns on one window, or by a labelled graph over ℤ."""

    def __init__(
        self,
        ctx: GroupCtx,
        alphabet: Sequence[Symbol],
        mode: PresentationMode,
        window: Sequence[GroupElement] = (),
        forbidden: Iterable[Sequence[Symbol]] = (),
        edges: Iterable[tuple[Hashable, Hashable, Symbol]] = (),
        name: str = "",
    ):
        self.ctx = ctx
        self.alphabet = tuple(alphabet)
        self.mode = mode
        self.name = name
        self.window = tuple(ctx.check(g) for g in window)
        self.forbidden = frozenset(tuple(f) for f in forbidden)
        self._edges = tuple(edges)
        if mode == PresentationMode.SOFIC and not ctx.is_integers:
            raise UnsupportedGroupError("sofic presentations are only supported over Z")
        if mode == PresentationMode.SFT and not self.window:
            raise MalformedPresentationError("an SFT needs a nonempty forbidden window")
        for f in self.forbidden:
            if len(f) != len(self.window) or any(a not in self.alphabet for a in f):
                raise MalformedPresentationError(f"forbidden pattern {f} does not fit the window")
        if ctx.is_integers:
            logger.debug(f"Subshift {name or '<anonymous>'} empty: {self.transfer_graph.is_empty}")

    @classmethod
    def sft(
        cls,
        ctx: GroupCtx,
        alphabet: Sequence[Symbol],
        window: Sequence[GroupElement],
        forbidden: Iterable[Sequence[Symbol]],
        name: str = "",
    ) -> "SubshiftPresentation":
        """Return an SFT presentation."""
        return cls(ctx, alphabet, PresentationMode.SFT, window, forbidden, name=name)

    @classmethod
    def sofic(
        cls,
        alphabet: Sequence[Symbol],
        edges: Iterable[tuple[Hashable, Hashable, Symbol]],
        name: str = "",
    ) -> "SubshiftPresentation":
        """Return a sofic presentation over ℤ."""
        return cls(GroupCtx.integers(), alphabet, PresentationMode.SOFIC, edges=edges, name=name)

    @classmethod
    def full_shift(
        cls, ctx: GroupCtx, alphabet: Sequence[Symbol], name: str = ""
    ) -> "SubshiftPresentation":
        """Return the full shift."""
        return cls.sft(ctx, alphabet, [ctx.identity], [], name=name)

    @classmethod
    def from_forbidden_words(
        cls, alphabet: Sequence[Symbol], words: Iterable[Sequence[Symbol]], name: str = ""
    ) -> "SubshiftPresentation":
        """Return the ℤ-SFT forbidding words of any lengths, on one interval window."""
        words = [tuple(w) for w in words]
        m = max((len(w) for w in words), default=1)
        forbidden = [
            w
            for w in itertools.product(alphabet, repeat=m)
            if any(_has_factor(w, f) for f in words)
        ]
        ctx = GroupCtx.integers()
        return cls.sft(ctx, alphabet, [(i,) for i in range(m)], forbidden, name=name)

    @property
    def exactness(self) -> Exactness:
        """Return how languages of this presentation are computed."""
        return Exactness.EXACT if self.ctx.is_integers else Exactness.UPPER_BOUND

    @property
    def edges(self) -> tuple[tuple[Hashable, Hashable, Symbol], ...]:
        """Return the sofic edges as given."""
        return self._edges

    @cached_property
    def transfer_graph(self) -> TransferGraph:
        """Return the trimmed transfer graph of a ℤ-subshift."""
        if not self.ctx.is_integers:
            raise UnsupportedGroupError(f"transfer graphs need Z, got {self.ctx}")
        if self.mode == PresentationMode.SOFIC:
            return TransferGraph(self.alphabet, self._edges)
        offsets = [g[0] for g in self.window]
        low = min(offsets)
        span = max(offsets) - low
        edges = []
        for w in itertools.product(self.alphabet, repeat=span + 1):
            if tuple(w[o - low] for o in offsets) in self.forbidden:
                continue
            edges.append((w[:-1], w[1:], w[-1]))
        return TransferGraph(self.alphabet, edges)

    @property
    def is_empty(self) -> bool | None:
        """Return emptiness over ℤ, None where it is undecided."""
        if not self.ctx.is_integers:
            return None
        return self.transfer_graph.is_empty

    def block_approximation(self, m: int) -> "SubshiftPresentation":
        """Return the SFT forbidding every length-m word outside the language."""
        if m < 1:
            raise InsufficientWindowError("approximation length must be positive")
        allowed = self.transfer_graph.words(m)
        forbidden = [w for w in itertools.product(self.alphabet, repeat=m) if w not in allowed]
        return SubshiftPresentation.sft(
            self.ctx,
            self.alphabet,
            [(i,) for i in range(m)],
            forbidden,
            name=f"{self.name}[{m}]",
        )

    def violates(self, cells: Mapping[GroupElement, Symbol], at: GroupElement) -> bool:
        """Return True if the window translated by at carries a forbidden pattern."""
        values = []
        for w in self.window:
            g = self.ctx.mul(w, at)
            if g not in cells:
                return False
            values.append(cells[g])
        return tuple(values) in self.forbidden

    def __repr__(self) -> str:
        """Represent the presentation."""
        return f"SubshiftPresentation({self.name!r}, {self.mode.value}, {self.ctx})"


def _has_factor(word: Sequence[Symbol], factor: Sequence[Symbol]) -> bool:
    n = len(factor)
    return any(tuple(word[i : i + n]) == tuple(factor) for i in range(len(word) - n + 1))


def language(X: SubshiftPresentation, A: Iterable[GroupElement]) -> LanguageSlice:
    """Return the language of X on the window A.

    Over ℤ the slice is exact. Elsewhere it is the set of patterns on A that extend to
    a locally admissible pattern on the cells whose forbidden-window translates meet A.
    """
    window = tuple(X.ctx.check(g) for g in A)
    if not window:
        raise InsufficientWindowError("language windows must be nonempty")
    if X.ctx.is_integers:
        low = min(g[0] for g in window)
        n = max(g[0] for g in window) - low + 1
        words = X.transfer_graph.words(n)
        patterns = frozenset(tuple(w[g[0] - low] for g in window) for w in words)
        return LanguageSlice(window, patterns, Exactness.EXACT)

    ctx = X.ctx
    w_inv = [ctx.inv(w) for w in X.window]
    anchors = sorted({ctx.mul(wi, a) for wi in w_inv for a in window})
    padding = sorted({ctx.mul(w, g) for g in anchors for w in X.window} | set(window))
    patterns = set()
    for values in itertools.product(X.alphabet, repeat=len(window)):
        cells = dict(zip(window, values))
        if _extends(X, cells, padding, anchors):
            patterns.add(values)
    logger.debug(f"Locally admissible slice on {len(window)} cells: {len(patterns)} patterns")
    return LanguageSlice(window, frozenset(patterns), Exactness.UPPER_BOUND)


def _extends(
    X: SubshiftPresentation,
    cells: dict[GroupElement, Symbol],
    padding: Sequence[GroupElement],
    anchors: Sequence[GroupElement],
) -> bool:
    """Backtrack an extension of cells to padding avoiding forbidden translates at anchors."""
    if any(X.violates(cells, g) for g in anchors):
        return False
    free = [g for g in padding if g not in cells]
    if not free:
        return True
    g = free[0]
    for a in X.alphabet:
        cells[g] = a
        if _extends(X, cells, padding, anchors):
            del cells[g]
            return True
        del cells[g]
    return False


@dataclass(frozen=True)
class ForbiddenWordWitness:
    """A minimal forbidden word a·u·b with a·u and u·b in the language."""

    left: Word
    right: Word
    word: Word


@dataclass
class SftDecision:
    """Outcome of deciding whether a sofic ℤ-subshift is of finite type."""

    is_sft: bool
    window: int | None = None
    forbidden: tuple[Word, ...] = ()
    witnesses: tuple[ForbiddenWordWitness, ...] = ()
    presentation: SubshiftPresentation | None = None
    word_bound: int | None = None
    notes: list[str] = field(default_factory=list)


def _minimal_forbidden_pairs(
    graph: TransferGraph,
) -> tuple[nx.DiGraph, list[tuple[Symbol, tuple]], set[tuple]]:
    """Build the automaton of pairs (δ(I, a·u), δ(I, u)) over words a·u of the language."""
    pairs = nx.DiGraph()
    starts = []
    initial = graph.all_states
    for a in sorted(graph.alphabet):
        s1 = graph.step(initial, a)
        if s1:
            starts.append((a, (s1, initial)))
            pairs.add_node((s1, initial))
    stack = [node for _, node in starts]
    seen = set(stack)
    while stack:
        s1, s2 = stack.pop()
        for c in sorted(graph.alphabet):
            n1 = graph.step(s1, c)
            if not n1:
                continue
            n2 = graph.step(s2, c)
            pairs.add_edge((s1, s2), (n1, n2), label=c)
            if (n1, n2) not in seen:
                seen.add((n1, n2))
                stack.append((n1, n2))
    productive = {
        (s1, s2)
        for s1, s2 in pairs
        if any(graph.step(s2, b) and not graph.step(s1, b) for b in graph.alphabet)
    }
    return pairs, starts, productive


def _iter_minimal_forbidden(
    graph: TransferGraph,
    pairs: nx.DiGraph,
    starts: list[tuple[Symbol, tuple]],
    productive: set[tuple],
    useful: set[tuple],
    bound: int | None,
) -> Iterator[ForbiddenWordWitness]:
    """Walk the pair automaton and yield minimal forbidden words of length at least two."""
    queue: deque = deque((node, (a,)) for a, node in starts if node in useful)
    while queue:
        node, au = queue.popleft()
        if bound is not None and len(au) + 1 > bound:
            continue
        if node in productive:
            s1, s2 = node
            for b in sorted(graph.alphabet):
                if graph.step(s2, b) and not graph.step(s1, b):
                    yield ForbiddenWordWitness(au, au[1:] + (b,), au + (b,))
        for _, nxt, data in sorted(pairs.out_edges(node, data=True), key=lambda e: e[2]["label"]):
            if nxt in useful:
                queue.append((nxt, au + (data["label"],)))


def sofic_is_sft(X: SubshiftPresentation, word_bound: int = 12) -> SftDecision:
    """Decide whether a ℤ-subshift is of finite type.

    The subshift is SFT exactly when its set of minimal forbidden words is finite. The
    words a·u·b are read off an automaton on pairs of subset states; the set is infinite
    iff some cycle of that automaton reaches a state that admits a forbidden ending.

    Args:
        X: Sofic or SFT presentation over ℤ.
        word_bound: Longest forbidden word listed as a witness when X is not SFT.

    Returns:
        SftDecision: An SFT presentation with its window, or witness pairs.
    """
    if not X.ctx.is_integers:
        raise UnsupportedGroupError(f"sofic_is_sft needs Z, got {X.ctx}")
    graph = X.transfer_graph
    if graph.is_empty:
        raise EmptySetError(f"subshift {X.name or '<anonymous>'} is empty")

    singles = [
        ForbiddenWordWitness((), (), (b,))
        for b in sorted(X.alphabet)
        if not graph.step(graph.all_states, b)
    ]
    pairs, starts, productive = _minimal_forbidden_pairs(graph)
    useful = set(productive)
    for node in productive:
        useful |= nx.ancestors(pairs, node)
    finite = nx.is_directed_acyclic_graph(pairs.subgraph(useful))

    if finite:
        found = singles + list(
            _iter_minimal_forbidden(graph, pairs, starts, productive, useful, None)
        )
        words = sorted({w.word for w in found}, key=lambda w: (len(w), w))
        window = max((len(w) for w in words), default=1)
        presentation = SubshiftPresentation.from_forbidden_words(
            X.alphabet, words, name=f"{X.name}-sft" if X.name else "sft"
        )
        logger.info(f"Subshift {X.name or '<anonymous>'} is SFT with window {window}")
        return SftDecision(True, window, tuple(words), tuple(found), presentation)

    found = singles + list(
        _iter_minimal_forbidden(graph, pairs, starts, productive, useful, word_bound)
    )
    found.sort(key=lambda w: (len(w.word), w.word))
    logger.info(
        f"Subshift {X.name or '<anonymous>'} is not SFT; {len(found)} minimal forbidden words "
        f"up to length {word_bound}"
    )
    return SftDecision(
        False,
        forbidden=tuple(w.word for w in found),
        witnesses=tuple(found),
        word_bound=word_bound,
        notes=["minimal forbidden words have unbounded length"],
    )
