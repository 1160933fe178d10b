#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Finite G-systems, their covers and partitions, and cover geometry.

A finite discrete space is compact, Hausdorff and totally disconnected, and every
subset is clopen, so the finite open covers of such a system are arbitrary covers and
its clopen partitions are arbitrary partitions. Group elements act through the
generator permutations; a word acts by applying its rightmost letter first.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from errors import (
    MetricError,
    NoMetricError,
    NonCommutingActionError,
    NotACoverError,
    NotAPermutationError,
    PartitionRequiredError,
    RefinementError,
)
from group_core import GroupCtx, GroupElement

logger = logging.getLogger(__name__)

Perm = tuple[int, ...]


def _compose(p: Perm, q: Perm) -> Perm:
    """Return p∘q."""
    return tuple(p[i] for i in q)


def _invert(p: Perm) -> Perm:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


class FiniteSystem:
    """A finite set with a group action by permutations and an optional metric."""

    def __init__(
        self,
        ctx: GroupCtx,
        states: Sequence[str],
        generators: Mapping[int, Sequence[str]],
        metric: np.ndarray | Sequence[Sequence[float]] | None = None,
        name: str = "",
    ):
        self.ctx = ctx
        self.name = name
        self.states: tuple[str, ...] = tuple(states)
        if len(set(self.states)) != len(self.states) or not self.states:
            raise NotAPermutationError(f"state names of {name or 'system'} must be distinct")
        self._index = {x: i for i, x in enumerate(self.states)}

        self._gens: list[Perm] = []
        for i in range(ctx.rank):
            images = generators.get(i)
            if images is None:
                self._gens.append(tuple(range(len(self.states))))
                continue
            self._gens.append(self._as_perm(ctx.generator_names[i], images))
        if ctx.is_lattice:
            for i in range(ctx.rank):
                for j in range(i + 1, ctx.rank):
                    a, b = self._gens[i], self._gens[j]
                    if _compose(a, b) != _compose(b, a):
                        raise NonCommutingActionError(
                            f"generators {ctx.generator_names[i]} and "
                            f"{ctx.generator_names[j]} do not commute"
                        )
        self._cache: dict[GroupElement, Perm] = {}
        self.metric = None if metric is None else self._as_metric(metric)

    def _as_perm(self, gen_name: str, images: Sequence[str]) -> Perm:
        if len(images) != len(self.states):
            raise NotAPermutationError(
                f"generator {gen_name} has {len(images)} images for {len(self.states)} states"
            )
        unknown = [y for y in images if y not in self._index]
        if unknown:
            raise NotAPermutationError(f"generator {gen_name} maps to unknown states {unknown}")
        perm = tuple(self._index[y] for y in images)
        if len(set(perm)) != len(perm):
            raise NotAPermutationError(f"generator {gen_name} is not injective")
        return perm

    def _as_metric(self, metric: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
        d = np.asarray(metric, dtype=float)
        n = len(self.states)
        if d.shape != (n, n):
            raise MetricError(f"metric must be {n}x{n}, got {d.shape}")
        if not np.allclose(d, d.T) or np.any(np.diag(d) != 0):
            raise MetricError("metric must be symmetric with zero diagonal")
        if np.any(d[~np.eye(n, dtype=bool)] <= 0):
            raise MetricError("metric must be positive off the diagonal")
        if not np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12):
            raise MetricError("metric violates the triangle inequality")
        return d

    @classmethod
    def from_maps(
        cls,
        ctx: GroupCtx,
        states: Sequence[str],
        maps: Mapping[int, Mapping[str, str]],
        metric: np.ndarray | Sequence[Sequence[float]] | None = None,
        name: str = "",
    ) -> "FiniteSystem":
        """Build a system from generator maps given as dicts."""
        images = {i: [m.get(x, x) for x in states] for i, m in maps.items()}
        return cls(ctx, states, images, metric, name)

    @property
    def size(self) -> int:
        """Return |X|."""
        return len(self.states)

    @property
    def has_metric(self) -> bool:
        """Return True if a metric is attached."""
        return self.metric is not None

    def index(self, x: str) -> int:
        """Return the index of state x."""
        try:
            return self._index[x]
        except KeyError:
            raise NotAPermutationError(f"unknown state {x!r}") from None

    def generator_perm(self, i: int) -> Perm:
        """Return the permutation of generator i."""
        return self._gens[i]

    def perm(self, g: GroupElement) -> Perm:
        """Return Φ_g as a permutation of state indices."""
        cached = self._cache.get(g)
        if cached is not None:
            return cached
        identity = tuple(range(self.size))
        out = identity
        if self.ctx.is_lattice:
            for i, power in enumerate(g):
                step = self._gens[i] if power >= 0 else _invert(self._gens[i])
                for _ in range(abs(power)):
                    out = _compose(step, out)
        else:
            for letter in reversed(g):
                step = self._gens[abs(letter) - 1]
                out = _compose(step if letter > 0 else _invert(step), out)
        self._cache[g] = out
        return out

    def apply(self, g: GroupElement, x: str) -> str:
        """Return Φ_g(x)."""
        return self.states[self.perm(g)[self.index(x)]]

    def image(self, g: GroupElement, subset: Iterable[str]) -> frozenset[str]:
        """Return Φ_g(subset)."""
        p = self.perm(g)
        return frozenset(self.states[p[self.index(x)]] for x in subset)

    def preimage(self, g: GroupElement, subset: Iterable[str]) -> frozenset[str]:
        """Return Φ_g⁻¹(subset) = Φ_{g⁻¹}(subset)."""
        return self.image(self.ctx.inv(g), subset)

    def distance(self, x: str, y: str) -> float:
        """Return d(x, y)."""
        if self.metric is None:
            raise NoMetricError(f"system {self.name or '<anonymous>'} has no metric")
        return float(self.metric[self.index(x), self.index(y)])

    @property
    def distances(self) -> list[float]:
        """Return the distinct positive distances in increasing order."""
        if self.metric is None:
            raise NoMetricError(f"system {self.name or '<anonymous>'} has no metric")
        return sorted({float(v) for v in self.metric.flatten() if v > 0})

    @property
    def diameter(self) -> float:
        """Return diam(X)."""
        if self.metric is None:
            raise NoMetricError(f"system {self.name or '<anonymous>'} has no metric")
        return float(self.metric.max())

    def orbits(self) -> list[frozenset[str]]:
        """Return the G-orbits in order of first state."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.size))
        for p in self._gens:
            graph.add_edges_from((i, j) for i, j in enumerate(p))
        comps = [sorted(c) for c in nx.connected_components(graph)]
        return [frozenset(self.states[i] for i in c) for c in sorted(comps)]

    def image_group(self, gens: Sequence[GroupElement] | None = None) -> set[Perm]:
        """Return the permutation group generated by Φ_s for s in gens."""
        gens = list(self.ctx.generators if gens is None else gens)
        steps = [self.perm(s) for s in gens] + [_invert(self.perm(s)) for s in gens]
        identity = tuple(range(self.size))
        group = {identity}
        frontier = [identity]
        while frontier:
            nxt = []
            for p in frontier:
                for s in steps:
                    q = _compose(s, p)
                    if q not in group:
                        group.add(q)
                        nxt.append(q)
            frontier = nxt
        return group

    def product(self, other: "FiniteSystem") -> "FiniteSystem":
        """Return X × Y with the diagonal action, states named 'x|y'."""
        if self.ctx != other.ctx:
            raise NotAPermutationError("product systems need the same group")
        states = [f"{x}|{y}" for x in self.states for y in other.states]
        gens = {}
        for i in range(self.ctx.rank):
            p, q = self._gens[i], other._gens[i]
            gens[i] = [
                f"{self.states[p[a]]}|{other.states[q[b]]}"
                for a in range(self.size)
                for b in range(other.size)
            ]
        return FiniteSystem(self.ctx, states, gens, name=f"{self.name}x{other.name}")

    def __repr__(self) -> str:
        """Represent the system."""
        return f"FiniteSystem({self.name!r}, {self.ctx}, {len(self.states)} states)"


def apply(sys: FiniteSystem, g: GroupElement, x: str) -> str:
    """Return Φ_g(x)."""
    return sys.apply(sys.ctx.check(g), x)


class Cover:
    """A finite cover of a state set by named nonempty blocks."""

    def __init__(
        self,
        states: Sequence[str],
        blocks: Sequence[Iterable[str]],
        names: Sequence[str] | None = None,
        name: str = "",
    ):
        self.states = tuple(states)
        self.name = name
        self.blocks: tuple[frozenset[str], ...] = tuple(frozenset(b) for b in blocks)
        if not self.blocks:
            raise NotACoverError("a cover needs at least one block")
        if any(not b for b in self.blocks):
            raise NotACoverError("covers may not contain the empty block")
        extra = set().union(*self.blocks) - set(self.states)
        if extra:
            raise NotACoverError(f"blocks mention unknown states {sorted(extra)}")
        missing = set(self.states) - set().union(*self.blocks)
        if missing:
            raise NotACoverError(f"states {sorted(missing)} are not covered")
        self.names: tuple[str, ...] = (
            tuple(names) if names is not None else tuple(f"U{i}" for i in range(len(self.blocks)))
        )
        if len(self.names) != len(self.blocks):
            raise NotACoverError("every block needs exactly one name")
        if len(set(self.names)) != len(self.names):
            raise NotACoverError(f"block names {list(self.names)} are not distinct")
        self._containing = {
            x: tuple(i for i, b in enumerate(self.blocks) if x in b) for x in self.states
        }

    @classmethod
    def trivial(cls, states: Sequence[str]) -> "Cover":
        """Return {X}."""
        return cls(states, [states], ["X"], name="trivial")

    @classmethod
    def singletons(cls, states: Sequence[str]) -> "Cover":
        """Return the partition into points."""
        return cls(states, [[x] for x in states], list(states), name="singletons")

    @property
    def is_partition(self) -> bool:
        """Return True if blocks are pairwise disjoint."""
        return all(len(v) == 1 for v in self._containing.values())

    @property
    def is_singletons(self) -> bool:
        """Return True for the partition into points."""
        return all(len(b) == 1 for b in self.blocks) and self.is_partition

    def __len__(self) -> int:
        """Return the number of blocks."""
        return len(self.blocks)

    def blocks_containing(self, x: str) -> tuple[int, ...]:
        """Return the indices of blocks containing x."""
        return self._containing[x]

    def block_of(self, x: str) -> int:
        """Return the first block containing x, the block for partitions."""
        return self._containing[x][0]

    def require_partition(self) -> "Cover":
        """Raise PartitionRequiredError for overlapping covers."""
        if not self.is_partition:
            raise PartitionRequiredError(f"cover {self.name or '<anonymous>'} is not a partition")
        return self

    def same_blocks(self, other: "Cover") -> bool:
        """Return True if both covers have the same set of blocks."""
        return set(self.blocks) == set(other.blocks)

    def __eq__(self, other: object) -> bool:
        """Compare covers as block sets over the same states."""
        if not isinstance(other, Cover):
            return NotImplemented
        return set(self.states) == set(other.states) and self.same_blocks(other)

    def __hash__(self) -> int:
        """Hash the block set."""
        return hash(frozenset(self.blocks))

    def __repr__(self) -> str:
        """Represent the cover."""
        body = ", ".join(
            f"{n}={{{','.join(x for x in self.states if x in b)}}}"
            for n, b in zip(self.names, self.blocks)
        )
        return f"Cover({body})"


@dataclass(frozen=True)
class CoverRelation:
    """How a cover V sits over a cover U."""

    refines: bool
    join: Cover
    iota: tuple[int, ...]


def refines(V: Cover, U: Cover) -> bool:
    """Return True if every V-block lies inside some U-block."""
    return all(any(v <= u for u in U.blocks) for v in V.blocks)


def join(U: Cover, V: Cover) -> Cover:
    """Return U ∨ V, the nonempty pairwise intersections in canonical order."""
    blocks: list[frozenset[str]] = []
    names: list[str] = []
    for i, u in enumerate(U.blocks):
        for j, v in enumerate(V.blocks):
            b = u & v
            if b and b not in blocks:
                name = f"{U.names[i]}.{V.names[j]}"
                blocks.append(b)
                names.append(name if name not in names else f"{name}#{len(names)}")
    return Cover(U.states, [sorted(b, key=U.states.index) for b in blocks], names)


def iota(V: Cover, U: Cover, strict: bool = False) -> tuple[int, ...]:
    """Map each V-block to a U-block it meets.

    A U-block containing the V-block is preferred; otherwise the first intersecting
    block in U's order is used. With strict set, non-containment is an error.
    """
    out = []
    for j, v in enumerate(V.blocks):
        containing = [i for i, u in enumerate(U.blocks) if v <= u]
        if containing:
            out.append(containing[0])
            continue
        if strict:
            raise RefinementError(f"block {V.names[j]} is inside no block of {U.name or 'U'}")
        out.append(next(i for i, u in enumerate(U.blocks) if v & u))
    return tuple(out)


def cover_ops(U: Cover, V: Cover, strict: bool = False) -> CoverRelation:
    """Return refinement, join and the block map ι: V → U."""
    if set(U.states) != set(V.states):
        raise NotACoverError("covers live on different state sets")
    return CoverRelation(refines(V, U), join(U, V), iota(V, U, strict))


def star(A: Iterable[str], U: Cover) -> frozenset[str]:
    """Return st(A, U), the union of blocks meeting A."""
    A = set(A)
    return frozenset().union(*(b for b in U.blocks if b & A))


def diameter(U: Cover, sys: FiniteSystem) -> float:
    """Return the largest block diameter."""
    if sys.metric is None:
        raise NoMetricError(f"system {sys.name or '<anonymous>'} has no metric")
    best = 0.0
    for b in U.blocks:
        idx = [sys.index(x) for x in b]
        best = max(best, float(sys.metric[np.ix_(idx, idx)].max()))
    return best


def lebesgue_number(U: Cover, sys: FiniteSystem) -> float:
    """Return the largest δ in the realized distances and diam + 1 with every ball in a block.

    Balls are open, B(x, δ) = {y : d(x, y) < δ}. On a finite space the returned value is
    the supremum of the closed-ball radii that fit: every closed ball of radius below it
    lies in a block, while the closed ball of that radius may not. For the singletons of
    a space with least distance 1 this gives 1, where the closed-ball number sits just
    below 1.
    """
    if sys.metric is None:
        raise NoMetricError(f"system {sys.name or '<anonymous>'} has no metric")
    cap = sys.diameter + 1.0
    for delta in [cap] + sorted(sys.distances, reverse=True):
        if all(
            any(ball_ <= b for b in U.blocks)
            for ball_ in (open_ball(sys, x, delta) for x in sys.states)
        ):
            return delta
    return min(sys.distances, default=cap)


def open_ball(sys: FiniteSystem, x: str, radius: float) -> frozenset[str]:
    """Return B(x, radius) = {y : d(x, y) < radius}."""
    row = sys.metric[sys.index(x)] if sys.metric is not None else None
    if row is None:
        raise NoMetricError(f"system {sys.name or '<anonymous>'} has no metric")
    return frozenset(sys.states[j] for j, v in enumerate(row) if v < radius)


@dataclass(frozen=True)
class CoverGeometry:
    """Metric data of a cover."""

    diameter: float
    lebesgue: float
    star: frozenset[str] | None = None


def geometry(U: Cover, sys: FiniteSystem, A: Iterable[str] | None = None) -> CoverGeometry:
    """Return diameter, Lebesgue number and optionally the star of A."""
    return CoverGeometry(
        diameter(U, sys), lebesgue_number(U, sys), None if A is None else star(A, U)
    )


def clique_cover(sys: FiniteSystem, eps: float) -> Cover:
    """Return the maximal cliques of the relation d < eps, in canonical order.

    Two points share a block exactly when they are eps-close.
    """
    graph = nx.Graph()
    graph.add_nodes_from(range(sys.size))
    for i in range(sys.size):
        for j in range(i + 1, sys.size):
            if sys.distance(sys.states[i], sys.states[j]) < eps:
                graph.add_edge(i, j)
    cliques = sorted(sorted(c) for c in nx.find_cliques(graph))
    return Cover(
        sys.states,
        [[sys.states[i] for i in c] for c in cliques],
        ["{" + ",".join(sys.states[i] for i in c) + "}" for c in cliques],
        name=f"cliques<{eps:g}",
    )


def ball_cover(sys: FiniteSystem, radius: float) -> Cover:
    """Return a greedy subcover of the open balls of the given radius."""
    blocks: list[frozenset[str]] = []
    names: list[str] = []
    covered: set[str] = set()
    for x in sys.states:
        if x in covered:
            continue
        b = open_ball(sys, x, radius)
        blocks.append(b)
        names.append(f"B({x})")
        covered |= b
    return Cover(sys.states, [sorted(b, key=sys.states.index) for b in blocks], names)


def orbit_pattern_classes(
    sys: FiniteSystem, U: Cover, S: Sequence[GroupElement] | None = None
) -> Cover:
    """Return the classes of states with equal U-itineraries along ⟨S⟩.

    The coarsest refinement of U stable under Φ_s and Φ_s⁻¹ for s in S, computed by
    splitting on successor classes until nothing splits.
    """
    U.require_partition()
    S = list(sys.ctx.generators if S is None else S)
    steps = [sys.perm(s) for s in S] + [_invert(sys.perm(s)) for s in S]
    labels = [U.block_of(x) for x in sys.states]
    count = len(set(labels))
    rounds = 0
    while True:
        rounds += 1
        signatures = [(labels[i], tuple(labels[p[i]] for p in steps)) for i in range(sys.size)]
        renumber: dict[tuple, int] = {}
        labels = [renumber.setdefault(sig, len(renumber)) for sig in signatures]
        if len(renumber) == count:
            break
        count = len(renumber)
    logger.debug(f"Orbit-pattern classes of {sys.name or 'system'}: {count} after {rounds} rounds")
    classes: dict[int, list[str]] = {}
    for x, c in zip(sys.states, labels):
        classes.setdefault(c, []).append(x)
    blocks = list(classes.values())
    return Cover(sys.states, blocks, [f"[{b[0]}]" for b in blocks], name=f"classes({U.name})")
