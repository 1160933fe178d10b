#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Hitting sets and the recurrence properties built on them.

N(U, V) = {g ≠ e : Φ_g(U) ∩ V ≠ ∅}. Over ℤ every hitting set computed here is
semilinear: a finite part on (-T, T) and one residue set modulo p on each tail. Finite
systems over other groups keep the permutations that hit, and subshift cylinders over
other groups are only listed on a ball.
"""

import enum
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from math import gcd, lcm
from typing import Any, Callable, Hashable, Iterable, Sequence, cast

import networkx as nx
import numpy as np

from certificates import Report
from errors import (
    EmptySetError,
    InconsistencyError,
    InsufficientWindowError,
    MalformedElementError,
    NotApplicableError,
    SearchLimitError,
    UnsupportedGroupError,
)
from finite_system import Cover, FiniteSystem, Perm
from group_core import GroupCtx, GroupElement
from orbit_spaces import build_orbit_space
from patterns import PresentationMode, SubshiftPresentation, Symbol, TransferGraph, Word
from settings import SearchBounds
from shadowing import Carrier, point_through
from towers import InverseSystem, NestedChain, check_ml, limit_threads

logger = logging.getLogger(__name__)

_GLUE_LENGTH = 4
_TOTAL_NOTE = "checked against finitely generated subgroups"

Space = FiniteSystem | SubshiftPresentation
Cylinder = tuple[Word, int]


class Family(enum.Enum):
    """Families of subsets of G that hitting sets are tested against."""

    INFINITE = "inf"
    THICK = "t"
    COFINITE = "cf"


class Property(enum.Enum):
    """Recurrence properties decided by :func:`check_property`."""

    TRANSITIVE = "transitive"
    TOTALLY_TRANSITIVE = "totally_transitive"
    WEAKLY_MIXING = "weakly_mixing"
    MIXING = "mixing"
    MINIMAL = "minimal"
    SPECIFICATION = "specification"


class Direction(enum.Enum):
    """Which inheritance statement :func:`inheritance_report` checks."""

    TOWER_TO_LIMIT = "tower-limit"
    BASE_TO_ORBIT_SPACE = "orbit-space"


@dataclass(frozen=True)
class ZHittingSet:
    """A semilinear subset of ℤ \\ {0}.

    n is a member iff n is in ``inner`` for |n| < threshold, iff n mod period is in
    ``right`` for n ≥ threshold and iff n mod period is in ``left`` for n ≤ -threshold.
    """

    threshold: int
    period: int
    inner: frozenset[int]
    right: frozenset[int]
    left: frozenset[int]
    exact: bool = True

    def __contains__(self, n: object) -> bool:
        """Return True if n (an int or a one-coordinate element) is a member."""
        if isinstance(n, tuple):
            n = n[0]
        if not isinstance(n, int) or n == 0:
            return False
        if -self.threshold < n < self.threshold:
            return n in self.inner
        return n % self.period in (self.right if n > 0 else self.left)

    def members(self, lo: int, hi: int) -> list[int]:
        """Return the members in [lo, hi]."""
        return [n for n in range(lo, hi + 1) if n in self]

    def on_ball(self, radius: int) -> frozenset[GroupElement]:
        """Return the members of length at most radius."""
        return frozenset((n,) for n in self.members(-radius, radius))

    @property
    def is_empty(self) -> bool:
        """Return True if there are no members."""
        return not (self.inner or self.right or self.left)

    @property
    def is_infinite(self) -> bool:
        """Return True if some tail is nonempty."""
        return bool(self.right or self.left)

    @property
    def is_cofinite(self) -> bool:
        """Return True if both tails are full."""
        return len(self.right) == self.period and len(self.left) == self.period

    @property
    def is_thick(self) -> bool:
        """Return True if the set contains arbitrarily long intervals."""
        return len(self.right) == self.period or len(self.left) == self.period

    @property
    def is_syndetic(self) -> bool:
        """Return True if the gaps are bounded."""
        return bool(self.right and self.left)

    def meets_every_subgroup(self) -> bool:
        """Return True if every kℤ, k ≥ 1, has a member."""
        return 0 in self.right or 0 in self.left

    def meets_multiples(self, k: int) -> bool:
        """Return True if some nonzero multiple of k is a member."""
        if k == 0:
            return False
        reach = self.threshold // abs(k) + self.period + 1
        return any(m * k in self for m in range(-reach, reach + 1))

    def in_family(self, family: Family) -> bool:
        """Return True if the set belongs to the family."""
        if family is Family.INFINITE:
            return self.is_infinite
        if family is Family.THICK:
            return self.is_thick
        return self.is_cofinite

    def horizon(self, other: "ZHittingSet") -> int:
        """Return a bound beyond which both sets repeat with a common period."""
        return max(self.threshold, other.threshold) + lcm(self.period, other.period)

    def issubset(self, other: "ZHittingSet") -> bool:
        """Return True if every member of self is a member of other."""
        h = self.horizon(other)
        return all(n in other for n in self.members(-h, h))

    def same_as(self, other: "ZHittingSet") -> bool:
        """Return True if both sets have the same members."""
        return self.issubset(other) and other.issubset(self)

    def missing(self) -> list[int] | None:
        """Return the complement of a cofinite set, None otherwise."""
        if not self.is_cofinite:
            return None
        return [n for n in range(-self.threshold + 1, self.threshold) if n not in self]

    def _residue_form(self) -> tuple[int, list[int]] | None:
        p, t = self.period, self.threshold
        for q in range(1, p + 1):
            if p % q:
                continue
            residues = {n % q for n in range(t, t + p) if n in self}
            if all(
                (n in self) == (n % q in residues)
                for n in range(-t - p, t + p + 1)
                if n != 0
            ):
                return q, sorted(residues)
        return None

    def describe(self) -> str:
        """Return a short rendering such as ``ℤ\\{-1,0,1}`` or ``{n ≡ 1 mod 3}``."""
        if self.is_empty:
            return "∅"
        missing = self.missing()
        if missing is not None:
            return "ℤ\\{" + ",".join(str(n) for n in missing) + "}"
        form = self._residue_form()
        if form is not None:
            q, residues = form
            text = "{n ≡ " + ",".join(str(r) for r in residues) + f" mod {q}}}"
            return text + "\\{0}" if 0 in residues else text
        inner = ",".join(str(n) for n in sorted(self.inner))
        right = ",".join(str(r) for r in sorted(self.right))
        left = ",".join(str(r) for r in sorted(self.left))
        t, p = self.threshold, self.period
        return (
            f"{{{inner}}} ∪ {{n ≥ {t} : n mod {p} ∈ {{{right}}}}}"
            f" ∪ {{n ≤ -{t} : n mod {p} ∈ {{{left}}}}}"
        )

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "threshold": self.threshold,
            "period": self.period,
            "inner": sorted(self.inner),
            "right": sorted(self.right),
            "left": sorted(self.left),
            "exact": self.exact,
            "description": self.describe(),
        }


def _semilinear(member: Callable[[int], bool], threshold: int, period: int) -> ZHittingSet:
    t, p = max(1, threshold), max(1, period)
    return ZHittingSet(
        threshold=t,
        period=p,
        inner=frozenset(n for n in range(-t + 1, t) if n and member(n)),
        right=frozenset(n % p for n in range(t, t + p) if member(n)),
        left=frozenset(n % p for n in range(-t - p + 1, -t + 1) if member(n)),
    )


@dataclass(frozen=True)
class GroupHittingSet:
    """A hitting set of a finite system over a group other than ℤ.

    g ≠ e is a member iff Φ_g is one of the permutations in ``hits``. Each permutation
    of the image group is taken by a coset of the finite-index kernel, so every
    nonempty fiber is infinite and syndetic.
    """

    system: FiniteSystem
    hits: frozenset[Perm]
    image: frozenset[Perm]
    exact: bool = True

    def __contains__(self, g: object) -> bool:
        """Return True if g is a member."""
        if not isinstance(g, tuple) or g == self.system.ctx.identity:
            return False
        return self.system.perm(g) in self.hits

    def on_ball(self, radius: int) -> frozenset[GroupElement]:
        """Return the members of length at most radius."""
        return frozenset(g for g in self.system.ctx.ball(None, radius) if g in self)

    @property
    def is_empty(self) -> bool:
        """Return True if no permutation hits."""
        return not self.hits

    @property
    def is_infinite(self) -> bool:
        """Return True if some permutation hits."""
        return bool(self.hits)

    @property
    def is_cofinite(self) -> bool:
        """Return True if every permutation of the image hits."""
        return self.hits == self.image

    @property
    def is_thick(self) -> bool:
        """Return True if every translate of a transversal of the kernel can fit."""
        return self.hits == self.image

    @property
    def is_syndetic(self) -> bool:
        """Return True if some coset of the kernel is inside the set."""
        return bool(self.hits)

    def meets_subgroup(self, gens: Sequence[GroupElement]) -> bool:
        """Return True if ⟨gens⟩ \\ {e} has a member; gens must not all be trivial."""
        return bool(self.hits & self.system.image_group(gens))

    def in_family(self, family: Family) -> bool:
        """Return True if the set belongs to the family."""
        if family is Family.INFINITE:
            return self.is_infinite
        if family is Family.THICK:
            return self.is_thick
        return self.is_cofinite

    def describe(self) -> str:
        """Return a short rendering."""
        if self.is_empty:
            return "∅"
        if self.is_cofinite:
            return "G\\{e}"
        return f"{{g ≠ e : Φ_g in {len(self.hits)} of {len(self.image)} permutations}}"

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "hits": len(self.hits),
            "image": len(self.image),
            "exact": self.exact,
            "description": self.describe(),
        }


@dataclass(frozen=True)
class BallHittingSet:
    """The members of a hitting set inside one ball, nothing beyond it."""

    ctx: GroupCtx
    radius: int
    members: frozenset[GroupElement]
    exact: bool = False

    def __contains__(self, g: object) -> bool:
        """Return True if g is a listed member."""
        return g in self.members

    def on_ball(self, radius: int) -> frozenset[GroupElement]:
        """Return the listed members of length at most radius."""
        if radius > self.radius:
            raise InsufficientWindowError(f"members are only known up to radius {self.radius}")
        return frozenset(g for g in self.members if self.ctx.length(g) <= radius)

    @property
    def is_empty(self) -> bool:
        """Return True if no member was found in the ball."""
        return not self.members

    def describe(self) -> str:
        """Return a short rendering."""
        return f"{len(self.members)} elements of the ball of radius {self.radius}"

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "radius": self.radius,
            "members": [self.ctx.format(g) for g in sorted(self.members)],
            "exact": self.exact,
            "description": self.describe(),
        }


HittingSet = ZHittingSet | GroupHittingSet | BallHittingSet


def _order(p: Perm) -> int:
    out = 1
    seen: set[int] = set()
    for i in range(len(p)):
        n, j = 0, i
        while j not in seen:
            seen.add(j)
            j = p[j]
            n += 1
        if n:
            out = lcm(out, n)
    return out


class _Powers:
    """The boolean powers A^k, eventually periodic from ``start`` with ``period``."""

    def __init__(self, matrix: np.ndarray, cap: int):
        step = matrix.astype(np.int64)
        current = np.eye(matrix.shape[0], dtype=bool)
        seen: dict[bytes, int] = {}
        self._powers: list[np.ndarray] = []
        while True:
            key = current.tobytes()
            if key in seen:
                self.start = seen[key]
                break
            if len(self._powers) >= cap:
                logger.warning(f"No period among the first {cap} matrix powers")
                raise SearchLimitError(f"matrix powers did not repeat within {cap} steps")
            seen[key] = len(self._powers)
            self._powers.append(current)
            current = (current.astype(np.int64) @ step) > 0
        self.period = len(self._powers) - self.start

    def power(self, k: int) -> np.ndarray:
        """Return A^k."""
        if k >= len(self._powers):
            k = self.start + (k - self.start) % self.period
        return self._powers[k]

    def reaches(self, source: np.ndarray, target: np.ndarray, k: int) -> bool:
        """Return True if a path of length k joins source to target."""
        row = source.astype(np.int64) @ self.power(k).astype(np.int64)
        return bool(np.any((row > 0) & target))


def parse_cylinder(text: str) -> Cylinder:
    """Parse ``word@start``; symbols are characters unless the word has spaces."""
    word, sep, start = text.strip().rpartition("@")
    if not sep:
        word, start = start, "0"
    word = word.strip()
    symbols = tuple(word.split()) if " " in word else tuple(word)
    if not symbols:
        raise MalformedElementError(f"cylinder {text!r} has an empty word")
    try:
        return symbols, int(start)
    except ValueError:
        raise MalformedElementError(f"cylinder {text!r} has a malformed start") from None


def format_cylinder(word: Sequence[Symbol], start: int = 0) -> str:
    """Return the ``word@start`` literal of a cylinder."""
    sep = "" if all(len(a) == 1 for a in word) else " "
    return f"{sep.join(word)}@{start}"


def _as_cylinder(c: str | Cylinder) -> Cylinder:
    if isinstance(c, str):
        return parse_cylinder(c)
    word, start = c
    return tuple(word), int(start)


def _indicator(graph: TransferGraph, vertices: Iterable[int]) -> np.ndarray:
    out = np.zeros(graph.size, dtype=bool)
    out[list(vertices)] = True
    return out


def _cylinder_hitting(
    graph: TransferGraph, powers: _Powers, U: Cylinder, V: Cylinder
) -> ZHittingSet:
    (u, i), (v, j) = U, V
    for w in (u, v):
        if not graph.accepts(w):
            raise EmptySetError(f"cylinder {format_cylinder(w)} is empty")
    ends_u, starts_u = _indicator(graph, graph.end_set(u)), _indicator(graph, graph.start_set(u))
    ends_v, starts_v = _indicator(graph, graph.end_set(v)), _indicator(graph, graph.start_set(v))

    def member(n: int) -> bool:
        # v starts d places after u in the point carrying both
        d = n - i + j
        if d >= len(u):
            return powers.reaches(ends_u, starts_v, d - len(u))
        if d <= -len(v):
            return powers.reaches(ends_v, starts_u, -d - len(v))
        lo = min(0, d)
        merged: dict[int, Symbol] = {k - lo: a for k, a in enumerate(u)}
        for k, a in enumerate(v):
            if merged.setdefault(d + k - lo, a) != a:
                return False
        return graph.accepts([merged[k] for k in range(len(merged))])

    threshold = max(len(u), len(v)) + powers.start + abs(i - j)
    return _semilinear(member, threshold, powers.period)


def _state_set(sys: FiniteSystem, U: str | Iterable[str]) -> frozenset[str]:
    states = frozenset([U] if isinstance(U, str) else U)
    if not states:
        raise EmptySetError("hitting sets need nonempty sets")
    for x in states:
        sys.index(x)
    return states


def _finite_hitting(sys: FiniteSystem, U: frozenset[str], V: frozenset[str]) -> HittingSet:
    if sys.ctx.is_integers:
        return _semilinear(
            lambda n: bool(sys.image((n,), U) & V), 1, _order(sys.generator_perm(0))
        )
    image = sys.image_group()
    targets = frozenset(sys.index(y) for y in V)
    sources = [sys.index(x) for x in U]
    hits = frozenset(p for p in image if any(p[s] in targets for s in sources))
    return GroupHittingSet(sys, hits, frozenset(image))


def hitting(
    space: Space,
    U: str | Iterable[str] | Cylinder,
    V: str | Iterable[str] | Cylinder,
    bounds: SearchBounds | None = None,
) -> HittingSet:
    """Return N(U, V).

    Args:
        space: A finite system, or a ℤ-subshift whose U and V are cylinders.
        U: A state, a set of states, or a cylinder ``word@start``.
        V: As U.
        bounds: Search bounds; ``max_period_steps`` caps the matrix-power search.

    Returns:
        HittingSet: A semilinear set over ℤ, a permutation set over other groups.

    Raises:
        EmptySetError: If U or V is empty.
        UnsupportedGroupError: For subshifts over groups other than ℤ.
    """
    bounds = bounds or SearchBounds()
    if isinstance(space, SubshiftPresentation):
        if not space.ctx.is_integers:
            raise UnsupportedGroupError(f"subshift hitting sets need Z, got {space.ctx}")
        graph = space.transfer_graph
        if graph.is_empty:
            raise EmptySetError(f"subshift {space.name or '<anonymous>'} is empty")
        powers = _Powers(graph.adjacency, bounds.max_period_steps)
        U, V = _as_cylinder(U), _as_cylinder(V)  # type: ignore[arg-type]
        return _cylinder_hitting(graph, powers, U, V)
    U, V = _state_set(space, U), _state_set(space, V)  # type: ignore[arg-type]
    return _finite_hitting(space, U, V)


@dataclass
class PropertyVerdict:
    """The outcome of one property check."""

    prop: Property
    holds: bool
    exact: bool
    certificate: dict = field(default_factory=dict)
    witness: Any = None
    note: str | None = None

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "property": self.prop.value,
            "holds": self.holds,
            "exact": self.exact,
            "certificate": self.certificate,
            "witness": self.witness,
            "note": self.note,
        }


_PAIR_FAILS: dict[Property, Callable[[ZHittingSet], bool]] = {
    Property.TOTALLY_TRANSITIVE: lambda h: not h.meets_every_subgroup(),
    Property.MIXING: lambda h: not h.is_cofinite,
    Property.SPECIFICATION: lambda h: not h.is_cofinite,
}


def _pair_witness(u: Word, v: Word, hs: HittingSet) -> dict:
    return {"U": format_cylinder(u), "V": format_cylinder(v), "hitting": hs.describe()}


def _first_pair(
    graph: TransferGraph,
    powers: _Powers,
    lengths: Iterable[int],
    fails: Callable[[ZHittingSet], bool],
) -> dict | None:
    """Return the first pair of cylinders at 0 whose hitting set fails, or None."""
    for n in lengths:
        words = sorted(graph.words(n))
        for u, v in itertools.product(words, repeat=2):
            hs = _cylinder_hitting(graph, powers, (u, 0), (v, 0))
            if fails(hs):
                return _pair_witness(u, v, hs)
    return None


def _components(graph: TransferGraph) -> list[TransferGraph]:
    out = []
    comps = sorted(
        nx.strongly_connected_components(graph.graph),
        key=lambda c: min(graph.index(v) for v in c),
    )
    for comp in comps:
        sub = TransferGraph(
            graph.alphabet, [e for e in graph.edges if e[0] in comp and e[1] in comp]
        )
        if not sub.is_empty:
            out.append(sub)
    return out


def _irreducible_part(graph: TransferGraph) -> TransferGraph | None:
    """Return a component presenting the whole subshift, None if there is none."""
    for comp in _components(graph):
        if graph.inclusion_witness(comp) is None:
            return comp
    return None


def _period(graph: TransferGraph) -> int:
    """Return the gcd of the cycle lengths of an irreducible graph."""
    level = nx.single_source_shortest_path_length(graph.graph, graph.vertices[0])
    out = 0
    for u, v, _ in graph.edges:
        out = gcd(out, level[u] + 1 - level[v])
    return abs(out)


def _primitivity_index(graph: TransferGraph) -> int:
    """Return the least k with A^k > 0 for a primitive graph."""
    n = graph.size
    step = graph.adjacency.astype(np.int64)
    current = np.eye(n, dtype=bool)
    for k in range((n - 1) ** 2 + 2):
        if current.all():
            return k
        current = (current.astype(np.int64) @ step) > 0
    raise InconsistencyError("an aperiodic irreducible graph has no positive power")


def _shortest_cycle(graph: TransferGraph) -> Word:
    best: Word | None = None
    for s in range(graph.size):
        seen = {s}
        queue: deque = deque([(s, ())])
        found = None
        while queue and found is None:
            v, word = queue.popleft()
            for a, w in graph.successors(v):
                if w == s:
                    found = word + (a,)
                    break
                if w not in seen:
                    seen.add(w)
                    queue.append((w, word + (a,)))
        if found is not None and (best is None or (len(found), found) < (len(best), best)):
            best = found
    if best is None:
        raise EmptySetError("a nonempty graph has a cycle")
    return best


def _periodic_name(word: Word) -> str:
    body = format_cylinder(word).rpartition("@")[0]
    return f"{body}^∞" if len(word) == 1 else f"({body})^∞"


def _transitive(graph: TransferGraph, powers: _Powers, prop: Property, depth: int):
    comp = _irreducible_part(graph)
    if comp is not None:
        certificate = {
            "component": [str(v) for v in comp.vertices],
            "components": len(_components(graph)),
        }
        return PropertyVerdict(prop, True, True, certificate), comp
    witness = _first_pair(graph, powers, range(1, depth + 1), lambda h: not h.is_infinite)
    certificate = {"components": len(_components(graph))}
    return PropertyVerdict(prop, False, True, certificate, witness), None


def _minimal(graph: TransferGraph) -> PropertyVerdict:
    cycle = _shortest_cycle(graph)
    edges = [(k, (k + 1) % len(cycle), a) for k, a in enumerate(cycle)]
    ring = TransferGraph(graph.alphabet, edges)
    outside = graph.inclusion_witness(ring)
    certificate = {"orbit": _periodic_name(cycle)}
    if outside is None:
        return PropertyVerdict(Property.MINIMAL, True, True, certificate)
    certificate["outside_word"] = format_cylinder(outside)
    witness = {"proper_subsystem": _periodic_name(cycle)}
    return PropertyVerdict(Property.MINIMAL, False, True, certificate, witness)


def _glue_pairs(X: SubshiftPresentation, graph: TransferGraph, gap: int, longest: int):
    words = [w for n in range(1, longest + 1) for w in sorted(graph.words(n))]
    example = None
    for u, v in itertools.product(words, repeat=2):
        witness = glue_fragments(X, [(0, u), (len(u) + gap, v)], gap)
        if not witness.verify():
            raise InconsistencyError(f"glued point misses {u} or {v} at gap {gap}")
        example = example or witness
    return len(words) ** 2, example


def _subshift_property(
    X: SubshiftPresentation, prop: Property, bounds: SearchBounds
) -> PropertyVerdict:
    if not X.ctx.is_integers:
        raise UnsupportedGroupError(f"global decisions need Z, got {X.ctx}")
    graph = X.transfer_graph
    if graph.is_empty:
        raise EmptySetError(f"subshift {X.name or '<anonymous>'} is empty")
    depth = max(1, bounds.depth)
    powers = _Powers(graph.adjacency, bounds.max_period_steps)
    if prop is Property.MINIMAL:
        return _minimal(graph)
    if prop is Property.WEAKLY_MIXING:
        square = graph.product(graph)
        return _transitive(square, _Powers(square.adjacency, bounds.max_period_steps), prop, 1)[0]
    verdict, comp = _transitive(graph, powers, prop, depth)
    if prop is Property.TOTALLY_TRANSITIVE:
        verdict.note = _TOTAL_NOTE
    if prop is Property.TRANSITIVE or comp is None:
        return verdict
    fails = _PAIR_FAILS[prop]

    if X.mode is PresentationMode.SFT:
        period = _period(comp)
        verdict.certificate["period"] = period
        if period != 1:
            verdict.holds = False
            verdict.witness = _first_pair(graph, powers, range(1, depth + 1), fails)
            return verdict
        k = _primitivity_index(comp)
        verdict.certificate["primitivity_index"] = k
        verdict.certificate["matrix"] = comp.adjacency.astype(int).tolist()
        if prop is Property.SPECIFICATION:
            glued, example = _glue_pairs(X, graph, k, min(_GLUE_LENGTH, depth))
            verdict.certificate.update({"gap": k, "F": list(range(-k, k + 1)), "glued": glued})
            verdict.witness = example.to_dict() if example else None
        return verdict

    # sofic presentations: every pair of cylinders of the search depth
    words = sorted(graph.words(depth))
    gap = 0
    for u, v in itertools.product(words, repeat=2):
        hs = _cylinder_hitting(graph, powers, (u, 0), (v, 0))
        if fails(hs):
            verdict.holds = False
            verdict.witness = _pair_witness(u, v, hs)
            return verdict
        if prop is Property.SPECIFICATION:
            gap = max(gap, max(hs.missing() or [0]) - len(u) + 1)
    verdict.exact = False
    verdict.certificate["depth"] = depth
    if prop is Property.SPECIFICATION:
        verdict.certificate.update({"gap": gap, "F": list(range(-gap, gap + 1))})
    return verdict


def _state_pairs(sys: FiniteSystem) -> Iterable[tuple[str, str, HittingSet]]:
    for x, y in itertools.product(sys.states, repeat=2):
        yield x, y, _finite_hitting(sys, frozenset({x}), frozenset({y}))


def _finite_test(
    sys: FiniteSystem, prop: Property, test: Callable[[Any], bool]
) -> PropertyVerdict:
    for x, y, hs in _state_pairs(sys):
        if not test(hs):
            witness = {"U": x, "V": y, "hitting": hs.describe()}
            return PropertyVerdict(prop, False, True, {"states": sys.size}, witness)
    return PropertyVerdict(prop, True, True, {"states": sys.size})


def _kernel_element(sys: FiniteSystem) -> GroupElement:
    s = sys.ctx.generators[0]
    return sys.ctx.power(s, _order(sys.generator_perm(0)))


def _finite_total(sys: FiniteSystem, bounds: SearchBounds) -> PropertyVerdict:
    prop = Property.TOTALLY_TRANSITIVE
    ctx = sys.ctx
    if ctx.is_integers:
        verdict = _finite_test(sys, prop, lambda h: h.meets_every_subgroup())
        verdict.note = _TOTAL_NOTE
        return verdict
    steps = [g for g in ctx.ball(None, bounds.radius) if g != ctx.identity]
    steps += [ctx.power(s, _order(sys.generator_perm(i))) for i, s in enumerate(ctx.generators)]
    for x, y, hs in _state_pairs(sys):
        for g in steps:
            if not hs.meets_subgroup([g]):  # type: ignore[union-attr]
                witness = {"U": x, "V": y, "subgroup": ctx.format(g)}
                certificate = {"subgroups": len(steps)}
                return PropertyVerdict(prop, False, True, certificate, witness, _TOTAL_NOTE)
    return PropertyVerdict(prop, True, True, {"subgroups": len(steps)}, None, _TOTAL_NOTE)


def _finite_property(sys: FiniteSystem, prop: Property, bounds: SearchBounds) -> PropertyVerdict:
    if prop is Property.TRANSITIVE:
        return _finite_test(sys, prop, lambda h: h.is_infinite)
    if prop is Property.MIXING:
        return _finite_test(sys, prop, lambda h: h.is_cofinite)
    if prop is Property.MINIMAL:
        return _finite_test(sys, prop, lambda h: h.is_syndetic)
    if prop is Property.WEAKLY_MIXING:
        square = _finite_test(sys.product(sys), prop, lambda h: h.is_infinite)
        square.certificate["product_states"] = square.certificate.pop("states")
        return square
    if prop is Property.TOTALLY_TRANSITIVE:
        return _finite_total(sys, bounds)
    if sys.size == 1:
        return PropertyVerdict(prop, True, True, {"gap": [sys.ctx.format(sys.ctx.identity)]})
    g = _kernel_element(sys)
    witness = {
        "kernel_element": sys.ctx.format(g),
        "fragments": [sys.states[0], sys.states[1]],
    }
    return PropertyVerdict(prop, False, True, {"states": sys.size}, witness)


def check_property(
    space: Space, prop: Property | str, bounds: SearchBounds | None = None
) -> PropertyVerdict:
    """Decide one recurrence property of a finite system or a ℤ-subshift.

    Subshift transitivity, weak mixing and minimality are decided on the transfer
    graph. Mixing, total transitivity and specification are exact on SFT
    presentations and are checked on all cylinder pairs of the search depth on sofic
    ones; positive sofic verdicts are then marked inexact.

    Raises:
        UnsupportedGroupError: For subshifts over groups other than ℤ.
        EmptySetError: For an empty subshift.
    """
    bounds = bounds or SearchBounds()
    prop = Property(prop)
    if isinstance(space, SubshiftPresentation):
        verdict = _subshift_property(space, prop, bounds)
    else:
        verdict = _finite_property(space, prop, bounds)
    logger.info(f"{prop.value} for {space.name or '<anonymous>'}: {verdict.holds}")
    return verdict


@dataclass
class FamilyVerdict:
    """Whether every basic hitting set lies in a family."""

    family: Family
    holds: bool
    exact: bool
    pairs: int
    witness: dict | None = None

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "family": self.family.value,
            "holds": self.holds,
            "exact": self.exact,
            "pairs": self.pairs,
            "witness": self.witness,
        }


def family_transitive(
    space: Space, family: Family | str, bounds: SearchBounds | None = None
) -> FamilyVerdict:
    """Decide whether N(U, V) lies in the family for all basic open U, V.

    Finite systems use all pairs of states and are exact. Subshifts use all pairs of
    cylinders at 0 of the search depth, so only a negative verdict is exact there.
    """
    bounds = bounds or SearchBounds()
    family = Family(family)
    if isinstance(space, FiniteSystem):
        pairs = 0
        for x, y, hs in _state_pairs(space):
            pairs += 1
            if not hs.in_family(family):
                witness = {"U": x, "V": y, "hitting": hs.describe()}
                return FamilyVerdict(family, False, True, pairs, witness)
        return FamilyVerdict(family, True, True, pairs)
    if not space.ctx.is_integers:
        raise UnsupportedGroupError(f"global decisions need Z, got {space.ctx}")
    graph = space.transfer_graph
    if graph.is_empty:
        raise EmptySetError(f"subshift {space.name or '<anonymous>'} is empty")
    powers = _Powers(graph.adjacency, bounds.max_period_steps)
    depth = max(1, bounds.depth)
    words = sorted(graph.words(depth))
    witness = _first_pair(graph, powers, [depth], lambda h: not h.in_family(family))
    pairs = len(words) ** 2
    verdict = FamilyVerdict(family, witness is None, witness is not None, pairs, witness)
    logger.info(f"{family.value}-transitivity of {space.name or '<anonymous>'}: {verdict.holds}")
    return verdict


@dataclass(frozen=True)
class SpecificationWitness:
    """Fragments (start, word) glued into one point of a ℤ-subshift."""

    gap: int
    fragments: tuple[tuple[int, Word], ...]
    point: Carrier

    @property
    def F(self) -> tuple[int, ...]:
        """Return the gap set [-gap, gap]."""
        return tuple(range(-self.gap, self.gap + 1))

    def blocks(self) -> list[tuple[int, Symbol]]:
        """Return the cylinder (position, symbol) each glued coordinate must meet."""
        return [(s + k, a) for s, w in self.fragments for k, a in enumerate(w)]

    def separated(self) -> bool:
        """Return True if F + F_i misses F_j for all i ≠ j."""
        return all(
            t - (s + len(w)) >= self.gap
            for (s, w), (t, _) in zip(self.fragments, self.fragments[1:])
        )

    def verify(self) -> bool:
        """Re-check separation and that the point carries every fragment."""
        return self.separated() and all(self.point.symbol(p) == a for p, a in self.blocks())

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "gap": self.gap,
            "F": list(self.F),
            "fragments": [format_cylinder(w, s) for s, w in self.fragments],
            "point": self.point.to_dict(),
        }


def glue_fragments(
    X: SubshiftPresentation, fragments: Iterable[tuple[int, Sequence[Symbol]]], gap: int
) -> SpecificationWitness:
    """Return a point of X carrying every fragment, found by path search.

    Raises:
        InsufficientWindowError: If two fragments are closer than the gap.
        NotApplicableError: If no point carries all fragments.
    """
    frags = tuple(sorted((int(s), tuple(w)) for s, w in fragments))
    if not frags or any(not w for _, w in frags):
        raise InsufficientWindowError("gluing needs nonempty fragments")
    for (s, w), (t, _) in zip(frags, frags[1:]):
        if t - (s + len(w)) < gap:
            raise InsufficientWindowError(f"fragments at {s} and {t} are closer than {gap}")
    graph = X.transfer_graph
    lo, hi = frags[0][0], max(s + len(w) for s, w in frags)
    fixed = {s + k: a for s, w in frags for k, a in enumerate(w)}
    symbols = sorted(graph.alphabet)

    def allowed(p: int) -> list[Symbol]:
        return [fixed[p]] if p in fixed else symbols

    reach = [graph.all_states]
    for p in range(hi - 1, lo - 1, -1):
        reach.append(
            frozenset(
                v
                for v in graph.all_states
                if any(graph.step(frozenset({v}), a) & reach[-1] for a in allowed(p))
            )
        )
    reach.reverse()
    if not reach[0]:
        raise NotApplicableError(
            f"no point of {X.name or 'the subshift'} carries the fragments",
            counterexample=[format_cylinder(w, s) for s, w in frags],
        )
    word: list[Symbol] = []
    current = reach[0]
    for p in range(lo, hi):
        for a in allowed(p):
            nxt = graph.step(current, a) & reach[p - lo + 1]
            if nxt:
                word.append(a)
                current = nxt
                break
    witness = SpecificationWitness(gap, frags, point_through(graph, word, start=lo))
    logger.debug(f"Glued {len(frags)} fragments over [{lo}, {hi}) at gap {gap}")
    return witness


def cylinder_hitting(
    sys: FiniteSystem,
    window: Sequence[GroupElement],
    P: Sequence[Hashable],
    Q: Sequence[Hashable],
    block: Callable[[Any], Iterable[str]],
    bounds: SearchBounds | None = None,
) -> HittingSet:
    """Return the hitting set between the cylinders of P and Q in an itinerary space.

    g ≠ e is a member iff P and σ_g-shifted Q agree where their supports overlap, and
    some x has Φ_c(x) in block(label) at every labelled cell c.
    """
    ctx = sys.ctx
    window = tuple(window)
    everything = frozenset(sys.states)

    def member(g: GroupElement) -> bool:
        if g == ctx.identity:
            return False
        cells: dict[GroupElement, Hashable] = dict(zip(window, P))
        for h, label in zip(window, Q):
            c = ctx.mul(h, g)
            if cells.setdefault(c, label) != label:
                return False
        points = everything
        for c, label in cells.items():
            points &= sys.preimage(c, block(label))
            if not points:
                return False
        return True

    if ctx.is_integers:
        offsets = [h[0] for h in window]
        threshold = max(offsets) - min(offsets) + 1
        return _semilinear(lambda n: member((n,)), threshold, _order(sys.generator_perm(0)))
    radius = (bounds or SearchBounds()).radius
    members = frozenset(g for g in ctx.ball(None, radius) if member(g))
    return BallHittingSet(ctx, radius, members)


def _difference(a: HittingSet, b: HittingSet, radius: int) -> frozenset[GroupElement]:
    """Return the members of a missing from b, over one common period on ℤ."""
    if isinstance(a, ZHittingSet) and isinstance(b, ZHittingSet):
        h = a.horizon(b)
        return frozenset((n,) for n in a.members(-h, h) if n not in b)
    return a.on_ball(radius) - b.on_ball(radius)


def _contained(a: HittingSet, b: HittingSet, radius: int) -> bool:
    return not _difference(a, b, radius)


def _same(a: HittingSet, b: HittingSet, radius: int) -> bool:
    return _contained(a, b, radius) and _contained(b, a, radius)


@dataclass
class HittingBundle:
    """The instances the hitting-set identities are checked on; any part may be absent."""

    system: FiniteSystem | None = None
    cover: Cover | None = None
    window: Sequence[GroupElement] | None = None
    tower: InverseSystem | None = None
    chain: NestedChain | None = None
    radius: int = 6


def _tower_identities(report: Report, T: InverseSystem, radius: int) -> None:
    if any(s is None for s in T.systems):
        report.precondition_failure = "every level must be a finite system"
        return
    ml = check_ml(T)
    threads = limit_threads(T)
    limit = T.thread_system()
    for lam, level in enumerate(T.systems):
        if level is None:
            continue
        fibers = {
            x: [threads.name(t) for t in threads.threads if t[lam] == x] for x in level.states
        }
        wide: list[str] = []
        for x, y in itertools.product(level.states, repeat=2):
            below = _finite_hitting(level, frozenset({x}), frozenset({y}))
            if fibers[x] and fibers[y]:
                above = hitting(limit, fibers[x], fibers[y])
                if not _contained(above, below, radius):
                    wide.append(f"limit {x}->{y}")
            for eta in range(ml.stabilization[lam], T.top + 1):
                bond = T.bond(lam, eta)
                px = [z for z, w in bond.items() if w == x]
                py = [z for z, w in bond.items() if w == y]
                upper = T.systems[eta]
                if px and py and upper is not None:
                    if not _contained(hitting(upper, px, py), below, radius):
                        wide.append(f"level {eta} {x}->{y}")
        report.add(f"limit-hitting-level-{lam}", not wide, {"violations": wide[:5]})

        narrow = [
            f"{threads.name(t)}->{y}"
            for t in threads.threads
            for y in level.states
            if fibers[y]
            and not _contained(
                hitting(level, t[lam], y), hitting(limit, threads.name(t), fibers[y]), radius
            )
        ]
        report.add(f"point-hitting-level-{lam}", not narrow, {"violations": narrow[:5]})


def _common_points(
    sys: FiniteSystem, window: Sequence[GroupElement], P: Sequence[int], U: Cover
) -> frozenset[str]:
    points = frozenset(sys.states)
    for g, i in zip(window, P):
        points &= sys.preimage(g, U.blocks[i])
    return points


def _cover_identities(
    report: Report,
    sys: FiniteSystem,
    U: Cover,
    window: Sequence[GroupElement],
    radius: int,
    bounds: SearchBounds,
) -> None:
    ctx = sys.ctx
    window = tuple(window)
    overlaps = {ctx.mul(ctx.inv(a), b) for a in window for b in window}
    cells = {
        P: _common_points(sys, window, P, U)
        for P in itertools.product(range(len(U)), repeat=len(window))
    }
    patterns = [P for P, points in cells.items() if points]

    def block(i: int) -> frozenset[str]:
        return U.blocks[i]

    strict: set[GroupElement] = set()
    upper = True
    for P, Q in itertools.product(patterns, repeat=2):
        cyl = cylinder_hitting(sys, window, P, Q, block, bounds)
        base = hitting(sys, cells[P], cells[Q])
        upper = upper and _contained(cyl, base, radius)
        strict |= _difference(base, cyl, radius)
    strict_names = [ctx.format(g) for g in sorted(strict)]
    report.add("cylinder-sandwich-upper", upper)
    report.add("cylinder-sandwich-lower", strict <= overlaps, {"strict": strict_names})
    if not U.is_partition:
        return
    report.add("cylinder-sandwich-equality", not strict, {"strict": strict_names})

    space = build_orbit_space(sys, U)
    orbit_sys = space.as_system()
    mismatched = []
    for x, P in itertools.product(sys.states, patterns):
        names = tuple(U.names[i] for i in P)
        points = [p for p in space.points if space.pattern(p, window) == names]
        left = hitting(orbit_sys, space.point_of(x), points)
        if not _same(left, hitting(sys, x, cells[P]), radius):
            mismatched.append(f"{x}:{'.'.join(names)}")
    report.add("point-cylinder-identity", not mismatched, {"mismatched": mismatched[:5]})


def _chain_identities(
    report: Report, chain: NestedChain, radius: int, bounds: SearchBounds
) -> None:
    sys = chain.base
    ctx = sys.ctx
    window = chain.window
    overlaps = {ctx.mul(ctx.inv(a), b) for a in window for b in window}
    for n, cover in enumerate(chain.covers):

        def block(i: int, cover: Cover = cover) -> frozenset[str]:
            return cover.blocks[i]

        patterns = sorted(chain.o_prime(n))
        inside, off = True, True
        for u, w in itertools.product(patterns, repeat=2):
            tuples = cylinder_hitting(sys, window, u, w, chain.kappa, bounds)
            blocks = cylinder_hitting(
                sys, window, [t[-1] for t in u], [t[-1] for t in w], block, bounds
            )
            inside = inside and _contained(tuples, blocks, radius)
            off = off and _difference(blocks, tuples, radius) <= overlaps
        report.add(f"tuple-hitting-inside-{n}", inside, {"patterns": len(patterns)})
        report.add(f"tuple-hitting-off-overlaps-{n}", off)


def verify_hitting_identities(
    bundle: HittingBundle, bounds: SearchBounds | None = None
) -> Report:
    """Check the hitting-set identities on every instance the bundle supplies.

    - tower: preimage hitting sets shrink along the bonds and in the limit, and a thread
      hits a preimage whenever its projection hits the set;
    - system, cover and window: the cylinder hitting set sits between the base hitting
      set off A⁻¹A and the base hitting set, with equality for partitions, where the
      hitting times of a point into a cylinder also match the base;
    - chain: tuple cylinders hit inside block cylinders and agree with them off A⁻¹A.

    Raises:
        InconsistencyError: If any identity fails.
    """
    bounds = bounds or SearchBounds()
    report = Report("hitting-identities")
    if bundle.tower is not None:
        _tower_identities(report, bundle.tower, bundle.radius)
    if bundle.system is not None and bundle.cover is not None:
        window = bundle.window or [bundle.system.ctx.identity]
        _cover_identities(report, bundle.system, bundle.cover, window, bundle.radius, bounds)
    if bundle.chain is not None:
        _chain_identities(report, bundle.chain, bundle.radius, bounds)
    logger.info(f"Hitting identities: {len(report.checks)} checks, passed {report.passed}")
    return report.raise_on_failure()


def inheritance_report(
    direction: Direction | str,
    instance: InverseSystem | tuple[FiniteSystem, Sequence[Cover]],
    bounds: SearchBounds | None = None,
) -> Report:
    """Check that each property passes from the premise systems to the conclusion.

    ``tower-limit`` takes an inverse system of finite systems: a property of every
    level must hold for the thread system. ``orbit-space`` takes a system with a list
    of partitions: a property of the system must hold for every orbit space.

    Raises:
        PartitionRequiredError: If an orbit-space cover overlaps.
        InconsistencyError: If an implication fails.
    """
    bounds = bounds or SearchBounds()
    direction = Direction(direction)
    report = Report(f"inheritance-{direction.value}")
    if direction is Direction.TOWER_TO_LIMIT:
        T = cast(InverseSystem, instance)
        if any(s is None for s in T.systems):
            report.precondition_failure = "every level must be a finite system"
            return report
        ml = check_ml(T)
        if not ml.holds:
            level = (ml.violation or {}).get("level")
            report.precondition_failure = f"Mittag-Leffler fails at level {level}"
            return report
        limit = T.thread_system()
        for prop in Property:
            levels = [s for s in T.systems if s is not None]
            premise = all(check_property(s, prop, bounds).holds for s in levels)
            conclusion = check_property(limit, prop, bounds).holds
            detail = {"levels": premise, "limit": conclusion}
            report.add(prop.value, not premise or conclusion, detail)
    else:
        sys, covers = instance  # type: ignore[misc]
        base = {prop: check_property(sys, prop, bounds).holds for prop in Property}
        for i, U in enumerate(covers):
            orbit_sys = build_orbit_space(sys, U).as_system()
            for prop in Property:
                conclusion = check_property(orbit_sys, prop, bounds).holds
                report.add(
                    f"{U.name or f'U{i}'}/{prop.value}",
                    not base[prop] or conclusion,
                    {"base": base[prop], "orbit_space": conclusion},
                )
    logger.info(f"{report.name}: {len(report.checks)} implications checked")
    return report.raise_on_failure()
