#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Orbit spaces and pseudo-orbit spaces of finite systems as explicit subshifts.

For a cover U the pseudo-orbit space PO_S(U) is the SFT over the window S ∪ {e}
whose allowed patterns P satisfy P(e) ∩ ⋂_s Φ_{s⁻¹}(P(s)) ≠ ∅. For a partition U the
orbit space O(U) is the finite set of orbit patterns; its points are the
orbit-pattern classes of the base system and the shift acts by class(x) ↦ class(Φ_g x).

Shadowing of finite systems is decided at the finest partition. Its pseudo-orbits are
exactly the configurations that follow one true ⟨S⟩-orbit on every right coset of ⟨S⟩,
so a finite search over one seed per coset meeting a window settles the question.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Protocol, Sequence

from certificates import Report
from errors import (
    AmbiguityError,
    EmptySetError,
    InconsistencyError,
    InsufficientWindowError,
    NotACoverError,
    SearchLimitError,
)
from finite_system import Cover, FiniteSystem, iota, orbit_pattern_classes
from group_core import GroupCtx, GroupElement, Subgroup
from patterns import (
    Exactness,
    LanguageSlice,
    Pattern,
    SubshiftPresentation,
    language,
    shift_apply,
)
from settings import SearchBounds

logger = logging.getLogger(__name__)


def nontrivial_steps(ctx: GroupCtx, S: Iterable[GroupElement]) -> tuple[GroupElement, ...]:
    """Return S without the identity and without repeats, in the order given."""
    out: list[GroupElement] = []
    for s in S:
        s = ctx.check(s)
        if s != ctx.identity and s not in out:
            out.append(s)
    return tuple(out)


class PseudoOrbitSpace:
    """The (S, U)-pseudo-orbit space of a finite system, an SFT over S ∪ {e}."""

    def __init__(
        self,
        base: FiniteSystem,
        cover: Cover,
        S: tuple[GroupElement, ...],
        witnesses: Mapping[tuple[int, ...], str],
    ):
        self.base = base
        self.cover = cover
        self.S = S
        self.window: tuple[GroupElement, ...] = (base.ctx.identity, *S)
        self._witnesses = dict(witnesses)
        self.allowed: frozenset[tuple[str, ...]] = frozenset(
            self._names(p) for p in self._witnesses
        )

    def _names(self, indices: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.cover.names[i] for i in indices)

    @property
    def alphabet(self) -> tuple[str, ...]:
        """Return the block names, in cover order."""
        return self.cover.names

    @cached_property
    def forbidden(self) -> frozenset[tuple[str, ...]]:
        """Return the window patterns whose intersection is empty."""
        every = itertools.product(self.alphabet, repeat=len(self.window))
        return frozenset(p for p in every if p not in self.allowed)

    @cached_property
    def presentation(self) -> SubshiftPresentation:
        """Return the SFT presentation over the block alphabet."""
        steps = ",".join(self.base.ctx.format(s) for s in self.S)
        return SubshiftPresentation.sft(
            self.base.ctx,
            self.alphabet,
            self.window,
            sorted(self.forbidden),
            name=f"PO[{steps}]({self.cover.name or 'U'})",
        )

    def __contains__(self, pattern: object) -> bool:
        """Return True for an allowed tuple of block names on the window."""
        return pattern in self.allowed

    def witness(self, pattern: Sequence[str]) -> str | None:
        """Return a state in P(e) ∩ ⋂_s Φ_{s⁻¹}(P(s)), or None for a forbidden pattern."""
        try:
            indices = tuple(self.cover.names.index(b) for b in pattern)
        except ValueError:
            return None
        return self._witnesses.get(indices)

    def language(self, A: Iterable[GroupElement] | None = None) -> LanguageSlice:
        """Return the window language, exact on S ∪ {e} and over ℤ, else an upper bound."""
        if A is None:
            return LanguageSlice(self.window, self.allowed, Exactness.EXACT)
        return language(self.presentation, A)

    def __repr__(self) -> str:
        """Represent the space."""
        return f"PseudoOrbitSpace({self.presentation.name!r}, {len(self.allowed)} allowed)"


def build_po_space(
    sys: FiniteSystem, U: Cover, S: Iterable[GroupElement]
) -> PseudoOrbitSpace:
    """Build PO_S(U) as an SFT on the window S ∪ {e}.

    A pattern is allowed exactly when some state x lies in P(e) with Φ_s(x) ∈ P(s) for
    every s, so the allowed set is the union over x of the products of the blocks
    containing x and each Φ_s(x).

    Args:
        sys: The base system.
        U: Any finite cover of the states.
        S: Finite nonempty set of group elements.

    Returns:
        PseudoOrbitSpace: The SFT together with one witness state per allowed pattern.
    """
    S = list(S)
    if not S:
        raise InsufficientWindowError("pseudo-orbit spaces need a nonempty set S")
    if set(U.states) != set(sys.states):
        raise NotACoverError(f"cover {U.name or 'U'} is not a cover of {sys.name or 'the system'}")
    steps = nontrivial_steps(sys.ctx, S)
    window = (sys.ctx.identity, *steps)
    witnesses: dict[tuple[int, ...], str] = {}
    for x in sys.states:
        options = [U.blocks_containing(sys.apply(w, x)) for w in window]
        for p in itertools.product(*options):
            witnesses.setdefault(p, x)
    space = PseudoOrbitSpace(sys, U, steps, witnesses)
    logger.debug(
        f"Built {space!r}: {len(space.allowed)} of {len(U) ** len(window)} window patterns allowed"
    )
    return space


class OrbitSpace:
    """The U-orbit space of a finite system for a partition U."""

    def __init__(self, base: FiniteSystem, partition: Cover):
        self.base = base
        self.partition = partition.require_partition()
        self.classes = orbit_pattern_classes(base, partition)

    @property
    def points(self) -> tuple[str, ...]:
        """Return the point names, one per orbit-pattern class."""
        return self.classes.names

    def point_of(self, x: str) -> str:
        """Return the point whose pattern is the orbit pattern of x."""
        return self.classes.names[self.classes.block_of(x)]

    def representative(self, point: str) -> str:
        """Return the first state of a class."""
        block = self.classes.blocks[self.classes.names.index(point)]
        return next(x for x in self.base.states if x in block)

    def shift(self, g: GroupElement, point: str) -> str:
        """Return σ_g of a point."""
        return self.point_of(self.base.apply(g, self.representative(point)))

    def pattern(self, point: str, window: Sequence[GroupElement]) -> tuple[str, ...]:
        """Return the blocks of a point on a window."""
        z = self.representative(point)
        names = self.partition.names
        return tuple(names[self.partition.block_of(self.base.apply(g, z))] for g in window)

    def language(self, window: Sequence[GroupElement]) -> LanguageSlice:
        """Return the exact language on a window."""
        window = tuple(window)
        patterns = frozenset(self.pattern(p, window) for p in self.points)
        return LanguageSlice(window, patterns, Exactness.EXACT)

    @cached_property
    def distinguishing_radius(self) -> int:
        """Return the least radius whose ball separates all points."""
        radius = 0
        while True:
            ball = self.base.ctx.ball(None, radius)
            if len({self.pattern(p, ball) for p in self.points}) == len(self.points):
                return radius
            radius += 1

    def as_system(self) -> FiniteSystem:
        """Return the orbit space as a finite system on its points."""
        ctx = self.base.ctx
        images = {
            i: [self.shift(s, p) for p in self.points] for i, s in enumerate(ctx.generators)
        }
        return FiniteSystem(ctx, self.points, images, name=f"O({self.partition.name or 'U'})")

    def __len__(self) -> int:
        """Return the number of points."""
        return len(self.points)

    def __repr__(self) -> str:
        """Represent the space."""
        return f"OrbitSpace({self.partition.name or 'U'}, {len(self.points)} points)"


def build_orbit_space(sys: FiniteSystem, U: Cover) -> OrbitSpace:
    """Build O(U) for a partition U."""
    space = OrbitSpace(sys, U)
    logger.debug(f"Built {space!r}")
    return space


class PhaseSpace(Protocol):
    """A space whose points can be moved by group elements."""

    ctx: GroupCtx

    def apply(self, g: GroupElement, x):
        """Return Φ_g(x)."""


class BlockCover(Protocol):
    """A cover that reports which blocks contain a point."""

    names: tuple[str, ...]

    def blocks_containing(self, x) -> tuple[int, ...]:
        """Return the indices of blocks containing x."""


class FullShiftSpace:
    """The full shift over a group; a finite pattern stands for the points of its cylinder."""

    def __init__(self, ctx: GroupCtx, alphabet: Sequence[str]):
        self.ctx = ctx
        self.alphabet = tuple(alphabet)

    def apply(self, g: GroupElement, x: Pattern) -> Pattern:
        """Return σ_g(x)."""
        return shift_apply(x, g, self.ctx)


class CylinderCover:
    """A cover of a full shift by unions of cylinders over one window."""

    def __init__(
        self,
        alphabet: Sequence[str],
        window: Sequence[GroupElement],
        blocks: Sequence[Iterable[Sequence[str]]],
        names: Sequence[str],
    ):
        self.window = tuple(window)
        self.blocks = tuple(frozenset(tuple(p) for p in b) for b in blocks)
        self.names = tuple(names)
        if len(self.names) != len(self.blocks) or any(not b for b in self.blocks):
            raise NotACoverError("every cylinder block needs a name and at least one pattern")
        missing = [
            p
            for p in itertools.product(alphabet, repeat=len(self.window))
            if not any(p in b for b in self.blocks)
        ]
        if missing:
            raise NotACoverError(f"window patterns {missing} lie in no block")

    def blocks_containing(self, x: Pattern) -> tuple[int, ...]:
        """Return the blocks whose cylinders contain x."""
        try:
            values = x.values(self.window)
        except KeyError:
            raise InsufficientWindowError(
                f"pattern on {list(x.window)} does not cover the cylinder window"
            ) from None
        return tuple(i for i, b in enumerate(self.blocks) if values in b)


@dataclass(frozen=True)
class Configuration:
    """A finitely presented sequence {x_g}.

    Values come from ``cells``; when ``periods`` is set the cells fill one period box
    of a lattice and repeat, and ``defects`` override single sites.
    """

    cells: Mapping[GroupElement, Hashable]
    periods: tuple[int, ...] | None = None
    defects: Mapping[GroupElement, Hashable] = field(default_factory=dict)

    def value(self, g: GroupElement) -> Hashable | None:
        """Return x_g, or None where the presentation says nothing."""
        if g in self.defects:
            return self.defects[g]
        if self.periods is not None:
            return self.cells.get(tuple(v % p for v, p in zip(g, self.periods)))
        return self.cells.get(g)

    def sites(self, ctx: GroupCtx, S: Sequence[GroupElement]) -> list[GroupElement]:
        """Return the sites whose constraints are fully determined."""
        if self.periods is not None:
            if not ctx.is_lattice or len(self.periods) != ctx.rank:
                raise InsufficientWindowError(f"periods {self.periods} do not fit {ctx}")
            box = set(itertools.product(*(range(p) for p in self.periods)))
            if set(self.cells) != box:
                raise InsufficientWindowError("periodic cells must fill one period box")
            extra = {ctx.mul(s, d) for d in self.defects for s in S} | set(self.defects)
            return sorted(box | extra)
        candidates = sorted(set(self.cells) | set(self.defects))
        return [
            h
            for h in candidates
            if all(self.value(ctx.mul(ctx.inv(s), h)) is not None for s in S)
        ]


@dataclass
class PseudoOrbitVerdict:
    """Outcome of testing a configuration against the (S, U)-pseudo-orbit condition."""

    is_pseudo_orbit: bool
    pattern: dict[GroupElement, str]
    offending: tuple[GroupElement, ...] = ()
    pairwise_ok: bool = True
    sites: int = 0


def is_pseudo_orbit(
    seq: Configuration,
    sys: PhaseSpace,
    U: BlockCover,
    S: Iterable[GroupElement],
) -> PseudoOrbitVerdict:
    """Decide whether a configuration is an (S, U)-pseudo-orbit.

    At every site h one block must hold x_h together with Φ_s(x_{s⁻¹h}) for all s in
    S. Each pair fitting into some block is not enough, since the blocks chosen for
    different s can disagree; ``pairwise_ok`` reports whether that weaker test passes.

    Args:
        seq: The configuration.
        sys: A finite system, or a full shift whose points are patterns.
        U: A cover of the same space.
        S: Finite set of group elements.

    Returns:
        PseudoOrbitVerdict: The chosen block per site, or the offending sites.
    """
    ctx = sys.ctx
    S = [ctx.check(s) for s in S]
    sites = seq.sites(ctx, S)
    if not sites:
        raise InsufficientWindowError("no site of the configuration has all its constraints")
    pattern: dict[GroupElement, str] = {}
    offending = []
    pairwise_ok = True
    for h in sites:
        own = set(U.blocks_containing(seq.value(h)))
        constraint_sets = [
            set(U.blocks_containing(sys.apply(s, seq.value(ctx.mul(ctx.inv(s), h))))) for s in S
        ]
        if any(not (own & c) for c in constraint_sets):
            pairwise_ok = False
        common = own.intersection(*constraint_sets)
        if common:
            pattern[h] = U.names[min(common)]
        else:
            offending.append(h)
    if offending:
        logger.info(
            f"Not a pseudo-orbit: no common block at {len(offending)} of {len(sites)} sites"
        )
    return PseudoOrbitVerdict(not offending, pattern, tuple(offending), pairwise_ok, len(sites))


@dataclass
class CosetPseudoOrbit:
    """A pseudo-orbit at the finest partition, given by one seed per right coset of ⟨S⟩.

    On the coset of a listed representative r the sequence is x_{kr} = Φ_k(seed); every
    other coset follows the true orbit x_g = Φ_g(default).
    """

    base: FiniteSystem
    subgroup: Subgroup
    seeds: tuple[tuple[GroupElement, str], ...]
    default: str

    def value(self, g: GroupElement) -> str:
        """Return x_g."""
        ctx = self.base.ctx
        for r, x in self.seeds:
            if self.subgroup.same_right_coset(g, r):
                return self.base.apply(ctx.mul(g, ctx.inv(r)), x)
        return self.base.apply(g, self.default)

    def configuration(self, window: Iterable[GroupElement]) -> Configuration:
        """Return the values on a window."""
        return Configuration({g: self.value(g) for g in window})

    def to_dict(self, window: Iterable[GroupElement] = ()) -> dict:
        """Return a JSON-ready view."""
        fmt = self.base.ctx.format
        return {
            "S": [fmt(s) for s in self.subgroup.gens],
            "seeds": [{"coset_of": fmt(r), "state": x} for r, x in self.seeds],
            "default": self.default,
            "values": {fmt(g): self.value(g) for g in window},
        }


@dataclass
class ShadowingVerdict:
    """Outcome of the finite shadowing decision for one partition U."""

    holds: bool
    witness: Cover | None
    counterexample: CosetPseudoOrbit | None
    window: tuple[GroupElement, ...]
    report: Report
    explored: int = 0

    def image(self, U: Cover) -> dict[GroupElement, str]:
        """Return the U-blocks of the counterexample on the window."""
        if self.counterexample is None:
            return {}
        return {
            g: U.names[U.block_of(self.counterexample.value(g))] for g in self.window
        }


def coset_layout(
    ctx: GroupCtx, H: Subgroup, window: Sequence[GroupElement]
) -> tuple[list[GroupElement], list[list[tuple[GroupElement, GroupElement]]]]:
    """Group window cells into right cosets Hr; each cell g is stored as (g, g·r⁻¹)."""
    reps: list[GroupElement] = []
    members: list[list[tuple[GroupElement, GroupElement]]] = []
    for g in window:
        for i, r in enumerate(reps):
            if H.same_right_coset(g, r):
                members[i].append((g, ctx.mul(g, ctx.inv(r))))
                break
        else:
            reps.append(g)
            members.append([(g, ctx.identity)])
    return reps, members


def coset_seed_search(
    sys: FiniteSystem,
    H: Subgroup,
    related: Sequence[Sequence[bool]],
    window: Sequence[GroupElement],
    bounds: SearchBounds,
) -> tuple[list[GroupElement], list[str] | None, int]:
    """Search for seeds, one per coset of H on the window, that no single orbit tracks.

    A state z tracks the configuration x on the window when ``related[i][j]`` holds for
    i = Φ_g(z) and j = x_g at every cell g. Exhausted (coset, alive) pairs are memoized.

    Returns:
        The coset representatives, the failing seeds (``None`` when every assignment is
        tracked) and the number of explored nodes.
    """
    ctx = sys.ctx
    reps, members = coset_layout(ctx, H, window)
    n = sys.size
    images = {g: [sys.index(sys.apply(g, x)) for x in sys.states] for g in window}
    survivors: list[list[frozenset[int]]] = []
    for cells in members:
        row = []
        for x in sys.states:
            orbit = [(images[g], sys.index(sys.apply(k, x))) for g, k in cells]
            row.append(frozenset(z for z in range(n) if all(related[im[z]][j] for im, j in orbit)))
        survivors.append(row)

    exhausted: set[tuple[int, frozenset[int]]] = set()
    explored = 0

    def search(i: int, alive: frozenset[int], path: list[str]) -> list[str] | None:
        nonlocal explored
        if i == len(reps) or (i, alive) in exhausted:
            return None
        for j, x in enumerate(sys.states):
            explored += 1
            if explored > bounds.max_search_nodes:
                logger.warning(f"Seed search stopped after {bounds.max_search_nodes} nodes")
                raise SearchLimitError(
                    f"shadowing search exceeded {bounds.max_search_nodes} nodes"
                )
            nxt = alive & survivors[i][j]
            if not nxt:
                return path + [x]
            found = search(i + 1, nxt, path + [x])
            if found is not None:
                return found
        exhausted.add((i, alive))
        return None

    failing = search(0, frozenset(range(n)), [])
    return reps, failing, explored


def check_shadowing_td(
    sys: FiniteSystem,
    S: Iterable[GroupElement],
    U: Cover,
    bounds: SearchBounds | None = None,
) -> ShadowingVerdict:
    """Decide whether some V ≻ U has ι(PO_S(W)) = O(U) for every W ≻ V.

    Success at one V passes to every finer W by composing block maps, and the finest
    partition refines every V, so the decision is made at the singletons. A U-pattern
    that looks like a point of O(U) on every translate of the ball of radius R + 1,
    where radius R separates the points, is a point of O(U). The search assigns seeds
    coset by coset and keeps the states whose orbit still matches the image in U; a
    branch where none remain is a counterexample.

    Args:
        sys: The base system.
        S: Finite set of group elements.
        U: A partition of the states.
        bounds: Search bounds; ``max_search_nodes`` caps the seed search.

    Returns:
        ShadowingVerdict: The singletons with a report, or a coset pseudo-orbit whose
        image leaves the language of O(U).
    """
    bounds = bounds or SearchBounds()
    ctx = sys.ctx
    U.require_partition()
    S = nontrivial_steps(ctx, S)
    orbit = build_orbit_space(sys, U)
    radius = orbit.distinguishing_radius + 1
    window = tuple(ctx.ball(None, radius))
    H = ctx.subgroup(S)
    blocks = [U.block_of(x) for x in sys.states]
    related = [[bi == bj for bj in blocks] for bi in blocks]
    logger.debug(f"Shadowing search on {len(window)} cells, {len(orbit)} orbit points")
    reps, failing, explored = coset_seed_search(sys, H, related, window, bounds)
    singletons = Cover.singletons(sys.states)
    report = Report("finite-shadowing")
    if failing is not None:
        counterexample = CosetPseudoOrbit(
            sys, H, tuple(zip(reps, failing)), default=sys.states[0]
        )
        image = tuple(U.names[U.block_of(counterexample.value(g))] for g in window)
        report.add(
            "image-outside-orbit-language",
            image not in orbit.language(window),
            {"window_radius": radius, "cosets": len(reps)},
        )
        logger.info(f"S-shadowing fails for {U.name or 'U'}: {len(failing)} seeds suffice")
        return ShadowingVerdict(False, None, counterexample, window, report, explored)

    po = build_po_space(sys, singletons, S or [ctx.identity])
    to_u = iota(singletons, U, strict=True)
    orbit_slice = orbit.language(po.window)
    mapped = {tuple(U.names[to_u[singletons.names.index(b)]] for b in p) for p in po.allowed}
    report.add("po-window-patterns-map-into-orbit-language", mapped <= orbit_slice.patterns)
    report.add("coset-search-exhausted", True, {"window_radius": radius, "explored": explored})
    logger.info(f"S-shadowing holds for {U.name or 'U'} with V = singletons")
    return ShadowingVerdict(True, singletons, None, window, report, explored)


def iota_names(V: Cover, U: Cover) -> dict[str, str]:
    """Return ι as a map of block names."""
    indices = iota(V, U, strict=True)
    return {V.names[j]: U.names[i] for j, i in enumerate(indices)}


def verify_block_map_identities(
    sys: FiniteSystem, U: Cover, V: Cover, S: Iterable[GroupElement]
) -> Report:
    """Check that ι commutes with the shift and sandwiches PO_S(V) between O(U) and PO_S(U).

    Checked identities, all exact on these finite subshifts:
    ι∘σ_g = σ_g∘ι on the points of O(V) and on PO_S(V) window patterns,
    ι(O(V)) = O(U), and O(U) ⊆ ι(PO_S(V)) ⊆ PO_S(U) on the window S ∪ {e}.
    """
    U.require_partition()
    V.require_partition()
    to_u = iota_names(V, U)
    ctx = sys.ctx
    report = Report(f"block-map-identities[{U.name or 'U'}<-{V.name or 'V'}]")
    orbit_u, orbit_v = build_orbit_space(sys, U), build_orbit_space(sys, V)
    po_u, po_v = build_po_space(sys, U, S), build_po_space(sys, V, S)

    def iota_point(p: str) -> str:
        return orbit_u.point_of(orbit_v.representative(p))

    commuting = all(
        iota_point(orbit_v.shift(g, p)) == orbit_u.shift(g, iota_point(p))
        for p in orbit_v.points
        for g in ctx.generators
    )
    report.add("shift-commutes-on-orbit-points", commuting)

    window = po_v.window
    shifted_ok = True
    for p in po_v.allowed:
        cells = Pattern(dict(zip(window, p)))
        for g in ctx.generators:
            left = shift_apply(Pattern({h: to_u[b] for h, b in cells.items()}), g, ctx)
            moved = shift_apply(cells, g, ctx)
            right = Pattern({h: to_u[b] for h, b in moved.items()})
            shifted_ok &= left == right
    report.add("shift-commutes-on-po-patterns", shifted_ok)

    ball = ctx.ball(None, max(orbit_u.distinguishing_radius, orbit_v.distinguishing_radius) + 1)
    image_points = {iota_point(p) for p in orbit_v.points}
    image_slice = {tuple(to_u[b] for b in orbit_v.pattern(p, ball)) for p in orbit_v.points}
    report.add(
        "iota-maps-orbit-space-onto-orbit-space",
        image_points == set(orbit_u.points) and image_slice == orbit_u.language(ball).patterns,
        {"points": len(orbit_u)},
    )

    o_u = orbit_u.language(po_u.window).patterns
    image_po = {tuple(to_u[b] for b in p) for p in po_v.allowed}
    report.add("orbit-space-inside-image-of-po", o_u <= image_po, {"orbit": len(o_u)})
    report.add("image-of-po-inside-po", image_po <= po_u.allowed, {"image": len(image_po)})
    logger.info(f"{report.name}: {'passed' if report.passed else 'failed'}")
    return report


@dataclass
class Reconstruction:
    """A point recovered from block picks, with its images."""

    point: str
    images: dict[GroupElement, str]
    candidates: dict[GroupElement, frozenset[str]]


def reconstruct(
    sys: FiniteSystem,
    chain: Sequence[Cover],
    picks: Sequence[str],
    elements: Iterable[GroupElement] | None = None,
) -> Reconstruction:
    """Recover x from one block per partition, and Φ_g(x) from the orbit spaces alone.

    For each g the image is the intersection over the chain of the blocks at e of
    σ_g(O(U) ∩ π_e⁻¹(U(x))); the result is checked against direct application.

    Args:
        sys: The base system.
        chain: Partitions, cofinal when they include the singletons.
        picks: Block names, one per partition, each containing the point.
        elements: Group elements whose images are requested; defaults to the generators.

    Returns:
        Reconstruction: The point and its images.
    """
    if len(chain) != len(picks) or not chain:
        raise InsufficientWindowError("reconstruction needs exactly one pick per partition")
    ctx = sys.ctx
    survivors = set(sys.states)
    for U, pick in zip(chain, picks):
        U.require_partition()
        survivors &= U.blocks[U.names.index(pick)]
    if not survivors:
        raise EmptySetError(f"picks {list(picks)} have empty intersection")
    if len(survivors) > 1:
        remaining = [x for x in sys.states if x in survivors]
        raise AmbiguityError(f"picks do not separate {remaining}", remaining)
    (x,) = survivors

    elements = list(ctx.generators if elements is None else elements)
    spaces = [build_orbit_space(sys, U) for U in chain]
    images: dict[GroupElement, str] = {}
    candidates: dict[GroupElement, frozenset[str]] = {}
    for g in elements:
        g = ctx.check(g)
        current = set(sys.states)
        for U, pick, space in zip(chain, picks, spaces):
            block = U.blocks[U.names.index(pick)]
            starts = {space.point_of(y) for y in block}
            heads = {space.pattern(space.shift(g, p), [ctx.identity])[0] for p in starts}
            current &= set().union(*(U.blocks[U.names.index(b)] for b in heads))
        candidates[g] = frozenset(current)
        if len(current) != 1:
            remaining = [y for y in sys.states if y in current]
            raise AmbiguityError(f"image under {ctx.format(g)} is not determined", remaining)
        (image,) = current
        if image != sys.apply(g, x):
            raise InconsistencyError(
                f"reconstructed image {image} of {x} under {ctx.format(g)} "
                f"differs from {sys.apply(g, x)}"
            )
        images[g] = image
    logger.debug(f"Reconstructed {x} with {len(images)} images")
    return Reconstruction(x, images, candidates)
