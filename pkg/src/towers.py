#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Inverse systems over finite chains and the towers built from covers of a finite system.

Levels are indexed 0..N and bonds[n] maps level n + 1 into level n. On a finite chain
a thread is fixed by its top element, so the inverse limit is enumerated from the top.
Pseudo-orbit levels are subshifts; they enter a tower through their language on one
window large enough to tell the orbit-space points apart.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from certificates import Report
from errors import (
    InconsistencyError,
    InsufficientWindowError,
    MalformedFactorError,
    NotApplicableError,
    RefinementError,
    SearchLimitError,
)
from finite_system import (
    Cover,
    FiniteSystem,
    ball_cover,
    diameter,
    join,
    lebesgue_number,
    refines,
    star,
)
from group_core import GroupElement
from orbit_spaces import (
    Configuration,
    CosetPseudoOrbit,
    build_orbit_space,
    build_po_space,
    check_shadowing_td,
    coset_layout,
    coset_seed_search,
    iota_names,
    is_pseudo_orbit,
    nontrivial_steps,
)
from settings import SearchBounds

logger = logging.getLogger(__name__)

Thread = tuple[str, ...]


class InverseSystem:
    """A finite chain X_0 ← X_1 ← ... ← X_N of spaces with bonding maps.

    A level is either a FiniteSystem, whose action the bonds must commute with, or a
    plain list of names. ``stationary`` marks a top level that repeats forever.
    """

    def __init__(
        self,
        levels: Sequence[FiniteSystem | Sequence[str]],
        bonds: Sequence[Mapping[str, str]],
        name: str = "",
        stationary: bool = False,
        classes: Sequence[Cover] | None = None,
    ):
        if not levels:
            raise MalformedFactorError("an inverse system needs at least one level")
        if len(bonds) != len(levels) - 1:
            raise MalformedFactorError(f"{len(levels)} levels need {len(levels) - 1} bonds")
        self.name = name
        self.stationary = stationary
        self.systems: list[FiniteSystem | None] = [
            lv if isinstance(lv, FiniteSystem) else None for lv in levels
        ]
        self.spaces: list[tuple[str, ...]] = [
            tuple(lv.states) if isinstance(lv, FiniteSystem) else tuple(lv) for lv in levels
        ]
        self.bonds: list[dict[str, str]] = [dict(b) for b in bonds]
        self.classes = list(classes) if classes is not None else None
        for n, bond in enumerate(self.bonds):
            upper, lower = self.spaces[n + 1], set(self.spaces[n])
            if set(bond) != set(upper) or not set(bond.values()) <= lower:
                raise MalformedFactorError(
                    f"bond {n + 1} -> {n} of {name or 'tower'} is not a map between the levels"
                )
            self._check_equivariant(n)

    def _check_equivariant(self, n: int) -> None:
        lower, upper = self.systems[n], self.systems[n + 1]
        if lower is None or upper is None:
            return
        bond = self.bonds[n]
        for g in lower.ctx.generators:
            for x in upper.states:
                if lower.apply(g, bond[x]) != bond[upper.apply(g, x)]:
                    raise MalformedFactorError(
                        f"bond {n + 1} -> {n} does not commute with {lower.ctx.format(g)} at {x}"
                    )

    @property
    def top(self) -> int:
        """Return N."""
        return len(self.spaces) - 1

    def bond(self, lam: int, eta: int) -> dict[str, str]:
        """Return φ_λ^η as a dict from level η to level λ."""
        if not 0 <= lam <= eta <= self.top:
            raise InsufficientWindowError(f"no bond from level {eta} to level {lam}")
        out = {x: x for x in self.spaces[eta]}
        for n in range(eta - 1, lam - 1, -1):
            out = {x: self.bonds[n][y] for x, y in out.items()}
        return out

    def image(self, lam: int, eta: int) -> frozenset[str]:
        """Return φ_λ^η(X_η)."""
        return frozenset(self.bond(lam, eta).values())

    def verify(self) -> Report:
        """Check identities and composition on every comparable triple."""
        report = Report(f"inverse-system {self.name}".strip())
        report.add(
            "identity-bonds",
            all(self.bond(n, n) == {x: x for x in self.spaces[n]} for n in range(self.top + 1)),
        )
        composed = True
        for lam, eta, gamma in itertools.combinations_with_replacement(range(self.top + 1), 3):
            outer, inner = self.bond(lam, eta), self.bond(eta, gamma)
            if self.bond(lam, gamma) != {x: outer[y] for x, y in inner.items()}:
                composed = False
        report.add("bonds-compose", composed)
        return report

    def thread_fiber(self, thread: Thread) -> frozenset[str]:
        """Return the intersection of the state classes named along a thread."""
        if self.classes is None:
            raise InsufficientWindowError("this tower carries no state classes")
        fiber: frozenset[str] | None = None
        for cover, name in zip(self.classes, thread):
            block = cover.blocks[cover.names.index(name)]
            fiber = block if fiber is None else fiber & block
        return fiber or frozenset()

    def thread_system(self) -> FiniteSystem:
        """Return the inverse limit as a finite system acting componentwise."""
        if any(s is None for s in self.systems):
            raise MalformedFactorError("every level must be a finite system")
        threads = limit_threads(self)
        ctx = self.systems[0].ctx  # type: ignore[union-attr]
        names = [threads.name(t) for t in threads.threads]
        images = {
            i: [threads.name(threads.apply(g, t)) for t in threads.threads]
            for i, g in enumerate(ctx.generators)
        }
        return FiniteSystem(ctx, names, images, name=f"lim({self.name or 'tower'})")

    def __repr__(self) -> str:
        """Represent the tower."""
        sizes = ", ".join(str(len(s)) for s in self.spaces)
        return f"InverseSystem({self.name!r}, levels [{sizes}])"


@dataclass
class MLVerdict:
    """Mittag-Leffler stabilization indices or the first level still shrinking at the top."""

    holds: bool
    stabilization: dict[int, int]
    violation: dict | None = None

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "holds": self.holds,
            "stabilization": {str(k): v for k, v in self.stabilization.items()},
            "violation": self.violation,
        }


def check_ml(T: InverseSystem) -> MLVerdict:
    """Check the Mittag-Leffler condition on a finite chain.

    η(λ) is the least η ≥ λ from which the images φ_λ^γ(X_γ) stay constant up to the top.
    Unless the top is stationary, an image that still shrinks at the top is a violation.
    """
    stabilization: dict[int, int] = {}
    violation = None
    for lam in range(T.top + 1):
        chain = [T.image(lam, eta) for eta in range(lam, T.top + 1)]
        eta = T.top
        while eta > lam and chain[eta - 1 - lam] == chain[-1]:
            eta -= 1
        stabilization[lam] = eta
        shrinking = len(chain) > 1 and chain[-2] != chain[-1]
        if violation is None and shrinking and not T.stationary:
            violation = {
                "level": lam,
                "images": [sorted(c) for c in chain],
            }
    if violation is not None:
        logger.warning(f"Mittag-Leffler fails for {T!r} at level {violation['level']}")
    else:
        logger.info(f"Mittag-Leffler holds for {T!r}: {stabilization}")
    return MLVerdict(violation is None, stabilization, violation)


@dataclass
class ThreadSpace:
    """The compatible tuples of a finite inverse system with the componentwise action."""

    tower: InverseSystem
    threads: list[Thread]

    def name(self, thread: Thread) -> str:
        """Return the state name of a thread."""
        return "|".join(thread)

    def apply(self, g: GroupElement, thread: Thread) -> Thread:
        """Return Φ*_g of a thread."""
        out = []
        for sys, x in zip(self.tower.systems, thread):
            if sys is None:
                raise MalformedFactorError("level without an action")
            out.append(sys.apply(g, x))
        return tuple(out)

    def project(self, lam: int, thread: Thread) -> str:
        """Return π_λ of a thread."""
        return thread[lam]

    def __len__(self) -> int:
        """Return the number of threads."""
        return len(self.threads)


def limit_threads(T: InverseSystem) -> ThreadSpace:
    """Enumerate the inverse limit of a finite chain; each thread is fixed by its top."""
    threads = sorted(
        tuple(T.bond(lam, T.top)[x] for lam in range(T.top + 1)) for x in T.spaces[T.top]
    )
    logger.debug(f"{T!r} has {len(threads)} threads")
    return ThreadSpace(T, threads)


def verify_thread_conjugacy(T: InverseSystem, sys: FiniteSystem) -> Report:
    """Check that thread ↦ ⋂ classes is a bijection onto the states commuting with Φ."""
    threads = limit_threads(T)
    report = Report("thread-conjugacy")
    fibers = {t: T.thread_fiber(t) for t in threads.threads}
    singles = all(len(f) == 1 for f in fibers.values())
    report.add("fibers-are-points", singles, {"threads": len(threads)})
    image = [next(iter(f)) for f in fibers.values() if len(f) == 1]
    report.add("bijection", singles and sorted(image) == sorted(sys.states))
    commutes = all(
        fibers[threads.apply(g, t)] == sys.image(g, fibers[t])
        for g in sys.ctx.generators
        for t in threads.threads
    )
    report.add("commutes-with-generators", commutes)
    return report


def _check_chain(chain: Sequence[Cover]) -> None:
    for n in range(len(chain) - 1):
        chain[n].require_partition()
        if not refines(chain[n + 1], chain[n]):
            raise RefinementError(f"chain level {n + 1} does not refine level {n}")
    if chain:
        chain[-1].require_partition()


def orbit_space_tower(sys: FiniteSystem, chain: Sequence[Cover]) -> InverseSystem:
    """Return the tower of orbit spaces O(U_0) ← O(U_1) ← ... with block-map bonds."""
    _check_chain(chain)
    spaces = [build_orbit_space(sys, U) for U in chain]
    bonds = [
        {p: lower.point_of(upper.representative(p)) for p in upper.points}
        for lower, upper in zip(spaces, spaces[1:])
    ]
    return InverseSystem(
        [o.as_system() for o in spaces],
        bonds,
        name=f"O-tower({sys.name})" if sys.name else "O-tower",
        stationary=bool(chain) and chain[-1].is_singletons,
        classes=[o.classes for o in spaces],
    )


def _pattern_name(pattern: Sequence[str]) -> str:
    return ";".join(pattern)


def pseudo_orbit_tower(
    sys: FiniteSystem,
    S: Sequence[GroupElement],
    chain: Sequence[Cover],
    window: Sequence[GroupElement],
    bounds: SearchBounds | None = None,
) -> InverseSystem:
    """Return the tower of PO_S(U_n) languages on a window, bonded by ι.

    Over ℤ the languages are exact; elsewhere they are locally admissible slices, found by
    enumerating every pattern on the window.
    """
    bounds = bounds or SearchBounds()
    _check_chain(chain)
    S = list(S) or [sys.ctx.identity]
    if not sys.ctx.is_integers:
        count = max(len(U) for U in chain) ** len(window)
        if count > bounds.max_search_nodes:
            raise SearchLimitError(f"{count} window patterns exceed the search bound")
    languages = [sorted(build_po_space(sys, U, S).language(window).patterns) for U in chain]
    bonds = []
    for n in range(len(chain) - 1):
        to_lower = iota_names(chain[n + 1], chain[n])
        bonds.append(
            {
                _pattern_name(u): _pattern_name([to_lower[b] for b in u])
                for u in languages[n + 1]
            }
        )
    return InverseSystem(
        [[_pattern_name(u) for u in lang] for lang in languages],
        bonds,
        name=f"PO-tower({sys.name})" if sys.name else "PO-tower",
        stationary=bool(chain) and chain[-1].is_singletons,
    )


@dataclass
class ConjugacyCertificate:
    """The index map p and the mutually inverse thread maps between the two towers."""

    p: tuple[int, ...]
    window: tuple[GroupElement, ...]
    j_star: dict[Thread, Thread]
    psi: dict[Thread, Thread]
    report: Report

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "p": list(self.p),
            "threads": len(self.psi),
            "psi": {"|".join(k): "|".join(v) for k, v in sorted(self.psi.items())},
            "report": self.report.to_dict(),
        }


def conjugate_towers(
    sys: FiniteSystem,
    S: Sequence[GroupElement],
    chain: Sequence[Cover],
    bounds: SearchBounds | None = None,
) -> ConjugacyCertificate:
    """Build the conjugacy between the orbit-space tower and the pseudo-orbit tower.

    p(λ) is the least μ > λ, clamped at the top, whose pseudo-orbit language maps into the
    orbit language of U_λ, made monotone. j* includes orbit threads and
    ψ({u_λ}) = {ι(u_{p(λ)})} pushes pseudo-orbit threads down.

    Raises:
        NotApplicableError: some U_λ lacks shadowing, or the chain does not end at the
            singletons; the counterexample comes from the finite shadowing decision.
    """
    bounds = bounds or SearchBounds()
    _check_chain(chain)
    if not chain or not chain[-1].is_singletons:
        raise NotApplicableError("the chain must end at the singletons")
    for lam, U in enumerate(chain):
        verdict = check_shadowing_td(sys, S, U, bounds)
        if not verdict.holds:
            raise NotApplicableError(
                f"level {lam} ({U.name or 'U'}) lacks S-shadowing",
                counterexample=verdict.counterexample,
            )
    ctx = sys.ctx
    N = len(chain) - 1
    orbits = [build_orbit_space(sys, U) for U in chain]
    radius = max(o.distinguishing_radius for o in orbits) + 1
    window = tuple(ctx.ball(None, radius))
    steps = list(S) or [ctx.identity]
    o_tower = orbit_space_tower(sys, chain)
    po_tower = pseudo_orbit_tower(sys, steps, chain, window, bounds)
    po_lang = [[tuple(u.split(";")) for u in level] for level in po_tower.spaces]
    o_lang = [o.language(window).patterns for o in orbits]

    def push(u: Sequence[str], mu: int, lam: int) -> tuple[str, ...]:
        names = iota_names(chain[mu], chain[lam])
        return tuple(names[b] for b in u)

    p: list[int] = []
    for lam in range(N + 1):
        mu = next(
            (
                m
                for m in range(lam + 1, N + 1)
                if {push(u, m, lam) for u in po_lang[m]} <= o_lang[lam]
            ),
            N,
        )
        p.append(max([mu, *p[-1:]]))
    report = Report("tower-conjugacy")
    report.add("p-monotone", all(a <= b for a, b in zip(p, p[1:])), {"p": p})
    report.add("p-above-identity", all(lam <= p[lam] for lam in range(N + 1)))
    report.add("orbit-tower-ml", check_ml(o_tower).holds)
    report.add("po-tower-ml", check_ml(po_tower).holds)
    o_threads = limit_threads(o_tower).threads
    po_threads = limit_threads(po_tower).threads

    point_by_pattern = [{o.pattern(q, window): q for q in o.points} for o in orbits]
    j_star = {
        t: tuple(_pattern_name(orbits[lam].pattern(q, window)) for lam, q in enumerate(t))
        for t in o_threads
    }
    psi: dict[Thread, Thread] = {}
    for t in po_threads:
        image = []
        for lam in range(N + 1):
            u = tuple(t[p[lam]].split(";"))
            image.append(point_by_pattern[lam].get(push(u, p[lam], lam)))
        if all(q is not None for q in image):
            psi[t] = tuple(image)  # type: ignore[arg-type]
    report.add(
        "psi-lands-in-orbit-threads",
        len(psi) == len(po_threads) and set(psi.values()) <= set(o_threads),
    )
    report.add("j-star-into-po-threads", set(j_star.values()) <= set(po_threads))
    report.add("j-star-psi-identity", all(j_star.get(psi[t]) == t for t in psi))
    report.add("psi-j-star-identity", all(psi.get(j_star[t]) == t for t in o_threads))
    report.add(
        "thread-counts", len(o_threads) == len(po_threads), [len(o_threads), len(po_threads)]
    )
    logger.info(f"Tower conjugacy for {sys.name or 'system'}: p = {p}, passed {report.passed}")
    return ConjugacyCertificate(tuple(p), window, j_star, psi, report)


def check_limit_preserves_shadowing(
    T: InverseSystem, S: Sequence[GroupElement], bounds: SearchBounds | None = None
) -> Report:
    """Check that the inverse limit of levels with shadowing has shadowing.

    Preconditions (finite levels, Mittag-Leffler, shadowing at every level) are reported
    as a precondition failure without a verdict.
    """
    bounds = bounds or SearchBounds()
    report = Report("limit-preserves-shadowing")
    if any(s is None for s in T.systems):
        report.precondition_failure = "every level must be a finite system"
        return report
    ml = check_ml(T)
    if not ml.holds:
        level = ml.violation["level"]  # type: ignore[index]
        report.precondition_failure = f"Mittag-Leffler fails at level {level}"
        return report
    for n, system in enumerate(T.systems):
        assert system is not None
        verdict = check_shadowing_td(system, S, Cover.singletons(system.states), bounds)
        if not verdict.holds:
            report.precondition_failure = f"level {n} lacks S-shadowing"
            return report
        report.add(f"level-{n}-shadowing", True, {"witness": "singletons"})
    limit = T.thread_system()
    verdict = check_shadowing_td(limit, S, Cover.singletons(limit.states), bounds)
    report.add(
        "thread-system-has-shadowing",
        verdict.holds,
        {"threads": limit.size, "explored": verdict.explored},
    )
    return report


@dataclass
class CoverSequence:
    """Nested partitions U_0 ≻ U_1 ≻ ... shrinking to the singletons."""

    base: FiniteSystem
    covers: list[Cover]
    lebesgue: list[float]
    diameters: list[float]
    stars: list[dict[str, str]]
    report: Report

    def cover(self, n: int) -> Cover:
        """Return U_n; the sequence is stationary past its last entry."""
        return self.covers[min(n, len(self.covers) - 1)]

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "covers": [list(U.names) for U in self.covers],
            "lebesgue": self.lebesgue,
            "diameters": self.diameters,
            "stars": self.stars,
        }


def _closeness_blocks(sys: FiniteSystem, rho: float) -> Cover:
    """Return the partition into chains of steps shorter than rho."""
    blocks: list[set[str]] = []
    for x in sys.states:
        touching = [b for b in blocks if any(sys.distance(x, y) < rho for y in b)]
        merged = {x}.union(*touching)
        blocks = [b for b in blocks if b not in touching] + [merged]
    ordered = sorted((sorted(b, key=sys.index) for b in blocks), key=lambda b: sys.index(b[0]))
    return Cover(sys.states, ordered)


def _shadowed_on_window(
    sys: FiniteSystem,
    S: Sequence[GroupElement],
    V: Cover,
    U: Cover,
    window: Sequence[GroupElement],
    bounds: SearchBounds,
) -> Configuration | None:
    """Return an (S, V)-pseudo-orbit on the window that no orbit U-shadows there, or None."""
    shared = [
        [bool(set(U.blocks_containing(x)) & set(U.blocks_containing(y))) for y in sys.states]
        for x in sys.states
    ]
    if V.is_singletons:
        H = sys.ctx.subgroup(nontrivial_steps(sys.ctx, S))
        reps, failing, _ = coset_seed_search(sys, H, shared, window, bounds)
        if failing is None:
            return None
        po = CosetPseudoOrbit(sys, H, tuple(zip(reps, failing)), sys.states[0])
        return po.configuration(window)
    count = sys.size ** len(window)
    if count > bounds.max_search_nodes:
        raise SearchLimitError(f"{count} window configurations exceed the search bound")
    for values in itertools.product(sys.states, repeat=len(window)):
        conf = Configuration(dict(zip(window, values)))
        if not is_pseudo_orbit(conf, sys, V, S).is_pseudo_orbit:
            continue
        if not any(
            all(shared[sys.index(sys.apply(g, z))][sys.index(x)] for g, x in zip(window, values))
            for z in sys.states
        ):
            return conf
    return None


def build_shrinking_cover_sequence(
    sys: FiniteSystem, S: Sequence[GroupElement], bounds: SearchBounds | None = None
) -> CoverSequence:
    """Build U_0 = {X} ≺ U_1 ≺ ... with diam(U_{n+1}) < λ(U_n) / 3 and shadowing witnesses.

    Each U_{n+1} is the coarsest candidate U_n ∨ {chains of steps < ρ}, over the realized
    distances ρ, that meets the diameter bound and whose pseudo-orbits are U_n-shadowed
    on a window separating O(U_n). The singletons close the sequence. W(U) records, for
    U in U_{n+2}, a block of U_n containing st(U, U_{n+1}).

    Raises:
        NotApplicableError: not even the singletons witness shadowing for some U_n.
    """
    bounds = bounds or SearchBounds()
    ctx = sys.ctx
    singletons = Cover.singletons(sys.states)
    covers = [Cover.trivial(sys.states)]
    report = Report("shrinking-cover-sequence")
    while not covers[-1].is_singletons:
        U = covers[-1]
        lam = lebesgue_number(U, sys)
        window = tuple(ctx.ball(None, build_orbit_space(sys, U).distinguishing_radius + 1))
        candidates = [join(U, _closeness_blocks(sys, rho)) for rho in reversed(sys.distances)]
        chosen = None
        for V in [*candidates, singletons]:
            if V.same_blocks(U) or diameter(V, sys) >= lam / 3:
                continue
            counterexample = _shadowed_on_window(sys, S, V, U, window, bounds)
            if counterexample is None:
                chosen = V
                break
            if V.is_singletons:
                raise NotApplicableError(
                    f"{U.name or 'U'} has no shadowing witness", counterexample=counterexample
                )
        if chosen is None:
            raise InconsistencyError("no candidate refines the cover")
        report.add(
            f"level-{len(covers)}",
            refines(chosen, U) and diameter(chosen, sys) < lam / 3,
            {"lebesgue": lam, "diameter": diameter(chosen, sys)},
        )
        covers.append(chosen)

    stars: list[dict[str, str]] = []
    for n in range(len(covers)):
        last = len(covers) - 1
        fine, middle, coarse = covers[min(n + 2, last)], covers[min(n + 1, last)], covers[n]
        choice = {}
        for name, block in zip(fine.names, fine.blocks):
            st = star(block, middle)
            W = next((w for w, b in zip(coarse.names, coarse.blocks) if st <= b), None)
            if W is None:
                raise InconsistencyError(f"st({name}) fits in no block of level {n}")
            choice[name] = W
        stars.append(choice)
    report.add("stars-fit", True, {"levels": len(stars)})
    logger.info(f"Cover sequence for {sys.name or 'system'}: {len(covers)} levels")
    return CoverSequence(
        sys,
        covers,
        [lebesgue_number(U, sys) for U in covers],
        [diameter(U, sys) for U in covers],
        stars,
        report,
    )


@dataclass
class TowerFactor:
    """The maps ω_n, the induced thread map ω* and the fibers of ψ∘ω* over the states."""

    omega: list[dict[str, str]]
    threads: int
    fibers: dict[str, list[int]]
    report: Report

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "omega": self.omega,
            "threads": self.threads,
            "fibers": self.fibers,
            "report": self.report.to_dict(),
        }


def build_tower_factor(
    sys: FiniteSystem,
    seq: CoverSequence,
    S: Sequence[GroupElement],
    bounds: SearchBounds | None = None,
) -> TowerFactor:
    """Build ω: PO_S(U_{n+2}) → O(U_n) and check that ψ∘ω* maps threads onto the states.

    Pseudo-orbit threads are the finest pseudo-orbits, one seed per coset of ⟨S⟩ meeting
    the window; ψ of an orbit thread is the intersection of its classes.

    Raises:
        InconsistencyError: some ω_n leaves the orbit language.
    """
    bounds = bounds or SearchBounds()
    ctx = sys.ctx
    M = len(seq.covers)
    steps = list(S) or [ctx.identity]
    orbits = [build_orbit_space(sys, U) for U in seq.covers]
    radius = max(o.distinguishing_radius for o in orbits) + 1
    window = tuple(ctx.ball(None, radius))
    report = Report("tower-factor")
    po_tower = pseudo_orbit_tower(sys, steps, seq.covers, window, bounds)

    for n in range(M):
        lang = [u.split(";") for u in po_tower.spaces[min(n + 2, M - 1)]]
        mapped = {tuple(seq.stars[n][b] for b in u) for u in lang}
        if not mapped <= orbits[n].language(window).patterns:
            raise InconsistencyError(f"ω_{n} maps pseudo-orbits outside O(U_{n})")
        report.add(f"omega-{n}-into-orbit-language", True, {"patterns": len(lang)})
    commute = True
    for n in range(M):
        down2 = iota_names(seq.cover(n + 2), seq.cover(n))
        down4 = iota_names(seq.cover(n + 4), seq.cover(n + 2))
        for b in seq.cover(n + 4).names:
            commute &= seq.stars[n][down4[b]] == down2[seq.stars[min(n + 2, M - 1)][b]]
    report.add("omega-commutes-with-bonds", commute)

    point_by_pattern = [{o.pattern(q, window): q for q in o.points} for o in orbits]
    blocks_top = [iota_names(Cover.singletons(sys.states), seq.cover(n + 2)) for n in range(M)]

    def omega_star(value: Callable[[GroupElement], str]) -> Thread:
        out = []
        for n in range(M):
            pattern = tuple(seq.stars[n][blocks_top[n][value(g)]] for g in window)
            q = point_by_pattern[n].get(pattern)
            if q is None:
                raise InconsistencyError(f"ω* image at level {n} is not an orbit point")
            out.append(q)
        return tuple(out)

    def psi(thread: Thread) -> frozenset[str]:
        fiber = frozenset(sys.states)
        for o, q in zip(orbits, thread):
            fiber &= o.classes.blocks[o.classes.names.index(q)]
        return fiber

    H = ctx.subgroup(nontrivial_steps(ctx, steps))
    reps, _ = coset_layout(ctx, H, window)
    count = sys.size ** len(reps)
    if count > bounds.max_search_nodes:
        raise SearchLimitError(f"{count} seed assignments exceed the search bound")
    fibers: dict[str, list[int]] = {x: [] for x in sys.states}
    images: set[Thread] = set()
    equivariant = True
    for i, seeds in enumerate(itertools.product(sys.states, repeat=len(reps))):
        po = CosetPseudoOrbit(sys, H, tuple(zip(reps, seeds)), sys.states[0])
        thread = omega_star(po.value)
        images.add(thread)
        for x in psi(thread):
            fibers[x].append(i)
        for h in ctx.generators:
            shifted = omega_star(lambda g, h=h: po.value(ctx.mul(g, h)))
            equivariant &= psi(shifted) == sys.image(h, psi(thread))

    o_threads = set(limit_threads(orbit_space_tower(sys, seq.covers)).threads)
    report.add("omega-star-onto-orbit-threads", images == o_threads, {"images": len(images)})
    report.add("psi-omega-star-onto-states", all(fibers.values()))
    report.add("psi-omega-star-equivariant", equivariant)
    disjoint = all(
        not set(fibers[x]) & set(fibers[y]) for x, y in itertools.combinations(sys.states, 2)
    )
    report.add("fibers-disjoint", disjoint)
    logger.info(f"Tower factor for {sys.name or 'system'}: {count} pseudo-orbit threads")
    return TowerFactor(seq.stars, count, fibers, report)


@dataclass
class NestedChain:
    """Nested covers V_0 ≺ V_1 ≺ ... with the descending tuple alphabets U_n."""

    base: FiniteSystem
    covers: list[Cover]
    tuples: list[list[tuple[int, ...]]]
    window: tuple[GroupElement, ...]
    report: Report = field(default_factory=lambda: Report("nested-chain"))

    def kappa(self, t: tuple[int, ...]) -> frozenset[str]:
        """Return κ(t), the last block of a tuple."""
        return self.covers[len(t) - 1].blocks[t[-1]]

    def o_prime(self, n: int) -> set[tuple[tuple[int, ...], ...]]:
        """Return the tuple patterns on the window whose κ-image has a common orbit point."""
        out: set[tuple[tuple[int, ...], ...]] = set()
        for x in self.base.states:
            options = [
                [t for t in self.tuples[n] if self.base.apply(g, x) in self.kappa(t)]
                for g in self.window
            ]
            out.update(itertools.product(*options))
        return out

    def common_points(self, pattern: Sequence[tuple[int, ...]]) -> frozenset[str]:
        """Return ⋂_g Φ_g⁻¹(κ(u_g))."""
        points = frozenset(self.base.states)
        for g, t in zip(self.window, pattern):
            points &= self.base.preimage(g, self.kappa(t))
        return points

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "covers": [[sorted(b) for b in V.blocks] for V in self.covers],
            "tuples": [len(t) for t in self.tuples],
            "report": self.report.to_dict(),
        }


def build_nested_chain(
    sys: FiniteSystem, window: Sequence[GroupElement] | None = None
) -> NestedChain:
    """Build V_{n+1} = V_n ∨ {B(x, r_{n+1})} with r_n = (diam + 1) / 2^n until singletons."""
    ctx = sys.ctx
    window = tuple(window) if window is not None else tuple(ctx.ball(None, 1))
    radius = sys.diameter + 1.0
    covers = [ball_cover(sys, radius)]
    while not covers[-1].is_singletons:
        radius /= 2
        covers.append(join(covers[-1], ball_cover(sys, radius)))
    tuples = [[(i,) for i in range(len(covers[0]))]]
    for n in range(1, len(covers)):
        tuples.append(
            [
                t + (j,)
                for t in tuples[-1]
                for j, b in enumerate(covers[n].blocks)
                if b <= covers[n - 1].blocks[t[-1]]
            ]
        )
    chain = NestedChain(sys, covers, tuples, window)
    report = chain.report
    for n in range(len(covers) - 1):
        inner = all(
            frozenset().union(*(v for v in covers[n + 1].blocks if v <= u)) == u
            for u in covers[n].blocks
        )
        report.add(f"union-of-inner-blocks-{n}", inner)
        report.add(f"refines-{n}", refines(covers[n + 1], covers[n]))
        extendable = all(any(s[: n + 1] == t for s in tuples[n + 1]) for t in tuples[n])
        report.add(f"truncation-onto-{n}", extendable)
    report.add("diameters-reach-zero", covers[-1].is_singletons, {"levels": len(covers)})
    last = len(covers) - 1
    report.add(
        "kappa-of-truncation-contains-kappa",
        all(
            chain.kappa(t[: n + 1]) >= chain.kappa(t)
            for t in tuples[last]
            for n in range(last + 1)
        ),
    )
    for n in range(last):
        report.add(
            f"iota-prime-widens-{n}",
            all(
                chain.common_points([t[: n + 1] for t in u]) >= chain.common_points(u)
                for u in chain.o_prime(n + 1)
            ),
        )
    logger.info(f"Nested chain for {sys.name or 'system'}: {len(covers)} levels")
    return chain


def check_chain_lift_surjectivity(chain: NestedChain, n: int, k: int) -> Report:
    """Lift every tuple pattern of level n to level n + k and map it back.

    Pick x in the common points, then extend each u_g by blocks of the next levels that
    lie inside the current block and contain Φ_g(x).
    """
    if n < 0 or k < 0 or n + k >= len(chain.covers):
        raise InsufficientWindowError(f"levels {n}..{n + k} are outside the chain")
    sys = chain.base
    report = Report(f"chain-lift-{n}-{k}")
    target = chain.o_prime(n + k)
    lifted = 0
    for u in sorted(chain.o_prime(n)):
        x = min(chain.common_points(u), key=sys.index)
        lift = []
        for g, t in zip(chain.window, u):
            y = sys.apply(g, x)
            for m in range(n + 1, n + k + 1):
                j = next(
                    j
                    for j, b in enumerate(chain.covers[m].blocks)
                    if y in b and b <= chain.kappa(t)
                )
                t = t + (j,)
            lift.append(t)
        if tuple(lift) in target and tuple(t[: n + 1] for t in lift) == u:
            lifted += 1
    report.add("every-pattern-lifted", lifted == len(chain.o_prime(n)), {"patterns": lifted})
    return report
