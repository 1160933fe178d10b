#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Shadowing for ℤ-subshifts and the metric/cover comparison on finite systems.

Pseudo-orbits of a ℤ-subshift are given by eventually periodic carriers switched at
finitely many sites: x_n = σ_n(c_k) for n in the k-th segment. Depth m means agreement
on [-m, m]. A point z shadows at ε-depth e iff z(n + i) = x_n(i) for |i| ≤ e, so the
only possible shadowing point is the diagonal z(j) = x_j(0).
"""

import bisect
import itertools
import logging
from dataclasses import dataclass, field
from math import lcm
from typing import Callable, Iterable, Sequence

import networkx as nx

from certificates import Report
from errors import (
    InconsistencyError,
    MalformedPresentationError,
    NoMetricError,
    NotApplicableError,
    PrecisionError,
    SearchLimitError,
    UnsupportedGroupError,
)
from finite_system import Cover, FiniteSystem, ball_cover, diameter, lebesgue_number
from group_core import GroupElement
from orbit_spaces import (
    build_orbit_space,
    check_shadowing_td,
    coset_seed_search,
    nontrivial_steps,
)
from patterns import (
    SftDecision,
    SubshiftPresentation,
    Symbol,
    TransferGraph,
    Word,
    sofic_is_sft,
)
from settings import SearchBounds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Carrier:
    """An eventually periodic point ...LLL M RRR... with M[origin] at position 0."""

    left: Word
    middle: Word
    right: Word
    origin: int = 0

    def __post_init__(self):
        if not self.left or not self.right:
            raise MalformedPresentationError("carrier periods must be nonempty words")

    def symbol(self, i: int) -> Symbol:
        """Return the symbol at position i."""
        j = i + self.origin
        if j < 0:
            return self.left[j % len(self.left)]
        if j < len(self.middle):
            return self.middle[j]
        return self.right[(j - len(self.middle)) % len(self.right)]

    def word(self, lo: int, hi: int) -> Word:
        """Return the symbols at positions lo..hi-1."""
        return tuple(self.symbol(i) for i in range(lo, hi))

    @property
    def span(self) -> tuple[int, int]:
        """Return the positions where the explicit middle starts and ends."""
        return -self.origin, len(self.middle) - self.origin

    @property
    def period(self) -> int:
        """Return lcm of the two tail periods."""
        return lcm(len(self.left), len(self.right))

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "left": "".join(self.left),
            "middle": "".join(self.middle),
            "right": "".join(self.right),
            "origin": self.origin,
        }

    def __str__(self) -> str:
        """Render as (L)^ M (R)^ @origin."""
        left, middle, right = ("".join(w) for w in (self.left, self.middle, self.right))
        return f"({left})^ {middle or '-'} ({right})^ @{self.origin}"


def carrier_in(graph: TransferGraph, c: Carrier) -> bool:
    """Return True if the carrier is a point of the subshift presented by graph.

    The sets reached by reading L^n from every vertex decrease in n; their limit holds
    the endpoints of left-infinite paths. The right tail is accepted iff reading R keeps
    a nonempty set until the sequence of sets repeats.
    """
    states = graph.all_states
    while True:
        nxt = graph.follow(c.left, states)
        if not nxt:
            return False
        if nxt == states:
            break
        states = nxt
    states = graph.follow(c.middle, states)
    seen: set[frozenset[int]] = set()
    while states and states not in seen:
        seen.add(states)
        states = graph.follow(c.right, states)
    return bool(states)


def _walk(step: Callable[[int], tuple[Symbol, int]], v: int) -> tuple[Word, Word]:
    """Follow step from v until a vertex repeats; return (labels before the cycle, cycle)."""
    seen = {v: 0}
    labels: list[Symbol] = []
    while True:
        a, v = step(v)
        labels.append(a)
        if v in seen:
            k = seen[v]
            return tuple(labels[:k]), tuple(labels[k:])
        seen[v] = len(labels)


def point_through(graph: TransferGraph, word: Sequence[Symbol], start: int = 0) -> Carrier:
    """Return an eventually periodic point of the subshift reading word at start.

    The word is read along the least path in vertex order; both tails follow the first
    edge out of (into) each vertex until a vertex repeats.
    """
    word = tuple(word)
    reach = [graph.all_states]
    for a in reversed(word):
        reach.append(
            frozenset(v for v in graph.all_states if graph.step(frozenset({v}), a) & reach[-1])
        )
    reach.reverse()
    if not reach[0]:
        raise MalformedPresentationError(f"word {''.join(word)} is not in the language")
    path = [min(reach[0])]
    for i, a in enumerate(word):
        path.append(min(graph.step(frozenset({path[-1]}), a) & reach[i + 1]))

    lpath, lcycle = _walk(lambda v: graph.predecessors(v)[0], path[0])
    rpath, rcycle = _walk(lambda v: graph.successors(v)[0], path[-1])
    return Carrier(
        left=lcycle[::-1],
        middle=lpath[::-1] + word + rpath,
        right=rcycle,
        origin=len(lpath) - start,
    )


def _spliced(
    first: Carrier, last: Carrier, lo: int, hi: int, symbol: Callable[[int], Symbol]
) -> Carrier:
    """Return the carrier equal to symbol on [lo, hi), first below lo and last from hi."""
    n = len(first.left)
    left = tuple(first.left[(m + lo + first.origin) % n] for m in range(n))
    shift = hi + last.origin - len(last.middle)
    right = tuple(last.right[(m + shift) % len(last.right)] for m in range(len(last.right)))
    return Carrier(left, tuple(symbol(j) for j in range(lo, hi)), right, origin=-lo)


@dataclass(frozen=True)
class ZPseudoOrbit:
    """A σ-pseudo-orbit of a ℤ-subshift: x_n = σ_n(carriers[k]) between switches."""

    carriers: tuple[Carrier, ...]
    switches: tuple[int, ...]
    depth: int
    name: str = ""

    def __post_init__(self):
        if not self.carriers:
            raise MalformedPresentationError("a pseudo-orbit needs at least one carrier")
        if len(self.switches) != len(self.carriers) - 1:
            raise MalformedPresentationError(
                f"{len(self.carriers)} carriers need {len(self.carriers) - 1} switch sites, "
                f"got {len(self.switches)}"
            )
        if list(self.switches) != sorted(set(self.switches)):
            raise MalformedPresentationError("switch sites must be strictly increasing")
        if self.depth < 0:
            raise MalformedPresentationError(f"depth must be non-negative, got {self.depth}")

    def carrier_at(self, n: int) -> Carrier:
        """Return the carrier of the segment holding time n."""
        return self.carriers[bisect.bisect_right(self.switches, n)]

    def entry(self, n: int, i: int) -> Symbol:
        """Return x_n(i)."""
        return self.carrier_at(n).symbol(n + i)

    def agreement(self, k: int, cap: int) -> int:
        """Return the largest m ≤ cap with carriers k, k+1 equal on [t-m, t+m], or -1."""
        t = self.switches[k]
        a, b = self.carriers[k], self.carriers[k + 1]
        if a.symbol(t) != b.symbol(t):
            return -1
        m = 0
        while m < cap and all(a.symbol(i) == b.symbol(i) for i in (t - m - 1, t + m + 1)):
            m += 1
        return m

    def defects(self) -> list[int]:
        """Return the switch sites where the carriers agree below the stated depth."""
        return [
            t for k, t in enumerate(self.switches) if self.agreement(k, self.depth) < self.depth
        ]

    def is_valid(self) -> bool:
        """Return True if every switch respects the stated depth."""
        return not self.defects()

    def diagonal(self) -> Carrier:
        """Return the point z(j) = x_j(0)."""
        first, last = self.carriers[0], self.carriers[-1]
        lo = min([first.span[0], *self.switches[:1]])
        hi = max([last.span[1], *self.switches[-1:]]) + 1
        return _spliced(first, last, lo, hi, lambda j: self.carrier_at(j).symbol(j))

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "name": self.name,
            "depth": self.depth,
            "carriers": [c.to_dict() for c in self.carriers],
            "switches": list(self.switches),
        }


def splice_pseudo_orbit(
    X: SubshiftPresentation,
    left_word: Sequence[Symbol],
    right_word: Sequence[Symbol],
    overlap: int,
    name: str = "",
) -> ZPseudoOrbit:
    """Return the pseudo-orbit that reads left_word and then right_word across their overlap.

    The switch sits in the middle of the overlap, so the depth is (overlap - 1) // 2.
    """
    left_word, right_word = tuple(left_word), tuple(right_word)
    if overlap < 1 or left_word[len(left_word) - overlap :] != right_word[:overlap]:
        raise MalformedPresentationError(f"words do not overlap on {overlap} symbols")
    graph = X.transfer_graph
    start = len(left_word) - overlap
    p = point_through(graph, left_word, 0)
    q = point_through(graph, right_word, start)
    return ZPseudoOrbit((p, q), (start + overlap // 2,), (overlap - 1) // 2, name)


def mismatches(po: ZPseudoOrbit, z: Carrier, eps_depth: int) -> list[int]:
    """Return the times n at which z(n + i) differs from x_n(i) for some |i| ≤ eps_depth.

    Away from the switches x_n is a shift of one carrier, so only times within
    eps_depth + 1 of a switch are compared, plus one full period of each carrier.
    """
    times: set[int] = set()
    for t in po.switches:
        times.update(range(t - eps_depth - 1, t + eps_depth + 1))
    for c in (po.carriers[0], po.carriers[-1]):
        lo, hi = c.span
        times.update(range(lo - c.period - eps_depth, hi + c.period + eps_depth))
    return sorted(
        n
        for n in times
        if any(z.symbol(n + i) != po.entry(n, i) for i in range(-eps_depth, eps_depth + 1))
    )


def has_shadow(X: SubshiftPresentation, po: ZPseudoOrbit, eps_depth: int) -> bool:
    """Return True if some point of X shadows po at eps_depth."""
    z = po.diagonal()
    return carrier_in(X.transfer_graph, z) and not mismatches(po, z, eps_depth)


def shadow_candidates(
    X: SubshiftPresentation, po: ZPseudoOrbit, eps_depth: int, margin: int
) -> list[Word]:
    """Enumerate the words on the switch region that meet every ε-constraint and lie in L(X).

    The region is [first switch - margin, last switch + margin]; position j must carry
    x_n(j - n) for every n with |j - n| ≤ eps_depth.
    """
    graph = X.transfer_graph
    if po.switches:
        lo, hi = po.switches[0] - margin, po.switches[-1] + margin
    else:
        lo, hi = -margin, margin
    words: list[Word] = [()]
    for j in range(lo, hi + 1):
        times = range(j - eps_depth, j + eps_depth + 1)
        allowed = [a for a in X.alphabet if all(po.entry(n, j - n) == a for n in times)]
        words = [w + (a,) for w in words for a in allowed if graph.accepts(w + (a,))]
    return words


@dataclass
class ShadowingDecision:
    """Outcome of the shadowing decision for a ℤ-subshift."""

    holds: bool
    sft: SftDecision
    witnesses: tuple[ZPseudoOrbit, ...] = ()

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "holds": self.holds,
            "window": self.sft.window,
            "forbidden": ["".join(w) for w in self.sft.forbidden],
            "word_bound": self.sft.word_bound,
            "witnesses": [po.to_dict() for po in self.witnesses],
        }


def _require_shift_step(X: SubshiftPresentation, S: Iterable[GroupElement] | None) -> None:
    if not X.ctx.is_integers:
        raise UnsupportedGroupError(f"subshift shadowing is decided over Z only, got {X.ctx}")
    if S is not None and set(nontrivial_steps(X.ctx, S)) != {(1,)}:
        raise UnsupportedGroupError("subshift shadowing is decided for S = {+1}")


def shadowing_decide(
    X: SubshiftPresentation,
    S: Iterable[GroupElement] | None = None,
    bounds: SearchBounds | None = None,
) -> ShadowingDecision:
    """Decide S-shadowing of a ℤ-subshift: it holds iff the subshift is of finite type.

    When it fails, every minimal forbidden word a·u·b up to ``word_bound`` yields the
    splice of a point reading a·u with a point reading u·b. Its depth is (|u| - 1) // 2 and
    the only candidate shadowing point contains a·u·b, so no point of X shadows it.
    """
    bounds = bounds or SearchBounds()
    _require_shift_step(X, S)
    decision = sofic_is_sft(X, bounds.word_bound)
    if decision.is_sft:
        name = X.name or "<anonymous>"
        logger.info(f"Subshift {name} has shadowing, SFT window {decision.window}")
        return ShadowingDecision(True, decision)

    witnesses = tuple(
        splice_pseudo_orbit(X, w.left, w.right, len(w.word) - 2, name="".join(w.word))
        for w in decision.witnesses
        if len(w.word) >= 3
    )
    deepest = max((p.depth for p in witnesses), default=0)
    logger.info(
        f"Subshift {X.name or '<anonymous>'} has no shadowing; "
        f"{len(witnesses)} splice witnesses up to depth {deepest}"
    )
    return ShadowingDecision(False, decision, witnesses)


@dataclass
class TraceResult:
    """The shadowing point of a pseudo-orbit together with the depths it was traced at.

    ``rerouted`` maps each defect site whose splice left X to the patch written over
    [site - w, site + w); ``mismatches`` lists the times near defects where the point
    misses the pseudo-orbit.
    """

    point: Carrier
    eps_depth: int
    required_depth: int
    window: int
    defects: tuple[int, ...] = ()
    rerouted: dict[int, Word] = field(default_factory=dict)
    mismatches: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {
            "point": self.point.to_dict(),
            "eps_depth": self.eps_depth,
            "required_depth": self.required_depth,
            "sft_window": self.window,
            "defects": list(self.defects),
            "rerouted": {str(t): "".join(w) for t, w in self.rerouted.items()},
            "mismatches": list(self.mismatches),
        }


def reroute(
    X: SubshiftPresentation,
    z: Carrier,
    site: int,
    window: int,
    bounds: SearchBounds | None = None,
) -> tuple[Carrier, Word] | None:
    """Return z with the least patch on [site - w, site + w) that makes it locally legal.

    Patches are tried by the number of symbols they change, then in word order; one is
    accepted when the word on [site - 2w, site + 2w) lies in L(X). Returns None when no
    patch of that width works.
    """
    bounds = bounds or SearchBounds()
    graph = X.transfer_graph
    lo, hi = site - window, site + window
    count = len(X.alphabet) ** (hi - lo)
    if count > bounds.max_search_nodes:
        raise SearchLimitError(f"{count} patches at site {site} exceed the search bound")
    original = z.word(lo, hi)
    patches = sorted(
        itertools.product(sorted(X.alphabet), repeat=hi - lo),
        key=lambda w: (sum(a != b for a, b in zip(w, original)), w),
    )
    first, last = min(lo, z.span[0]), max(hi, z.span[1])
    for patch in patches:
        candidate = _spliced(
            z, z, first, last, lambda j: patch[j - lo] if lo <= j < hi else z.symbol(j)
        )
        if graph.accepts(candidate.word(site - 2 * window, site + 2 * window)):
            return candidate, tuple(patch)
    return None


def trace(
    X: SubshiftPresentation,
    po: ZPseudoOrbit,
    eps_depth: int,
    bounds: SearchBounds | None = None,
) -> TraceResult:
    """Return the point of an SFT that shadows po at eps_depth.

    A pseudo-orbit of depth at least eps_depth + w, where w is the SFT window, switches
    between carriers that agree on every w-block crossing a switch, so the diagonal
    stays in X and tracks every entry. At a defect, a switch where the carriers agree
    below the stated depth, the diagonal may leave X; it is then rerouted through the
    least patch of width 2w, and the point misses the pseudo-orbit only within
    eps_depth + w of the defect.

    Raises:
        NotApplicableError: X is not of finite type, carrying a splice witness, or a
            defect admits no patch.
        PrecisionError: po.depth is below eps_depth + w.
        MalformedPresentationError: a carrier is not in X.
    """
    bounds = bounds or SearchBounds()
    if eps_depth < 0:
        raise MalformedPresentationError(f"ε-depth must be non-negative, got {eps_depth}")
    decision = shadowing_decide(X, bounds=bounds)
    if not decision.holds:
        witness = decision.witnesses[0] if decision.witnesses else None
        raise NotApplicableError(
            f"{X.name or 'subshift'} is not of finite type; pseudo-orbits cannot all be traced",
            counterexample=witness,
        )
    window = decision.sft.window or 1
    required = eps_depth + window
    if po.depth < required:
        raise PrecisionError(
            f"pseudo-orbit depth {po.depth} is below the required depth {required}", required
        )
    graph = X.transfer_graph
    for c in po.carriers:
        if not carrier_in(graph, c):
            raise MalformedPresentationError(f"carrier {c} is not a point of {X.name or 'X'}")

    z = po.diagonal()
    defects = po.defects()
    rerouted: dict[int, Word] = {}
    for t in defects:
        if graph.accepts(z.word(t - 2 * window, t + 2 * window)):
            continue
        found = reroute(X, z, t, window, bounds)
        if found is None:
            raise NotApplicableError(
                f"no patch of width {2 * window} reroutes the defect at {t}", counterexample=po
            )
        z, rerouted[t] = found
        logger.debug(f"Rerouted defect at {t} through {''.join(rerouted[t])}")
    if not carrier_in(graph, z):
        raise InconsistencyError(f"spliced point {z} left the subshift")
    bad = mismatches(po, z, eps_depth)
    stray = [n for n in bad if all(abs(n - t) > eps_depth + window for t in defects)]
    if stray:
        raise InconsistencyError(f"spliced point misses the pseudo-orbit at times {stray}")
    logger.info(f"Traced {po.name or 'pseudo-orbit'} at ε-depth {eps_depth} by {z}")
    return TraceResult(z, eps_depth, required, window, tuple(defects), rerouted, tuple(bad))


def _closeness_partition(sys: FiniteSystem, eps: float) -> Cover:
    graph = nx.Graph()
    graph.add_nodes_from(sys.states)
    graph.add_edges_from(
        (x, y) for x in sys.states for y in sys.states if x != y and sys.distance(x, y) < eps
    )
    components = sorted(sorted(c, key=sys.index) for c in nx.connected_components(graph))
    return Cover(sys.states, components)


def crosscheck_metric_and_cover_shadowing(
    sys: FiniteSystem,
    S: Iterable[GroupElement],
    bounds: SearchBounds | None = None,
) -> Report:
    """Compare metric and cover shadowing at every realized resolution.

    Below the least distance every δ-pseudo-orbit and every pseudo-orbit of the finest
    cover is exact, so both routes search seeds per coset of ⟨S⟩ on one common window.
    The metric route tracks with d < ε. The cover route takes the ε/2-ball cover U,
    whose blocks have diameter below ε, and tracks with a shared block of U. Tracking
    within U implies tracking within ε, and tracking within λ(U) implies tracking
    within U; both implications are checked per resolution, and the two verdicts over
    all resolutions must coincide. When U is a partition the finite shadowing decision
    joins the comparison.
    """
    if not sys.has_metric:
        raise NoMetricError(f"system {sys.name or '<anonymous>'} has no metric")
    bounds = bounds or SearchBounds()
    ctx = sys.ctx
    steps = nontrivial_steps(ctx, S)
    H = ctx.subgroup(steps)
    resolutions = [*sys.distances, sys.diameter + 1]
    covers = {eps: ball_cover(sys, eps / 2) for eps in resolutions}
    partitions = [_closeness_partition(sys, eps) for eps in resolutions]
    partitions += [U for U in covers.values() if U.is_partition]
    radius = max(build_orbit_space(sys, P).distinguishing_radius for P in partitions) + 1
    window = tuple(ctx.ball(None, radius))
    report = Report("metric-cover-shadowing")

    def search(related: list[list[bool]]) -> tuple[list[GroupElement], list[str] | None]:
        reps, failing, _ = coset_seed_search(sys, H, related, window, bounds)
        return reps, failing

    metric: dict[float, bool] = {}
    seeds: dict[float, dict[str, str]] = {}
    for eps in resolutions:
        close = [[sys.distance(x, y) < eps for y in sys.states] for x in sys.states]
        reps, failing = search(close)
        metric[eps] = failing is None
        if failing is not None:
            seeds[eps] = {ctx.format(r): x for r, x in zip(reps, failing)}

    cover: dict[float, bool] = {}
    for eps, U in covers.items():
        shared = [
            [bool(set(U.blocks_containing(x)) & set(U.blocks_containing(y))) for y in sys.states]
            for x in sys.states
        ]
        close = [[sys.distance(x, y) < eps for y in sys.states] for x in sys.states]
        cover[eps] = search(shared)[1] is None
        lam = lebesgue_number(U, sys)
        detail = {
            "eps": eps,
            "U": list(U.names),
            "diameter": diameter(U, sys),
            "lebesgue": lam,
            "window_radius": radius,
            "metric": metric[eps],
            "cover": cover[eps],
            "metric_at_lebesgue": metric[lam],
            "relations_differ": shared != close,
        }
        agree = (not cover[eps] or metric[eps]) and (not metric[lam] or cover[eps])
        if eps in seeds:
            detail["seeds"] = seeds[eps]
        if U.is_partition:
            detail["partition_route"] = check_shadowing_td(sys, steps, U, bounds).holds
            agree = agree and detail["partition_route"] == cover[eps]
        report.add(f"resolution-{eps:g}", agree, detail)
    report.add(
        "shadowing",
        all(metric.values()) == all(cover.values()),
        {"metric": all(metric.values()), "cover": all(cover.values())},
    )
    logger.info(
        f"Metric and cover shadowing on {sys.name or '<anonymous>'}: "
        f"{'agree' if report.passed else 'DISAGREE'} at {len(resolutions)} resolutions"
    )
    return report
