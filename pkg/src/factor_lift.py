#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Factor maps and the pseudo-orbit lifting properties.

Finite systems are factored by an equivariant state table. Every cover of a finite
system is refined by the singletons, so a lifting witness always exists there: a
pseudo-orbit at the finest resolution follows one orbit per coset of ⟨S⟩ and lifts
coset by coset through the fibers. The checks look for a coarser witness first and
test candidates on a finite window.

ℤ-subshifts are factored by sliding block codes. A pseudo-orbit at cylinder depth r
is read through its diagonal, a point of the block approximation of length 2r + 2, so
lifting at given depths is a language inclusion between sofic shifts. Subshift
verdicts carry the largest depth searched.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

from certificates import Report
from errors import (
    InconsistencyError,
    InsufficientWindowError,
    MalformedFactorError,
    SearchLimitError,
    UnsupportedGroupError,
)
from finite_system import Cover, FiniteSystem, clique_cover, lebesgue_number
from group_core import GroupElement
from orbit_spaces import CosetPseudoOrbit, check_shadowing_td, nontrivial_steps
from patterns import SubshiftPresentation, Symbol, Word
from settings import SearchBounds
from shadowing import shadowing_decide
from towers import InverseSystem, check_limit_preserves_shadowing, limit_threads

logger = logging.getLogger(__name__)


class StateFactor:
    """A surjective equivariant map between finite systems, given as a state table."""

    def __init__(
        self,
        source: FiniteSystem,
        target: FiniteSystem,
        table: Mapping[str, str],
        name: str = "",
    ):
        self.source = source
        self.target = target
        self.name = name
        if source.ctx != target.ctx:
            raise MalformedFactorError(f"{source.ctx} and {target.ctx} differ")
        missing = [x for x in source.states if x not in table]
        if missing:
            raise MalformedFactorError(f"factor {name or 'φ'} is undefined on {missing}")
        self.table = {x: table[x] for x in source.states}
        unknown = sorted(set(self.table.values()) - set(target.states))
        if unknown:
            raise MalformedFactorError(f"factor {name or 'φ'} maps to unknown states {unknown}")
        missed = [y for y in target.states if y not in set(self.table.values())]
        if missed:
            raise MalformedFactorError(f"factor {name or 'φ'} is not surjective, misses {missed}")
        for g in source.ctx.generators:
            for x in source.states:
                if target.apply(g, self.table[x]) != self.table[source.apply(g, x)]:
                    raise MalformedFactorError(
                        f"factor {name or 'φ'} does not commute with "
                        f"{source.ctx.format(g)} at {x}"
                    )

    @classmethod
    def identity(cls, sys: FiniteSystem) -> "StateFactor":
        """Return the identity factor."""
        return cls(sys, sys, {x: x for x in sys.states}, name="id")

    def __call__(self, x: str) -> str:
        """Return φ(x)."""
        return self.table[x]

    def fiber(self, y: str) -> tuple[str, ...]:
        """Return φ⁻¹(y) in source order."""
        return tuple(x for x in self.source.states if self.table[x] == y)

    @property
    def is_conjugacy(self) -> bool:
        """Return True if the map is injective."""
        return len(set(self.table.values())) == self.source.size

    def image_cover(self, U: Cover) -> Cover:
        """Return the cover of the target by the images of the blocks of U."""
        blocks: list[frozenset[str]] = []
        names: list[str] = []
        for name, b in zip(U.names, U.blocks):
            image = frozenset(self.table[x] for x in b)
            if image not in blocks:
                blocks.append(image)
                names.append(f"φ{name}")
        ordered = [sorted(b, key=self.target.index) for b in blocks]
        return Cover(self.target.states, ordered, names, name=f"φ({U.name or 'U'})")

    def pullback(self, U: Cover) -> Cover:
        """Return φ⁻¹U."""
        blocks = [[x for x in self.source.states if self.table[x] in b] for b in U.blocks]
        return Cover(self.source.states, blocks, list(U.names), name=f"φ⁻¹({U.name or 'U'})")

    def lift(self, po: CosetPseudoOrbit) -> CosetPseudoOrbit:
        """Lift a finest pseudo-orbit of the target coset by coset through the fibers."""
        seeds = tuple((r, self.fiber(y)[0]) for r, y in po.seeds)
        return CosetPseudoOrbit(self.source, po.subgroup, seeds, self.fiber(po.default)[0])

    def __repr__(self) -> str:
        """Represent the factor."""
        return f"StateFactor({self.name!r}, {self.source.size} -> {self.target.size})"


class BlockCode:
    """A sliding block code φ(x)_i = rule(x_{i+w}, w in window) between ℤ-subshifts."""

    def __init__(
        self,
        source: SubshiftPresentation,
        target: SubshiftPresentation,
        window: Sequence[int],
        rule: Mapping[Sequence[Symbol], Symbol],
        name: str = "",
    ):
        if not source.ctx.is_integers or not target.ctx.is_integers:
            raise UnsupportedGroupError("block codes act on ℤ-subshifts")
        if not window:
            raise InsufficientWindowError("a block code needs a nonempty window")
        self.source = source
        self.target = target
        self.name = name
        self.window = tuple(sorted(set(window)))
        self.low = self.window[0]
        self.span = self.window[-1] - self.low + 1
        self.rule: dict[Word, Symbol] = {tuple(k): v for k, v in rule.items()}
        bad = sorted(v for v in self.rule.values() if v not in target.alphabet)
        if bad:
            raise MalformedFactorError(f"code {name or 'φ'} writes symbols {bad} outside target")
        for w in sorted(source.transfer_graph.words(self.span)):
            if self._key(w) not in self.rule:
                raise MalformedFactorError(f"code {name or 'φ'} has no rule for {''.join(w)}")
        image = self.image().transfer_graph
        outside = image.inclusion_witness(target.transfer_graph)
        if outside is not None:
            raise MalformedFactorError(
                f"code {name or 'φ'} writes {''.join(outside)} outside {target.name or 'target'}"
            )
        missed = target.transfer_graph.inclusion_witness(image)
        if missed is not None:
            raise MalformedFactorError(
                f"code {name or 'φ'} is not surjective, misses {''.join(missed)}"
            )

    def _key(self, word: Sequence[Symbol]) -> Word:
        return tuple(word[o - self.low] for o in self.window)

    @property
    def memory(self) -> int:
        """Return the number of symbols the code reads beyond one, k - 1."""
        return self.span - 1

    def apply_word(self, word: Sequence[Symbol]) -> Word:
        """Return the image of a finite word, span - 1 symbols shorter."""
        return tuple(
            self.rule[self._key(word[i : i + self.span])]
            for i in range(len(word) - self.span + 1)
        )

    def image(self, presentation: SubshiftPresentation | None = None) -> SubshiftPresentation:
        """Return the sofic image of the source, or of a subshift on the same alphabet."""
        X = presentation or self.source
        edges = [
            (u, v, self.rule[self._key(w)]) for u, v, w in X.transfer_graph.block_edges(self.span)
        ]
        return SubshiftPresentation.sofic(
            self.target.alphabet, edges, name=f"φ({X.name or 'X'})"
        )

    def __repr__(self) -> str:
        """Represent the code."""
        return f"BlockCode({self.name!r}, window {list(self.window)})"


FactorMap = StateFactor | BlockCode


@dataclass
class LiftVerdict:
    """Outcome of a lifting check: a target resolution that works, or why none was found.

    ``exact`` is False when the witness was only tested on ``window``. Subshift
    verdicts record the cylinder depths instead, with ``depth`` the largest searched.
    """

    holds: bool
    witness: Cover | None = None
    exact: bool = True
    window: tuple[GroupElement, ...] = ()
    rejected: list[dict] = field(default_factory=list)
    depths: dict[int, int | None] = field(default_factory=dict)
    depth: int | None = None
    counterexample: str | None = None
    report: Report | None = None

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        out: dict = {"holds": self.holds, "exact": self.exact}
        if self.witness is not None:
            out["witness"] = list(self.witness.names)
        if self.rejected:
            out["rejected"] = self.rejected
        if self.depth is not None:
            out["depth"] = self.depth
            out["depths"] = {str(k): v for k, v in self.depths.items()}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        if self.report is not None:
            out["report"] = self.report.to_dict()
        return out


def _check_window(S: Sequence[GroupElement], sys: FiniteSystem) -> tuple[GroupElement, ...]:
    ctx = sys.ctx
    return tuple(ctx.ball(None, max(1, ctx.radius_of(S))))


def _sites(
    sys: FiniteSystem, S: Sequence[GroupElement], window: Sequence[GroupElement]
) -> list[tuple[int, list[int]]]:
    """Return each window cell whose S-predecessors all lie in the window."""
    ctx = sys.ctx
    where = {g: i for i, g in enumerate(window)}
    out = []
    for i, h in enumerate(window):
        preds = [ctx.mul(ctx.inv(s), h) for s in S]
        if all(p in where for p in preds):
            out.append((i, [where[p] for p in preds]))
    return out


def _window_test(
    sys: FiniteSystem, U: Cover, S: Sequence[GroupElement], window: Sequence[GroupElement]
) -> Callable[[Sequence[str]], bool]:
    """Return a test of the (S, U)-pseudo-orbit condition at the determined window sites."""
    S = list(S)
    sites = _sites(sys, S, window)
    if not sites:
        raise InsufficientWindowError("no window site has all its constraints")

    def test(values: Sequence[str]) -> bool:
        for i, preds in sites:
            common = set(U.blocks_containing(values[i]))
            for s, p in zip(S, preds):
                common &= set(U.blocks_containing(sys.apply(s, values[p])))
                if not common:
                    return False
        return True

    return test


def _configurations(
    sys: FiniteSystem, window: Sequence[GroupElement], bounds: SearchBounds
) -> Iterator[tuple[str, ...]]:
    count = sys.size ** len(window)
    if count > bounds.max_search_nodes:
        raise SearchLimitError(f"{count} window configurations exceed the search bound")
    return itertools.product(sys.states, repeat=len(window))


def _unlifted(
    phi: StateFactor,
    S: Sequence[GroupElement],
    U_X: Cover,
    U_Y: Cover,
    near: Callable[[str, str], bool],
    window: Sequence[GroupElement],
    bounds: SearchBounds,
) -> tuple[str, ...] | None:
    """Return a window (S, U_Y)-pseudo-orbit with no (S, U_X)-lift whose image is near it."""
    is_po_y = _window_test(phi.target, U_Y, S, window)
    is_po_x = _window_test(phi.source, U_X, S, window)
    options = {
        y: [x for x in phi.source.states if near(phi(x), y)] for y in phi.target.states
    }
    for y in _configurations(phi.target, window, bounds):
        if not is_po_y(y):
            continue
        choices = [options[v] for v in y]
        count = 1
        for c in choices:
            count *= len(c)
        if count > bounds.max_search_nodes:
            raise SearchLimitError(f"{count} candidate lifts exceed the search bound")
        if not any(is_po_x(x) for x in itertools.product(*choices)):
            return y
    return None


def _sharing(W: Cover) -> Callable[[str, str], bool]:
    """Return the test of sharing a block of W."""
    shared = {
        (a, b): bool(set(W.blocks_containing(a)) & set(W.blocks_containing(b)))
        for a in W.states
        for b in W.states
    }
    return lambda a, b: shared[(a, b)]


def _lift_candidates(first: Sequence[Cover], target: FiniteSystem) -> list[Cover]:
    singletons = Cover.singletons(target.states)
    out: list[Cover] = []
    for U in [*(V for V in first if not V.is_singletons), singletons]:
        if not any(U.same_blocks(V) for V in out):
            out.append(U)
    return out


def _search_resolution(
    phi: StateFactor,
    S: Sequence[GroupElement],
    U_X: Cover,
    candidates: Sequence[Cover],
    near: Callable[[str, str], bool],
    bounds: SearchBounds,
) -> LiftVerdict:
    window = _check_window(S, phi.source)
    rejected = []
    for U_Y in candidates:
        if U_Y.is_singletons:
            logger.info(f"{phi!r}: finest pseudo-orbits lift through the fibers")
            return LiftVerdict(True, U_Y, True, window, rejected)
        y = _unlifted(phi, S, U_X, U_Y, near, window, bounds)
        if y is None:
            logger.info(f"{phi!r}: {U_Y.name or 'U_Y'} witnesses on {len(window)} cells")
            return LiftVerdict(True, U_Y, False, window, rejected)
        rejected.append({"cover": U_Y.name, "pseudo_orbit": list(y)})
    raise InconsistencyError("the singletons were not among the candidates")


def _code_verdict(
    code: BlockCode, pairs: Sequence[tuple[int, int]], bounds: SearchBounds
) -> LiftVerdict:
    """For each (r_x, r_low) find r_y in [r_low, depth] with L(Y[2r_y+2]) ⊆ L(φ(X[2r_x+2]))."""
    if not pairs:
        raise InsufficientWindowError(f"depth {bounds.depth} is below the code memory")
    Y = code.target
    approx: dict[int, SubshiftPresentation] = {}
    depths: dict[int, int | None] = {}
    counterexample = None
    for r_x, r_low in pairs:
        image = code.image(code.source.block_approximation(2 * r_x + 2)).transfer_graph
        depths[r_x] = None
        for r_y in range(r_low, bounds.depth + 1):
            if r_y not in approx:
                approx[r_y] = Y.block_approximation(2 * r_y + 2)
            missing = approx[r_y].transfer_graph.inclusion_witness(image)
            if missing is None:
                depths[r_x] = r_y
                break
            counterexample = "".join(missing)
    holds = all(v is not None for v in depths.values())
    logger.info(f"{code!r}: lifting up to depth {bounds.depth}: {holds}")
    return LiftVerdict(
        holds,
        exact=False,
        depths=depths,
        depth=bounds.depth,
        counterexample=None if holds else counterexample,
    )


def check_lifts(
    phi: FactorMap,
    S: Sequence[GroupElement] | None = None,
    U_X: Cover | None = None,
    bounds: SearchBounds | None = None,
) -> LiftVerdict:
    """Find U_Y whose pseudo-orbits are exact images of (S, U_X)-pseudo-orbits.

    Candidates are φ(U_X) and the singletons. For block codes, every source depth r_x
    up to ``bounds.depth`` needs a target depth.

    Args:
        phi: A state factor or a block code.
        S: Finite set of group elements; block codes use S = {+1}.
        U_X: Source resolution, the singletons by default.
        bounds: Search bounds.

    Returns:
        LiftVerdict: The coarsest candidate that works, with the rejected ones.
    """
    bounds = bounds or SearchBounds()
    if isinstance(phi, BlockCode):
        pairs = [(r, 0) for r in range(bounds.depth + 1)]
        return _code_verdict(phi, pairs, bounds)
    S = list(S) if S is not None else [phi.source.ctx.generators[0]]
    U_X = U_X or Cover.singletons(phi.source.states)
    candidates = _lift_candidates([phi.image_cover(U_X)], phi.target)
    return _search_resolution(phi, S, U_X, candidates, lambda a, b: a == b, bounds)


def check_almost_lifts(
    phi: FactorMap,
    S: Sequence[GroupElement] | None = None,
    U_X: Cover | None = None,
    W_Y: Cover | None = None,
    bounds: SearchBounds | None = None,
    metric: bool = False,
) -> LiftVerdict:
    """Find U_Y whose pseudo-orbits are W_Y-shadowed by images of (S, U_X)-pseudo-orbits.

    With ``metric`` set the verdict carries a report comparing, at every pair of
    realized distances (ε, η), the distance form of the property with the cover form
    on the ε- and η-clique covers. For block codes the W_Y depth r_w runs up to
    ``bounds.depth`` with source depth r_w + memory and target depths from r_w.
    """
    bounds = bounds or SearchBounds()
    if isinstance(phi, BlockCode):
        pairs = [
            (r_w + phi.memory, r_w) for r_w in range(0, bounds.depth - phi.memory + 1)
        ]
        return _code_verdict(phi, pairs, bounds)
    S = list(S) if S is not None else [phi.source.ctx.generators[0]]
    U_X = U_X or Cover.singletons(phi.source.states)
    W_Y = W_Y or Cover.singletons(phi.target.states)
    candidates = _lift_candidates([W_Y, phi.image_cover(U_X)], phi.target)
    verdict = _search_resolution(phi, S, U_X, candidates, _sharing(W_Y), bounds)
    if metric:
        verdict.report = crosscheck_almost_lifts_metric(phi, S, bounds)
    return verdict


def _metric_delta(
    phi: StateFactor,
    S: Sequence[GroupElement],
    eps: float,
    eta: float,
    window: Sequence[GroupElement],
    bounds: SearchBounds,
) -> float | None:
    """Return the largest realized δ whose window (S, δ)-pseudo-orbits have ε-close lifts."""
    X, Y = phi.source, phi.target
    S = list(S)
    sites = _sites(Y, S, window)

    def close(sys: FiniteSystem, r: float) -> Callable[[Sequence[str]], bool]:
        def test(values: Sequence[str]) -> bool:
            return all(
                sys.distance(sys.apply(s, values[p]), values[i]) < r
                for i, preds in sites
                for s, p in zip(S, preds)
            )

        return test

    is_po_x = close(X, eta)
    deltas = [Y.diameter + 1.0, *sorted(Y.distances, reverse=True)]
    for delta in deltas:
        is_po_y = close(Y, delta)
        failed = False
        for y in _configurations(Y, window, bounds):
            if not is_po_y(y):
                continue
            choices = [[x for x in X.states if Y.distance(phi(x), v) < eps] for v in y]
            if not any(is_po_x(x) for x in itertools.product(*choices)):
                failed = True
                break
        if not failed:
            return delta
    return None


def crosscheck_almost_lifts_metric(
    phi: StateFactor, S: Sequence[GroupElement], bounds: SearchBounds | None = None
) -> Report:
    """Compare the distance and cover forms of almost lifting at every realized (ε, η).

    The cover form runs on the η-clique cover of X and the ε-clique cover of Y and
    returns its coarsest witness U_Y. Every pseudo-orbit finer than λ(U_Y) is a
    U_Y-pseudo-orbit, so the metric δ(ε, η) is at least λ(U_Y). For a single step the
    δ-clique cover of Y describes the same pseudo-orbits as δ itself, so the cover
    search must also succeed there.
    """
    bounds = bounds or SearchBounds()
    S = list(S)
    X, Y = phi.source, phi.target
    window = _check_window(S, X)
    report = Report("almost-lifts-metric-cover")
    eps_values = sorted(set(Y.distances) | {Y.diameter + 1.0})
    eta_values = sorted(set(X.distances) | {X.diameter + 1.0})
    for eps, eta in itertools.product(eps_values, eta_values):
        delta = _metric_delta(phi, S, eps, eta, window, bounds)
        U_X, W_Y = clique_cover(X, eta), clique_cover(Y, eps)
        cover = check_almost_lifts(phi, S, U_X, W_Y, bounds)
        lam = lebesgue_number(cover.witness, Y)
        detail = {"delta": delta, "witness": cover.witness.name, "lebesgue": lam}
        agree = delta is not None and delta >= lam
        if delta is not None and len(S) == 1:
            V = clique_cover(Y, delta)
            missed = _unlifted(phi, S, U_X, V, _sharing(W_Y), window, bounds)
            detail["cover_at_delta"] = missed is None
            agree = agree and missed is None
        report.add(f"eps-{eps:g}-eta-{eta:g}", agree, detail)
    logger.info(
        f"{phi!r}: metric and cover almost lifting "
        f"{'agree' if report.passed else 'DISAGREE'} at {len(report.checks)} resolutions"
    )
    return report


def check_factor_shadowing_transfer(
    phi: FactorMap,
    S: Sequence[GroupElement] | None = None,
    bounds: SearchBounds | None = None,
) -> Report:
    """Check on one factor map how shadowing passes from source to target.

    Three implications are asserted: shadowing upstairs with lifting gives shadowing
    downstairs, the same with almost lifting, and shadowing downstairs gives almost
    lifting.

    Raises:
        InconsistencyError: an implication fails on this instance.
    """
    bounds = bounds or SearchBounds()
    if isinstance(phi, BlockCode):
        source = shadowing_decide(phi.source, bounds=bounds).holds
        target = shadowing_decide(phi.target, bounds=bounds).holds
    else:
        S = list(S) if S is not None else [phi.source.ctx.generators[0]]
        source = check_shadowing_td(
            phi.source, S, Cover.singletons(phi.source.states), bounds
        ).holds
        target = check_shadowing_td(
            phi.target, S, Cover.singletons(phi.target.states), bounds
        ).holds
    lifts = check_lifts(phi, S, bounds=bounds)
    almost = check_almost_lifts(phi, S, bounds=bounds)
    verdicts = {
        "source_shadowing": source,
        "target_shadowing": target,
        "lifts": lifts.holds,
        "almost_lifts": almost.holds,
    }
    report = Report("factor-shadowing-transfer")
    report.add("lifting-transfers-shadowing", not (source and lifts.holds) or target, verdicts)
    report.add("almost-lifting-transfers-shadowing", not (source and almost.holds) or target)
    report.add("target-shadowing-gives-almost-lifts", not target or almost.holds)
    return report.raise_on_failure()


def thread_factor(T: InverseSystem, sys: FiniteSystem) -> StateFactor:
    """Return the map from the thread system of an orbit-space tower onto the base."""
    limit = T.thread_system()
    threads = limit_threads(T)
    table = {}
    for t in threads.threads:
        fiber = T.thread_fiber(t)
        if len(fiber) != 1:
            raise MalformedFactorError(f"thread {threads.name(t)} meets {len(fiber)} states")
        table[threads.name(t)] = next(iter(fiber))
    return StateFactor(limit, sys, table, name="ψ")


def check_tower_factor_shadowing(
    T: InverseSystem,
    phi: StateFactor,
    S: Sequence[GroupElement],
    bounds: SearchBounds | None = None,
) -> Report:
    """Check that a factor of an ML tower limit with shadowing levels has shadowing.

    The tower limit keeps shadowing, and an almost lifting factor passes it on. The
    factor must start at the thread system of the tower.

    Raises:
        InconsistencyError: every precondition holds and the base lacks shadowing.
    """
    bounds = bounds or SearchBounds()
    report = Report("tower-factor-shadowing")
    limit = check_limit_preserves_shadowing(T, S, bounds)
    if limit.precondition_failure is not None:
        report.precondition_failure = limit.precondition_failure
        return report
    if set(phi.source.states) != set(T.thread_system().states):
        report.precondition_failure = "the factor does not start at the thread system"
        return report
    almost = check_almost_lifts(phi, S, bounds=bounds)
    if not almost.holds:
        report.precondition_failure = "the factor does not almost lift pseudo-orbits"
        return report
    report.extend(limit, prefix="limit/")
    base = check_shadowing_td(phi.target, S, Cover.singletons(phi.target.states), bounds)
    report.add("base-has-shadowing", base.holds, {"almost_lifts_witness": almost.witness.name})
    return report.raise_on_failure()
