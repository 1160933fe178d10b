# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for factor_lift module."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import MalformedFactorError, UnsupportedGroupError
from factor_lift import (
    BlockCode,
    StateFactor,
    check_almost_lifts,
    check_factor_shadowing_transfer,
    check_lifts,
    check_tower_factor_shadowing,
    crosscheck_almost_lifts_metric,
    thread_factor,
)
from finite_system import Cover, FiniteSystem
from group_core import GroupCtx
from orbit_spaces import CosetPseudoOrbit
from patterns import SubshiftPresentation
from settings import SearchBounds
from towers import InverseSystem, orbit_space_tower

SHALLOW = SearchBounds(depth=3)

PAIR_TO_EVEN = {"00": "1", "01": "0", "10": "0"}
XOR = {"00": "0", "01": "1", "10": "1", "11": "0"}


@st.composite
def cycle_systems(draw, max_states=6):
    """Random ℤ-systems on points of a line."""
    n = draw(st.integers(min_value=1, max_value=max_states))
    states = [f"x{i}" for i in range(n)]
    perm = draw(st.permutations(range(n)))
    places = draw(st.lists(st.integers(0, 20), min_size=n, max_size=n, unique=True))
    metric = [[abs(p - q) for q in places] for p in places]
    return FiniteSystem(GroupCtx.integers(), states, {0: [states[i] for i in perm]}, metric)


def _six():
    states = [f"s{i}" for i in range(6)]
    metric = [[0 if i == j else 1 for j in range(6)] for i in range(6)]
    return FiniteSystem(GroupCtx.integers(), states, {0: states[1:] + states[:1]}, metric)


def _six_to_fs1(fs1):
    return StateFactor(_six(), fs1, {f"s{i}": "abc"[i % 3] for i in range(6)}, name="mod3")


def _point(ctx):
    return FiniteSystem(ctx, ["p"], {}, metric=[[0]], name="point")


def _collapse(sys):
    return StateFactor(sys, _point(sys.ctx), {x: "p" for x in sys.states}, name="collapse")


def _fs1_tower(fs1, fs1_ab):
    chain = [Cover.trivial(fs1.states), fs1_ab, Cover.singletons(fs1.states)]
    return orbit_space_tower(fs1, chain)


class TestStateFactor:
    """Test StateFactor class."""

    def test_fibers(self, fs1):
        """Test fibers and conjugacy of the three-fold cover of FS1."""
        phi = _six_to_fs1(fs1)
        assert phi("s4") == "b"
        assert phi.fiber("a") == ("s0", "s3")
        assert not phi.is_conjugacy
        assert StateFactor.identity(fs1).is_conjugacy

    def test_image_and_pullback(self, fs1, fs1_ab):
        """Test pushing covers forward and pulling them back."""
        phi = _six_to_fs1(fs1)
        U = Cover(phi.source.states, [["s0", "s1"], ["s2", "s3", "s4", "s5"]])
        image = phi.image_cover(U)
        assert set(image.blocks) == {frozenset("ab"), frozenset("abc")}
        assert image.names == ("φU0", "φU1")
        back = phi.pullback(fs1_ab)
        assert back.blocks[0] == frozenset({"s0", "s3"})
        assert back.names == ("A", "B")

    def test_not_surjective(self, z, fs1):
        """Test that every target state needs a preimage."""
        bigger = FiniteSystem(z, ["a", "b", "c", "p"], {0: ["b", "c", "a", "p"]})
        with pytest.raises(MalformedFactorError, match="not surjective"):
            StateFactor(fs1, bigger, {"a": "a", "b": "b", "c": "c"})

    def test_not_equivariant(self, fs1):
        """Test that the table must commute with the action."""
        with pytest.raises(MalformedFactorError, match="does not commute"):
            StateFactor(fs1, fs1, {"a": "a", "b": "c", "c": "b"})

    def test_undefined(self, fs1):
        """Test that the table must be total."""
        with pytest.raises(MalformedFactorError, match="undefined"):
            StateFactor(fs1, fs1, {"a": "a"})

    def test_groups_differ(self, fs1, swap):
        """Test that both systems need the same group."""
        with pytest.raises(MalformedFactorError):
            StateFactor(swap, fs1, {"a": "a", "b": "b"})

    def test_lift(self, fs1):
        """Test that the lift of a finest pseudo-orbit maps back onto it."""
        phi = _six_to_fs1(fs1)
        H = fs1.ctx.subgroup([(2,)])
        po = CosetPseudoOrbit(fs1, H, (((0,), "a"), ((1,), "a")), "a")
        lifted = phi.lift(po)
        for k in range(-4, 5):
            assert phi(lifted.value((k,))) == po.value((k,))


class TestCheckLifts:
    """Test check_lifts and check_almost_lifts on finite systems."""

    def test_identity(self, fs1):
        """Test that the identity lifts at the singletons."""
        verdict = check_lifts(StateFactor.identity(fs1), [(1,)])
        assert verdict.holds
        assert verdict.witness.is_singletons
        assert verdict.exact

    def test_coarse_witness(self, fs1):
        """Test that the image of a coarse source cover is tested on a window."""
        phi = _six_to_fs1(fs1)
        verdict = check_lifts(phi, [(1,)], Cover.trivial(phi.source.states))
        assert verdict.holds
        assert not verdict.exact
        assert len(verdict.witness) == 1
        assert len(verdict.window) == 3
        assert verdict.to_dict()["exact"] is False

    def test_rejected_candidate(self, fs1, fs1_ab):
        """Test that a W_Y pseudo-orbit whose orbit drifts out of W_Y is rejected."""
        verdict = check_almost_lifts(StateFactor.identity(fs1), [(1,)], W_Y=fs1_ab)
        assert verdict.holds
        assert verdict.witness.is_singletons
        assert verdict.rejected[0]["cover"] == "P_AB"
        assert len(verdict.rejected[0]["pseudo_orbit"]) == 3

    def test_metric_crosscheck(self, fs1):
        """Test that distance and cover forms agree at every realized (ε, η)."""
        verdict = check_almost_lifts(_six_to_fs1(fs1), [(1,)], metric=True)
        assert verdict.report.passed
        assert [c.name for c in verdict.report.checks] == [
            "eps-1-eta-1",
            "eps-1-eta-2",
            "eps-2-eta-1",
            "eps-2-eta-2",
        ]
        assert verdict.to_dict()["report"]["passed"]
        fine = verdict.report.checks[0]
        assert fine.detail["delta"] == 1
        assert fine.detail["lebesgue"] == 1
        assert fine.detail["cover_at_delta"]

    def test_metric_crosscheck_coarse_witness(self, fs1):
        """Test a cover witness coarser than the singletons against the metric δ."""
        report = crosscheck_almost_lifts_metric(StateFactor.identity(fs1), [(1,)])
        assert report.passed
        checks = {c.name: c.detail for c in report.checks}
        coarse = checks["eps-2-eta-1"]
        assert coarse["witness"] == "cliques<2"
        assert coarse["lebesgue"] == 2
        assert coarse["delta"] == 2
        assert coarse["cover_at_delta"]
        assert checks["eps-1-eta-1"]["witness"] == "singletons"
        assert checks["eps-1-eta-1"]["delta"] == 1


class TestBlockCode:
    """Test BlockCode class and its lifting verdicts."""

    def test_pairs_to_even(self, golden_mean, even_shift):
        """Test that marking 00 maps the golden mean shift onto the even shift."""
        code = BlockCode(golden_mean, even_shift, [0, 1], PAIR_TO_EVEN, name="pairs")
        assert code.memory == 1
        assert code.apply_word(tuple("00100")) == ("1", "0", "0", "1")

    def test_pairs_to_even_does_not_lift(self, golden_mean, even_shift):
        """Test that the approximations of the even shift escape the image."""
        code = BlockCode(golden_mean, even_shift, [0, 1], PAIR_TO_EVEN)
        almost = check_almost_lifts(code, bounds=SHALLOW)
        assert not almost.holds
        assert almost.depth == 3
        assert almost.counterexample
        assert set(almost.depths) == {1, 2, 3}
        assert not check_lifts(code, bounds=SHALLOW).holds

    def test_xor(self, full_shift):
        """Test that the XOR code on the full shift lifts at depth zero."""
        code = BlockCode(full_shift, full_shift, [0, 1], XOR, name="xor")
        verdict = check_lifts(code, bounds=SHALLOW)
        assert verdict.holds
        assert set(verdict.depths.values()) == {0}
        assert check_almost_lifts(code, bounds=SHALLOW).holds

    def test_identity_depths(self, even_shift):
        """Test that the identity of the even shift lifts at equal depths."""
        code = BlockCode(even_shift, even_shift, [0], {"0": "0", "1": "1"})
        assert check_lifts(code, bounds=SHALLOW).depths == {0: 0, 1: 1, 2: 2, 3: 3}

    def test_not_surjective(self, golden_mean, full_shift):
        """Test that the image must be the whole target."""
        with pytest.raises(MalformedFactorError, match="not surjective"):
            BlockCode(golden_mean, full_shift, [0], {"0": "0", "1": "1"})

    def test_missing_rule(self, golden_mean, even_shift):
        """Test that every source block needs a rule."""
        with pytest.raises(MalformedFactorError, match="no rule"):
            BlockCode(golden_mean, even_shift, [0, 1], {"01": "0", "10": "0"})

    def test_outside_alphabet(self, full_shift):
        """Test that the rule writes target symbols."""
        with pytest.raises(MalformedFactorError):
            BlockCode(full_shift, full_shift, [0], {"0": "0", "1": "2"})

    def test_lattice(self, z2):
        """Test that codes act on ℤ-subshifts."""
        X = SubshiftPresentation.full_shift(z2, "01")
        with pytest.raises(UnsupportedGroupError):
            BlockCode(X, X, [0], {"0": "0", "1": "1"})


class TestShadowingTransfer:
    """Test check_factor_shadowing_transfer function."""

    def test_three_fold_cover(self, fs1):
        """Test a finite factor between systems with shadowing."""
        report = check_factor_shadowing_transfer(_six_to_fs1(fs1), [(1,)])
        assert report.passed
        assert [c.name for c in report.checks] == [
            "lifting-transfers-shadowing",
            "almost-lifting-transfers-shadowing",
            "target-shadowing-gives-almost-lifts",
        ]

    def test_swap_to_point(self, swap):
        """Test that a point factor of a system without shadowing still has it."""
        report = check_factor_shadowing_transfer(_collapse(swap), [(1, 0)])
        assert report.passed
        detail = report.checks[0].detail
        assert not detail["source_shadowing"]
        assert detail["target_shadowing"]

    def test_sft_onto_sofic(self, golden_mean, even_shift):
        """Test that a sofic factor of an SFT neither lifts nor shadows."""
        code = BlockCode(golden_mean, even_shift, [0, 1], PAIR_TO_EVEN)
        report = check_factor_shadowing_transfer(code, bounds=SHALLOW)
        assert report.passed
        assert report.checks[0].detail == {
            "source_shadowing": True,
            "target_shadowing": False,
            "lifts": False,
            "almost_lifts": False,
        }

    @settings(max_examples=30, deadline=None)
    @given(cycle_systems())
    def test_random_point_factors(self, system):
        """Test the three implications for the map onto a point."""
        assert check_factor_shadowing_transfer(_collapse(system), [(1,)]).passed


class TestTowerFactorShadowing:
    """Test thread_factor and check_tower_factor_shadowing functions."""

    def test_fs1(self, fs1, fs1_ab):
        """Test that FS1 gets shadowing from its orbit-space tower."""
        T = _fs1_tower(fs1, fs1_ab)
        phi = thread_factor(T, fs1)
        assert phi.is_conjugacy
        assert phi("[a]|[c]|[c]") == "c"
        report = check_tower_factor_shadowing(T, phi, [(1,)])
        assert report.passed
        assert report.checks[-1].name == "base-has-shadowing"

    def test_point_base(self, fs1, fs1_ab):
        """Test the factor of the limit onto a point."""
        T = _fs1_tower(fs1, fs1_ab)
        assert check_tower_factor_shadowing(T, _collapse(T.thread_system()), [(1,)]).passed

    def test_not_ml(self, z):
        """Test that a tower failing Mittag-Leffler gives no verdict."""
        levels = [FiniteSystem(z, ["p", "q"], {}), FiniteSystem(z, ["r"], {})]
        T = InverseSystem(levels, [{"r": "p"}])
        report = check_tower_factor_shadowing(T, StateFactor.identity(T.thread_system()), [(1,)])
        assert report.precondition_failure == "Mittag-Leffler fails at level 0"

    def test_wrong_source(self, fs1, fs1_ab):
        """Test that the factor must start at the thread system."""
        report = check_tower_factor_shadowing(
            _fs1_tower(fs1, fs1_ab), StateFactor.identity(fs1), [(1,)]
        )
        assert report.precondition_failure == "the factor does not start at the thread system"
