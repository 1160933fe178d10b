# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for patterns module."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import EmptySetError, InsufficientWindowError, UnsupportedGroupError
from group_core import GroupCtx
from patterns import (
    Exactness,
    Pattern,
    SubshiftPresentation,
    TransferGraph,
    language,
    shift_apply,
    shift_metric,
    sofic_is_sft,
)

Z = GroupCtx.integers()
Z2 = GroupCtx.lattice(2)
F2 = GroupCtx.free(2)


def _brute_force_language(alphabet, forbidden_words, n, pad):
    """Words of length n that sit inside a longer word avoiding every forbidden factor."""
    out = set()
    for long in itertools.product(alphabet, repeat=n + 2 * pad):
        ok = all(
            tuple(long[i : i + len(f)]) != f
            for f in forbidden_words
            for i in range(len(long) - len(f) + 1)
        )
        if ok:
            out.add(long[pad : pad + n])
    return out


class TestShiftApply:
    """Test shift_apply function."""

    def test_integer_shift(self):
        """Test the index shift over ℤ."""
        x = Pattern.from_word("ab")
        assert shift_apply(x, (1,), Z) == Pattern({(-1,): "a", (0,): "b"})

    def test_identity(self):
        """Test that the identity acts trivially."""
        x = Pattern({(): "a", (1,): "b", (-2,): "a"})
        assert shift_apply(x, (), F2) == x

    def test_lattice_shift(self):
        """Test a two-cell window in ℤ²."""
        x = Pattern({(0, 0): "0", (1, 0): "1"})
        assert shift_apply(x, (0, 1), Z2) == Pattern({(0, -1): "0", (1, -1): "1"})

    @pytest.mark.parametrize("ctx", [Z2, F2])
    def test_action_law(self, ctx):
        """Test σ_h∘σ_g = σ_{hg} on the radius-2 ball."""
        x = Pattern({g: str(i % 3) for i, g in enumerate(ctx.ball(None, 1))})
        for g, h in itertools.product(ctx.ball(None, 2), repeat=2):
            assert shift_apply(shift_apply(x, g, ctx), h, ctx) == shift_apply(
                x, ctx.mul(h, g), ctx
            )

    def test_shift_reads_hg(self):
        """Test σ_g(x)(h) = x(hg) in F₂."""
        a, b = F2.generators
        x = Pattern({F2.mul(a, b): "1", b: "0"})
        y = shift_apply(x, b, F2)
        assert y[a] == "1"
        assert y[()] == "0"


class TestLanguage:
    """Test language function."""

    def test_golden_mean(self, golden_mean):
        """Test the length-2 language of the golden mean shift."""
        slice_ = language(golden_mean, [(0,), (1,)])
        assert slice_.patterns == {("0", "0"), ("0", "1"), ("1", "0")}
        assert slice_.exactness == Exactness.EXACT

    def test_full_shift(self):
        """Test that the full shift allows every pattern."""
        full = SubshiftPresentation.full_shift(Z, "01")
        assert len(language(full, [(0,), (2,), (5,)])) == 8

    def test_lattice_upper_bound(self):
        """Test a ℤ² slice flagged as an upper bound."""
        window = [(0, 0), (1, 0)]
        X = SubshiftPresentation.sft(Z2, "01", window, [("1", "1")])
        slice_ = language(X, window)
        assert slice_.patterns == {("0", "0"), ("0", "1"), ("1", "0")}
        assert slice_.exactness == Exactness.UPPER_BOUND

    def test_empty_subshift(self):
        """Test that an empty ℤ-SFT gives an empty exact slice."""
        X = SubshiftPresentation.sft(Z, "0", [(0,)], [("0",)])
        assert X.is_empty
        slice_ = language(X, [(0,)])
        assert len(slice_) == 0
        assert slice_.exactness == Exactness.EXACT

    def test_restriction_is_consistent(self, even_shift):
        """Test that exact slices restrict to smaller exact slices."""
        big = language(even_shift, [(i,) for i in range(6)])
        small = language(even_shift, [(1,), (2,), (3,)])
        assert big.restrict([(1,), (2,), (3,)]) == small

    def test_sofic_language(self, even_shift):
        """Test that 101 is not in the even shift."""
        words = even_shift.transfer_graph.words(3)
        assert ("1", "0", "1") not in words
        assert ("1", "0", "0") in words

    @settings(max_examples=30, deadline=None)
    @given(
        st.sets(st.tuples(st.sampled_from("01"), st.sampled_from("01")), max_size=3),
        st.integers(min_value=1, max_value=5),
    )
    def test_transfer_graph_matches_brute_force(self, forbidden, n):
        """Test transfer-graph languages against brute-force enumeration."""
        X = SubshiftPresentation.sft(Z, "01", [(0,), (1,)], forbidden)
        expected = _brute_force_language("01", list(forbidden), n, 3)
        assert X.transfer_graph.words(n) == expected


class TestShiftMetric:
    """Test shift_metric function."""

    def test_disagreement_at_identity(self):
        """Test distance 1 when the patterns differ at 0."""
        d = shift_metric(Pattern.from_word("a"), Pattern.from_word("b"), Z)
        assert d.exponent == 0
        assert d.value == 1.0
        assert not d.upper_bound

    def test_disagreement_at_one(self):
        """Test distance 2^-1 when the patterns first differ at 1."""
        x = Pattern.from_word("aab", start=-1)
        y = Pattern.from_word("aaa", start=-1)
        assert shift_metric(x, y, Z).exponent == 1

    def test_agreement_is_bound(self):
        """Test that agreement on the common prefix yields a flagged bound."""
        cells = {g: "a" for g in Z.enumeration(11)}
        d = shift_metric(Pattern(cells), Pattern(cells), Z)
        assert d.upper_bound
        assert d.exponent == 11

    def test_insufficient_window(self):
        """Test that too small a window is rejected for a given precision."""
        x = Pattern.from_word("aaa", start=-1)
        with pytest.raises(InsufficientWindowError):
            shift_metric(x, x, Z, precision=5)


class TestSoficIsSft:
    """Test sofic_is_sft function."""

    def test_golden_mean(self, golden_mean_graph):
        """Test that the golden mean graph is an SFT forbidding 11."""
        decision = sofic_is_sft(golden_mean_graph)
        assert decision.is_sft
        assert decision.window == 2
        assert decision.forbidden == (("1", "1"),)

    def test_presentation_agrees(self, golden_mean_graph):
        """Test that the returned SFT has the same language up to length 10."""
        sft = sofic_is_sft(golden_mean_graph).presentation
        for n in range(1, 11):
            assert sft.transfer_graph.words(n) == golden_mean_graph.transfer_graph.words(n)

    def test_even_shift(self, even_shift):
        """Test the unbounded minimal forbidden words of the even shift."""
        decision = sofic_is_sft(even_shift)
        assert not decision.is_sft
        expected = [("1",) + ("0",) * (2 * k + 1) + ("1",) for k in range(5)]
        assert list(decision.forbidden) == expected
        first = decision.witnesses[0]
        assert first.left == ("1", "0")
        assert first.right == ("0", "1")

    def test_full_shift(self):
        """Test that the full shift graph has no forbidden words."""
        full = SubshiftPresentation.sofic("01", [("v", "v", "0"), ("v", "v", "1")])
        decision = sofic_is_sft(full)
        assert decision.is_sft
        assert decision.forbidden == ()

    def test_unused_symbol(self):
        """Test that a symbol on no edge is a forbidden word of length one."""
        X = SubshiftPresentation.sofic("012", [("v", "v", "0"), ("v", "v", "1")])
        decision = sofic_is_sft(X)
        assert decision.is_sft
        assert decision.forbidden == (("2",),)

    def test_non_integer_group(self):
        """Test that only ℤ is supported."""
        X = SubshiftPresentation.full_shift(Z2, "01")
        with pytest.raises(UnsupportedGroupError):
            sofic_is_sft(X)

    def test_empty(self):
        """Test that an empty presentation is rejected."""
        X = SubshiftPresentation.sofic("01", [("u", "v", "0")])
        with pytest.raises(EmptySetError):
            sofic_is_sft(X)


class TestTransferGraph:
    """Test TransferGraph helpers."""

    def test_trimming(self):
        """Test that dead ends are removed."""
        graph = TransferGraph("01", [("a", "a", "0"), ("a", "b", "1")])
        assert graph.vertices == ("a",)

    def test_inclusion_witness(self, golden_mean, even_shift):
        """Test a shortest word of the golden mean missing from the even shift."""
        witness = golden_mean.transfer_graph.inclusion_witness(even_shift.transfer_graph)
        assert witness == ("1", "0", "1")
        full = SubshiftPresentation.full_shift(Z, "01").transfer_graph
        assert golden_mean.transfer_graph.inclusion_witness(full) is None

    def test_block_approximation(self, even_shift):
        """Test that the 3-block approximation of the even shift forbids only 101."""
        approx = even_shift.block_approximation(3)
        assert approx.transfer_graph.words(3) == even_shift.transfer_graph.words(3)
        assert ("1", "0", "0", "0", "1") in approx.transfer_graph.words(5)
