# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Shared fixtures: the small systems and subshifts used across the unit tests."""

import pytest

from finite_system import Cover, FiniteSystem
from group_core import GroupCtx
from patterns import SubshiftPresentation


@pytest.fixture()
def z():
    return GroupCtx.integers()


@pytest.fixture()
def z2():
    return GroupCtx.lattice(2)


@pytest.fixture()
def f2():
    return GroupCtx.free(2)


@pytest.fixture()
def fs1():
    """Three-cycle a -> b -> c -> a under ℤ, uniform metric."""
    return FiniteSystem(
        GroupCtx.integers(),
        ["a", "b", "c"],
        {0: ["b", "c", "a"]},
        metric=[[0, 1, 1], [1, 0, 1], [1, 1, 0]],
        name="FS1",
    )


@pytest.fixture()
def fs1_ab(fs1):
    """Partition A={a}, B={b,c} of FS1."""
    return Cover(fs1.states, [["a"], ["b", "c"]], ["A", "B"], name="P_AB")


@pytest.fixture()
def swap():
    """ℤ² acting on {a, b}: e1 trivially, e2 by the swap."""
    return FiniteSystem(
        GroupCtx.lattice(2),
        ["a", "b"],
        {0: ["a", "b"], 1: ["b", "a"]},
        metric=[[0, 1], [1, 0]],
        name="swap",
    )


@pytest.fixture()
def golden_mean():
    return SubshiftPresentation.sft(
        GroupCtx.integers(), "01", [(0,), (1,)], [("1", "1")], name="golden"
    )


@pytest.fixture()
def golden_mean_graph():
    return SubshiftPresentation.sofic(
        "01", [("zero", "zero", "0"), ("one", "zero", "0"), ("zero", "one", "1")], name="golden"
    )


@pytest.fixture()
def even_shift():
    return SubshiftPresentation.sofic(
        "01", [("A", "A", "1"), ("A", "B", "0"), ("B", "A", "0")], name="even"
    )


@pytest.fixture()
def full_shift():
    return SubshiftPresentation.full_shift(GroupCtx.integers(), "01", name="full")
