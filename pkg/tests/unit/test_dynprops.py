# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for dynprops module."""

import logging

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dynprops import (
    Direction,
    Family,
    GroupHittingSet,
    HittingBundle,
    Property,
    ZHittingSet,
    check_property,
    cylinder_hitting,
    family_transitive,
    format_cylinder,
    glue_fragments,
    hitting,
    inheritance_report,
    parse_cylinder,
    verify_hitting_identities,
)
from errors import (
    EmptySetError,
    InsufficientWindowError,
    MalformedElementError,
    NotApplicableError,
    PartitionRequiredError,
    SearchLimitError,
    UnsupportedGroupError,
)
from finite_system import Cover, FiniteSystem
from patterns import SubshiftPresentation
from settings import SearchBounds
from towers import InverseSystem, build_nested_chain, orbit_space_tower

SHALLOW = SearchBounds(depth=3)


@st.composite
def small_graphs(draw):
    """Random labelled graphs on at most five vertices."""
    n = draw(st.integers(min_value=1, max_value=5))
    edge = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.sampled_from("ab"))
    edges = draw(st.lists(edge, min_size=1, max_size=10, unique=True))
    return SubshiftPresentation.sofic("ab", edges, name="random")


def _fixed_points():
    return SubshiftPresentation.from_forbidden_words("01", ["01", "10"], name="fixed")


def _three_cycle():
    return SubshiftPresentation.sofic(
        "01", [("p", "q", "0"), ("q", "r", "0"), ("r", "p", "1")], name="cycle"
    )


def _overlapping(fs1):
    return Cover(fs1.states, [["a", "b"], ["b", "c"]], ["U0", "U1"], name="overlap")


def _fs1_chain(fs1, fs1_ab):
    return [Cover.trivial(fs1.states), fs1_ab, Cover.singletons(fs1.states)]


def _brute_member(X, u, i, v, j, n, cache):
    d = n - i + j
    lo, hi = min(0, d), max(len(u), d + len(v))
    if hi - lo not in cache:
        cache[hi - lo] = X.transfer_graph.words(hi - lo)
    return any(
        w[-lo : -lo + len(u)] == u and w[d - lo : d - lo + len(v)] == v
        for w in cache[hi - lo]
    )


class TestCylinders:
    """Test parse_cylinder and format_cylinder functions."""

    def test_characters(self):
        """Test that a word without spaces is read symbol by symbol."""
        assert parse_cylinder("10@-2") == (("1", "0"), -2)
        assert parse_cylinder("1") == (("1",), 0)

    def test_spaced(self):
        """Test multi-character symbols."""
        assert parse_cylinder("0|1 1|0@3") == (("0|1", "1|0"), 3)
        assert format_cylinder(("0|1", "1|0"), 3) == "0|1 1|0@3"
        assert format_cylinder(("1", "0")) == "10@0"

    @pytest.mark.parametrize("text", ["@3", "1@x"])
    def test_malformed(self, text):
        """Test that empty words and bad starts are refused."""
        with pytest.raises(MalformedElementError):
            parse_cylinder(text)


class TestSubshiftHitting:
    """Test hitting on ℤ-subshifts."""

    def test_golden_mean(self, golden_mean):
        """Test that two ones must be at least two apart."""
        hs = hitting(golden_mean, "1@0", "1@0")
        assert hs.describe() == "ℤ\\{-1,0,1}"
        assert hs.is_cofinite
        assert hs.missing() == [-1, 0, 1]

    def test_full_shift(self, full_shift):
        """Test that independent coordinates only clash at 0."""
        hs = hitting(full_shift, "0@0", "1@0")
        assert hs.describe() == "ℤ\\{0}"
        assert hs.meets_every_subgroup()

    def test_shifted_cylinders(self, golden_mean):
        """Test that moving V moves the hitting set."""
        hs = hitting(golden_mean, (("1",), 0), (("1",), 2))
        assert hs.members(-5, 1) == [-5, -4, -2, 1]
        assert hs.members(-1, 5) == [1, 2, 3, 4, 5]

    def test_three_cycle(self):
        """Test a residue class of the periodic orbit."""
        hs = hitting(_three_cycle(), "1@0", "1@0")
        assert hs.describe() == "{n ≡ 0 mod 3}\\{0}"
        assert hs.is_syndetic
        assert not hs.is_thick
        assert hs.meets_multiples(2)

    def test_empty_cylinder(self, golden_mean):
        """Test that a cylinder outside the language is refused."""
        with pytest.raises(EmptySetError):
            hitting(golden_mean, "11@0", "1@0")

    def test_lattice(self, z2):
        """Test that only ℤ-subshifts have hitting sets here."""
        X = SubshiftPresentation.full_shift(z2, "01")
        with pytest.raises(UnsupportedGroupError):
            hitting(X, "0@0", "1@0")

    def test_search_limit(self, golden_mean, caplog):
        """Test that the matrix-power cap is enforced."""
        with caplog.at_level(logging.WARNING):
            with pytest.raises(SearchLimitError):
                hitting(golden_mean, "1@0", "1@0", SearchBounds(max_period_steps=1))
        assert "No period" in caplog.text

    @settings(max_examples=60, deadline=None)
    @given(small_graphs(), st.data())
    def test_matches_brute_force(self, X, data):
        """Test matrix reachability against enumerated words for |n| ≤ 10."""
        graph = X.transfer_graph
        assume(not graph.is_empty)
        u = data.draw(st.sampled_from(sorted(graph.words(data.draw(st.integers(1, 2))))))
        v = data.draw(st.sampled_from(sorted(graph.words(data.draw(st.integers(1, 2))))))
        i, j = data.draw(st.integers(-2, 2)), data.draw(st.integers(-2, 2))
        hs = hitting(X, (u, i), (v, j))
        cache: dict = {}
        assert 0 not in hs
        for n in range(-10, 11):
            if n:
                assert (n in hs) == _brute_member(X, u, i, v, j, n, cache)


class TestFiniteHitting:
    """Test hitting on finite systems."""

    def test_fs1(self, fs1):
        """Test the phase set of the three-cycle."""
        hs = hitting(fs1, "a", "b")
        assert isinstance(hs, ZHittingSet)
        assert hs.describe() == "{n ≡ 1 mod 3}"
        assert 4 in hs and (-2,) in hs
        assert 0 not in hs and 3 not in hs
        assert not hs.meets_every_subgroup()

    def test_sets(self, fs1):
        """Test that larger sets give larger hitting sets."""
        small = hitting(fs1, "a", "b")
        large = hitting(fs1, ["a"], ["b", "c"])
        assert small.issubset(large)
        assert not large.issubset(small)
        assert large.describe() == "{n ≡ 1,2 mod 3}"

    def test_swap(self, swap):
        """Test the permutation form over ℤ²."""
        hs = hitting(swap, "a", "b")
        assert isinstance(hs, GroupHittingSet)
        assert (0, 1) in hs and (3, -1) in hs
        assert (1, 0) not in hs and (0, 0) not in hs
        assert hs.is_infinite and hs.is_syndetic
        assert not hs.is_cofinite
        assert not hs.meets_subgroup([(1, 0)])
        assert hs.meets_subgroup([(1, 1)])

    def test_empty(self, fs1):
        """Test that empty sets are refused."""
        with pytest.raises(EmptySetError):
            hitting(fs1, [], "a")


class TestCheckProperty:
    """Test check_property function."""

    def test_golden_mean(self, golden_mean):
        """Test the full property matrix of the golden mean shift."""
        verdicts = {p: check_property(golden_mean, p, SHALLOW) for p in Property}
        for p in Property:
            assert verdicts[p].exact
        assert verdicts[Property.TRANSITIVE].holds
        assert verdicts[Property.WEAKLY_MIXING].holds
        mixing = verdicts[Property.MIXING]
        assert mixing.holds
        assert mixing.certificate["primitivity_index"] == 2
        assert mixing.certificate["matrix"] == [[1, 1], [1, 0]]
        total = verdicts[Property.TOTALLY_TRANSITIVE]
        assert total.holds
        assert total.note == "checked against finitely generated subgroups"
        minimal = verdicts[Property.MINIMAL]
        assert not minimal.holds
        assert minimal.witness == {"proper_subsystem": "0^∞"}
        spec = verdicts[Property.SPECIFICATION]
        assert spec.holds
        assert spec.certificate["gap"] == 2
        assert spec.certificate["F"] == [-2, -1, 0, 1, 2]
        assert spec.witness["gap"] == 2

    def test_three_cycle(self):
        """Test that a periodic orbit is minimal but not mixing."""
        X = _three_cycle()
        assert check_property(X, "minimal", SHALLOW).holds
        assert check_property(X, "transitive", SHALLOW).holds
        mixing = check_property(X, "mixing", SHALLOW)
        assert not mixing.holds
        assert mixing.exact
        assert mixing.witness["U"] == "001@0"

    def test_fixed_points(self):
        """Test that two fixed points are not transitive."""
        verdict = check_property(_fixed_points(), Property.TRANSITIVE, SHALLOW)
        assert not verdict.holds
        assert verdict.witness == {"U": "0@0", "V": "1@0", "hitting": "∅"}
        assert verdict.certificate["components"] == 2

    def test_sofic_mixing_is_bounded(self, even_shift):
        """Test that positive sofic mixing verdicts are not exact."""
        verdict = check_property(even_shift, "mixing", SHALLOW)
        assert verdict.holds
        assert not verdict.exact
        assert verdict.certificate["depth"] == 3

    def test_to_dict(self, golden_mean):
        """Test the JSON view."""
        data = check_property(golden_mean, "minimal").to_dict()
        assert data["property"] == "minimal"
        assert data["holds"] is False

    def test_fs1(self, fs1):
        """Test the finite three-cycle."""
        holds = {p: check_property(fs1, p).holds for p in Property}
        assert holds == {
            Property.TRANSITIVE: True,
            Property.TOTALLY_TRANSITIVE: False,
            Property.WEAKLY_MIXING: False,
            Property.MIXING: False,
            Property.MINIMAL: True,
            Property.SPECIFICATION: False,
        }
        spec = check_property(fs1, "specification")
        assert spec.witness["kernel_element"] == "3"

    def test_one_point(self, z):
        """Test that a single fixed point has every property."""
        point = FiniteSystem(z, ["p"], {}, name="point")
        assert all(check_property(point, p).holds for p in Property)

    def test_swap(self, swap):
        """Test the ℤ² swap system."""
        assert check_property(swap, "transitive").holds
        assert check_property(swap, "minimal").holds
        assert not check_property(swap, "mixing").holds
        total = check_property(swap, "totally_transitive", SearchBounds(radius=1))
        assert not total.holds
        assert total.witness["subgroup"] == "(1,0)"

    def test_lattice_subshift(self, z2):
        """Test that global decisions need ℤ."""
        X = SubshiftPresentation.full_shift(z2, "01")
        with pytest.raises(UnsupportedGroupError):
            check_property(X, "mixing")


class TestFamilyTransitive:
    """Test family_transitive function."""

    @pytest.mark.parametrize("name", ["golden_mean", "full_shift", "even_shift"])
    def test_cofinite_is_mixing(self, request, name):
        """Test that cofinite transitivity agrees with mixing."""
        X = request.getfixturevalue(name)
        verdict = family_transitive(X, Family.COFINITE, SHALLOW)
        assert verdict.holds == check_property(X, "mixing", SHALLOW).holds

    def test_infinite_is_transitive(self, golden_mean):
        """Test that infinite transitivity agrees with transitivity."""
        assert family_transitive(golden_mean, "inf", SHALLOW).holds

    def test_fixed_points(self):
        """Test that a negative verdict carries an exact witness."""
        verdict = family_transitive(_fixed_points(), "inf", SHALLOW)
        assert not verdict.holds
        assert verdict.exact
        assert verdict.witness["hitting"] == "∅"

    def test_three_cycle(self, fs1):
        """Test the period-three orbit as a subshift and as a finite system."""
        for space in (fs1, _three_cycle()):
            assert family_transitive(space, Family.INFINITE, SHALLOW).holds
            cofinite = family_transitive(space, Family.COFINITE, SHALLOW)
            assert not cofinite.holds
            assert cofinite.holds == check_property(space, "mixing", SHALLOW).holds

    def test_thick(self, fs1, full_shift):
        """Test thick transitivity."""
        assert not family_transitive(fs1, "t").holds
        assert family_transitive(full_shift, "t", SHALLOW).holds


class TestGlueFragments:
    """Test glue_fragments function."""

    def test_golden_mean(self, golden_mean):
        """Test that two ones two apart are glued."""
        witness = glue_fragments(golden_mean, [(3, "1"), (0, "1")], 2)
        assert witness.fragments == ((0, ("1",)), (3, ("1",)))
        assert witness.point.word(0, 4) == ("1", "0", "0", "1")
        assert witness.verify()
        assert witness.F == (-2, -1, 0, 1, 2)
        assert witness.to_dict()["fragments"] == ["1@0", "1@3"]

    def test_too_close(self, golden_mean):
        """Test that fragments must respect the gap."""
        with pytest.raises(InsufficientWindowError):
            glue_fragments(golden_mean, [(0, "1"), (2, "1")], 2)

    def test_not_gluable(self):
        """Test that separate fixed points cannot be glued."""
        with pytest.raises(NotApplicableError) as e:
            glue_fragments(_fixed_points(), [(0, "0"), (5, "1")], 0)
        assert e.value.counterexample == ["0@0", "1@5"]


class TestHittingIdentities:
    """Test cylinder_hitting and verify_hitting_identities functions."""

    def test_overlapping_cover_is_strict(self, fs1):
        """Test that overlapping blocks lose a hitting time inside A⁻¹A."""
        U = _overlapping(fs1)
        cyl = cylinder_hitting(fs1, [(0,), (1,)], (0, 0), (1, 1), lambda i: U.blocks[i])
        base = hitting(fs1, "a", "b")
        assert [n for n in base.members(-6, 6) if n not in cyl] == [1]
        assert -2 in cyl

    def test_fs1_bundle(self, fs1, fs1_ab):
        """Test every identity on FS1, its partition, tower and chain."""
        bundle = HittingBundle(
            system=fs1,
            cover=fs1_ab,
            window=[(0,), (1,)],
            tower=orbit_space_tower(fs1, _fs1_chain(fs1, fs1_ab)),
            chain=build_nested_chain(fs1, [(0,), (1,)]),
        )
        report = verify_hitting_identities(bundle)
        assert report.passed
        names = [c.name for c in report.checks]
        assert "limit-hitting-level-2" in names
        assert "point-hitting-level-0" in names
        assert "cylinder-sandwich-equality" in names
        assert "point-cylinder-identity" in names
        assert "tuple-hitting-off-overlaps-1" in names

    def test_cover_sandwich(self, fs1):
        """Test that the strict elements of an overlapping cover are reported."""
        report = verify_hitting_identities(
            HittingBundle(system=fs1, cover=_overlapping(fs1), window=[(0,), (1,)])
        )
        lower = next(c for c in report.checks if c.name == "cylinder-sandwich-lower")
        assert "1" in lower.detail["strict"]
        assert "cylinder-sandwich-equality" not in [c.name for c in report.checks]

    def test_swap_partition(self, swap):
        """Test the ball form over ℤ²."""
        P = Cover.singletons(swap.states)
        bundle = HittingBundle(system=swap, cover=P, window=[(0, 0), (0, 1)], radius=2)
        assert verify_hitting_identities(bundle, SearchBounds(radius=2)).passed


class TestInheritance:
    """Test inheritance_report function."""

    def test_tower(self, fs1, fs1_ab):
        """Test that the limit of the FS1 tower keeps every property of its levels."""
        T = orbit_space_tower(fs1, _fs1_chain(fs1, fs1_ab))
        report = inheritance_report(Direction.TOWER_TO_LIMIT, T)
        assert report.passed
        detail = {c.name: c.detail for c in report.checks}
        assert detail["minimal"] == {"levels": True, "limit": True}
        assert detail["mixing"]["levels"] is False

    def test_orbit_spaces(self, fs1, fs1_ab):
        """Test that the orbit spaces of FS1 are minimal and transitive."""
        report = inheritance_report("orbit-space", (fs1, [fs1_ab, Cover.singletons(fs1.states)]))
        assert report.passed
        assert report.checks[0].name == "P_AB/transitive"
        assert report.checks[4].detail == {"base": True, "orbit_space": True}

    def test_one_point(self, z):
        """Test that a point passes everything on."""
        point = FiniteSystem(z, ["p"], {}, name="point")
        report = inheritance_report("orbit-space", (point, [Cover.trivial(point.states)]))
        assert all(c.detail["orbit_space"] for c in report.checks)

    def test_needs_partitions(self, fs1):
        """Test that orbit spaces need partitions."""
        with pytest.raises(PartitionRequiredError):
            inheritance_report("orbit-space", (fs1, [_overlapping(fs1)]))

    def test_not_ml(self, z):
        """Test that a shrinking tower gives no verdict."""
        levels = [FiniteSystem(z, ["p", "q"], {}), FiniteSystem(z, ["r"], {})]
        report = inheritance_report("tower-limit", InverseSystem(levels, [{"r": "p"}]))
        assert report.precondition_failure == "Mittag-Leffler fails at level 0"
