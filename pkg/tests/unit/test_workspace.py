# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for workspace module."""

import logging
from pathlib import Path

import numpy as np
import pytest

from errors import WorkspaceError
from factor_lift import BlockCode, StateFactor
from finite_system import Cover
from group_core import GroupCtx
from shadowing import Carrier, ZPseudoOrbit
from towers import orbit_space_tower
from workspace import (
    DiagnosticCode,
    load_workspace,
    parse_workspace,
    render_cover,
    render_document,
    render_subshift,
    render_system,
    render_tower,
)

SHIPPED = Path(__file__).resolve().parents[2] / "workspaces"

FS1_TEXT = """\
group Z

system FS1   # the three-cycle
  states a b c
  gen +1 images b c a
  metric uniform 1

partition P_AB on FS1
  A = a
  B = b c

cover U_overlap on FS1
  L = a b
  R = b c
"""


def codes(text):
    return [d.code for d in parse_workspace(text).diagnostics]


class TestParse:
    """Test building objects from workspace text."""

    def test_fs1(self, fs1):
        """Test that the three-cycle parses to the fixture system."""
        ws = parse_workspace(FS1_TEXT)
        assert ws.ok
        sys = ws.system("FS1")
        assert sys.states == fs1.states
        assert sys.generator_perm(0) == fs1.generator_perm(0)
        assert np.array_equal(sys.metric, fs1.metric)
        assert ws.summary() == {
            "group": "Z",
            "systems": 1,
            "partitions": 1,
            "covers": 1,
            "shifts": 0,
            "factors": 0,
            "towers": 0,
            "pseudo_orbits": 0,
        }

    def test_cover_lookup(self):
        """Test that a cover comes back with the system it covers."""
        ws = parse_workspace(FS1_TEXT)
        U, sys = ws.cover("P_AB")
        assert sys is ws.system("FS1")
        assert list(U.names) == ["A", "B"]
        assert U.is_partition
        assert not ws.cover("U_overlap")[0].is_partition

    def test_default_group(self):
        """Test that a file without a group line works over ℤ."""
        ws = parse_workspace("system S\n  states x y\n  gen +1 cycles (x y)\n")
        assert ws.ok
        assert ws.ctx == GroupCtx.integers()
        assert ws.system("S").apply((1,), "x") == "y"

    def test_cycles_on_lattice(self, swap):
        """Test cycle notation and the identity default for unlisted generators."""
        ws = parse_workspace("group Z^2\nsystem swap\n  states a b\n  gen e2 cycles (a b)\n")
        assert ws.ok
        sys = ws.system("swap")
        assert sys.generator_perm(0) == swap.generator_perm(0)
        assert sys.generator_perm(1) == swap.generator_perm(1)

    def test_free_group(self):
        """Test that free-group generators are named a, b."""
        ws = parse_workspace(
            "group free 2\nsystem F\n  states x y z\n  gen a images y z x\n  gen b images y x z\n"
        )
        assert ws.ok
        assert str(ws.ctx) == "free 2"
        assert ws.system("F").apply(ws.ctx.parse("a"), "x") == "y"
        assert ws.system("F").apply(ws.ctx.parse("b^-1"), "z") == "z"

    def test_subshifts_and_code(self, golden_mean, even_shift):
        """Test sft, sofic and code sections together."""
        ws = parse_workspace(
            "sft golden\n  alphabet 0 1\n  window 0 1\n  forbid 1 1\n"
            "sofic even\n  alphabet 0 1\n  edge A A 1\n  edge A B 0\n  edge B A 0\n"
            "code pairs golden -> even\n  window 0 1\n"
            "  rule 0 0 -> 1\n  rule 0 1 -> 0\n  rule 1 0 -> 0\n"
        )
        assert ws.ok
        golden = ws.shift("golden")
        assert golden.forbidden == golden_mean.forbidden
        assert golden.window == golden_mean.window
        code = ws.factor("pairs")
        assert isinstance(code, BlockCode)
        assert code.apply_word(tuple("00100")) == ("1", "0", "0", "1")

    def test_state_factor(self):
        """Test a factor section between two systems."""
        ws = parse_workspace(
            "system C3\n  states a b c\n  gen +1 images b c a\n"
            "system P\n  states p\n"
            "factor collapse C3 -> P\n  map a p\n  map b p\n  map c p\n"
        )
        assert ws.ok
        phi = ws.factor("collapse")
        assert isinstance(phi, StateFactor)

    def test_orbit_space_tower(self, fs1):
        """Test that a tower of partitions is the orbit-space tower of that chain."""
        ws = parse_workspace(
            FS1_TEXT + "\npartition P_pts on FS1\n  a = a\n  b = b\n  c = c\n"
            "tower T\n  level P_AB\n  level P_pts\n"
        )
        assert ws.ok
        T = ws.tower("T")
        assert T.name == "T"
        assert [len(s) for s in T.spaces] == [3, 3]
        assert T.stationary

    def test_system_tower(self):
        """Test a tower given by level systems and bonds."""
        ws = parse_workspace(
            "system C2\n  states p q\n  gen +1 cycles (p q)\n"
            "system C4\n  states a b c d\n  gen +1 cycles (a b c d)\n"
            "tower T\n  level C2\n  level C4\n"
            "  bond 1 a p\n  bond 1 b q\n  bond 1 c p\n  bond 1 d q\n"
        )
        assert ws.ok
        assert ws.tower("T").bond(0, 1) == {"a": "p", "b": "q", "c": "p", "d": "q"}

    def test_pseudo_orbit(self):
        """Test carrier words, the empty middle and switch sites."""
        ws = parse_workspace(
            "sft golden\n  alphabet 0 1\n  window 0 1\n  forbid 1 1\n"
            "pseudo-orbit lone on golden\n  depth 3\n"
            "  carrier 0 - 0 0\n  carrier 0 1 0 -4\n  switch 0\n"
        )
        assert ws.ok
        zeros = Carrier(("0",), (), ("0",))
        one = Carrier(("0",), ("1",), ("0",), origin=-4)
        assert ws.pseudo_orbit("lone") == ZPseudoOrbit((zeros, one), (0,), 3, name="lone")

    def test_comments_and_blank_lines(self):
        """Test that comments and blank lines are ignored."""
        ws = parse_workspace("# header\n\nsystem S   # one point\n\n  states x  # only\n")
        assert ws.ok

    def test_shipped_workspaces(self):
        """Test that the workspaces in the repository parse cleanly."""
        paths = sorted(SHIPPED.glob("*.ws"))
        assert paths
        for path in paths:
            ws, text = load_workspace(path)
            assert ws.ok, path
            assert text


class TestDiagnostics:
    """Test that every problem becomes a located diagnostic."""

    def test_unresolved_reference(self):
        """Test that a cover of an undefined system is reported at its header."""
        ws = parse_workspace(FS1_TEXT + "partition P9 on FS9\n  X = a\n")
        [diagnostic] = ws.diagnostics
        assert diagnostic.code == DiagnosticCode.UNRESOLVED_REF
        assert diagnostic.line == 15
        assert "FS9" in diagnostic.message
        assert "P_AB" in ws.covers

    def test_not_a_permutation(self):
        """Test that a repeated image is reported at the generator line."""
        ws = parse_workspace("system S\n  states a b c\n  gen +1 images b b a\n")
        [diagnostic] = ws.diagnostics
        assert diagnostic.code == DiagnosticCode.NOT_A_PERMUTATION
        assert diagnostic.line == 3
        assert "S" not in ws.systems

    def test_bad_cycles(self):
        """Test that a state repeated across cycles is refused."""
        assert codes("system S\n  states a b c\n  gen +1 cycles (a b) (b c)\n") == [
            DiagnosticCode.NOT_A_PERMUTATION
        ]

    def test_unknown_generator(self):
        """Test that e3 is not a generator of ℤ²."""
        assert codes("group Z^2\nsystem S\n  states a\n  gen e3 images a\n") == [
            DiagnosticCode.UNKNOWN_GENERATOR
        ]

    def test_generator_given_twice(self):
        """Test that a generator may only be set once."""
        text = "system S\n  states a b\n  gen +1 images b a\n  gen +1 images a b\n"
        assert codes(text) == [DiagnosticCode.DUPLICATE_NAME]

    def test_duplicate_name(self):
        """Test that one namespace is shared by every section kind."""
        text = "system S\n  states a\nsft S\n  alphabet 0\n"
        ws = parse_workspace(text)
        [diagnostic] = ws.diagnostics
        assert diagnostic.code == DiagnosticCode.DUPLICATE_NAME
        assert diagnostic.line == 3
        assert "S" in ws.systems

    @pytest.mark.parametrize(
        "body",
        [
            "  X = a b\n",
            "  X = a b c d\n",
        ],
    )
    def test_not_a_cover(self, body):
        """Test that blocks must cover exactly the states."""
        assert codes(FS1_TEXT + "cover bad on FS1\n" + body) == [DiagnosticCode.NOT_A_COVER]

    def test_empty_cover(self):
        """Test that a cover needs blocks."""
        assert codes(FS1_TEXT + "cover bad on FS1\n") == [DiagnosticCode.NOT_A_COVER]

    def test_overlapping_partition(self):
        """Test that a partition section may not overlap."""
        text = FS1_TEXT + "partition bad on FS1\n  L = a b\n  R = b c\n"
        assert codes(text) == [DiagnosticCode.NOT_A_COVER]

    def test_non_commuting(self):
        """Test that lattice generators must commute."""
        text = (
            "group Z^2\nsystem S\n  states a b c\n"
            "  gen e1 cycles (a b c)\n  gen e2 cycles (a b)\n"
        )
        assert codes(text) == [DiagnosticCode.NON_COMMUTING]

    @pytest.mark.parametrize(
        "metric",
        [
            "  metric row a 0 1\n  metric row b 1 1\n",
            "  metric row a 0 5\n",
            "  metric uniform 0\n",
        ],
    )
    def test_bad_metric(self, metric):
        """Test asymmetric, missing and degenerate metrics."""
        text = "system S\n  states a b\n" + metric
        assert codes(text) == [DiagnosticCode.BAD_METRIC]

    def test_bad_value(self):
        """Test that field validation failures are reported."""
        text = "sft g\n  alphabet 0 1\npseudo-orbit p on g\n  depth -1\n  carrier 0 - 0 0\n"
        assert codes(text) == [DiagnosticCode.BAD_VALUE]

    @pytest.mark.parametrize(
        "text",
        [
            "group Q\n",
            "group Z\ngroup Z^2\n",
            "  states a\n",
            "system\n",
            "partition P of S\n",
            "system S\n  states a\n  colour red\n",
        ],
    )
    def test_syntax(self, text):
        """Test malformed headers, stray lines and unknown body lines."""
        assert codes(text) == [DiagnosticCode.SYNTAX]

    def test_body_of_rejected_header(self):
        """Test that the body of a malformed header is not reported line by line."""
        assert codes("system A B\n  states a\n  gen +1 images a\n") == [DiagnosticCode.SYNTAX]

    def test_failed_section_stays_quiet(self):
        """Test that references to a section that failed to build add nothing."""
        text = "system S\n  states a b\n  gen +1 images a a\npartition P on S\n  X = a b\n"
        assert codes(text) == [DiagnosticCode.NOT_A_PERMUTATION]

    def test_partial_results(self):
        """Test that sections that could be built are returned."""
        ws = parse_workspace(FS1_TEXT + "system T\n  states\n")
        assert not ws.ok
        assert "FS1" in ws.systems

    def test_logged(self, caplog):
        """Test that diagnostics are logged as warnings."""
        with caplog.at_level(logging.WARNING):
            parse_workspace("group Q\n")
        assert "Workspace line 1: SYNTAX" in caplog.text

    def test_str(self):
        """Test the rendered diagnostic."""
        [diagnostic] = parse_workspace("group Q\n").diagnostics
        assert str(diagnostic) == "line 1: SYNTAX: unknown group 'Q'"
        assert diagnostic.to_dict() == {
            "line": 1,
            "code": "SYNTAX",
            "message": "unknown group 'Q'",
        }


class TestLookup:
    """Test name lookups on a parsed workspace."""

    def test_missing_name(self):
        """Test that looking up an undefined name raises with a diagnostic."""
        ws = parse_workspace(FS1_TEXT)
        with pytest.raises(WorkspaceError, match="no subshift named 'golden'") as e:
            ws.shift("golden")
        assert e.value.diagnostics[0].code == DiagnosticCode.UNRESOLVED_REF

    def test_wrong_kind(self):
        """Test that a system is not a factor."""
        with pytest.raises(WorkspaceError):
            parse_workspace(FS1_TEXT).factor("FS1")


class TestLoad:
    """Test reading workspace files."""

    def test_missing_file(self, tmp_path):
        """Test that an unreadable file raises."""
        with pytest.raises(WorkspaceError, match="cannot read"):
            load_workspace(tmp_path / "absent.ws")

    def test_diagnostics_raise(self, tmp_path):
        """Test that a file with problems raises with its diagnostics."""
        path = tmp_path / "bad.ws"
        path.write_text("group Q\nsystem S\n  states a\n", encoding="utf-8")
        with pytest.raises(WorkspaceError, match="1 problems") as e:
            load_workspace(path)
        assert [d.line for d in e.value.diagnostics] == [1]


class TestRender:
    """Test that rendered sections parse back to equal values."""

    def test_system(self, fs1, swap):
        """Test systems with and without identity generators."""
        for sys in (fs1, swap):
            ws = parse_workspace(render_document(sys.ctx, [render_system(sys)]))
            assert ws.ok
            back = ws.system(sys.name)
            assert back.states == sys.states
            for i in range(sys.ctx.rank):
                assert back.generator_perm(i) == sys.generator_perm(i)
            assert np.array_equal(back.metric, sys.metric)

    def test_cover(self, fs1, fs1_ab):
        """Test that a partition keeps its blocks and names."""
        text = render_document(fs1.ctx, [render_system(fs1), render_cover(fs1_ab, "FS1")])
        U, _ = parse_workspace(text).cover("P_AB")
        assert list(U.names) == list(fs1_ab.names)
        assert [set(b) for b in U.blocks] == [set(b) for b in fs1_ab.blocks]
        assert render_cover(fs1_ab, "FS1").startswith("partition P_AB on FS1")

    def test_subshifts(self, golden_mean, even_shift):
        """Test sft and sofic sections."""
        text = render_document(
            GroupCtx.integers(), [render_subshift(golden_mean), render_subshift(even_shift)]
        )
        ws = parse_workspace(text)
        assert ws.ok
        assert ws.shift("golden").forbidden == golden_mean.forbidden
        assert sorted(ws.shift("even").edges) == sorted(even_shift.edges)

    def test_tower(self, fs1, fs1_ab):
        """Test that a rendered orbit-space tower keeps its bonds."""
        T = orbit_space_tower(fs1, [fs1_ab, Cover.singletons(fs1.states)])
        text = render_document(fs1.ctx, [render_tower(T, "T")])
        ws = parse_workspace(text)
        assert ws.ok
        back = ws.tower("T")
        assert back.spaces == T.spaces
        assert back.bonds == T.bonds
        assert back.stationary == T.stationary
