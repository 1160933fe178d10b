# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for cli module."""

import json
from pathlib import Path

import pytest

import cli
from workspace import load_workspace, parse_workspace

SHIPPED = Path(__file__).resolve().parents[2] / "workspaces"


@pytest.fixture()
def fs1_ws():
    return load_workspace(SHIPPED / "fs1.ws")


@pytest.fixture()
def shifts_ws():
    return load_workspace(SHIPPED / "shifts.ws")


@pytest.fixture()
def swap_ws():
    return load_workspace(SHIPPED / "swap.ws")


def run(command, loaded, **flags):
    ws, text = loaded
    output, code = cli.dispatch(command, ws, flags, text)
    return json.loads(output), code


class TestDispatch:
    """Test dispatch function on the shipped workspaces."""

    def test_po_space(self, fs1_ws):
        """Test that the pseudo-orbit space comes with a parseable presentation."""
        cert, code = run("po-space", fs1_ws, partition="P_AB")
        assert code == cli.EXIT_OK
        assert cert["check"] == "po-space"
        assert cert["verdict"] == "built"
        assert cert["witness"]["alphabet"] == ["A", "B"]
        assert set(cert) == {"check", "instance", "verdict", "witness", "artifact"}
        assert parse_workspace(cert["artifact"]).ok

    def test_orbit_space(self, fs1_ws):
        """Test that P_AB separates the three points of FS1."""
        cert, code = run("orbit-space", fs1_ws, partition="P_AB")
        assert code == cli.EXIT_OK
        assert len(cert["witness"]["points"]) == 3
        assert parse_workspace(cert["artifact"]).ok

    def test_orbit_space_trivial(self, fs1_ws):
        """Test that the trivial partition collapses FS1 to one point."""
        cert, _ = run("orbit-space", fs1_ws, partition="P_X")
        assert len(cert["witness"]["points"]) == 1

    def test_check_shadowing_holds(self, fs1_ws):
        """Test that FS1 has shadowing at P_AB."""
        cert, code = run("check-shadowing", fs1_ws, system="FS1", partition="P_AB")
        assert code == cli.EXIT_OK
        assert cert["verdict"] is True
        assert "counterexample" not in cert["witness"]

    def test_check_shadowing_fails(self, swap_ws):
        """Test that the swap has no shadowing along e1 and exits 1."""
        cert, code = run("check-shadowing", swap_ws, partition="P_pts", S=["e1"])
        assert code == cli.EXIT_NEGATIVE
        assert cert["verdict"] is False
        assert cert["witness"]["counterexample"]

    def test_check_shadowing_shift(self, shifts_ws):
        """Test that an SFT has shadowing."""
        cert, code = run("check-shadowing", shifts_ws, shift="golden_mean", depth=3)
        assert code == cli.EXIT_OK
        assert cert["verdict"] is True

    def test_check_shadowing_sofic(self, shifts_ws):
        """Test that the even shift has no shadowing."""
        cert, code = run("check-shadowing", shifts_ws, shift="even", depth=3)
        assert code == cli.EXIT_NEGATIVE
        assert cert["verdict"] is False

    def test_trace(self, shifts_ws):
        """Test that the lone one is traced at depth 1."""
        cert, code = run(
            "trace", shifts_ws, shift="golden_mean", pseudo_orbit="lone_one", eps_depth=1
        )
        assert code == cli.EXIT_OK
        assert cert["witness"]["required_depth"] == 3

    def test_trace_precision(self, shifts_ws):
        """Test that too fine a tracking depth is a domain error."""
        cert, code = run(
            "trace", shifts_ws, shift="golden_mean", pseudo_orbit="lone_one", eps_depth=2
        )
        assert code == cli.EXIT_ERROR
        assert cert["verdict"] == "error"
        assert cert["error"]["type"] == "PrecisionError"

    def test_tower_build(self, fs1_ws):
        """Test that the orbit-space tower renders and reaches the singletons."""
        cert, code = run("tower build", fs1_ws, partition=["P_X", "P_AB", "P_pts"])
        assert code == cli.EXIT_OK
        assert cert["check"] == "tower-build"
        assert cert["witness"]["levels"] == [1, 3, 3]
        assert cert["witness"]["stationary"] is True
        assert parse_workspace(cert["artifact"]).ok

    def test_tower_threads(self, fs1_ws):
        """Test that the limit of a tower ending in the singletons is FS1 again."""
        cert, code = run("tower threads", fs1_ws, tower="T_FS1")
        assert code == cli.EXIT_OK
        assert cert["witness"]["count"] == 3

    def test_tower_verify(self, fs1_ws):
        """Test bonds and Mittag-Leffler on a workspace tower."""
        cert, code = run("tower verify", fs1_ws, tower="T_FS1")
        assert code == cli.EXIT_OK
        assert cert["verdict"] is True

    def test_tower_verify_swap(self, swap_ws):
        """Test that a level without shadowing gives a negative verdict."""
        cert, code = run("tower verify", swap_ws, partition=["P_X", "P_pts"], S=["e1"])
        assert code == cli.EXIT_NEGATIVE
        assert cert["verdict"] is False

    def test_lift(self, shifts_ws):
        """Test that xor lifts pseudo-orbits and the pair code does not."""
        cert, code = run("factor check-lift", shifts_ws, factor="xor", depth=3)
        assert code == cli.EXIT_OK
        cert, code = run("factor check-lift", shifts_ws, factor="pairs", almost=True, depth=3)
        assert code == cli.EXIT_NEGATIVE
        assert cert["verdict"] is False

    def test_props_golden(self, shifts_ws):
        """Test the property table of the golden mean shift."""
        cert, code = run("props", shifts_ws, shift="golden_mean", depth=3)
        assert code == cli.EXIT_OK
        assert cert["verdict"] == {
            "transitive": True,
            "totally_transitive": True,
            "weakly_mixing": True,
            "mixing": True,
            "minimal": False,
            "specification": True,
        }

    def test_props_selected(self, fs1_ws):
        """Test that --property narrows the table."""
        cert, _ = run("props", fs1_ws, system="FS1", property=["minimal", "mixing"])
        assert cert["verdict"] == {"minimal": True, "mixing": False}

    def test_hitting_golden(self, shifts_ws):
        """Test that two ones must be at least two apart."""
        cert, code = run("hitting", shifts_ws, shift="golden_mean", U="1@0", V="1@0")
        assert code == cli.EXIT_OK
        assert cert["verdict"] == "ℤ\\{-1,0,1}"

    def test_hitting_states(self, fs1_ws):
        """Test comma-separated states on a finite system."""
        cert, code = run("hitting", fs1_ws, system="FS1", U="a", V="b,c")
        assert code == cli.EXIT_OK
        assert cert["verdict"]

    def test_family(self, fs1_ws):
        """Test that the three-cycle is not thickly transitive."""
        cert, code = run("family", fs1_ws, system="FS1", family="t")
        assert code == cli.EXIT_NEGATIVE
        assert cert["verdict"] is False

    def test_verify_lemmas(self, fs1_ws):
        """Test the identity battery on FS1."""
        cert, code = run("verify-lemmas", fs1_ws, partition=["P_X", "P_AB"])
        assert code == cli.EXIT_OK
        assert cert["verdict"] is True
        assert cert["witness"]["checks"] > 0

    def test_unresolved_name(self, fs1_ws):
        """Test that an undefined name is an error with a diagnostic."""
        cert, code = run("orbit-space", fs1_ws, partition="P9")
        assert code == cli.EXIT_ERROR
        assert cert["verdict"] == "error"
        assert cert["error"]["diagnostics"][0]["code"] == "UNRESOLVED_REF"

    def test_empty_chain(self, fs1_ws):
        """Test that tower commands need a partition chain."""
        cert, code = run("tower build", fs1_ws, partition=[], system="FS1")
        assert code == cli.EXIT_ERROR
        assert "--partition" in cert["error"]["message"]

    def test_unknown_command(self, fs1_ws):
        """Test that dispatch refuses commands it does not know."""
        cert, code = run("reticulate", fs1_ws)
        assert code == cli.EXIT_ERROR
        assert "unknown command" in cert["error"]["message"]


class TestCertificate:
    """Test the certificate envelope."""

    def test_deterministic(self, shifts_ws):
        """Test that the same input gives byte-identical certificates."""
        ws, text = shifts_ws
        flags = {"shift": "golden_mean", "depth": 3}
        first = cli.dispatch("props", ws, flags, text)
        second = cli.dispatch("props", ws, dict(flags), text)
        assert first == second

    def test_instance(self, fs1_ws):
        """Test that the instance digest follows the flags and ignores --verbose."""
        plain, _ = run("orbit-space", fs1_ws, partition="P_AB")
        verbose, _ = run("orbit-space", fs1_ws, partition="P_AB", verbose=True)
        other, _ = run("orbit-space", fs1_ws, partition="P_X")
        assert plain["instance"] == verbose["instance"]
        assert plain["instance"] != other["instance"]
        assert len(plain["instance"]) == 16


class TestMain:
    """Test main function."""

    def test_main(self, capsys):
        """Test a full run from arguments to stdout."""
        argv = ["hitting", str(SHIPPED / "shifts.ws"), "--shift", "golden_mean"]
        code = cli.main([*argv, "--U", "1@0", "--V", "1@0"])
        assert code == cli.EXIT_OK
        cert = json.loads(capsys.readouterr().out)
        assert cert["check"] == "hitting"
        assert cert["verdict"] == "ℤ\\{-1,0,1}"

    def test_nested_command(self, capsys):
        """Test that nested commands are joined."""
        code = cli.main(["tower", "threads", str(SHIPPED / "fs1.ws"), "--tower", "T_FS1"])
        assert code == cli.EXIT_OK
        assert json.loads(capsys.readouterr().out)["check"] == "tower-threads"

    def test_broken_workspace(self, tmp_path, capsys):
        """Test that workspace diagnostics exit 2 with an error certificate."""
        path = tmp_path / "bad.ws"
        path.write_text("group Q\n", encoding="utf-8")
        code = cli.main(["props", str(path), "--system", "S"])
        assert code == cli.EXIT_ERROR
        cert = json.loads(capsys.readouterr().out)
        assert cert["error"]["diagnostics"] == [
            {"line": 1, "code": "SYNTAX", "message": "unknown group 'Q'"}
        ]

    def test_usage_error(self):
        """Test that argparse rejects a missing required flag."""
        with pytest.raises(SystemExit) as e:
            cli.main(["family", str(SHIPPED / "fs1.ws")])
        assert e.value.code == 2
