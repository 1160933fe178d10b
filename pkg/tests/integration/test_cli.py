#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

import json
import logging
import os
import subprocess
import sys
from pathlib import Path

import pytest

logger = logging.getLogger(__name__)

ROOT = Path(__file__).resolve().parents[2]
CLI = ROOT / "src" / "cli.py"
WORKSPACES = ROOT / "workspaces"


def sftlab(*args: str, **env: str) -> subprocess.CompletedProcess:
    """Run the command line as a user would, from a clean interpreter."""
    env = {**os.environ, "PYTHONIOENCODING": "utf-8", **env}
    cmd = [sys.executable, str(CLI), *args]
    logger.info(f"Running {' '.join(cmd[1:])}")
    return subprocess.run(cmd, capture_output=True, encoding="utf-8", timeout=600, env=env)


@pytest.mark.parametrize(
    "command, workspace, flags",
    [
        (["check-shadowing"], "fs1.ws", ["--system", "FS1", "--partition", "P_AB"]),
        (["po-space"], "fs1.ws", ["--partition", "P_AB", "--S", "+1"]),
        (["tower", "build"], "fs1.ws", ["--partition", "P_X", "--partition", "P_AB"]),
        (["hitting"], "shifts.ws", ["--shift", "golden_mean", "--U", "1@0", "--V", "1@0"]),
    ],
)
def test_byte_identical(command, workspace, flags):
    """Two runs on the same input print the same bytes."""
    argv = [*command, str(WORKSPACES / workspace), *flags]
    first, second = sftlab(*argv), sftlab(*argv)
    assert first.returncode == 0, first.stderr
    assert first.stdout == second.stdout


def test_check_shadowing_fs1():
    """The three-cycle has shadowing at P_AB."""
    run = sftlab(
        "check-shadowing", str(WORKSPACES / "fs1.ws"), "--system", "FS1", "--partition", "P_AB"
    )
    assert run.returncode == 0, run.stderr
    cert = json.loads(run.stdout)
    assert cert["check"] == "check-shadowing"
    assert cert["verdict"] is True


def test_swap_negative():
    """A negative verdict on an asserting command exits 1."""
    swap = str(WORKSPACES / "swap.ws")
    run = sftlab("check-shadowing", swap, "--partition", "P_pts", "--S", "e1")
    assert run.returncode == 1, run.stderr
    assert json.loads(run.stdout)["verdict"] is False


def test_golden_hitting():
    """Two ones of the golden mean shift sit at least two apart."""
    shifts = str(WORKSPACES / "shifts.ws")
    run = sftlab("hitting", shifts, "--shift", "golden_mean", "--U", "1@0", "--V", "1@0")
    assert run.returncode == 0, run.stderr
    assert json.loads(run.stdout)["verdict"] == "ℤ\\{-1,0,1}"


def test_props_table():
    """The property table of the golden mean shift."""
    run = sftlab("props", str(WORKSPACES / "shifts.ws"), "--shift", "golden_mean", "--depth", "3")
    assert run.returncode == 0, run.stderr
    table = json.loads(run.stdout)["verdict"]
    assert table["mixing"] is True
    assert table["minimal"] is False


def test_bounds_from_environment():
    """Search bounds are read from SFTLAB_ variables."""
    run = sftlab("props", str(WORKSPACES / "shifts.ws"), "--shift", "even", SFTLAB_DEPTH="3")
    assert run.returncode == 0, run.stderr
    assert json.loads(run.stdout)["witness"]["mixing"]["certificate"]["depth"] == 3


def test_workspace_diagnostics(tmp_path):
    """A broken workspace exits 2 and logs each diagnostic on stderr."""
    path = tmp_path / "broken.ws"
    path.write_text("system S\n  states a b\n  gen +1 images a a\n", encoding="utf-8")
    run = sftlab("props", str(path), "--system", "S")
    assert run.returncode == 2
    assert "line 3: NOT_A_PERMUTATION" in run.stderr
    cert = json.loads(run.stdout)
    assert cert["verdict"] == "error"


def test_usage_error():
    """A missing subcommand is a usage error."""
    run = sftlab()
    assert run.returncode == 2
    assert run.stdout == ""
