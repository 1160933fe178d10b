#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Command line entry point: load a workspace, run one check, print its certificate.

Every command prints one JSON certificate on stdout with the fields ``check``,
``instance``, ``verdict`` and ``witness``. Logs go to stderr. Exit status 0 means a
verdict was computed, 1 a negative verdict on an asserting command, 2 a usage,
parse or domain error.
"""

import argparse
import logging
import sys
from typing import Any, Callable, Mapping, Sequence

from certificates import Report
from dynprops import (
    Direction,
    Family,
    HittingBundle,
    Property,
    Space,
    check_property,
    family_transitive,
    hitting,
    inheritance_report,
    verify_hitting_identities,
)
from errors import Error, InconsistencyError, NotApplicableError, WorkspaceError
from factor_lift import (
    BlockCode,
    check_almost_lifts,
    check_factor_shadowing_transfer,
    check_lifts,
    check_tower_factor_shadowing,
    thread_factor,
)
from finite_system import Cover, FiniteSystem
from group_core import GroupCtx, GroupElement
from orbit_spaces import (
    build_orbit_space,
    build_po_space,
    check_shadowing_td,
    verify_block_map_identities,
)
from settings import SearchBounds, load_bounds
from shadowing import crosscheck_metric_and_cover_shadowing, shadowing_decide, trace
from towers import (
    InverseSystem,
    build_nested_chain,
    check_limit_preserves_shadowing,
    check_ml,
    conjugate_towers,
    limit_threads,
    orbit_space_tower,
    pseudo_orbit_tower,
)
from utils import canonical_json, instance_digest
from workspace import (
    Workspace,
    load_workspace,
    render_document,
    render_subshift,
    render_system,
    render_tower,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2

Flags = Mapping[str, Any]
Outcome = tuple[dict, int]

_IGNORED_FLAGS = ("verbose",)


def _configure_logging(verbose: bool = False) -> None:
    """Send logs to stderr so the certificate on stdout stays machine readable."""
    level = logging.DEBUG if verbose else logging.WARNING
    fmt = "%(levelname)s: %(message)s"
    logging.basicConfig(level=level, format=fmt, stream=sys.stderr, force=True)


# flag helpers


def _steps(ctx: GroupCtx, flags: Flags) -> list[GroupElement]:
    """Return the parsed ``--S`` elements, the generators when none are given."""
    return [ctx.parse(s) for s in flags.get("S") or []] or list(ctx.generators)


def _system_cover(ws: Workspace, flags: Flags) -> tuple[FiniteSystem, Cover]:
    U, sys = ws.cover(flags["partition"])
    if flags.get("system") and ws.system(flags["system"]) is not sys:
        raise WorkspaceError(f"{flags['partition']} is not a cover of {flags['system']}")
    return sys, U


def _chain(ws: Workspace, flags: Flags) -> tuple[FiniteSystem, list[Cover]]:
    names = flags.get("partition") or []
    if not names:
        raise WorkspaceError("give the partition chain with --partition, coarsest first")
    bases = {ws.cover(n)[1].name for n in names}
    if len(bases) != 1:
        raise WorkspaceError(f"the chain mixes partitions of {sorted(bases)}")
    sys = ws.cover(names[0])[1]
    if flags.get("system") and ws.system(flags["system"]) is not sys:
        raise WorkspaceError(f"the chain does not cover {flags['system']}")
    return sys, [ws.cover(n)[0] for n in names]


def _space(ws: Workspace, flags: Flags) -> Space:
    if flags.get("shift"):
        return ws.shift(flags["shift"])
    if flags.get("system"):
        return ws.system(flags["system"])
    raise WorkspaceError("give --shift or --system")


def _tower(ws: Workspace, flags: Flags) -> InverseSystem:
    if flags.get("tower"):
        return ws.tower(flags["tower"])
    sys, chain = _chain(ws, flags)
    return orbit_space_tower(sys, chain)


def _open_set(space: Space, text: str) -> str | list[str]:
    """Return a cylinder literal as is, or the comma-separated states of a system."""
    if isinstance(space, FiniteSystem):
        return [x for x in text.split(",") if x]
    return text


def _asserted(check: str, holds: bool, witness: Any, **extra: Any) -> Outcome:
    certificate = {"check": check, "verdict": holds, "witness": witness, **extra}
    return certificate, EXIT_OK if holds else EXIT_NEGATIVE


def _built(check: str, verdict: Any, witness: Any, **extra: Any) -> Outcome:
    return {"check": check, "verdict": verdict, "witness": witness, **extra}, EXIT_OK


# commands


def _po_space(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    sys, U = _system_cover(ws, flags)
    po = build_po_space(sys, U, _steps(sys.ctx, flags))
    witness = {
        "window": [sys.ctx.format(g) for g in po.window],
        "alphabet": list(po.alphabet),
        "allowed": len(po.allowed),
        "forbidden": sorted(" ".join(p) for p in po.forbidden),
    }
    artifact = render_document(sys.ctx, [render_subshift(po.presentation)])
    return _built("po-space", "built", witness, artifact=artifact)


def _orbit_space(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    sys, U = _system_cover(ws, flags)
    orbit = build_orbit_space(sys, U)
    classes = orbit.classes
    witness = {
        "points": list(orbit.points),
        "classes": {
            name: sorted(block, key=sys.index)
            for name, block in zip(classes.names, classes.blocks)
        },
        "distinguishing_radius": orbit.distinguishing_radius,
    }
    artifact = render_document(sys.ctx, [render_system(orbit.as_system())])
    return _built("orbit-space", "built", witness, artifact=artifact)


def _check_shadowing(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    if flags.get("shift"):
        X = ws.shift(flags["shift"])
        S = [X.ctx.parse(s) for s in flags["S"]] if flags.get("S") else None
        decision = shadowing_decide(X, S, bounds)
        return _asserted("check-shadowing", decision.holds, decision.to_dict())
    sys, U = _system_cover(ws, flags)
    verdict = check_shadowing_td(sys, _steps(sys.ctx, flags), U, bounds)
    witness: dict[str, Any] = {"report": verdict.report.to_dict()}
    if verdict.witness is not None:
        witness.update(V=verdict.witness.name, blocks=list(verdict.witness.names))
    if verdict.counterexample is not None:
        witness["counterexample"] = verdict.counterexample.to_dict(verdict.window)
        witness["image"] = {sys.ctx.format(g): b for g, b in verdict.image(U).items()}
    return _asserted("check-shadowing", verdict.holds, witness)


def _trace(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    X = ws.shift(flags["shift"])
    po = ws.pseudo_orbit(flags["pseudo_orbit"])
    result = trace(X, po, flags.get("eps_depth") or 0, bounds)
    return _asserted("trace", True, result.to_dict())


def _tower_build(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    sys, chain = _chain(ws, flags)
    if flags.get("S"):
        window = sys.ctx.ball(None, flags.get("window_radius") or 1)
        T = pseudo_orbit_tower(sys, _steps(sys.ctx, flags), chain, window, bounds)
    else:
        T = orbit_space_tower(sys, chain)
    ml = check_ml(T)
    witness = {
        "levels": [len(s) for s in T.spaces],
        "stationary": T.stationary,
        "ml": ml.to_dict(),
    }
    artifact = render_document(sys.ctx, [render_tower(T)])
    return _built("tower-build", "built", witness, artifact=artifact)


def _tower_verify(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    T = _tower(ws, flags)
    report = T.verify()
    ml = check_ml(T)
    report.add("mittag-leffler", ml.holds, ml.to_dict())
    if flags.get("S"):
        S = _steps(ws.ctx, flags)
        report.extend(check_limit_preserves_shadowing(T, S, bounds), prefix="limit/")
        if not flags.get("tower"):
            sys, chain = _chain(ws, flags)
            conjugacy = conjugate_towers(sys, S, chain, bounds)
            report.extend(conjugacy.report, prefix="conjugacy/")
    return _asserted("tower-verify", report.passed, report.to_dict())


def _tower_threads(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    threads = limit_threads(_tower(ws, flags))
    witness = {"count": len(threads), "threads": [threads.name(t) for t in threads.threads]}
    return _built("tower-threads", "enumerated", witness)


def _factor_check_lift(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    phi = ws.factor(flags["factor"])
    S = None if isinstance(phi, BlockCode) else _steps(ws.ctx, flags)
    U_X = ws.cover(flags["cover"])[0] if flags.get("cover") else None
    if flags.get("almost"):
        metric = bool(flags.get("metric"))
        verdict = check_almost_lifts(phi, S, U_X, bounds=bounds, metric=metric)
    else:
        verdict = check_lifts(phi, S, U_X, bounds)
    return _asserted("factor-check-lift", verdict.holds, verdict.to_dict())


def _factor_harness(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    S = _steps(ws.ctx, flags)
    if flags.get("tower"):
        T = ws.tower(flags["tower"])
        if flags.get("factor"):
            phi = ws.factor(flags["factor"])
            if isinstance(phi, BlockCode):
                raise WorkspaceError("the tower harness needs a state factor")
        else:
            phi = thread_factor(T, ws.system(flags["system"]))
        report = check_tower_factor_shadowing(T, phi, S, bounds)
    else:
        phi = ws.factor(flags["factor"])
        report = check_factor_shadowing_transfer(
            phi, None if isinstance(phi, BlockCode) else S, bounds
        )
    return _asserted("factor-harness", report.passed, report.to_dict())


def _props(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    space = _space(ws, flags)
    props = [Property(p) for p in flags.get("property") or []] or list(Property)
    verdicts = {p.value: check_property(space, p, bounds) for p in props}
    table = {name: v.holds for name, v in verdicts.items()}
    return _built("props", table, {name: v.to_dict() for name, v in verdicts.items()})


def _hitting(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    space = _space(ws, flags)
    hs = hitting(space, _open_set(space, flags["U"]), _open_set(space, flags["V"]), bounds)
    return _built("hitting", hs.describe(), hs.to_dict())


def _family(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    verdict = family_transitive(_space(ws, flags), flags["family"], bounds)
    return _asserted("family", verdict.holds, verdict.to_dict())


def _verify_lemmas(ws: Workspace, flags: Flags, bounds: SearchBounds) -> Outcome:
    sys, chain = _chain(ws, flags)
    S = _steps(sys.ctx, flags)
    singletons = Cover.singletons(sys.states)
    U = chain[0]
    V = chain[1] if len(chain) > 1 else singletons
    report = Report("verify-lemmas")
    report.extend(verify_block_map_identities(sys, U, V, S), prefix="block-map/")

    levels = chain if chain[-1].is_singletons else [*chain, singletons]
    T = orbit_space_tower(sys, levels)
    window = list(dict.fromkeys([sys.ctx.identity, *S]))
    nested = build_nested_chain(sys) if sys.has_metric else None
    bundle = HittingBundle(sys, U, window, T, nested, radius=bounds.radius)
    report.extend(verify_hitting_identities(bundle, bounds), prefix="hitting/")
    report.extend(inheritance_report(Direction.TOWER_TO_LIMIT, T, bounds), prefix="inheritance/")
    orbit_spaces = inheritance_report(Direction.BASE_TO_ORBIT_SPACE, (sys, chain), bounds)
    report.extend(orbit_spaces, prefix="inheritance/")
    if sys.has_metric:
        metric = crosscheck_metric_and_cover_shadowing(sys, S, bounds)
        report.extend(metric, prefix="metric/")
    witness = {"checks": len(report.checks), "report": report.to_dict()}
    return _asserted("verify-lemmas", report.passed, witness)


_COMMANDS: dict[str, Callable[[Workspace, Flags, SearchBounds], Outcome]] = {
    "po-space": _po_space,
    "orbit-space": _orbit_space,
    "check-shadowing": _check_shadowing,
    "trace": _trace,
    "tower build": _tower_build,
    "tower verify": _tower_verify,
    "tower threads": _tower_threads,
    "factor check-lift": _factor_check_lift,
    "factor harness": _factor_harness,
    "props": _props,
    "hitting": _hitting,
    "family": _family,
    "verify-lemmas": _verify_lemmas,
}


def _instance(source: str, command: str, flags: Flags) -> str:
    """Digest the workspace text, the command and the flags that were set."""
    normalized = {
        k: v
        for k, v in flags.items()
        if k not in _IGNORED_FLAGS and v is not None and v != [] and v is not False
    }
    return instance_digest(source, command, canonical_json(normalized))


def _failure(command: str, e: Error) -> dict:
    error: dict[str, Any] = {"type": type(e).__name__, "message": e.message}
    if isinstance(e, WorkspaceError):
        error["diagnostics"] = [d.to_dict() for d in e.diagnostics]
    check = command.replace(" ", "-")
    return {"check": check, "verdict": "error", "witness": None, "error": error}


def dispatch(command: str, ws: Workspace, flags: Flags, source: str = "") -> tuple[str, int]:
    """Run one command on a parsed workspace.

    Args:
        command: One of the command names, ``tower build`` style for nested ones.
        ws: The parsed workspace.
        flags: Parsed command-line flags by destination name.
        source: The workspace text, digested into the certificate.

    Returns:
        tuple[str, int]: The JSON certificate and the exit status.
    """
    handler = _COMMANDS.get(command)
    if handler is None:
        certificate, code = _failure(command, Error(f"unknown command {command!r}")), EXIT_ERROR
    else:
        bounds = load_bounds(depth=flags.get("depth"), radius=flags.get("radius"))
        try:
            certificate, code = handler(ws, flags, bounds)
        except (InconsistencyError, NotApplicableError) as e:
            logger.warning(f"{command}: {e.message}")
            witness = {"reason": e.message, "counterexample": getattr(e, "counterexample", None)}
            certificate, code = _asserted(command.replace(" ", "-"), False, witness)
        except Error as e:
            logger.error(f"{command} failed: {e.message}")
            certificate, code = _failure(command, e), EXIT_ERROR
    certificate["instance"] = _instance(source, command, flags)
    return canonical_json(certificate), code


def _instance_flags(parser: argparse.ArgumentParser, chain: bool = False) -> None:
    parser.add_argument("--system", help="Finite system name")
    if chain:
        parser.add_argument(
            "--partition", "--cover", action="append", help="Partition name, repeat for a chain"
        )
    else:
        parser.add_argument("--partition", "--cover", help="Partition or cover name")
    parser.add_argument(
        "--S", action="append", help="Group element of S, repeat for more; use --S=-1 for -1"
    )


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser for every command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("workspace", help="Path to the workspace file")
    common.add_argument("--depth", type=int, help="Cylinder depth for subshift searches")
    common.add_argument("--radius", type=int, help="Ball radius for hitting-set enumeration")
    common.add_argument("--verbose", "-v", action="store_true", help="Log at debug level")

    parser = argparse.ArgumentParser(
        prog="sftlab", description="Orbit spaces, shadowing and recurrence of group actions"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("po-space", parents=[common], help="Build a pseudo-orbit space")
    _instance_flags(p)
    p = commands.add_parser("orbit-space", parents=[common], help="Build an orbit space")
    _instance_flags(p)
    p = commands.add_parser("check-shadowing", parents=[common], help="Decide S-shadowing")
    _instance_flags(p)
    p.add_argument("--shift", help="Subshift name, instead of a system")

    p = commands.add_parser("trace", parents=[common], help="Trace a subshift pseudo-orbit")
    p.add_argument("--shift", required=True, help="Subshift name")
    p.add_argument("--pseudo-orbit", required=True, help="Pseudo-orbit name")
    p.add_argument("--eps-depth", type=int, default=0, help="Tracking depth")

    tower = commands.add_parser("tower", help="Inverse systems of finite systems")
    actions = tower.add_subparsers(dest="action", required=True)
    for name, text in (
        ("build", "Build the orbit-space or pseudo-orbit tower of a chain"),
        ("verify", "Check bonds, Mittag-Leffler and, with --S, shadowing of the limit"),
        ("threads", "Enumerate the threads of the inverse limit"),
    ):
        p = actions.add_parser(name, parents=[common], help=text)
        _instance_flags(p, chain=True)
        if name == "build":
            p.add_argument("--window-radius", type=int, default=1, help="Pattern window radius")
        else:
            p.add_argument("--tower", help="Tower name, instead of a chain")

    factor = commands.add_parser("factor", help="Factor maps")
    actions = factor.add_subparsers(dest="action", required=True)
    p = actions.add_parser("check-lift", parents=[common], help="Check (almost) lifting")
    p.add_argument("--factor", required=True, help="Factor map or block code name")
    p.add_argument("--cover", help="Source resolution U_X")
    p.add_argument("--S", action="append", help="Group element of S")
    p.add_argument("--almost", action="store_true", help="Check almost lifting")
    p.add_argument("--metric", action="store_true", help="Compare with the metric route")
    p = actions.add_parser("harness", parents=[common], help="Shadowing transfer along factors")
    p.add_argument("--factor", help="Factor map or block code name")
    p.add_argument("--tower", help="Tower whose limit the factor starts at")
    p.add_argument("--system", help="Base system of the tower when no factor is given")
    p.add_argument("--S", action="append", help="Group element of S")

    for name, text in (
        ("props", "Recurrence properties"),
        ("hitting", "Hitting set N(U, V)"),
        ("family", "Family transitivity"),
    ):
        p = commands.add_parser(name, parents=[common], help=text)
        p.add_argument("--shift", help="Subshift name")
        p.add_argument("--system", help="Finite system name")
    commands.choices["props"].add_argument(
        "--property", action="append", choices=[p.value for p in Property]
    )
    commands.choices["hitting"].add_argument("--U", required=True, help="word@start or a,b")
    commands.choices["hitting"].add_argument("--V", required=True, help="word@start or a,b")
    commands.choices["family"].add_argument(
        "--family", required=True, choices=[f.value for f in Family]
    )

    p = commands.add_parser(
        "verify-lemmas", parents=[common], help="Run the identity battery on a system"
    )
    _instance_flags(p, chain=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, load the workspace and print one certificate."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    flags = vars(args)
    command = " ".join(c for c in (flags.pop("command"), flags.pop("action", None)) if c)
    path = flags.pop("workspace")
    try:
        ws, text = load_workspace(path)
    except WorkspaceError as e:
        for diagnostic in e.diagnostics:
            logger.error(f"{path}: {diagnostic}")
        certificate = _failure(command, e)
        certificate["instance"] = _instance("", command, flags)
        print(canonical_json(certificate))
        return EXIT_ERROR
    certificate_text, code = dispatch(command, ws, flags, text)
    print(certificate_text)
    return code


if __name__ == "__main__":
    sys.exit(main())
