#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Workspace files: one group and named systems, covers, shifts, maps and towers.

Section headers start at column 0 and their bodies are indented; ``#`` starts a
comment. Parsing never raises. Every problem becomes a located :class:`Diagnostic`
and the sections that could be built are still returned.
"""

import enum
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from pydantic import BaseModel, Field, ValidationError, field_validator

from errors import (
    Error,
    MalformedElementError,
    MetricError,
    NonCommutingActionError,
    NotACoverError,
    NotAPermutationError,
    PartitionRequiredError,
    WorkspaceError,
)
from factor_lift import BlockCode, FactorMap, StateFactor
from finite_system import Cover, FiniteSystem
from group_core import GroupCtx
from patterns import PresentationMode, SubshiftPresentation
from shadowing import Carrier, ZPseudoOrbit
from towers import InverseSystem, orbit_space_tower

logger = logging.getLogger(__name__)

EMPTY_WORD = "-"

_GROUP_RE = re.compile(r"^(Z|Z\^(\d+)|free\s+(\d+))$")
_CYCLES_RE = re.compile(r"^(\s*\([^()]*\))+\s*$")
_CYCLE_RE = re.compile(r"\(([^()]*)\)")

_SYSTEM = ("system",)
_SHIFT = ("sft", "sofic")
_COVER = ("partition", "cover")

# NAME is the defined name, REF a reference, anything else a literal token.
_SHAPES: dict[str, tuple[str, ...]] = {
    "system": ("NAME",),
    "partition": ("NAME", "on", "REF"),
    "cover": ("NAME", "on", "REF"),
    "sft": ("NAME",),
    "sofic": ("NAME",),
    "factor": ("NAME", "REF", "->", "REF"),
    "code": ("NAME", "REF", "->", "REF"),
    "tower": ("NAME",),
    "pseudo-orbit": ("NAME", "on", "REF"),
}


class DiagnosticCode(str, enum.Enum):
    """Kinds of workspace problems."""

    SYNTAX = "SYNTAX"
    DUPLICATE_NAME = "DUPLICATE_NAME"
    UNRESOLVED_REF = "UNRESOLVED_REF"
    UNKNOWN_GENERATOR = "UNKNOWN_GENERATOR"
    NOT_A_PERMUTATION = "NOT_A_PERMUTATION"
    NOT_A_COVER = "NOT_A_COVER"
    NON_COMMUTING = "NON_COMMUTING"
    BAD_METRIC = "BAD_METRIC"
    BAD_VALUE = "BAD_VALUE"


_ERROR_CODES: dict[type[Error], DiagnosticCode] = {
    NotAPermutationError: DiagnosticCode.NOT_A_PERMUTATION,
    NotACoverError: DiagnosticCode.NOT_A_COVER,
    PartitionRequiredError: DiagnosticCode.NOT_A_COVER,
    NonCommutingActionError: DiagnosticCode.NON_COMMUTING,
    MetricError: DiagnosticCode.BAD_METRIC,
}


class Diagnostic(BaseModel):
    """One located problem in a workspace file."""

    line: int = Field(default=0)
    code: DiagnosticCode
    message: str

    def __str__(self) -> str:
        """Render as ``line N: CODE: message``."""
        return f"line {self.line}: {self.code.value}: {self.message}"

    def to_dict(self) -> dict:
        """Return a JSON-ready view."""
        return {"line": self.line, "code": self.code.value, "message": self.message}


def _as_int(v: Any) -> int:
    if isinstance(v, str):
        return int(v.strip())
    return v


class SystemModel(BaseModel):
    """Body of a ``system`` section."""

    name: str
    states: list[str] = Field(min_length=1)
    generators: dict[int, list[str]] = Field(default_factory=dict)
    uniform: float | None = Field(default=None)
    rows: dict[str, list[float]] = Field(default_factory=dict)

    def metric(self) -> list[list[float]] | None:
        """Return the distance table in state order, if one was given."""
        n = len(self.states)
        if self.uniform is not None:
            return [[0.0 if i == j else self.uniform for j in range(n)] for i in range(n)]
        if not self.rows:
            return None
        missing = [x for x in self.states if x not in self.rows]
        if missing:
            raise MetricError(f"metric has no rows for {missing}")
        short = [x for x in self.states if len(self.rows[x]) != n]
        if short:
            raise MetricError(f"metric rows {short} need {n} entries")
        return [self.rows[x] for x in self.states]


class CoverModel(BaseModel):
    """Body of a ``partition`` or ``cover`` section."""

    name: str
    system: str
    partition: bool
    blocks: list[tuple[str, list[str]]]


class SftModel(BaseModel):
    """Body of an ``sft`` section."""

    name: str
    alphabet: list[str] = Field(min_length=1)
    window: list[str] = Field(default_factory=list)
    forbidden: list[list[str]] = Field(default_factory=list)


class SoficModel(BaseModel):
    """Body of a ``sofic`` section."""

    name: str
    alphabet: list[str] = Field(min_length=1)
    edges: list[tuple[str, str, str]] = Field(min_length=1)


class FactorModel(BaseModel):
    """Body of a ``factor`` section."""

    name: str
    source: str
    target: str
    table: dict[str, str]


class CodeModel(BaseModel):
    """Body of a ``code`` section."""

    name: str
    source: str
    target: str
    window: list[int] = Field(min_length=1)
    rules: list[tuple[list[str], str]]

    @field_validator("window", mode="before")
    @classmethod
    def convert_offsets(cls, v: list) -> list[int]:
        """Convert offset literals such as ``-1`` or ``+2``."""
        return [_as_int(o) for o in v]


class TowerModel(BaseModel):
    """Body of a ``tower`` section."""

    name: str
    levels: list[str] = Field(min_length=1)
    bonds: list[tuple[int, str, str]] = Field(default_factory=list)
    stationary: bool = Field(default=False)

    @field_validator("bonds", mode="before")
    @classmethod
    def convert_levels(cls, v: list) -> list[tuple[int, str, str]]:
        """Convert level literals."""
        return [(_as_int(n), a, b) for n, a, b in v]


class PseudoOrbitModel(BaseModel):
    """Body of a ``pseudo-orbit`` section."""

    name: str
    shift: str
    depth: int = Field(default=0, ge=0)
    carriers: list[tuple[str, str, str, int]] = Field(min_length=1)
    switches: list[int] = Field(default_factory=list)

    @field_validator("depth", mode="before")
    @classmethod
    def convert_depth(cls, v: Any) -> int:
        """Convert the depth literal."""
        return _as_int(v)

    @field_validator("switches", mode="before")
    @classmethod
    def convert_switches(cls, v: list) -> list[int]:
        """Convert site literals such as ``-3``."""
        return [_as_int(t) for t in v]

    @field_validator("carriers", mode="before")
    @classmethod
    def convert_origins(cls, v: list) -> list[tuple[str, str, str, int]]:
        """Convert origin literals."""
        return [(a, b, c, _as_int(o)) for a, b, c, o in v]


@dataclass
class _Section:
    keyword: str
    name: str
    line: int
    refs: tuple[str, ...] = ()
    body: list[tuple[int, list[str], str]] = field(default_factory=list)


@dataclass
class Workspace:
    """The objects defined by a workspace file, with the diagnostics of the parse."""

    ctx: GroupCtx = field(default_factory=GroupCtx.integers)
    systems: dict[str, FiniteSystem] = field(default_factory=dict)
    covers: dict[str, Cover] = field(default_factory=dict)
    cover_system: dict[str, str] = field(default_factory=dict)
    shifts: dict[str, SubshiftPresentation] = field(default_factory=dict)
    factors: dict[str, StateFactor] = field(default_factory=dict)
    codes: dict[str, BlockCode] = field(default_factory=dict)
    towers: dict[str, InverseSystem] = field(default_factory=dict)
    pseudo_orbits: dict[str, ZPseudoOrbit] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Return True if the file parsed without diagnostics."""
        return not self.diagnostics

    def _lookup(self, table: dict[str, Any], kind: str, name: str) -> Any:
        if name not in table:
            diagnostic = Diagnostic(
                code=DiagnosticCode.UNRESOLVED_REF, message=f"no {kind} named {name!r}"
            )
            raise WorkspaceError(diagnostic.message, [diagnostic])
        return table[name]

    def system(self, name: str) -> FiniteSystem:
        """Return a system by name."""
        return self._lookup(self.systems, "system", name)

    def cover(self, name: str) -> tuple[Cover, FiniteSystem]:
        """Return a cover by name together with the system it covers."""
        U = self._lookup(self.covers, "cover", name)
        return U, self.systems[self.cover_system[name]]

    def shift(self, name: str) -> SubshiftPresentation:
        """Return a subshift by name."""
        return self._lookup(self.shifts, "subshift", name)

    def factor(self, name: str) -> FactorMap:
        """Return a state factor or block code by name."""
        return self._lookup({**self.factors, **self.codes}, "factor map", name)

    def tower(self, name: str) -> InverseSystem:
        """Return a tower by name."""
        return self._lookup(self.towers, "tower", name)

    def pseudo_orbit(self, name: str) -> ZPseudoOrbit:
        """Return a pseudo-orbit by name."""
        return self._lookup(self.pseudo_orbits, "pseudo-orbit", name)

    def summary(self) -> dict:
        """Return the group and the number of sections of each kind."""
        partitions = sum(1 for U in self.covers.values() if U.is_partition)
        return {
            "group": str(self.ctx),
            "systems": len(self.systems),
            "partitions": partitions,
            "covers": len(self.covers) - partitions,
            "shifts": len(self.shifts),
            "factors": len(self.factors) + len(self.codes),
            "towers": len(self.towers),
            "pseudo_orbits": len(self.pseudo_orbits),
        }


class _Parser:
    """Two passes: split the text into sections, then build them in dependency order."""

    def __init__(self, text: str):
        self.text = text
        self.ws = Workspace()
        self.sections: list[_Section] = []
        self.defined: dict[str, str] = {}

    def report(self, line: int, code: DiagnosticCode, message: str) -> None:
        diagnostic = Diagnostic(line=line, code=code, message=message)
        logger.warning(f"Workspace {diagnostic}")
        self.ws.diagnostics.append(diagnostic)

    def report_error(self, line: int, e: Exception) -> None:
        if isinstance(e, ValidationError):
            fields = ", ".join(".".join(str(p) for p in err["loc"]) for err in e.errors())
            self.report(line, DiagnosticCode.BAD_VALUE, f"invalid {fields}")
            return
        code = next(
            (c for t, c in _ERROR_CODES.items() if isinstance(e, t)), DiagnosticCode.BAD_VALUE
        )
        self.report(line, code, getattr(e, "message", None) or str(e))

    # splitting

    def split(self) -> None:
        group_line = 0
        # bodies of rejected headers are skipped, not reported line by line
        current: _Section | None = None
        skipping = False
        for number, raw in enumerate(self.text.splitlines(), start=1):
            text = raw.split("#", 1)[0].rstrip()
            if not text.strip():
                continue
            tokens = text.split()
            if text[0].isspace():
                if current is not None:
                    current.body.append((number, tokens, text.strip()))
                elif not skipping:
                    self.report(number, DiagnosticCode.SYNTAX, "indented line outside a section")
                continue
            current, skipping = None, False
            if tokens[0] != "group":
                current = self.header(number, tokens)
                skipping = current is None
            elif group_line:
                self.report(number, DiagnosticCode.SYNTAX, f"group already set at {group_line}")
            else:
                group_line = number
                self.set_group(number, " ".join(tokens[1:]))

    def set_group(self, line: int, spec: str) -> None:
        m = _GROUP_RE.match(spec)
        if not m:
            self.report(line, DiagnosticCode.SYNTAX, f"unknown group {spec!r}")
            return
        try:
            if m.group(2):
                self.ws.ctx = GroupCtx.lattice(int(m.group(2)))
            elif m.group(3):
                self.ws.ctx = GroupCtx.free(int(m.group(3)))
        except MalformedElementError as e:
            self.report_error(line, e)

    def header(self, line: int, tokens: list[str]) -> _Section | None:
        shape = _SHAPES.get(tokens[0])
        if shape is None or len(tokens) - 1 != len(shape):
            header = " ".join(tokens)
            self.report(line, DiagnosticCode.SYNTAX, f"malformed section header {header!r}")
            return None
        name, refs = "", []
        for token, want in zip(tokens[1:], shape):
            if want == "NAME":
                name = token
            elif want == "REF":
                refs.append(token)
            elif token != want:
                self.report(line, DiagnosticCode.SYNTAX, f"expected {want!r}, got {token!r}")
                return None
        if name in self.defined:
            self.report(
                line, DiagnosticCode.DUPLICATE_NAME, f"{name!r} is already a {self.defined[name]}"
            )
            return None
        self.defined[name] = tokens[0]
        section = _Section(tokens[0], name, line, tuple(refs))
        self.sections.append(section)
        return section

    # building

    def build(self) -> Workspace:
        self.split()
        builders: list[tuple[tuple[str, ...], Callable[[_Section], None]]] = [
            (_SYSTEM, self.system),
            (_COVER, self.cover),
            (("sft",), self.sft),
            (("sofic",), self.sofic),
            (("factor",), self.factor),
            (("code",), self.code),
            (("tower",), self.tower),
            (("pseudo-orbit",), self.pseudo_orbit),
        ]
        for keywords, builder in builders:
            for section in self.sections:
                if section.keyword not in keywords:
                    continue
                logger.debug(f"Building {section.keyword} {section.name} from line {section.line}")
                try:
                    builder(section)
                except (ValidationError, ValueError, Error) as e:
                    self.report_error(section.line, e)
        return self.ws

    def resolve(
        self, section: _Section, table: dict[str, Any], kinds: tuple[str, ...], name: str
    ) -> Any:
        """Return a built object, or None; names of sections that failed stay quiet."""
        if name in table:
            return table[name]
        if self.defined.get(name) not in kinds:
            wanted = " or ".join(kinds)
            self.report(section.line, DiagnosticCode.UNRESOLVED_REF, f"no {wanted} named {name!r}")
        return None

    def unknown(self, line: int, tokens: list[str], keyword: str) -> None:
        self.report(line, DiagnosticCode.SYNTAX, f"unexpected {tokens[0]!r} in {keyword}")

    def system(self, s: _Section) -> None:
        raw: dict[str, Any] = {"name": s.name, "states": [], "rows": {}}
        gens: list[tuple[int, int, str, list[str], str]] = []
        seen: set[int] = set()
        for line, tokens, text in s.body:
            head, args = tokens[0], tokens[1:]
            if head == "states":
                raw["states"] = args
            elif head == "gen" and len(args) >= 2 and args[1] in ("cycles", "images"):
                index = self.generator_index(line, args[0], seen)
                if index is not None:
                    rest = text.split(None, 3)[3] if len(args) > 2 else ""
                    gens.append((line, index, args[1], args[2:], rest))
            elif head == "metric" and len(args) == 2 and args[0] == "uniform":
                raw["uniform"] = args[1]
            elif head == "metric" and len(args) >= 2 and args[0] == "row":
                raw["rows"][args[1]] = args[2:]
            else:
                self.unknown(line, tokens, "system")
        raw["generators"] = {}
        for line, index, form, args, rest in gens:
            try:
                raw["generators"][index] = _images(raw["states"], form, args, rest)
            except NotAPermutationError as e:
                self.report_error(line, e)
                return
        model = SystemModel(**raw)
        self.ws.systems[s.name] = FiniteSystem(
            self.ws.ctx, model.states, model.generators, model.metric(), name=s.name
        )

    def generator_index(self, line: int, name: str, seen: set[int]) -> int | None:
        ctx = self.ws.ctx
        try:
            index = ctx.generators.index(ctx.generator(name))
        except MalformedElementError:
            self.report(
                line,
                DiagnosticCode.UNKNOWN_GENERATOR,
                f"{name!r} is not a generator of {ctx}, expected {list(ctx.generator_names)}",
            )
            return None
        if index in seen:
            self.report(line, DiagnosticCode.DUPLICATE_NAME, f"generator {name} given twice")
            return None
        seen.add(index)
        return index

    def cover(self, s: _Section) -> None:
        sys = self.resolve(s, self.ws.systems, _SYSTEM, s.refs[0])
        if sys is None:
            return
        blocks = []
        for line, tokens, _ in s.body:
            if len(tokens) >= 2 and tokens[1] == "=":
                blocks.append((tokens[0], tokens[2:]))
            else:
                self.report(line, DiagnosticCode.SYNTAX, "expected 'BLOCK = states...'")
        model = CoverModel(
            name=s.name, system=s.refs[0], partition=s.keyword == "partition", blocks=blocks
        )
        U = Cover(
            sys.states, [b for _, b in model.blocks], [n for n, _ in model.blocks], name=s.name
        )
        if model.partition:
            U.require_partition()
        self.ws.covers[s.name] = U
        self.ws.cover_system[s.name] = s.refs[0]

    def sft(self, s: _Section) -> None:
        raw: dict[str, Any] = {"name": s.name, "alphabet": [], "forbidden": []}
        for line, tokens, _ in s.body:
            head, args = tokens[0], tokens[1:]
            if head in ("alphabet", "window"):
                raw[head] = args
            elif head == "forbid" and args:
                raw["forbidden"].append(args)
            else:
                self.unknown(line, tokens, "sft")
        model = SftModel(**raw)
        ctx = self.ws.ctx
        window = [ctx.parse(g) for g in model.window] or [ctx.identity]
        self.ws.shifts[s.name] = SubshiftPresentation.sft(
            ctx, model.alphabet, window, [tuple(f) for f in model.forbidden], name=s.name
        )

    def sofic(self, s: _Section) -> None:
        raw: dict[str, Any] = {"name": s.name, "alphabet": [], "edges": []}
        for line, tokens, _ in s.body:
            head, args = tokens[0], tokens[1:]
            if head == "alphabet":
                raw["alphabet"] = args
            elif head == "edge" and len(args) == 3:
                raw["edges"].append(tuple(args))
            else:
                self.unknown(line, tokens, "sofic")
        model = SoficModel(**raw)
        self.ws.shifts[s.name] = SubshiftPresentation.sofic(
            model.alphabet, model.edges, name=s.name
        )

    def factor(self, s: _Section) -> None:
        source = self.resolve(s, self.ws.systems, _SYSTEM, s.refs[0])
        target = self.resolve(s, self.ws.systems, _SYSTEM, s.refs[1])
        if source is None or target is None:
            return
        table: dict[str, str] = {}
        for line, tokens, _ in s.body:
            if tokens[0] == "map" and len(tokens) == 3:
                table[tokens[1]] = tokens[2]
            else:
                self.unknown(line, tokens, "factor")
        model = FactorModel(name=s.name, source=s.refs[0], target=s.refs[1], table=table)
        self.ws.factors[s.name] = StateFactor(source, target, model.table, name=s.name)

    def code(self, s: _Section) -> None:
        source = self.resolve(s, self.ws.shifts, _SHIFT, s.refs[0])
        target = self.resolve(s, self.ws.shifts, _SHIFT, s.refs[1])
        if source is None or target is None:
            return
        raw: dict[str, Any] = {"name": s.name, "source": s.refs[0], "target": s.refs[1]}
        raw["window"], raw["rules"] = [], []
        for line, tokens, _ in s.body:
            head, args = tokens[0], tokens[1:]
            if head == "window":
                raw["window"] = args
            elif head == "rule" and len(args) >= 3 and args[-2] == "->":
                raw["rules"].append((args[:-2], args[-1]))
            else:
                self.unknown(line, tokens, "code")
        model = CodeModel(**raw)
        rule = {tuple(k): v for k, v in model.rules}
        self.ws.codes[s.name] = BlockCode(source, target, model.window, rule, name=s.name)

    def tower(self, s: _Section) -> None:
        raw: dict[str, Any] = {"name": s.name, "levels": [], "bonds": []}
        for line, tokens, _ in s.body:
            head, args = tokens[0], tokens[1:]
            if head == "level" and len(args) == 1:
                raw["levels"].append(args[0])
            elif head == "bond" and len(args) == 3:
                raw["bonds"].append(tuple(args))
            elif head == "stationary" and not args:
                raw["stationary"] = True
            else:
                self.unknown(line, tokens, "tower")
        model = TowerModel(**raw)
        if all(self.defined.get(n) in _COVER for n in model.levels) and not model.bonds:
            if all(n in self.ws.covers for n in model.levels):
                self.ws.towers[s.name] = self.orbit_tower(s, model)
            return
        levels = [self.resolve(s, self.ws.systems, _SYSTEM, n) for n in model.levels]
        if any(level is None for level in levels):
            return
        bonds: list[dict[str, str]] = [{} for _ in levels[1:]]
        for n, upper, lower in model.bonds:
            if not 1 <= n < len(levels):
                raise WorkspaceError(f"bond level {n} is outside 1..{len(levels) - 1}")
            bonds[n - 1][upper] = lower
        self.ws.towers[s.name] = InverseSystem(
            levels, bonds, name=s.name, stationary=model.stationary
        )

    def orbit_tower(self, s: _Section, model: TowerModel) -> InverseSystem:
        systems = {self.ws.cover_system[n] for n in model.levels}
        if len(systems) != 1:
            raise WorkspaceError(f"tower {s.name} mixes partitions of {sorted(systems)}")
        sys = self.ws.systems[systems.pop()]
        tower = orbit_space_tower(sys, [self.ws.covers[n] for n in model.levels])
        tower.name = s.name
        tower.stationary = tower.stationary or model.stationary
        return tower

    def pseudo_orbit(self, s: _Section) -> None:
        X = self.resolve(s, self.ws.shifts, _SHIFT, s.refs[0])
        if X is None:
            return
        raw: dict[str, Any] = {"name": s.name, "shift": s.refs[0], "carriers": []}
        raw["switches"] = []
        for line, tokens, _ in s.body:
            head, args = tokens[0], tokens[1:]
            if head == "depth" and len(args) == 1:
                raw["depth"] = args[0]
            elif head == "carrier" and len(args) == 4:
                raw["carriers"].append(tuple(args))
            elif head == "switch" and len(args) == 1:
                raw["switches"].append(args[0])
            else:
                self.unknown(line, tokens, "pseudo-orbit")
        model = PseudoOrbitModel(**raw)
        carriers = tuple(
            Carrier(tuple(left), () if middle == EMPTY_WORD else tuple(middle), tuple(right), o)
            for left, middle, right, o in model.carriers
        )
        self.ws.pseudo_orbits[s.name] = ZPseudoOrbit(
            carriers, tuple(model.switches), model.depth, name=s.name
        )


def _images(states: list[str], form: str, args: list[str], rest: str) -> list[str]:
    """Return the image list of a generator given by images or by disjoint cycles."""
    if form == "images":
        if sorted(args) != sorted(states):
            raise NotAPermutationError(f"images {args} are not a permutation of {states}")
        return args
    if not _CYCLES_RE.match(rest):
        raise NotAPermutationError(f"malformed cycle notation {rest!r}")
    mapping: dict[str, str] = {}
    for cycle in _CYCLE_RE.findall(rest):
        members = cycle.split()
        for x, y in zip(members, members[1:] + members[:1]):
            if x in mapping or x not in states:
                raise NotAPermutationError(f"state {x!r} is repeated or unknown in {rest!r}")
            mapping[x] = y
    return [mapping.get(x, x) for x in states]


def parse_workspace(text: str) -> Workspace:
    """Parse workspace text; problems are returned as diagnostics, never raised.

    Args:
        text: The workspace file contents.

    Returns:
        Workspace: The objects that could be built and the located diagnostics.
    """
    ws = _Parser(text).build()
    if ws.ok:
        logger.info(f"Parsed workspace: {ws.summary()}")
    else:
        logger.info(f"Parsed workspace with {len(ws.diagnostics)} diagnostics")
    return ws


def load_workspace(path: str | Path) -> tuple[Workspace, str]:
    """Read and parse a workspace file.

    Raises:
        WorkspaceError: the file cannot be read or holds diagnostics.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise WorkspaceError(f"cannot read workspace {path}: {e}") from e
    ws = parse_workspace(text)
    if not ws.ok:
        message = f"workspace {path} has {len(ws.diagnostics)} problems"
        raise WorkspaceError(message, ws.diagnostics)
    return ws, text


# rendering


def _number(v: float) -> str:
    return f"{v:g}"


def render_system(sys: FiniteSystem, name: str | None = None) -> str:
    """Render a system section; identity generators are omitted."""
    lines = [f"system {name or sys.name}", f"  states {' '.join(sys.states)}"]
    identity = tuple(range(sys.size))
    for i, gen in enumerate(sys.ctx.generator_names):
        perm = sys.generator_perm(i)
        if perm != identity:
            lines.append(f"  gen {gen} images {' '.join(sys.states[j] for j in perm)}")
    if sys.metric is not None:
        for x, row in zip(sys.states, sys.metric):
            lines.append(f"  metric row {x} {' '.join(_number(v) for v in row)}")
    return "\n".join(lines)


def render_cover(U: Cover, system: str) -> str:
    """Render a partition or cover section."""
    keyword = "partition" if U.is_partition else "cover"
    lines = [f"{keyword} {U.name} on {system}"]
    for block_name, block in zip(U.names, U.blocks):
        members = [x for x in U.states if x in block]
        lines.append(f"  {block_name} = {' '.join(members)}")
    return "\n".join(lines)


def render_subshift(X: SubshiftPresentation, name: str | None = None) -> str:
    """Render an sft or sofic section."""
    name = name or X.name
    if X.mode == PresentationMode.SOFIC:
        lines = [f"sofic {name}", f"  alphabet {' '.join(X.alphabet)}"]
        lines += [f"  edge {u} {v} {a}" for u, v, a in X.edges]
        return "\n".join(lines)
    lines = [
        f"sft {name}",
        f"  alphabet {' '.join(X.alphabet)}",
        f"  window {' '.join(X.ctx.format(g) for g in X.window)}",
    ]
    lines += [f"  forbid {' '.join(f)}" for f in sorted(X.forbidden)]
    return "\n".join(lines)


def render_tower(T: InverseSystem, name: str | None = None) -> str:
    """Render a tower with explicit level systems and bonds."""
    name = re.sub(r"\s+", "_", name or T.name or "tower")
    ctx = next((s.ctx for s in T.systems if s is not None), GroupCtx.integers())
    sections, tower = [], [f"tower {name}"]
    for n, (sys, states) in enumerate(zip(T.systems, T.spaces)):
        level = f"{name}.{n}"
        sections.append(render_system(sys or FiniteSystem(ctx, states, {}), level))
        tower.append(f"  level {level}")
    for n, bond in enumerate(T.bonds, start=1):
        tower += [f"  bond {n} {x} {bond[x]}" for x in T.spaces[n]]
    if T.stationary:
        tower.append("  stationary")
    return "\n\n".join([*sections, "\n".join(tower)])


def render_document(ctx: GroupCtx, sections: list[str]) -> str:
    """Join rendered sections under a group line."""
    return "\n\n".join([f"group {ctx}", *sections]) + "\n"
