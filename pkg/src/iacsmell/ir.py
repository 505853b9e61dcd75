"""Technology-agnostic intermediate representation for IaC scripts.

All three front-ends (Puppet, Ansible, Chef) normalize their input into the
node types below. Rules never see dialect syntax, only this tree.

The tree is treated as immutable once a parser returns it; traversal is
read-only, so projects can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union


class LocationError(Exception):
    """A node's source location does not exist in the given file text."""


class Technology(Enum):
    PUPPET = "Puppet"
    ANSIBLE = "Ansible"
    CHEF = "Chef"

    @classmethod
    def from_name(cls, name: str) -> "Technology":
        for tech in cls:
            if tech.value.lower() == name.lower():
                return tech
        raise ValueError(f"unknown technology: {name!r}")


@dataclass(frozen=True)
class SourceLocation:
    """Position of a construct. Lines and columns are 1-based; column 0
    means the column is unknown."""

    file_path: str
    line: int
    column: int = 0


class ValueKind(Enum):
    STRING = "String"
    INTEGER = "Integer"
    BOOLEAN = "Boolean"
    REFERENCE = "Reference"
    NULL = "Null"


@dataclass(frozen=True)
class Value:
    """A right-hand-side value, kept verbatim.

    ``raw_text`` is the source text as written (quotes included), so rules
    can match keywords without losing the evidence they cite. ``has_variable``
    marks references and interpolated strings.
    """

    kind: ValueKind
    raw_text: str
    has_variable: bool = False


@dataclass(frozen=True)
class Attribute:
    name: str
    value: Value
    location: SourceLocation


@dataclass(frozen=True)
class Variable:
    """A variable assignment; ``name`` has the dialect sigil stripped."""

    name: str
    value: Value
    location: SourceLocation


@dataclass
class AtomicUnit:
    """Smallest actionable element: a resource, task, or block with
    attributes in source order."""

    unit_type: str
    title: str
    attributes: list[Attribute]
    location: SourceLocation


@dataclass
class ConditionBranch:
    guard: str
    body: list["IRNode"]


@dataclass
class ConditionBlock:
    """A case/when construct. ``has_default_branch`` is true iff one branch
    guard is the dialect's catch-all token."""

    subject: Value
    branches: list[ConditionBranch]
    has_default_branch: bool
    location: SourceLocation


@dataclass(frozen=True)
class Comment:
    """A source comment; ``text`` excludes the comment-start token."""

    text: str
    location: SourceLocation


class BlockKind(Enum):
    SCRIPT = "Script"
    CLASS = "Class"
    RECIPE = "Recipe"
    PLAY = "Play"
    ROLE = "Role"


@dataclass
class UnitBlock:
    """An individual script or grouped resources (class, play, recipe)."""

    name: str
    kind: BlockKind
    technology: Technology
    location: SourceLocation
    children: list["IRNode"] = field(default_factory=list)


@dataclass
class ModuleUnit:
    """A folder grouping related scripts (role, cookbook, module)."""

    name: str
    blocks: list[UnitBlock] = field(default_factory=list)


@dataclass
class Project:
    """Root of an analyzed tree: top-level scripts plus named modules.

    Invariant: no two unit blocks share a file path (one tree per file).
    """

    root: str
    modules: list[ModuleUnit] = field(default_factory=list)
    blocks: list[UnitBlock] = field(default_factory=list)


IRNode = Union[
    ModuleUnit, UnitBlock, AtomicUnit, Variable, Attribute, ConditionBlock, Comment
]


def _walk(node: IRNode) -> Iterator[IRNode]:
    yield node
    if isinstance(node, UnitBlock):
        for child in node.children:
            yield from _walk(child)
    elif isinstance(node, AtomicUnit):
        yield from node.attributes
    elif isinstance(node, ConditionBlock):
        for branch in node.branches:
            for child in branch.body:
                yield from _walk(child)


def iterate_depth_first(project: Project) -> Iterator[IRNode]:
    """Pre-order traversal of every node in the project.

    Parents are emitted before their children, siblings in source order.
    The project node itself is not emitted. Deterministic for a given
    project.
    """
    for module in project.modules:
        yield module
        for block in module.blocks:
            yield from _walk(block)
    for block in project.blocks:
        yield from _walk(block)


def iterate_block(block: UnitBlock) -> Iterator[IRNode]:
    """Pre-order traversal of a single unit block."""
    yield from _walk(block)


def node_line_text(node: IRNode, source: str) -> str:
    """Return the verbatim source line (no trailing newline) a node starts on.

    Raises LocationError when the node carries no location or the line is
    outside the file.
    """
    location = getattr(node, "location", None)
    if location is None:
        raise LocationError(f"node {type(node).__name__} has no source location")
    lines = source.splitlines()
    if not 1 <= location.line <= len(lines):
        raise LocationError(
            f"line {location.line} out of range for {location.file_path} "
            f"({len(lines)} lines)"
        )
    return lines[location.line - 1]
