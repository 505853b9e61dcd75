"""Front-ends that turn Puppet, Ansible, and Chef sources into IR trees.

Each dialect parser recognizes the construct subset the smell rules need
(resources, variables, conditionals, comments) and records everything else
as a skipped region instead of dropping it silently. Parsing never raises
anything other than ParseError.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from ..ir import Comment, ModuleUnit, Project, SourceLocation, Technology, UnitBlock


class ParseError(Exception):
    """Input is damaged beyond recovery (e.g. unbalanced braces)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class UnknownTechnology(Exception):
    """Neither file extension nor content sniffing identified the dialect."""


@dataclass
class SkippedRegion:
    start_line: int
    end_line: int
    reason: str


@dataclass
class ParseReport:
    """Result of parsing one file: the IR tree plus diagnostics."""

    block: UnitBlock
    skipped_regions: list[SkippedRegion] = field(default_factory=list)
    comment_count: int = 0
    parse_errors: list[tuple[int, str]] = field(default_factory=list)


_EXTENSION_MAP = {
    ".pp": Technology.PUPPET,
    ".yml": Technology.ANSIBLE,
    ".yaml": Technology.ANSIBLE,
    ".rb": Technology.CHEF,
}

# Content sniffing, tried in order; first match wins.
_ANSIBLE_SNIFF = re.compile(r"^---|^\s*-\s+name:", re.MULTILINE)
_CHEF_SNIFF = re.compile(r"(\bdo\b[\s\S]*\bend\b)|default\[")
_PUPPET_SNIFF = re.compile(r"\{\s*'[\s\S]*?=>")


def detect_technology(path: str, content: str = "") -> Technology:
    """Resolve the dialect from the file extension, falling back to content
    sniffing for unknown extensions."""
    ext = Path(path).suffix.lower()
    if ext in _EXTENSION_MAP:
        return _EXTENSION_MAP[ext]
    if _ANSIBLE_SNIFF.search(content):
        return Technology.ANSIBLE
    if _CHEF_SNIFF.search(content):
        return Technology.CHEF
    if _PUPPET_SNIFF.search(content):
        return Technology.PUPPET
    raise UnknownTechnology(f"cannot determine technology of {path!r}")


def scan_hash_comments(content: str, file_path: str) -> list[Comment]:
    """Find every ``#`` comment outside string literals.

    All three dialects use ``#`` line comments; this quote-aware scan is the
    single source of comment nodes for Ansible and Chef (Puppet's tokenizer
    does the equivalent inline).
    """
    comments = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        col = _comment_start(line)
        if col is not None:
            comments.append(
                Comment(
                    text=line[col + 1 :],
                    location=SourceLocation(file_path, lineno, col + 1),
                )
            )
    return comments


def _comment_start(line: str) -> int | None:
    """Column (0-based) of the first ``#`` outside quotes, or None."""
    quote = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote:
            if ch == "\\" and quote == '"':
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return i
        i += 1
    return None


def strip_line_comment(line: str) -> tuple[str, int | None]:
    """Split a line into (code part, comment column or None)."""
    col = _comment_start(line)
    if col is None:
        return line, None
    return line[:col], col


def parse_file(path: str, content: str, technology: Technology | None = None) -> ParseReport:
    """Parse one file with the right dialect front-end."""
    from . import ansible, chef, puppet

    tech = technology or detect_technology(path, content)
    if tech is Technology.PUPPET:
        return puppet.parse_puppet(content, path)
    if tech is Technology.ANSIBLE:
        return ansible.parse_ansible(content, path)
    return chef.parse_chef(content, path)


@dataclass
class LoadResult:
    """A parsed corpus: the project tree plus per-file texts and diagnostics."""

    project: Project
    reports: dict[str, ParseReport] = field(default_factory=dict)
    file_texts: dict[str, str] = field(default_factory=dict)
    failures: list[tuple[str, str]] = field(default_factory=list)


def iter_source_files(root: Path, technology: Technology | None = None) -> list[Path]:
    exts = set(_EXTENSION_MAP)
    if technology is not None:
        exts = {e for e, t in _EXTENSION_MAP.items() if t is technology}
    return sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in exts)


def load_project(root: str | Path, technology: Technology | None = None) -> LoadResult:
    """Parse every IaC file under ``root`` into one Project.

    Files in top-level subdirectories are grouped into modules named after
    the subdirectory; files directly under the root become top-level blocks.
    Unparseable files are recorded as failures, never fatal.
    """
    root_path = Path(root)
    if not root_path.is_dir():
        raise FileNotFoundError(f"corpus root {root!r} is not a directory")
    project = Project(root=str(root_path))
    result = LoadResult(project=project)
    modules: dict[str, ModuleUnit] = {}
    for file_path in iter_source_files(root_path, technology):
        rel = file_path.relative_to(root_path).as_posix()
        try:
            content = file_path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            result.failures.append((rel, f"unreadable: {exc}"))
            continue
        try:
            report = parse_file(rel, content, technology)
        except (ParseError, UnknownTechnology) as exc:
            result.failures.append((rel, str(exc)))
            continue
        result.reports[rel] = report
        result.file_texts[rel] = content
        parts = rel.split("/")
        if len(parts) == 1:
            project.blocks.append(report.block)
        else:
            module = modules.setdefault(parts[0], ModuleUnit(name=parts[0]))
            module.blocks.append(report.block)
    project.modules = [modules[name] for name in sorted(modules)]
    return result
