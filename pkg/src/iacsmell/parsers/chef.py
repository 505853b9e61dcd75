"""Chef recipe front-end.

Line-oriented parser for the recipe subset the rules need: resource blocks
(``type 'name' do ... end``), node attribute assignments
(``default['a']['b'] = v``), and case/when/else. Other Ruby statements are
recorded as skipped regions; unbalanced do/end is fatal.
"""

from __future__ import annotations

import re

from ..ir import (
    AtomicUnit,
    Attribute,
    BlockKind,
    ConditionBlock,
    ConditionBranch,
    IRNode,
    SourceLocation,
    Technology,
    UnitBlock,
    Value,
    ValueKind,
    Variable,
)
from . import ParseError, ParseReport, SkippedRegion, scan_hash_comments, strip_line_comment

_RESOURCE_RE = re.compile(r"^([a-z_][A-Za-z0-9_]*)\s+(\S.*?)\s+do$")
_NODE_ATTR_RE = re.compile(
    r"^((?:node\.)?(?:default|override|normal|set|force_default|force_override|automatic))"
    r"((?:\[[^\]]+\])+)\s*=\s*(.+)$"
)
_BRACKET_KEY_RE = re.compile(r"\[([^\]]+)\]")
_CASE_RE = re.compile(r"^case\b\s*(.*)$")
_WHEN_RE = re.compile(r"^when\s+(.+?)(?:\s+then\s+(.+))?$")
_ATTR_RE = re.compile(r"^([a-z_][A-Za-z0-9_?!]*)\s+(\S.*)$")
_BLOCK_OPEN_RE = re.compile(r"\bdo(\s*\|[^|]*\|)?$")
_KEYWORD_OPEN_RE = re.compile(r"^(if|unless|begin|def|class|module|while|until)\b")
_STRING_RE = re.compile(r"^(['\"]).*\1$", re.DOTALL)


def _opens_block(code: str) -> bool:
    return bool(_BLOCK_OPEN_RE.search(code)) or bool(_KEYWORD_OPEN_RE.match(code))


def _unquote(text: str) -> str:
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    return text


def _value(text: str) -> Value:
    t = text.strip()
    if _STRING_RE.match(t):
        return Value(ValueKind.STRING, t, t[0] == '"' and "#{" in t)
    if re.fullmatch(r"\d+", t):
        return Value(ValueKind.INTEGER, t, False)
    if t in ("true", "false"):
        return Value(ValueKind.BOOLEAN, t, False)
    if t == "nil":
        return Value(ValueKind.NULL, t, False)
    return Value(ValueKind.REFERENCE, t, True)


class _Parser:
    def __init__(self, lines: list[str], path: str):
        self.lines = lines
        self.path = path
        self.skipped: list[SkippedRegion] = []

    def loc(self, lineno: int, col: int = 0) -> SourceLocation:
        return SourceLocation(self.path, lineno, col)

    def code_at(self, i: int) -> str:
        code, _ = strip_line_comment(self.lines[i])
        return code.strip()

    def parse_statements(self, i: int, stop_words: tuple[str, ...]) -> tuple[list[IRNode], int]:
        """Parse statements from line index ``i`` until a stop word is seen
        (not consumed) or the file ends. Line indexes are 0-based."""
        nodes: list[IRNode] = []
        n = len(self.lines)
        while i < n:
            code = self.code_at(i)
            if not code:
                i += 1
                continue
            first_word = code.split(None, 1)[0]
            if first_word in stop_words:
                return nodes, i
            if code == "end":
                raise ParseError("unbalanced 'end'", i + 1)
            m = _RESOURCE_RE.match(code)
            if m:
                unit, i = self.parse_resource(i, m.group(1), m.group(2))
                nodes.append(unit)
                continue
            m = _NODE_ATTR_RE.match(code)
            if m:
                keys = [_unquote(k.strip()) for k in _BRACKET_KEY_RE.findall(m.group(2))]
                nodes.append(
                    Variable(name=".".join(keys), value=_value(m.group(3)), location=self.loc(i + 1))
                )
                i += 1
                continue
            m = _CASE_RE.match(code)
            if m:
                block, i = self.parse_case(i, m.group(1))
                nodes.append(block)
                continue
            i = self.skip_statement(i, code)
        return nodes, n

    def parse_resource(self, i: int, unit_type: str, title_text: str) -> tuple[AtomicUnit, int]:
        unit = AtomicUnit(
            unit_type=unit_type,
            title=_unquote(title_text),
            attributes=[],
            location=self.loc(i + 1),
        )
        open_line = i + 1
        i += 1
        n = len(self.lines)
        while i < n:
            code = self.code_at(i)
            if not code:
                i += 1
                continue
            if code == "end":
                return unit, i + 1
            if _opens_block(code) or _CASE_RE.match(code):
                end = self.find_matching_end(i)
                self.skipped.append(SkippedRegion(i + 1, end + 1, "nested block in resource body"))
                i = end + 1
                continue
            m = _ATTR_RE.match(code)
            if m:
                unit.attributes.append(
                    Attribute(name=m.group(1), value=_value(m.group(2)), location=self.loc(i + 1))
                )
                i += 1
                continue
            self.skipped.append(SkippedRegion(i + 1, i + 1, "unrecognized resource body line"))
            i += 1
        raise ParseError("unbalanced 'do'", open_line)

    def parse_case(self, i: int, subject_text: str) -> tuple[ConditionBlock, int]:
        case_line = i + 1
        block = ConditionBlock(
            subject=_value(subject_text) if subject_text else Value(ValueKind.NULL, "", False),
            branches=[],
            has_default_branch=False,
            location=self.loc(case_line),
        )
        i += 1
        n = len(self.lines)
        while i < n:
            code = self.code_at(i)
            if not code:
                i += 1
                continue
            if code == "end":
                return block, i + 1
            m = _WHEN_RE.match(code)
            if m:
                body: list[IRNode] = []
                if m.group(2) is None:
                    body, i = self.parse_statements(i + 1, stop_words=("when", "else", "end"))
                else:
                    i += 1  # inline `then` arm; body is part of the when line
                block.branches.append(ConditionBranch(guard=m.group(1).strip(), body=body))
                continue
            if code == "else":
                body, i = self.parse_statements(i + 1, stop_words=("when", "else", "end"))
                block.branches.append(ConditionBranch(guard="else", body=body))
                block.has_default_branch = True
                continue
            self.skipped.append(SkippedRegion(i + 1, i + 1, "unrecognized case line"))
            i += 1
        raise ParseError("unbalanced 'case'", case_line)

    def find_matching_end(self, i: int) -> int:
        """Index of the ``end`` closing the block opened at line index ``i``."""
        depth = 1
        open_line = i + 1
        j = i + 1
        n = len(self.lines)
        while j < n:
            code = self.code_at(j)
            if code == "end":
                depth -= 1
                if depth == 0:
                    return j
            elif code and (_opens_block(code) or _CASE_RE.match(code)):
                depth += 1
            j += 1
        raise ParseError("unbalanced 'do'", open_line)

    def skip_statement(self, i: int, code: str) -> int:
        if _opens_block(code):
            end = self.find_matching_end(i)
            self.skipped.append(SkippedRegion(i + 1, end + 1, "unsupported ruby block"))
            return end + 1
        self.skipped.append(SkippedRegion(i + 1, i + 1, "unsupported ruby statement"))
        return i + 1


def parse_chef(content: str, path: str) -> ParseReport:
    """Parse a Chef recipe into a UnitBlock tree.

    Raises ParseError only for unbalanced do/end (or a stray ``end``).
    """
    comments = scan_hash_comments(content, path)
    parser = _Parser(content.splitlines(), path)
    children, _ = parser.parse_statements(0, stop_words=())
    root = UnitBlock(
        name=path,
        kind=BlockKind.RECIPE,
        technology=Technology.CHEF,
        location=SourceLocation(path, 1),
    )
    root.children = sorted(children + list(comments), key=lambda n: n.location.line)
    return ParseReport(
        block=root,
        skipped_regions=parser.skipped,
        comment_count=len(comments),
        parse_errors=[],
    )
