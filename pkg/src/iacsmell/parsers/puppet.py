"""Puppet manifest front-end.

Supported subset: resource declarations, variable assignments, class
definitions (both ``class name { ... }`` and the ``class { 'name': }``
resource form), case statements, and line comments. Everything else is
recorded as a skipped region.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..ir import (
    AtomicUnit,
    Attribute,
    BlockKind,
    Comment,
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
from . import ParseError, ParseReport, SkippedRegion

_IDENT_RE = re.compile(r"(::)?[A-Za-z_][A-Za-z0-9_]*(::[A-Za-z_][A-Za-z0-9_]*)*")
_VAR_RE = re.compile(r"\$(::)?[A-Za-z_][A-Za-z0-9_]*(::[A-Za-z_][A-Za-z0-9_]*)*")
_INT_RE = re.compile(r"\d+")
# ${...} or bare $ident inside a double-quoted string
_INTERP_RE = re.compile(r"\$\{|\$[A-Za-z_:]")

_PUNCT = {
    "{": "LBRACE",
    "}": "RBRACE",
    "[": "LBRACK",
    "]": "RBRACK",
    "(": "LPAREN",
    ")": "RPAREN",
    ":": "COLON",
    ",": "COMMA",
}

_OPENERS = {"LBRACE", "LBRACK", "LPAREN"}
_CLOSERS = {"RBRACE": "LBRACE", "RBRACK": "LBRACK", "RPAREN": "LPAREN"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int
    start: int
    end: int
    interpolated: bool = False


def _tokenize(content: str, path: str) -> tuple[list[Token], list[tuple[int, str]]]:
    tokens: list[Token] = []
    errors: list[tuple[int, str]] = []
    i = 0
    line = 1
    line_start = 0
    n = len(content)
    while i < n:
        ch = content[i]
        if ch == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if ch in " \t\r":
            i += 1
            continue
        col = i - line_start + 1
        if ch == "#":
            end = content.find("\n", i)
            end = n if end == -1 else end
            tokens.append(Token("COMMENT", content[i:end], line, col, i, end))
            i = end
            continue
        if ch in "'\"":
            start = i
            start_line = line
            i += 1
            while i < n and content[i] != ch:
                if ch == '"' and content[i] == "\\":
                    i += 1
                if i < n and content[i] == "\n":
                    line += 1
                    line_start = i + 1
                i += 1
            if i >= n:
                errors.append((start_line, "unterminated string"))
            else:
                i += 1
            text = content[start:i]
            interpolated = ch == '"' and bool(_INTERP_RE.search(text[1:-1]))
            tokens.append(Token("STRING", text, start_line, col, start, i, interpolated))
            continue
        if ch == "$":
            m = _VAR_RE.match(content, i)
            if m:
                tokens.append(Token("VAR", m.group(0), line, col, i, m.end()))
                i = m.end()
                continue
        if ch == "=" and content[i : i + 2] == "=>":
            tokens.append(Token("FARROW", "=>", line, col, i, i + 2))
            i += 2
            continue
        if ch == "=" and content[i : i + 2] == "==":
            tokens.append(Token("OTHER", "==", line, col, i, i + 2))
            i += 2
            continue
        if ch == "=":
            tokens.append(Token("EQUALS", "=", line, col, i, i + 1))
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, line, col, i, i + 1))
            i += 1
            continue
        m = _IDENT_RE.match(content, i)
        if m:
            tokens.append(Token("IDENT", m.group(0), line, col, i, m.end()))
            i = m.end()
            continue
        m = _INT_RE.match(content, i)
        if m:
            tokens.append(Token("INT", m.group(0), line, col, i, m.end()))
            i = m.end()
            continue
        tokens.append(Token("OTHER", ch, line, col, i, i + 1))
        i += 1
    tokens.append(Token("EOF", "", line, i - line_start + 1, n, n))
    return tokens, errors


class _Parser:
    def __init__(self, tokens: list[Token], content: str, path: str):
        self.tokens = tokens
        self.content = content
        self.path = path
        self.pos = 0
        self.skipped: list[SkippedRegion] = []
        self.errors: list[tuple[int, str]] = []
        self.comment_count = 0
        # Comment nodes found inside constructs (resource bodies, case
        # headers); flushed as siblings right after the enclosing statement.
        self.floating: list[Comment] = []

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def _note_comment(self, tok: Token) -> None:
        self.comment_count += 1
        self.floating.append(Comment(text=tok.text[1:], location=self.loc(tok)))

    def loc(self, tok: Token) -> SourceLocation:
        return SourceLocation(self.path, tok.line, tok.col)

    def slice(self, start_tok: Token, end_tok: Token) -> str:
        return self.content[start_tok.start : end_tok.end]

    # ------------------------------------------------------------------
    # statements

    def parse_statements(self, open_brace: Token | None) -> list[IRNode]:
        """Parse until the matching '}' (or EOF at top level)."""
        nodes: list[IRNode] = []

        def flush_floating() -> None:
            # placed before the next sibling so line order stays monotone
            if self.floating:
                nodes.extend(self.floating)
                self.floating = []

        while True:
            flush_floating()
            tok = self.peek()
            if tok.kind == "EOF":
                if open_brace is not None:
                    raise ParseError("unbalanced '{'", open_brace.line)
                return nodes
            if tok.kind == "RBRACE":
                if open_brace is None:
                    raise ParseError("unmatched '}'", tok.line)
                self.advance()
                return nodes
            node = self.parse_statement()
            if node is not None:
                nodes.append(node)
            flush_floating()

    def _starts_statement(self, tok: Token) -> bool:
        if tok.kind in ("COMMENT", "EOF", "RBRACE"):
            return True
        if tok.kind == "VAR" and self.peek(1).kind == "EQUALS":
            return True
        if tok.kind == "IDENT":
            if tok.text in ("case", "class"):
                return True
            if self.peek(1).kind == "LBRACE":
                return True
        return False

    def parse_statement(self) -> IRNode | None:
        tok = self.peek()
        if tok.kind == "COMMENT":
            self.advance()
            self.comment_count += 1
            return Comment(text=tok.text[1:], location=self.loc(tok))
        if tok.kind == "IDENT" and tok.text == "case":
            return self.parse_case()
        if tok.kind == "IDENT" and tok.text == "class":
            return self.parse_class()
        if tok.kind == "VAR" and self.peek(1).kind == "EQUALS":
            return self.parse_variable()
        if tok.kind == "IDENT" and self.peek(1).kind == "LBRACE":
            return self.parse_resource(tok.text)
        self.skip_statement(f"unsupported construct {tok.text!r}")
        return None

    def parse_variable(self) -> Variable:
        var_tok = self.advance()
        self.advance()  # '='
        value = self.parse_value()
        name = var_tok.text.lstrip("$").lstrip(":")
        return Variable(name=name, value=value, location=self.loc(var_tok))

    def parse_class(self) -> IRNode | None:
        class_tok = self.advance()
        if self.peek().kind == "LBRACE":
            # class { 'name': ... } resource form
            return self.parse_resource("class", type_tok=class_tok)
        if self.peek().kind != "IDENT":
            self.skip_statement("malformed class definition", start_tok=class_tok)
            return None
        name_tok = self.advance()
        if self.peek().kind == "LPAREN":
            start = self.peek()
            self._consume_balanced()
            self.skipped.append(
                SkippedRegion(start.line, self.tokens[self.pos - 1].line, "class parameters")
            )
        if self.peek().kind != "LBRACE":
            self.skip_statement("malformed class definition", start_tok=class_tok)
            return None
        open_brace = self.advance()
        children = self.parse_statements(open_brace)
        block = UnitBlock(
            name=name_tok.text,
            kind=BlockKind.CLASS,
            technology=Technology.PUPPET,
            location=self.loc(class_tok),
        )
        block.children = children
        return block

    def parse_case(self) -> ConditionBlock | None:
        case_tok = self.advance()
        subject_start = self.peek()
        while self.peek().kind not in ("LBRACE", "EOF"):
            tok = self.advance()
            if tok.kind == "COMMENT":
                self._note_comment(tok)
        if self.peek().kind != "LBRACE":
            self.skip_statement("malformed case statement", start_tok=case_tok)
            return None
        subject_end = self.tokens[self.pos - 1]
        subject_text = (
            self.slice(subject_start, subject_end) if subject_end.start >= subject_start.start else ""
        )
        subject = Value(
            kind=ValueKind.REFERENCE if "$" in subject_text else ValueKind.STRING,
            raw_text=subject_text,
            has_variable="$" in subject_text,
        )
        open_brace = self.advance()
        branches: list[ConditionBranch] = []
        has_default = False
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                raise ParseError("unbalanced '{'", open_brace.line)
            if tok.kind == "RBRACE":
                self.advance()
                break
            if tok.kind == "COMMENT":
                self.advance()
                self._note_comment(tok)
                continue
            guard_start = tok
            while self.peek().kind not in ("COLON", "LBRACE", "RBRACE", "EOF"):
                inner = self.advance()
                if inner.kind == "COMMENT":
                    self._note_comment(inner)
            if self.peek().kind == "COLON":
                guard_end = self.tokens[self.pos - 1]
                guard_text = self.slice(guard_start, guard_end)
                self.advance()
            else:
                guard_text = ""
            if self.peek().kind != "LBRACE":
                self.skip_statement("malformed case branch")
                continue
            branch_brace = self.advance()
            body = self.parse_statements(branch_brace)
            if guard_text.strip() == "default":
                has_default = True
            branches.append(ConditionBranch(guard=guard_text.strip(), body=body))
        return ConditionBlock(
            subject=subject,
            branches=branches,
            has_default_branch=has_default,
            location=self.loc(case_tok),
        )

    def parse_resource(self, unit_type: str, type_tok: Token | None = None) -> IRNode | None:
        if type_tok is None:
            type_tok = self.advance()
        open_brace = self.advance()  # '{'
        title_tok = self.peek()
        if title_tok.kind in ("RBRACE", "EOF"):
            self.skip_statement("empty resource body", start_tok=type_tok)
            return None
        title_value = self.parse_value()
        title = _unquote(title_value.raw_text)
        if self.peek().kind != "COLON":
            # not a resource declaration after all; bail out to the brace end
            self._skip_to_matching_rbrace(open_brace)
            self.skipped.append(
                SkippedRegion(type_tok.line, self.tokens[self.pos - 1].line, "unsupported block")
            )
            return None
        self.advance()  # ':'
        attributes: list[Attribute] = []
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                raise ParseError("unbalanced '{'", open_brace.line)
            if tok.kind == "RBRACE":
                self.advance()
                break
            if tok.kind == "COMMENT":
                self.advance()
                self._note_comment(tok)
                continue
            if tok.kind == "COMMA":
                self.advance()
                continue
            if tok.kind == "IDENT" and self.peek(1).kind == "FARROW":
                name_tok = self.advance()
                self.advance()  # '=>'
                value = self.parse_value()
                attributes.append(
                    Attribute(name=name_tok.text, value=value, location=self.loc(name_tok))
                )
                continue
            start = tok
            while self.peek().kind not in ("COMMA", "RBRACE", "EOF"):
                if self.peek().kind in _OPENERS:
                    self._consume_balanced()
                else:
                    self.advance()
            self.skipped.append(
                SkippedRegion(start.line, self.tokens[self.pos - 1].line, "unsupported attribute")
            )
        return AtomicUnit(
            unit_type=unit_type,
            title=title,
            attributes=attributes,
            location=self.loc(type_tok),
        )

    # ------------------------------------------------------------------
    # values

    def parse_value(self) -> Value:
        start = self.peek()
        value = self._parse_primary()
        # fold trailing same-line expression tokens (concatenation, arithmetic)
        # into an opaque reference so nothing is silently dropped
        extended = False
        has_var = value.has_variable
        while (
            self.peek().kind not in ("COMMA", "RBRACE", "COLON", "EOF")
            and self.peek().line == self.tokens[self.pos - 1].line
            and not self._starts_statement(self.peek())
            and self.peek().kind != "FARROW"
        ):
            tok = self.peek()
            if tok.kind in _OPENERS:
                self._consume_balanced()
            else:
                self.advance()
            if tok.kind == "VAR" or (tok.kind == "STRING" and tok.interpolated):
                has_var = True
            extended = True
        if extended:
            # opaque multi-token expression; Reference implies has_variable
            raw = self.slice(start, self.tokens[self.pos - 1])
            return Value(kind=ValueKind.REFERENCE, raw_text=raw, has_variable=True)
        return value

    def _parse_primary(self) -> Value:
        tok = self.peek()
        if tok.kind == "STRING":
            self.advance()
            return Value(ValueKind.STRING, tok.text, tok.interpolated)
        if tok.kind == "INT":
            self.advance()
            return Value(ValueKind.INTEGER, tok.text, False)
        if tok.kind == "VAR":
            self.advance()
            raw_end = tok
            while self.peek().kind == "LBRACK":
                raw_end = self._consume_balanced()
            raw = self.slice(tok, raw_end) if raw_end is not tok else tok.text
            return Value(ValueKind.REFERENCE, raw, True)
        if tok.kind == "IDENT":
            if tok.text in ("true", "false"):
                self.advance()
                return Value(ValueKind.BOOLEAN, tok.text, False)
            if tok.text == "undef":
                self.advance()
                return Value(ValueKind.NULL, tok.text, False)
            if self.peek(1).kind == "LPAREN":
                # function call; literal fallback arguments stay visible in raw_text
                self.advance()
                end = self._consume_balanced()
                raw = self.slice(tok, end)
                return Value(ValueKind.REFERENCE, raw, True)
            self.advance()
            return Value(ValueKind.STRING, tok.text, False)
        if tok.kind in ("LBRACK", "LBRACE"):
            end = self._consume_balanced()
            raw = self.slice(tok, end)
            return Value(ValueKind.STRING, raw, "$" in raw)
        self.advance()
        return Value(ValueKind.STRING, tok.text, False)

    # ------------------------------------------------------------------
    # recovery helpers

    def _consume_balanced(self) -> Token:
        """Consume an opener token and everything through its matching closer."""
        open_tok = self.advance()
        want = open_tok.kind
        depth = 1
        last = open_tok
        while depth > 0:
            tok = self.advance()
            if tok.kind == "EOF":
                raise ParseError(f"unbalanced {open_tok.text!r}", open_tok.line)
            if tok.kind == "COMMENT":
                self._note_comment(tok)
            if tok.kind == want:
                depth += 1
            elif _CLOSERS.get(tok.kind) == want:
                depth -= 1
            last = tok
        return last

    def _skip_to_matching_rbrace(self, open_brace: Token) -> None:
        depth = 1
        while depth > 0:
            tok = self.advance()
            if tok.kind == "EOF":
                raise ParseError("unbalanced '{'", open_brace.line)
            if tok.kind == "COMMENT":
                self._note_comment(tok)
            if tok.kind == "LBRACE":
                depth += 1
            elif tok.kind == "RBRACE":
                depth -= 1

    def skip_statement(self, reason: str, start_tok: Token | None = None) -> None:
        start = start_tok or self.peek()
        if self.peek() is start:
            self.advance()
        while True:
            tok = self.peek()
            if tok.kind == "EOF" or self._starts_statement(tok):
                break
            if tok.kind in _OPENERS:
                self._consume_balanced()
            else:
                self.advance()
        end_line = self.tokens[self.pos - 1].line if self.pos > 0 else start.line
        self.skipped.append(SkippedRegion(start.line, max(start.line, end_line), reason))


def _unquote(text: str) -> str:
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    return text


def parse_puppet(content: str, path: str) -> ParseReport:
    """Parse a Puppet manifest into a UnitBlock tree.

    Raises ParseError only for unbalanced braces; malformed constructs are
    otherwise skipped with a recorded reason.
    """
    tokens, tokenize_errors = _tokenize(content, path)
    parser = _Parser(tokens, content, path)
    children = parser.parse_statements(open_brace=None)
    root = UnitBlock(
        name=path,
        kind=BlockKind.SCRIPT,
        technology=Technology.PUPPET,
        location=SourceLocation(path, 1),
    )
    root.children = children
    parser.errors.extend(tokenize_errors)
    return ParseReport(
        block=root,
        skipped_regions=parser.skipped,
        comment_count=parser.comment_count,
        parse_errors=sorted(parser.errors),
    )
