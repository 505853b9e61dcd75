"""Ansible playbook front-end.

Uses a general-purpose YAML reader for structure, then maps plays, tasks,
and vars onto the IR. Values keep their verbatim source text (sliced by the
reader's marks) so quoting survives into raw_text. Comments come from a
separate quote-aware line scan because the YAML node graph drops them.
"""

from __future__ import annotations

import re

import yaml
from yaml.nodes import MappingNode, Node, ScalarNode, SequenceNode

from ..ir import (
    AtomicUnit,
    Attribute,
    BlockKind,
    IRNode,
    SourceLocation,
    Technology,
    UnitBlock,
    Value,
    ValueKind,
    Variable,
)
from . import ParseError, ParseReport, SkippedRegion, scan_hash_comments

# Task-level keys that are orchestration, not the module invocation.
_TASK_KEYWORDS = {
    "name", "when", "register", "become", "become_user", "become_method",
    "tags", "with_items", "with_dict", "with_fileglob", "loop", "loop_control",
    "vars", "environment", "ignore_errors", "changed_when", "failed_when",
    "notify", "delegate_to", "run_once", "until", "retries", "delay",
    "no_log", "check_mode", "any_errors_fatal", "listen", "args",
}

_TASK_LIST_KEYS = {"tasks", "handlers", "pre_tasks", "post_tasks"}
_NESTED_TASK_KEYS = {"block", "rescue", "always"}

_KV_TOKEN_RE = re.compile(r"^[\w.\-]+=")


class _Builder:
    def __init__(self, content: str, path: str):
        self.content = content
        self.path = path
        self.skipped: list[SkippedRegion] = []

    def line(self, node: Node) -> int:
        return node.start_mark.line + 1

    def loc(self, node: Node) -> SourceLocation:
        return SourceLocation(self.path, node.start_mark.line + 1, node.start_mark.column + 1)

    def raw(self, node: Node) -> str:
        return self.content[node.start_mark.index : node.end_mark.index]

    def skip(self, node: Node, reason: str) -> None:
        self.skipped.append(SkippedRegion(self.line(node), node.end_mark.line + 1, reason))

    def scalar_value(self, node: ScalarNode) -> Value:
        raw = self.raw(node)
        tag = node.tag.rsplit(":", 1)[-1]
        kind = {
            "int": ValueKind.INTEGER,
            "bool": ValueKind.BOOLEAN,
            "null": ValueKind.NULL,
        }.get(tag, ValueKind.STRING)
        return Value(kind=kind, raw_text=raw, has_variable="{{" in raw)

    # ------------------------------------------------------------------

    def is_play(self, mapping: MappingNode) -> bool:
        keys = {k.value for k, _ in mapping.value if isinstance(k, ScalarNode)}
        return bool(keys & {"hosts", "import_playbook", "roles"})

    def build_play(self, mapping: MappingNode) -> UnitBlock:
        play = UnitBlock(
            name=self._name_of(mapping),
            kind=BlockKind.PLAY,
            technology=Technology.ANSIBLE,
            location=self.loc(mapping),
        )
        for key, val in mapping.value:
            if not isinstance(key, ScalarNode):
                self.skip(key, "non-scalar mapping key")
                continue
            key_name = key.value
            if key_name == "name":
                continue
            if key_name == "vars" and isinstance(val, MappingNode):
                play.children.extend(self.build_vars(val, prefix=""))
            elif key_name in _TASK_LIST_KEYS and isinstance(val, SequenceNode):
                for item in val.value:
                    if isinstance(item, MappingNode):
                        play.children.extend(self.build_task(item))
                    else:
                        self.skip(item, f"non-mapping entry under {key_name!r}")
            elif isinstance(val, ScalarNode):
                play.children.append(
                    Attribute(name=key_name, value=self.scalar_value(val), location=self.loc(key))
                )
            elif isinstance(val, SequenceNode):
                for item in val.value:
                    if isinstance(item, ScalarNode):
                        play.children.append(
                            Attribute(name=key_name, value=self.scalar_value(item), location=self.loc(item))
                        )
                    else:
                        self.skip(item, f"non-scalar entry under {key_name!r}")
            elif isinstance(val, MappingNode):
                play.children.extend(self._mapping_attributes(val, prefix=key_name + "."))
        return play

    def build_task(self, mapping: MappingNode) -> list[IRNode]:
        entries = [(k, v) for k, v in mapping.value if isinstance(k, ScalarNode)]
        keys = [k.value for k, _ in entries]

        if _NESTED_TASK_KEYS & set(keys):
            # block/rescue/always: flatten the inner tasks into the play
            nodes: list[IRNode] = []
            for key, val in entries:
                if key.value in _NESTED_TASK_KEYS and isinstance(val, SequenceNode):
                    for item in val.value:
                        if isinstance(item, MappingNode):
                            nodes.extend(self.build_task(item))
            return nodes

        module_entry = next(((k, v) for k, v in entries if k.value not in _TASK_KEYWORDS), None)
        if module_entry is None:
            self.skip(mapping, "task without a module key")
            return []
        module_key, module_val = module_entry
        unit = AtomicUnit(
            unit_type=module_key.value.rsplit(".", 1)[-1],
            title=self._name_of(mapping),
            attributes=[],
            location=self.loc(module_key),
        )
        self._module_arguments(unit, module_key, module_val)
        for key, val in entries:
            if key is module_key or key.value == "name":
                continue
            key_name = key.value
            if key_name == "args" and isinstance(val, MappingNode):
                unit.attributes.extend(self._mapping_attributes(val, prefix=""))
            elif key_name == "vars" and isinstance(val, MappingNode):
                unit.attributes.extend(self._mapping_attributes(val, prefix="vars."))
            elif isinstance(val, ScalarNode):
                unit.attributes.append(
                    Attribute(name=key_name, value=self.scalar_value(val), location=self.loc(key))
                )
            elif isinstance(val, SequenceNode):
                for item in val.value:
                    if isinstance(item, ScalarNode):
                        unit.attributes.append(
                            Attribute(name=key_name, value=self.scalar_value(item), location=self.loc(item))
                        )
        return [unit]

    def _module_arguments(self, unit: AtomicUnit, module_key: ScalarNode, val: Node) -> None:
        if isinstance(val, MappingNode):
            unit.attributes.extend(self._mapping_attributes(val, prefix=""))
        elif isinstance(val, ScalarNode):
            if val.tag.endswith(":null"):
                return
            raw = self.raw(val)
            parts = _split_unquoted_whitespace(raw)
            if parts and all(_KV_TOKEN_RE.match(p) for p in parts):
                for part in parts:
                    name, _, rest = part.partition("=")
                    unit.attributes.append(
                        Attribute(
                            name=name,
                            value=Value(ValueKind.STRING, rest, "{{" in rest),
                            location=self.loc(val),
                        )
                    )
            else:
                unit.attributes.append(
                    Attribute(name="args", value=self.scalar_value(val), location=self.loc(val))
                )
        elif isinstance(val, SequenceNode):
            self.skip(val, f"sequence arguments for module {unit.unit_type!r}")

    def _mapping_attributes(self, mapping: MappingNode, prefix: str) -> list[Attribute]:
        attrs: list[Attribute] = []
        for key, val in mapping.value:
            if not isinstance(key, ScalarNode):
                continue
            name = prefix + key.value
            if isinstance(val, ScalarNode):
                attrs.append(Attribute(name=name, value=self.scalar_value(val), location=self.loc(key)))
            elif isinstance(val, MappingNode):
                attrs.extend(self._mapping_attributes(val, prefix=name + "."))
            elif isinstance(val, SequenceNode):
                for item in val.value:
                    if isinstance(item, ScalarNode):
                        attrs.append(
                            Attribute(name=name, value=self.scalar_value(item), location=self.loc(item))
                        )
        return attrs

    def build_vars(self, mapping: MappingNode, prefix: str) -> list[Variable]:
        out: list[Variable] = []
        for key, val in mapping.value:
            if not isinstance(key, ScalarNode):
                continue
            name = prefix + key.value
            if isinstance(val, ScalarNode):
                out.append(Variable(name=name, value=self.scalar_value(val), location=self.loc(key)))
            elif isinstance(val, MappingNode):
                out.extend(self.build_vars(val, prefix=name + "."))
            elif isinstance(val, SequenceNode):
                for item in val.value:
                    if isinstance(item, ScalarNode):
                        out.append(
                            Variable(name=name, value=self.scalar_value(item), location=self.loc(item))
                        )
        return out

    def _name_of(self, mapping: MappingNode) -> str:
        for key, val in mapping.value:
            if isinstance(key, ScalarNode) and key.value == "name" and isinstance(val, ScalarNode):
                return str(val.value)
        return ""


def _split_unquoted_whitespace(text: str) -> list[str]:
    """Split ``k=v k2="a b"`` shorthand on whitespace outside quotes."""
    parts: list[str] = []
    buf: list[str] = []
    quote = None
    for ch in text:
        if quote:
            buf.append(ch)
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
            buf.append(ch)
        elif ch.isspace():
            if buf:
                parts.append("".join(buf))
                buf = []
        else:
            buf.append(ch)
    if buf:
        parts.append("".join(buf))
    return parts


def parse_ansible(content: str, path: str) -> ParseReport:
    """Parse a playbook, task file, or vars file into a UnitBlock tree.

    Raises ParseError for malformed YAML (with the reader's line info).
    """
    comments = scan_hash_comments(content, path)
    try:
        docs = list(yaml.compose_all(content, Loader=yaml.SafeLoader))
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else 0
        raise ParseError(f"malformed YAML: {exc.problem}", line) from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed YAML: {exc}", 0) from exc

    builder = _Builder(content, path)
    children: list[IRNode] = []
    for doc in docs:
        if doc is None:
            continue
        if isinstance(doc, SequenceNode):
            for item in doc.value:
                if not isinstance(item, MappingNode):
                    builder.skip(item, "non-mapping document entry")
                elif builder.is_play(item):
                    children.append(builder.build_play(item))
                else:
                    children.extend(builder.build_task(item))
        elif isinstance(doc, MappingNode):
            children.extend(builder.build_vars(doc, prefix=""))
        else:
            builder.skip(doc, "unsupported document shape")

    root = UnitBlock(
        name=path,
        kind=BlockKind.SCRIPT,
        technology=Technology.ANSIBLE,
        location=SourceLocation(path, 1),
    )
    root.children = sorted(children + list(comments), key=lambda n: n.location.line)
    return ParseReport(
        block=root,
        skipped_regions=builder.skipped,
        comment_count=len(comments),
        parse_errors=[],
    )
