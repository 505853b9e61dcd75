from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iacsmell.ir import (
    AtomicUnit,
    Attribute,
    BlockKind,
    Comment,
    ConditionBlock,
    Technology,
    UnitBlock,
    ValueKind,
    Variable,
    iterate_block,
    node_line_text,
)
from iacsmell.parsers import (
    ParseError,
    ParseReport,
    UnknownTechnology,
    detect_technology,
    parse_file,
)
from iacsmell.parsers.ansible import parse_ansible
from iacsmell.parsers.chef import parse_chef
from iacsmell.parsers.puppet import parse_puppet

from conftest import CORPUS, MINI


def _nodes_of(report: ParseReport, node_type):
    return [n for n in iterate_block(report.block) if isinstance(n, node_type)]


# ---------------------------------------------------------------------------
# technology detection

@pytest.mark.parametrize(
    "path,expected",
    [
        ("site.pp", Technology.PUPPET),
        ("play.yml", Technology.ANSIBLE),
        ("play.yaml", Technology.ANSIBLE),
        ("recipe.rb", Technology.CHEF),
    ],
)
def test_detect_by_extension(path, expected):
    assert detect_technology(path, "") is expected


def test_detect_by_sniffing_puppet_snippet():
    assert detect_technology("x.txt", "user { 'app': groups => ['sudo'] }") is Technology.PUPPET


def test_detect_unknown_raises():
    with pytest.raises(UnknownTechnology):
        detect_technology("x.txt", "int main() { return 0; }")


def test_every_fixture_file_sniffs_correctly_without_extension():
    expected = {
        "puppet": Technology.PUPPET,
        "ansible": Technology.ANSIBLE,
        "chef": Technology.CHEF,
    }
    checked = 0
    for path in sorted(CORPUS.rglob("*")):
        if not path.is_file():
            continue
        want = expected[path.parent.name]
        assert detect_technology("noext", path.read_text()) is want, path
        checked += 1
    for path in sorted(MINI.rglob("*.pp")):
        assert detect_technology("noext", path.read_text()) is Technology.PUPPET
        checked += 1
    assert checked >= 30


# ---------------------------------------------------------------------------
# puppet

def test_puppet_resource_with_attribute():
    report = parse_puppet("user { 'app': groups => ['sudo'] }", "x.pp")
    units = _nodes_of(report, AtomicUnit)
    assert len(units) == 1
    assert units[0].unit_type == "user"
    assert units[0].title == "app"
    assert [a.name for a in units[0].attributes] == ["groups"]
    assert units[0].attributes[0].value.raw_text == "['sudo']"


def test_puppet_function_call_keeps_literal_fallback():
    report = parse_puppet("$db_user = hiera('user', 'ironic')", "x.pp")
    variables = _nodes_of(report, Variable)
    assert len(variables) == 1
    var = variables[0]
    assert var.name == "db_user"
    assert var.value.kind is ValueKind.REFERENCE
    assert var.value.has_variable
    assert "'ironic'" in var.value.raw_text


def test_puppet_case_without_default():
    report = parse_puppet("case $osfamily {\n  'Debian': { $p = 'a' }\n}", "x.pp")
    blocks = _nodes_of(report, ConditionBlock)
    assert len(blocks) == 1
    assert not blocks[0].has_default_branch
    assert blocks[0].location.line == 1


def test_puppet_case_with_default():
    src = "case $osfamily {\n  'Debian': { $p = 'a' }\n  default: { $p = 'b' }\n}"
    report = parse_puppet(src, "x.pp")
    assert _nodes_of(report, ConditionBlock)[0].has_default_branch


def test_puppet_class_definition_becomes_block():
    report = parse_puppet("class web {\n  $port = 80\n}", "x.pp")
    blocks = [n for n in _nodes_of(report, UnitBlock) if n.kind is BlockKind.CLASS]
    assert len(blocks) == 1
    assert blocks[0].name == "web"
    assert len(_nodes_of(report, Variable)) == 1


def test_puppet_interpolated_string_sets_has_variable():
    report = parse_puppet('$greeting = "hello ${name}"', "x.pp")
    assert _nodes_of(report, Variable)[0].value.has_variable


def test_puppet_unknown_construct_is_skipped_not_dropped():
    src = "if $x {\n  $y = 1\n}\n$z = 2"
    report = parse_puppet(src, "x.pp")
    assert report.skipped_regions, "unsupported 'if' must be recorded"
    assert [v.name for v in _nodes_of(report, Variable)] == ["z"]


def test_puppet_unbalanced_brace_is_fatal():
    with pytest.raises(ParseError):
        parse_puppet("class web {\n  $x = 1\n", "x.pp")


def test_puppet_comment_inside_resource_is_captured():
    src = "user { 'app':\n  # TODO fix ownership\n  ensure => present,\n}"
    report = parse_puppet(src, "x.pp")
    comments = _nodes_of(report, Comment)
    assert len(comments) == 1
    assert comments[0].location.line == 2
    assert report.comment_count == 1


# ---------------------------------------------------------------------------
# ansible

def test_ansible_vars_entry_becomes_variable():
    report = parse_ansible('---\n- hosts: all\n  vars:\n    db_password: ""\n', "p.yml")
    variables = _nodes_of(report, Variable)
    assert len(variables) == 1
    assert variables[0].name == "db_password"
    assert variables[0].value.kind is ValueKind.STRING
    assert variables[0].value.raw_text == '""'
    assert variables[0].location.line == 4


def test_ansible_kv_shorthand_task():
    src = "---\n- hosts: all\n  tasks:\n    - get_url: url=http://ex.com/pkg.rpm dest=/tmp/pkg.rpm\n"
    report = parse_ansible(src, "p.yml")
    units = _nodes_of(report, AtomicUnit)
    assert len(units) == 1
    assert units[0].unit_type == "get_url"
    assert {a.name: a.value.raw_text for a in units[0].attributes} == {
        "url": "http://ex.com/pkg.rpm",
        "dest": "/tmp/pkg.rpm",
    }


def test_ansible_quoted_shorthand_value_keeps_spaces():
    src = '---\n- hosts: all\n  tasks:\n    - command: creates=/tmp/x cmd="echo a b"\n'
    report = parse_ansible(src, "p.yml")
    attrs = {a.name: a.value.raw_text for a in _nodes_of(report, AtomicUnit)[0].attributes}
    assert attrs["cmd"] == '"echo a b"'


def test_ansible_empty_document():
    report = parse_ansible("", "p.yml")
    assert report.block.children == []


def test_ansible_task_line_is_module_key_line():
    src = "---\n- hosts: all\n  tasks:\n    - name: fetch\n      get_url:\n        url: https://x/y.tgz\n"
    report = parse_ansible(src, "p.yml")
    unit = _nodes_of(report, AtomicUnit)[0]
    assert unit.location.line == 5
    assert unit.title == "fetch"
    assert unit.attributes[0].location.line == 6


def test_ansible_malformed_yaml_raises_with_line():
    with pytest.raises(ParseError) as err:
        parse_ansible("---\n- hosts: all\n  tasks: [\n", "p.yml")
    assert err.value.line >= 1


def test_ansible_interpolation_sets_has_variable():
    report = parse_ansible('---\nfoo: "{{ secret }}"\n', "p.yml")
    assert _nodes_of(report, Variable)[0].value.has_variable


# ---------------------------------------------------------------------------
# chef

def test_chef_node_attribute_bracket_path():
    report = parse_chef("default['db']['password'] = \"P@ssw0rd!\"", "r.rb")
    variables = _nodes_of(report, Variable)
    assert len(variables) == 1
    assert variables[0].name == "db.password"
    assert variables[0].value.raw_text == '"P@ssw0rd!"'


def test_chef_resource_block_round_trips_lines():
    src = "remote_file '/tmp/x' do\n  source 'http://ex.com/x'\nend"
    report = parse_chef(src, "r.rb")
    units = _nodes_of(report, AtomicUnit)
    assert len(units) == 1
    assert units[0].unit_type == "remote_file"
    assert units[0].title == "/tmp/x"
    attr = units[0].attributes[0]
    assert attr.name == "source"
    assert attr.value.raw_text in node_line_text(attr, src)


def test_chef_empty_input():
    report = parse_chef("", "r.rb")
    assert report.block.children == []


def test_chef_case_without_else():
    src = "case x\nwhen 1 then y\nend"
    report = parse_chef(src, "r.rb")
    blocks = _nodes_of(report, ConditionBlock)
    assert len(blocks) == 1
    assert not blocks[0].has_default_branch


def test_chef_case_with_else_is_default():
    src = "case x\nwhen 1\n  default['a']['b'] = 1\nelse\n  default['a']['b'] = 2\nend"
    report = parse_chef(src, "r.rb")
    block = _nodes_of(report, ConditionBlock)[0]
    assert block.has_default_branch
    assert [b.guard for b in block.branches] == ["1", "else"]
    assert len(block.branches[0].body) == 1


def test_chef_unbalanced_do_is_fatal():
    with pytest.raises(ParseError):
        parse_chef("user 'x' do\n  gid 'root'\n", "r.rb")


def test_chef_stray_end_is_fatal():
    with pytest.raises(ParseError):
        parse_chef("end", "r.rb")


def test_chef_unknown_statement_recorded():
    report = parse_chef("include_recipe 'base::default'", "r.rb")
    assert report.skipped_regions
    assert report.skipped_regions[0].start_line == 1


# ---------------------------------------------------------------------------
# shared invariants over the fixture corpus

def _independent_comment_count(content: str) -> int:
    """Line scanner counting '#' outside quotes; separate from the parsers."""
    count = 0
    for line in content.splitlines():
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
                count += 1
                break
            i += 1
    return count


def test_comment_completeness_on_fixture_corpus(corpus_result):
    for rel, report in corpus_result.reports.items():
        content = corpus_result.file_texts[rel]
        assert report.comment_count == _independent_comment_count(content), rel


def test_location_fidelity_on_fixture_corpus(corpus_result):
    for rel, report in corpus_result.reports.items():
        content = corpus_result.file_texts[rel]
        for node in iterate_block(report.block):
            if isinstance(node, (Attribute, Variable)):
                raw = node.value.raw_text
                if "\n" in raw:
                    continue  # multi-line values are exempt by construction
                line_text = node_line_text(node, content)
                assert raw in line_text or node.name in line_text, (rel, node)
            elif isinstance(node, AtomicUnit):
                # puppet/chef headers carry type and title; ansible expanded
                # tasks carry only the module key on the located line
                line_text = node_line_text(node, content)
                assert node.title in line_text or node.unit_type in line_text, (rel, node)


def test_skipped_regions_within_bounds(corpus_result):
    for rel, report in corpus_result.reports.items():
        n_lines = len(corpus_result.file_texts[rel].splitlines())
        for region in report.skipped_regions:
            assert 1 <= region.start_line <= region.end_line <= n_lines


def test_structural_invariants_on_fixture_corpus(corpus_result):
    from iacsmell.ir import ConditionBlock, ModuleUnit

    def sibling_lists(node):
        if isinstance(node, UnitBlock):
            yield node.children
            for child in node.children:
                yield from sibling_lists(child)
        elif isinstance(node, AtomicUnit):
            yield node.attributes
        elif isinstance(node, ConditionBlock):
            for branch in node.branches:
                yield branch.body
                for child in branch.body:
                    yield from sibling_lists(child)

    for rel, report in corpus_result.reports.items():
        for node in iterate_block(report.block):
            if isinstance(node, ModuleUnit):
                continue
            # every descendant carries the block's file path
            assert node.location.file_path == rel
            assert node.location.line >= 1
            if isinstance(node, Variable):
                assert "$" not in node.name and "@" not in node.name
            if isinstance(node, Comment):
                assert not node.text.startswith("#")
            value = getattr(node, "value", None)
            if value is not None and value.kind is ValueKind.REFERENCE:
                assert value.has_variable
        for siblings in sibling_lists(report.block):
            lines = [child.location.line for child in siblings]
            assert lines == sorted(lines), (rel, lines)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=400))
def test_parsers_are_total_on_arbitrary_text(text):
    for parser in (parse_puppet, parse_chef, parse_ansible):
        try:
            report = parser(text, "f")
        except ParseError:
            continue
        assert isinstance(report, ParseReport)


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="{}'\":=>$abc \n#-", max_size=200))
def test_puppet_total_on_brace_heavy_text(text):
    try:
        parse_puppet(text, "f.pp")
    except ParseError:
        pass
