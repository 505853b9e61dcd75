from __future__ import annotations

import pytest

from iacsmell_distill.instances import Instance
from iacsmell_distill.prompts import UnparseableResponse, build_prompt, parse_teacher_response

from conftest import GOLDEN_PROMPT


def fig1_instance() -> Instance:
    """The analyzer's golden-prompt instance, reconstructed from its fields."""
    context = (
        "# database provisioning defaults\n"
        "$db_user = hiera('user', 'ironic')\n"
        "$db_password = hiera('password', 'K3yst0ne!')\n"
        "$bind_host = '127.0.0.1'"
    )
    return Instance(
        id="unused",
        technology="Puppet",
        file_path="puppet/database.pp",
        line=2,
        smell="HardCodedSecret",
        target="$db_user = hiera('user', 'ironic')",
        context=context,
        rationale="sensitive name 'user' bound to a hard-coded literal",
    )


def test_prompt_matches_analyzer_golden_file_byte_for_byte():
    assert build_prompt(fig1_instance()) == GOLDEN_PROMPT.read_text(encoding="utf-8")


def test_prompt_is_deterministic():
    assert build_prompt(fig1_instance()) == build_prompt(fig1_instance())


def test_prompt_marks_clipped_window_targets():
    inst = Instance(
        id="x", technology="Chef", file_path="r.rb", line=1,
        smell="WeakCrypto", target="checksum 'md5'",
        context="checksum 'md5'\nmode '0644'", rationale="uses 'md5'",
    )
    prompt = build_prompt(inst)
    assert ">>> checksum 'md5'" in prompt
    assert "    mode '0644'" in prompt


@pytest.mark.parametrize(
    "text,expected",
    [("DECISION: FP\nREASON: benign", "FP"), ("decision: tp", "TP"), ("DECISION: TP.", "TP")],
)
def test_parse_response_accepts(text, expected):
    assert parse_teacher_response(text) == expected


@pytest.mark.parametrize("text", ["no verdict here", "DECISION: dunno", ""])
def test_parse_response_rejects(text):
    with pytest.raises(UnparseableResponse):
        parse_teacher_response(text)
