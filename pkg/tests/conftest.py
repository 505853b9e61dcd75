from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
CORPUS = FIXTURES / "corpus"
MINI = FIXTURES / "puppet" / "mini"
GOLDEN = FIXTURES / "golden"
SCORER_DOUBLE = Path(__file__).resolve().parent / "doubles" / "echo_scorer.py"

sys.path.insert(0, str(Path(__file__).resolve().parent))

from iacsmell.parsers import LoadResult, load_project  # noqa: E402
from iacsmell.rules import Finding, RuleConfig, SmellType, detect  # noqa: E402


@pytest.fixture(scope="session")
def rule_config() -> RuleConfig:
    return RuleConfig.default()


@pytest.fixture(scope="session")
def corpus_result() -> LoadResult:
    result = load_project(CORPUS)
    assert not result.failures, f"fixture corpus must parse cleanly: {result.failures}"
    return result


@pytest.fixture(scope="session")
def corpus_findings(corpus_result, rule_config) -> list[Finding]:
    return detect(corpus_result.project, rule_config)


def load_expected_findings() -> list[tuple[str, int, SmellType, str]]:
    """Frozen (file, line, smell, TP/FP) rows from expected_findings.tsv."""
    rows = []
    for line in (FIXTURES / "expected_findings.tsv").read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        file_path, lineno, smell, label = line.split("\t")
        rows.append((file_path, int(lineno), SmellType.from_name(smell), label))
    return rows


def scorer_command(mode: str) -> list[str]:
    return [sys.executable, str(SCORER_DOUBLE), mode]
