from __future__ import annotations

import pytest

from iacsmell.pruner import ExternalScorer, PrunerError, prune, score_external
from iacsmell.rules import SmellType

from conftest import scorer_command
from test_dataset import make_instance
from test_pruner import FILE_TEXTS, make_finding


def _instances(n: int, prefix: str = "x"):
    return [make_instance(f"${prefix}_{i} = 'v{i}'") for i in range(n)]


def test_handshake_exposes_scorer_id():
    with ExternalScorer(scorer_command("zero")) as scorer:
        assert scorer.scorer_id == "double-zero"


def test_zero_scorer_keeps_all_findings():
    findings = [make_finding(i, SmellType.WEAK_CRYPTO) for i in range(1, 6)]
    with ExternalScorer(scorer_command("zero")) as scorer:
        kept, dropped = prune(findings, scorer, file_texts=FILE_TEXTS)
    assert len(kept) == 5 and dropped == []
    assert all(k.scorer_id == "double-zero" for k in kept)


def test_magic_scorer_round_trips_embedded_values():
    values = [0.05, 0.5, 0.95, 0.3]
    instances = [make_instance(f"$v{i} = 'x'  # fp={v}") for i, v in enumerate(values)]
    with ExternalScorer(scorer_command("magic")) as scorer:
        probabilities = score_external(scorer, instances)
    assert probabilities == values


def test_magic_default_when_no_marker():
    with ExternalScorer(scorer_command("magic")) as scorer:
        assert score_external(scorer, _instances(3)) == [0.25, 0.25, 0.25]


def test_sequence_ids_continue_across_batches():
    with ExternalScorer(scorer_command("magic")) as scorer:
        first = score_external(scorer, _instances(2, "a"))
        second = score_external(scorer, _instances(2, "b"))
    assert first == [0.25, 0.25] and second == [0.25, 0.25]


def test_scorer_exit_mid_batch_is_an_error_with_no_partial_results():
    findings = [make_finding(i, SmellType.WEAK_CRYPTO) for i in range(1, 6)]
    with ExternalScorer(scorer_command("exit-mid-batch")) as scorer:
        with pytest.raises(PrunerError):
            prune(findings, scorer, file_texts=FILE_TEXTS)


def test_per_item_error_names_the_sequence_id():
    with ExternalScorer(scorer_command("per-item-error")) as scorer:
        with pytest.raises(PrunerError) as err:
            score_external(scorer, _instances(3))
    assert "2" in str(err.value)


def test_missing_handshake_is_an_error():
    with pytest.raises(PrunerError):
        ExternalScorer(scorer_command("no-handshake"))


def test_silent_scorer_times_out():
    with ExternalScorer(scorer_command("silent"), timeout=0.5) as scorer:
        with pytest.raises(PrunerError) as err:
            score_external(scorer, _instances(1))
    assert "timed out" in str(err.value)


def test_nonexistent_command_is_an_error():
    with pytest.raises(PrunerError):
        ExternalScorer(["/nonexistent/scorer-binary"])
