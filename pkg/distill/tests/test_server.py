"""Scorer-server tests, including conformance with the analyzer's own
protocol client (the one external interface the two components share)."""

from __future__ import annotations

import json
import subprocess

import pytest

from iacsmell_distill.instances import Instance
from iacsmell_distill.student import load_student

from conftest import ANALYZER_CORPUS, separable_instances, serve_command


@pytest.fixture()
def server(trained_checkpoint):
    proc = subprocess.Popen(
        serve_command(trained_checkpoint),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
        bufsize=1,
    )
    yield proc
    if proc.poll() is None:
        proc.stdin.close()
        proc.wait(timeout=10)


def _request(instance: Instance, rid: int) -> str:
    return json.dumps(
        {
            "id": rid,
            "target": instance.target,
            "context": instance.context,
            "smell": instance.smell,
            "technology": instance.technology,
        }
    )


def test_handshake_names_the_checkpoint(server):
    handshake = json.loads(server.stdout.readline())
    assert handshake["ready"] is True
    assert handshake["scorer_id"].startswith("student:")


def test_batch_of_three_gets_three_responses(server):
    server.stdout.readline()  # handshake
    train, _ = separable_instances(n_train=3, n_val=0)
    for rid, inst in enumerate(train, start=1):
        server.stdin.write(_request(inst, rid) + "\n")
    server.stdin.flush()
    ids = set()
    for _ in range(3):
        record = json.loads(server.stdout.readline())
        assert 0.0 <= record["fp_probability"] <= 1.0
        ids.add(record["id"])
    assert ids == {1, 2, 3}


def test_malformed_request_gets_error_and_server_continues(server):
    server.stdout.readline()  # handshake
    server.stdin.write("this is not json\n")
    server.stdin.flush()
    record = json.loads(server.stdout.readline())
    assert record["id"] == -1 and "error" in record

    server.stdin.write(json.dumps({"id": 5, "target": "x"}) + "\n")  # missing fields
    server.stdin.flush()
    record = json.loads(server.stdout.readline())
    assert record["id"] == 5 and "error" in record

    train, _ = separable_instances(n_train=1, n_val=0)
    server.stdin.write(_request(train[0], 6) + "\n")
    server.stdin.flush()
    record = json.loads(server.stdout.readline())
    assert record["id"] == 6 and "fp_probability" in record


def test_clean_shutdown_on_end_of_input(server):
    server.stdout.readline()
    server.stdin.close()
    assert server.wait(timeout=10) == 0


def test_protocol_probabilities_match_in_process_inference(trained_checkpoint, server):
    server.stdout.readline()  # handshake
    train, _ = separable_instances(n_train=10, n_val=0)
    for rid, inst in enumerate(train, start=1):
        server.stdin.write(_request(inst, rid) + "\n")
    server.stdin.flush()
    over_the_wire = {}
    for _ in range(10):
        record = json.loads(server.stdout.readline())
        over_the_wire[record["id"]] = record["fp_probability"]

    student = load_student(trained_checkpoint)
    direct = student.fp_probabilities(train)
    for rid, expected in zip(range(1, 11), direct):
        assert abs(over_the_wire[rid] - expected) < 1e-6


# ---------------------------------------------------------------------------
# conformance with the analyzer's protocol client

def test_analyzer_client_scores_through_the_server(trained_checkpoint):
    iacsmell_pruner = pytest.importorskip("iacsmell.pruner")
    iacsmell_dataset = pytest.importorskip("iacsmell.dataset")

    train, _ = separable_instances(n_train=6, n_val=0)
    client_instances = [
        iacsmell_dataset.instance_from_record(
            {
                "id": i.id, "technology": i.technology, "file_path": i.file_path,
                "line": i.line, "smell": i.smell, "target": i.target,
                "context": i.context, "rationale": i.rationale,
            }
        )
        for i in train
    ]
    student = load_student(trained_checkpoint)
    with iacsmell_pruner.ExternalScorer(serve_command(trained_checkpoint)) as scorer:
        assert scorer.scorer_id == student.scorer_id
        probabilities = scorer.score_batch(client_instances)
        again = scorer.score_batch(client_instances)
    direct = student.fp_probabilities(train)
    assert len(probabilities) == 6
    for got, expected in zip(probabilities, direct):
        assert abs(got - expected) < 1e-6
    assert probabilities == again


def test_end_to_end_analyze_with_served_student(tmp_path, trained_checkpoint):
    iacsmell_cli = pytest.importorskip("iacsmell.cli")
    import shlex

    out = tmp_path / "records.jsonl"
    command = "external:" + shlex.join(serve_command(trained_checkpoint))
    rc = iacsmell_cli.main(
        [
            "analyze", str(ANALYZER_CORPUS),
            "--scorer", command,
            "--format", "records",
            "--out", str(out),
        ]
    )
    assert rc in (0, 1)
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert records
    scored = [r for r in records if r["scorer"].startswith("student:")]
    assert scored, "targeted findings must be scored by the served student"
    assert all(0.0 <= r["fp_probability"] <= 1.0 for r in records)
