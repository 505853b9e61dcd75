"""Scorer server: answers the analyzer's wire protocol from a checkpoint.

Protocol (newline-delimited JSON over stdin/stdout):
    on startup:  {"ready": true, "scorer_id": "..."}
    request:     {"id": n, "target": str, "context": str, "smell": str, "technology": str}
    response:    {"id": n, "fp_probability": p}  or  {"id": n, "error": "..."}

A malformed request produces an error response for that id (or id -1 when
no id could be read) and the server keeps going; end of input shuts it
down cleanly.
"""

from __future__ import annotations

import json
import sys
from typing import IO

from .instances import Instance
from .student import LoadedStudent, load_student


def _request_instance(request: dict) -> Instance:
    return Instance(
        id=str(request.get("id", "")),
        technology=request.get("technology", ""),
        file_path="",
        line=1,
        smell=request["smell"],
        target=request["target"],
        context=request["context"],
        rationale="",
    )


def serve(student: LoadedStudent, stdin: IO[str], stdout: IO[str]) -> int:
    def emit(record: dict) -> None:
        stdout.write(json.dumps(record) + "\n")
        stdout.flush()

    emit({"ready": True, "scorer_id": student.scorer_id})
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        rid = -1
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request is not an object")
            rid = request.get("id", -1)
            instance = _request_instance(request)
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            emit({"id": rid, "error": f"malformed request: {exc}"})
            continue
        try:
            probability = student.fp_probability(instance)
        except Exception as exc:  # a bad request must not kill the server
            emit({"id": rid, "error": f"scoring failed: {exc}"})
            continue
        emit({"id": rid, "fp_probability": probability})
    return 0


def serve_checkpoint(checkpoint_path: str) -> int:
    return serve(load_student(checkpoint_path), sys.stdin, sys.stdout)
