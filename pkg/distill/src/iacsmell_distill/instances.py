"""Reader/writer for the analyzer's instance file format.

One JSON object per line: id, technology, file_path, line, smell, target,
context, rationale, and an optional label ("TP"/"FP"). This module is the
only knowledge of the analyzer this package carries; the format is the
contract, not the implementation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable


@dataclass(frozen=True)
class Instance:
    id: str
    technology: str
    file_path: str
    line: int
    smell: str
    target: str
    context: str
    rationale: str
    label: str | None = None

    def with_label(self, label: str | None) -> "Instance":
        return replace(self, label=label)


def from_record(record: dict) -> Instance:
    return Instance(
        id=record["id"],
        technology=record["technology"],
        file_path=record["file_path"],
        line=record["line"],
        smell=record["smell"],
        target=record["target"],
        context=record["context"],
        rationale=record["rationale"],
        label=record.get("label"),
    )


def to_record(instance: Instance) -> dict:
    record = {
        "id": instance.id,
        "technology": instance.technology,
        "file_path": instance.file_path,
        "line": instance.line,
        "smell": instance.smell,
        "target": instance.target,
        "context": instance.context,
        "rationale": instance.rationale,
    }
    if instance.label is not None:
        record["label"] = instance.label
    return record


def read_instances(path: str | Path) -> list[Instance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(from_record(json.loads(line)))
    return out


def write_instances(instances: Iterable[Instance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for instance in instances:
            fh.write(json.dumps(to_record(instance), ensure_ascii=False) + "\n")
