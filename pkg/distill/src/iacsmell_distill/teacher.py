"""Batch pseudo-labeling through an LLM teacher.

Every instance is prompted individually with deterministic decoding
(temperature 0, top_p 1). Progress lands in an on-disk journal after each
instance, so an interrupted run resumes where it stopped and produces the
same output file as an uninterrupted one. Instances whose responses stay
unparseable after retries are emitted unlabeled and counted, never guessed.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import httpx

from .instances import Instance, read_instances, write_instances
from .prompts import UnparseableResponse, build_prompt, parse_teacher_response

API_URL_ENV = "TEACHER_API_URL"
API_KEY_ENV = "TEACHER_API_KEY"

Transport = Callable[[str], str]  # prompt text -> raw response text


class TeacherAuthError(Exception):
    """Credentials rejected; the run aborts instead of burning retries."""


class TeacherConfigError(Exception):
    """The teacher configuration violates a labeling-run invariant."""


@dataclass(frozen=True)
class TeacherConfig:
    model: str
    temperature: float = 0.0
    top_p: float = 1.0
    max_retries: int = 3
    request_timeout: float = 60.0
    min_request_interval: float = 0.0  # seconds between requests (rate limit)

    def validate_for_labeling(self) -> None:
        if self.temperature != 0.0 or self.top_p != 1.0:
            raise TeacherConfigError(
                "labeling runs require deterministic decoding "
                f"(temperature=0, top_p=1), got temperature={self.temperature}, "
                f"top_p={self.top_p}"
            )


@dataclass
class LabelingReport:
    labeled: int = 0
    unlabeled: int = 0
    resumed_from: int = 0
    retries: int = 0
    labels: list[str | None] = field(default_factory=list)


def http_transport(config: TeacherConfig) -> Transport:
    """Default transport: a chat-completions style POST to $TEACHER_API_URL."""
    url = os.environ.get(API_URL_ENV)
    key = os.environ.get(API_KEY_ENV)
    if not url or not key:
        raise TeacherAuthError(
            f"set {API_URL_ENV} and {API_KEY_ENV} to use the HTTP teacher transport"
        )
    client = httpx.Client(timeout=config.request_timeout)

    def send(prompt: str) -> str:
        response = client.post(
            url,
            headers={"Authorization": f"Bearer {key}"},
            json={
                "model": config.model,
                "temperature": config.temperature,
                "top_p": config.top_p,
                "messages": [{"role": "user", "content": prompt}],
            },
        )
        if response.status_code in (401, 403):
            raise TeacherAuthError(f"teacher API rejected credentials: {response.status_code}")
        response.raise_for_status()
        return _extract_text(response.json())

    return send


def _extract_text(payload: dict) -> str:
    # tolerate the common response shapes
    try:
        return payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        pass
    try:
        return payload["content"][0]["text"]
    except (KeyError, IndexError, TypeError):
        pass
    if isinstance(payload.get("completion"), str):
        return payload["completion"]
    if isinstance(payload.get("text"), str):
        return payload["text"]
    raise UnparseableResponse(f"unrecognized teacher response shape: {list(payload)}")


def _journal_path(out_path: Path) -> Path:
    return out_path.with_suffix(out_path.suffix + ".journal")


def _load_journal(path: Path) -> list[str | None]:
    """Completed labels in processing order; a torn trailing line (killed
    mid-write) is dropped."""
    if not path.exists():
        return []
    labels: list[str | None] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            break
        if record.get("index") != len(labels):
            break
        labels.append(record.get("label"))
    return labels


def label_instances(
    instances_path: str | Path,
    out_path: str | Path,
    config: TeacherConfig,
    transport: Transport | None = None,
) -> LabelingReport:
    """Label every instance in ``instances_path``, writing the journal as it
    goes and the final labeled file (input order preserved) at the end."""
    config.validate_for_labeling()
    send = transport if transport is not None else http_transport(config)
    instances = read_instances(instances_path)
    out = Path(out_path)
    journal_path = _journal_path(out)

    labels = _load_journal(journal_path)
    report = LabelingReport(resumed_from=len(labels))
    with open(journal_path, "a", encoding="utf-8") as journal:
        for index in range(len(labels), len(instances)):
            label = _label_one(instances[index], send, config, report)
            labels.append(label)
            journal.write(json.dumps({"index": index, "label": label}) + "\n")
            journal.flush()
            os.fsync(journal.fileno())

    labeled = [inst.with_label(label) for inst, label in zip(instances, labels)]
    write_instances(labeled, out)
    journal_path.unlink()
    report.labels = labels
    report.labeled = sum(1 for label in labels if label is not None)
    report.unlabeled = sum(1 for label in labels if label is None)
    return report


def _label_one(
    instance: Instance,
    send: Transport,
    config: TeacherConfig,
    report: LabelingReport,
) -> str | None:
    prompt = build_prompt(instance)
    for attempt in range(config.max_retries):
        if config.min_request_interval > 0:
            time.sleep(config.min_request_interval)
        try:
            response = send(prompt)
        except TeacherAuthError:
            raise
        except (httpx.HTTPError, OSError) as exc:
            report.retries += 1
            if attempt + 1 >= config.max_retries:
                return None
            time.sleep(min(2.0**attempt * 0.1, 2.0))
            continue
        try:
            return parse_teacher_response(response)
        except UnparseableResponse:
            report.retries += 1
            if attempt + 1 >= config.max_retries:
                return None
    return None
