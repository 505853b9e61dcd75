"""Pseudo-label corpus construction.

Everything between analyzer warnings and a labeled training set lives here:
mining candidate files, building teacher prompts, parsing teacher verdicts,
deduplicating against the oracle, and deterministic stratified splitting.
The LLM call itself is deliberately out of scope; a separate labeling tool
consumes the instance files this module writes.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .evaluation import OracleEntry
from .ir import LocationError, Technology
from .parsers import ParseError, UnknownTechnology, iter_source_files, parse_file
from .rules import Finding, LOW_PRECISION_SMELLS, RuleConfig, SmellType, detect_in_block


class UnparseableResponse(Exception):
    """The teacher's reply carries no usable TP/FP decision."""


class Label(Enum):
    TP = "TP"
    FP = "FP"


CONTEXT_RADIUS = 2  # 5-line window around the flagged line


def normalize_snippet(text: str) -> str:
    """Whitespace-insensitive form of a code line: trimmed, internal runs
    collapsed to single spaces; case and quoting preserved."""
    return " ".join(text.split())


def instance_id(target: str, smell: SmellType) -> str:
    digest = hashlib.md5(f"{normalize_snippet(target)}\x00{smell.value}".encode("utf-8"))
    return digest.hexdigest()


@dataclass(frozen=True)
class Instance:
    """One pruner training/inference example: the flagged line in its
    5-line window, plus warning metadata and an optional pseudo-label."""

    id: str
    technology: Technology
    file_path: str
    line: int
    smell: SmellType
    target: str
    context: str
    rationale: str
    label: Label | None = None

    @property
    def snippet_key(self) -> tuple[str, str]:
        return (normalize_snippet(self.target), self.smell.value)

    def with_label(self, label: Label | None) -> "Instance":
        return replace(self, label=label)


def context_window(file_text: str, line: int, radius: int = CONTEXT_RADIUS) -> str:
    """Lines [line-radius, line+radius] clipped to file bounds, joined by
    newlines. Raises LocationError when the line is out of range."""
    lines = file_text.splitlines()
    if not 1 <= line <= len(lines):
        raise LocationError(f"line {line} out of range ({len(lines)} lines)")
    lo = max(1, line - radius)
    hi = min(len(lines), line + radius)
    return "\n".join(lines[lo - 1 : hi])


def instance_from_finding(finding: Finding, file_text: str) -> Instance:
    lines = file_text.splitlines()
    if not 1 <= finding.line <= len(lines):
        raise LocationError(
            f"{finding.file_path}: line {finding.line} out of range ({len(lines)} lines)"
        )
    target = lines[finding.line - 1]
    return Instance(
        id=instance_id(target, finding.smell),
        technology=finding.technology,
        file_path=finding.file_path,
        line=finding.line,
        smell=finding.smell,
        target=target,
        context=context_window(file_text, finding.line),
        rationale=finding.rationale,
    )


# ---------------------------------------------------------------------------
# instance file format (newline-delimited JSON records; the contract between
# this analyzer and any external labeling/scoring tool)

def instance_to_record(instance: Instance) -> dict:
    record = {
        "id": instance.id,
        "technology": instance.technology.value,
        "file_path": instance.file_path,
        "line": instance.line,
        "smell": instance.smell.value,
        "target": instance.target,
        "context": instance.context,
        "rationale": instance.rationale,
    }
    if instance.label is not None:
        record["label"] = instance.label.value
    return record


def instance_from_record(record: dict) -> Instance:
    return Instance(
        id=record["id"],
        technology=Technology.from_name(record["technology"]),
        file_path=record["file_path"],
        line=record["line"],
        smell=SmellType.from_name(record["smell"]),
        target=record["target"],
        context=record["context"],
        rationale=record["rationale"],
        label=Label(record["label"]) if "label" in record else None,
    )


def write_instances(instances: Iterable[Instance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for instance in instances:
            fh.write(json.dumps(instance_to_record(instance), ensure_ascii=False) + "\n")


def read_instances(path: str | Path) -> list[Instance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(instance_from_record(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# candidate mining

@dataclass
class MiningReport:
    instances: list[Instance] = field(default_factory=list)
    kept_files: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def mine_candidates(
    corpus_root: str | Path,
    config: RuleConfig,
    min_warnings: int = 20,
    max_lines: int = 200,
    targeted: frozenset[SmellType] = LOW_PRECISION_SMELLS,
) -> MiningReport:
    """Collect unlabeled instances from files dense in targeted warnings.

    A file contributes only when it has at least ``min_warnings`` findings
    of targeted smell types and at most ``max_lines`` lines. Unreadable or
    unparseable files are skipped with a recorded reason.
    """
    root = Path(corpus_root)
    report = MiningReport()
    for file_path in iter_source_files(root):
        rel = file_path.relative_to(root).as_posix()
        try:
            content = file_path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            report.skipped.append((rel, f"unreadable: {exc}"))
            continue
        if len(content.splitlines()) > max_lines:
            report.skipped.append((rel, "over line limit"))
            continue
        try:
            parse_report = parse_file(rel, content)
        except (ParseError, UnknownTechnology) as exc:
            report.skipped.append((rel, f"parse failure: {exc}"))
            continue
        findings = _dedup_findings(detect_in_block(parse_report.block, config))
        targeted_findings = [f for f in findings if f.smell in targeted]
        if len(targeted_findings) < min_warnings:
            report.skipped.append((rel, "too few targeted warnings"))
            continue
        report.kept_files.append(rel)
        for finding in targeted_findings:
            report.instances.append(instance_from_finding(finding, content))
    return report


def _dedup_findings(findings: list[Finding]) -> list[Finding]:
    seen = set()
    out = []
    for finding in sorted(findings, key=lambda f: f.key):
        if finding.key not in seen:
            seen.add(finding.key)
            out.append(finding)
    return out


# ---------------------------------------------------------------------------
# teacher prompt / response

_PROMPT_TEMPLATE = """\
You are an experienced infrastructure-as-code security analyst. A rule-based
static analyzer has flagged one line of {technology} code as a potential
security smell. The rules over-approximate on purpose, so some warnings are
false alarms. Decide whether this warning is a true positive (a real
security smell) or a false positive (benign code that merely matches the
rule's pattern).

Warning type: {smell}
Rule rationale: {rationale}
The flagged line is marked with '>>>':

{window}

Answer with exactly two lines. The first line must be exactly
'DECISION: TP' or 'DECISION: FP'. The second line must start with
'REASON: ' followed by one short sentence.
"""


def build_prompt(instance: Instance) -> str:
    """Deterministic teacher prompt; equal instances give identical bytes."""
    context_lines = instance.context.split("\n")
    target_index = min(instance.line - 1, CONTEXT_RADIUS)
    marked = []
    for i, line in enumerate(context_lines):
        prefix = ">>> " if i == target_index else "    "
        marked.append(prefix + line)
    return _PROMPT_TEMPLATE.format(
        technology=instance.technology.value,
        smell=instance.smell.value,
        rationale=instance.rationale,
        window="\n".join(marked),
    )


def parse_teacher_response(text: str) -> Label:
    """Extract the first DECISION line; anything but TP/FP is unparseable."""
    for line in text.splitlines():
        head, sep, rest = line.partition(":")
        if sep and head.strip().lower() == "decision":
            verdict = rest.strip().rstrip(".").upper()
            if verdict == "TP":
                return Label.TP
            if verdict == "FP":
                return Label.FP
            raise UnparseableResponse(f"ambiguous decision: {rest.strip()!r}")
    raise UnparseableResponse("no DECISION line in response")


# ---------------------------------------------------------------------------
# deduplication

def dedup_files(paths: Sequence[str | Path], test_oracle_paths: Sequence[str | Path]) -> list[str | Path]:
    """Drop candidate files byte-identical (MD5) to any oracle file, then
    exact duplicates within the candidates themselves (first wins)."""
    oracle_digests = {_md5(p) for p in test_oracle_paths}
    survivors = []
    seen: set[str] = set()
    for path in paths:
        digest = _md5(path)
        if digest in oracle_digests or digest in seen:
            continue
        seen.add(digest)
        survivors.append(path)
    return survivors


def _md5(path: str | Path) -> str:
    return hashlib.md5(Path(path).read_bytes()).hexdigest()


def dedup_snippets(
    train: Sequence[Instance],
    val: Sequence[Instance],
    oracle: Sequence[Instance],
) -> tuple[list[Instance], list[Instance]]:
    """Snippet-level dedup on (normalized target, smell) with priority
    oracle > validation > train; within a split, the first occurrence wins."""
    oracle_keys = {inst.snippet_key for inst in oracle}
    kept_val = []
    val_keys: set[tuple[str, str]] = set()
    for inst in val:
        key = inst.snippet_key
        if key in oracle_keys or key in val_keys:
            continue
        val_keys.add(key)
        kept_val.append(inst)
    kept_train = []
    train_keys: set[tuple[str, str]] = set()
    for inst in train:
        key = inst.snippet_key
        if key in oracle_keys or key in val_keys or key in train_keys:
            continue
        train_keys.add(key)
        kept_train.append(inst)
    return kept_train, kept_val


# ---------------------------------------------------------------------------
# stratified splitting

@dataclass
class SplitSpec:
    train_ratio: int = 8
    val_ratio: int = 1
    # total target per (technology, smell); strata without a target use
    # their whole pool
    per_technology_targets: dict[tuple[Technology, SmellType], int] = field(default_factory=dict)


@dataclass
class StratumReport:
    technology: Technology
    smell: SmellType
    want_train: int
    got_train: int
    want_val: int
    got_val: int

    @property
    def shortfall(self) -> int:
        return (self.want_train - self.got_train) + (self.want_val - self.got_val)


@dataclass
class SplitResult:
    train: list[Instance]
    val: list[Instance]
    removed: list[tuple[str, str]]  # (instance id, reason)
    strata: list[StratumReport]

    @property
    def shortfalls(self) -> list[StratumReport]:
        return [s for s in self.strata if s.shortfall > 0]


def make_splits(
    instances: Sequence[Instance],
    spec: SplitSpec,
    seed: int,
    oracle: Sequence[Instance] = (),
) -> SplitResult:
    """Stratified train/validation split at ``train_ratio:val_ratio``.

    Per (technology, smell) stratum the pool is shuffled (deterministic under
    ``seed``), the validation slice is filled first, then train; candidates
    whose snippet key collides with the oracle or an earlier split are
    removed and the slice is backfilled from the remaining pool. Pool
    exhaustion is reported per stratum, never fatal.
    """
    strata: dict[tuple[Technology, SmellType], list[Instance]] = defaultdict(list)
    for inst in instances:
        strata[(inst.technology, inst.smell)].append(inst)
    rng = random.Random(seed)
    oracle_keys = {inst.snippet_key for inst in oracle}
    val_keys: set[tuple[str, str]] = set()
    train_keys: set[tuple[str, str]] = set()
    result = SplitResult(train=[], val=[], removed=[], strata=[])
    parts = spec.train_ratio + spec.val_ratio

    for (tech, smell) in sorted(strata, key=lambda k: (k[0].value, k[1].value)):
        pool = list(strata[(tech, smell)])
        rng.shuffle(pool)
        target_total = spec.per_technology_targets.get((tech, smell), len(pool))
        want_val = (target_total // parts) * spec.val_ratio
        want_train = target_total - want_val
        queue = iter(pool)

        got_val = 0
        for inst in queue:
            if got_val >= want_val:
                # not consumed: hand the instance to the train pass below
                queue = _prepend(inst, queue)
                break
            key = inst.snippet_key
            if key in oracle_keys:
                result.removed.append((inst.id, "duplicate of oracle snippet"))
            elif key in val_keys:
                result.removed.append((inst.id, "duplicate within validation"))
            else:
                val_keys.add(key)
                result.val.append(inst)
                got_val += 1

        got_train = 0
        for inst in queue:
            if got_train >= want_train:
                break
            key = inst.snippet_key
            if key in oracle_keys:
                result.removed.append((inst.id, "duplicate of oracle snippet"))
            elif key in val_keys:
                result.removed.append((inst.id, "duplicate of validation snippet"))
            elif key in train_keys:
                result.removed.append((inst.id, "duplicate within train"))
            else:
                train_keys.add(key)
                result.train.append(inst)
                got_train += 1

        result.strata.append(
            StratumReport(tech, smell, want_train, got_train, want_val, got_val)
        )
    return result


def _prepend(item, iterator):
    yield item
    yield from iterator


# ---------------------------------------------------------------------------
# oracle labeling

def label_oracle_detections(
    findings: Sequence[Finding],
    oracle: Sequence[OracleEntry],
    file_texts: dict[str, str],
) -> list[Instance]:
    """Label each detection TP/FP by exact comparison to the oracle."""
    oracle_keys = {e.key for e in oracle}
    out = []
    for finding in findings:
        label = Label.TP if finding.key in oracle_keys else Label.FP
        out.append(instance_from_finding(finding, file_texts[finding.file_path]).with_label(label))
    return out
