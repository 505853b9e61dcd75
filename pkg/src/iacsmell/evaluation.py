"""Accuracy and effort-aware metrics against a line-level oracle.

Matching is exact on (file, line, smell-type) triples. Effort metrics walk a
confidence-ranked finding list with a one-LOC-per-distinct-line cost model:
a line inspected once is never charged again, even when several smells are
flagged on it.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .ir import Technology
from .rules import Finding, SmellType


class EmptyOracleError(Exception):
    """Effort metrics are undefined for an empty oracle."""


class MissingTechnologyError(Exception):
    """Macro-F1 needs an F1 value for every technology."""


class Unreached:
    """Sentinel: the ranking ran out before hitting the recall target."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "unreached"


UNREACHED = Unreached()


@dataclass(frozen=True)
class OracleEntry:
    file_path: str
    line: int
    smell: SmellType

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.file_path, self.line, self.smell.value)


def load_oracle(path: str | Path) -> list[OracleEntry]:
    """Read a tab-separated oracle file: file_path, line, smell name."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
        entries.append(OracleEntry(parts[0], int(parts[1]), SmellType.from_name(parts[2])))
    return entries


def save_oracle(entries: Iterable[OracleEntry], path: str | Path) -> None:
    lines = [f"{e.file_path}\t{e.line}\t{e.smell.value}" for e in entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class MatchCounts:
    tp: int
    fp: int
    fn: int
    per_smell: dict[SmellType, tuple[int, int, int]] = field(default_factory=dict)


def match(predictions: Sequence[Finding], oracle: Sequence[OracleEntry]) -> MatchCounts:
    """Count TP/FP/FN by exact (file, line, smell) matching.

    Each oracle entry matches at most one prediction and vice versa;
    predictions are expected to be deduplicated already.
    """
    pred_keys = Counter(f.key for f in predictions)
    oracle_keys = Counter(e.key for e in oracle)
    per_smell: dict[SmellType, tuple[int, int, int]] = {}
    for smell in SmellType:
        pred_s = {k: c for k, c in pred_keys.items() if k[2] == smell.value}
        orac_s = {k: c for k, c in oracle_keys.items() if k[2] == smell.value}
        tp = sum(min(c, orac_s.get(k, 0)) for k, c in pred_s.items())
        fp = sum(pred_s.values()) - tp
        fn = sum(orac_s.values()) - tp
        per_smell[smell] = (tp, fp, fn)
    tp = sum(v[0] for v in per_smell.values())
    fp = sum(v[1] for v in per_smell.values())
    fn = sum(v[2] for v in per_smell.values())
    return MatchCounts(tp=tp, fp=fp, fn=fn, per_smell=per_smell)


def prf1(counts: MatchCounts) -> tuple[float, float, float]:
    """Precision, recall, F1 with the all-zero conventions."""
    return _prf1(counts.tp, counts.fp, counts.fn)


def _prf1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def macro_f1(f1s: Mapping[Technology, float]) -> float:
    """Unweighted mean of the per-technology F1 scores."""
    missing = [t.value for t in Technology if t not in f1s]
    if missing:
        raise MissingTechnologyError(f"missing F1 for: {', '.join(missing)}")
    return sum(f1s[t] for t in Technology) / len(Technology)


@dataclass(frozen=True)
class EffortPoint:
    loc_inspected: int
    cumulative_recall: float
    cumulative_precision: float


def effort_curve(ranking: Sequence[Finding], oracle: Sequence[OracleEntry]) -> list[EffortPoint]:
    """Inspection curve: one point after each ranked finding."""
    if not oracle:
        raise EmptyOracleError("effort curve needs a non-empty oracle")
    unmatched = Counter(e.key for e in oracle)
    visited: set[tuple[str, int]] = set()
    points = []
    matched = 0
    seen = 0
    for finding in ranking:
        seen += 1
        visited.add((finding.file_path, finding.line))
        if unmatched[finding.key] > 0:
            unmatched[finding.key] -= 1
            matched += 1
        points.append(
            EffortPoint(
                loc_inspected=len(visited),
                cumulative_recall=matched / len(oracle),
                cumulative_precision=matched / seen,
            )
        )
    return points


def effort_at_recall(
    ranking: Sequence[Finding],
    oracle: Sequence[OracleEntry],
    target_recall: float = 0.60,
    total_loc: int = 0,
) -> float | Unreached:
    """Percentage of total LOC inspected (walking the ranking) to reach the
    recall target, or UNREACHED when the ranking is exhausted first.

    The target is ceil(target_recall * |oracle|) matched entries, so the
    stated recall is attainable for any oracle size.
    """
    if not oracle:
        raise EmptyOracleError("Effort@Recall needs a non-empty oracle")
    if total_loc <= 0:
        raise ValueError("total_loc must be positive")
    needed = math.ceil(target_recall * len(oracle))
    unmatched = Counter(e.key for e in oracle)
    visited: set[tuple[str, int]] = set()
    matched = 0
    for finding in ranking:
        visited.add((finding.file_path, finding.line))
        if unmatched[finding.key] > 0:
            unmatched[finding.key] -= 1
            matched += 1
            if matched >= needed:
                return 100.0 * len(visited) / total_loc
    return UNREACHED


def f1_at_loc(
    ranking: Sequence[Finding],
    oracle: Sequence[OracleEntry],
    budget_fraction: float = 0.01,
    total_loc: int = 0,
) -> float:
    """F1 over the findings within a distinct-line inspection budget of
    floor(budget_fraction * total_loc) lines (at least one)."""
    if not oracle:
        raise EmptyOracleError("F1@LOC needs a non-empty oracle")
    if total_loc <= 0:
        raise ValueError("total_loc must be positive")
    budget = max(1, math.floor(budget_fraction * total_loc))
    unmatched = Counter(e.key for e in oracle)
    visited: set[tuple[str, int]] = set()
    included = 0
    tp = 0
    for finding in ranking:
        line_key = (finding.file_path, finding.line)
        if line_key not in visited:
            if len(visited) >= budget:
                break
            visited.add(line_key)
        included += 1
        if unmatched[finding.key] > 0:
            unmatched[finding.key] -= 1
            tp += 1
    precision = tp / included if included > 0 else 0.0
    recall = tp / len(oracle)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class PerSmellReport:
    """Per-smell precision/recall/F1 plus the no-smell (clean file) row."""

    rows: dict[SmellType, tuple[int, int, int, float, float, float]]
    no_smell: tuple[int, int, int, float, float, float]

    def render(self) -> str:
        out = ["smell\ttp\tfp\tfn\tprecision\trecall\tf1"]
        for smell in SmellType:
            tp, fp, fn, p, r, f1 = self.rows[smell]
            out.append(f"{smell.value}\t{tp}\t{fp}\t{fn}\t{p:.4f}\t{r:.4f}\t{f1:.4f}")
        tp, fp, fn, p, r, f1 = self.no_smell
        out.append(f"NoSmell\t{tp}\t{fp}\t{fn}\t{p:.4f}\t{r:.4f}\t{f1:.4f}")
        return "\n".join(out) + "\n"


def per_smell_report(
    counts: MatchCounts,
    clean_files: Sequence[str],
    predictions: Sequence[Finding],
    oracle: Sequence[OracleEntry],
) -> PerSmellReport:
    """Expand MatchCounts into the per-smell table.

    The no-smell row treats whole files as the unit: a clean file is a TP
    when nothing was predicted in it, an FP when it drew predictions anyway,
    and an oracle-smelly file that drew no predictions at all is an FN.
    """
    rows = {}
    for smell in SmellType:
        tp, fp, fn = counts.per_smell.get(smell, (0, 0, 0))
        p, r, f1 = _prf1(tp, fp, fn)
        rows[smell] = (tp, fp, fn, p, r, f1)
    predicted_files = {f.file_path for f in predictions}
    smelly_files = {e.file_path for e in oracle}
    tp = sum(1 for f in clean_files if f not in predicted_files)
    fp = sum(1 for f in clean_files if f in predicted_files)
    fn = sum(1 for f in smelly_files if f not in predicted_files)
    p, r, f1 = _prf1(tp, fp, fn)
    return PerSmellReport(rows=rows, no_smell=(tp, fp, fn, p, r, f1))
