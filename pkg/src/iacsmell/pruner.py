"""False-positive pruning: score targeted findings, drop likely noise.

Four smell types (see rules.LOW_PRECISION_SMELLS) go through a scorer that
estimates the probability a finding is a false positive; the other five are
reported as-is. Three scorers are supported: a passthrough (keep all), a
built-in logistic model over lexical features of the flagged line plus its
5-line window, and an external process speaking a newline-delimited JSON
protocol on stdin/stdout.

External scorer protocol
    startup handshake (scorer -> client):
        {"ready": true, "scorer_id": "<name>"}
    request (client -> scorer), one JSON object per line:
        {"id": n, "target": str, "context": str, "smell": str, "technology": str}
    response (scorer -> client), any order, correlated by id:
        {"id": n, "fp_probability": p}   or   {"id": n, "error": "<message>"}
"""

from __future__ import annotations

import json
import os
import re
import select
import shlex
import subprocess
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .dataset import Instance, Label, instance_from_finding
from .ir import LocationError
from .rules import Finding, LOW_PRECISION_SMELLS, SmellType


class PrunerError(Exception):
    """Scoring failed; no partial results are returned."""


class DegenerateDataError(Exception):
    """Training data contains only one class."""


DEFAULT_TARGETED: frozenset[SmellType] = LOW_PRECISION_SMELLS


@dataclass(frozen=True)
class ScoredFinding:
    finding: Finding
    fp_probability: float
    smell_confidence: float
    scorer_id: str


def make_instance(finding: Finding, file_text: str) -> Instance:
    """Build the scoring instance (flagged line + 5-line window) for a
    finding. Raises LocationError when the line is out of range."""
    return instance_from_finding(finding, file_text)


# ---------------------------------------------------------------------------
# features

_WORD_RE = re.compile(r"[a-z0-9_]+")


def extract_features(instance: Instance) -> dict[str, float]:
    """Bag of lowercased word tokens and per-token character trigrams from
    target + context, plus the smell-type one-hot."""
    text = (instance.target + "\n" + instance.context).lower()
    feats: Counter[str] = Counter()
    for token in _WORD_RE.findall(text):
        feats["w:" + token] += 1
        for i in range(len(token) - 2):
            feats["t:" + token[i : i + 3]] += 1
    features = dict(feats)
    features["s:" + instance.smell.value] = 1.0
    return features


def build_vocabulary(instances: Sequence[Instance]) -> tuple[dict[str, int], dict[str, int]]:
    """Lexical vocabulary from the instances plus the fixed smell block."""
    lexical = sorted(
        {name for inst in instances for name in extract_features(inst) if not name.startswith("s:")}
    )
    vocabulary = {name: i for i, name in enumerate(lexical)}
    smell_offsets = {smell.value: len(vocabulary) + j for j, smell in enumerate(SmellType)}
    return vocabulary, smell_offsets


def vectorize(
    instances: Sequence[Instance],
    vocabulary: dict[str, int],
    smell_offsets: dict[str, int],
) -> np.ndarray:
    """Dense feature matrix; out-of-vocabulary tokens are ignored."""
    dim = len(vocabulary) + len(smell_offsets)
    matrix = np.zeros((len(instances), dim), dtype=np.float64)
    for row, inst in enumerate(instances):
        for name, value in extract_features(inst).items():
            if name.startswith("s:"):
                matrix[row, smell_offsets[name[2:]]] = value
            elif name in vocabulary:
                matrix[row, vocabulary[name]] = value
    return matrix


# ---------------------------------------------------------------------------
# built-in logistic model

@dataclass
class BuiltinModel:
    vocabulary: dict[str, int]
    smell_offsets: dict[str, int]
    weights: np.ndarray  # len(vocabulary) + len(smell_offsets)
    bias: float
    version: str = "1"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def ce_loss_and_grad(
    weights: np.ndarray,
    bias: float,
    features: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, np.ndarray, float]:
    """Mean binary cross-entropy (label 1 = false positive) and its analytic
    gradient. Stable for large |logits|."""
    z = features @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - labels * z))
    p = _sigmoid(z)
    grad_w = features.T @ (p - labels) / len(labels)
    grad_b = float(np.mean(p - labels))
    return loss, grad_w, grad_b


def fp_class_f1(probabilities: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    """F1 of the FP (positive) class at the given decision threshold."""
    predicted = probabilities >= threshold
    actual = labels >= 0.5
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _label_array(instances: Sequence[Instance], who: str) -> np.ndarray:
    labels = []
    for inst in instances:
        if inst.label is None:
            raise ValueError(f"{who} instance {inst.id} has no label")
        labels.append(1.0 if inst.label is Label.FP else 0.0)
    return np.asarray(labels, dtype=np.float64)


@dataclass
class TrainResult:
    model: BuiltinModel
    best_epoch: int
    best_val_f1: float
    history: list[tuple[int, float, float]]  # (epoch, train loss, val F1)


def train_builtin(
    train: Sequence[Instance],
    val: Sequence[Instance],
    epochs: int = 50,
    learning_rate: float = 1.0,
    seed: int = 0,
) -> TrainResult:
    """Full-batch gradient descent on the cross-entropy objective.

    Labels follow the FP=1 / TP=0 convention. The returned model is the
    epoch snapshot with the best validation F1 over the FP class (earliest
    epoch on ties). Deterministic for a given seed.
    """
    if not train:
        raise ValueError("empty training set")
    y_train = _label_array(train, "train")
    y_val = _label_array(val, "validation")
    if len(set(y_train.tolist())) < 2:
        raise DegenerateDataError("training set contains a single class")

    vocabulary, smell_offsets = build_vocabulary(train)
    x_train = vectorize(train, vocabulary, smell_offsets)
    x_val = vectorize(val, vocabulary, smell_offsets)

    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, 0.01, x_train.shape[1])
    bias = 0.0

    best = (-1.0, 0, weights.copy(), bias)  # (f1, epoch, weights, bias)
    history = []
    for epoch in range(1, epochs + 1):
        loss, grad_w, grad_b = ce_loss_and_grad(weights, bias, x_train, y_train)
        weights = weights - learning_rate * grad_w
        bias = bias - learning_rate * grad_b
        val_probs = _sigmoid(x_val @ weights + bias)
        val_f1 = fp_class_f1(val_probs, y_val)
        history.append((epoch, loss, val_f1))
        if val_f1 > best[0]:
            best = (val_f1, epoch, weights.copy(), bias)

    best_f1, best_epoch, best_weights, best_bias = best
    model = BuiltinModel(
        vocabulary=vocabulary,
        smell_offsets=smell_offsets,
        weights=best_weights,
        bias=best_bias,
    )
    return TrainResult(model=model, best_epoch=best_epoch, best_val_f1=best_f1, history=history)


def score_builtin(model: BuiltinModel, instance: Instance) -> float:
    """sigmoid(w.x + b): probability the finding is a false positive."""
    x = vectorize([instance], model.vocabulary, model.smell_offsets)[0]
    z = float(x @ model.weights + model.bias)
    return float(_sigmoid(np.asarray([z]))[0])


_MODEL_MAGIC = "iacsmell-builtin"


def save_model(model: BuiltinModel, path: str | Path) -> None:
    """Versioned flat text format; reload is bit-exact (repr round-trip)."""
    lines = [
        f"{_MODEL_MAGIC} v{model.version} "
        f"features={len(model.vocabulary)} smells={len(model.smell_offsets)}"
    ]
    for name, index in sorted(model.vocabulary.items(), key=lambda kv: kv[1]):
        lines.append(f"{name}\t{index}")
    for name, index in sorted(model.smell_offsets.items(), key=lambda kv: kv[1]):
        lines.append(f"smell:{name}\t{index}")
    for w in model.weights:
        lines.append(repr(float(w)))
    lines.append(f"bias\t{float(model.bias)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> BuiltinModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split()
    if len(header) != 4 or header[0] != _MODEL_MAGIC:
        raise PrunerError(f"not a builtin model file: {path}")
    version = header[1].lstrip("v")
    n_features = int(header[2].split("=")[1])
    n_smells = int(header[3].split("=")[1])
    pos = 1
    vocabulary = {}
    for _ in range(n_features):
        name, index = lines[pos].split("\t")
        vocabulary[name] = int(index)
        pos += 1
    smell_offsets = {}
    for _ in range(n_smells):
        name, index = lines[pos].split("\t")
        smell_offsets[name.removeprefix("smell:")] = int(index)
        pos += 1
    weights = np.asarray([float(lines[pos + i]) for i in range(n_features + n_smells)])
    pos += n_features + n_smells
    bias = float(lines[pos].split("\t")[1])
    return BuiltinModel(
        vocabulary=vocabulary,
        smell_offsets=smell_offsets,
        weights=weights,
        bias=bias,
        version=version,
    )


# ---------------------------------------------------------------------------
# scorers

class PassthroughScorer:
    """Keeps everything: fp probability 0 for every instance."""

    scorer_id = "passthrough"

    def score_batch(self, instances: Sequence[Instance]) -> list[float]:
        return [0.0] * len(instances)


class BuiltinScorer:
    def __init__(self, model: BuiltinModel):
        self.model = model
        self.scorer_id = f"builtin-v{model.version}"

    def score_batch(self, instances: Sequence[Instance]) -> list[float]:
        return [score_builtin(self.model, inst) for inst in instances]


class ExternalScorer:
    """Client side of the external scorer protocol over a child process."""

    def __init__(self, command: str | Sequence[str], timeout: float = 30.0):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._next_id = 1
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
            )
        except OSError as exc:
            raise PrunerError(f"cannot start scorer {argv!r}: {exc}") from exc
        self._buffer = b""
        handshake = self._read_record()
        if handshake.get("ready") is not True:
            self.close()
            raise PrunerError(f"scorer did not declare readiness: {handshake!r}")
        self.scorer_id = str(handshake.get("scorer_id", "external"))

    def _read_record(self) -> dict:
        line = self._read_line()
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PrunerError(f"malformed scorer response: {line!r}") from exc
        if not isinstance(record, dict):
            raise PrunerError(f"malformed scorer response: {line!r}")
        return record

    def _read_line(self) -> str:
        deadline = time.monotonic() + self.timeout
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise PrunerError(f"scorer timed out after {self.timeout}s")
            readable, _, _ = select.select([fd], [], [], remaining)
            if not readable:
                continue
            chunk = os.read(fd, 65536)
            if chunk == b"":
                raise PrunerError("scorer process closed its output")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def score_batch(self, instances: Sequence[Instance]) -> list[float]:
        ids = list(range(self._next_id, self._next_id + len(instances)))
        self._next_id += len(instances)
        try:
            for rid, inst in zip(ids, instances):
                request = {
                    "id": rid,
                    "target": inst.target,
                    "context": inst.context,
                    "smell": inst.smell.value,
                    "technology": inst.technology.value,
                }
                self._proc.stdin.write((json.dumps(request) + "\n").encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise PrunerError(f"scorer process went away: {exc}") from exc
        expected = set(ids)
        responses: dict[int, float] = {}
        while len(responses) < len(ids):
            record = self._read_record()
            rid = record.get("id")
            if rid not in expected:
                raise PrunerError(f"response for unknown request id {rid!r}")
            if "error" in record:
                raise PrunerError(f"scorer error for request {rid}: {record['error']}")
            if "fp_probability" not in record:
                raise PrunerError(f"response {rid} lacks fp_probability")
            responses[rid] = float(record["fp_probability"])
        return [responses[rid] for rid in ids]

    def close(self) -> None:
        if self._proc.stdin and not self._proc.stdin.closed:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def score_external(endpoint: ExternalScorer, batch: Sequence[Instance]) -> list[float]:
    """One probability per instance, order-preserving."""
    return endpoint.score_batch(batch)


# ---------------------------------------------------------------------------
# pruning and ranking

def prune(
    findings: Sequence[Finding],
    scorer,
    targeted: frozenset[SmellType] = DEFAULT_TARGETED,
    threshold: float = 0.5,
    file_texts: Mapping[str, str] | Callable[[str], str] | None = None,
    batch_size: int = 32,
) -> tuple[list[ScoredFinding], list[ScoredFinding]]:
    """Partition findings into (kept, dropped).

    Non-targeted findings always pass through unchanged with probability 0
    and scorer_id "rule-only". Targeted findings are scored in batches and
    kept iff fp_probability < threshold. Input order is preserved within
    each output list; any scorer failure raises PrunerError with nothing
    partially returned.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    get_text = file_texts if callable(file_texts) else (file_texts or {}).__getitem__

    targeted_indices = [i for i, f in enumerate(findings) if f.smell in targeted]
    instances = []
    for i in targeted_indices:
        finding = findings[i]
        try:
            instances.append(make_instance(finding, get_text(finding.file_path)))
        except (KeyError, LocationError) as exc:
            raise PrunerError(
                f"cannot build instance for {finding.file_path}:{finding.line} "
                f"{finding.smell.value}: {exc}"
            ) from exc
    probabilities: list[float] = []
    for start in range(0, len(instances), batch_size):
        probabilities.extend(scorer.score_batch(instances[start : start + batch_size]))
    for i, p in zip(targeted_indices, probabilities):
        if not 0.0 <= p <= 1.0:
            raise PrunerError(
                f"scorer returned probability {p!r} for "
                f"{findings[i].file_path}:{findings[i].line}"
            )

    scored_by_index = dict(zip(targeted_indices, probabilities))
    kept: list[ScoredFinding] = []
    dropped: list[ScoredFinding] = []
    for i, finding in enumerate(findings):
        if i not in scored_by_index:
            kept.append(ScoredFinding(finding, 0.0, 1.0, "rule-only"))
            continue
        p = scored_by_index[i]
        scored = ScoredFinding(finding, p, 1.0 - p, scorer.scorer_id)
        (kept if p < threshold else dropped).append(scored)
    return kept, dropped


def rank_findings(scored: Sequence[ScoredFinding]) -> list[ScoredFinding]:
    """Descending smell confidence; ties broken by (file, line, smell)."""
    return sorted(
        scored,
        key=lambda s: (
            -s.smell_confidence,
            s.finding.file_path,
            s.finding.line,
            s.finding.smell.value,
        ),
    )
