"""Compact transformer student for TP/FP classification.

The classifier input is the smell name, a separator, and the 5-line code
window; the positive class (index 1) is FP, matching the pseudo-label
convention end to end. No pretrained weights are assumed: the encoder is a
small randomly-initialized transformer whose tokenizer is built from the
training data, which is enough at the corpus sizes this pipeline targets
and keeps the whole stage offline.

Training follows the usual fine-tuning recipe: AdamW with decoupled weight
decay, linear warmup into cosine decay, cross-entropy loss, and checkpoint
selection by the best validation F1 of the FP class.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .instances import Instance


class DegenerateDataError(Exception):
    """Training or validation data cannot support 2-class training."""


@dataclass(frozen=True)
class StudentConfig:
    base_model: str = "compact-encoder-2l64d"
    max_seq_len: int = 512
    learning_rate: float = 4e-5
    warmup_steps: int = 500
    weight_decay: float = 0.01
    epochs: int = 3
    batch_size: int = 8
    seed: int = 0
    # encoder shape (ignored when base_model names an external checkpoint)
    embed_dim: int = 64
    num_layers: int = 2
    num_heads: int = 4
    ff_dim: int = 128
    dropout: float = 0.1


_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]")

PAD, UNK, SEP = 0, 1, 2
_SPECIALS = ["<pad>", "<unk>", "<sep>"]


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def build_vocab(instances: Sequence[Instance]) -> dict[str, int]:
    tokens = sorted({t for inst in instances for t in tokenize(classifier_text(inst))})
    vocab = {special: i for i, special in enumerate(_SPECIALS)}
    for token in tokens:
        vocab[token] = len(vocab)
    return vocab


def classifier_text(instance: Instance) -> str:
    return f"{instance.smell}\n{instance.context}"


def encode(instance: Instance, vocab: dict[str, int], max_seq_len: int) -> list[int]:
    smell_ids = [vocab.get(t, UNK) for t in tokenize(instance.smell)]
    window_ids = [vocab.get(t, UNK) for t in tokenize(instance.context)]
    ids = smell_ids + [SEP] + window_ids
    return ids[:max_seq_len]


class StudentModel(nn.Module):
    def __init__(self, vocab_size: int, config: StudentConfig):
        super().__init__()
        self.config = config
        self.embedding = nn.Embedding(vocab_size, config.embed_dim, padding_idx=PAD)
        self.positions = nn.Embedding(config.max_seq_len, config.embed_dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.embed_dim,
            nhead=config.num_heads,
            dim_feedforward=config.ff_dim,
            batch_first=True,
            dropout=config.dropout,
        )
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=config.num_layers, enable_nested_tensor=False
        )
        self.head = nn.Linear(config.embed_dim, 2)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        mask = ids.eq(PAD)
        positions = torch.arange(ids.size(1), device=ids.device).unsqueeze(0)
        hidden = self.embedding(ids) + self.positions(positions)
        hidden = self.encoder(hidden, src_key_padding_mask=mask)
        keep = (~mask).unsqueeze(-1).float()
        pooled = (hidden * keep).sum(dim=1) / keep.sum(dim=1).clamp(min=1.0)
        return self.head(pooled)


def _batch(ids_list: list[list[int]]) -> torch.Tensor:
    width = max(len(ids) for ids in ids_list)
    return torch.tensor(
        [ids + [PAD] * (width - len(ids)) for ids in ids_list], dtype=torch.long
    )


def _labels_of(instances: Sequence[Instance], who: str) -> list[int]:
    labels = []
    for inst in instances:
        if inst.label not in ("TP", "FP"):
            raise DegenerateDataError(f"{who} instance {inst.id} has no TP/FP label")
        labels.append(1 if inst.label == "FP" else 0)
    return labels


def fp_class_f1(predicted_fp: Sequence[bool], actual_fp: Sequence[bool]) -> float:
    tp = sum(1 for p, a in zip(predicted_fp, actual_fp) if p and a)
    fp = sum(1 for p, a in zip(predicted_fp, actual_fp) if p and not a)
    fn = sum(1 for p, a in zip(predicted_fp, actual_fp) if not p and a)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


@dataclass
class TrainLogEntry:
    epoch: int
    train_loss: float
    val_f1: float


@dataclass
class TrainResult:
    checkpoint_path: Path
    best_epoch: int
    best_val_f1: float
    log: list[TrainLogEntry] = field(default_factory=list)


def _data_hash(instances: Sequence[Instance]) -> str:
    digest = hashlib.sha256()
    for inst in instances:
        digest.update(inst.id.encode())
        digest.update((inst.label or "").encode())
    return digest.hexdigest()[:12]


def _lr_factor(step: int, warmup: int, total: int) -> float:
    if step < warmup:
        return (step + 1) / max(1, warmup)
    remaining = max(1, total - warmup)
    progress = (step - warmup) / remaining
    return 0.5 * (1.0 + math.cos(math.pi * min(progress, 1.0)))


def train_student(
    train: Sequence[Instance],
    val: Sequence[Instance],
    config: StudentConfig,
    checkpoint_path: str | Path,
) -> TrainResult:
    """Train on the labeled instances and save the best-F1 checkpoint.

    Deterministic for a given config (seeded torch RNG, fixed batch order
    from a seeded shuffle per epoch, CPU execution).
    """
    if not train:
        raise DegenerateDataError("empty training set")
    if not val:
        raise DegenerateDataError("empty validation set")
    y_train = _labels_of(train, "train")
    y_val = _labels_of(val, "validation")
    if len(set(y_train)) < 2:
        raise DegenerateDataError("training set contains a single class")

    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)

    vocab = build_vocab(train)
    model = StudentModel(len(vocab), config)
    encoded_train = [encode(inst, vocab, config.max_seq_len) for inst in train]
    encoded_val = [encode(inst, vocab, config.max_seq_len) for inst in val]

    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )
    steps_per_epoch = math.ceil(len(train) / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: _lr_factor(step, config.warmup_steps, total_steps)
    )
    loss_fn = nn.CrossEntropyLoss()

    best_f1 = -1.0
    best_epoch = 0
    best_state: dict | None = None
    log: list[TrainLogEntry] = []
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(len(train), generator=generator).tolist()
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            ids = _batch([encoded_train[i] for i in batch_idx])
            labels = torch.tensor([y_train[i] for i in batch_idx], dtype=torch.long)
            optimizer.zero_grad()
            logits = model(ids)
            loss = loss_fn(logits, labels)
            loss.backward()
            optimizer.step()
            scheduler.step()
            epoch_loss += loss.detach().item() * len(batch_idx)
        val_f1 = _evaluate(model, encoded_val, y_val, config.batch_size)
        log.append(TrainLogEntry(epoch, epoch_loss / len(train), val_f1))
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}

    assert best_state is not None
    model.load_state_dict(best_state)
    path = Path(checkpoint_path)
    manifest = {
        "base_model": config.base_model,
        "seed": config.seed,
        "best_epoch": best_epoch,
        "best_val_f1": best_f1,
        "train_hash": _data_hash(train),
        "val_hash": _data_hash(val),
        "log": [asdict(entry) for entry in log],
    }
    torch.save(
        {
            "config": asdict(config),
            "vocab": vocab,
            "state_dict": model.state_dict(),
            "manifest": manifest,
        },
        path,
    )
    return TrainResult(checkpoint_path=path, best_epoch=best_epoch, best_val_f1=best_f1, log=log)


def _evaluate(model: StudentModel, encoded, labels, batch_size: int) -> float:
    model.eval()
    predicted: list[bool] = []
    with torch.no_grad():
        for start in range(0, len(encoded), batch_size):
            ids = _batch(encoded[start : start + batch_size])
            probs = torch.softmax(model(ids), dim=-1)
            predicted.extend((probs[:, 1] >= 0.5).tolist())
    return fp_class_f1(predicted, [bool(y) for y in labels])


@dataclass
class LoadedStudent:
    model: StudentModel
    vocab: dict[str, int]
    config: StudentConfig
    manifest: dict

    @property
    def scorer_id(self) -> str:
        return (
            f"student:{self.manifest['base_model']}:seed{self.manifest['seed']}"
            f":epoch{self.manifest['best_epoch']}"
        )

    def fp_probability(self, instance: Instance) -> float:
        ids = _batch([encode(instance, self.vocab, self.config.max_seq_len)])
        with torch.no_grad():
            probs = torch.softmax(self.model(ids), dim=-1)
        return float(probs[0, 1])

    def fp_probabilities(self, instances: Sequence[Instance]) -> list[float]:
        return [self.fp_probability(inst) for inst in instances]


def load_student(checkpoint_path: str | Path) -> LoadedStudent:
    payload = torch.load(checkpoint_path, map_location="cpu", weights_only=False)
    config = StudentConfig(**payload["config"])
    model = StudentModel(len(payload["vocab"]), config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return LoadedStudent(
        model=model,
        vocab=payload["vocab"],
        config=config,
        manifest=payload["manifest"],
    )
