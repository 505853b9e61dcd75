from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

from iacsmell_distill.instances import Instance
from iacsmell_distill.student import StudentConfig, train_student

REPO = Path(__file__).resolve().parent.parent.parent  # analyzer repo root
GOLDEN_PROMPT = REPO / "fixtures" / "golden" / "fig1_prompt.txt"
ANALYZER_CORPUS = REPO / "fixtures" / "corpus"

# desk-scale training configuration: the paper-faithful defaults (lr 4e-5,
# 500 warmup steps) assume a pretrained encoder and thousands of steps; a
# 40-instance, 5-epoch run needs a working learning rate
DESK_CONFIG = StudentConfig(
    learning_rate=1e-2,
    warmup_steps=4,
    epochs=5,
    batch_size=4,
    seed=0,
    dropout=0.0,
)


def separable_instances(
    n_train: int = 40, n_val: int = 10, seed: int = 13
) -> tuple[list[Instance], list[Instance]]:
    """FP iff the flagged URL points at example.com; linearly separable."""
    rng = random.Random(seed)
    fp_hosts = ["example.com", "www.example.com", "cdn.example.com"]
    tp_hosts = ["internal.lan", "files.corp", "mirror.net", "dl.vendor.io"]
    pool = []
    for i in range(n_train + n_val):
        fp = i % 2 == 0
        host = rng.choice(fp_hosts if fp else tp_hosts)
        target = f"url: http://{host}/pkg{i}.tar.gz"
        context = f"# filler {i}\n- name: fetch {i}\n{target}\n  dest: /tmp/{i}\n# end"
        pool.append(
            Instance(
                id=f"i{i}",
                technology="Ansible",
                file_path=f"synthetic/{i}.yml",
                line=3,
                smell="HttpWithoutTls",
                target=target,
                context=context,
                rationale="transfers over 'http://' without TLS",
                label="FP" if fp else "TP",
            )
        )
    rng.shuffle(pool)
    return pool[:n_train], pool[n_train:]


@pytest.fixture(scope="session")
def trained_checkpoint(tmp_path_factory) -> Path:
    train, val = separable_instances()
    path = tmp_path_factory.mktemp("ckpt") / "student.pt"
    result = train_student(train, val, DESK_CONFIG, path)
    assert result.best_val_f1 >= 0.95
    return path


def serve_command(checkpoint: Path) -> list[str]:
    return [sys.executable, "-m", "iacsmell_distill.cli", "serve", "--checkpoint", str(checkpoint)]
