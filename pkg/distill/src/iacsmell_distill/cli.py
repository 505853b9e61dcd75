"""CLI for the distillation pipeline: label, train, serve."""

from __future__ import annotations

import argparse
import sys

from .instances import read_instances
from .student import DegenerateDataError, StudentConfig, train_student
from .teacher import TeacherAuthError, TeacherConfig, TeacherConfigError, label_instances


def cmd_label(args: argparse.Namespace) -> int:
    config = TeacherConfig(
        model=args.model,
        max_retries=args.max_retries,
        request_timeout=args.timeout,
        min_request_interval=args.min_interval,
    )
    try:
        report = label_instances(args.instances, args.out, config)
    except (TeacherAuthError, TeacherConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"labeled {report.labeled}, unlabeled {report.unlabeled} "
        f"(resumed from {report.resumed_from}, {report.retries} retries)"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = StudentConfig(
        base_model=args.base_model,
        max_seq_len=args.max_seq_len,
        learning_rate=args.learning_rate,
        warmup_steps=args.warmup_steps,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    try:
        train = [i for i in read_instances(args.train) if i.label is not None]
        val = [i for i in read_instances(args.val) if i.label is not None]
        result = train_student(train, val, config, args.out)
    except (DegenerateDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for entry in result.log:
        print(f"epoch {entry.epoch}: loss {entry.train_loss:.4f}, val F1 {entry.val_f1:.4f}")
    print(f"best val F1 {result.best_val_f1:.4f} at epoch {result.best_epoch} -> {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve_checkpoint

    try:
        return serve_checkpoint(args.checkpoint)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iacsmell-distill", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="pseudo-label an instance file with the teacher")
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="claude-sonnet-4-0")
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--min-interval", type=float, default=0.0)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train the student classifier")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--base-model", default="compact-encoder-2l64d")
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--learning-rate", type=float, default=4e-5)
    p.add_argument("--warmup-steps", type=int, default=500)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve a checkpoint over the scorer protocol")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
