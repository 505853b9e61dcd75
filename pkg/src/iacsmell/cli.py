"""Command-line surface.

Subcommands:
    analyze        parse a tree, detect smells, prune, rank, emit findings
    eval           score a predictions file against a line-level oracle
    dataset mine   collect unlabeled pruner instances from a corpus
    dataset dedup  drop candidate files byte-identical to oracle files
    dataset split  stratified train/validation split of labeled instances
    train-builtin  fit the built-in logistic pruner on labeled instances

Exit codes: analyze returns 0 (no findings kept), 1 (findings kept), or
2 (operational error); every other subcommand returns 0 or 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dataset as ds
from . import evaluation as ev
from .ir import Technology
from .parsers import ParseError, UnknownTechnology, iter_source_files, load_project
from .pruner import (
    BuiltinScorer,
    DEFAULT_TARGETED,
    DegenerateDataError,
    ExternalScorer,
    PassthroughScorer,
    PrunerError,
    ScoredFinding,
    load_model,
    prune,
    rank_findings,
    save_model,
    train_builtin,
)
from .rules import ConfigError, Finding, RuleConfig, SmellType

CONFIG_ENV_VAR = "IACSMELL_CONFIG"


# ---------------------------------------------------------------------------
# findings record format (newline-delimited JSON, one finding per line)

def scored_to_record(scored: ScoredFinding, status: str) -> dict:
    f = scored.finding
    return {
        "file": f.file_path,
        "line": f.line,
        "smell": f.smell.value,
        "technology": f.technology.value,
        "confidence": scored.smell_confidence,
        "fp_probability": scored.fp_probability,
        "rationale": f.rationale,
        "scorer": scored.scorer_id,
        "status": status,
    }


def record_to_scored(record: dict) -> tuple[ScoredFinding, str]:
    finding = Finding(
        file_path=record["file"],
        line=record["line"],
        smell=SmellType.from_name(record["smell"]),
        rationale=record.get("rationale", ""),
        technology=Technology.from_name(record["technology"]),
        confidence=1.0,
    )
    scored = ScoredFinding(
        finding=finding,
        fp_probability=record.get("fp_probability", 0.0),
        smell_confidence=record.get("confidence", 1.0),
        scorer_id=record.get("scorer", "unknown"),
    )
    return scored, record.get("status", "kept")


def read_records(path: str | Path) -> list[tuple[ScoredFinding, str]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            out.append(record_to_scored(json.loads(line)))
    return out


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# analyze

def _load_rule_config(path_arg: str | None) -> RuleConfig:
    path = path_arg or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return RuleConfig.from_file(path)
    return RuleConfig.default()


def _make_scorer(spec: str):
    if spec == "passthrough":
        return PassthroughScorer()
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ValueError(f"bad scorer spec {spec!r}; use passthrough, builtin:<model>, or external:<command>")
    if kind == "builtin":
        return BuiltinScorer(load_model(arg))
    if kind == "external":
        return ExternalScorer(arg)
    raise ValueError(f"unknown scorer kind {kind!r}")


def _render_table(kept: list[ScoredFinding], dropped: list[ScoredFinding], show_dropped: bool) -> str:
    lines = [f"{'rank':>4}  {'conf':>6}  {'file:line':<40} {'smell':<20} rationale"]
    for rank, s in enumerate(kept, start=1):
        f = s.finding
        lines.append(
            f"{rank:>4}  {s.smell_confidence:>6.3f}  "
            f"{f.file_path + ':' + str(f.line):<40} {f.smell.value:<20} {f.rationale}"
        )
    if not kept:
        lines.append("(no findings kept)")
    if show_dropped:
        lines.append("")
        lines.append(f"dropped as likely false positives ({len(dropped)}):")
        for s in dropped:
            f = s.finding
            lines.append(
                f"      {s.smell_confidence:>6.3f}  "
                f"{f.file_path + ':' + str(f.line):<40} {f.smell.value:<20} {f.rationale}"
            )
    return "\n".join(lines) + "\n"


def cmd_analyze(args: argparse.Namespace) -> int:
    from .rules import detect

    try:
        technology = Technology.from_name(args.tech) if args.tech else None
        result = load_project(args.root, technology)
        config = _load_rule_config(args.config)
        findings = detect(result.project, config)
        targeted = DEFAULT_TARGETED
        if args.targeted:
            targeted = frozenset(SmellType.from_name(n) for n in args.targeted.split(","))
        scorer = _make_scorer(args.scorer)
        try:
            kept, dropped = prune(
                findings,
                scorer,
                targeted=targeted,
                threshold=args.fp_threshold,
                file_texts=result.file_texts,
            )
        finally:
            if isinstance(scorer, ExternalScorer):
                scorer.close()
    except (FileNotFoundError, ParseError, UnknownTechnology, ConfigError, PrunerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    ranked_kept = rank_findings(kept)
    ranked_dropped = rank_findings(dropped)
    if args.format == "records":
        lines = [json.dumps(scored_to_record(s, "kept"), ensure_ascii=False) for s in ranked_kept]
        lines += [json.dumps(scored_to_record(s, "dropped"), ensure_ascii=False) for s in ranked_dropped]
        _emit("".join(line + "\n" for line in lines), args.out)
    else:
        _emit(_render_table(ranked_kept, ranked_dropped, args.show_dropped), args.out)
    return 1 if kept else 0


# ---------------------------------------------------------------------------
# eval

def _technology_of_path(path: str) -> Technology | None:
    try:
        from .parsers import detect_technology

        return detect_technology(path, "")
    except UnknownTechnology:
        return None


def _count_loc(corpus: Path) -> tuple[int, dict[Technology, int]]:
    total = 0
    per_tech: dict[Technology, int] = {t: 0 for t in Technology}
    for file_path in iter_source_files(corpus):
        try:
            n = len(file_path.read_text(encoding="utf-8").splitlines())
        except (OSError, UnicodeDecodeError):
            continue
        total += n
        tech = _technology_of_path(file_path.name)
        if tech:
            per_tech[tech] += n
    return total, per_tech


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        oracle = ev.load_oracle(args.oracle)
        records = read_records(args.predictions)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    kept = [s for s, status in records if status == "kept"]
    ranking = [s.finding for s in rank_findings(kept)]

    total_loc = args.total_loc or 0
    per_tech_loc: dict[Technology, int] = {}
    clean_files: list[str] = []
    if args.corpus:
        corpus = Path(args.corpus)
        if not corpus.is_dir():
            print(f"error: corpus root {args.corpus!r} is not a directory", file=sys.stderr)
            return 2
        counted_total, per_tech_loc = _count_loc(corpus)
        if not args.total_loc:
            total_loc = counted_total
        smelly = {e.file_path for e in oracle}
        clean_files = sorted(
            p.relative_to(corpus).as_posix()
            for p in iter_source_files(corpus)
            if p.relative_to(corpus).as_posix() not in smelly
        )

    out = []
    summary: dict = {"technologies": {}, "total_loc": total_loc}
    out.append("technology\ttp\tfp\tfn\tprecision\trecall\tf1\teffort_at_60_recall\tf1_at_1pct_loc")
    f1_by_tech: dict[Technology, float] = {}
    for tech in Technology:
        tech_preds = [f for f in ranking if f.technology is tech]
        tech_oracle = [
            e for e in oracle if _technology_of_path(e.file_path) is tech
        ]
        counts = ev.match(tech_preds, tech_oracle)
        p, r, f1 = ev.prf1(counts)
        f1_by_tech[tech] = f1
        effort: float | None = None
        f1loc: float | None = None
        loc = per_tech_loc.get(tech, 0)
        if tech_oracle and loc > 0:
            e60 = ev.effort_at_recall(tech_preds, tech_oracle, total_loc=loc)
            effort = None if e60 is ev.UNREACHED else e60
            f1loc = ev.f1_at_loc(tech_preds, tech_oracle, total_loc=loc)
        summary["technologies"][tech.value] = {
            "tp": counts.tp, "fp": counts.fp, "fn": counts.fn,
            "precision": p, "recall": r, "f1": f1,
            "loc": loc,
            "effort_at_60_recall": effort,
            "f1_at_1pct_loc": f1loc,
        }
        eff_text = "unreached" if (tech_oracle and loc > 0 and effort is None) else (
            f"{effort:.4f}" if effort is not None else "n/a"
        )
        f1loc_text = f"{f1loc:.4f}" if f1loc is not None else "n/a"
        out.append(
            f"{tech.value}\t{counts.tp}\t{counts.fp}\t{counts.fn}"
            f"\t{p:.4f}\t{r:.4f}\t{f1:.4f}\t{eff_text}\t{f1loc_text}"
        )
    try:
        summary["macro_f1"] = ev.macro_f1(f1_by_tech)
    except ev.MissingTechnologyError:
        summary["macro_f1"] = None
    out.append(f"macro_f1\t{summary['macro_f1']:.4f}" if summary["macro_f1"] is not None else "macro_f1\tn/a")

    counts = ev.match(ranking, oracle)
    report = ev.per_smell_report(counts, clean_files, ranking, oracle)
    out.append("")
    out.append(report.render().rstrip("\n"))
    summary["per_smell"] = {
        smell.value: {"tp": row[0], "fp": row[1], "fn": row[2],
                      "precision": row[3], "recall": row[4], "f1": row[5]}
        for smell, row in report.rows.items()
    }
    summary["no_smell"] = {
        "tp": report.no_smell[0], "fp": report.no_smell[1], "fn": report.no_smell[2],
        "precision": report.no_smell[3], "recall": report.no_smell[4], "f1": report.no_smell[5],
    }
    out.append("")
    out.append(json.dumps(summary, ensure_ascii=False, sort_keys=True))
    _emit("\n".join(out) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# dataset subcommands

def cmd_dataset_mine(args: argparse.Namespace) -> int:
    try:
        config = _load_rule_config(args.config)
        report = ds.mine_candidates(
            args.root, config, min_warnings=args.min_warnings, max_lines=args.max_lines
        )
        ds.write_instances(report.instances, args.out)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"mined {len(report.instances)} instances from {len(report.kept_files)} files "
        f"({len(report.skipped)} files skipped)"
    )
    return 0


def cmd_dataset_dedup(args: argparse.Namespace) -> int:
    try:
        candidates = [p for p in sorted(Path(args.candidates).rglob("*")) if p.is_file()]
        oracle_files = [p for p in sorted(Path(args.oracle_files).rglob("*")) if p.is_file()]
        survivors = ds.dedup_files(candidates, oracle_files)
        text = "".join(f"{p}\n" for p in survivors)
        _emit(text, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"kept {len(survivors)} of {len(candidates)} candidate files", file=sys.stderr)
    return 0


def cmd_dataset_split(args: argparse.Namespace) -> int:
    try:
        instances = ds.read_instances(args.instances)
        oracle = ds.read_instances(args.oracle) if args.oracle else []
        result = ds.make_splits(instances, ds.SplitSpec(), seed=args.seed, oracle=oracle)
        ds.write_instances(result.train, args.train_out)
        ds.write_instances(result.val, args.val_out)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"train={len(result.train)} val={len(result.val)} "
        f"removed={len(result.removed)} shortfalls={len(result.shortfalls)}"
    )
    for report in result.shortfalls:
        print(
            f"  shortfall {report.technology.value}/{report.smell.value}: "
            f"train {report.got_train}/{report.want_train}, "
            f"val {report.got_val}/{report.want_val}"
        )
    return 0


def cmd_train_builtin(args: argparse.Namespace) -> int:
    try:
        # unlabeled instances (e.g. unparseable teacher verdicts) are
        # excluded from training rather than guessed or made fatal
        train = [i for i in ds.read_instances(args.train) if i.label is not None]
        val = [i for i in ds.read_instances(args.val) if i.label is not None]
        result = train_builtin(
            train, val, epochs=args.epochs, learning_rate=args.learning_rate, seed=args.seed
        )
        save_model(result.model, args.out)
    except (OSError, ValueError, KeyError, json.JSONDecodeError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"best validation F1 {result.best_val_f1:.4f} at epoch {result.best_epoch}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iacsmell", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="detect, prune, and rank security smells")
    p.add_argument("root", help="directory of IaC files to analyze")
    p.add_argument("--tech", help="force a technology (Puppet, Ansible, Chef)")
    p.add_argument("--config", help=f"rule config file (default: ${CONFIG_ENV_VAR} or built-in)")
    p.add_argument("--scorer", default="passthrough",
                   help="passthrough | builtin:<model-path> | external:<command>")
    p.add_argument("--fp-threshold", type=float, default=0.5,
                   help="drop targeted findings with fp_probability >= this (default 0.5)")
    p.add_argument("--targeted", help="comma-separated smell names to prune (default: the four low-precision types)")
    p.add_argument("--format", choices=("table", "records"), default="table")
    p.add_argument("--show-dropped", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write output here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eval", help="compare predictions records to an oracle")
    p.add_argument("--oracle", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--corpus", help="corpus root for LOC counting and clean-file detection")
    p.add_argument("--total-loc", type=int, help="override the total LOC count")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dataset", help="pseudo-label dataset construction")
    dsub = p.add_subparsers(dest="dataset_command", required=True)

    q = dsub.add_parser("mine", help="mine unlabeled instances from a corpus")
    q.add_argument("root")
    q.add_argument("--out", required=True)
    q.add_argument("--config")
    q.add_argument("--min-warnings", type=int, default=20)
    q.add_argument("--max-lines", type=int, default=200)
    q.set_defaults(func=cmd_dataset_mine)

    q = dsub.add_parser("dedup", help="drop candidate files identical to oracle files")
    q.add_argument("--candidates", required=True, help="directory of candidate files")
    q.add_argument("--oracle-files", required=True, help="directory of oracle files")
    q.add_argument("--out", help="write surviving paths here instead of stdout")
    q.set_defaults(func=cmd_dataset_dedup)

    q = dsub.add_parser("split", help="stratified train/validation split")
    q.add_argument("--instances", required=True)
    q.add_argument("--train-out", required=True)
    q.add_argument("--val-out", required=True)
    q.add_argument("--oracle", help="labeled oracle instances to dedup against")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_dataset_split)

    p = sub.add_parser("train-builtin", help="train the built-in logistic pruner")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_builtin)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
