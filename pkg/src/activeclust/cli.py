"""Command line entry points: run a discovery session, sweep strategies, or
score stored assignments."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datasets import Dataset, RunConfig, generate_synthetic, load_dataset, parse_synth_arg
from .engine import bench, emit_report, run_loop
from .errors import ActiveClustError
from .metrics import score_run
from .oracles import ConsoleOracle, GoldOracle, RelationSet
from .selection import STRATEGIES


def _dataset_from_arg(arg: str, fmt: str, seed: int | None = None) -> Dataset:
    if arg.startswith("synth:"):
        spec = parse_synth_arg(arg)
        if seed is not None:
            from dataclasses import replace
            spec = replace(spec, seed=seed)
        return generate_synthetic(spec)
    return load_dataset(arg, format=fmt)


def _config_from_args(args) -> RunConfig:
    if args.config:
        config = RunConfig.from_file(args.config)
    else:
        config = RunConfig()
    if args.budget is not None:
        config.N_star = args.budget
    if args.per_round is not None:
        config.B = args.per_round
    if args.seed is not None:
        config.seed = args.seed
    return config.validate()


def cmd_run(args) -> int:
    config = _config_from_args(args)
    ds = _dataset_from_arg(args.data, args.format, seed=config.seed)

    if args.oracle == "http":
        from .server import run_with_server

        result = run_with_server(
            config, ds, args.strategy, args.out, bind=args.bind,
            frontend_dir=args.frontend, resume_from=args.resume,
        )
    else:
        if args.oracle == "gold":
            oracle = GoldOracle(ds)
        else:
            oracle = ConsoleOracle(RelationSet())
        result = run_loop(config, ds, oracle, strategy=args.strategy, out_dir=args.out,
                          resume_from=args.resume)

    if result is None:
        print("run did not complete", file=sys.stderr)
        return 1
    print(f"iterations: {len(result.history)}")
    print(f"labeled: {result.history[-1]['labeled_total']} / {config.N_star}")
    print(f"relations discovered: {len(result.relations)}")
    if result.final is not None:
        row = result.final.to_row()
        print(f"B3 F1 {row['b3_f1']:.4f} | V F1 {row['v_f1']:.4f} | "
              f"ARI {row['ari']:.4f} | cls F1 {row['cls_f1']:.4f}")
    if args.out:
        print(f"reports written to {args.out}")
    return 0


def cmd_bench(args) -> int:
    config = _config_from_args(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    strategies = [s.strip() for s in args.strategies.split(",")]
    for s in strategies:
        if s not in STRATEGIES:
            raise ActiveClustError(f"unknown strategy '{s}'")

    def make_dataset(seed: int) -> Dataset:
        return _dataset_from_arg(args.data, args.format, seed=seed)

    summary = bench(make_dataset, strategies, seeds, config, GoldOracle, out_dir=args.out)
    width = max(len(s) for s in strategies)
    print(f"{'strategy':<{width}}  discovered  b3_f1   v_f1    ari     cls_f1")
    for name, row in summary.items():
        print(f"{name:<{width}}  {row['discovered']:>10.1f}  {row['b3_f1']:.4f}  "
              f"{row['v_f1']:.4f}  {row['ari']:.4f}  {row['cls_f1']:.4f}")
    return 0


def cmd_score(args) -> int:
    import csv

    ds = _dataset_from_arg(args.data, args.format)
    gold = {inst.id: inst.gold_label for inst in ds.instances}
    pred, true = [], []
    rel_set = RelationSet()
    with open(args.assignments, newline="") as handle:
        for row in csv.DictReader(handle):
            inst_id = int(row["id"])
            label = row["label"]
            if not label or gold.get(inst_id) is None:
                continue
            pred.append(label)
            true.append(gold[inst_id])
            rel_set.add(label, 0)
    if not pred:
        print("no scorable rows (need labels on instances with gold)", file=sys.stderr)
        return 1
    report = score_run(pred, true, rel_set)
    payload = report.to_row()
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2))
    print(json.dumps(payload, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activeclust")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--data", required=True,
                       help="dataset path or synth:K=..,head=..,decay=..,dim=..,spread=..,centers=..")
        p.add_argument("--format", choices=["jsonl", "binary"], default="jsonl")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--budget", type=int, help="max actively labeled instances")
        p.add_argument("--per-round", type=int, help="labels per iteration")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory for reports")

    run_p = sub.add_parser("run", help="run one discovery session")
    add_common(run_p)
    run_p.add_argument("--strategy", choices=STRATEGIES, default="ours")
    run_p.add_argument("--oracle", choices=["gold", "console", "http"], default="gold")
    run_p.add_argument("--bind", default="127.0.0.1:8000", help="host:port for --oracle http")
    run_p.add_argument("--frontend", help="directory of built UI assets to serve")
    run_p.add_argument("--resume", help="checkpoint directory of an interrupted run")
    run_p.set_defaults(func=cmd_run)

    bench_p = sub.add_parser("bench", help="sweep strategies x seeds with the gold oracle")
    add_common(bench_p)
    bench_p.add_argument("--strategies", default=",".join(STRATEGIES))
    bench_p.add_argument("--seeds", default="0,1,2,3,4")
    bench_p.set_defaults(func=cmd_bench)

    score_p = sub.add_parser("score", help="score a stored assignment table")
    add_common(score_p)
    score_p.add_argument("--assignments", required=True, help="assignments.csv from a run")
    score_p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ActiveClustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
