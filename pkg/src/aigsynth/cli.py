"""Command-line interface.

Exit codes: 0 on success, 1 on usage or I/O errors, 2 when synthesis (or the
oracle bound) fails to produce a graph.  Every subcommand prints a single
JSON line on stdout and always echoes the seed in use, drawing and reporting
a random one when none is given.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .aig import AigerParseError, aag_write
from .bench import (
    ablation_sweep,
    compare_external,
    load_targets,
    report_aggregates,
    run_eval,
    write_report,
)
from .cutgen import build_dataset
from .env import ConstantTargetError
from .evaluator import (
    EvaluatorUnavailableError,
    make_evaluator,
    parse_evaluator_spec,
)
from .oracle import exact_minimal, load_cache, minimal_size_table, save_cache
from .search import SearchConfig, synthesize, write_records
from .truthtable import TruthTable

log = logging.getLogger("aigsynth")


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ValueError):
    pass


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _resolve_seed(args) -> int:
    if args.seed is None:
        return random.SystemRandom().randrange(2**31)
    return args.seed


def _search_config(args, seed: int) -> SearchConfig:
    sim_depth = min(args.sim_depth, args.max_nodes)
    return SearchConfig(
        sims=args.sims,
        c_puct=args.c_puct,
        sim_depth=sim_depth,
        max_nodes=args.max_nodes,
        use_value=not args.no_value,
        seed=seed,
    )


def _evaluator_factory(args):
    config = parse_evaluator_spec(args.evaluator)
    if config.kind == "heuristic":
        config = replace(config, beta=args.beta)
    return lambda: make_evaluator(config)


def _add_search_flags(parser, include_sims: bool = True) -> None:
    if include_sims:
        parser.add_argument("--sims", type=int, default=128, help="simulations per committed action")
    parser.add_argument("--max-nodes", type=int, default=30, help="AND-node budget per episode")
    parser.add_argument(
        "--sim-depth",
        type=int,
        default=20,
        help="AND-node budget per simulation (capped at --max-nodes)",
    )
    parser.add_argument(
        "--evaluator",
        default="heuristic",
        help="policy source: uniform | heuristic | remote:HOST:PORT",
    )
    parser.add_argument("--beta", type=float, default=8.0, help="heuristic softmax temperature")
    parser.add_argument("--c-puct", type=float, default=2.0, help="exploration constant")
    parser.add_argument(
        "--no-value",
        action="store_true",
        help="value-free search: back up terminal rewards only",
    )


def cmd_synth(args) -> int:
    seed = _resolve_seed(args)
    target = TruthTable.from_hex(args.target, args.inputs)
    cfg = _search_config(args, seed)
    try:
        result = synthesize(target, _evaluator_factory(args)(), cfg)
    except ConstantTargetError as exc:
        raise _UsageError(str(exc)) from exc
    summary = {
        "command": "synth",
        "target": result.target,
        "n": result.n,
        "success": result.success,
        "and_nodes": result.and_count if result.success else None,
        "steps": result.steps,
        "output_inverted": result.output_inverted,
        "runtime_s": round(result.runtime_s, 6),
        "sims": cfg.sims,
        "seed": seed,
    }
    if args.records_out and result.records:
        write_records(args.records_out, result.records)
        summary["records_out"] = str(args.records_out)
    if result.success and args.out:
        Path(args.out).write_text(aag_write(result.aig), encoding="utf-8")
        summary["out"] = str(args.out)
    if not result.success:
        summary["failure_reason"] = result.failure_reason
    _emit(summary)
    return 0 if result.success else 2


def cmd_extract_cuts(args) -> int:
    seed = _resolve_seed(args)
    manifest = build_dataset(
        args.aiger,
        n=args.n,
        per_root=args.per_root,
        seed=seed,
        out_dir=args.out,
        max_samples=args.count or None,
    )
    readable = [s for s in manifest["sources"] if s["error"] is None]
    if manifest["samples"] == 0:
        log.warning("no samples extracted (check --n against the circuit sizes)")
    _emit(
        {
            "command": "extract-cuts",
            "samples": manifest["samples"],
            "mean_and_nodes": manifest["mean_and_nodes"],
            "seed": seed,
            "out": str(args.out),
            "errors": [s["path"] for s in manifest["sources"] if s["error"]],
        }
    )
    return 0 if readable else 1


def cmd_evaluate(args) -> int:
    seed = _resolve_seed(args)
    n, targets = load_targets(args.targets)
    cfg = _search_config(args, seed)
    oracle_sizes = None
    if args.with_oracle:
        cache = load_cache(args.oracle_cache) if args.oracle_cache else None
        oracle_sizes, _ = minimal_size_table(n, cache=cache)
        if args.oracle_cache:
            save_cache(args.oracle_cache, cache)
    report = run_eval(
        targets,
        n,
        _evaluator_factory(args),
        cfg,
        seed=seed,
        threads=args.threads,
        strict=not args.lenient_errors,
        oracle_sizes=oracle_sizes,
    )
    if args.baseline:
        compare_external(report, args.baseline)
    if args.cut_baseline:
        compare_external(report, args.cut_baseline, column="cut")
    if args.records_out:
        for row in report.rows:
            if row.result is not None:
                write_records(args.records_out, row.result.records)
    summary = {"command": "evaluate", **report_aggregates(report)}
    if args.out:
        csv_path, json_path = write_report(report, args.out)
        summary["csv"] = str(csv_path)
        summary["json"] = str(json_path)
    _emit(summary)
    return 0


def cmd_ablate(args) -> int:
    seed = _resolve_seed(args)
    n, targets = load_targets(args.targets)
    cfg = _search_config(args, seed)
    sims_list = [int(s) for s in args.sims_list.split(",") if s]
    if not sims_list:
        raise _UsageError("--sims needs a comma-separated list of simulation counts")
    result = ablation_sweep(
        targets,
        n,
        _evaluator_factory(args),
        cfg,
        sims_list,
        seed=seed,
        threads=args.threads,
    )
    rows = [
        {
            "sims": e.sims,
            "success_rate": e.success_rate,
            "mean_and_nodes": e.mean_and_nodes,
            "mean_runtime_s": e.mean_runtime_s,
        }
        for e in result.entries
    ]
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(
            json.dumps(
                {"rows": rows, "union_success_rate": result.union_success_rate},
                sort_keys=True,
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
    _emit(
        {
            "command": "ablate",
            "n": n,
            "targets": len(targets),
            "rows": rows,
            "union_success_rate": result.union_success_rate,
            "seed": seed,
        }
    )
    return 0


def cmd_oracle(args) -> int:
    seed = _resolve_seed(args)
    cache = load_cache(args.cache) if args.cache else None
    if args.all:
        sizes, residual = minimal_size_table(args.inputs, k_max=args.k_max, cache=cache)
        if args.cache:
            save_cache(args.cache, cache)
        _emit(
            {
                "command": "oracle",
                "n": args.inputs,
                "sizes": sizes,
                "residual": residual,
                "seed": seed,
            }
        )
        return 0 if not residual else 2
    if not args.target:
        raise _UsageError("oracle needs --target HEX or --all")
    target = TruthTable.from_hex(args.target, args.inputs)
    result = exact_minimal(target, k_max=args.k_max, cache=cache)
    if args.cache:
        save_cache(args.cache, cache)
    if result is None:
        _emit(
            {
                "command": "oracle",
                "target": target.to_hex(),
                "n": args.inputs,
                "size": None,
                "k_max": args.k_max,
                "seed": seed,
            }
        )
        return 2
    summary = {
        "command": "oracle",
        "target": target.to_hex(),
        "n": args.inputs,
        "size": result.size,
        "explored": result.explored,
        "seed": seed,
    }
    if args.out:
        Path(args.out).write_text(aag_write(result.witness), encoding="utf-8")
        summary["out"] = str(args.out)
    _emit(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aigsynth", description="AND-inverter graph synthesis toolkit")
    parser.add_argument("--version", action="version", version=f"aigsynth {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="base seed (random when omitted, always echoed)")
    parser.add_argument("--threads", type=int, default=1, help="worker pool size for batch runs")
    parser.add_argument(
        "--log-level",
        default="warning",
        choices=["debug", "info", "warning", "error"],
        help="logging verbosity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="synthesize one AIG from a hex truth table")
    synth.add_argument("--target", required=True, help="target truth table, hex")
    synth.add_argument("--inputs", type=int, required=True, help="number of primary inputs")
    _add_search_flags(synth)
    synth.add_argument("--out", help="write the synthesized graph as ASCII AIGER")
    synth.add_argument("--records-out", help="append root search records as JSONL")
    synth.set_defaults(func=cmd_synth)

    extract = sub.add_parser("extract-cuts", help="build a training set from AIGER circuits")
    extract.add_argument("--aiger", nargs="+", required=True, help="source circuit file(s)")
    extract.add_argument("--n", type=int, required=True, help="leaves per cut")
    extract.add_argument("--per-root", type=int, default=1, help="extraction attempts per AND node")
    extract.add_argument("--count", type=int, default=0, help="stop after this many samples (0 = no cap)")
    extract.add_argument("--out", required=True, help="output directory for shards + manifest")
    extract.set_defaults(func=cmd_extract_cuts)

    evaluate = sub.add_parser("evaluate", help="run synthesis over a target file and report")
    evaluate.add_argument("--targets", required=True, help="target file (header n=<k>, hex lines)")
    _add_search_flags(evaluate)
    evaluate.add_argument("--out", help="report path prefix (writes .csv and .json)")
    evaluate.add_argument("--baseline", help="directory of <targethex>.aag baseline graphs")
    evaluate.add_argument("--cut-baseline", help="directory of <targethex>.aag source-cut graphs")
    evaluate.add_argument("--with-oracle", action="store_true", help="annotate rows with exact minimal sizes")
    evaluate.add_argument("--oracle-cache", help="oracle result cache file")
    evaluate.add_argument(
        "--lenient-errors",
        action="store_true",
        help="drop errored rows from the success-rate denominator instead of counting failures",
    )
    evaluate.add_argument("--records-out", help="append all root search records as JSONL")
    evaluate.set_defaults(func=cmd_evaluate)

    ablate = sub.add_parser("ablate", help="sweep simulation counts over a target file")
    ablate.add_argument("--targets", required=True, help="target file (header n=<k>, hex lines)")
    ablate.add_argument(
        "--sims",
        dest="sims_list",
        default="1,16,128",
        help="comma-separated simulation counts",
    )
    _add_search_flags(ablate, include_sims=False)
    ablate.add_argument("--out", help="write the sweep table as JSON")
    ablate.set_defaults(func=cmd_ablate, sims=128)

    oracle = sub.add_parser("oracle", help="exact minimal AND counts for small inputs")
    oracle.add_argument("--target", help="target truth table, hex")
    oracle.add_argument("--inputs", type=int, required=True, help="number of primary inputs")
    oracle.add_argument("--all", action="store_true", help="classify every function of this width")
    oracle.add_argument("--k-max", type=int, default=8, help="largest gate count to try")
    oracle.add_argument("--out", help="write the witness graph as ASCII AIGER")
    oracle.add_argument("--cache", help="oracle result cache file")
    oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()))
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, AigerParseError, EvaluatorUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
