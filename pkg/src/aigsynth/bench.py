"""Evaluation harness: batched synthesis runs, reports, and baselines.

Target files carry a header line "n=<k>" followed by one hex truth table per
line.  Reports split into a deterministic CSV of per-target rows (stable
across reruns with the same seed) and a JSON aggregate block that also holds
wall-clock timing.  Baseline graphs are ingested from a directory of
<targethex>.aag files, verified against their target before comparison.
"""

from __future__ import annotations

import csv
import io
import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from .aig import AigerParseError, aag_read, aag_write, output_table, validate
from .evaluator import Evaluator, EvaluatorUnavailableError
from .search import SearchConfig, SynthResult, synthesize
from .truthtable import TruthTable

EvaluatorFactory = Callable[[], Evaluator]


@dataclass
class BenchRow:
    target: str
    success: bool
    and_nodes: int | None
    sims: int
    seed: int
    error: str | None = None
    oracle_size: int | None = None
    cut_size: int | None = None
    cut_note: str | None = None
    external_size: int | None = None
    external_delta_pct: float | None = None
    external_note: str | None = None
    runtime_s: float = 0.0
    result: SynthResult | None = None


@dataclass
class BenchReport:
    n: int
    sims: int
    seed: int
    strict: bool
    rows: list[BenchRow] = field(default_factory=list)

    @property
    def counted_rows(self) -> list[BenchRow]:
        if self.strict:
            return self.rows
        return [r for r in self.rows if r.error is None]

    @property
    def success_rate(self) -> float | None:
        rows = self.counted_rows
        if not rows:
            return None
        return 100.0 * sum(r.success for r in rows) / len(rows)

    @property
    def mean_and_nodes(self) -> float | None:
        sizes = [r.and_nodes for r in self.rows if r.success]
        if not sizes:
            return None
        return sum(sizes) / len(sizes)

    @property
    def mean_runtime_s(self) -> float | None:
        rows = self.counted_rows
        if not rows:
            return None
        return sum(r.runtime_s for r in rows) / len(rows)


def load_targets(path: str | Path) -> tuple[int, list[str]]:
    """Parse a target file: header "n=<k>", then one hex table per line."""
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("n="):
        raise ValueError(f"{path}: first line must be a n=<k> header")
    n = int(lines[0][2:])
    targets = []
    for ln in lines[1:]:
        TruthTable.from_hex(ln, n)  # validate eagerly, with the declared width
        targets.append(ln.upper())
    return n, targets


def derive_seed(base_seed: int, target_hex: str) -> int:
    """Stable per-target seed: reruns and sims sweeps share it."""
    return (base_seed * 2654435761 + zlib.crc32(target_hex.encode("ascii"))) & 0x7FFFFFFF


def run_eval(
    targets: Sequence[str],
    n: int,
    evaluator_factory: EvaluatorFactory,
    cfg: SearchConfig,
    *,
    seed: int = 0,
    threads: int = 1,
    strict: bool = True,
    oracle_sizes: dict[str, int] | None = None,
) -> BenchReport:
    """One synthesize call per target with a per-target derived seed."""
    report = BenchReport(n=n, sims=cfg.sims, seed=seed, strict=strict)

    def run_one(target_hex: str) -> BenchRow:
        target = TruthTable.from_hex(target_hex, n)
        row_seed = derive_seed(seed, target_hex)
        row = BenchRow(target=target_hex, success=False, and_nodes=None, sims=cfg.sims, seed=row_seed)
        if oracle_sizes is not None:
            row.oracle_size = oracle_sizes.get(target_hex)
        try:
            result = synthesize(target, evaluator_factory(), replace(cfg, seed=row_seed))
        except EvaluatorUnavailableError as exc:
            row.error = str(exc)
            return row
        row.success = result.success
        row.and_nodes = result.and_count if result.success else None
        row.runtime_s = result.runtime_s
        row.result = result
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            report.rows = list(pool.map(run_one, targets))
    else:
        report.rows = [run_one(t) for t in targets]
    return report


@dataclass
class AblationEntry:
    sims: int
    success_rate: float | None
    mean_and_nodes: float | None
    mean_runtime_s: float | None
    solved: set[str] = field(default_factory=set)


@dataclass
class AblationResult:
    entries: list[AblationEntry]
    union_solved: set[str]
    union_success_rate: float | None
    reports: list[BenchReport]


def ablation_sweep(
    targets: Sequence[str],
    n: int,
    evaluator_factory: EvaluatorFactory,
    cfg: SearchConfig,
    sims_list: Sequence[int],
    *,
    seed: int = 0,
    threads: int = 1,
    strict: bool = True,
) -> AblationResult:
    """run_eval per sims value with shared per-target seeds, plus the union."""
    entries = []
    reports = []
    union: set[str] = set()
    for sims in sims_list:
        sweep_cfg = replace(cfg, sims=sims)
        report = run_eval(
            targets, n, evaluator_factory, sweep_cfg, seed=seed, threads=threads, strict=strict
        )
        solved = {r.target for r in report.rows if r.success}
        union |= solved
        entries.append(
            AblationEntry(
                sims=sims,
                success_rate=report.success_rate,
                mean_and_nodes=report.mean_and_nodes,
                mean_runtime_s=report.mean_runtime_s,
                solved=solved,
            )
        )
        reports.append(report)
    union_rate = 100.0 * len(union) / len(targets) if targets else None
    return AblationResult(entries, union, union_rate, reports)


def compare_external(
    report: BenchReport, baseline_dir: str | Path, column: str = "external"
) -> BenchReport:
    """Attach verified baseline sizes from <targethex>.aag files.

    `column` selects where sizes land: "external" for tool-produced graphs
    (with relative size deltas) or "cut" for the source-cut baseline.
    """
    if column not in ("external", "cut"):
        raise ValueError(f"unknown baseline column {column!r}")
    base = Path(baseline_dir)
    for row in report.rows:
        def set_result(size, note):
            if column == "external":
                row.external_size = size
                row.external_note = note
            else:
                row.cut_size = size
                row.cut_note = note

        path = base / f"{row.target}.aag"
        if not path.exists():
            set_result(None, "absent")
            continue
        try:
            g = aag_read(path.read_text(encoding="utf-8"))
        except (OSError, AigerParseError) as exc:
            set_result(None, f"unreadable: {exc}")
            continue
        target = TruthTable.from_hex(row.target, report.n)
        if g.n_inputs != report.n or output_table(g) != target:
            set_result(None, "mismatch")
            continue
        set_result(g.n_ands, "ok")
        if (
            column == "external"
            and row.success
            and row.and_nodes is not None
            and g.n_ands > 0
        ):
            row.external_delta_pct = 100.0 * (row.and_nodes - g.n_ands) / g.n_ands
    return report


def audit_report(report: BenchReport) -> list[str]:
    """End-to-end audit of success rows: serialize, reparse, verify tables."""
    problems = []
    for row in report.rows:
        if not row.success or row.result is None or row.result.aig is None:
            continue
        graph = aag_read(aag_write(row.result.aig))
        issues = validate(graph)
        if issues:
            problems.append(f"{row.target}: {'; '.join(issues)}")
            continue
        if output_table(graph) != TruthTable.from_hex(row.target, report.n):
            problems.append(f"{row.target}: reparsed output table mismatch")
    return problems


_CSV_COLUMNS = (
    "target",
    "success",
    "and_nodes",
    "sims",
    "seed",
    "error",
    "oracle_size",
    "cut_size",
    "cut_note",
    "external_size",
    "external_delta_pct",
    "external_note",
)


def report_csv(report: BenchReport) -> str:
    """Deterministic per-target rows; timing is reported only in the JSON."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in report.rows:
        delta = "" if row.external_delta_pct is None else f"{row.external_delta_pct:.4f}"
        writer.writerow(
            [
                row.target,
                int(row.success),
                "" if row.and_nodes is None else row.and_nodes,
                row.sims,
                row.seed,
                row.error or "",
                "" if row.oracle_size is None else row.oracle_size,
                "" if row.cut_size is None else row.cut_size,
                row.cut_note or "",
                "" if row.external_size is None else row.external_size,
                delta,
                row.external_note or "",
            ]
        )
    return buf.getvalue()


def report_aggregates(report: BenchReport) -> dict:
    return {
        "n": report.n,
        "targets": len(report.rows),
        "sims": report.sims,
        "seed": report.seed,
        "strict": report.strict,
        "success_rate": report.success_rate,
        "mean_and_nodes": report.mean_and_nodes,
        "mean_runtime_s": report.mean_runtime_s,
        "errors": sum(1 for r in report.rows if r.error),
    }


def write_report(report: BenchReport, prefix: str | Path) -> tuple[Path, Path]:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    csv_path.write_text(report_csv(report), encoding="utf-8")
    json_path.write_text(
        json.dumps(report_aggregates(report), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return csv_path, json_path
