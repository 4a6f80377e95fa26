import json
import os
from pathlib import Path

import pytest

from aigsynth.aig import aag_read, aag_write, output_table
from aigsynth.cli import build_parser, main
from aigsynth.truthtable import TruthTable

from .util import fig3_aig

DATA = Path(__file__).parent / "data"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    summary = None
    if captured.out.strip():
        summary = json.loads(captured.out.strip().splitlines()[-1])
    return code, summary, captured.err


class TestSynth:
    def test_two_gate_target(self, capsys, tmp_path):
        out = tmp_path / "result.aag"
        code, summary, _ = run_cli(
            capsys,
            "--seed", "5",
            "synth", "--target", "8F", "--inputs", "3", "--sims", "128", "--out", str(out),
        )
        assert code == 0
        assert summary["success"] is True
        assert summary["and_nodes"] <= 3
        assert summary["seed"] == 5
        g = aag_read(out.read_text())
        assert output_table(g) == TruthTable.from_hex("8F", 3)

    def test_constant_target_usage_error(self, capsys):
        code, summary, err = run_cli(capsys, "synth", "--target", "00", "--inputs", "3")
        assert code == 1
        assert "constant target" in err

    def test_trivial_target_zero_gates(self, capsys, tmp_path):
        out = tmp_path / "trivial.aag"
        code, summary, _ = run_cli(
            capsys, "--seed", "1", "synth", "--target", "AA", "--inputs", "3", "--out", str(out)
        )
        assert code == 0
        assert summary["and_nodes"] == 0
        g = aag_read(out.read_text())
        assert g.n_ands == 0
        assert output_table(g) == TruthTable.from_hex("AA", 3)

    def test_synthesis_failure_exit_code(self, capsys):
        code, summary, _ = run_cli(
            capsys,
            "--seed", "1",
            "synth", "--target", "6", "--inputs", "2",
            "--sims", "1", "--max-nodes", "1", "--evaluator", "uniform",
        )
        assert code == 2
        assert summary["success"] is False
        assert summary["failure_reason"]

    def test_records_out(self, capsys, tmp_path):
        records = tmp_path / "replay.jsonl"
        code, summary, _ = run_cli(
            capsys,
            "--seed", "3",
            "synth", "--target", "96", "--inputs", "3", "--sims", "16",
            "--records-out", str(records),
        )
        assert code == 0
        lines = records.read_text().splitlines()
        assert len(lines) == summary["steps"]

    def test_seed_echoed_when_random(self, capsys):
        code, summary, _ = run_cli(capsys, "synth", "--target", "8F", "--inputs", "3", "--sims", "8")
        assert code == 0
        assert isinstance(summary["seed"], int)


class TestExtractCuts:
    def test_reference_circuit(self, capsys, tmp_path):
        circuit = tmp_path / "fig3.aag"
        circuit.write_text(aag_write(fig3_aig()))
        out = tmp_path / "shards"
        code, summary, _ = run_cli(
            capsys,
            "--seed", "5",
            "extract-cuts", "--aiger", str(circuit), "--n", "3", "--per-root", "3",
            "--out", str(out),
        )
        assert code == 0
        assert summary["samples"] >= 1
        assert (out / "manifest.json").exists()

    def test_oversized_n_warns_but_succeeds(self, capsys, tmp_path):
        circuit = tmp_path / "fig3.aag"
        circuit.write_text(aag_write(fig3_aig()))
        code, summary, _ = run_cli(
            capsys,
            "extract-cuts", "--aiger", str(circuit), "--n", "9", "--out", str(tmp_path / "o"),
        )
        assert code == 0
        assert summary["samples"] == 0

    def test_missing_file(self, capsys, tmp_path):
        code, summary, _ = run_cli(
            capsys,
            "extract-cuts", "--aiger", str(tmp_path / "nope.aag"), "--n", "3",
            "--out", str(tmp_path / "o"),
        )
        assert code == 1


class TestEvaluate:
    def write_targets(self, tmp_path):
        path = tmp_path / "targets.txt"
        path.write_text("n=2\n6\n9\n8\n1\n")
        return path

    def test_report_files(self, capsys, tmp_path):
        targets = self.write_targets(tmp_path)
        prefix = tmp_path / "report"
        code, summary, _ = run_cli(
            capsys,
            "--seed", "11",
            "evaluate", "--targets", str(targets), "--sims", "32",
            "--max-nodes", "8", "--out", str(prefix),
        )
        assert code == 0
        assert summary["success_rate"] == 100.0
        assert Path(summary["csv"]).exists()
        assert Path(summary["json"]).exists()

    def test_deterministic_reports(self, capsys, tmp_path):
        targets = self.write_targets(tmp_path)
        csvs = []
        for name in ("a", "b"):
            prefix = tmp_path / name
            code, _, _ = run_cli(
                capsys,
                "--seed", "11",
                "evaluate", "--targets", str(targets), "--sims", "16",
                "--max-nodes", "8", "--out", str(prefix),
            )
            assert code == 0
            csvs.append(prefix.with_suffix(".csv").read_bytes())
        assert csvs[0] == csvs[1]

    def test_with_oracle_column(self, capsys, tmp_path):
        targets = self.write_targets(tmp_path)
        prefix = tmp_path / "report"
        code, _, _ = run_cli(
            capsys,
            "--seed", "2",
            "evaluate", "--targets", str(targets), "--sims", "16", "--max-nodes", "8",
            "--with-oracle", "--out", str(prefix),
        )
        assert code == 0
        header, *rows = prefix.with_suffix(".csv").read_text().splitlines()
        oracle_col = header.split(",").index("oracle_size")
        assert all(r.split(",")[oracle_col] != "" for r in rows)

    def test_missing_target_file(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "evaluate", "--targets", str(tmp_path / "nope.txt"))
        assert code == 1
        assert "error" in err


class TestAblate:
    def test_rows_and_union(self, capsys, tmp_path):
        targets = tmp_path / "targets.txt"
        targets.write_text("n=2\n6\n9\n8\n")
        code, summary, _ = run_cli(
            capsys,
            "--seed", "3",
            "ablate", "--targets", str(targets), "--sims", "1,4", "--max-nodes", "8",
        )
        assert code == 0
        assert len(summary["rows"]) == 2
        rates = [r["success_rate"] for r in summary["rows"]]
        assert summary["union_success_rate"] >= max(rates)


class TestOracle:
    def test_single_target_with_witness(self, capsys, tmp_path):
        out = tmp_path / "witness.aag"
        code, summary, _ = run_cli(
            capsys, "oracle", "--target", "6", "--inputs", "2", "--out", str(out)
        )
        assert code == 0
        assert summary["size"] == 3
        g = aag_read(out.read_text())
        assert output_table(g) == TruthTable.from_hex("6", 2)

    def test_all_n2(self, capsys):
        code, summary, _ = run_cli(capsys, "oracle", "--all", "--inputs", "2")
        assert code == 0
        assert len(summary["sizes"]) == 16
        assert summary["sizes"]["6"] == 3
        assert summary["residual"] == []

    def test_unsat_within_bound(self, capsys):
        code, summary, _ = run_cli(
            capsys, "oracle", "--target", "96", "--inputs", "3", "--k-max", "2"
        )
        assert code == 2
        assert summary["size"] is None

    def test_cache_file(self, capsys, tmp_path):
        cache = tmp_path / "oracle.json"
        code, first, _ = run_cli(
            capsys, "oracle", "--target", "8F", "--inputs", "3", "--cache", str(cache)
        )
        assert code == 0 and first["explored"] > 0
        code, second, _ = run_cli(
            capsys, "oracle", "--target", "8F", "--inputs", "3", "--cache", str(cache)
        )
        assert code == 0 and second["explored"] == 0


class TestUsage:
    def test_unknown_flag(self, capsys):
        code, _, err = run_cli(capsys, "synth", "--target", "8F", "--inputs", "3", "--bogus")
        assert code == 1

    def test_missing_subcommand(self, capsys):
        code, _, _ = run_cli(capsys)
        assert code == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0


class TestHelpGolden:
    def test_help_documents_every_flag(self, monkeypatch):
        monkeypatch.setenv("COLUMNS", "100")
        parser = build_parser()
        texts = [parser.format_help()]
        for action in parser._subparsers._group_actions:
            for sub in action.choices.values():
                texts.append(sub.format_help())
        combined = "\n".join(texts)
        golden = (DATA / "cli_help.txt").read_text()
        assert combined == golden

    def regenerate(self):  # manual helper: python -c "...regenerate()"
        os.environ["COLUMNS"] = "100"
        parser = build_parser()
        texts = [parser.format_help()]
        for action in parser._subparsers._group_actions:
            for sub in action.choices.values():
                texts.append(sub.format_help())
        DATA.mkdir(exist_ok=True)
        (DATA / "cli_help.txt").write_text("\n".join(texts))
