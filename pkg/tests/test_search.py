import dataclasses
import json
import random

import pytest

from aigsynth.aig import node_tables, output_table, validate
from aigsynth.env import Action, ConstantTargetError, decode_action, legal_actions, new_state, step
from aigsynth.evaluator import HeuristicEvaluator, UniformEvaluator
from aigsynth.search import (
    SearchConfig,
    Searcher,
    SynthResult,
    TrajectoryRecord,
    _Node,
    backup,
    mcts_decide,
    puct_score,
    record_to_json,
    synthesize,
    write_records,
)
from aigsynth.truthtable import TruthTable


def hex3(s):
    return TruthTable.from_hex(s, 3)


def cfg(**kw):
    base = dict(sims=64, sim_depth=12, max_nodes=12, seed=7)
    base.update(kw)
    return SearchConfig(**base)


class TestPuctScore:
    def test_unvisited_edge(self):
        assert puct_score(0.0, 0.5, 0, 4, 1.5) == pytest.approx(1.5)

    def test_visited_edge(self):
        assert puct_score(0.9667, 0.1, 3, 4, 1.5) == pytest.approx(1.0417, abs=1e-4)

    def test_zero_parent_visits(self):
        assert puct_score(0.25, 0.9, 0, 0, 1.5) == pytest.approx(0.25)


class TestBackup:
    def make_node(self, k=3):
        node = _Node.__new__(_Node)
        node.legal = list(range(k))
        node.n = [0] * k
        node.w = [0.0] * k
        node.visit_sum = 0
        return node

    def test_two_edge_path(self):
        a, b = self.make_node(), self.make_node()
        backup([(a, 0), (b, 1)], 0.9)
        assert a.n[0] == 1 and b.n[1] == 1
        assert a.w[0] / a.n[0] == pytest.approx(0.9)
        assert b.w[1] / b.n[1] == pytest.approx(0.9)

    def test_running_mean(self):
        a = self.make_node()
        backup([(a, 0)], 0.9)
        backup([(a, 0)], -1.0)
        assert a.n[0] == 2
        assert a.w[0] / a.n[0] == pytest.approx(-0.05)

    def test_depth_limit_value(self):
        # value-free depth exit backs up the fixed failure value
        a = self.make_node()
        backup([(a, 2)], -1.0)
        assert a.w[2] == -1.0


class TestDecide:
    def test_single_sim_greedy_argmax_prior(self):
        state = step(new_state(3, hex3("8F")), Action(1, 1, 2)).state
        action, record = mcts_decide(
            state, HeuristicEvaluator(), cfg(sims=1, dirichlet_mix=0.0)
        )
        legal = legal_actions(state)
        ev = HeuristicEvaluator().evaluate(state, legal)
        best = max(legal, key=lambda i: (ev.policy[i], -i))
        assert action == decode_action(best, state.node_count)
        assert record.visits == ((best, 1),)

    def test_terminal_action_wins_majority(self):
        state = step(new_state(3, hex3("8F")), Action(1, 1, 2)).state
        action, record = mcts_decide(state, HeuristicEvaluator(), cfg(sims=64))
        assert action == Action(3, 3, 4)
        visits = dict(record.visits)
        winner = max(visits.values())
        assert winner > 32

    def test_symmetric_root_visits_balanced(self):
        # all four type-1 pairs of a fresh XOR-target state play the same role
        state = new_state(2, TruthTable.from_hex("6", 2))
        _, record = mcts_decide(
            state, UniformEvaluator(), cfg(sims=64, dirichlet_mix=0.0, max_nodes=8, sim_depth=8)
        )
        visits = dict(record.visits)
        sims = sum(visits.values())
        assert sims == 64
        spread = max(visits.values()) - min(visits.get(i, 0) for i in legal_actions(state))
        assert spread <= sims / 4

    def test_visit_counts_sum_to_sims(self):
        state = new_state(3, hex3("96"))
        for sims in (1, 16, 64):
            _, record = mcts_decide(state, HeuristicEvaluator(), cfg(sims=sims))
            assert sum(c for _, c in record.visits) == sims

    def test_record_root_snapshot(self):
        state = step(new_state(3, hex3("8F")), Action(1, 1, 2)).state
        _, record = mcts_decide(state, HeuristicEvaluator(), cfg(sims=8))
        assert record.tables == ("AA", "CC", "F0", "88")
        assert record.target == "8F"
        assert -1.0 <= record.q <= 1.0


class TestSynthesize:
    def test_two_gate_target(self):
        result = synthesize(hex3("8F"), HeuristicEvaluator(), cfg(sims=128))
        assert result.success
        assert result.and_count <= 3
        assert validate(result.aig) == []
        assert output_table(result.aig) == hex3("8F")

    def test_xor2_exact(self):
        result = synthesize(TruthTable.from_hex("6", 2), HeuristicEvaluator(), cfg(sims=128))
        assert result.success
        assert result.and_count == 3
        assert output_table(result.aig) == TruthTable.from_hex("6", 2)

    def test_trivial_target(self):
        result = synthesize(hex3("AA"), HeuristicEvaluator(), cfg())
        assert result.success
        assert result.and_count == 0
        assert result.records == ()
        assert output_table(result.aig) == hex3("AA")

    def test_trivial_negated(self):
        result = synthesize(hex3("55"), HeuristicEvaluator(), cfg())
        assert result.success and result.output_inverted
        assert output_table(result.aig) == hex3("55")

    def test_constant_propagates(self):
        with pytest.raises(ConstantTargetError):
            synthesize(hex3("00"), HeuristicEvaluator(), cfg())

    def test_failure_when_budget_tiny(self):
        result = synthesize(
            TruthTable.from_hex("6", 2),
            HeuristicEvaluator(),
            cfg(sims=4, max_nodes=2, sim_depth=2),
        )
        assert not result.success
        assert result.aig is None
        assert result.failure_reason
        assert len(result.records) == result.steps

    def test_determinism(self):
        config = cfg(sims=32, seed=99)
        a = synthesize(hex3("96"), HeuristicEvaluator(), config)
        b = synthesize(hex3("96"), HeuristicEvaluator(), config)
        assert strip_runtime(a) == strip_runtime(b)

    def test_seed_changes_trace(self):
        base = synthesize(hex3("96"), UniformEvaluator(), cfg(sims=16, seed=1))
        other = synthesize(hex3("96"), UniformEvaluator(), cfg(sims=16, seed=2))
        # not guaranteed different in principle, but these seeds diverge
        assert strip_runtime(base) != strip_runtime(other)

    def test_value_free_variant(self):
        result = synthesize(hex3("8F"), HeuristicEvaluator(), cfg(sims=32, use_value=False))
        assert result.success
        assert output_table(result.aig) == hex3("8F")

    def test_result_tables_verify(self):
        rng = random.Random(17)
        for _ in range(6):
            bits = rng.randrange(1, 255)
            target = TruthTable(3, bits)
            if target.is_constant():
                continue
            result = synthesize(target, HeuristicEvaluator(), cfg(sims=32))
            if result.success and result.and_count:
                tables = node_tables(result.aig)
                assert output_table(result.aig) == target
                assert len(tables) == 3 + result.and_count


class TestSubtreeReuse:
    def test_roots_advance_along_committed_line(self):
        state = new_state(3, hex3("8F"))
        searcher = Searcher(state, HeuristicEvaluator(), cfg(sims=16), random.Random(3))
        idx, _ = searcher.decide()
        child = searcher.root.children[idx]
        searcher.advance(idx)
        assert searcher.root is child
        assert searcher.root.state.and_count == 1


class TestTreeConsistency:
    def walk(self, node):
        yield node
        for child in node.children.values():
            yield from self.walk(child)

    def test_visit_bookkeeping_and_q_bounds(self):
        for use_value in (True, False):
            state = new_state(3, hex3("96"))
            searcher = Searcher(
                state, HeuristicEvaluator(), cfg(sims=64, use_value=use_value), random.Random(5)
            )
            searcher.decide()
            root = searcher.root
            assert root.visit_sum == 64
            for node in self.walk(root):
                if not node.expanded:
                    continue
                assert node.visit_sum == sum(node.n)
                for pos, idx in enumerate(node.legal):
                    if node.n[pos]:
                        q = node.w[pos] / node.n[pos]
                        assert -1.0 <= q <= 1.0
                    child = node.children.get(idx)
                    if child is not None:
                        # visits into a child cover every simulation that
                        # continued beyond it
                        assert node.n[pos] >= child.visit_sum


def strip_runtime(result: SynthResult):
    return dataclasses.replace(result, runtime_s=0.0)


class TestRecordsIO:
    def test_json_line(self):
        record = TrajectoryRecord(3, ("AA", "CC", "F0"), "8F", ((43, 96), (1, 32)), 0.9)
        raw = json.loads(record_to_json(record))
        assert raw == {
            "n": 3,
            "tables": ["AA", "CC", "F0"],
            "target": "8F",
            "visits": [[43, 96], [1, 32]],
            "q": 0.9,
        }

    def test_write_records(self, tmp_path):
        result = synthesize(hex3("8F"), HeuristicEvaluator(), cfg(sims=16))
        path = tmp_path / "replay.jsonl"
        wrote = write_records(path, result.records)
        lines = path.read_text().splitlines()
        assert wrote == len(result.records) == len(lines)
        for line in lines:
            raw = json.loads(line)
            assert sum(c for _, c in raw["visits"]) == 16


class TestConfigValidation:
    def test_bad_sims(self):
        with pytest.raises(ValueError):
            SearchConfig(sims=0)

    def test_sim_depth_capped_by_max_nodes(self):
        with pytest.raises(ValueError):
            SearchConfig(sim_depth=31, max_nodes=30)

    def test_bad_mix(self):
        with pytest.raises(ValueError):
            SearchConfig(dirichlet_mix=1.5)
