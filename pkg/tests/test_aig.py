import itertools
import random

import pytest

from aigsynth.aig import (
    Aig,
    AigerParseError,
    AndNode,
    StructureError,
    aag_output_count,
    aag_read,
    aag_write,
    aig_eval,
    eval_nodes,
    make_aig,
    node_tables,
    output_table,
    topo_order,
    validate,
)
from aigsynth.truthtable import TruthTable

from .util import fig1_aig, fig3_aig, random_aig

FIG1_AAG = "aag 5 3 0 1 2\n2\n4\n6\n11\n8 2 4\n10 6 9\n"


class TestEval:
    def test_reference_assignment(self):
        g = fig1_aig()
        assert aig_eval(g, (1, 1, 0)) == 1

    def test_table_row(self):
        # assignment I3=1, I2=0, I1=0 is row 4 of the output column
        assert aig_eval(fig1_aig(), (0, 0, 1)) == 0

    def test_gate_free_inverted_input(self):
        g = make_aig(1, [], (1, True))
        assert aig_eval(g, (1,)) == 0
        assert aig_eval(g, (0,)) == 1

    def test_constant_output(self):
        g = Aig(2, (), (0, True))
        assert aig_eval(g, (0, 1)) == 1

    def test_assignment_length(self):
        with pytest.raises(ValueError):
            aig_eval(fig1_aig(), (1, 0))


class TestNodeTables:
    def test_reference_columns(self):
        tables = node_tables(fig1_aig())
        assert [t.to_hex() for t in tables] == ["AA", "CC", "F0", "88", "70"]
        assert output_table(fig1_aig()).to_hex() == "8F"

    def test_gate_free(self):
        tables = node_tables(make_aig(2, [], (1, False)))
        assert [t.to_hex() for t in tables] == ["A", "C"]

    def test_single_and(self):
        g = make_aig(2, [(1, False, 2, False)], (3, False))
        assert node_tables(g)[-1].to_hex() == "8"

    def test_matches_pointwise_eval(self):
        # oracle: every table column recomputed by 2^n independent evaluations
        rng = random.Random(7)
        for _ in range(25):
            n = rng.randint(1, 4)
            g = random_aig(rng, n, rng.randint(0, 6))
            tables = node_tables(g)
            for k in range(2**n):
                assignment = [(k >> i) & 1 for i in range(n)]
                values = eval_nodes(g, assignment)
                for t, v in zip(tables, values):
                    assert t.row(k) == v
                assert output_table(g).row(k) == aig_eval(g, assignment)


class TestTopoOrder:
    def test_reference_graph(self):
        assert topo_order(fig3_aig()) == [1, 2, 3, 4, 5, 6, 7, 8]

    def test_chain_identity(self):
        nodes = [(1, False, 2, False), (2, False, 3, False), (3, False, 4, False)]
        g = make_aig(2, nodes, (5, False))
        assert topo_order(g) == [1, 2, 3, 4, 5]

    def test_deterministic(self):
        rng = random.Random(3)
        for _ in range(10):
            g = random_aig(rng, 3, 8)
            assert topo_order(g) == topo_order(g)


class TestAagWrite:
    def test_reference_text(self):
        assert aag_write(fig1_aig()) == FIG1_AAG

    def test_gate_free(self):
        assert aag_write(make_aig(1, [], (1, False))) == "aag 1 1 0 1 0\n2\n2\n"

    def test_constant(self):
        assert aag_write(Aig(2, (), (0, True))).splitlines()[3] == "1"


class TestAagRead:
    def test_round_trip_reference(self):
        assert aag_read(FIG1_AAG) == fig1_aig()

    def test_write_read_write_fixed_point(self):
        rng = random.Random(19)
        for _ in range(50):
            g = random_aig(rng, rng.randint(1, 5), rng.randint(0, 10))
            text = aag_write(g)
            assert aag_read(text) == g
            assert aag_write(aag_read(text)) == text

    def test_permuted_ids_relabeled(self):
        # hand-run Kahn: gate vars 3<-(4,2), 4<-(1,2), 5<-(3,~4) emit as 4,3,5
        text = "aag 5 2 0 1 3\n2\n4\n10\n6 8 4\n8 2 4\n10 6 9\n"
        g = aag_read(text)
        assert g.nodes == (
            AndNode(1, False, 2, False),
            AndNode(2, False, 3, False),
            AndNode(3, True, 4, False),
        )
        assert g.output == (5, False)

    def test_multi_output_selection(self):
        text = "aag 6 2 0 2 2\n2\n4\n12\n11\n12 10 4\n10 2 4\n"
        first = aag_read(text)
        second = aag_read(text, output_index=1)
        assert aag_output_count(text) == 2
        assert first.output == (4, False)
        assert second.output == (3, True)

    def test_duplicate_fanin_normalized(self):
        text = "aag 2 1 0 1 1\n2\n4\n4 3 2\n"
        g = aag_read(text)
        assert g.nodes == (AndNode(1, False, 1, True),)

    def test_latch_rejected(self):
        with pytest.raises(AigerParseError, match="line 1"):
            aag_read("aag 3 1 1 1 1\n2\n4 2\n6\n6 2 4\n")

    def test_malformed_header(self):
        with pytest.raises(AigerParseError, match="line 1"):
            aag_read("aig 5 3 0 1 2\n")

    def test_dangling_fanin(self):
        with pytest.raises(AigerParseError, match="line 5"):
            aag_read("aag 9 2 0 1 1\n2\n4\n6\n6 2 8\n")

    def test_dangling_output(self):
        with pytest.raises(AigerParseError, match="dangling output"):
            aag_read("aag 2 2 0 1 0\n2\n4\n18\n")

    def test_cycle_rejected(self):
        with pytest.raises(AigerParseError, match="cycle"):
            aag_read("aag 4 1 0 1 2\n2\n6\n6 8 2\n8 6 2\n")


class TestValidate:
    def test_reference_clean(self):
        assert validate(fig1_aig()) == []

    def test_forward_reference(self):
        g = Aig(3, (AndNode(1, False, 2, False), AndNode(3, False, 6, False)), (5, False))
        problems = validate(g)
        assert any("node 5" in p for p in problems)

    def test_dangling_output_driver(self):
        g = Aig(3, (AndNode(1, False, 2, False),), (99, False))
        assert any("dangling output" in p for p in validate(g))

    def test_make_aig_rejects_bad_graph(self):
        with pytest.raises(StructureError):
            make_aig(2, [(1, False, 3, False)], (3, False))
