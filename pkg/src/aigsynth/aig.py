"""AND-inverter graphs: structure, semantics, and ASCII AIGER interchange.

Node ids are 1..n for primary inputs and n+1..n+t for AND nodes, with every
fanin id strictly below its node id.  The single output is a (driver, invert)
pair; driver 0 denotes the degenerate constant-false output, which only
occurs with an empty node list.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

from .truthtable import TruthTable, projection_bits, table_mask

CONST_DRIVER = 0


class AigerParseError(ValueError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class AndNode:
    fanin0: int
    inv0: bool
    fanin1: int
    inv1: bool

    def normalized(self) -> "AndNode":
        if (self.fanin0, self.inv0) <= (self.fanin1, self.inv1):
            return self
        return AndNode(self.fanin1, self.inv1, self.fanin0, self.inv0)


@dataclass(frozen=True)
class Aig:
    """Immutable single-output AND-inverter graph."""

    n_inputs: int
    nodes: tuple[AndNode, ...]
    output: tuple[int, bool]

    @property
    def n_ands(self) -> int:
        return len(self.nodes)

    @property
    def n_nodes(self) -> int:
        return self.n_inputs + len(self.nodes)

    def node(self, node_id: int) -> AndNode:
        return self.nodes[node_id - self.n_inputs - 1]

    def is_and(self, node_id: int) -> bool:
        return node_id > self.n_inputs

    def fanins(self, node_id: int) -> tuple[int, int]:
        nd = self.node(node_id)
        return nd.fanin0, nd.fanin1


def make_aig(
    n_inputs: int,
    nodes: Iterable[tuple[int, bool, int, bool]] | Iterable[AndNode],
    output: tuple[int, bool],
) -> Aig:
    """Build an Aig with fanins normalized to ascending (id, invert) order."""
    norm = []
    for nd in nodes:
        if not isinstance(nd, AndNode):
            nd = AndNode(*nd)
        norm.append(nd.normalized())
    g = Aig(n_inputs, tuple(norm), output)
    problems = validate(g)
    if problems:
        raise StructureError("; ".join(problems))
    return g


def validate(g: Aig) -> list[str]:
    """All invariant violations, empty when the graph is well-formed."""
    problems = []
    if g.n_inputs < 1:
        problems.append("graph must have at least one primary input")
    top = g.n_inputs + len(g.nodes)
    for k, nd in enumerate(g.nodes):
        node_id = g.n_inputs + 1 + k
        for fid in (nd.fanin0, nd.fanin1):
            if not 1 <= fid < node_id:
                problems.append(f"node {node_id}: fanin {fid} is not an earlier node")
        if (nd.fanin0, nd.inv0) > (nd.fanin1, nd.inv1):
            problems.append(f"node {node_id}: fanins not in normalized order")
    driver, _ = g.output
    if driver == CONST_DRIVER:
        if g.nodes:
            problems.append("constant output only allowed on a gate-free graph")
    elif not 1 <= driver <= top:
        problems.append(f"dangling output driver {driver}")
    return problems


def eval_nodes(g: Aig, assignment: Sequence[int | bool]) -> list[int]:
    """Value of every node (inputs then ANDs, id order) under one assignment."""
    if len(assignment) != g.n_inputs:
        raise ValueError(f"assignment has {len(assignment)} values, graph has {g.n_inputs} inputs")
    values = [1 if v else 0 for v in assignment]
    for nd in g.nodes:
        a = values[nd.fanin0 - 1] ^ nd.inv0
        b = values[nd.fanin1 - 1] ^ nd.inv1
        values.append(a & b)
    return values


def aig_eval(g: Aig, assignment: Sequence[int | bool]) -> int:
    """Output bit after propagation, including output polarity."""
    driver, inverted = g.output
    if driver == CONST_DRIVER:
        return 1 if inverted else 0
    values = eval_nodes(g, assignment)
    return values[driver - 1] ^ inverted


def node_tables(g: Aig) -> list[TruthTable]:
    """Truth table of every input and AND node, in id order."""
    n = g.n_inputs
    mask = table_mask(n)
    bits = [projection_bits(i, n) for i in range(1, n + 1)]
    for nd in g.nodes:
        a = bits[nd.fanin0 - 1]
        b = bits[nd.fanin1 - 1]
        if nd.inv0:
            a ^= mask
        if nd.inv1:
            b ^= mask
        bits.append(a & b)
    return [TruthTable(n, b) for b in bits]


def output_table(g: Aig) -> TruthTable:
    """Table of the primary output (driver table adjusted by polarity)."""
    driver, inverted = g.output
    n = g.n_inputs
    if driver == CONST_DRIVER:
        return TruthTable(n, table_mask(n) if inverted else 0)
    t = node_tables(g)[driver - 1]
    return ~t if inverted else t


def _kahn_order(fanins: dict[int, tuple[int, int]]) -> list[int]:
    """Kahn ordering of gate ids; among ready gates the smallest id goes first.

    `fanins` maps gate id -> fanin ids; ids absent from the map (inputs)
    count as always ready.
    """
    remaining: dict[int, int] = {}
    fanouts: dict[int, list[int]] = {}
    for i, pair in fanins.items():
        deps = {f for f in pair if f in fanins}
        remaining[i] = len(deps)
        for f in deps:
            fanouts.setdefault(f, []).append(i)
    ready = [i for i, r in remaining.items() if r == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in fanouts.get(i, ()):
            remaining[j] -= 1
            if remaining[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != len(fanins):
        raise StructureError("cycle detected in AND-node dependencies")
    return order


def topo_order(g: Aig) -> list[int]:
    """Deterministic Kahn ordering of all node ids (inputs first)."""
    fanins = {g.n_inputs + 1 + k: (nd.fanin0, nd.fanin1) for k, nd in enumerate(g.nodes)}
    return list(range(1, g.n_inputs + 1)) + _kahn_order(fanins)


def _literal(node_id: int, inverted: bool) -> int:
    return 2 * node_id + (1 if inverted else 0)


def aag_write(g: Aig) -> str:
    """Canonical ASCII AIGER text with exactly one output."""
    n = g.n_inputs
    lines = [f"aag {n + len(g.nodes)} {n} 0 1 {len(g.nodes)}"]
    for i in range(1, n + 1):
        lines.append(str(2 * i))
    driver, inverted = g.output
    if driver == CONST_DRIVER:
        lines.append(str(1 if inverted else 0))
    else:
        lines.append(str(_literal(driver, inverted)))
    for k, nd in enumerate(g.nodes):
        lhs = 2 * (n + 1 + k)
        lines.append(f"{lhs} {_literal(nd.fanin0, nd.inv0)} {_literal(nd.fanin1, nd.inv1)}")
    return "\n".join(lines) + "\n"


def aag_read(text: str, output_index: int = 0) -> Aig:
    """Parse combinational ASCII AIGER; multi-output files select one output.

    Variables are relabeled so inputs are 1..n in file order and AND nodes
    follow in deterministic topological order, restoring fanin < id.
    """
    raw_lines = text.splitlines()
    lineno = 0

    def next_line() -> tuple[str, int]:
        nonlocal lineno
        while lineno < len(raw_lines):
            lineno += 1
            stripped = raw_lines[lineno - 1].strip()
            if stripped:
                return stripped, lineno
        raise AigerParseError("unexpected end of file", lineno + 1)

    header, at = next_line()
    parts = header.split()
    if len(parts) != 6 or parts[0] != "aag":
        raise AigerParseError(f"malformed header {header!r}", at)
    try:
        max_var, n_in, n_latch, n_out, n_and = (int(p) for p in parts[1:])
    except ValueError:
        raise AigerParseError(f"malformed header {header!r}", at) from None
    if n_latch != 0:
        raise AigerParseError(f"latch count {n_latch} unsupported (combinational only)", at)
    if n_in < 1:
        raise AigerParseError("graph must have at least one primary input", at)
    if n_out < 1:
        raise AigerParseError("graph must have at least one output", at)
    if not 0 <= output_index < n_out:
        raise ValueError(f"output index {output_index} outside 0..{n_out - 1}")

    input_vars: list[int] = []
    for _ in range(n_in):
        line, at = next_line()
        try:
            lit = int(line)
        except ValueError:
            raise AigerParseError(f"bad input literal {line!r}", at) from None
        if lit < 2 or lit % 2:
            raise AigerParseError(f"input literal {lit} must be an even non-constant literal", at)
        input_vars.append(lit // 2)
    input_var_set = set(input_vars)
    if len(input_var_set) != n_in:
        raise AigerParseError("duplicate input variable", at)

    out_lits = []
    for _ in range(n_out):
        line, at = next_line()
        try:
            out_lits.append((int(line), at))
        except ValueError:
            raise AigerParseError(f"bad output literal {line!r}", at) from None

    gate_fanins: dict[int, tuple[tuple[int, bool], tuple[int, bool]]] = {}
    gate_line: dict[int, int] = {}
    for _ in range(n_and):
        line, at = next_line()
        fields = line.split()
        if len(fields) != 3:
            raise AigerParseError(f"AND line needs three literals, got {line!r}", at)
        try:
            lhs, rhs0, rhs1 = (int(f) for f in fields)
        except ValueError:
            raise AigerParseError(f"bad AND literals {line!r}", at) from None
        if lhs < 2 or lhs % 2:
            raise AigerParseError(f"AND literal {lhs} must be an even non-constant literal", at)
        var = lhs // 2
        if var in gate_fanins or var in input_var_set:
            raise AigerParseError(f"variable {var} defined twice", at)
        if rhs0 < 2 or rhs1 < 2:
            raise AigerParseError("constant AND fanins unsupported", at)
        gate_fanins[var] = ((rhs0 // 2, bool(rhs0 % 2)), (rhs1 // 2, bool(rhs1 % 2)))
        gate_line[var] = at

    known = input_var_set | set(gate_fanins)
    for var, ((v0, _), (v1, _)) in gate_fanins.items():
        for ref in (v0, v1):
            if ref not in known:
                raise AigerParseError(f"dangling literal {2 * ref} in AND node", gate_line[var])
            if ref > max_var:
                raise AigerParseError(f"literal {2 * ref} above declared maximum", gate_line[var])

    # relabel: inputs in file order, then gates in Kahn order on original vars
    new_id = {var: i + 1 for i, var in enumerate(input_vars)}
    raw_fanins = {var: (f0[0], f1[0]) for var, (f0, f1) in gate_fanins.items()}
    try:
        gate_order = _kahn_order(raw_fanins)
    except StructureError as exc:
        raise AigerParseError(str(exc), 1) from None
    nodes = []
    for var in gate_order:
        new_id[var] = n_in + 1 + len(nodes)
        (v0, i0), (v1, i1) = gate_fanins[var]
        nodes.append(AndNode(new_id[v0], i0, new_id[v1], i1).normalized())

    out_lit, out_at = out_lits[output_index]
    if out_lit in (0, 1):
        if gate_fanins:
            raise AigerParseError("constant output on a graph with AND nodes unsupported", out_at)
        output = (CONST_DRIVER, out_lit == 1)
    else:
        var = out_lit // 2
        if var not in known:
            raise AigerParseError(f"dangling output literal {out_lit}", out_at)
        output = (new_id[var], bool(out_lit % 2))

    g = Aig(n_in, tuple(nodes), output)
    problems = validate(g)
    if problems:
        raise AigerParseError("; ".join(problems), 1)
    return g


def aag_output_count(text: str) -> int:
    """Number of outputs declared in an ASCII AIGER header."""
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped:
            parts = stripped.split()
            if len(parts) != 6 or parts[0] != "aag":
                raise AigerParseError(f"malformed header {stripped!r}", lineno)
            return int(parts[4])
    raise AigerParseError("empty file", 1)
