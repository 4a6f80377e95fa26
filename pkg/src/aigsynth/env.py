"""Iterative AIG construction environment.

A state is the target table plus the tables of every node built so far
(inputs first).  Each step ANDs two existing nodes under one of four
fanin-polarity patterns, chosen from a flat 4*V*V action index space with
strictly upper-triangular parent pairs.  Actions whose result duplicates an
existing node table up to negation are masked out, and an episode ends
successfully when the newest table matches the target or its complement.
"""

from __future__ import annotations

from dataclasses import dataclass

from .aig import Aig, make_aig
from .truthtable import TruthTable, and_bits, input_projection

DEFAULT_MAX_NODES = 30


class ConstantTargetError(ValueError):
    """Raised for all-zero / all-one targets, which no AND node can realize."""


class TrivialTarget(Exception):
    """Target equals an input projection up to negation: zero gates suffice."""

    def __init__(self, input_id: int, inverted: bool):
        super().__init__(f"target is input {input_id} ({'inverted' if inverted else 'direct'})")
        self.input_id = input_id
        self.inverted = inverted


class IllegalActionError(ValueError):
    pass


@dataclass(frozen=True)
class Action:
    """Build a new AND node from parents p1 < p2 with polarity pattern eps."""

    eps: int
    p1: int
    p2: int

    def __post_init__(self) -> None:
        if self.eps not in (1, 2, 3, 4):
            raise ValueError(f"connection type {self.eps} outside 1..4")
        if not 1 <= self.p1 < self.p2:
            raise ValueError(f"parents must satisfy 1 <= p1 < p2, got ({self.p1}, {self.p2})")


def encode_action(a: Action, v: int) -> int:
    """Flat index into the 4*V*V action tensor."""
    if a.p2 > v:
        raise ValueError(f"parent {a.p2} outside a {v}-node graph")
    return (a.eps - 1) * v * v + (a.p1 - 1) * v + (a.p2 - 1)


def decode_action(idx: int, v: int) -> Action:
    if not 0 <= idx < 4 * v * v:
        raise ValueError(f"index {idx} outside the 4*{v}*{v} tensor")
    eps, rest = divmod(idx, v * v)
    p1, p2 = divmod(rest, v)
    if p1 >= p2:
        raise ValueError(f"index {idx} decodes to parents ({p1 + 1}, {p2 + 1}), need p1 < p2")
    return Action(eps + 1, p1 + 1, p2 + 1)


@dataclass(frozen=True)
class SynthState:
    """Immutable snapshot: node tables, target, and the actions taken."""

    n: int
    target: TruthTable
    tables: tuple[TruthTable, ...]
    actions: tuple[Action, ...]
    keys: frozenset[int]

    @property
    def node_count(self) -> int:
        return len(self.tables)

    @property
    def and_count(self) -> int:
        return len(self.actions)


def new_state(n: int, target: TruthTable) -> SynthState:
    if target.n != n:
        raise ValueError(f"target has {target.n} inputs, environment has {n}")
    if target.is_constant():
        raise ConstantTargetError("constant target unsupported: no AND node realizes it")
    projections = tuple(input_projection(i, n) for i in range(1, n + 1))
    tkey = target.negation_key()
    for i, proj in enumerate(projections, start=1):
        if proj.negation_key() == tkey:
            raise TrivialTarget(i, inverted=(proj.bits != target.bits))
    return SynthState(
        n=n,
        target=target,
        tables=projections,
        actions=(),
        keys=frozenset(p.negation_key() for p in projections),
    )


def enumerate_candidates(s: SynthState) -> list[tuple[int, int]]:
    """All legal (flat index, result bits) pairs, ascending by index.

    A candidate is legal when its table is not equal, up to negation, to any
    table already in the state.
    """
    v = len(s.tables)
    mask = s.target.mask
    bits = [t.bits for t in s.tables]
    keys = s.keys
    per_eps: tuple[list[tuple[int, int]], ...] = ([], [], [], [])
    vv = v * v
    for p1 in range(v):
        a = bits[p1]
        na = a ^ mask
        base = p1 * v
        for p2 in range(p1 + 1, v):
            b = bits[p2]
            nb = b ^ mask
            offset = base + p2
            for eps_i, res in enumerate((a & b, na & b, a & nb, na & nb)):
                key = min(res, res ^ mask)
                if key not in keys:
                    per_eps[eps_i].append((eps_i * vv + offset, res))
    merged: list[tuple[int, int]] = []
    for lane in per_eps:
        merged.extend(lane)
    return merged


def legal_actions(s: SynthState) -> list[int]:
    """Flat indices of the legal actions, ascending; empty means dead end."""
    return [idx for idx, _ in enumerate_candidates(s)]


def candidate_bits(s: SynthState, a: Action) -> int:
    ta = s.tables[a.p1 - 1]
    tb = s.tables[a.p2 - 1]
    return and_bits(ta.bits, tb.bits, a.eps, s.target.mask)


@dataclass(frozen=True)
class StepOutcome:
    state: SynthState
    terminal: bool
    success: bool
    output_inverted: bool
    reward: float | None


def reward(t: int, max_nodes: int, success: bool) -> float:
    """Terminal reward: compactness-scaled on success, -1 on failure."""
    if not success:
        return -1.0
    return 1.0 - 0.5 * t / max_nodes


def step(s: SynthState, a: Action, max_nodes: int = DEFAULT_MAX_NODES) -> StepOutcome:
    v = len(s.tables)
    if a.p2 > v:
        raise IllegalActionError(f"parent {a.p2} outside the current {v}-node graph")
    new_bits = candidate_bits(s, a)
    mask = s.target.mask
    key = min(new_bits, new_bits ^ mask)
    if key in s.keys:
        raise IllegalActionError(f"action {a} rebuilds an existing table up to negation")
    new_table = TruthTable(s.n, new_bits)
    state = SynthState(
        n=s.n,
        target=s.target,
        tables=s.tables + (new_table,),
        actions=s.actions + (a,),
        keys=s.keys | {key},
    )
    if new_bits == s.target.bits:
        return StepOutcome(state, True, True, False, reward(state.and_count, max_nodes, True))
    if new_bits == s.target.bits ^ mask:
        return StepOutcome(state, True, True, True, reward(state.and_count, max_nodes, True))
    return StepOutcome(state, False, False, False, None)


_EPS_INVERSIONS = {1: (False, False), 2: (True, False), 3: (False, True), 4: (True, True)}


def state_to_aig(s: SynthState, output_inverted: bool) -> Aig:
    """Graph whose AND nodes mirror the state's action list."""
    if not s.actions:
        raise ValueError("state has no AND nodes; use the trivial-target solution instead")
    nodes = []
    for a in s.actions:
        inv0, inv1 = _EPS_INVERSIONS[a.eps]
        nodes.append((a.p1, inv0, a.p2, inv1))
    return make_aig(s.n, nodes, (s.node_count, output_inverted))


def trivial_aig(n: int, input_id: int, inverted: bool) -> Aig:
    """Zero-gate graph routing one input (optionally inverted) to the output."""
    return make_aig(n, [], (input_id, inverted))
