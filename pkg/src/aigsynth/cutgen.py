"""Cut extraction from benchmark graphs and training-set construction.

A cut is grown downward from a root AND node: the frontier (leaf set) starts
at the root's fanins and random non-input leaves are repeatedly expanded into
their fanins until the frontier reaches the requested size.  After every
expansion the leaf property is restored: no leaf may have a fanin that is
itself a leaf (such a leaf moves inside the cut and its remaining fanin joins
the frontier).  The multi-cut variant stops one short and branches once per
expandable leaf, yielding several sibling cuts.

Extracted cuts become training samples: leaves are relabeled 1..n by
ascending host id, interior nodes by deterministic topological order, and
each interior node becomes an action triple.  Every emitted sample must
replay through the synthesis environment to a successful terminal state.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .aig import Aig, AigerParseError, _kahn_order, aag_read
from .env import (
    Action,
    ConstantTargetError,
    SynthState,
    TrivialTarget,
    new_state,
    step,
)
from .truthtable import (
    RowPermutation,
    TruthTable,
    and_bits,
    permute_rows,
    projection_bits,
    table_mask,
)

DEFAULT_SHARD_SIZE = 10000


class CutSampleError(ValueError):
    """Cut cannot be expressed or replayed as a legal action sequence."""


@dataclass(frozen=True)
class Cut:
    root: int
    leaves: frozenset[int]
    internal: frozenset[int]


@dataclass(frozen=True)
class TrainingSample:
    n: int
    target_hex: str
    actions: tuple[Action, ...]

    def tensor_entries(self) -> tuple[tuple[int, int, int], ...]:
        """Sparse one-entries of the 4xNxN action tensor."""
        return tuple((a.eps, a.p1, a.p2) for a in self.actions)


def _parents(g: Aig, node_id: int) -> tuple[int, ...]:
    nd = g.node(node_id)
    if nd.fanin0 == nd.fanin1:
        return (nd.fanin0,)
    return (nd.fanin0, nd.fanin1)


def preserve_leaf_property(
    leaves: set[int], internal: set[int], g: Aig
) -> tuple[set[int], set[int]]:
    """Move leaves whose fanin is also a leaf inside the cut, to fixpoint."""
    changed = True
    while changed:
        changed = False
        for leaf in sorted(leaves):
            if leaf not in leaves or not g.is_and(leaf):
                continue
            parents = _parents(g, leaf)
            if any(p in leaves for p in parents):
                leaves.discard(leaf)
                internal.add(leaf)
                for p in parents:
                    if p not in leaves and p not in internal:
                        leaves.add(p)
                changed = True
    return leaves, internal


def _expand(node: int, leaves: set[int], internal: set[int], g: Aig) -> None:
    """Algorithm step: replace a frontier node by its fanins, then repair."""
    leaves.discard(node)
    internal.add(node)
    for p in _parents(g, node):
        if p not in leaves and p not in internal:
            leaves.add(p)
    preserve_leaf_property(leaves, internal, g)


def _expandable(leaves: set[int], g: Aig) -> list[int]:
    return sorted(l for l in leaves if g.is_and(l))


def extract_cut(g: Aig, root: int, n: int, rng: random.Random) -> Cut | None:
    """Grow one cut with exactly n leaves; None when the cone is exhausted."""
    if not g.is_and(root):
        raise ValueError(f"cut root {root} is not an AND node")
    if n < 2:
        raise ValueError("cuts need at least two leaves")
    leaves = set(_parents(g, root))
    internal = {root}
    preserve_leaf_property(leaves, internal, g)
    while len(leaves) < n:
        candidates = _expandable(leaves, g)
        if not candidates:
            return None
        _expand(rng.choice(candidates), leaves, internal, g)
    return Cut(root, frozenset(leaves), frozenset(internal))


def extract_multi_cuts(g: Aig, root: int, n: int, rng: random.Random) -> list[Cut]:
    """Branching variant: expand to n-1 leaves, then fork once per leaf."""
    if not g.is_and(root):
        raise ValueError(f"cut root {root} is not an AND node")
    if n < 2:
        raise ValueError("cuts need at least two leaves")
    leaves = set(_parents(g, root))
    internal = {root}
    preserve_leaf_property(leaves, internal, g)
    if len(leaves) == n:
        return [Cut(root, frozenset(leaves), frozenset(internal))]
    while len(leaves) < n - 1:
        candidates = _expandable(leaves, g)
        if not candidates:
            return []
        _expand(rng.choice(candidates), leaves, internal, g)
    cuts = []
    seen = set()
    for leaf in sorted(leaves):
        if not g.is_and(leaf):
            continue
        branch_leaves = set(leaves)
        branch_internal = set(internal)
        _expand(leaf, branch_leaves, branch_internal, g)
        if len(branch_leaves) != n:
            continue
        key = (frozenset(branch_leaves), frozenset(branch_internal))
        if key in seen:
            continue
        seen.add(key)
        cuts.append(Cut(root, key[0], key[1]))
    return cuts


def cut_to_sample(g: Aig, cut: Cut) -> TrainingSample:
    """Relabel a cut into a replayable action sequence with a local target."""
    n = len(cut.leaves)
    new_id = {host: i + 1 for i, host in enumerate(sorted(cut.leaves))}
    member = cut.leaves | cut.internal
    fanins = {}
    for node in cut.internal:
        nd = g.node(node)
        if nd.fanin0 not in member or nd.fanin1 not in member:
            raise CutSampleError(f"interior node {node} reads outside the cut")
        fanins[node] = (nd.fanin0, nd.fanin1)
    order = _kahn_order(fanins)
    for pos, node in enumerate(order):
        new_id[node] = n + 1 + pos

    mask = table_mask(n)
    tables = [projection_bits(i, n) for i in range(1, n + 1)]
    actions = []
    for node in order:
        nd = g.node(node)
        first = (new_id[nd.fanin0], nd.inv0)
        second = (new_id[nd.fanin1], nd.inv1)
        if first[0] == second[0]:
            raise CutSampleError(f"interior node {node} has duplicate fanins")
        if first[0] > second[0]:
            first, second = second, first
        eps = {(False, False): 1, (True, False): 2, (False, True): 3, (True, True): 4}[
            (first[1], second[1])
        ]
        actions.append(Action(eps, first[0], second[0]))
        a = tables[first[0] - 1] ^ (mask if first[1] else 0)
        b = tables[second[0] - 1] ^ (mask if second[1] else 0)
        tables.append(a & b)

    target_hex = TruthTable(n, tables[-1]).to_hex()
    sample = TrainingSample(n, target_hex, tuple(actions))
    replay_sample(sample)
    return sample


@dataclass(frozen=True)
class ReplayResult:
    state: SynthState
    consumed: int
    output_inverted: bool


def replay_sample(sample: TrainingSample) -> ReplayResult:
    """Run the sample's actions through the environment until success.

    Replay may finish before the action list is exhausted: some host graphs
    contain redundant suffixes whose intermediate node already realizes the
    target.  Failing to reach a successful terminal state at all raises.
    """
    target = TruthTable.from_hex(sample.target_hex, sample.n)
    try:
        state = new_state(sample.n, target)
    except (TrivialTarget, ConstantTargetError) as exc:
        raise CutSampleError(f"degenerate target {sample.target_hex}: {exc}") from exc
    for i, action in enumerate(sample.actions):
        try:
            outcome = step(state, action)
        except ValueError as exc:
            raise CutSampleError(f"action {i} illegal during replay: {exc}") from exc
        state = outcome.state
        if outcome.terminal:
            return ReplayResult(state, i + 1, outcome.output_inverted)
    raise CutSampleError("replay finished without matching the target")


def sample_tables(sample: TrainingSample) -> tuple[list[TruthTable], TruthTable]:
    """Node tables (inputs then gates, id order) plus the target table."""
    n = sample.n
    mask = table_mask(n)
    bits = [projection_bits(i, n) for i in range(1, n + 1)]
    for a in sample.actions:
        bits.append(and_bits(bits[a.p1 - 1], bits[a.p2 - 1], a.eps, mask))
    tables = [TruthTable(n, b) for b in bits]
    return tables, TruthTable.from_hex(sample.target_hex, n)


def augment_negate(sample: TrainingSample) -> TrainingSample:
    """Same construction, complemented target (output polarity is free)."""
    target = TruthTable.from_hex(sample.target_hex, sample.n)
    return TrainingSample(sample.n, (~target).to_hex(), sample.actions)


def augment_permute(
    sample: TrainingSample, sigma: RowPermutation
) -> tuple[list[TruthTable], TruthTable]:
    """Row-permuted view of the sample's tables; actions are untouched."""
    tables, target = sample_tables(sample)
    return [permute_rows(t, sigma) for t in tables], permute_rows(target, sigma)


def sample_to_json(sample: TrainingSample) -> str:
    return json.dumps(
        {
            "n": sample.n,
            "target": sample.target_hex,
            "actions": [[a.eps, a.p1, a.p2] for a in sample.actions],
        },
        separators=(",", ":"),
    )


def sample_from_json(line: str) -> TrainingSample:
    raw = json.loads(line)
    return TrainingSample(
        raw["n"], raw["target"], tuple(Action(e, p1, p2) for e, p1, p2 in raw["actions"])
    )


def _root_rng(seed: int, circuit_index: int, root: int) -> random.Random:
    return random.Random((seed * 2654435761 + circuit_index * 1000003 + root) & 0x7FFFFFFFFFFF)


def build_dataset(
    circuits: Sequence[str | Path],
    n: int,
    per_root: int,
    seed: int,
    out_dir: str | Path,
    shard_size: int = DEFAULT_SHARD_SIZE,
    max_samples: int | None = None,
) -> dict:
    """Extract, dedupe, and shard training samples; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_len: dict[int, list[str]] = {}
    seen: set[tuple[str, tuple[Action, ...]]] = set()
    sources = []
    total = 0
    gate_total = 0
    done = False
    for ci, path in enumerate(circuits):
        entry = {"path": str(path), "samples": 0, "error": None}
        try:
            g = aag_read(Path(path).read_text(encoding="utf-8"))
        except (OSError, AigerParseError) as exc:
            entry["error"] = str(exc)
            sources.append(entry)
            continue
        for root in range(g.n_inputs + 1, g.n_nodes + 1):
            rng = _root_rng(seed, ci, root)
            for _ in range(per_root):
                for cut in extract_multi_cuts(g, root, n, rng):
                    try:
                        sample = cut_to_sample(g, cut)
                    except CutSampleError:
                        continue
                    key = (sample.target_hex, sample.actions)
                    if key in seen:
                        continue
                    seen.add(key)
                    by_len.setdefault(len(sample.actions), []).append(sample_to_json(sample))
                    entry["samples"] += 1
                    total += 1
                    gate_total += len(sample.actions)
                    if max_samples is not None and total >= max_samples:
                        done = True
                        break
                if done:
                    break
            if done:
                break
        sources.append(entry)
        if done:
            break

    for length in sorted(by_len):
        lines = by_len[length]
        for j in range(0, len(lines), shard_size):
            shard_path = out / f"len{length}_shard{j // shard_size}.jsonl"
            shard_path.write_text("\n".join(lines[j : j + shard_size]) + "\n", encoding="utf-8")

    manifest = {
        "samples": total,
        "mean_and_nodes": (gate_total / total) if total else 0.0,
        "seed": seed,
        "sources": sources,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest
