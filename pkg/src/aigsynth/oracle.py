"""Exhaustive minimal-size synthesis for small input counts.

Iterative deepening over the gate count: the depth-k pass enumerates gate
sequences in flat-action order and accepts the first sequence whose final
gate matches the target up to negation.  Failed shallower passes certify
minimality.  Sound prunings keep the search tractable:

  * every gate's table must be new up to negation (duplicates never help);
  * constant tables are skipped (their fanouts only duplicate existing ones);
  * a table matching the target before the final gate cannot be completed,
    because the final gate would then duplicate it;
  * gates that cannot all acquire fanout by the end are abandoned early
    (dropping a fanout-free gate would yield a shorter solution);
  * consecutive gates that do not depend on each other must appear in
    ascending (eps, p1, p2) order, the canonical topological form.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .aig import Aig, make_aig
from .env import Action
from .truthtable import TruthTable, input_projection, projection_bits, table_mask

DEFAULT_K_MAX = 8

_EPS_INVERSIONS = {1: (False, False), 2: (True, False), 3: (False, True), 4: (True, True)}


@dataclass(frozen=True)
class OracleResult:
    size: int
    witness: Aig
    explored: int


def _witness_from_gates(n: int, gates: list[tuple[int, int, int]], inverted: bool) -> Aig:
    nodes = []
    for eps, p1, p2 in gates:
        inv0, inv1 = _EPS_INVERSIONS[eps]
        nodes.append((p1, inv0, p2, inv1))
    driver = n + len(gates) if gates else 0
    if not gates:
        raise ValueError("witness requires at least one gate")
    return make_aig(n, nodes, (driver, inverted))


def _search_depth(n: int, target_bits: int, k: int, counter: list[int]) -> list[tuple[int, int, int]] | None:
    """First gate sequence of length exactly k realizing the target, or None."""
    mask = table_mask(n)
    target_key = min(target_bits, target_bits ^ mask)
    bits = [projection_bits(i, n) for i in range(1, n + 1)]
    keys = {min(b, b ^ mask) for b in bits}
    gates: list[tuple[int, int, int]] = []
    out_deg = [0] * (n + k + 1)  # 1-based ids; inputs never tracked

    def dfs(j: int, prev: tuple[int, int, int] | None, unused: int) -> bool:
        r = k - j
        v = n + j
        counter[0] += 1
        for eps in (1, 2, 3, 4):
            for p1 in range(1, v):
                a = bits[p1 - 1]
                if eps in (2, 4):
                    a ^= mask
                for p2 in range(p1 + 1, v + 1):
                    b = bits[p2 - 1]
                    if eps in (3, 4):
                        b ^= mask
                    res = a & b
                    if res == 0 or res == mask:
                        continue
                    key = min(res, res ^ mask)
                    if key in keys:
                        continue
                    is_target = key == target_key
                    if is_target != (r == 1):
                        continue
                    triple = (eps, p1, p2)
                    if prev is not None and p2 != v and triple <= prev:
                        continue
                    consumed = sum(1 for p in (p1, p2) if p > n and out_deg[p] == 0)
                    u_after = unused - consumed + 1
                    if u_after > r:
                        continue
                    if r == 1:
                        gates.append(triple)
                        return True
                    gates.append(triple)
                    bits.append(res)
                    keys.add(key)
                    out_deg[p1] += 1
                    out_deg[p2] += 1
                    if dfs(j + 1, triple, u_after):
                        return True
                    out_deg[p1] -= 1
                    out_deg[p2] -= 1
                    keys.discard(key)
                    bits.pop()
                    gates.pop()
        return False

    if dfs(0, None, 0):
        return gates
    return None


def exact_minimal(
    target: TruthTable, k_max: int = DEFAULT_K_MAX, cache: dict | None = None
) -> OracleResult | None:
    """Minimal realization of the target, or None when k_max is insufficient.

    Constant targets get the degenerate constant-output form at size 0;
    projection targets get the zero-gate pass-through at size 0.
    """
    n = target.n
    if target.is_constant():
        return OracleResult(0, Aig(n, (), (0, target.bits != 0)), 0)
    tkey = target.negation_key()
    for i in range(1, n + 1):
        proj = input_projection(i, n)
        if proj.negation_key() == tkey:
            return OracleResult(0, make_aig(n, [], (i, proj.bits != target.bits)), 0)

    cache_key = f"{n}:{target.to_hex()}"
    if cache is not None and cache_key in cache:
        size, raw_gates, inverted = cache[cache_key]
        gates = [tuple(g) for g in raw_gates]
        return OracleResult(size, _witness_from_gates(n, gates, inverted), 0)

    counter = [0]
    for k in range(1, k_max + 1):
        gates = _search_depth(n, target.bits, k, counter)
        if gates is not None:
            final_bits = _replay_bits(n, gates)
            inverted = final_bits != target.bits
            if cache is not None:
                cache[cache_key] = [k, [list(g) for g in gates], inverted]
            return OracleResult(k, _witness_from_gates(n, gates, inverted), counter[0])
    return None


def _replay_bits(n: int, gates: list[tuple[int, int, int]]) -> int:
    mask = table_mask(n)
    bits = [projection_bits(i, n) for i in range(1, n + 1)]
    for eps, p1, p2 in gates:
        a = bits[p1 - 1]
        b = bits[p2 - 1]
        if eps in (2, 4):
            a ^= mask
        if eps in (3, 4):
            b ^= mask
        bits.append(a & b)
    return bits[-1]


def minimal_size_table(
    n: int, k_max: int = DEFAULT_K_MAX, cache: dict | None = None
) -> tuple[dict[str, int], list[str]]:
    """Exact minimal size for every n-input function; unsolved go to residual.

    Sizes are computed once per {t, ~t} pair (output polarity is free) and
    reported for both members.
    """
    if n > 3:
        raise ValueError("full enumeration supported for n <= 3 only")
    mask = table_mask(n)
    sizes: dict[str, int] = {}
    residual: list[str] = []
    class_size: dict[int, int | None] = {}
    for value in range(mask + 1):
        t = TruthTable(n, value)
        key = t.negation_key()
        if key not in class_size:
            result = exact_minimal(TruthTable(n, key), k_max, cache)
            class_size[key] = result.size if result is not None else None
        size = class_size[key]
        if size is None:
            residual.append(t.to_hex())
        else:
            sizes[t.to_hex()] = size
    return sizes, residual


def load_cache(path: str | os.PathLike) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (FileNotFoundError, json.JSONDecodeError):
        return {}


def save_cache(path: str | os.PathLike, cache: dict) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cache, fh, sort_keys=True)
