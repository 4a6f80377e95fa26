"""Packed truth tables for n-input Boolean functions.

A table stores the 2^n output bits of a function as one Python int:
bit k is the output for the input assignment whose binary expansion is k,
with input 1 as the least significant bit.  Hex serialization is
most-significant-digit first, so the 3-input projections are "AA", "CC",
"F0" and interoperate with the usual hex truth-table conventions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

MAX_INPUTS = 16

# Connection types for a new AND node over parents (p1, p2):
#   1 -> ( p1,  p2)    2 -> (~p1,  p2)    3 -> ( p1, ~p2)    4 -> (~p1, ~p2)
CONNECTION_TYPES = (1, 2, 3, 4)


def table_width(n: int) -> int:
    return 1 << n


def table_mask(n: int) -> int:
    return (1 << (1 << n)) - 1


def hex_width(n: int) -> int:
    # one digit minimum: n=1 tables have only 2 bits
    return max(1, (1 << n) // 4)


@dataclass(frozen=True)
class TruthTable:
    """Value-semantic truth table of an n-input function."""

    n: int
    bits: int

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_INPUTS:
            raise ValueError(f"input count {self.n} outside 1..{MAX_INPUTS}")
        if not 0 <= self.bits <= table_mask(self.n):
            raise ValueError("bit vector wider than 2^n")

    @property
    def width(self) -> int:
        return 1 << self.n

    @property
    def mask(self) -> int:
        return (1 << (1 << self.n)) - 1

    @classmethod
    def from_hex(cls, text: str, n: int) -> "TruthTable":
        if not 1 <= n <= MAX_INPUTS:
            raise ValueError(f"input count {n} outside 1..{MAX_INPUTS}")
        want = hex_width(n)
        if len(text) != want:
            raise ValueError(f"hex truth table {text!r} must have {want} digits for n={n}")
        try:
            bits = int(text, 16)
        except ValueError:
            raise ValueError(f"invalid hex truth table {text!r}") from None
        if bits > table_mask(n):
            raise ValueError(f"hex truth table {text!r} does not fit a {1 << n}-row table")
        return cls(n, bits)

    def to_hex(self) -> str:
        return format(self.bits, "0{}X".format(hex_width(self.n)))

    def row(self, k: int) -> int:
        if not 0 <= k < self.width:
            raise ValueError(f"row index {k} outside table of width {self.width}")
        return (self.bits >> k) & 1

    def rows(self) -> tuple[int, ...]:
        return tuple((self.bits >> k) & 1 for k in range(self.width))

    def is_constant(self) -> bool:
        return self.bits == 0 or self.bits == self.mask

    def negation_key(self) -> int:
        """Canonical representative of {t, ~t}, used for up-to-negation dedup."""
        flipped = self.bits ^ self.mask
        return self.bits if self.bits <= flipped else flipped

    def __invert__(self) -> "TruthTable":
        return TruthTable(self.n, self.bits ^ self.mask)


@dataclass(frozen=True)
class RowPermutation:
    """Bijection over the 2^n row indices, stored as an index array."""

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        size = len(self.mapping)
        if sorted(self.mapping) != list(range(size)):
            raise ValueError("row permutation is not a bijection on 0..size-1")

    @classmethod
    def identity(cls, size: int) -> "RowPermutation":
        return cls(tuple(range(size)))

    def inverse(self) -> "RowPermutation":
        inv = [0] * len(self.mapping)
        for k, v in enumerate(self.mapping):
            inv[v] = k
        return RowPermutation(tuple(inv))

    def compose(self, other: "RowPermutation") -> "RowPermutation":
        """self after other: result(k) = other(self(k)) row lookup order."""
        if len(self.mapping) != len(other.mapping):
            raise ValueError("permutation size mismatch")
        return RowPermutation(tuple(other.mapping[v] for v in self.mapping))

    def __len__(self) -> int:
        return len(self.mapping)


def projection_bits(i: int, n: int) -> int:
    """Raw bit pattern of input i over all 2^n assignments."""
    if not 1 <= i <= n:
        raise ValueError(f"input ordinal {i} outside 1..{n}")
    half = 1 << (i - 1)
    chunk = ((1 << half) - 1) << half
    bits = 0
    for base in range(0, 1 << n, half << 1):
        bits |= chunk << base
    return bits


def input_projection(i: int, n: int) -> TruthTable:
    """Truth table of primary input i: row k = (k >> (i-1)) & 1."""
    return TruthTable(n, projection_bits(i, n))


def and_bits(a_bits: int, b_bits: int, eps: int, mask: int) -> int:
    """AND of two raw tables with the polarity pattern of connection type eps."""
    if eps == 1:
        return a_bits & b_bits
    if eps == 2:
        return (a_bits ^ mask) & b_bits
    if eps == 3:
        return a_bits & (b_bits ^ mask)
    if eps == 4:
        return (a_bits ^ mask) & (b_bits ^ mask)
    raise ValueError(f"connection type {eps} outside 1..4")


def tt_and(a: TruthTable, b: TruthTable, eps: int = 1) -> TruthTable:
    if a.n != b.n:
        raise ValueError(f"width mismatch: {a.n} vs {b.n} inputs")
    return TruthTable(a.n, and_bits(a.bits, b.bits, eps, a.mask))


def tt_not(a: TruthTable) -> TruthTable:
    return ~a


def permute_rows(t: TruthTable, sigma: RowPermutation | Sequence[int]) -> TruthTable:
    mapping = sigma.mapping if isinstance(sigma, RowPermutation) else tuple(sigma)
    if len(mapping) != t.width:
        raise ValueError(f"permutation over {len(mapping)} rows, table has {t.width}")
    bits = 0
    src = t.bits
    for k, v in enumerate(mapping):
        bits |= ((src >> v) & 1) << k
    return TruthTable(t.n, bits)


def distance(a: TruthTable, b: TruthTable) -> int:
    """Hamming distance between two tables of equal width."""
    if a.n != b.n:
        raise ValueError(f"width mismatch: {a.n} vs {b.n} inputs")
    return (a.bits ^ b.bits).bit_count()


def neg_aware_distance(a: TruthTable, b: TruthTable) -> int:
    """min of the distances to b and to its complement."""
    h = distance(a, b)
    return min(h, a.width - h)
