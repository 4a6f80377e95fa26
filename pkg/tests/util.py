"""Shared helpers for the test suite."""

from __future__ import annotations

import random

from aigsynth.aig import Aig, AndNode, make_aig


def fig1_aig() -> Aig:
    """Two-gate reference graph: (I1 & I2) feeding (I3 & ~and4), inverted output."""
    return make_aig(3, [(1, False, 2, False), (3, False, 4, True)], (5, True))


def fig3_aig() -> Aig:
    """Four-gate reference graph used by the cut pipeline tests.

    n5 = I1 & ~I2, n6 = I3 & n5, n7 = ~I3 & I4, n8 = n6 & ~n7, output ~n8.
    """
    nodes = [
        (1, False, 2, True),
        (3, False, 5, False),
        (3, True, 4, False),
        (6, False, 7, True),
    ]
    return make_aig(4, nodes, (8, True))


def random_aig(rng: random.Random, n_inputs: int, n_ands: int, recent_bias: float = 0.0) -> Aig:
    """Random normalized AIG; recent_bias > 0 skews fanins toward newer nodes."""
    nodes: list[AndNode] = []
    for k in range(n_ands):
        top = n_inputs + k

        def pick() -> int:
            if recent_bias and rng.random() < recent_bias and top > n_inputs:
                return rng.randint(max(1, top - n_inputs), top)
            return rng.randint(1, top)

        a = pick()
        b = pick()
        while b == a and top > 1:
            b = rng.randint(1, top)
        nodes.append(AndNode(a, rng.random() < 0.5, b, rng.random() < 0.5))
    driver = n_inputs + n_ands if n_ands else rng.randint(1, n_inputs)
    return make_aig(n_inputs, nodes, (driver, rng.random() < 0.5))
