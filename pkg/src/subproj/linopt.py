"""Linear optimization over B(f) and over its faces given a chain of tight sets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Chain, SubmodularFunction


@dataclass(frozen=True)
class GreedyOrder:
    """Element permutation used by greedy, with chain block boundaries."""

    permutation: tuple
    block_bounds: tuple  # cumulative sizes of chain blocks (empty if unrestricted)


def _greedy_along(f: SubmodularFunction, order) -> np.ndarray:
    """x(e_j) = f(U_j) - f(U_{j-1}) along the given element order."""
    if f.kind == "cardinality":
        # marginal at position j depends only on j, not on which elements precede
        x = np.empty(f.n)
        x[np.asarray(order, dtype=int)] = f.marginals()
        return x
    x = np.empty(f.n)
    prefix = set()
    prev = 0.0
    for e in order:
        prefix.add(e)
        cur = f.value(prefix)
        x[e] = cur - prev
        prev = cur
    return x


def edmonds_greedy(f: SubmodularFunction, c, sense: str = "max"):
    """Optimize a linear objective over B(f) by the greedy algorithm.

    Sorts elements by cost (descending for max), breaking ties by element
    index, and assigns marginal gains along the resulting order.  Returns the
    optimal vertex together with the order that produced it.
    """
    c = np.asarray(c, dtype=float)
    if sense == "min":
        c = -c
    elif sense != "max":
        raise ValueError("sense must be 'max' or 'min'")
    order = np.lexsort((np.arange(f.n), -c))
    x = _greedy_along(f, order)
    return x, GreedyOrder(tuple(int(e) for e in order), ())


def face_greedy(f: SubmodularFunction, c, chain: Optional[Chain], sense: str = "max") -> np.ndarray:
    """Greedy restricted to the face F(chain) = {x in B(f): x(S_i) = f(S_i)}.

    A single stable sort keyed by (chain block index, -cost, element index)
    realizes both greedy conditions: the order respects the chain, and within
    each block costs are nonincreasing.
    """
    if chain is None or len(chain) == 0:
        return edmonds_greedy(f, c, sense)[0]
    c = np.asarray(c, dtype=float)
    if sense == "min":
        c = -c
    elif sense != "max":
        raise ValueError("sense must be 'max' or 'min'")
    chain = chain.with_ground_set(f.n)
    block_of = np.empty(f.n, dtype=int)
    for i, B in enumerate(chain.blocks()):
        for e in B:
            block_of[e] = i
    order = np.lexsort((np.arange(f.n), -c, block_of))
    return _greedy_along(f, order)


def enumerate_vertices(f: SubmodularFunction, chain: Optional[Chain] = None) -> list:
    """All vertices of F(chain) (of B(f) if chain is None) by brute force.

    Runs greedy over every ordering consistent with the chain and
    deduplicates; only feasible for n <= 8.
    """
    if f.n > 8:
        raise ValueError("vertex enumeration limited to n <= 8")
    if chain is None:
        blocks = [frozenset(range(f.n))]
    else:
        blocks = chain.with_ground_set(f.n).blocks()
    seen = {}
    for parts in itertools.product(*(itertools.permutations(sorted(B)) for B in blocks)):
        order = [e for part in parts for e in part]
        x = _greedy_along(f, order)
        seen[tuple(np.round(x, 10))] = x
    return list(seen.values())
