"""Shared random-instance builders for the test suite."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import sparse

from twintree.clustering import ClusterTree, tree_from_partitions
from twintree.digraph import WeightedDigraph
from twintree.filtration import Filtration, build_filtration


def random_nested_partitions(rng: np.random.Generator, n: int,
                             sizes: list[int]) -> list[list[frozenset[int]]]:
    """Nested random partitions of range(n), coarsest first.

    sizes must be strictly increasing with sizes[-1] <= n.  Blocks are
    contiguous runs of a random permutation; coarser levels keep a
    subset of the finer level's cut points, which guarantees nesting.
    """
    perm = rng.permutation(n)
    cut_lists = []
    cuts = sorted(int(c) for c in
                  rng.choice(np.arange(1, n), size=sizes[-1] - 1,
                             replace=False))
    cut_lists.append(cuts)
    prev = cuts
    for k in reversed(sizes[:-1]):
        kept = sorted(int(c) for c in
                      rng.choice(prev, size=k - 1, replace=False))
        cut_lists.insert(0, kept)
        prev = kept
    partitions = []
    for cl in cut_lists:
        edges = [0] + cl + [n]
        partitions.append([frozenset(int(perm[i]) for i in range(a, b))
                           for a, b in zip(edges, edges[1:])])
    return partitions


def random_tree(rng: np.random.Generator, n: int,
                sizes: list[int]) -> ClusterTree:
    return tree_from_partitions(
        range(n), random_nested_partitions(rng, n, sizes))


def random_filtration(rng: np.random.Generator, n_leaves: int,
                      sizes: list[int],
                      weights: str = "uniform") -> Filtration:
    """Random filtration; 'integer' weights are random exact rationals."""
    tree = random_tree(rng, n_leaves, sizes)
    if weights == "uniform":
        return build_filtration(tree, "uniform")
    if weights != "integer":
        raise ValueError(weights)
    raw = [int(a) for a in rng.integers(1, 10, size=n_leaves)]
    total = sum(raw)
    vertex_mass = {v: Fraction(raw[v], total) for v in range(n_leaves)}
    node_mass = {nid: sum((vertex_mass[v] for v in node.members),
                          Fraction(0))
                 for nid, node in tree.nodes.items()}
    return build_filtration(tree, weights=node_mass)


def random_digraph(rng: np.random.Generator, n: int, density: float = 0.2,
                   weighted: bool = True) -> WeightedDigraph:
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    W = np.where(mask, rng.uniform(0.5, 2.0, (n, n)) if weighted else 1.0,
                 0.0)
    return WeightedDigraph(sparse.csr_array(W))


def random_leaf_function(rng: np.random.Generator, filt: Filtration):
    """Random leaf-measurable piecewise constant with rational values."""
    from twintree.basis import PiecewiseConstant
    bps = [Fraction(0)]
    for leaf in filt.leaves():
        bps.append(leaf.b)
    vals = [Fraction(int(a), 8) for a in rng.integers(-40, 41,
                                                      size=len(bps) - 1)]
    return PiecewiseConstant(bps, vals)
