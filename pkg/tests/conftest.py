"""Shared generators for randomized tests (seeded, reproducible)."""

from fractions import Fraction

import numpy as np

import ift
from ift import InfoFlowTree
from ift.rng import generator

#: Rational correlation grid used by the exact-mode random corpora.
EIGHTHS = tuple(Fraction(k, 8) for k in range(-8, 9))
NONNEG_EIGHTHS = tuple(Fraction(k, 8) for k in range(0, 9))


def rng_for(seed, *path) -> np.random.Generator:
    return generator(seed, *path)


def random_rational_tree(rng, n_vertices, choices=EIGHTHS) -> InfoFlowTree:
    """Random recursive tree with correlations drawn from a rational grid."""
    pairs = [(int(rng.integers(0, i)), i) for i in range(1, n_vertices)]
    edges = tuple((a, b, choices[int(rng.integers(0, len(choices)))]) for a, b in pairs)
    return InfoFlowTree(tuple(range(n_vertices)), edges)


def random_rational_star(rng, m, choices=EIGHTHS) -> InfoFlowTree:
    """Star with center 0 and m leaves (explicit designation covers m = 1)."""
    edges = tuple(
        (0, i, choices[int(rng.integers(0, len(choices)))]) for i in range(1, m + 1)
    )
    return InfoFlowTree(tuple(range(m + 1)), edges, leaves=tuple(range(1, m + 1)))


def random_rational_simple_caterpillar(rng, t) -> InfoFlowTree:
    """Simple caterpillar: spine 0..t-1 (nonnegative rho), leaf t+i on spine i."""
    edges = []
    for i in range(t - 1):
        edges.append((i, i + 1, NONNEG_EIGHTHS[int(rng.integers(0, len(NONNEG_EIGHTHS)))]))
    for i in range(t):
        edges.append((i, t + i, EIGHTHS[int(rng.integers(0, len(EIGHTHS)))]))
    return InfoFlowTree(tuple(range(2 * t)), tuple(edges))


def random_float_simple_caterpillar(rng, t) -> InfoFlowTree:
    """Float-mode simple caterpillar: spine rho ~ U[0,1], leaf rho ~ U[-1,1]."""
    edges = []
    for i in range(t - 1):
        edges.append((i, i + 1, float(rng.uniform(0.0, 1.0))))
    for i in range(t):
        edges.append((i, t + i, float(rng.uniform(-1.0, 1.0))))
    return InfoFlowTree(tuple(range(2 * t)), tuple(edges))


def apply_random_rule(rng, tree) -> InfoFlowTree:
    """Apply one randomly chosen applicable rewrite (rational mode)."""
    candidates = ["normalize", "binary"]
    internal = [v for v in tree.vertices if not tree.is_leaf(v)]
    if internal:
        candidates += ["negate", "split_vertex"]
    deg2 = [v for v in internal if tree.degree(v) == 2]
    if deg2:
        candidates.append("merge")
    if tree.edges:
        candidates.append("split_edge")
    unit_internal = [
        (u, v)
        for u, v, rho in tree.edges
        if rho == 1 and not tree.is_leaf(u) and not tree.is_leaf(v)
    ]
    if unit_internal:
        candidates.append("contract")
    if ift.is_caterpillar(tree) and len(tree.leaves) >= 2:
        candidates.append("simple-caterpillar")
    rule = candidates[int(rng.integers(0, len(candidates)))]
    if rule == "normalize":
        return ift.normalize_internal_signs(tree)[0]
    if rule == "binary":
        return ift.to_binary(tree)[0]
    if rule == "simple-caterpillar":
        return ift.to_simple_caterpillar(tree)[0]
    if rule == "negate":
        return ift.negate_internal_vertex(tree, internal[int(rng.integers(0, len(internal)))])
    if rule == "merge":
        return ift.merge_degree2(tree, deg2[int(rng.integers(0, len(deg2)))])
    if rule == "split_edge":
        u, v, rho = tree.edges[int(rng.integers(0, len(tree.edges)))]
        r1, r2 = [(rho, Fraction(1)), (Fraction(1), rho), (Fraction(-1), -rho)][
            int(rng.integers(0, 3))
        ]
        return ift.split_edge(tree, (u, v), r1, r2)
    if rule == "contract":
        pair = unit_internal[int(rng.integers(0, len(unit_internal)))]
        return ift.contract_unit_subgraph(tree, set(pair))
    if rule == "split_vertex":
        v = internal[int(rng.integers(0, len(internal)))]
        m = int(rng.integers(1, tree.degree(v) + 2))
        attach = {n: int(rng.integers(1, m + 1)) for n in tree.neighbors(v)}
        return ift.split_vertex(tree, v, m, attach)
    raise AssertionError(rule)
