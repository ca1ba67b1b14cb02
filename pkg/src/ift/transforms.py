"""Leaf-law-preserving tree rewrites.

Two trees over the same leaf set are *equivalent* when their leaf variables
have identical joint distributions. Every operation here rewrites a tree
into an equivalent one:

* sign flips at an internal vertex (negate all incident correlations),
* the sign-normalization pass that makes every internal edge nonnegative,
* merging a degree-2 vertex (correlations multiply along the path),
* splitting an edge into two whose correlations multiply back,
* contracting a leafless connected subgraph whose edges all carry rho = 1,
* splitting a vertex into a rho = 1 path with edges re-attached,
* conversion to a rooted binary form (internal vertices have 2 children),
* conversion of a caterpillar to a simple caterpillar (one leaf per spine
  vertex, spine length >= 2).

Compound conversions return a TransformTrace of primitive steps; replaying
the trace on the input reproduces the output exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .core import (
    DEFAULT_MAX_VARS,
    Edge,
    InfoFlowTree,
    joint_distribution,
    require_valid,
)
from .errors import PreconditionError
from .numeric import FLOAT_TOL, RATIONAL, canonical_number, mode_of, one_of


# -----------------------------------------------------------------------------
# Traces
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class TraceStep:
    """One primitive rewrite: rule name, its arguments, and the edge diff."""

    rule: str
    args: dict
    edges_before: tuple[Edge, ...]
    edges_after: tuple[Edge, ...]


@dataclass(frozen=True)
class TransformTrace:
    """Ordered record of primitive steps; replayable via :func:`apply_trace`."""

    steps: tuple[TraceStep, ...]
    metadata: dict = field(default_factory=dict)


def _edge_diff(before: InfoFlowTree, after: InfoFlowTree):
    after_set = set(after.edges)
    before_set = set(before.edges)
    removed = tuple(e for e in before.edges if e not in after_set)
    added = tuple(e for e in after.edges if e not in before_set)
    return removed, added


def _step(rule: str, args: dict, before: InfoFlowTree, after: InfoFlowTree) -> TraceStep:
    removed, added = _edge_diff(before, after)
    return TraceStep(rule, args, removed, added)


def apply_step(tree: InfoFlowTree, step: TraceStep) -> InfoFlowTree:
    """Re-apply one recorded step."""
    a = step.args
    if step.rule == "negate_internal_vertex":
        return negate_internal_vertex(tree, a["vertex"])
    if step.rule == "merge_degree2":
        return merge_degree2(tree, a["vertex"])
    if step.rule == "split_edge":
        return split_edge(tree, tuple(a["edge"]), a["rho1"], a["rho2"])
    if step.rule == "contract_unit_subgraph":
        return contract_unit_subgraph(tree, a["vertices"])
    if step.rule == "split_vertex":
        return split_vertex(tree, a["vertex"], a["m"], a["attachment"])
    if step.rule == "prune_dangling_internal":
        return prune_dangling_internal(tree, a["vertex"])
    raise PreconditionError(f"unknown trace rule {step.rule!r}")


def apply_trace(tree: InfoFlowTree, trace: TransformTrace) -> InfoFlowTree:
    """Replay a trace; returns the reproduced output tree."""
    for step in trace.steps:
        tree = apply_step(tree, step)
    return tree


# -----------------------------------------------------------------------------
# Primitive rewrites
# -----------------------------------------------------------------------------
def negate_internal_vertex(tree: InfoFlowTree, w: int) -> InfoFlowTree:
    """Flip the sign of every correlation on an edge incident to w.

    Valid for internal w only: the hidden variable X_w is replaced by -X_w,
    which leaves every leaf variable untouched.
    """
    require_valid(tree)
    if w not in set(tree.vertices):
        raise PreconditionError(f"vertex {w} not in tree")
    if tree.is_leaf(w):
        raise PreconditionError(f"vertex {w} is a leaf; sign flips require an internal vertex")
    edges = tuple(
        (u, v, -rho) if w in (u, v) else (u, v, rho) for u, v, rho in tree.edges
    )
    return InfoFlowTree(tree.vertices, edges, tree.leaves)


def merge_degree2(tree: InfoFlowTree, v: int) -> InfoFlowTree:
    """Delete internal degree-2 vertex v, joining its neighbors with the
    product correlation."""
    require_valid(tree)
    if v not in set(tree.vertices):
        raise PreconditionError(f"vertex {v} not in tree")
    if tree.is_leaf(v):
        raise PreconditionError(f"vertex {v} is a leaf and cannot be merged away")
    if tree.degree(v) != 2:
        raise PreconditionError(f"vertex {v} has degree {tree.degree(v)}, merge requires 2")
    a, b = tree.neighbors(v)
    rho = tree.adjacency[v][a] * tree.adjacency[v][b]
    vertices = tuple(x for x in tree.vertices if x != v)
    edges = tuple(e for e in tree.edges if v not in (e[0], e[1])) + ((a, b, rho),)
    return InfoFlowTree(vertices, edges, tree.leaves)


def split_edge(tree: InfoFlowTree, e: tuple[int, int], rho1, rho2) -> InfoFlowTree:
    """Replace edge e = (a, b) by a length-two path a - w - b.

    rho1 goes on (a, w) and rho2 on (w, b); their product must equal the
    original correlation (exactly in rational mode, within 1e-12 in float
    mode). The fresh vertex id is max(vertices) + 1.
    """
    require_valid(tree)
    a, b = int(e[0]), int(e[1])
    if not tree.has_edge(a, b):
        raise PreconditionError(f"no edge between {a} and {b}")
    rho1 = canonical_number(rho1)
    rho2 = canonical_number(rho2)
    if mode_of([rho1, rho2]) != tree.mode:
        raise PreconditionError("split factors must match the tree's numeric mode")
    rho = tree.adjacency[a][b]
    if tree.mode == RATIONAL:
        if rho1 * rho2 != rho:
            raise PreconditionError(f"split factors {rho1} * {rho2} != {rho}")
    elif abs(rho1 * rho2 - rho) > FLOAT_TOL:
        raise PreconditionError(f"split factors {rho1} * {rho2} differ from {rho} beyond 1e-12")
    if not (-1 <= rho1 <= 1) or not (-1 <= rho2 <= 1):
        raise PreconditionError("split factors must lie in [-1, 1]")
    w = max(tree.vertices) + 1
    edges = []
    for u, x, r in tree.edges:
        if {u, x} == {a, b}:
            edges.append((a, w, rho1))
        else:
            edges.append((u, x, r))
    edges.append((w, b, rho2))
    return InfoFlowTree(tree.vertices + (w,), tuple(edges), tree.leaves)


def contract_unit_subgraph(tree: InfoFlowTree, vertex_set: Iterable[int]) -> InfoFlowTree:
    """Contract a leafless connected set whose induced edges all have rho = 1.

    All members share one value with certainty, so collapsing them onto the
    smallest member id preserves the leaf law.
    """
    require_valid(tree)
    vs = {int(v) for v in vertex_set}
    if not vs:
        raise PreconditionError("vertex set must be nonempty")
    unknown = vs - set(tree.vertices)
    if unknown:
        raise PreconditionError(f"vertices {sorted(unknown)} not in tree")
    leaves_inside = vs & set(tree.leaves)
    if leaves_inside:
        raise PreconditionError(f"vertex set may not contain leaves: {sorted(leaves_inside)}")
    induced = [(u, v, r) for u, v, r in tree.edges if u in vs and v in vs]
    for u, v, r in induced:
        if r != 1:
            raise PreconditionError(f"induced edge ({u}, {v}) has correlation {r!r}, expected 1")
    # connectivity of the induced subgraph
    adj: dict[int, list[int]] = {v: [] for v in vs}
    for u, v, _ in induced:
        adj[u].append(v)
        adj[v].append(u)
    seen = set()
    stack = [min(vs)]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        stack.extend(adj[x])
    if seen != vs:
        raise PreconditionError("vertex set does not induce a connected subgraph")
    if len(vs) == 1:
        return tree
    keep = min(vs)
    vertices = tuple(v for v in tree.vertices if v not in vs or v == keep)
    edges = []
    for u, v, r in tree.edges:
        if u in vs and v in vs:
            continue
        edges.append((keep if u in vs else u, keep if v in vs else v, r))
    return InfoFlowTree(vertices, tuple(edges), tree.leaves)


def split_vertex(
    tree: InfoFlowTree, v: int, m: int, attachment: Mapping[int, int]
) -> InfoFlowTree:
    """Replace internal vertex v by a rho = 1 path (w_1, ..., w_m).

    ``attachment`` maps each neighbor of v to the path position (1..m) its
    edge moves to. w_1 keeps the id v (so m = 1 is the identity); the rest
    get fresh ids max(vertices) + 1, + 2, ...
    """
    require_valid(tree)
    if v not in set(tree.vertices):
        raise PreconditionError(f"vertex {v} not in tree")
    if tree.is_leaf(v):
        raise PreconditionError(f"vertex {v} is a leaf and cannot be split")
    if not isinstance(m, int) or m < 1:
        raise PreconditionError(f"path length m must be a positive integer, got {m!r}")
    neighbors = set(tree.neighbors(v))
    attachment = {int(k): int(p) for k, p in attachment.items()}
    if set(attachment) != neighbors:
        raise PreconditionError(
            f"attachment must cover exactly the neighbors of {v}: {sorted(neighbors)}"
        )
    for n, p in attachment.items():
        if not 1 <= p <= m:
            raise PreconditionError(f"attachment position {p} for neighbor {n} outside 1..{m}")
    base = max(tree.vertices)
    path = [v] + [base + i for i in range(1, m)]
    one = one_of(tree.mode)
    edges = []
    for u, x, r in tree.edges:
        if u == v:
            edges.append((path[attachment[x] - 1], x, r))
        elif x == v:
            edges.append((u, path[attachment[u] - 1], r))
        else:
            edges.append((u, x, r))
    for i in range(m - 1):
        edges.append((path[i], path[i + 1], one))
    return InfoFlowTree(tree.vertices + tuple(path[1:]), tuple(edges), tree.leaves)


def prune_dangling_internal(tree: InfoFlowTree, v: int) -> InfoFlowTree:
    """Remove a degree-1 vertex that is *not* a designated leaf.

    Such a vertex is hidden and influences nothing else, so dropping it
    (with its edge) preserves the leaf law. Utility step used by the
    conversion passes; not one of the core rewrite rules.
    """
    require_valid(tree)
    if v not in set(tree.vertices):
        raise PreconditionError(f"vertex {v} not in tree")
    if tree.is_leaf(v):
        raise PreconditionError(f"vertex {v} is a designated leaf")
    if tree.degree(v) != 1:
        raise PreconditionError(f"vertex {v} has degree {tree.degree(v)}, expected 1")
    if len(tree.vertices) <= 2:
        raise PreconditionError("cannot prune below two vertices")
    vertices = tuple(x for x in tree.vertices if x != v)
    edges = tuple(e for e in tree.edges if v not in (e[0], e[1]))
    return InfoFlowTree(vertices, edges, tree.leaves)


# -----------------------------------------------------------------------------
# Compound conversions
# -----------------------------------------------------------------------------
def normalize_internal_signs(tree: InfoFlowTree) -> tuple[InfoFlowTree, TransformTrace]:
    """Make every internal edge (edge not touching a leaf) nonnegative.

    Walks the tree top-down from the smallest-id root; whenever a non-leaf
    vertex hangs from a negative parent edge, its incident signs are
    flipped. Leaf edges may keep negative correlations.
    """
    require_valid(tree)
    root = min(tree.vertices)
    order = []
    seen = {root}
    queue = [root]
    parent_of = {root: None}
    while queue:
        x = queue.pop(0)
        for c in tree.neighbors(x):
            if c in seen:
                continue
            seen.add(c)
            parent_of[c] = x
            order.append(c)
            queue.append(c)

    current = tree
    steps = []
    for v in order:
        if current.is_leaf(v):
            continue
        if current.adjacency[v][parent_of[v]] < 0:
            after = negate_internal_vertex(current, v)
            steps.append(_step("negate_internal_vertex", {"vertex": v}, current, after))
            current = after
    return current, TransformTrace(tuple(steps))


def _prune_all_dangling(current: InfoFlowTree, steps: list) -> InfoFlowTree:
    while True:
        dangling = [
            v
            for v in current.vertices
            if current.degree(v) == 1 and not current.is_leaf(v)
        ]
        if not dangling:
            return current
        v = dangling[0]
        after = prune_dangling_internal(current, v)
        steps.append(_step("prune_dangling_internal", {"vertex": v}, current, after))
        current = after


def to_binary(tree: InfoFlowTree) -> tuple[InfoFlowTree, TransformTrace]:
    """Equivalent rooted binary form: every internal vertex has 2 children.

    High-degree vertices are split into rho = 1 paths, a fresh root is
    created by splitting the lexicographically smallest edge with factors
    (rho, 1), and residual internal degree-2 vertices (other than the root)
    are merged away. The root id is reported in the trace metadata.
    """
    require_valid(tree)
    if len(tree.leaves) < 2:
        raise PreconditionError("binary conversion requires at least two leaves")
    steps: list[TraceStep] = []
    current = _prune_all_dangling(tree, steps)

    while True:
        high = sorted(v for v in current.vertices if current.degree(v) > 3)
        if not high:
            break
        v = high[0]
        nbrs = current.neighbors(v)
        attachment = {n: i + 1 for i, n in enumerate(nbrs)}
        args = {"vertex": v, "m": len(nbrs), "attachment": attachment}
        after = split_vertex(current, v, len(nbrs), attachment)
        steps.append(_step("split_vertex", args, current, after))
        current = after

    lo, hi = min(
        (min(u, v), max(u, v)) for u, v, _ in current.edges
    )
    rho = current.adjacency[lo][hi]
    root = max(current.vertices) + 1
    args = {"edge": (lo, hi), "rho1": rho, "rho2": one_of(current.mode)}
    after = split_edge(current, (lo, hi), rho, one_of(current.mode))
    steps.append(_step("split_edge", args, current, after))
    current = after

    while True:
        mergeable = sorted(
            v
            for v in current.vertices
            if v != root and not current.is_leaf(v) and current.degree(v) == 2
        )
        if not mergeable:
            break
        v = mergeable[0]
        after = merge_degree2(current, v)
        steps.append(_step("merge_degree2", {"vertex": v}, current, after))
        current = after

    return current, TransformTrace(tuple(steps), metadata={"root": root})


# -----------------------------------------------------------------------------
# Caterpillar structure
# -----------------------------------------------------------------------------
def is_caterpillar(tree: InfoFlowTree) -> bool:
    """True when removing the designated leaves leaves a path (or less)."""
    require_valid(tree)
    internal = [v for v in tree.vertices if not tree.is_leaf(v)]
    if len(internal) <= 1:
        return True
    iset = set(internal)
    return all(sum(1 for n in tree.neighbors(v) if n in iset) <= 2 for v in internal)


def spine(tree: InfoFlowTree) -> tuple[int, ...]:
    """Ordered spine of a caterpillar, starting at the smaller-id endpoint."""
    if not is_caterpillar(tree):
        raise PreconditionError("tree is not a caterpillar")
    internal = [v for v in tree.vertices if not tree.is_leaf(v)]
    if len(internal) <= 1:
        return tuple(internal)
    iset = set(internal)
    ends = [v for v in internal if sum(1 for n in tree.neighbors(v) if n in iset) == 1]
    start = min(ends)
    order = [start]
    prev = None
    cur = start
    while True:
        nxt = [n for n in tree.neighbors(cur) if n in iset and n != prev]
        if not nxt:
            break
        prev, cur = cur, nxt[0]
        order.append(cur)
    return tuple(order)


def is_simple_caterpillar(tree: InfoFlowTree) -> bool:
    """Spine of >= 2 vertices with exactly one leaf per spine vertex."""
    if not is_caterpillar(tree):
        return False
    sp = spine(tree)
    if len(sp) < 2:
        return False
    spset = set(sp)
    if set(tree.vertices) != spset | tree.leaf_set:
        return False
    for v in sp:
        if sum(1 for n in tree.neighbors(v) if tree.is_leaf(n)) != 1:
            return False
    return True


def to_simple_caterpillar(tree: InfoFlowTree) -> tuple[InfoFlowTree, TransformTrace]:
    """Equivalent simple caterpillar (one leaf per spine vertex, spine >= 2).

    Multi-leaf spine vertices are split into rho = 1 runs with one leaf
    each; bare interior spine vertices are merged away; degenerate spines
    (empty or single-vertex) are first extended with edge/vertex splits.
    """
    require_valid(tree)
    if len(tree.leaves) < 2:
        raise PreconditionError("simple-caterpillar conversion requires at least two leaves")
    steps: list[TraceStep] = []
    current = _prune_all_dangling(tree, steps)
    if not is_caterpillar(current):
        raise PreconditionError("tree is not a caterpillar")

    sp = spine(current)
    if len(sp) == 0:
        # single edge between two leaves: create the first spine vertex
        a, b, rho = current.edges[0]
        args = {"edge": (a, b), "rho1": rho, "rho2": one_of(current.mode)}
        after = split_edge(current, (a, b), rho, one_of(current.mode))
        steps.append(_step("split_edge", args, current, after))
        current = after
        sp = spine(current)
    if len(sp) == 1:
        c = sp[0]
        nbrs = current.neighbors(c)
        half = (len(nbrs) + 1) // 2
        attachment = {n: (1 if i < half else 2) for i, n in enumerate(nbrs)}
        args = {"vertex": c, "m": 2, "attachment": attachment}
        after = split_vertex(current, c, 2, attachment)
        steps.append(_step("split_vertex", args, current, after))
        current = after

    while True:
        sp = spine(current)
        spset = set(sp)
        changed = False
        for i, v in enumerate(sp):
            leaf_nbrs = sorted(n for n in current.neighbors(v) if current.is_leaf(n))
            q = len(leaf_nbrs)
            if q == 1:
                continue
            if q == 0:
                after = merge_degree2(current, v)
                steps.append(_step("merge_degree2", {"vertex": v}, current, after))
            else:
                attachment = {n: j + 1 for j, n in enumerate(leaf_nbrs)}
                if i > 0:
                    attachment[sp[i - 1]] = 1
                if i + 1 < len(sp):
                    attachment[sp[i + 1]] = q
                args = {"vertex": v, "m": q, "attachment": attachment}
                after = split_vertex(current, v, q, attachment)
                steps.append(_step("split_vertex", args, current, after))
            current = after
            changed = True
            break
        if not changed:
            break
    return current, TransformTrace(tuple(steps))


# -----------------------------------------------------------------------------
# Equivalence
# -----------------------------------------------------------------------------
def check_equivalence(
    t1: InfoFlowTree, t2: InfoFlowTree, max_vars: int = DEFAULT_MAX_VARS
) -> bool:
    """True iff the two trees induce the same joint law on their shared leaves.

    Exact comparison when both trees are rational; per-entry tolerance of
    1e-12 when either side is float.
    """
    require_valid(t1)
    require_valid(t2)
    if set(t1.leaves) != set(t2.leaves):
        raise PreconditionError("trees have different leaf sets")
    order = sorted(t1.leaf_set)
    d1 = joint_distribution(t1, order, max_vars=max_vars)
    d2 = joint_distribution(t2, order, max_vars=max_vars)
    if d1.mode == RATIONAL and d2.mode == RATIONAL:
        return d1.probs == d2.probs
    return all(abs(float(a) - float(b)) <= FLOAT_TOL for a, b in zip(d1.probs, d2.probs))
