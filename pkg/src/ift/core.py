"""Information flow trees: model, validation, sampling, exact leaf laws.

An information flow tree is an undirected tree with a correlation value
rho(e) in [-1, 1] per edge. It generates one ±1 random variable X_v per
vertex: a root value is uniform and propagates along edges, each child
copying its parent with probability (1 + rho)/2; equivalently every edge
variable R_(u,v) = X_u * X_v has mean rho(u, v). Every X_v is individually
uniform on {±1}. Degree-1 vertices are the observable "leaves" by default;
a degree-1 vertex may be declared hidden by passing an explicit leaf list.

Conventions used throughout the package:

* vertex ids are integers; the root for sampling and message passing is the
  smallest id (the choice does not affect any distribution),
* neighbor iteration order is ascending id,
* assignments map labels to +1 / -1,
* probability tables are dense and bit-indexed: bit j of the index holds
  variable ``labels[j]``, bit value 0 meaning +1 and 1 meaning -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    CapExceededError,
    InvalidTreeError,
    PreconditionError,
    ZeroProbabilityError,
)
from .numeric import (
    FLOAT,
    RATIONAL,
    Number,
    canonical_number,
    mode_of,
    one_of,
    zero_of,
)
from .rng import generator

#: Dense tables hold 2^n entries; builders refuse larger variable sets.
DEFAULT_MAX_VARS = 20
#: Brute-force enumeration walks 2^|V| vertex assignments.
DEFAULT_MAX_VERTICES = 24

Edge = tuple[int, int, Number]
#: An assignment maps variable labels (vertex ids, or (u, v) edge pairs in
#: sampler output) to +1 or -1.
Assignment = Mapping


def check_assignment(values: Assignment, labels=None) -> None:
    """Raise PreconditionError unless values is a ±1 assignment (over labels)."""
    for key, val in values.items():
        if val not in (1, -1):
            raise PreconditionError(f"assignment value for {key!r} must be +1 or -1, got {val!r}")
    if labels is not None and set(values) != set(labels):
        raise PreconditionError(
            f"assignment labels {sorted(values, key=repr)} do not match expected {sorted(labels, key=repr)}"
        )


@dataclass(frozen=True)
class InfoFlowTree:
    """Immutable tree with per-edge correlations and a leaf designation.

    Construction canonicalizes types (ints/"p/q" strings become Fractions,
    floats stay floats) but does not reject structurally broken input;
    :func:`validate` reports violations and operations raise
    :class:`InvalidTreeError` on invalid trees.
    """

    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    leaves: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        object.__setattr__(
            self,
            "edges",
            tuple((int(u), int(v), canonical_number(r)) for u, v, r in self.edges),
        )
        if self.leaves is None:
            degree: dict[int, int] = {v: 0 for v in self.vertices}
            for u, v, _ in self.edges:
                if u in degree:
                    degree[u] += 1
                if v in degree:
                    degree[v] += 1
            leaves = tuple(v for v in self.vertices if degree[v] == 1)
        else:
            leaves = tuple(int(v) for v in self.leaves)
        object.__setattr__(self, "leaves", leaves)

    # -- structure accessors ---------------------------------------------------
    @cached_property
    def adjacency(self) -> dict[int, dict[int, Number]]:
        adj: dict[int, dict[int, Number]] = {v: {} for v in self.vertices}
        for u, v, rho in self.edges:
            if u in adj and v in adj:
                adj[u][v] = rho
                adj[v][u] = rho
        return adj

    @cached_property
    def leaf_set(self) -> frozenset[int]:
        return frozenset(self.leaves)

    def neighbors(self, v: int) -> list[int]:
        """Neighbors of v in ascending id order."""
        return sorted(self.adjacency[v])

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def correlation(self, u: int, v: int) -> Number:
        """rho of the edge {u, v}."""
        try:
            return self.adjacency[u][v]
        except KeyError:
            raise PreconditionError(f"no edge between {u} and {v}") from None

    def has_edge(self, u: int, v: int) -> bool:
        return u in self.adjacency and v in self.adjacency[u]

    def is_leaf(self, v: int) -> bool:
        return v in self.leaf_set

    @property
    def internal_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if v not in self.leaf_set)

    @cached_property
    def mode(self) -> str:
        """RATIONAL or FLOAT; uniform per tree (validated)."""
        return mode_of([rho for _, _, rho in self.edges])


def validate(tree: InfoFlowTree) -> list[str]:
    """Return every violated invariant of ``tree`` (empty list = valid).

    Checks: at least two vertices, unique ids, well-formed edges (known
    endpoints, no self-loops or parallel edges), in-range correlations,
    uniform numeric mode, connectivity, acyclicity, and that designated
    leaves are degree-1 vertices.
    """
    violations: list[str] = []
    verts = tree.vertices
    if len(verts) < 2:
        violations.append("tree must have more than one vertex")
    seen: set[int] = set()
    for v in verts:
        if v in seen:
            violations.append(f"duplicate vertex id {v}")
        seen.add(v)

    has_exact = has_float = False
    parent = {v: v for v in seen}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    pairs: set[frozenset[int]] = set()
    cycle = False
    for u, v, rho in tree.edges:
        if u not in seen or v not in seen:
            violations.append(f"edge ({u}, {v}) references unknown vertex")
            continue
        if u == v:
            violations.append(f"self-loop at vertex {u}")
            cycle = True
            continue
        key = frozenset((u, v))
        if key in pairs:
            violations.append(f"parallel edge between {u} and {v}")
            cycle = True
            continue
        pairs.add(key)
        if isinstance(rho, Fraction):
            has_exact = True
        else:
            has_float = True
        if not (-1 <= rho <= 1):
            violations.append(f"correlation {rho!r} on edge ({u}, {v}) out of range [-1, 1]")
        ru, rv = find(u), find(v)
        if ru == rv:
            cycle = True
        else:
            parent[ru] = rv
    if cycle:
        violations.append("edge set contains a cycle")
    if seen and len({find(v) for v in seen}) > 1:
        violations.append("graph is disconnected")
    if has_exact and has_float:
        violations.append("mixed numeric modes: edges carry both rational and float correlations")

    leaf_seen: set[int] = set()
    for v in tree.leaves:
        if v in leaf_seen:
            violations.append(f"duplicate leaf designation {v}")
        leaf_seen.add(v)
        if v not in seen:
            violations.append(f"designated leaf {v} is not a vertex")
        elif tree.degree(v) != 1:
            violations.append(f"designated leaf {v} has degree {tree.degree(v)}, expected 1")
    return violations


def require_valid(tree: InfoFlowTree) -> None:
    """Raise InvalidTreeError if validate() reports anything."""
    violations = validate(tree)
    if violations:
        raise InvalidTreeError(violations)


# -----------------------------------------------------------------------------
# Joint distributions (dense, bit-indexed tables)
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class JointDistribution:
    """Exact probability table over ±1 assignments to an ordered label list.

    ``probs[i]`` is the probability that each ``labels[j]`` equals +1 when
    bit j of i is 0 and -1 when it is 1. Tables are dense (2^n entries);
    builder functions enforce the configured variable cap before allocating.
    Entries must be nonnegative and sum to one (exactly in rational mode,
    within 1e-12 in float mode).
    """

    labels: tuple[int, ...]
    probs: tuple[Number, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))
        object.__setattr__(self, "probs", tuple(canonical_number(p) for p in self.probs))
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise PreconditionError("distribution labels must be unique")
        if len(self.probs) != 1 << n:
            raise PreconditionError(
                f"expected {1 << n} probabilities for {n} labels, got {len(self.probs)}"
            )
        mode = self.mode
        total = sum(self.probs, zero_of(mode))
        if any(p < 0 for p in self.probs):
            raise PreconditionError("probabilities must be nonnegative")
        if mode == RATIONAL:
            if total != 1:
                raise PreconditionError(f"probabilities sum to {total}, expected exactly 1")
        elif abs(total - 1.0) > 1e-12:
            raise PreconditionError(f"probabilities sum to {total!r}, expected 1 within 1e-12")

    @cached_property
    def mode(self) -> str:
        return mode_of(self.probs)

    @property
    def n(self) -> int:
        return len(self.labels)

    # -- index <-> assignment --------------------------------------------------
    def index_of(self, assignment: Assignment) -> int:
        check_assignment(assignment, self.labels)
        idx = 0
        for j, lbl in enumerate(self.labels):
            if assignment[lbl] == -1:
                idx |= 1 << j
        return idx

    def assignment_of(self, index: int) -> dict[int, int]:
        return {
            lbl: -1 if (index >> j) & 1 else 1 for j, lbl in enumerate(self.labels)
        }

    def prob(self, assignment: Assignment) -> Number:
        return self.probs[self.index_of(assignment)]

    # -- derived tables ----------------------------------------------------
    def marginal(self, labels: Sequence[int]) -> "JointDistribution":
        """Marginal table over ``labels`` (in the given order)."""
        labels = tuple(int(v) for v in labels)
        pos = []
        for lbl in labels:
            if lbl not in self.labels:
                raise PreconditionError(f"label {lbl} not in distribution")
            pos.append(self.labels.index(lbl))
        out = [zero_of(self.mode)] * (1 << len(labels))
        for idx, p in enumerate(self.probs):
            key = 0
            for j, src in enumerate(pos):
                if (idx >> src) & 1:
                    key |= 1 << j
            out[key] += p
        return JointDistribution(labels, tuple(out))

    def condition(self, partial: Assignment) -> "JointDistribution":
        """Bayes-conditioned table over the labels not fixed by ``partial``.

        Raises ZeroProbabilityError when the conditioning event has
        probability zero.
        """
        check_assignment(partial)
        for lbl in partial:
            if lbl not in self.labels:
                raise PreconditionError(f"conditioning label {lbl} not in distribution")
        keep = [j for j, lbl in enumerate(self.labels) if lbl not in partial]
        mask = 0
        fixed = 0
        for j, lbl in enumerate(self.labels):
            if lbl in partial:
                mask |= 1 << j
                if partial[lbl] == -1:
                    fixed |= 1 << j
        out = [zero_of(self.mode)] * (1 << len(keep))
        total = zero_of(self.mode)
        for idx, p in enumerate(self.probs):
            if idx & mask != fixed:
                continue
            key = 0
            for j, src in enumerate(keep):
                if (idx >> src) & 1:
                    key |= 1 << j
            out[key] += p
            total += p
        if total == 0:
            raise ZeroProbabilityError(f"conditioning event {dict(partial)!r} has probability 0")
        labels = tuple(self.labels[j] for j in keep)
        return JointDistribution(labels, tuple(p / total for p in out))

    # -- moments -----------------------------------------------------------
    def expectation(self, label: int) -> Number:
        """E[X_label]."""
        j = self.labels.index(label)
        acc = zero_of(self.mode)
        for idx, p in enumerate(self.probs):
            acc = acc - p if (idx >> j) & 1 else acc + p
        return acc

    def covariance(self, u: int, v: int) -> Number:
        """Cov[X_u, X_v]; for u == v this is Var[X_u] = 1 - E[X_u]^2."""
        ju = self.labels.index(u)
        if u == v:
            e = self.expectation(u)
            return 1 - e * e
        jv = self.labels.index(v)
        zero = zero_of(self.mode)
        e_u = e_v = e_uv = zero
        for idx, p in enumerate(self.probs):
            su = -1 if (idx >> ju) & 1 else 1
            sv = -1 if (idx >> jv) & 1 else 1
            e_u = e_u + su * p
            e_v = e_v + sv * p
            e_uv = e_uv + (su * sv) * p
        return e_uv - e_u * e_v


# -----------------------------------------------------------------------------
# Exact inference: message-passing law and enumeration oracle
# -----------------------------------------------------------------------------
def joint_distribution(
    tree: InfoFlowTree, labels: Sequence[int], max_vars: int = DEFAULT_MAX_VARS
) -> JointDistribution:
    """Exact joint law of the vertex variables ``labels``.

    Computed by a single rooted pass: each vertex reports the probability of
    the observed outcomes in its subtree conditioned on its own value being
    +1 / -1; edges mix the pair with the copy/flip weights (1 ± rho)/2.
    """
    require_valid(tree)
    labels = tuple(int(v) for v in labels)
    vertex_set = set(tree.vertices)
    if len(set(labels)) != len(labels):
        raise PreconditionError("labels must be unique")
    for lbl in labels:
        if lbl not in vertex_set:
            raise PreconditionError(f"label {lbl} is not a vertex")
    if len(labels) > max_vars:
        raise CapExceededError(f"{len(labels)} variables exceed the cap of {max_vars}")

    mode = tree.mode
    one = one_of(mode)
    zero = zero_of(mode)
    label_set = set(labels)
    adj = tree.adjacency
    root = min(tree.vertices)

    def visit(v: int, parent: Optional[int]):
        if v in label_set:
            lbls = [v]
            table = [(one, zero), (zero, one)]
        else:
            lbls = []
            table = [(one, one)]
        for c in sorted(adj[v]):
            if c == parent:
                continue
            clbls, ctab = visit(c, v)
            rho = adj[v][c]
            up = (one + rho) / 2
            down = (one - rho) / 2
            width = len(table)
            merged = []
            for cp, cm in ctab:
                wp = up * cp + down * cm
                wm = down * cp + up * cm
                for tp, tm in table:
                    merged.append((tp * wp, tm * wm))
            table = merged
            lbls.extend(clbls)
        return lbls, table

    dfs_labels, table = visit(root, None)
    pos = {lbl: j for j, lbl in enumerate(labels)}
    shift = [pos[lbl] for lbl in dfs_labels]
    probs = [zero] * (1 << len(labels))
    for idx, (tp, tm) in enumerate(table):
        out = 0
        for j, s in enumerate(shift):
            if (idx >> j) & 1:
                out |= 1 << s
        probs[out] = (tp + tm) / 2
    return JointDistribution(labels, tuple(probs))


def leaf_distribution(tree: InfoFlowTree, max_vars: int = DEFAULT_MAX_VARS) -> JointDistribution:
    """Exact law of the leaf variables, labels in the tree's leaf order."""
    return joint_distribution(tree, tree.leaves, max_vars=max_vars)


def joint_distribution_bruteforce(
    tree: InfoFlowTree, labels: Sequence[int], max_vertices: int = DEFAULT_MAX_VERTICES
) -> JointDistribution:
    """Independent oracle for :func:`joint_distribution`.

    Enumerates all 2^|V| vertex assignments, weights each by the product of
    (1 + rho * x_u * x_v)/2 over edges, normalizes, and marginalizes onto
    ``labels``. Shares no code with the message-passing path.
    """
    require_valid(tree)
    labels = tuple(int(v) for v in labels)
    vertex_set = set(tree.vertices)
    if len(set(labels)) != len(labels):
        raise PreconditionError("labels must be unique")
    for lbl in labels:
        if lbl not in vertex_set:
            raise PreconditionError(f"label {lbl} is not a vertex")
    nverts = len(tree.vertices)
    if nverts > max_vertices:
        raise CapExceededError(f"{nverts} vertices exceed the enumeration cap of {max_vertices}")

    mode = tree.mode
    one = one_of(mode)
    zero = zero_of(mode)
    vpos = {v: i for i, v in enumerate(tree.vertices)}
    edge_factors = [
        (vpos[u], vpos[v], (one + rho) / 2, (one - rho) / 2) for u, v, rho in tree.edges
    ]
    lpos = [vpos[lbl] for lbl in labels]

    probs = [zero] * (1 << len(labels))
    total = zero
    for idx in range(1 << nverts):
        w = one
        for iu, iv, same, diff in edge_factors:
            w = w * (same if ((idx >> iu) ^ (idx >> iv)) & 1 == 0 else diff)
            if w == 0:
                break
        if w == 0:
            continue
        out = 0
        for j, src in enumerate(lpos):
            if (idx >> src) & 1:
                out |= 1 << j
        probs[out] += w
        total += w
    return JointDistribution(labels, tuple(p / total for p in probs))


def leaf_distribution_bruteforce(
    tree: InfoFlowTree, max_vertices: int = DEFAULT_MAX_VERTICES
) -> JointDistribution:
    """Enumeration-oracle counterpart of :func:`leaf_distribution`."""
    return joint_distribution_bruteforce(tree, tree.leaves, max_vertices=max_vertices)


def condition(dist: JointDistribution, partial: Assignment) -> JointDistribution:
    """Bayes-conditioned distribution over the remaining labels."""
    return dist.condition(partial)


# -----------------------------------------------------------------------------
# Subtree event probabilities
# -----------------------------------------------------------------------------
def subtree_event_prob_pair(
    tree: InfoFlowTree, root: int, leaf_outcome: Assignment
) -> tuple[Number, Number]:
    """(Pr[leaves = outcome | X_root = +1], Pr[... | X_root = -1]).

    ``leaf_outcome`` must cover exactly the designated leaves of ``tree``
    other than ``root``. The tree may be a degenerate single-vertex subtree
    (the event is then vacuous and both probabilities are 1).
    """
    if root not in set(tree.vertices):
        raise PreconditionError(f"root {root} is not a vertex of the subtree")
    expected = set(tree.leaves) - {root}
    check_assignment(leaf_outcome, expected)
    mode = mode_of([rho for _, _, rho in tree.edges])
    one = one_of(mode)
    zero = zero_of(mode)
    adj = tree.adjacency

    visited = {root}

    def visit(v: int, parent: Optional[int]) -> tuple[Number, Number]:
        if v in leaf_outcome:
            pp, pm = (one, zero) if leaf_outcome[v] == 1 else (zero, one)
        else:
            pp, pm = one, one
        for c in sorted(adj[v]):
            if c == parent:
                continue
            visited.add(c)
            cp, cm = visit(c, v)
            rho = adj[v][c]
            up = (one + rho) / 2
            down = (one - rho) / 2
            pp = pp * (up * cp + down * cm)
            pm = pm * (down * cp + up * cm)
        return pp, pm

    pair = visit(root, None)
    if len(visited) != len(tree.vertices):
        raise PreconditionError("subtree is not connected from its root")
    return pair


def subtree_event_prob(
    tree: InfoFlowTree, root: int, leaf_outcome: Assignment, root_value: int
) -> Number:
    """Pr[subtree leaves take ``leaf_outcome`` | X_root = root_value]."""
    if root_value not in (1, -1):
        raise PreconditionError(f"root_value must be +1 or -1, got {root_value!r}")
    p_plus, p_minus = subtree_event_prob_pair(tree, root, leaf_outcome)
    return p_plus if root_value == 1 else p_minus


# -----------------------------------------------------------------------------
# Sampling
# -----------------------------------------------------------------------------
def _bfs_edges(tree: InfoFlowTree, root: int):
    """(parent, child, rho) in deterministic BFS order (sorted neighbors)."""
    seen = {root}
    queue = [root]
    while queue:
        v = queue.pop(0)
        for c in tree.neighbors(v):
            if c in seen:
                continue
            seen.add(c)
            yield v, c, tree.adjacency[v][c]
            queue.append(c)


def sample_batch(tree: InfoFlowTree, seed: int, n: int) -> dict[int, np.ndarray]:
    """n independent draws of all vertex variables, as ±1 arrays per vertex.

    The root (smallest id) is uniform; values propagate outward, each child
    flipping against its parent with probability (1 - rho)/2. The root and
    each BFS edge consume their own split substream of ``seed``, so draw i
    is the same whatever the batch size: ``sample_batch(t, s, n)`` is a
    prefix of ``sample_batch(t, s, n + k)``.
    """
    require_valid(tree)
    root = min(tree.vertices)
    root_draw = generator(seed, 0).integers(0, 2, size=n, dtype=np.int8)
    values = {root: (root_draw * 2 - 1).astype(np.int8)}
    for k, (parent, child, rho) in enumerate(_bfs_edges(tree, root)):
        flip = generator(seed, k + 1).random(n) < float((1 - rho) / 2)
        values[child] = np.where(flip, -values[parent], values[parent]).astype(np.int8)
    return values


def sample(tree: InfoFlowTree, seed: int) -> dict:
    """One draw of every vertex and edge variable.

    Vertex ids map to X_v; edge keys (u, v) (as stored in ``tree.edges``)
    map to R_(u,v) = X_u * X_v.
    """
    cols = sample_batch(tree, seed, 1)
    out: dict = {v: int(col[0]) for v, col in cols.items()}
    for u, v, _ in tree.edges:
        out[(u, v)] = out[u] * out[v]
    return out
