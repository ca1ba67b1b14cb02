"""Conditional covariance of two vertex variables, exact in both modes.

Unconditioned, Cov[X_u, X_v] is the product of rho(e) along the u-v path.
Conditioned on an event L that factors into per-subtree events L_i along a
path decomposition (one subtree hanging at each path vertex), the covariance
has a closed form:

    Cov[X_1, X_m | L]
        = prod(rho_i) * prod(lambda_i^+ * lambda_i^-) / Pr[L]^2,

where lambda_i^± = Pr[L_i | X_i = ±1]. An equivalent ratio form evaluates,
for any path assignment x with positive prior probability,

    prod(rho_i) * (Pr[path = x | L] / Pr[path = x])
                * (Pr[path = -x | L] / Pr[path = -x]),

independent of the chosen x. Both are checked elsewhere against a direct
2^|V| enumeration oracle that shares no code with them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .core import (
    DEFAULT_MAX_VARS,
    DEFAULT_MAX_VERTICES,
    Assignment,
    InfoFlowTree,
    JointDistribution,
    check_assignment,
    joint_distribution,
    require_valid,
    subtree_event_prob_pair,
)
from .errors import CapExceededError, PreconditionError, ZeroProbabilityError
from .numeric import Number, zero_of

_HALF = Fraction(1, 2)


# -----------------------------------------------------------------------------
# Path decomposition
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class PathDecomposition:
    """A vertex path plus the subtree hanging at each path vertex.

    ``hanging_subtrees[i]`` is the component containing ``path[i]`` after the
    path edges are removed, with leaves designated as the original tree's
    leaves inside that component (excluding the path vertex itself). A
    component may be the single path vertex; its leaf event is then vacuous.
    """

    path: tuple[int, ...]
    spine_correlations: tuple[Number, ...]
    hanging_subtrees: tuple[InfoFlowTree, ...]


def tree_path(tree: InfoFlowTree, u: int, v: int) -> tuple[int, ...]:
    """The unique u-v vertex path (inclusive); (u,) when u == v."""
    require_valid(tree)
    vs = set(tree.vertices)
    if u not in vs or v not in vs:
        raise PreconditionError(f"path endpoints {u}, {v} must be vertices")
    if u == v:
        return (u,)
    parent = {u: None}
    queue = [u]
    while queue:
        x = queue.pop(0)
        if x == v:
            break
        for c in tree.neighbors(x):
            if c not in parent:
                parent[c] = x
                queue.append(c)
    path = [v]
    while path[-1] != u:
        path.append(parent[path[-1]])
    return tuple(reversed(path))


def decompose_path(tree: InfoFlowTree, u: int, v: int) -> PathDecomposition:
    """Split the tree along the u-v path into per-vertex hanging subtrees."""
    path = tree_path(tree, u, v)
    path_set = set(path)
    spine = tuple(tree.adjacency[a][b] for a, b in zip(path, path[1:]))
    subtrees = []
    for anchor in path:
        comp = {anchor}
        stack = [anchor]
        while stack:
            x = stack.pop()
            for c in tree.neighbors(x):
                if c in comp or (x == anchor and c in path_set):
                    continue
                comp.add(c)
                stack.append(c)
        vertices = tuple(x for x in tree.vertices if x in comp)
        edges = tuple(e for e in tree.edges if e[0] in comp and e[1] in comp)
        leaves = tuple(l for l in tree.leaves if l in comp and l != anchor)
        subtrees.append(InfoFlowTree(vertices, edges, leaves))
    return PathDecomposition(path, spine, tuple(subtrees))


def path_covariance(tree: InfoFlowTree, u: int, v: int) -> Number:
    """Cov[X_u, X_v] with no conditioning: product of rho along the path."""
    if u == v:
        raise PreconditionError("path covariance requires two distinct vertices")
    path = tree_path(tree, u, v)
    out = 1
    for a, b in zip(path, path[1:]):
        out = out * tree.adjacency[a][b]
    return out


# -----------------------------------------------------------------------------
# Closed form
# -----------------------------------------------------------------------------
def event_probability(
    spine_correlations: Sequence[Number], lambdas: Sequence[tuple[Number, Number]]
) -> Number:
    """Pr[L] for per-path-vertex events with probabilities lambda_i^±.

    Forward pass over the path's two-state chain: the path variables are a
    Markov chain with copy weights (1 ± rho_i)/2, each step weighted by the
    local event probability.
    """
    if len(spine_correlations) != len(lambdas) - 1:
        raise PreconditionError(
            f"need one lambda pair per path vertex: got {len(lambdas)} pairs "
            f"and {len(spine_correlations)} spine correlations"
        )
    fp = _HALF * lambdas[0][0]
    fm = _HALF * lambdas[0][1]
    for rho, (lp, lm) in zip(spine_correlations, lambdas[1:]):
        up = (1 + rho) / 2
        down = (1 - rho) / 2
        fp, fm = (fp * up + fm * down) * lp, (fp * down + fm * up) * lm
    return fp + fm


def conditional_covariance_from_lambdas(
    spine_correlations: Sequence[Number], lambdas: Sequence[tuple[Number, Number]]
) -> Number:
    """Closed form from raw event probabilities (the advanced entry point).

    The per-subtree events may be anything; only their conditional
    probabilities lambda_i^± enter. Raises ZeroProbabilityError when the
    joint event has probability zero.
    """
    pr = event_probability(spine_correlations, lambdas)
    if pr == 0:
        raise ZeroProbabilityError("conditioning event has probability 0")
    num = 1
    for rho in spine_correlations:
        num = num * rho
    for lp, lm in lambdas:
        num = num * lp * lm
    return num / (pr * pr)


def _event_lambdas(decomp: PathDecomposition, events: Sequence[Assignment]):
    if len(events) != len(decomp.path):
        raise PreconditionError(
            f"need one event per path vertex: got {len(events)} for path length {len(decomp.path)}"
        )
    return [
        subtree_event_prob_pair(sub, anchor, evt)
        for sub, anchor, evt in zip(decomp.hanging_subtrees, decomp.path, events)
    ]


def conditional_covariance_formula(
    decomp: PathDecomposition, events: Sequence[Assignment]
) -> Number:
    """Cov[X_path[0], X_path[-1] | all per-subtree leaf events].

    ``events[i]`` assigns ±1 to the designated leaves of hanging subtree i
    (empty for a bare path vertex). The sign of the result is the sign of
    the spine correlation product.
    """
    return conditional_covariance_from_lambdas(
        decomp.spine_correlations, _event_lambdas(decomp, events)
    )


def path_prior_probability(
    spine_correlations: Sequence[Number], x: Sequence[int]
) -> Number:
    """Unconditioned Pr[path variables = x] along the chain."""
    out = _HALF
    for rho, a, b in zip(spine_correlations, x, x[1:]):
        out = out * ((1 + rho * a * b) / 2)
    return out


def conditional_covariance_ratio(
    decomp: PathDecomposition, events: Sequence[Assignment], x: Assignment
) -> Number:
    """Ratio form of the closed formula, evaluated at path assignment x.

    x maps each path vertex to ±1 and must have positive prior probability
    (as must its negation). The value is independent of the choice of x and
    equals :func:`conditional_covariance_formula`.
    """
    check_assignment(x, decomp.path)
    xs = [x[v] for v in decomp.path]
    neg = [-a for a in xs]
    lambdas = _event_lambdas(decomp, events)
    pr = event_probability(decomp.spine_correlations, lambdas)
    if pr == 0:
        raise ZeroProbabilityError("conditioning event has probability 0")
    p_x = path_prior_probability(decomp.spine_correlations, xs)
    p_neg = path_prior_probability(decomp.spine_correlations, neg)
    if p_x == 0 or p_neg == 0:
        raise PreconditionError("path assignment (or its negation) has prior probability 0")

    def joint_with_event(assign):
        out = path_prior_probability(decomp.spine_correlations, assign)
        for (lp, lm), a in zip(lambdas, assign):
            out = out * (lp if a == 1 else lm)
        return out

    out = 1
    for rho in decomp.spine_correlations:
        out = out * rho
    out = out * ((joint_with_event(xs) / pr) / p_x)
    out = out * ((joint_with_event(neg) / pr) / p_neg)
    return out


# -----------------------------------------------------------------------------
# Enumeration oracle
# -----------------------------------------------------------------------------
def _enumeration_buckets(
    tree: InfoFlowTree, u: int, v: int, cond_labels: Sequence[int], max_vertices: int
):
    """Per-conditioning-outcome weight sums from the raw 2^|V| enumeration.

    Returns (totals, sums_u, sums_v, sums_uv, grand_total) where each list is
    indexed by the bit pattern of cond_labels. Deliberately independent of
    the message-passing code paths.
    """
    require_valid(tree)
    nverts = len(tree.vertices)
    if nverts > max_vertices:
        raise CapExceededError(f"{nverts} vertices exceed the enumeration cap of {max_vertices}")
    vs = set(tree.vertices)
    for x in (u, v, *cond_labels):
        if x not in vs:
            raise PreconditionError(f"vertex {x} not in tree")
    mode = tree.mode
    zero = zero_of(mode)
    vpos = {w: i for i, w in enumerate(tree.vertices)}
    factors = []
    for a, b, rho in tree.edges:
        factors.append((vpos[a], vpos[b], (1 + rho) / 2, (1 - rho) / 2))
    cpos = [vpos[c] for c in cond_labels]
    iu, iv = vpos[u], vpos[v]

    size = 1 << len(cond_labels)
    totals = [zero] * size
    sums_u = [zero] * size
    sums_v = [zero] * size
    sums_uv = [zero] * size
    grand = zero
    for idx in range(1 << nverts):
        w = 1
        for ia, ib, same, diff in factors:
            w = w * (same if ((idx >> ia) ^ (idx >> ib)) & 1 == 0 else diff)
            if w == 0:
                break
        if w == 0:
            continue
        key = 0
        for j, src in enumerate(cpos):
            if (idx >> src) & 1:
                key |= 1 << j
        su = -1 if (idx >> iu) & 1 else 1
        sv = -1 if (idx >> iv) & 1 else 1
        totals[key] += w
        sums_u[key] += su * w
        sums_v[key] += sv * w
        sums_uv[key] += (su * sv) * w
        grand += w
    return totals, sums_u, sums_v, sums_uv, grand


def conditional_covariance_bruteforce(
    tree: InfoFlowTree,
    u: int,
    v: int,
    outcome: Assignment,
    max_vertices: int = DEFAULT_MAX_VERTICES,
) -> Number:
    """Cov[X_u, X_v | leaves = outcome] straight from the definition.

    Enumerates every vertex assignment and accumulates the conditioned
    moments E[X_u X_v], E[X_u], E[X_v]. Ground truth for the closed form.
    """
    check_assignment(outcome)
    cond = tuple(outcome)
    leaf_set = set(tree.leaves)
    for lbl in cond:
        if lbl not in leaf_set:
            raise PreconditionError(f"conditioning label {lbl} is not a designated leaf")
    totals, sums_u, sums_v, sums_uv, _ = _enumeration_buckets(tree, u, v, cond, max_vertices)
    key = 0
    for j, lbl in enumerate(cond):
        if outcome[lbl] == -1:
            key |= 1 << j
    w = totals[key]
    if w == 0:
        raise ZeroProbabilityError(f"outcome {dict(outcome)!r} has probability 0")
    return sums_uv[key] / w - (sums_u[key] / w) * (sums_v[key] / w)


def conditional_covariance_bruteforce_all(
    tree: InfoFlowTree,
    u: int,
    v: int,
    cond_labels: Sequence[int],
    max_vertices: int = DEFAULT_MAX_VERTICES,
):
    """All positive-probability outcomes at once, from one enumeration pass.

    Returns [(outcome assignment, probability, covariance)] in bit-index
    order over ``cond_labels``.
    """
    cond = tuple(int(c) for c in cond_labels)
    leaf_set = set(tree.leaves)
    for lbl in cond:
        if lbl not in leaf_set:
            raise PreconditionError(f"conditioning label {lbl} is not a designated leaf")
    totals, sums_u, sums_v, sums_uv, grand = _enumeration_buckets(
        tree, u, v, cond, max_vertices
    )
    out = []
    for key, w in enumerate(totals):
        if w == 0:
            continue
        assign = {lbl: -1 if (key >> j) & 1 else 1 for j, lbl in enumerate(cond)}
        cov = sums_uv[key] / w - (sums_u[key] / w) * (sums_v[key] / w)
        out.append((assign, w / grand, cov))
    return out


# -----------------------------------------------------------------------------
# Expected magnitude of the conditional covariance
# -----------------------------------------------------------------------------
class OutcomeCovariance(NamedTuple):
    assignment: dict
    probability: Number
    covariance: Number


@dataclass(frozen=True)
class CondCovReport:
    """Per-outcome conditional covariances and their weighted |.| mean.

    Zero-probability outcomes are omitted (they contribute weight 0), so
    the listed probabilities sum to one.
    """

    u: int
    v: int
    conditioning: tuple[int, ...]
    outcomes: tuple[OutcomeCovariance, ...]
    expectation: Number


def expected_abs_cond_cov(
    tree: InfoFlowTree,
    u: int,
    v: int,
    conditioning_leaves: Sequence[int],
    max_vars: int = DEFAULT_MAX_VARS,
) -> CondCovReport:
    """E over conditioning-leaf outcomes of |Cov[X_u, X_v | outcome]|.

    ``u == v`` computes the expected conditional variance of X_u. Outcomes
    are weighted by their probabilities; zero-probability outcomes are
    skipped. Accumulation runs in fixed bit-index order, so float results
    are bit-for-bit reproducible.
    """
    require_valid(tree)
    cond = tuple(int(c) for c in conditioning_leaves)
    if len(set(cond)) != len(cond):
        raise PreconditionError("conditioning leaves must be unique")
    leaf_set = set(tree.leaves)
    for lbl in cond:
        if lbl not in leaf_set:
            raise PreconditionError(f"conditioning label {lbl} is not a designated leaf")
    if u in cond or v in cond:
        raise PreconditionError("covariance endpoints may not be conditioned on")

    pair = (u,) if u == v else (u, v)
    dist = joint_distribution(tree, pair + cond, max_vars=max_vars)
    zero = zero_of(dist.mode)
    base = len(pair)
    size = 1 << len(cond)
    totals = [zero] * size
    sums_u = [zero] * size
    sums_v = [zero] * size
    sums_uv = [zero] * size
    for idx, p in enumerate(dist.probs):
        key = idx >> base
        su = -1 if idx & 1 else 1
        sv = su if u == v else (-1 if (idx >> 1) & 1 else 1)
        totals[key] += p
        sums_u[key] += su * p
        sums_v[key] += sv * p
        sums_uv[key] += (su * sv) * p

    outcomes = []
    expectation = zero
    for key in range(size):
        w = totals[key]
        if w == 0:
            continue
        assign = {lbl: -1 if (key >> j) & 1 else 1 for j, lbl in enumerate(cond)}
        cov = sums_uv[key] / w - (sums_u[key] / w) * (sums_v[key] / w)
        outcomes.append(OutcomeCovariance(assign, w, cov))
        expectation += w * abs(cov)
    return CondCovReport(u, v, cond, tuple(outcomes), expectation)
