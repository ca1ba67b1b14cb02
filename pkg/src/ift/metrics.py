"""Average covariance / information metrics under random conditioning.

For a joint ±1 distribution X_1..X_n and a conditioning order t, the
central quantity is the triple average

    avg over |J| = t, avg over pairs {u, v} outside J, of
        E over outcomes of (X_j)_{j in J} of |Cov[X_u, X_v | outcome]|

and its analog with conditional mutual information (in nats) in place of
|Cov|. The inner expectation weights outcomes by their probabilities;
zero-probability outcomes contribute nothing. Covariance metrics inherit
the distribution's numeric mode; information metrics are always float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .core import (
    DEFAULT_MAX_VARS,
    InfoFlowTree,
    JointDistribution,
    leaf_distribution,
)
from .errors import PreconditionError
from .numeric import Number, canonical_number, zero_of


@dataclass(frozen=True)
class MetricSeries:
    """One metric evaluated over a range of conditioning orders t."""

    metric: str
    n: int
    values: tuple[tuple[int, Number], ...]


# -----------------------------------------------------------------------------
# Covariance metrics
# -----------------------------------------------------------------------------
def avg_covariance(dist: JointDistribution) -> Number:
    """Mean of |Cov[X_u, X_v]| over unordered distinct pairs; lies in [0, 1]."""
    n = dist.n
    if n < 2:
        raise PreconditionError("average covariance needs at least two variables")
    total = zero_of(dist.mode)
    count = 0
    for u, v in combinations(dist.labels, 2):
        total += abs(dist.covariance(u, v))
        count += 1
    return total / count


def _expected_abs_pair_cov(
    dist: JointDistribution, cond_positions: Sequence[int], pu: int, pv: int
) -> Number:
    """E over outcomes of the conditioned variables of |Cov[u, v | outcome]|.

    One pass over the dense table, bucketing by the conditioning bits;
    zero-probability buckets are skipped.
    """
    zero = zero_of(dist.mode)
    size = 1 << len(cond_positions)
    totals = [zero] * size
    sums_u = [zero] * size
    sums_v = [zero] * size
    sums_uv = [zero] * size
    for idx, p in enumerate(dist.probs):
        if p == 0:
            continue
        key = 0
        for j, src in enumerate(cond_positions):
            if (idx >> src) & 1:
                key |= 1 << j
        su = -1 if (idx >> pu) & 1 else 1
        sv = -1 if (idx >> pv) & 1 else 1
        totals[key] += p
        sums_u[key] += su * p
        sums_v[key] += sv * p
        sums_uv[key] += (su * sv) * p
    out = zero
    for key in range(size):
        w = totals[key]
        if w == 0:
            continue
        cov = sums_uv[key] / w - (sums_u[key] / w) * (sums_v[key] / w)
        out += w * abs(cov)
    return out


def avg_cov_cond(dist: JointDistribution, t: int) -> Number:
    """Average |conditional covariance| at conditioning order t.

    t = 0 reduces to :func:`avg_covariance`. Not monotone in t in general:
    the parity construction is exactly 0 below its threshold order and
    exactly 1 at it.
    """
    n = dist.n
    if not 0 <= t <= n - 2:
        raise PreconditionError(f"conditioning order {t} outside 0..{n - 2}")
    total = zero_of(dist.mode)
    count = 0
    positions = range(n)
    for jset in combinations(positions, t):
        rest = [p for p in positions if p not in jset]
        for pu, pv in combinations(rest, 2):
            total += _expected_abs_pair_cov(dist, jset, pu, pv)
            count += 1
    return total / count


# -----------------------------------------------------------------------------
# Information metrics (nats)
# -----------------------------------------------------------------------------
def _mi_from_cells(cells, weight) -> float:
    """Mutual information of a 2x2 table of (unnormalized) masses, in nats."""
    row0 = cells[0] + cells[2]
    row1 = cells[1] + cells[3]
    col0 = cells[0] + cells[1]
    col1 = cells[2] + cells[3]
    rows = (row0, row1)
    cols = (col0, col1)
    out = 0.0
    for c, mass in enumerate(cells):
        if mass == 0:
            continue
        ratio = (mass * weight) / (rows[c & 1] * cols[c >> 1])
        out += float(mass / weight) * math.log(float(ratio))
    # the quantity is provably >= 0; clip float cancellation residue
    return max(out, 0.0)


def mutual_information(dist: JointDistribution, u: int, v: int) -> float:
    """I(X_u; X_v) >= 0 in nats, from the pairwise marginal (0 log 0 = 0)."""
    if u == v:
        raise PreconditionError("mutual information needs two distinct labels")
    marg = dist.marginal((u, v))
    return _mi_from_cells(marg.probs, 1)


def _expected_cond_mi(
    dist: JointDistribution, cond_positions: Sequence[int], pu: int, pv: int
) -> float:
    """E over conditioning outcomes of I(X_u; X_v | outcome), in nats."""
    size = 1 << len(cond_positions)
    zero = zero_of(dist.mode)
    cells = [[zero] * 4 for _ in range(size)]
    for idx, p in enumerate(dist.probs):
        if p == 0:
            continue
        key = 0
        for j, src in enumerate(cond_positions):
            if (idx >> src) & 1:
                key |= 1 << j
        c = ((idx >> pu) & 1) | (((idx >> pv) & 1) << 1)
        cells[key][c] += p
    out = 0.0
    for key in range(size):
        w = sum(cells[key], zero)
        if w == 0:
            continue
        out += float(w) * _mi_from_cells(cells[key], w)
    return out


def avg_info_cond(dist: JointDistribution, t: int) -> float:
    """Average conditional mutual information at conditioning order t (nats)."""
    n = dist.n
    if not 0 <= t <= n - 2:
        raise PreconditionError(f"conditioning order {t} outside 0..{n - 2}")
    total = 0.0
    count = 0
    positions = range(n)
    for jset in combinations(positions, t):
        rest = [p for p in positions if p not in jset]
        for pu, pv in combinations(rest, 2):
            total += _expected_cond_mi(dist, jset, pu, pv)
            count += 1
    return total / count


# -----------------------------------------------------------------------------
# Tree-level aggregate and the homogeneous-star shortcut
# -----------------------------------------------------------------------------
def avg_conditional_leaf_covariance(
    tree: InfoFlowTree, max_vars: int = DEFAULT_MAX_VARS
) -> Number:
    """Mean over distinct leaf pairs of E[|Cov| | all other leaves].

    The residual pairwise dependence left after revealing every other leaf;
    the quantity the decay scanner compares against C / #leaves.
    """
    dist = leaf_distribution(tree, max_vars=max_vars)
    n = dist.n
    if n < 2:
        raise PreconditionError("need at least two leaves")
    total = zero_of(dist.mode)
    count = 0
    positions = range(n)
    for pu, pv in combinations(positions, 2):
        cond = [p for p in positions if p not in (pu, pv)]
        total += _expected_abs_pair_cov(dist, cond, pu, pv)
        count += 1
    return total / count


def homogeneous_star_cond_variance(rho, t: int) -> Number:
    """Conditional average covariance left in a homogeneous star.

    A center X_0 has some number of rho-correlated leaves; after revealing
    t of them, every remaining leaf pair has covariance
    rho^2 * Var[X_0 | revealed]. Computed exactly via the binomial count of
    agreeing leaves, so t can be large; zero-probability outcomes (|rho| = 1)
    are skipped.
    """
    rho = canonical_number(rho)
    if not -1 <= rho <= 1:
        raise PreconditionError(f"correlation {rho!r} outside [-1, 1]")
    if t < 0:
        raise PreconditionError("conditioning order must be nonnegative")
    a = (1 + rho) / 2
    b = (1 - rho) / 2
    ab_t = (a * b) ** t
    total = 0
    for k in range(t + 1):
        d = a**k * b ** (t - k) + b**k * a ** (t - k)
        if d == 0:
            continue
        total += math.comb(t, k) * 2 * ab_t / d
    return rho * rho * total


def metric_series(dist: JointDistribution, metric: str, ts: Iterable[int]) -> MetricSeries:
    """Evaluate a named metric over conditioning orders ts."""
    if metric == "avgcov":
        values = tuple((t, avg_covariance(dist)) for t in ts)
    elif metric == "avgcovcond":
        values = tuple((t, avg_cov_cond(dist, t)) for t in ts)
    elif metric == "avginfocond":
        values = tuple((t, avg_info_cond(dist, t)) for t in ts)
    else:
        raise PreconditionError(f"unknown metric {metric!r}")
    return MetricSeries(metric, dist.n, values)
