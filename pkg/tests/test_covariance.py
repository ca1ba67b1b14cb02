"""Closed-form conditional covariance vs. the enumeration oracle."""

from fractions import Fraction as F
from itertools import product

import pytest

import ift
from conftest import (
    random_rational_simple_caterpillar,
    random_rational_tree,
    rng_for,
)


def events_for(dec, assign):
    return [{l: assign[l] for l in sub.leaves} for sub in dec.hanging_subtrees]


# -----------------------------------------------------------------------------
# decomposition / path product
# -----------------------------------------------------------------------------
def test_decompose_path_partitions_vertices():
    tree = random_rational_tree(rng_for(201), 9)
    verts = list(tree.vertices)
    u, v = verts[0], verts[-1]
    dec = ift.decompose_path(tree, u, v)
    assert dec.path[0] == u and dec.path[-1] == v
    assert len(dec.spine_correlations) == len(dec.path) - 1
    covered = [x for sub in dec.hanging_subtrees for x in sub.vertices]
    assert sorted(covered) == sorted(tree.vertices)
    for anchor, sub in zip(dec.path, dec.hanging_subtrees):
        assert anchor in sub.vertices
        assert anchor not in sub.leaves


def test_path_covariance_examples():
    r = F(5, 8)
    t = ift.InfoFlowTree((1, 2), ((1, 2, r),))
    assert ift.path_covariance(t, 1, 2) == r
    t3 = ift.InfoFlowTree((1, 2, 3), ((1, 2, F(1, 2)), (2, 3, F(1, 2))))
    assert ift.path_covariance(t3, 1, 3) == F(1, 4)
    t0 = ift.InfoFlowTree((1, 2, 3), ((1, 2, F(0)), (2, 3, F(1, 2))))
    assert ift.path_covariance(t0, 1, 3) == 0
    with pytest.raises(ift.PreconditionError):
        ift.path_covariance(t3, 2, 2)


# -----------------------------------------------------------------------------
# closed form == oracle
# -----------------------------------------------------------------------------
def test_formula_matches_oracle_on_seeded_corpus():
    rng = rng_for(202)
    trees = 0
    outcomes = 0
    while trees < 40:
        n = int(rng.integers(2, 11))
        tree = random_rational_tree(rng, n)
        pair = rng.choice(len(tree.vertices), size=2, replace=False)
        u, v = tree.vertices[pair[0]], tree.vertices[pair[1]]
        cond = [l for l in tree.leaves if l not in (u, v)]
        dec = ift.decompose_path(tree, u, v)
        for assign, _, cov in ift.conditional_covariance_bruteforce_all(tree, u, v, cond):
            assert ift.conditional_covariance_formula(dec, events_for(dec, assign)) == cov
            outcomes += 1
        trees += 1
    assert outcomes > 100


def test_ratio_form_is_x_independent_and_equals_formula():
    rng = rng_for(203)
    for _ in range(15):
        tree = random_rational_tree(rng, int(rng.integers(3, 9)))
        pair = rng.choice(len(tree.vertices), size=2, replace=False)
        u, v = tree.vertices[pair[0]], tree.vertices[pair[1]]
        cond = [l for l in tree.leaves if l not in (u, v)]
        dec = ift.decompose_path(tree, u, v)
        for assign, _, cov in ift.conditional_covariance_bruteforce_all(tree, u, v, cond):
            events = events_for(dec, assign)
            seen = set()
            for bits in product((1, -1), repeat=len(dec.path)):
                x = dict(zip(dec.path, bits))
                try:
                    seen.add(ift.conditional_covariance_ratio(dec, events, x))
                except ift.PreconditionError:
                    continue  # zero-probability path assignment
            assert seen == {cov}


def test_vacuous_events_reduce_to_path_product():
    tree = ift.InfoFlowTree((0, 1, 2), ((0, 1, F(3, 8)), (1, 2, F(-1, 4))), leaves=())
    dec = ift.decompose_path(tree, 0, 2)
    events = [{}, {}, {}]
    val = ift.conditional_covariance_formula(dec, events)
    assert val == F(3, 8) * F(-1, 4)
    x = {0: 1, 1: 1, 2: 1}
    assert ift.conditional_covariance_ratio(dec, events, x) == val


def test_zero_spine_correlation_annihilates():
    lambdas = [(F(1, 2), F(1, 4)), (F(1, 3), F(1, 5))]
    assert ift.conditional_covariance_from_lambdas((F(0),), lambdas) == 0


def test_m1_reduces_to_conditional_variance():
    rho = F(5, 8)
    t = ift.InfoFlowTree((1, 2), ((1, 2, rho),))
    dec = ift.decompose_path(t, 1, 1)
    assert ift.conditional_covariance_formula(dec, [{2: 1}]) == 1 - rho * rho
    assert ift.conditional_covariance_bruteforce(t, 1, 1, {2: 1}) == 1 - rho * rho


def test_base_case_lambda_identity():
    # lam+ lam- == 4 Pr[X=+1, L] Pr[X=-1, L] for a single-vertex path
    rho = F(3, 4)
    sub = ift.InfoFlowTree((1, 2), ((1, 2, rho),), leaves=(2,))
    lam_p, lam_m = ift.subtree_event_prob_pair(sub, 1, {2: -1})
    joint_p = F(1, 2) * lam_p
    joint_m = F(1, 2) * lam_m
    assert lam_p * lam_m == 4 * joint_p * joint_m


def test_zero_probability_event_raises():
    lambdas = [(F(0), F(0))]
    with pytest.raises(ift.ZeroProbabilityError):
        ift.conditional_covariance_from_lambdas((), lambdas)


def test_zero_probability_x_raises():
    tree = ift.InfoFlowTree((0, 1, 2), ((0, 1, F(1)), (1, 2, F(1, 2))), leaves=())
    dec = ift.decompose_path(tree, 0, 2)
    with pytest.raises(ift.PreconditionError):
        # rho = 1 forbids disagreeing neighbors on the path
        ift.conditional_covariance_ratio(dec, [{}, {}, {}], {0: 1, 1: -1, 2: 1})


def test_nonnegative_spine_gives_nonnegative_covariance():
    rng = rng_for(204)
    for _ in range(20):
        t = int(rng.integers(2, 6))
        tree = random_rational_simple_caterpillar(rng, t)
        u, v = 0, t - 1  # spine endpoints
        cond = list(tree.leaves)
        for _, _, cov in ift.conditional_covariance_bruteforce_all(tree, u, v, cond):
            assert cov >= 0


# -----------------------------------------------------------------------------
# enumeration oracle details
# -----------------------------------------------------------------------------
def test_bruteforce_vacuous_outcome_is_path_covariance():
    tree = random_rational_tree(rng_for(205), 7)
    u, v = tree.vertices[0], tree.vertices[-1]
    assert ift.conditional_covariance_bruteforce(tree, u, v, {}) == ift.path_covariance(
        tree, u, v
    )


def test_fully_revealing_leaf_zeroes_other_pairs():
    # center pinned by a rho = 1 leaf edge: any other pair decouples
    tree = ift.InfoFlowTree(
        (0, 1, 2, 3), ((0, 1, F(1)), (0, 2, F(1, 2)), (0, 3, F(1, 3)))
    )
    for y in (1, -1):
        assert ift.conditional_covariance_bruteforce(tree, 2, 3, {1: y}) == 0


def test_bruteforce_zero_probability_outcome_raises():
    tree = ift.InfoFlowTree((0, 1, 2), ((0, 1, F(1)), (0, 2, F(1))))
    with pytest.raises(ift.ZeroProbabilityError):
        ift.conditional_covariance_bruteforce(tree, 0, 2, {1: 1, 2: -1})


# -----------------------------------------------------------------------------
# expected |conditional covariance|
# -----------------------------------------------------------------------------
def test_report_with_empty_conditioning():
    tree = ift.InfoFlowTree((0, 1, 2, 3), ((0, 1, F(1, 3)), (0, 2, F(1, 2)), (1, 3, F(-3, 4))))
    rep = ift.expected_abs_cond_cov(tree, 2, 3, ())
    assert len(rep.outcomes) == 1
    assert rep.outcomes[0].probability == 1
    assert rep.expectation == abs(ift.path_covariance(tree, 2, 3))


def test_report_invariants_and_oracle_agreement():
    rng = rng_for(206)
    for _ in range(15):
        tree = random_rational_tree(rng, int(rng.integers(3, 9)))
        if len(tree.leaves) < 3:
            continue
        u, v = tree.leaves[0], tree.leaves[1]
        cond = [l for l in tree.leaves if l not in (u, v)]
        rep = ift.expected_abs_cond_cov(tree, u, v, cond)
        assert sum(oc.probability for oc in rep.outcomes) == 1
        assert rep.expectation == sum(
            oc.probability * abs(oc.covariance) for oc in rep.outcomes
        )
        oracle = dict()
        for assign, prob, cov in ift.conditional_covariance_bruteforce_all(tree, u, v, cond):
            oracle[tuple(sorted(assign.items()))] = (prob, cov)
        for oc in rep.outcomes:
            prob, cov = oracle[tuple(sorted(oc.assignment.items()))]
            assert oc.probability == prob and oc.covariance == cov


def test_expected_variance_when_endpoints_coincide():
    tree = ift.InfoFlowTree((0, 1, 2), ((0, 1, F(1, 2)), (0, 2, F(1, 2))))
    rep = ift.expected_abs_cond_cov(tree, 0, 0, (1, 2))
    manual = ift.star_expected_center_variance(tree)
    assert rep.expectation == manual


def test_homogeneous_star_fully_correlated_conditioning():
    tree = ift.InfoFlowTree(
        (0, 1, 2, 3, 4), tuple((0, i, F(1)) for i in (1, 2, 3, 4))
    )
    rep = ift.expected_abs_cond_cov(tree, 3, 4, (1, 2))
    assert rep.expectation == 0


def test_conditioning_overlap_rejected():
    tree = ift.InfoFlowTree((0, 1, 2), ((0, 1, F(1, 2)), (0, 2, F(1, 2))))
    with pytest.raises(ift.PreconditionError):
        ift.expected_abs_cond_cov(tree, 1, 2, (2,))


def test_spine_monotonicity_spot_check():
    # expected |cond cov| of the spine endpoints never drops as one spine
    # correlation rises (float grid, all leaves revealed)
    rng = rng_for(207)
    for _ in range(5):
        t = int(rng.integers(2, 5))
        base = [float(rng.uniform(0, 1)) for _ in range(t - 1)]
        leaf = [float(rng.uniform(-1, 1)) for _ in range(t)]
        for j in range(t - 1):
            prev = None
            for g in [k / 10 for k in range(11)]:
                spine_rhos = list(base)
                spine_rhos[j] = g
                edges = [(i, i + 1, spine_rhos[i]) for i in range(t - 1)]
                edges += [(i, t + i, leaf[i]) for i in range(t)]
                tree = ift.InfoFlowTree(tuple(range(2 * t)), tuple(edges))
                val = ift.expected_abs_cond_cov(tree, 0, t - 1, tree.leaves).expectation
                if prev is not None:
                    assert val >= prev - 1e-12
                prev = val
