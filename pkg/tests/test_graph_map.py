import itertools
import random

import numpy as np
import pytest

from outgrowth import (
    Automorphism,
    InputError,
    TopologicalRepresentative,
    assign_pf_metric,
    column_sum_bounds,
    pf_eigen,
    pf_eigen_many,
    r_length,
    rescale_family,
    standard_rose,
    stratify,
    attach_eigendata,
    transition_matrix,
    verify_representative,
)

GOLDEN = (1 + 5**0.5) / 2


def identity_representative(group):
    rose = standard_rose(group)
    auto = Automorphism.identity(group)
    edges = [rose.path(rose.edge_ends[m][0], [(2 * m, 0)]) for m in range(rose.n_edges)]
    isos = {
        v: tuple(range(rose.vertex_order(v)))
        for v in range(rose.n_vertices)
        if rose.vertex_factor[v] is not None
    }
    return TopologicalRepresentative(
        rose, auto, list(range(rose.n_vertices)), edges, vertex_isos=isos
    )


# -- verification ------------------------------------------------------------------


def test_identity_representative_verifies(f2, mixed_group):
    for G in (f2, mixed_group):
        rep = identity_representative(G)
        assert verify_representative(rep) == []


def test_golden_fixture_verifies(golden):
    assert verify_representative(golden.representative) == []


def test_marking_mismatch_detected(golden, f2):
    rep = golden.representative
    wrong = Automorphism.identity(golden.group)
    bad = TopologicalRepresentative(
        golden.graph, wrong, rep.vertex_images, rep.edge_images, rep.tether
    )
    codes = [v for v in verify_representative(bad) if v.code == "marking mismatch"]
    assert codes and "generator" not in codes[0].code


def test_point_image_rejected(golden):
    rep = golden.representative
    collapsed = list(rep.edge_images)
    collapsed[0] = golden.graph.trivial_path(0)
    bad = TopologicalRepresentative(
        golden.graph, golden.automorphism, rep.vertex_images, collapsed, rep.tether
    )
    assert any(v.code == "edge images" for v in verify_representative(bad))


# -- transition matrices ---------------------------------------------------------


def test_transition_identity(f2):
    rep = identity_representative(f2)
    assert np.array_equal(transition_matrix(rep), np.eye(2, dtype=int))


def test_transition_golden(golden):
    assert np.array_equal(transition_matrix(golden.representative), [[0, 1], [1, 1]])


def test_transition_polynomial(poly):
    assert np.array_equal(transition_matrix(poly.representative), [[1, 1], [0, 1]])


def test_transition_counts_both_orientations(f2):
    a, b = f2.free(0), f2.free(1)
    rose = standard_rose(f2)
    auto = Automorphism(
        f2,
        [a, a * b * a.inverse()],
        inverse=Automorphism(f2, [a, a.inverse() * b * a]),
    )
    rep = TopologicalRepresentative(
        rose,
        auto,
        [0],
        [rose.path(0, [(0, 0)]), rose.path(0, [(0, 0), (2, 0), (1, 0)])],
    )
    assert verify_representative(rep) == []
    assert np.array_equal(transition_matrix(rep), [[1, 2], [0, 1]])


# -- stratification ----------------------------------------------------------------


def test_stratify_single_block():
    dec = stratify(np.array([[0, 1], [1, 1]]))
    assert dec.count == 1
    assert dec.strata[0].edges == (0, 1)
    assert dec.strata[0].growing


def test_stratify_two_blocks():
    dec = stratify(np.array([[1, 1], [0, 1]]))
    assert [s.edges for s in dec.strata] == [(0,), (1,)]
    assert all(np.array_equal(s.block, [[1]]) for s in dec.strata)


def test_stratify_zero_block():
    dec = stratify(np.zeros((1, 1), dtype=int))
    assert dec.count == 1
    assert not dec.strata[0].growing
    attach_eigendata(dec)
    assert dec.strata[0].eigenvalue == 0.0
    assert dec.strata[0].weights is None


def test_block_triangularity_random():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randrange(1, 7)
        M = np.array([[rng.randrange(3) if rng.random() < 0.4 else 0 for _ in range(n)] for _ in range(n)])
        dec = stratify(M)
        for i in range(n):
            for j in range(n):
                if M[i, j] > 0:
                    assert dec.stratum_of[i] <= dec.stratum_of[j]
        # diagonal blocks are zero or irreducible (size-1 handled by zero test)
        for s in dec.strata:
            if len(s.edges) > 1:
                assert s.growing


def test_eigenvalue_multiset_is_permutation_invariant():
    rng = random.Random(5)
    base = np.array([[0, 1, 0], [1, 1, 0], [1, 2, 1]])
    dec = attach_eigendata(stratify(base))
    values = sorted(s.eigenvalue for s in dec.strata)
    top = dec.top_eigenvalue
    for perm in itertools.permutations(range(3)):
        P = np.eye(3, dtype=int)[list(perm)]
        M = P @ base @ P.T
        dec2 = attach_eigendata(stratify(M))
        assert sorted(s.eigenvalue for s in dec2.strata) == pytest.approx(values)
        assert dec2.top_eigenvalue == pytest.approx(top)


def test_top_stratum_ties_take_highest(poly):
    dec = poly.representative.strata()
    assert dec.top_eigenvalue == 1.0
    assert dec.top_stratum == 2


def test_top_eigenvalue_at_least_one_on_verified_representatives(golden, poly, c3c3, c2f2, f2):
    reps = [doc.representative for doc in (golden, poly, c3c3, c2f2)]
    reps.append(identity_representative(f2))
    for rep in reps:
        assert verify_representative(rep) == []
        dec = rep.strata()
        assert dec.top_eigenvalue >= 1.0
        assert any(s.growing for s in dec.strata)


# -- Perron-Frobenius ---------------------------------------------------------------


def _char_poly_top_root(block):
    return float(np.abs(np.roots(np.poly(np.asarray(block, dtype=float)))).max())


def test_pf_golden_matrix():
    mu, vec = pf_eigen(np.array([[0, 1], [1, 1]]))
    assert mu == pytest.approx(GOLDEN, abs=1e-9)
    assert mu == pytest.approx(_char_poly_top_root([[0, 1], [1, 1]]), abs=1e-9)
    assert vec == pytest.approx([1 / GOLDEN, 1.0], abs=1e-9)


def test_pf_one_by_one_exact():
    for n in (1, 2, 3, 7):
        mu, vec = pf_eigen(np.array([[n]]))
        assert mu == float(n)
        assert vec.tolist() == [1.0]


def test_pf_periodic_matrix():
    mu, vec = pf_eigen(np.array([[0, 2], [2, 0]]))
    assert mu == pytest.approx(2.0, abs=1e-12)
    assert vec == pytest.approx([1.0, 1.0], abs=1e-9)


def test_pf_rejects_zero_block():
    with pytest.raises(InputError):
        pf_eigen(np.zeros((2, 2)))


def test_pf_many_matches_single():
    blocks = np.array([[[0, 1], [1, 1]], [[0, 2], [2, 0]], [[3, 1], [2, 2]]], dtype=float)
    values, vecs = pf_eigen_many(blocks)
    for k in range(3):
        mu, vec = pf_eigen(blocks[k])
        assert values[k] == pytest.approx(mu, abs=1e-11)
        assert vecs[k] == pytest.approx(vec, abs=1e-9)


def test_column_sum_sandwich_random():
    rng = random.Random(9)
    for _ in range(100):
        n = rng.randrange(2, 5)
        M = np.array([[rng.randrange(4) for _ in range(n)] for _ in range(n)])
        M += np.roll(np.eye(n, dtype=int), 1, axis=0)  # force a cycle: irreducible
        mu, _ = pf_eigen(M)
        lo, hi = column_sum_bounds(M)
        assert lo - 1e-9 <= mu <= hi + 1e-9


# -- stratum lengths and metrics -----------------------------------------------------


def test_r_length_examples(poly):
    rep = poly.representative
    rose = poly.graph
    empty = rose.trivial_path(0)
    assert r_length(rep, empty, 1) == 0.0
    assert r_length(rep, empty, 2) == 0.0
    a_edge = rose.path(0, [(0, 0)])
    assert r_length(rep, a_edge, 1) == 1.0
    ab = rose.path(0, [(0, 0), (2, 0)])
    assert r_length(rep, ab, 1) == 1.0
    assert r_length(rep, ab, 2) == 1.0


def test_assign_pf_metric_golden(golden):
    metric = assign_pf_metric(golden.representative)
    assert metric.lengths[0] == pytest.approx(1 / GOLDEN, abs=1e-9)
    assert metric.lengths[1] == 1.0
    image_b = sum(metric.dart_length(d) for d, _ in golden.representative.edge_images[1].steps)
    assert image_b / metric.lengths[1] == pytest.approx(GOLDEN, abs=1e-9)


def test_assign_pf_metric_identity(f2):
    rep = identity_representative(f2)
    metric = assign_pf_metric(rep)
    assert metric.lengths == (1.0, 1.0)


def test_assign_pf_metric_scales(poly):
    metric = assign_pf_metric(poly.representative, [1.0, 5.0])
    assert metric.lengths == (1.0, 5.0)


def test_rescale_family(poly, golden):
    base = rescale_family(poly.representative, 1.0)
    assert base.lengths == (1.0, 1.0)
    scaled = rescale_family(poly.representative, 10.0)
    assert scaled.lengths == (10.0, 100.0)
    # single stratum: uniform scaling
    g1 = rescale_family(golden.representative, 7.0)
    g0 = rescale_family(golden.representative, 1.0)
    assert g1.lengths[0] / g0.lengths[0] == pytest.approx(7.0)
    assert g1.lengths[1] / g0.lengths[1] == pytest.approx(7.0)


def _zero_stratum_representative():
    """A dangling edge whose endpoint collapses: its orbit forms a zero block."""
    from outgrowth import FreeProduct, MarkedMetricGraph

    F = FreeProduct(free_rank=2, free_names=["a", "b"])
    graph = MarkedMetricGraph(
        F,
        2,
        [(1, 0, 1.0), (1, 1, 1.0), (1, 1, 1.0)],  # hanging edge e, petals p and q
        [None, None],
        base=1,
        edge_names=["e", "p", "q"],
    )
    graph.free_marking = (graph.path(1, [(2, 0)]), graph.path(1, [(4, 0)]))
    auto = Automorphism.identity(F)
    rep = TopologicalRepresentative(
        graph,
        auto,
        [1, 1],  # the dangling vertex collapses onto the base
        [graph.path(1, [(2, 0)]), graph.path(1, [(2, 0)]), graph.path(1, [(4, 0)])],
    )
    return rep


def test_zero_stratum_lengths():
    rep = _zero_stratum_representative()
    assert verify_representative(rep) == []
    dec = rep.strata()
    zero = [s for s in dec.strata if not s.growing]
    assert len(zero) == 1 and zero[0].edges == (0,)
    assert zero[0].eigenvalue == 0.0 and zero[0].weights is None
    metric = assign_pf_metric(rep, 1.0, zero_length=0.25)
    assert metric.lengths[0] == 0.25
    assert metric.lengths[1] == metric.lengths[2] == 1.0
    with pytest.raises(InputError):
        assign_pf_metric(rep, 1.0, zero_length=None)
    with pytest.raises(InputError):
        assign_pf_metric(rep, [1.0])  # wrong number of scales
