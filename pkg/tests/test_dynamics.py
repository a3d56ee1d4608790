import itertools
import random

import pytest

from outgrowth import (
    Automorphism,
    InputError,
    ResourceLimitError,
    assign_pf_metric,
    bound_check,
    coefficient_A,
    displacement_bracket,
    growth_rate_estimate,
    growth_report,
    growth_sequence,
    index_count,
    index_total,
    lipschitz_constant,
    relative_length_function,
    spectral_growth_rate,
    standard_rose,
    stretch_lower_bound,
    tree_length_function,
)
from conftest import random_hyperbolic, random_word
from test_graph_map import identity_representative

GOLDEN = (1 + 5**0.5) / 2


# -- growth sequences ---------------------------------------------------------------


def test_growth_sequence_identity_constant(mixed_group):
    auto = Automorphism.identity(mixed_group)
    g = mixed_group.free(0) * mixed_group.factor_element(0, 1)
    length = relative_length_function(mixed_group)
    rpt = growth_sequence(auto, g, length, 10)
    assert rpt.values == [2.0] * 11


def test_growth_sequence_golden_fibonacci(golden):
    length = relative_length_function(golden.group)
    rpt = growth_sequence(golden.automorphism, golden.group.free(0), length, 12)
    fib = [1, 1]
    while len(fib) < 13:
        fib.append(fib[-1] + fib[-2])
    assert rpt.values == [float(x) for x in fib]


def test_growth_sequence_polynomial_linear(poly):
    length = tree_length_function(poly.graph)
    rpt = growth_sequence(poly.automorphism, poly.group.free(1), length, 30)
    assert rpt.values == [float(k + 1) for k in range(31)]


def test_growth_sequence_word_guard(golden):
    length = relative_length_function(golden.group)
    with pytest.raises(ResourceLimitError) as err:
        growth_sequence(golden.automorphism, golden.group.free(0), length, 40, guard=100)
    partial = err.value.partial
    assert partial is not None and len(partial.values) >= 5


# -- estimates -----------------------------------------------------------------------


def test_estimate_constant_sequence(mixed_group):
    auto = Automorphism.identity(mixed_group)
    g = mixed_group.free(0)
    rpt = growth_report(auto, g, relative_length_function(mixed_group), 10)
    assert rpt.estimate == 1.0
    assert rpt.converged


def test_estimate_fibonacci_hits_golden(golden):
    length = relative_length_function(golden.group)
    rpt = growth_report(golden.automorphism, golden.group.free(0), length, 20)
    assert rpt.estimate == pytest.approx(GOLDEN, abs=1e-2)


def test_estimate_linear_flags_unconverged(poly):
    length = tree_length_function(poly.graph)
    rpt = growth_report(poly.automorphism, poly.group.free(1), length, 30)
    assert rpt.estimate <= 1.2
    assert not rpt.converged
    assert rpt.note == "unconverged-to-1-from-above"


def test_estimate_elliptic_tree_length(c2f2):
    length = tree_length_function(c2f2.graph)
    g = c2f2.group.factor_element(0, 1)
    rpt = growth_report(c2f2.automorphism, g, length, 10)
    assert rpt.values == [0.0] * 11
    assert rpt.estimate == 0.0


# -- spectral growth and Lipschitz constants ---------------------------------------


def test_spectral_identity(f2):
    mu, top = spectral_growth_rate(identity_representative(f2))
    assert mu == 1.0
    assert top == 2  # ties resolve to the highest stratum


def test_spectral_golden(golden):
    mu, top = spectral_growth_rate(golden.representative)
    assert mu == pytest.approx(GOLDEN, abs=1e-9)
    assert top == 1


def test_spectral_polynomial(poly):
    mu, top = spectral_growth_rate(poly.representative)
    assert mu == 1.0
    assert top == 2


def test_lipschitz_identity(f2):
    rep = identity_representative(f2)
    lip, _ = lipschitz_constant(rep, assign_pf_metric(rep))
    assert lip == 1.0


def test_lipschitz_golden_pf_metric(golden):
    rep = golden.representative
    lip, _ = lipschitz_constant(rep, assign_pf_metric(rep))
    assert lip == pytest.approx(GOLDEN, abs=1e-9)


def test_lipschitz_polynomial_scaled(poly):
    rep = poly.representative
    for N in (1.0, 5.0, 10.0):
        metric = assign_pf_metric(rep, [1.0, N])
        lip, witness = lipschitz_constant(rep, metric)
        assert lip == max(1.0, (N + 1) / N)
        assert witness == 1


# -- stretching factors -----------------------------------------------------------


def test_stretch_same_tree_is_one(mixed_group):
    rose = standard_rose(mixed_group)
    rng = random.Random(51)
    sample = [random_hyperbolic(mixed_group, rng, 12) for _ in range(10)]
    value, _ = stretch_lower_bound(rose, rose, sample)
    assert value == 1.0


def test_stretch_scaled_copy(mixed_group):
    rose = standard_rose(mixed_group)
    double = rose.with_lengths([2 * l for l in rose.lengths])
    rng = random.Random(53)
    sample = [random_hyperbolic(mixed_group, rng, 12) for _ in range(10)]
    value, _ = stretch_lower_bound(rose, double, sample)
    assert value == 2.0


def test_stretch_twisted_marking_bounded_by_top_eigenvalue(golden):
    # On the eigenvector metric the twisted-marking copy (l_S(g) = l_T(g alpha))
    # stretches every sampled class by exactly the top eigenvalue.
    from outgrowth import GraphPath

    base = assign_pf_metric(golden.representative)
    twisted = base.with_lengths(base.lengths)
    twisted.free_marking = tuple(
        GraphPath(twisted, p.start, p.prefix, p.steps)
        for p in (base.loop_of_element(img) for img in golden.automorphism.free_images)
    )
    G = golden.group
    sample = [G.free(0), G.free(1), G.free(0) * G.free(1)]
    value, _ = stretch_lower_bound(base, twisted, sample)
    assert value <= GOLDEN + 1e-9
    assert value == pytest.approx(GOLDEN, rel=1e-9)


def test_stretch_rejects_elliptic_only_sample(c3c3):
    rose = c3c3.graph
    with pytest.raises(InputError):
        stretch_lower_bound(rose, rose, [c3c3.group.factor_element(0, 1)])


# -- displacement brackets -----------------------------------------------------------


def test_displacement_golden_bracket(golden):
    G = golden.group
    rpt = displacement_bracket(golden.representative, sample=[G.free(0), G.free(1)])
    assert rpt.lower == pytest.approx(GOLDEN, abs=1e-2)
    assert rpt.upper == pytest.approx(GOLDEN, abs=1e-9)
    assert rpt.lower <= rpt.upper
    assert rpt.width <= 1e-2


def test_displacement_polynomial_bracket(poly):
    G = poly.group
    rpt = displacement_bracket(poly.representative, sample=[G.free(1)], iterations=30)
    lips = {n: lip for n, lip, _ in rpt.lipschitz}
    assert lips == {1.0: 2.0, 10.0: 1.1, 100.0: 1.01, 1000.0: 1.001}
    assert rpt.upper == 1.001
    assert rpt.upper_at == 1000.0
    assert rpt.lower == 1.0
    assert rpt.monotone


def test_displacement_identity(f2):
    rep = identity_representative(f2)
    rpt = displacement_bracket(rep, sample=[f2.free(0)])
    assert rpt.bracket == (1.0, 1.0)


def test_displacement_lower_never_exceeds_upper(golden, poly, c3c3, c2f2):
    from outgrowth.cli import default_sample

    for doc in (golden, poly, c3c3, c2f2):
        rpt = displacement_bracket(doc.representative, sample=default_sample(doc))
        assert rpt.lower <= rpt.upper + 1e-9


def test_equality_chain_at_desk_scale(golden, poly, c3c3, c2f2):
    # the growth of the stratum-legal element squeezes the top eigenvalue
    # from below while the rescaled Lipschitz sweep squeezes it from above
    from outgrowth import find_r_legal_hyperbolic

    tol = 5e-2
    for doc in (golden, poly, c3c3, c2f2):
        rep = doc.representative
        mu, top = spectral_growth_rate(rep)
        g = find_r_legal_hyperbolic(rep, top)
        metric = assign_pf_metric(rep)
        rpt = growth_report(doc.automorphism, g, tree_length_function(metric), 20)
        assert rpt.estimate >= mu - tol
        bracket = displacement_bracket(rep, sample=[g], iterations=20)
        assert bracket.upper <= mu + tol


def test_hyperbolic_growth_values_respect_floor(golden, c2f2):
    rng = random.Random(61)
    for doc in (golden, c2f2):
        metric = assign_pf_metric(doc.representative)
        length = tree_length_function(metric)
        for _ in range(5):
            g = random_hyperbolic(doc.group, rng, 6)
            rpt = growth_report(doc.automorphism, g, length, 12)
            assert all(v >= length.hyperbolic_floor for v in rpt.values)
            assert rpt.estimate >= 1.0


def test_submultiplicativity_under_lipschitz(golden, c2f2):
    rng = random.Random(57)
    for doc in (golden, c2f2):
        rep = doc.representative
        metric = assign_pf_metric(rep)
        lip, _ = lipschitz_constant(rep, metric)
        length = tree_length_function(metric)
        for _ in range(10):
            g = random_hyperbolic(doc.group, rng, 8)
            rpt = growth_sequence(doc.automorphism, g, length, 10)
            for k in range(11):
                assert rpt.values[k] <= lip**k * rpt.values[0] * (1 + 1e-9)


def test_word_and_tree_growth_agree_on_rose(c2f2):
    # the bundled graph is the standard rose, where the two length functions
    # coincide on hyperbolic classes, hence give identical growth data
    G = c2f2.group
    rel = relative_length_function(G)
    tree = tree_length_function(c2f2.graph)
    rng = random.Random(59)
    for _ in range(10):
        g = random_hyperbolic(G, rng, 8)
        r1 = growth_report(c2f2.automorphism, g, rel, 12)
        r2 = growth_report(c2f2.automorphism, g, tree, 12)
        assert r1.values == r2.values
        assert r1.estimate == pytest.approx(r2.estimate, abs=1e-12)


def test_elliptic_decay(c2f2, c3c3):
    for doc in (c2f2, c3c3):
        G = doc.group
        g = G.factor_element(0, 1)
        rel = relative_length_function(G)
        rpt = growth_sequence(doc.automorphism, g, rel, 15)
        assert all(v <= rel.elliptic_bound for v in rpt.values)
        tree = tree_length_function(doc.graph)
        rpt2 = growth_sequence(doc.automorphism, g, tree, 15)
        assert all(v == 0.0 for v in rpt2.values)


# -- growth bound machinery ------------------------------------------------------------


def test_coefficient_single_stratum(golden):
    assert coefficient_A(golden.representative, 1, 1) == pytest.approx(GOLDEN, abs=1e-9)


def test_coefficient_polynomial(poly):
    rep = poly.representative
    assert coefficient_A(rep, 1, 2) == 1.0
    assert coefficient_A(rep, 2, 2) == 1.0
    assert coefficient_A(rep, 2, 1) == 0.0


def test_coefficient_disjoint_strata(c2f2):
    rep = c2f2.representative
    assert coefficient_A(rep, 1, 2) == 0.0
    assert coefficient_A(rep, 2, 1) == 0.0


def test_coefficient_diagonal_is_eigenvalue(golden, poly, c3c3, c2f2):
    for doc in (golden, poly, c3c3, c2f2):
        rep = doc.representative
        dec = rep.strata()
        for s in dec.strata:
            if s.growing:
                assert coefficient_A(rep, s.index, s.index) == pytest.approx(
                    s.eigenvalue, rel=1e-9
                )


def test_index_count_examples():
    assert index_count(2, 1, 2) == 3
    assert index_count(5, 3, 3) == 1
    assert index_count(3, 1, 3) == 10


def test_index_count_matches_enumeration():
    for m in range(1, 6):
        for r in range(1, m + 1):
            for k in range(1, 9):
                brute = sum(
                    1 for _ in itertools.combinations_with_replacement(range(r, m + 1), k)
                )
                assert index_count(k, r, m) == brute


def test_index_count_rejects_bad_arguments():
    with pytest.raises(InputError):
        index_count(0, 1, 2)
    with pytest.raises(InputError):
        index_count(2, 3, 2)


def test_index_total_polynomial_degree():
    # the bound polynomial has degree m-1: its m-th finite difference vanishes
    for m in range(1, 6):
        values = [index_total(k, m) for k in range(1, m + 3)]
        diffs = values
        for _ in range(m):
            diffs = [b - a for a, b in zip(diffs, diffs[1:])]
        assert all(d == 0 for d in diffs)


def test_bound_check_polynomial(poly):
    rpt = bound_check(poly.representative, poly.group.free(1), iterations=30)
    assert rpt.ok
    assert rpt.product_bound == 1.0
    for row in rpt.rows:
        k = row["k"]
        assert row["bound"] == pytest.approx((k + 2) * 1.0 * 1.0)
        assert row["observed"] == k + 1


def test_bound_check_golden(golden):
    rpt = bound_check(golden.representative, golden.group.free(0), iterations=20)
    assert rpt.ok
    # Binet-style: observed/bound stays bounded away from blowup
    ratios = [row["observed"] / row["bound"] for row in rpt.rows]
    assert max(ratios) <= 1.0


def test_bound_check_identity(f2):
    rep = identity_representative(f2)
    rpt = bound_check(rep, f2.free(0) * f2.free(1), iterations=10)
    assert rpt.ok


def test_bound_check_stratum_inequality_rows(poly):
    rpt = bound_check(poly.representative, poly.group.free(1), iterations=5)
    assert all(row["ok"] for row in rpt.stratum_rows)
    lhs = [row["lhs"] for row in rpt.stratum_rows]
    assert lhs == [1.0, 1.0]  # L_1(b alpha) = L_2(b alpha) = 1


def test_bound_check_rejects_elliptic(c3c3):
    with pytest.raises(InputError):
        bound_check(c3c3.representative, c3c3.group.factor_element(0, 1))
