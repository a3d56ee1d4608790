"""Growth sequences, displacement brackets, and the polynomial growth bound.

The growth rate of an automorphism along an element is the limsup of k-th
roots of conjugacy lengths along the orbit.  At desk scale we report two
estimators side by side: normalised k-th roots (l_k / l_0)^(1/k) and the
geometric mean of the tail of successive ratios, declaring convergence
when they agree.  The ratio estimator is the headline figure because on
eigenvector metrics it locks onto the stratum eigenvalue immediately,
while raw k-th roots approach it only like mu^(1-1/k); for hyperbolic
elements the estimate is floored at 1, which the length floor on
hyperbolic conjugacy classes certifies.

The displacement bracket squeezes the minimal Lipschitz displacement
between a certified lower bound from growth estimates and the smallest
Lipschitz constant over the rescaled metric family, whose stratum r is
scaled by N^r; as N grows those constants descend toward the top stratum
eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, ResourceLimitError
from .free_product import Automorphism, Word, relative_conjugacy_length
from .graph_of_groups import LENGTH_TOL, MarkedMetricGraph, cyclically_reduce
from .graph_map import (
    TopologicalRepresentative,
    assign_pf_metric,
    r_length,
    rescale_family,
)

WORD_GUARD = 10**6  # syllable guard for automorphism iteration


class LengthFunction:
    """A conjugacy length function together with its boundedness witnesses.

    ``elliptic_bound`` dominates every elliptic conjugacy class and
    ``hyperbolic_floor`` is a positive lower bound on hyperbolic ones; both
    witness homogeneity-compatible boundedness for growth estimates.
    """

    def __init__(self, kind: str, evaluate: Callable[[Word], float], elliptic_bound: float, hyperbolic_floor: float):
        self.kind = kind
        self.evaluate = evaluate
        self.elliptic_bound = elliptic_bound
        self.hyperbolic_floor = hyperbolic_floor

    def __call__(self, w: Word) -> float:
        return self.evaluate(w)

    def __repr__(self):
        return f"<length {self.kind}>"


def relative_length_function(group) -> LengthFunction:
    """Relative conjugacy length over E u Ghat: C = 1, floor 1."""
    return LengthFunction("relative", lambda w: float(relative_conjugacy_length(w)), 1.0, 1.0)


def tree_length_function(graph: MarkedMetricGraph) -> LengthFunction:
    """Translation length on a marked metric graph: C = 0, floor = shortest edge."""
    return LengthFunction("tree", graph.translation_length, 0.0, min(graph.lengths))


# -- growth ---------------------------------------------------------------------


@dataclass
class GrowthReport:
    element: Word
    length_kind: str
    values: list[float]
    iterations: int
    root_estimates: list[float] = field(default_factory=list)
    ratio_estimates: list[float | None] = field(default_factory=list)
    estimate: float | None = None
    converged: bool | None = None
    note: str = ""
    tolerance: float | None = None
    guard: int = WORD_GUARD

    def to_record(self) -> dict:
        return {
            "element": repr(self.element),
            "length": self.length_kind,
            "iterations": self.iterations,
            "values": self.values,
            "root_estimates": self.root_estimates,
            "ratio_estimates": self.ratio_estimates,
            "estimate": self.estimate,
            "converged": self.converged,
            "note": self.note,
            "tolerance": self.tolerance,
            "word_guard": self.guard,
        }


def growth_sequence(
    auto: Automorphism,
    g: Word,
    length: LengthFunction,
    iterations: int,
    guard: int = WORD_GUARD,
) -> GrowthReport:
    """Lengths along the orbit g, g.alpha, ..., g.alpha^K (estimates not yet filled).

    Raises ResourceLimitError carrying the partial report if an iterate
    exceeds the syllable guard.
    """
    if iterations < 1:
        raise InputError("growth sequences need at least one iteration")
    values = [float(length(g))]
    w = g
    for k in range(1, iterations + 1):
        w = auto.apply(w)
        if len(w.syllables) > guard:
            partial = GrowthReport(g, length.kind, values, k - 1, guard=guard)
            raise ResourceLimitError(
                f"word length exceeded the guard ({guard} syllables) at step {k}",
                partial=partial,
            )
        values.append(float(length(w)))
    return GrowthReport(g, length.kind, values, iterations, guard=guard)


def growth_rate_estimate(report: GrowthReport, tolerance: float = 1e-2) -> GrowthReport:
    """Fill estimators and the convergence verdict into a growth report.

    Convergence means the normalised k-th root at the last step agrees with
    the tail-ratio geometric mean within the tolerance; no extrapolation
    past the computed range is claimed.
    """
    v = report.values
    K = report.iterations
    if K < 1:
        raise InputError("estimates need at least one iteration")
    short_run = "too few iterations for a meaningful estimate; " if K < 5 else ""
    roots = []
    for k in range(1, K + 1):
        if v[0] > 0:
            roots.append((v[k] / v[0]) ** (1.0 / k))
        else:
            roots.append(v[k] ** (1.0 / k))
    ratios: list[float | None] = [
        (v[k] / v[k - 1]) if v[k - 1] > 0 else None for k in range(1, K + 1)
    ]
    tail = max(1, K // 2)
    ratio_estimate = (v[K] / v[K - tail]) ** (1.0 / tail) if v[K - tail] > 0 else 0.0
    root_estimate = roots[-1]
    hyperbolic = report.element.is_hyperbolic()
    estimate = ratio_estimate
    note = ""
    if hyperbolic and estimate < 1.0:
        # hyperbolic lengths are bounded below, so the true limsup is >= 1
        estimate = 1.0
        note = "estimate floored at 1 (hyperbolic length floor)"
    converged = abs(root_estimate - estimate) <= tolerance
    if converged:
        note = note or "converged"
    elif hyperbolic and estimate < root_estimate and estimate <= 1.0 + 10 * tolerance:
        note = "unconverged-to-1-from-above"
    else:
        note = note or "unconverged"
    report.root_estimates = roots
    report.ratio_estimates = ratios
    report.estimate = estimate
    report.converged = converged
    report.note = short_run + note
    report.tolerance = tolerance
    return report


def growth_report(
    auto: Automorphism,
    g: Word,
    length: LengthFunction,
    iterations: int = 20,
    tolerance: float = 1e-2,
    guard: int = WORD_GUARD,
) -> GrowthReport:
    """Sequence plus estimates in one call."""
    return growth_rate_estimate(growth_sequence(auto, g, length, iterations, guard), tolerance)


# -- spectral and Lipschitz data ----------------------------------------------


def spectral_growth_rate(rep: TopologicalRepresentative) -> tuple[float, int]:
    """Largest stratum eigenvalue and the highest stratum index attaining it."""
    dec = rep.strata()
    return dec.top_eigenvalue, dec.top_stratum


def lipschitz_constant(
    rep: TopologicalRepresentative, metric: MarkedMetricGraph | None = None
) -> tuple[float, int]:
    """max over edges of (image length / edge length), with a witness edge.

    The map is linear on edges, so this maximum is the Lipschitz constant
    of the induced map on the given metric (default: the representative's
    own graph metric).
    """
    graph = metric if metric is not None else rep.graph
    best = None
    witness = -1
    for m in range(graph.n_edges):
        image_len = sum(graph.dart_length(d) for d, _ in rep.edge_images[m].steps)
        ratio = image_len / graph.lengths[m]
        if best is None or ratio > best:
            best = ratio
            witness = m
    if best is None:
        raise InputError("graph has no edges")
    return best, witness


def stretch_lower_bound(
    source: MarkedMetricGraph, target: MarkedMetricGraph, sample: Sequence[Word]
) -> tuple[float, Word]:
    """Certified lower bound for the right stretching factor from a sample.

    Maximises target length over source length across the hyperbolic sample
    elements; elliptic sample entries are ignored.
    """
    best = None
    witness = None
    for g in sample:
        if not g.is_hyperbolic():
            continue
        ratio = target.translation_length(g) / source.translation_length(g)
        if best is None or ratio > best:
            best, witness = ratio, g
    if best is None:
        raise InputError("stretch bound needs at least one hyperbolic sample element")
    return best, witness


# -- displacement ----------------------------------------------------------------


@dataclass
class DisplacementReport:
    n_grid: list[float]
    lipschitz: list[tuple[float, float, int]]  # (N, Lip(f_N), witness edge)
    lower: float
    upper: float
    upper_at: float
    top_eigenvalue: float
    top_stratum: int
    growth_reports: list[GrowthReport]
    monotone: bool
    iterations: int
    tolerance: float

    @property
    def bracket(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_record(self) -> dict:
        return {
            "n_grid": self.n_grid,
            "lipschitz": [
                {"N": n, "lip": lip, "witness_edge": w} for n, lip, w in self.lipschitz
            ],
            "lower": self.lower,
            "upper": self.upper,
            "upper_at": self.upper_at,
            "bracket": [self.lower, self.upper],
            "width": self.width,
            "top_eigenvalue": self.top_eigenvalue,
            "top_stratum": self.top_stratum,
            "gap_to_top": self.upper - self.top_eigenvalue,
            "monotone_nonincreasing": self.monotone,
            "growth": [r.to_record() for r in self.growth_reports],
            "iterations": self.iterations,
            "tolerance": self.tolerance,
        }


def displacement_bracket(
    rep: TopologicalRepresentative,
    n_grid: Sequence[float] = (1.0, 10.0, 100.0, 1000.0),
    iterations: int = 20,
    sample: Sequence[Word] = (),
    tolerance: float = 1e-2,
    zero_length: float = 1.0,
) -> DisplacementReport:
    """Bracket the displacement between growth estimates and rescaled Lipschitz constants.

    The upper side minimises the Lipschitz constant over the N-grid of
    rescaled eigenvector metrics.  The lower side takes the largest
    *converged* growth estimate over the hyperbolic sample, floored at 1
    (always valid); unconverged estimates are reported but not trusted as
    bounds.
    """
    dec = rep.strata()
    base = assign_pf_metric(rep, 1.0, zero_length)
    length = tree_length_function(base)
    reports = []
    lower = 1.0
    for g in sample:
        if not g.is_hyperbolic():
            continue
        rpt = growth_report(rep.automorphism, g, length, iterations, tolerance)
        reports.append(rpt)
        if rpt.converged and rpt.estimate > lower:
            lower = rpt.estimate
    lip_rows = []
    for N in n_grid:
        metric = rescale_family(rep, N, zero_length)
        lip, witness = lipschitz_constant(rep, metric)
        lip_rows.append((float(N), lip, witness))
    upper = min(lip for _, lip, _ in lip_rows)
    upper_at = min(n for n, lip, _ in lip_rows if lip == upper)
    monotone = all(
        lip_rows[i + 1][1] <= lip_rows[i][1] * (1 + 1e-12) for i in range(len(lip_rows) - 1)
    )
    return DisplacementReport(
        [float(N) for N in n_grid],
        lip_rows,
        lower,
        upper,
        upper_at,
        dec.top_eigenvalue,
        dec.top_stratum,
        reports,
        monotone,
        iterations,
        tolerance,
    )


# -- the polynomial growth bound ---------------------------------------------------


def coefficient_matrix(
    rep: TopologicalRepresentative, metric: MarkedMetricGraph | None = None
) -> np.ndarray:
    """Stratum-interaction coefficients: entry (r-1, i-1) bounds stratum-r growth
    contributed per unit length of stratum-i edges.

    Row r, column i holds max over edges e of stratum i of the stratum-r
    weighted length of the image of e divided by the metric length of e.
    Entries below the diagonal vanish because images only descend.
    """
    dec = rep.strata()
    metric = metric if metric is not None else assign_pf_metric(rep, 1.0)
    m = dec.count
    A = np.zeros((m, m))
    for s in dec.strata:
        i = s.index
        for e in s.edges:
            denom = metric.lengths[e]
            image = rep.edge_images[e]
            for r in range(1, m + 1):
                val = r_length(rep, image, r) / denom
                if val > A[r - 1, i - 1]:
                    A[r - 1, i - 1] = val
    return A


def coefficient_A(
    rep: TopologicalRepresentative, r: int, i: int, metric: MarkedMetricGraph | None = None
) -> float:
    """One stratum-interaction coefficient (r <= i is the meaningful range)."""
    dec = rep.strata()
    if not (1 <= r <= dec.count and 1 <= i <= dec.count):
        raise InputError("stratum index out of range")
    return float(coefficient_matrix(rep, metric)[r - 1, i - 1])


def index_count(k: int, r: int, m: int) -> int:
    """Number of non-decreasing k-tuples drawn from {r, ..., m}."""
    if not (1 <= r <= m and k >= 1):
        raise InputError("index_count requires 1 <= r <= m and k >= 1")
    return math.comb(k + m - r, k)


def index_total(k: int, m: int) -> int:
    """Sum of index_count(k, r, m) over r = 1..m (integer part of the bound polynomial)."""
    return sum(index_count(k, r, m) for r in range(1, m + 1))


@dataclass
class BoundReport:
    element: Word
    coefficients: np.ndarray
    product_bound: float  # product over i != j of max(1, A(i, j))
    top_eigenvalue: float
    base_length: float
    rows: list[dict]
    stratum_rows: list[dict]
    ok: bool
    iterations: int

    def polynomial(self, k: int) -> float:
        return self.product_bound * index_total(k, self.coefficients.shape[0])

    def to_record(self) -> dict:
        return {
            "element": repr(self.element),
            "coefficients": self.coefficients.tolist(),
            "product_bound": self.product_bound,
            "top_eigenvalue": self.top_eigenvalue,
            "base_length": self.base_length,
            "rows": self.rows,
            "stratum_rows": self.stratum_rows,
            "ok": self.ok,
            "iterations": self.iterations,
        }


def bound_check(
    rep: TopologicalRepresentative,
    g: Word,
    iterations: int = 20,
    zero_length: float = 1.0,
) -> BoundReport:
    """Verify the polynomial bound P(k) mu^k l(g) on orbit lengths, step by step.

    P(k) multiplies the tuple counts by the product over i != j of
    max(1, A(i, j)); taking the max against 1 keeps the bound meaningful
    when an off-diagonal coefficient vanishes (each such coefficient enters
    a product at most once, so inflating it to 1 never shrinks the bound).
    Also checks the single-step per-stratum inequality
    L_r(g alpha) <= sum_{i >= r} A(r, i) L_i(g).
    """
    if not g.is_hyperbolic():
        raise InputError("the growth bound concerns hyperbolic elements")
    dec = rep.strata()
    m = dec.count
    metric = assign_pf_metric(rep, 1.0, zero_length)
    A = coefficient_matrix(rep, metric)
    product_bound = 1.0
    for i in range(m):
        for j in range(m):
            if i != j:
                product_bound *= max(1.0, float(A[i, j]))
    mu = dec.top_eigenvalue
    length = tree_length_function(metric)
    report = growth_sequence(rep.automorphism, g, length, iterations)
    base = report.values[0]
    slack = 1 + LENGTH_TOL
    rows = []
    ok = True
    for k in range(1, iterations + 1):
        counts = [index_count(k, r, m) for r in range(1, m + 1)]
        poly = product_bound * sum(counts)
        bound = poly * mu**k * base
        observed = report.values[k]
        good = observed <= bound * slack
        ok = ok and good
        rows.append(
            {
                "k": k,
                "index_counts": counts,
                "polynomial": poly,
                "bound": bound,
                "observed": observed,
                "ok": good,
            }
        )
    # single-step inequality per stratum, on fundamental-domain loops
    core0, _ = cyclically_reduce(metric.loop_of_element(g))
    core1, _ = cyclically_reduce(metric.loop_of_element(rep.automorphism.apply(g)))
    stratum_rows = []
    for r in range(1, m + 1):
        lhs = float(r_length(rep, core1, r))
        rhs = float(sum(A[r - 1, i - 1] * r_length(rep, core0, i) for i in range(r, m + 1)))
        good = lhs <= rhs * slack + LENGTH_TOL * 1e-3
        ok = ok and good
        stratum_rows.append({"stratum": r, "lhs": lhs, "rhs": rhs, "ok": good})
    return BoundReport(g, A, product_bound, mu, base, rows, stratum_rows, ok, iterations)
