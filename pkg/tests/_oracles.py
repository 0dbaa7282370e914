"""Independent reference implementations used only by the test suite.

These deliberately avoid the library's code paths (and its vectorization) so
that agreement is meaningful: plain double loops, exact rational arithmetic,
and adaptive quadrature.
"""
import itertools
import math
from fractions import Fraction

import numpy as np


def chebyshev(a, b) -> float:
    return max(abs(float(u) - float(v)) for u, v in zip(a, b))


def brute_force_epsilon(points_x, labels_x, points_t, labels_t) -> float:
    """Min over same-class candidates, max over reference points; +inf as soon
    as some reference point has no same-class candidate at all."""
    worst = 0.0
    for i in range(len(points_x)):
        best = math.inf
        for j in range(len(points_t)):
            if labels_x[i] != labels_t[j]:
                continue
            d = chebyshev(points_x[i], points_t[j])
            if d < best:
                best = d
        if best == math.inf:
            return math.inf
        if best > worst:
            worst = best
    return worst


def direct_positions(importances) -> list[int]:
    """1-based position of each feature straight from the definition: one plus
    the number of features ranked ahead of it (strictly larger importance, or
    equal importance at a lower index)."""
    d = len(importances)
    positions = []
    for j in range(d):
        ahead = sum(
            1
            for k in range(d)
            if importances[k] > importances[j]
            or (importances[k] == importances[j] and k < j)
        )
        positions.append(ahead + 1)
    return positions


def direct_rank_distance(positions_a, positions_b) -> float:
    return sum(abs(a - b) for a, b in zip(positions_a, positions_b)) / len(positions_a)


def fraction_ranks(values) -> list[Fraction]:
    """Average-tie ranks as exact rationals."""
    ranks = []
    for v in values:
        less = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        ranks.append(Fraction(2 * less + equal + 1, 2))
    return ranks


def exact_rank_pearson(x, y) -> float:
    """Pearson correlation of average ranks, numerator and sums of squares in
    exact rational arithmetic, one float division at the end."""
    rx = fraction_ranks(list(x))
    ry = fraction_ranks(list(y))
    n = len(rx)
    mean_x = sum(rx, Fraction(0)) / n
    mean_y = sum(ry, Fraction(0)) / n
    cov = sum((a - mean_x) * (b - mean_y) for a, b in zip(rx, ry))
    var_x = sum((a - mean_x) ** 2 for a in rx)
    var_y = sum((b - mean_y) ** 2 for b in ry)
    return float(cov) / math.sqrt(float(var_x) * float(var_y))


def quad_regularized_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta by adaptive quadrature of the density."""
    from scipy import integrate

    value, _ = integrate.quad(
        lambda t: t ** (a - 1.0) * (1.0 - t) ** (b - 1.0), 0.0, x, limit=500
    )
    total = math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    return value / total


def permutation_p_reference(x, y) -> float:
    """Two-sided permutation p-value for the Spearman coefficient by full
    enumeration, ranks and correlations computed independently."""
    rx = np.array([float(f) for f in fraction_ranks(list(x))])
    ry = np.array([float(f) for f in fraction_ranks(list(y))])
    observed = abs(np.corrcoef(rx, ry)[0, 1])
    hits = 0
    total = 0
    for perm in itertools.permutations(range(len(y))):
        total += 1
        r = np.corrcoef(rx, ry[list(perm)])[0, 1]
        if abs(r) >= observed - 1e-12:
            hits += 1
    return hits / total


def slow_boosted_scores(doc: dict, X) -> list[float]:
    """Re-evaluate a serialized ensemble point by point, stage by stage, with
    no shared code and no fused operations."""
    learning_rate = doc["params"]["learning_rate"]
    out = []
    for row in X:
        score = doc["initial_score"]
        for stage in doc["stages"]:
            nodes = {node["id"]: node for node in stage}
            nid = 1
            while nodes[nid]["kind"] != "leaf":
                node = nodes[nid]
                nid = node["left"] if node["threshold"] - row[node["feature"]] > 0 else node["right"]
            score += learning_rate * nodes[nid]["value"]
        out.append(score)
    return out


def slow_sigmoid(score: float) -> float:
    clipped = min(36.0, max(-36.0, score))
    return 1.0 / (1.0 + math.exp(-clipped))
