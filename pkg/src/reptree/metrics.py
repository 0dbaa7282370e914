"""Explanation-similarity statistics: importance orderings, the mean absolute
rank-difference metric, and Spearman correlation with significance.

The Spearman coefficient is the Pearson correlation of fractional (average-tie)
ranks; the shortcut d^2 formula is deliberately not used because it is invalid
under ties. Two-sided p-values come from the Student-t transform evaluated
through a continued-fraction regularized incomplete beta.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ImportanceRanking:
    """Features ordered by importance, descending; ties keep the lower feature
    index first. Positions are 1-based: position_of[j] == 1 means feature j is
    the most important."""

    order: tuple[int, ...]
    position_of: tuple[int, ...]

    @property
    def n_features(self) -> int:
        return len(self.order)


def rank_features(importances) -> ImportanceRanking:
    """Rank a real importance vector, deterministically under ties."""
    imp = np.asarray(importances, dtype=np.float64)
    if imp.ndim != 1 or imp.size == 0:
        raise ValueError("importances must be a non-empty 1-D vector")
    if not np.all(np.isfinite(imp)):
        raise ValueError("importances must be finite")
    order = np.argsort(-imp, kind="stable")
    position = np.empty(imp.size, dtype=np.int64)
    position[order] = np.arange(1, imp.size + 1)
    return ImportanceRanking(tuple(int(i) for i in order), tuple(int(p) for p in position))


def rank_distance(a: ImportanceRanking, b: ImportanceRanking) -> float:
    """Mean absolute difference between the positions of each feature in the
    two orderings; 0 exactly when the orderings agree."""
    if a.n_features != b.n_features:
        raise ValueError(
            f"rankings cover different feature counts: {a.n_features} vs {b.n_features}"
        )
    pa = np.asarray(a.position_of, dtype=np.float64)
    pb = np.asarray(b.position_of, dtype=np.float64)
    return float(np.abs(pa - pb).mean())


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int


def _fractional_ranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks with ties replaced by the average of their rank block."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(u: np.ndarray, v: np.ndarray) -> float:
    du = u - u.mean()
    dv = v - v.mean()
    denom = math.sqrt(float((du * du).sum()) * float((dv * dv).sum()))
    return float((du * dv).sum()) / denom


_BETACF_MAX_ITER = 500
_BETACF_EPS = 1e-15
_BETACF_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, evaluated by the modified
    Lentz method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_FPMIN:
        d = _BETACF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction failed to converge for a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to relative error around 1e-10, via the continued fraction on
    whichever tail converges fast."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return float(x)
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def spearman_p_value(rho: float, n: int) -> float:
    """Two-sided significance of a Spearman coefficient under the Student-t
    approximation with n-2 degrees of freedom."""
    if n < 3:
        raise ValueError("need at least 3 observations")
    if abs(rho) >= 1.0:
        return 0.0
    df = n - 2
    t_sq = rho * rho * df / (1.0 - rho * rho)
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t_sq))


def _exact_permutation_p(rank_x: np.ndarray, rank_y: np.ndarray, rho_obs: float) -> float:
    n = rank_x.size
    if n > 10:
        raise ValueError("exact permutation p-values are limited to n <= 10")
    threshold = abs(rho_obs) - 1e-12
    hits = 0
    total = 0
    for perm in itertools.permutations(range(n)):
        total += 1
        if abs(_pearson(rank_x, rank_y[list(perm)])) >= threshold:
            hits += 1
    return hits / total


def spearman(x, y, p_method: str = "t") -> CorrelationResult:
    """Spearman rank correlation between two equal-length samples.

    Parameters
    ----------
    x, y : numeric vectors of length n >= 3; constant vectors are rejected
        because their rank correlation is undefined.
    p_method : "t" for the Student-t approximation (any n), or "exact" for the
        full permutation distribution (n <= 10 only).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
        raise ValueError("x and y must be 1-D vectors of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    if p_method not in ("t", "exact"):
        raise ValueError(f"unknown p_method {p_method!r}")
    rx = _fractional_ranks(x)
    ry = _fractional_ranks(y)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise ValueError("undefined correlation: an input vector is constant")
    rho = max(-1.0, min(1.0, _pearson(rx, ry)))
    if p_method == "exact":
        p = _exact_permutation_p(rx, ry, rho)
    else:
        p = spearman_p_value(rho, x.size)
    return CorrelationResult(rho=rho, p_value=p, n=int(x.size))
