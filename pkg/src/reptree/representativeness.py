"""Directed representativeness between labeled datasets under the Chebyshev metric.

A candidate dataset covers a reference dataset within radius eps when every
reference point has a same-class candidate point at L-infinity distance at most
eps. `epsilon_of` computes the smallest such radius together with the
nearest-representative assignment; the remaining helpers verify and construct
balanced assignments (every representative covering the same number of points).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset

# Above this many pairwise distance terms the KD-tree path takes over.
_AUTO_KDTREE_THRESHOLD = 50_000_000


@dataclass(frozen=True)
class ReprAssignment:
    """Mapping from each covered point to its representative.

    rep_of[i] is the row of the candidate dataset representing point i, or -1
    when no same-class candidate exists. epsilon is the largest assigned
    L-infinity distance (+inf when any class is uncovered). gamma is the common
    representation count when the assignment is perfectly balanced, else None.
    """

    rep_of: np.ndarray
    epsilon: float
    gamma: int | None
    per_rep_counts: np.ndarray
    uncovered_classes: tuple[int, ...] = ()

    @property
    def complete(self) -> bool:
        return bool((self.rep_of >= 0).all())


@dataclass(frozen=True)
class BalanceCheck:
    ok: bool
    gamma: int | None
    problems: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def _chebyshev_to_point(points: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.abs(points - p).max(axis=1)


def _brute_nearest(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reference scan: per row of A the min Chebyshev distance into B and the
    first (lowest) index attaining it. Chunked to bound memory."""
    n_a, d = A.shape
    best = np.empty(n_a)
    arg = np.empty(n_a, dtype=np.int64)
    step = max(1, int(4_000_000 // max(1, B.shape[0] * d)))
    for s in range(0, n_a, step):
        block = np.abs(A[s : s + step, None, :] - B[None, :, :]).max(axis=2)
        j = block.argmin(axis=1)
        arg[s : s + step] = j
        best[s : s + step] = block[np.arange(block.shape[0]), j]
    return best, arg


def _kdtree_nearest(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """KD-tree accelerated nearest lookup; must agree with _brute_nearest
    bit-for-bit (Chebyshev distances involve no accumulation, and ties are
    re-broken to the lowest index below)."""
    from scipy.spatial import cKDTree

    tree = cKDTree(B)
    dist, _ = tree.query(A, k=1, p=np.inf)
    balls = tree.query_ball_point(A, r=dist, p=np.inf)
    arg = np.fromiter((min(b) for b in balls), dtype=np.int64, count=len(A))
    return np.asarray(dist, dtype=np.float64), arg


def epsilon_of(X: LabeledDataset, Xt: LabeledDataset, method: str = "auto") -> ReprAssignment:
    """Smallest radius at which Xt covers X, with the minimizing assignment.

    For each point of X, its representative is the same-class point of Xt at
    minimum L-infinity distance (ties broken toward the lowest Xt row index);
    epsilon is the maximum of those minima. Classes of X absent from Xt leave
    their points unassigned, set epsilon to +inf, and are listed in
    uncovered_classes rather than raising.

    method: "bruteforce" (reference scan), "kdtree", or "auto" (size-based).
    """
    if X.n_features != Xt.n_features:
        raise ValueError(
            f"dimension mismatch: {X.n_features} vs {Xt.n_features} features"
        )
    if method not in ("auto", "bruteforce", "kdtree"):
        raise ValueError(f"unknown method {method!r}")
    rep = np.full(X.n_points, -1, dtype=np.int64)
    best = np.full(X.n_points, np.inf)
    uncovered: list[int] = []
    for k in np.unique(X.labels):
        xi = np.flatnonzero(X.labels == k)
        ti = np.flatnonzero(Xt.labels == k)
        if ti.size == 0:
            uncovered.append(int(k))
            continue
        A = X.points[xi]
        B = Xt.points[ti]
        if method == "kdtree" or (
            method == "auto" and A.shape[0] * B.shape[0] * A.shape[1] > _AUTO_KDTREE_THRESHOLD
        ):
            dist, j = _kdtree_nearest(A, B)
        else:
            dist, j = _brute_nearest(A, B)
        rep[xi] = ti[j]
        best[xi] = dist
    assigned = rep >= 0
    if uncovered:
        epsilon = float("inf")
    else:
        epsilon = float(best[assigned].max())
    counts = np.bincount(rep[assigned], minlength=Xt.n_points)
    gamma = None
    if assigned.all() and counts.size and counts.max() == counts.min():
        gamma = int(counts[0])
    return ReprAssignment(rep, epsilon, gamma, counts, tuple(uncovered))


def identity_assignment(X: LabeledDataset, Xt: LabeledDataset) -> ReprAssignment:
    """Pair row i of X with row i of Xt (requires equal sizes and labels);
    epsilon is the largest rowwise L-infinity displacement and gamma is 1."""
    if X.n_points != Xt.n_points or X.n_features != Xt.n_features:
        raise ValueError("identity assignment requires datasets of identical shape")
    if not np.array_equal(X.labels, Xt.labels):
        raise ValueError("identity assignment requires identical label vectors")
    epsilon = float(np.abs(X.points - Xt.points).max())
    rep = np.arange(X.n_points, dtype=np.int64)
    return ReprAssignment(rep, epsilon, 1, np.ones(X.n_points, dtype=np.int64))


def is_gamma_balanced(assignment: ReprAssignment) -> BalanceCheck:
    """True when every point has a representative and every representative
    covers the same number of points; otherwise the diagnostics name the
    extremes of the count spread."""
    problems: list[str] = []
    missing = np.flatnonzero(assignment.rep_of < 0)
    if missing.size:
        problems.append(
            f"{missing.size} point(s) have no representative (first at index {int(missing[0])})"
        )
    counts = assignment.per_rep_counts
    if counts.size == 0:
        problems.append("assignment has no representatives")
    elif counts.max() != counts.min():
        lo = int(counts.argmin())
        hi = int(counts.argmax())
        problems.append(
            "representation counts are not uniform: "
            f"representative {lo} covers {int(counts[lo])} point(s) while "
            f"representative {hi} covers {int(counts[hi])}"
        )
    if problems:
        return BalanceCheck(False, None, tuple(problems))
    return BalanceCheck(True, int(counts[0]), ())


def construct_balanced_subset(
    X: LabeledDataset, gamma: int, seed: int
) -> tuple[LabeledDataset, ReprAssignment]:
    """Build a balanced representative subset by farthest-point grouping.

    Per class: repeatedly pick the unassigned point farthest (Chebyshev, via
    max-min distance) from the anchors chosen so far — the first anchor drawn
    at random from the class — group it with its gamma-1 nearest unassigned
    same-class neighbors, and keep the group member minimizing the maximum
    distance to the group (the 1-center medoid) as the representative. Every
    class count must be divisible by gamma. The returned assignment maps each
    point to its group medoid, so its epsilon is the realized covering radius
    under this grouping (an upper bound for epsilon_of).
    """
    if gamma < 1:
        raise ValueError("gamma must be at least 1")
    counts = X.class_counts()
    for k in range(X.num_classes):
        if counts[k] % gamma:
            raise ValueError(
                f"class {k} has {int(counts[k])} points, not divisible by "
                f"gamma={gamma} (remainder {int(counts[k]) % gamma})"
            )
    rng = np.random.default_rng(seed)
    rep_of = np.full(X.n_points, -1, dtype=np.int64)
    rep_rows: list[int] = []
    for k in range(X.num_classes):
        cls_idx = np.flatnonzero(X.labels == k)
        if cls_idx.size == 0:
            continue
        pts = X.points[cls_idx]
        n_k = cls_idx.size
        unassigned = np.ones(n_k, dtype=bool)
        min_dist_to_anchors = np.full(n_k, np.inf)
        while unassigned.any():
            candidates = np.flatnonzero(unassigned)
            if np.isinf(min_dist_to_anchors[candidates]).all():
                anchor = int(candidates[rng.integers(candidates.size)])
            else:
                masked = np.where(unassigned, min_dist_to_anchors, -np.inf)
                anchor = int(masked.argmax())
            dist_anchor = _chebyshev_to_point(pts, pts[anchor])
            min_dist_to_anchors = np.minimum(min_dist_to_anchors, dist_anchor)
            others = candidates[candidates != anchor]
            order = others[np.argsort(dist_anchor[others], kind="stable")]
            group = np.sort(np.concatenate(([anchor], order[: gamma - 1])))
            pair = np.abs(pts[group][:, None, :] - pts[group][None, :, :]).max(axis=2)
            medoid = int(group[pair.max(axis=1).argmin()])
            slot = len(rep_rows)
            rep_rows.append(int(cls_idx[medoid]))
            rep_of[cls_idx[group]] = slot
            unassigned[group] = False
    Xt = X.subset(np.asarray(rep_rows, dtype=np.int64))
    epsilon = float(np.abs(X.points - Xt.points[rep_of]).max())
    per_rep = np.full(len(rep_rows), gamma, dtype=np.int64)
    return Xt, ReprAssignment(rep_of, epsilon, gamma, per_rep)


def perturbed_copy(X: LabeledDataset, radius: float, seed: int) -> LabeledDataset:
    """Displace every coordinate independently by uniform noise in
    (-radius, radius), keeping labels; the copy covers X within radius under
    the identity assignment."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-radius, radius, X.points.shape)
    return LabeledDataset(
        X.points + noise, X.labels, X.num_classes, X.feature_names
    )
