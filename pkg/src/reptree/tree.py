"""Binary decision trees trained from scratch by greedy impurity minimization.

Internal nodes test a single feature against a threshold t and send a point x
left exactly when t - x_j > 0 (so x_j == t routes right). Each internal node
records its margin, the smallest |t - x_j| over the training points that
reached it; the tree-wide minimum margin bounds how far points may be displaced
(in L-infinity) without changing any routing, which is what
`check_accuracy_preservation` verifies.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._validation import ParamsMixin, as_xy, check_fitted, check_matrix, check_vector
from .dataset import LabeledDataset
from .representativeness import ReprAssignment, is_gamma_balanced

_CRITERIA = ("gini", "entropy")


def _check_proportions(props) -> np.ndarray:
    p = np.asarray(props, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("expected a non-empty 1-D probability vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("invalid probability vector: entries must be finite and >= 0")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"invalid probability vector: sums to {p.sum()!r}, not 1")
    return p


def gini(class_proportions) -> float:
    """Gini index sum(p * (1 - p)); 0 for a pure node, at most 1 - 1/c."""
    p = _check_proportions(class_proportions)
    return float((p * (1.0 - p)).sum())


def entropy(class_proportions) -> float:
    """Shannon entropy -sum(p * log2 p) with 0 log 0 = 0; 0 for a pure node,
    at most log2(c). Base 2, so a balanced binary node scores exactly 1."""
    p = _check_proportions(class_proportions)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def info_gain(
    parent_props, left_props, right_props, n_left: int, n_right: int, criterion: str = "gini"
) -> float:
    """Parent impurity minus the size-weighted impurities of the two children,
    clamped at 0 (exact-arithmetic gain is never below -1e-12)."""
    if criterion not in _CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    if n_left < 1 or n_right < 1:
        raise ValueError("both children must contain at least one point")
    measure = gini if criterion == "gini" else entropy
    n = n_left + n_right
    value = (
        measure(parent_props)
        - (n_left / n) * measure(left_props)
        - (n_right / n) * measure(right_props)
    )
    return max(0.0, value)


def _impurity_rows(counts: np.ndarray, totals: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of each row of an (m, c) count table with row sums `totals`."""
    p = counts / totals[:, None]
    if criterion == "gini":
        return (p * (1.0 - p)).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


@dataclass
class TreeNode:
    """One node of the arena; ids are 1-based with the root at id 1.

    Classification leaves carry class_label; regression leaves (used by the
    boosting stages) carry value instead and have no class_counts.
    """

    node_id: int
    kind: str  # "internal" | "leaf"
    n_samples: int
    class_counts: np.ndarray | None = None
    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    margin: float | None = None
    info_gain: float | None = None
    class_label: int | None = None
    value: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


def route_nodes(nodes: list[TreeNode], X: np.ndarray) -> np.ndarray:
    """Leaf node id reached by every row of X, following the t - x_j > 0 rule."""
    out = np.empty(X.shape[0], dtype=np.int64)
    stack: list[tuple[int, np.ndarray]] = [(1, np.arange(X.shape[0]))]
    while stack:
        nid, idx = stack.pop()
        if idx.size == 0:
            continue
        node = nodes[nid - 1]
        if node.is_leaf:
            out[idx] = nid
            continue
        goes_left = X[idx, node.feature] < node.threshold
        stack.append((node.right, idx[~goes_left]))
        stack.append((node.left, idx[goes_left]))
    return out


def _best_split(X, y, idx, c, criterion, parent_impurity):
    """Best (gain, feature, threshold) over all features and all midpoints
    between consecutive distinct sorted values; ties go to the lowest feature
    index and then the lowest threshold. None when no feature is splittable."""
    best = None
    n = idx.size
    y_node = y[idx]
    for j in range(X.shape[1]):
        values = X[idx, j]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y_node[order]
        cuts = np.flatnonzero(sv[:-1] != sv[1:])
        if cuts.size == 0:
            continue
        one_hot = np.zeros((n, c))
        one_hot[np.arange(n), sy] = 1.0
        cum = np.cumsum(one_hot, axis=0)
        left_counts = cum[cuts]
        right_counts = cum[-1] - left_counts
        n_left = (cuts + 1).astype(np.float64)
        n_right = n - n_left
        weighted = (
            n_left * _impurity_rows(left_counts, n_left, criterion)
            + n_right * _impurity_rows(right_counts, n_right, criterion)
        ) / n
        gains = parent_impurity - weighted
        pos = int(gains.argmax())  # first max -> lowest threshold
        gain = float(gains[pos])
        if best is None or gain > best[0]:  # strict -> lowest feature wins ties
            cut = cuts[pos]
            best = (gain, j, float((sv[cut] + sv[cut + 1]) / 2.0))
    return best


class DecisionTreeClassifier(ParamsMixin):
    """Greedy CART classifier with margin bookkeeping.

    Parameters
    ----------
    criterion : "gini" or "entropy" impurity measure.
    max_depth : maximum root-to-leaf path length, or None for unlimited.
    min_samples_split : smallest node size eligible for splitting.
    min_gain : a split is accepted only when its information gain strictly
        exceeds this value, so zero-gain splits are refused by default.

    Training is a pure function of (data, parameters): repeated fits produce
    byte-identical trees.
    """

    def __init__(self, criterion="gini", max_depth=None, min_samples_split=2, min_gain=0.0):
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_gain = min_gain

    def _validate_params(self):
        if self.criterion not in _CRITERIA:
            raise ValueError(f"criterion must be one of {_CRITERIA}, got {self.criterion!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be at least 1 (or None)")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")
        if self.min_gain < 0:
            raise ValueError("min_gain must be non-negative")

    def fit(self, X, y=None, n_classes: int | None = None):
        """Grow the tree on (X, y) or a LabeledDataset.

        At every node each feature contributes candidate thresholds at the
        midpoints between consecutive distinct sorted values (maximizing the
        resulting margins); the gain-maximizing split is applied until the
        depth limit, purity, min_samples_split, or lack of a strictly
        gain-positive split stops the recursion. Leaf labels are the majority
        class, ties resolved toward the lowest class index.
        """
        self._validate_params()
        X, y, c_ds = as_xy(X, y)
        c = n_classes if n_classes is not None else c_ds
        if c is None:
            c = int(y.max()) + 1
        if c < 1 or int(y.max()) >= c:
            raise ValueError(f"labels exceed n_classes={c}")

        nodes: list[TreeNode] = []
        # Stack of (row indices, depth, parent id, side); pushing right before
        # left yields preorder ids with the left subtree numbered first.
        stack = [(np.arange(X.shape[0]), 0, 0, "")]
        while stack:
            idx, depth, parent, side = stack.pop()
            nid = len(nodes) + 1
            if parent:
                setattr(nodes[parent - 1], side, nid)
            counts = np.bincount(y[idx], minlength=c)
            node = TreeNode(node_id=nid, kind="leaf", n_samples=idx.size, class_counts=counts)
            nodes.append(node)

            pure = counts.max() == idx.size
            depth_ok = self.max_depth is None or depth < self.max_depth
            if pure or not depth_ok or idx.size < self.min_samples_split:
                node.class_label = int(counts.argmax())
                continue
            parent_imp = float(
                _impurity_rows(counts[None, :].astype(float), np.array([float(idx.size)]), self.criterion)[0]
            )
            best = _best_split(X, y, idx, c, self.criterion, parent_imp)
            if best is None or best[0] <= self.min_gain:
                node.class_label = int(counts.argmax())
                continue
            gain, feature, threshold = best
            node.kind = "internal"
            node.feature = feature
            node.threshold = threshold
            node.info_gain = gain
            node.margin = float(np.abs(X[idx, feature] - threshold).min())
            goes_left = X[idx, feature] < threshold
            stack.append((idx[~goes_left], depth + 1, nid, "right"))
            stack.append((idx[goes_left], depth + 1, nid, "left"))

        self.nodes_ = nodes
        self.n_features_in_ = X.shape[1]
        self.n_classes_ = c
        self.train_size_ = X.shape[0]
        margins = [n.margin for n in nodes if not n.is_leaf]
        self.min_margin_ = float(min(margins)) if margins else float("inf")
        return self

    # -- inference ---------------------------------------------------------

    @property
    def internal_ids_(self) -> list[int]:
        check_fitted(self, "nodes_")
        return [n.node_id for n in self.nodes_ if not n.is_leaf]

    @property
    def leaf_ids_(self) -> list[int]:
        check_fitted(self, "nodes_")
        return [n.node_id for n in self.nodes_ if n.is_leaf]

    def _check_X(self, X) -> np.ndarray:
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return X

    def apply(self, X) -> np.ndarray:
        """Leaf node id reached by each row."""
        check_fitted(self, "nodes_")
        return route_nodes(self.nodes_, self._check_X(X))

    def predict(self, X):
        """Class label of the reached leaf; accepts one vector or a matrix."""
        check_fitted(self, "nodes_")
        single = np.asarray(X).ndim == 1
        if single:
            X = check_vector(X, self.n_features_in_)[None, :]
        leaves = self.apply(X)
        labels = np.array([self.nodes_[nid - 1].class_label for nid in leaves], dtype=np.int64)
        return int(labels[0]) if single else labels

    def leaf_path(self, x) -> list[int]:
        """Node ids visited from the root (id 1) down to the reached leaf."""
        check_fitted(self, "nodes_")
        x = check_vector(x, self.n_features_in_)
        path = []
        nid = 1
        while True:
            node = self.nodes_[nid - 1]
            path.append(nid)
            if node.is_leaf:
                return path
            nid = node.left if node.threshold - x[node.feature] > 0 else node.right

    # -- quality measures ----------------------------------------------------

    def feature_importances(self, normalize: bool = False) -> np.ndarray:
        """Total gain contribution per feature: sum over internal nodes using
        feature j of n_samples * info_gain. With normalize=True the vector is
        rescaled to sum to 100 (an all-zero vector stays all-zero)."""
        check_fitted(self, "nodes_")
        raw = np.zeros(self.n_features_in_)
        for node in self.nodes_:
            if not node.is_leaf:
                raw[node.feature] += node.n_samples * node.info_gain
        if normalize:
            total = raw.sum()
            return raw * (100.0 / total) if total > 0 else raw
        return raw

    @property
    def feature_importances_(self) -> np.ndarray:
        """Importances as fractions summing to 1 (scikit-learn convention)."""
        raw = self.feature_importances()
        total = raw.sum()
        return raw / total if total > 0 else raw

    def accuracy_leafwise(self, X, y=None) -> float:
        """Leaf-weighted accuracy: sum over leaves of p_leaf * p_majority, with
        both proportions measured by routing the given data through the tree.
        Algebraically equal to the plain fraction correct."""
        X, y, _ = as_xy(X, y)
        leaves = self.apply(X)
        n = X.shape[0]
        acc = 0.0
        for nid in np.unique(leaves):
            mask = leaves == nid
            p_leaf = mask.sum() / n
            p_label = (y[mask] == self.nodes_[nid - 1].class_label).mean()
            acc += p_leaf * p_label
        return float(acc)

    def accuracy_empirical(self, X, y=None) -> float:
        """Plain fraction of points whose prediction matches the label."""
        X, y, _ = as_xy(X, y)
        return float((self.predict(X) == y).mean())

    def score(self, X, y) -> float:
        return self.accuracy_empirical(X, y)

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        check_fitted(self, "nodes_")
        nodes = []
        for n in self.nodes_:
            doc = {"id": n.node_id, "kind": n.kind, "n": n.n_samples,
                   "counts": [int(v) for v in n.class_counts]}
            if n.is_leaf:
                doc["class"] = n.class_label
            else:
                doc.update(feature=n.feature, threshold=n.threshold, margin=n.margin,
                           info_gain=n.info_gain, left=n.left, right=n.right)
            nodes.append(doc)
        return {
            "model_type": "decision_tree",
            "format_version": 1,
            "params": {"criterion": self.criterion, "max_depth": self.max_depth,
                       "min_samples_split": self.min_samples_split, "min_gain": self.min_gain},
            "n_features": self.n_features_in_,
            "n_classes": self.n_classes_,
            "train_size": self.train_size_,
            "min_margin": None if np.isinf(self.min_margin_) else self.min_margin_,
            "nodes": nodes,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DecisionTreeClassifier":
        if doc.get("model_type") != "decision_tree":
            raise ValueError(f"not a decision tree document: {doc.get('model_type')!r}")
        est = cls(**doc["params"])
        nodes = []
        for nd in doc["nodes"]:
            counts = np.asarray(nd["counts"], dtype=np.int64)
            if nd["kind"] == "leaf":
                nodes.append(TreeNode(nd["id"], "leaf", nd["n"], counts,
                                      class_label=int(nd["class"])))
            else:
                nodes.append(TreeNode(nd["id"], "internal", nd["n"], counts,
                                      feature=int(nd["feature"]), threshold=float(nd["threshold"]),
                                      left=int(nd["left"]), right=int(nd["right"]),
                                      margin=float(nd["margin"]), info_gain=float(nd["info_gain"])))
        est.nodes_ = nodes
        est.n_features_in_ = int(doc["n_features"])
        est.n_classes_ = int(doc["n_classes"])
        est.train_size_ = int(doc["train_size"])
        margins = [n.margin for n in nodes if not n.is_leaf]
        est.min_margin_ = float(min(margins)) if margins else float("inf")
        return est

    @classmethod
    def from_json(cls, text: str) -> "DecisionTreeClassifier":
        return cls.from_json_dict(json.loads(text))

    def to_text(self) -> str:
        """Human-readable nested dump, one node per line; round-trips through
        from_text because floats are written with repr precision."""
        check_fitted(self, "nodes_")
        header = (
            f"tree criterion={self.criterion} max_depth={self.max_depth} "
            f"min_samples_split={self.min_samples_split} min_gain={self.min_gain!r} "
            f"n_features={self.n_features_in_} n_classes={self.n_classes_} "
            f"train_size={self.train_size_}"
        )
        lines = [header]
        depth_of = {1: 0}
        for n in self.nodes_:  # arena order is preorder, parents precede children
            if not n.is_leaf:
                depth_of[n.left] = depth_of[n.node_id] + 1
                depth_of[n.right] = depth_of[n.node_id] + 1
        for n in self.nodes_:
            pad = "  " * depth_of[n.node_id]
            counts = ",".join(str(int(v)) for v in n.class_counts)
            if n.is_leaf:
                lines.append(
                    f"{pad}node id={n.node_id} leaf class={n.class_label} "
                    f"n={n.n_samples} counts={counts}"
                )
            else:
                lines.append(
                    f"{pad}node id={n.node_id} internal feature={n.feature} "
                    f"threshold={n.threshold!r} margin={n.margin!r} gain={n.info_gain!r} "
                    f"left={n.left} right={n.right} n={n.n_samples} counts={counts}"
                )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DecisionTreeClassifier":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("tree "):
            raise ValueError("not a tree text document")

        def fields(line: str) -> dict:
            out = {}
            for token in line.split()[1:]:
                if token in ("leaf", "internal"):
                    out["kind"] = token
                    continue
                key, _, value = token.partition("=")
                out[key] = value
            return out

        head = fields(lines[0])
        max_depth = None if head["max_depth"] == "None" else int(head["max_depth"])
        est = cls(criterion=head["criterion"], max_depth=max_depth,
                  min_samples_split=int(head["min_samples_split"]),
                  min_gain=float(head["min_gain"]))
        nodes = []
        for line in lines[1:]:
            f = fields(line)
            counts = np.asarray([int(v) for v in f["counts"].split(",")], dtype=np.int64)
            if f["kind"] == "leaf":
                nodes.append(TreeNode(int(f["id"]), "leaf", int(f["n"]), counts,
                                      class_label=int(f["class"])))
            else:
                nodes.append(TreeNode(int(f["id"]), "internal", int(f["n"]), counts,
                                      feature=int(f["feature"]), threshold=float(f["threshold"]),
                                      left=int(f["left"]), right=int(f["right"]),
                                      margin=float(f["margin"]), info_gain=float(f["gain"])))
        nodes.sort(key=lambda n: n.node_id)
        est.nodes_ = nodes
        est.n_features_in_ = int(head["n_features"])
        est.n_classes_ = int(head["n_classes"])
        est.train_size_ = int(head["train_size"])
        margins = [n.margin for n in nodes if not n.is_leaf]
        est.min_margin_ = float(min(margins)) if margins else float("inf")
        return est


@dataclass(frozen=True)
class PreservationVerdict:
    """Outcome of checking accuracy preservation on a balanced assignment.

    The guaranteed property is one-directional: whenever epsilon < min_margin
    (hypothesis_holds), every represented pair must reach the same leaf and the
    two leaf-weighted accuracies must agree exactly as rationals. When the
    hypothesis fails, no claim is made and `holds` is vacuously true.
    """

    epsilon: float
    min_margin: float
    gamma: int
    hypothesis_holds: bool
    routes_match: bool
    n_route_mismatches: int
    accuracy_full: float
    accuracy_subset: float
    accuracies_equal_exact: bool
    leaf_counts_proportional: bool

    @property
    def holds(self) -> bool:
        return (not self.hypothesis_holds) or (
            self.routes_match and self.accuracies_equal_exact
        )


def check_accuracy_preservation(
    tree: DecisionTreeClassifier,
    X: LabeledDataset,
    Xt: LabeledDataset,
    assignment: ReprAssignment,
) -> PreservationVerdict:
    """Evaluate the margin hypothesis and its consequences for one tree and one
    balanced representative assignment.

    Accuracy equality is decided on integer counts (cross-multiplication), not
    floats: with a balanced assignment the per-leaf class counts of the subset
    are exactly the full-dataset counts divided by gamma, so no tolerance is
    involved.
    """
    balance = is_gamma_balanced(assignment)
    if not balance.ok:
        raise ValueError(
            "assignment is not gamma-balanced: " + "; ".join(balance.problems)
        )
    check_fitted(tree, "nodes_")
    leaves_full = tree.apply(X.points)
    leaves_sub = tree.apply(Xt.points)
    pair_ok = leaves_full == leaves_sub[assignment.rep_of]
    mismatches = int((~pair_ok).sum())

    leaf_label = np.zeros(len(tree.nodes_) + 1, dtype=np.int64)
    for node in tree.nodes_:
        if node.is_leaf:
            leaf_label[node.node_id] = node.class_label
    correct_full = int((X.labels == leaf_label[leaves_full]).sum())
    correct_sub = int((Xt.labels == leaf_label[leaves_sub]).sum())
    acc_equal = correct_full * Xt.n_points == correct_sub * X.n_points

    c = max(X.num_classes, Xt.num_classes)
    n_ids = len(tree.nodes_) + 1
    cont_full = np.zeros((n_ids, c), dtype=np.int64)
    cont_sub = np.zeros((n_ids, c), dtype=np.int64)
    np.add.at(cont_full, (leaves_full, X.labels), 1)
    np.add.at(cont_sub, (leaves_sub, Xt.labels), 1)
    proportional = bool(
        np.array_equal(cont_full * Xt.n_points, cont_sub * X.n_points)
    )

    return PreservationVerdict(
        epsilon=assignment.epsilon,
        min_margin=tree.min_margin_,
        gamma=balance.gamma,
        hypothesis_holds=assignment.epsilon < tree.min_margin_,
        routes_match=mismatches == 0,
        n_route_mismatches=mismatches,
        accuracy_full=tree.accuracy_leafwise(X),
        accuracy_subset=tree.accuracy_leafwise(Xt),
        accuracies_equal_exact=acc_equal,
        leaf_counts_proportional=proportional,
    )
