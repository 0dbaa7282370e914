"""Binary gradient-boosted trees with logistic loss.

Classic gradient boosting: the model maintains an additive raw score started at
the training log-odds; every stage fits a regression tree to the current
residuals y - sigmoid(score) using squared-error (variance-reduction) split
gains, sets leaf values by a one-step Newton update, and is added with a
learning-rate shrinkage. Binary tasks only.
"""
from __future__ import annotations

import json

import numpy as np

from ._validation import ParamsMixin, as_xy, check_fitted, check_matrix, check_vector
from .tree import TreeNode, route_nodes

# |raw score| is clipped here before the logistic transform so probabilities
# stay strictly inside (0, 1) in double precision.
_SCORE_CLIP = 36.0

_NEWTON_GUARD = 1e-12


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -_SCORE_CLIP, _SCORE_CLIP)))


def _log_loss(y, prob) -> float:
    return float(-(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob)).mean())


def _sse(total, total_sq, n):
    # sum of squared deviations from the mean, computed from moments
    return total_sq - total * total / n


def _best_regression_split(X, target, idx):
    """Best (per-sample variance reduction, feature, threshold) for residual
    targets; same midpoint candidates and tie rules as the classifier."""
    best = None
    n = idx.size
    t_node = target[idx]
    for j in range(X.shape[1]):
        values = X[idx, j]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        st = t_node[order]
        cuts = np.flatnonzero(sv[:-1] != sv[1:])
        if cuts.size == 0:
            continue
        csum = np.cumsum(st)
        csum_sq = np.cumsum(st * st)
        n_left = (cuts + 1).astype(np.float64)
        n_right = n - n_left
        left_sse = _sse(csum[cuts], csum_sq[cuts], n_left)
        right_sse = _sse(csum[-1] - csum[cuts], csum_sq[-1] - csum_sq[cuts], n_right)
        parent_sse = _sse(csum[-1], csum_sq[-1], float(n))
        gains = (parent_sse - left_sse - right_sse) / n
        pos = int(gains.argmax())
        gain = float(gains[pos])
        if best is None or gain > best[0]:
            cut = cuts[pos]
            best = (gain, j, float((sv[cut] + sv[cut + 1]) / 2.0))
    return best


def _fit_stage_tree(X, residual, hessian, max_depth, min_samples_split):
    """Regression tree on the residuals; leaves carry the Newton step
    sum(residual) / sum(hessian), zeroed when the denominator underflows."""
    nodes: list[TreeNode] = []
    stack = [(np.arange(X.shape[0]), 0, 0, "")]
    while stack:
        idx, depth, parent, side = stack.pop()
        nid = len(nodes) + 1
        if parent:
            setattr(nodes[parent - 1], side, nid)
        node = TreeNode(node_id=nid, kind="leaf", n_samples=idx.size)
        nodes.append(node)

        depth_ok = max_depth is None or depth < max_depth
        best = None
        if depth_ok and idx.size >= min_samples_split:
            best = _best_regression_split(X, residual, idx)
        if best is None or best[0] <= 0.0:
            denom = hessian[idx].sum()
            node.value = float(residual[idx].sum() / denom) if denom >= _NEWTON_GUARD else 0.0
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
    return nodes


def _stage_outputs(nodes, X):
    leaf_value = np.zeros(len(nodes) + 1)
    for node in nodes:
        if node.is_leaf:
            leaf_value[node.node_id] = node.value
    return leaf_value[route_nodes(nodes, X)]


def _stage_importances(nodes, n_features) -> np.ndarray:
    raw = np.zeros(n_features)
    for node in nodes:
        if not node.is_leaf:
            raw[node.feature] += node.n_samples * node.info_gain
    return raw


class GradientBoostingBinaryClassifier(ParamsMixin):
    """Gradient-boosted regression trees for two-class problems.

    Parameters
    ----------
    n_stages : number of boosting stages (trees).
    max_depth : depth limit of every stage tree.
    learning_rate : shrinkage applied to each stage's contribution.
    min_samples_split : smallest node size eligible for splitting.

    Fitted attributes include stages_ (the trees), initial_score_ (training
    log-odds), train_log_losses_ (training log-loss after each stage) and
    stage_importances_ (per-stage raw importance vectors).
    """

    def __init__(self, n_stages=25, max_depth=3, learning_rate=0.1, min_samples_split=2):
        self.n_stages = n_stages
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_samples_split = min_samples_split

    def _validate_params(self):
        if self.n_stages < 1:
            raise ValueError("n_stages must be at least 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be at least 1 (or None)")
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in [0, 1]")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")

    def fit(self, X, y=None):
        self._validate_params()
        X, y, c_ds = as_xy(X, y)
        if c_ds is not None and c_ds != 2:
            raise ValueError(f"binary classification only, got {c_ds} classes")
        present = np.unique(y)
        if present.size == 1:
            raise ValueError(
                "training data contains a single class; the initial log-odds "
                "would be infinite"
            )
        if present.size > 2 or int(present.max()) > 1:
            raise ValueError("binary classification only: labels must be 0 and 1")

        y = y.astype(np.float64)
        p1 = y.mean()
        self.initial_score_ = float(np.log(p1 / (1.0 - p1)))
        score = np.full(X.shape[0], self.initial_score_)
        stages: list[list[TreeNode]] = []
        losses: list[float] = []
        importances: list[np.ndarray] = []
        for _ in range(self.n_stages):
            prob = _sigmoid(score)
            residual = y - prob
            hessian = prob * (1.0 - prob)
            nodes = _fit_stage_tree(
                X, residual, hessian, self.max_depth, self.min_samples_split
            )
            score = score + self.learning_rate * _stage_outputs(nodes, X)
            stages.append(nodes)
            losses.append(_log_loss(y, _sigmoid(score)))
            importances.append(_stage_importances(nodes, X.shape[1]))
        self.stages_ = stages
        self.train_log_losses_ = losses
        self.stage_importances_ = np.vstack(importances)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_X(self, X) -> np.ndarray:
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X

    def decision_function(self, X):
        """Raw additive score: initial log-odds plus the shrunk stage outputs."""
        check_fitted(self, "stages_")
        single = np.asarray(X).ndim == 1
        if single:
            X = check_vector(X, self.n_features_in_)[None, :]
        X = self._check_X(X)
        score = np.full(X.shape[0], self.initial_score_)
        for nodes in self.stages_:
            score = score + self.learning_rate * _stage_outputs(nodes, X)
        return float(score[0]) if single else score

    def predict_proba(self, X):
        """Probability of class 1, strictly inside (0, 1) for finite inputs."""
        raw = self.decision_function(X)
        if np.isscalar(raw):
            return float(_sigmoid(np.asarray(raw)))
        return _sigmoid(raw)

    def predict(self, X):
        """Class label; a probability of exactly 0.5 resolves to class 1."""
        proba = self.predict_proba(X)
        if np.isscalar(proba):
            return int(proba >= 0.5)
        return (proba >= 0.5).astype(np.int64)

    def score(self, X, y) -> float:
        X, y, _ = as_xy(X, y)
        return float((self.predict(X) == y).mean())

    def feature_importances(self, normalize: bool = False) -> np.ndarray:
        """Raw importances summed across all stages; normalize=True rescales
        the vector to sum to 100 (all-zero stays all-zero)."""
        check_fitted(self, "stages_")
        raw = self.stage_importances_.sum(axis=0)
        if normalize:
            total = raw.sum()
            return raw * (100.0 / total) if total > 0 else raw
        return raw

    @property
    def feature_importances_(self) -> np.ndarray:
        raw = self.feature_importances()
        total = raw.sum()
        return raw / total if total > 0 else raw

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        check_fitted(self, "stages_")
        stage_docs = []
        for nodes in self.stages_:
            docs = []
            for n in nodes:
                if n.is_leaf:
                    docs.append({"id": n.node_id, "kind": "leaf", "n": n.n_samples,
                                 "value": n.value})
                else:
                    docs.append({"id": n.node_id, "kind": "internal", "n": n.n_samples,
                                 "feature": n.feature, "threshold": n.threshold,
                                 "margin": n.margin, "info_gain": n.info_gain,
                                 "left": n.left, "right": n.right})
            stage_docs.append(docs)
        return {
            "model_type": "gradient_boosting",
            "format_version": 1,
            "params": {"n_stages": self.n_stages, "max_depth": self.max_depth,
                       "learning_rate": self.learning_rate,
                       "min_samples_split": self.min_samples_split},
            "n_features": self.n_features_in_,
            "initial_score": self.initial_score_,
            "train_log_losses": list(self.train_log_losses_),
            "stages": stage_docs,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GradientBoostingBinaryClassifier":
        if doc.get("model_type") != "gradient_boosting":
            raise ValueError(f"not a gradient boosting document: {doc.get('model_type')!r}")
        est = cls(**doc["params"])
        stages = []
        for stage in doc["stages"]:
            nodes = []
            for nd in stage:
                if nd["kind"] == "leaf":
                    nodes.append(TreeNode(nd["id"], "leaf", nd["n"], value=float(nd["value"])))
                else:
                    nodes.append(TreeNode(nd["id"], "internal", nd["n"],
                                          feature=int(nd["feature"]),
                                          threshold=float(nd["threshold"]),
                                          left=int(nd["left"]), right=int(nd["right"]),
                                          margin=float(nd["margin"]),
                                          info_gain=float(nd["info_gain"])))
            stages.append(nodes)
        est.stages_ = stages
        est.initial_score_ = float(doc["initial_score"])
        est.train_log_losses_ = [float(v) for v in doc["train_log_losses"]]
        est.n_features_in_ = int(doc["n_features"])
        est.stage_importances_ = np.vstack(
            [_stage_importances(nodes, est.n_features_in_) for nodes in stages]
        )
        return est

    @classmethod
    def from_json(cls, text: str) -> "GradientBoostingBinaryClassifier":
        return cls.from_json_dict(json.loads(text))
