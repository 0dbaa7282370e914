"""Input validation and estimator-protocol plumbing shared across the package."""
from __future__ import annotations

import inspect

import numpy as np


def check_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with at least one row and only finite values."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one row")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values (NaN or infinity)")
    return X


def check_vector(x, n_features: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n_features:
        raise ValueError(
            f"{name} must be a 1-D vector of length {n_features}, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_labels(y, n_rows: int, name: str = "y") -> np.ndarray:
    """Coerce to a 1-D int64 label vector aligned with an n_rows matrix."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_rows:
        raise ValueError(f"{name} must be a 1-D vector of length {n_rows}")
    if not np.issubdtype(y.dtype, np.integer):
        yf = np.asarray(y, dtype=np.float64)
        if not np.all(np.isfinite(yf)) or not np.all(yf == np.round(yf)):
            raise ValueError(f"{name} must contain integer class labels")
        y = yf
    y = y.astype(np.int64)
    if y.size and int(y.min()) < 0:
        raise ValueError(f"{name} contains negative class labels")
    return y


def as_xy(X, y=None):
    """Accept either a LabeledDataset or an (X, y) pair.

    Returns (points, labels, num_classes) where num_classes is None when the
    caller passed raw arrays.
    """
    from .dataset import LabeledDataset

    if isinstance(X, LabeledDataset):
        if y is not None:
            raise ValueError("pass either a LabeledDataset or (X, y), not both")
        return X.points, X.labels, X.num_classes
    if y is None:
        raise ValueError("y is required when X is not a LabeledDataset")
    X = check_matrix(X)
    y = check_labels(y, X.shape[0])
    return X, y, None


def check_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise ValueError(
            f"this {type(estimator).__name__} instance is not fitted yet; call fit first"
        )


class ParamsMixin:
    """get_params/set_params/repr following the scikit-learn estimator protocol.

    Keeps our estimators cloneable by sklearn.base.clone and usable inside
    model-selection helpers without importing scikit-learn here.
    """

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            p.name
            for p in sig.parameters.values()
            if p.name != "self" and p.kind == p.POSITIONAL_OR_KEYWORD
        ]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"
