"""Labeled point clouds: CSV ingestion, synthetic generators, splitting, sampling, scaling."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import ParamsMixin, check_fitted, check_labels, check_matrix


@dataclass(frozen=True)
class LabeledDataset:
    """N points in R^d with integer class labels in {0..num_classes-1}.

    Immutable after construction: the underlying arrays are copied and marked
    read-only, so instances are safe to share across threads.
    """

    points: np.ndarray
    labels: np.ndarray
    num_classes: int
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        points = check_matrix(self.points, name="points")
        labels = check_labels(self.labels, points.shape[0], name="labels")
        if self.num_classes < 1:
            raise ValueError("num_classes must be at least 1")
        if labels.size and int(labels.max()) >= self.num_classes:
            raise ValueError(
                f"label {int(labels.max())} out of range for num_classes={self.num_classes}"
            )
        names = tuple(self.feature_names) or tuple(f"f{j}" for j in range(points.shape[1]))
        if len(names) != points.shape[1]:
            raise ValueError(
                f"expected {points.shape[1]} feature names, got {len(names)}"
            )
        points = points.copy()
        labels = labels.copy()
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_features(self) -> int:
        return self.points.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, indices) -> "LabeledDataset":
        """New dataset holding the given rows; class universe and names carry over."""
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.points[indices], self.labels[indices], self.num_classes, self.feature_names
        )

    def __repr__(self) -> str:
        return (
            f"LabeledDataset(n={self.n_points}, d={self.n_features}, "
            f"classes={self.num_classes})"
        )


@dataclass(frozen=True)
class SplitSpec:
    """How to partition a dataset into train and test."""

    train_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def load_csv(path, label_column: int | str = -1, has_header: bool = True) -> LabeledDataset:
    """Load a labeled dataset from an RFC-4180-style CSV file.

    Parameters
    ----------
    path : file path
    label_column : column name (requires a header) or integer index; negative
        indices count from the right, so the default -1 takes the last column.
    has_header : whether the first row holds column names.

    Labels may be integer literals or arbitrary strings; either way they are
    remapped to 0..c-1 in first-appearance order. A file with a single
    distinct label is accepted but reported through the warnings channel.
    """
    rows: list[tuple[int, list[str]]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if row:
                rows.append((reader.line_num, row))
    if not rows:
        raise ValueError(f"{path}: empty file")

    header: list[str] | None = None
    if has_header:
        header = [name.strip() for name in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: no data rows after the header")

    n_cols = len(rows[0][1])
    if n_cols < 2:
        raise ValueError(f"{path}: need at least one feature column plus the label column")

    if isinstance(label_column, str) and header is not None and label_column in header:
        label_idx = header.index(label_column)
    else:
        try:
            label_idx = int(label_column)
        except (TypeError, ValueError):
            raise ValueError(
                f"{path}: label column {label_column!r} not found"
                + ("" if has_header else " (file has no header; use a column index)")
            ) from None
        if label_idx < 0:
            label_idx += n_cols
        if not 0 <= label_idx < n_cols:
            raise ValueError(f"{path}: label column index {label_column} out of range")

    feature_cols = [j for j in range(n_cols) if j != label_idx]
    if header is not None:
        feature_names = tuple(header[j] for j in feature_cols)
    else:
        feature_names = tuple(f"f{i}" for i in range(len(feature_cols)))

    features = np.empty((len(rows), len(feature_cols)), dtype=np.float64)
    raw_labels: list[str] = []
    for i, (line_num, row) in enumerate(rows):
        if len(row) != n_cols:
            raise ValueError(
                f"{path}: line {line_num}: expected {n_cols} fields, got {len(row)}"
            )
        for out_j, j in enumerate(feature_cols):
            cell = row[j].strip()
            col_name = feature_names[out_j]
            try:
                value = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: line {line_num}, column {col_name!r}: "
                    f"cannot parse {cell!r} as a number"
                ) from None
            if not np.isfinite(value):
                raise ValueError(
                    f"{path}: line {line_num}, column {col_name!r}: "
                    f"{cell!r} is not a finite number"
                )
            features[i, out_j] = value
        raw_labels.append(row[label_idx].strip())

    # Integer labels when every cell parses as one, else string factorization.
    try:
        parsed: list[object] = [int(s, 10) for s in raw_labels]
    except ValueError:
        parsed = list(raw_labels)
    mapping: dict[object, int] = {}
    labels = np.empty(len(parsed), dtype=np.int64)
    for i, value in enumerate(parsed):
        if value not in mapping:
            mapping[value] = len(mapping)
        labels[i] = mapping[value]
    if len(mapping) == 1:
        only = next(iter(mapping))
        warnings.warn(
            f"{path}: only one distinct label value ({only!r}) in the file",
            UserWarning,
            stacklevel=2,
        )
    return LabeledDataset(features, labels, len(mapping), feature_names)


def generate_circles(
    n: int, noise_sd: float = 0.1, inner_factor: float = 0.5, seed: int = 0
) -> LabeledDataset:
    """Two noisy concentric circles: ceil(n/2) outer points (class 0) near the
    unit circle and floor(n/2) inner points (class 1) near radius inner_factor,
    with independent Gaussian noise of std noise_sd on each coordinate."""
    if n < 4:
        raise ValueError("n must be at least 4")
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    if not 0.0 < inner_factor < 1.0:
        raise ValueError("inner_factor must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    n_outer = (n + 1) // 2
    n_inner = n // 2
    parts = []
    for radius, count in ((1.0, n_outer), (inner_factor, n_inner)):
        theta = rng.uniform(0.0, 2.0 * np.pi, count)
        ring = radius * np.column_stack((np.cos(theta), np.sin(theta)))
        ring = ring + rng.normal(0.0, noise_sd, (count, 2))
        parts.append(ring)
    points = np.vstack(parts)
    labels = np.concatenate((np.zeros(n_outer, np.int64), np.ones(n_inner, np.int64)))
    return LabeledDataset(points, labels, 2, ("x1", "x2"))


def generate_gaussian_mixture(
    n: int,
    num_features: int,
    num_classes: int,
    seed: int = 0,
    center_spread: float = 4.0,
    cluster_sd: float = 1.0,
) -> LabeledDataset:
    """Isotropic Gaussian blobs, one cluster per class, centers drawn uniformly
    from [-center_spread, center_spread]^d. Class sizes differ by at most one."""
    if num_classes < 1:
        raise ValueError("num_classes must be at least 1")
    if n < num_classes:
        raise ValueError("need at least one point per class")
    if num_features < 1:
        raise ValueError("num_features must be at least 1")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-center_spread, center_spread, (num_classes, num_features))
    sizes = [n // num_classes + (1 if k < n % num_classes else 0) for k in range(num_classes)]
    parts = [
        centers[k] + rng.normal(0.0, cluster_sd, (sizes[k], num_features))
        for k in range(num_classes)
    ]
    labels = np.concatenate(
        [np.full(sizes[k], k, dtype=np.int64) for k in range(num_classes)]
    )
    return LabeledDataset(np.vstack(parts), labels, num_classes)


def split(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint train/test partition, deterministic per seed.

    Stratified mode preserves per-class proportions within rounding; both
    sides must end up non-empty.
    """
    rng = np.random.default_rng(spec.seed)
    n = ds.n_points
    if spec.stratified:
        parts = []
        for k in range(ds.num_classes):
            idx = np.flatnonzero(ds.labels == k)
            if idx.size == 0:
                continue
            perm = rng.permutation(idx)
            n_train_k = int(round(spec.train_fraction * idx.size))
            parts.append(perm[: min(n_train_k, idx.size)])
        train_idx = np.sort(np.concatenate(parts)) if parts else np.empty(0, np.int64)
    else:
        perm = rng.permutation(n)
        train_idx = np.sort(perm[: int(round(spec.train_fraction * n))])
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask)
    if train_idx.size == 0 or test_idx.size == 0:
        raise ValueError(
            f"train_fraction={spec.train_fraction} leaves an empty side for N={n}"
        )
    return ds.subset(train_idx), ds.subset(test_idx)


def sample_subset(ds: LabeledDataset, fraction: float, seed: int) -> LabeledDataset:
    """Uniform sample without replacement of round(fraction * N) rows."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    size = int(round(fraction * ds.n_points))
    if size < 1:
        raise ValueError(
            f"fraction={fraction} of {ds.n_points} points yields an empty subset"
        )
    rng = np.random.default_rng(seed)
    take = np.sort(rng.permutation(ds.n_points)[:size])
    return ds.subset(take)


class MinMaxScaler(ParamsMixin):
    """Per-feature affine map onto [0, 1], fitted on one dataset and applicable
    to any other with the same features.

    Constant features map to 0. Values outside the fitted range extrapolate
    beyond [0, 1] (no clipping), so a train-fitted scaler keeps test data in
    the same coordinate frame.
    """

    def __init__(self):
        pass

    def fit(self, data) -> "MinMaxScaler":
        X = data.points if isinstance(data, LabeledDataset) else check_matrix(data)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.span_ = self.data_max_ - self.data_min_
        return self

    def _apply(self, X: np.ndarray) -> np.ndarray:
        # Divide by the span rather than multiplying by its reciprocal: the
        # reciprocal overflows for subnormal spans while division stays exact.
        divisor = np.where(self.span_ > 0, self.span_, 1.0)
        return np.where(self.span_ > 0, (X - self.data_min_) / divisor, 0.0)

    def transform(self, data):
        check_fitted(self, "span_")
        if isinstance(data, LabeledDataset):
            return LabeledDataset(
                self._apply(data.points), data.labels, data.num_classes, data.feature_names
            )
        return self._apply(check_matrix(data))

    def fit_transform(self, data):
        return self.fit(data).transform(data)


def minmax_scale(ds: LabeledDataset) -> tuple[LabeledDataset, MinMaxScaler]:
    """Scale each feature onto [0, 1]; returns the scaled dataset and the fitted
    scaler so the identical transform can be applied to other datasets."""
    scaler = MinMaxScaler().fit(ds)
    return scaler.transform(ds), scaler
