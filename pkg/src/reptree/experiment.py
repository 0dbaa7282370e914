"""End-to-end experiment orchestration.

`run_experiment` measures, per sampled subset of the training data, the
covering radius of the subset over the training set together with the drift of
the subset model's feature-importance ordering away from the full-train model,
then correlates the two across subsets. `run_preservation_campaign` stress-tests
the margin-based accuracy-preservation property on randomized datasets.
Reports are plain JSON + CSV and are byte-identical for identical configs and
seeds (no timestamps).
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ._version import __version__
from .boosting import GradientBoostingBinaryClassifier
from .dataset import (
    LabeledDataset,
    SplitSpec,
    generate_circles,
    generate_gaussian_mixture,
    load_csv,
    minmax_scale,
    sample_subset,
    split,
)
from .metrics import CorrelationResult, ImportanceRanking, rank_distance, rank_features, spearman
from .representativeness import epsilon_of, identity_assignment, perturbed_copy
from .tree import DecisionTreeClassifier, check_accuracy_preservation

SCHEMA_VERSION = 1


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit child seed from a master seed and a label path; adding
    more subsets or trials never reshuffles earlier ones."""
    text = str(int(master)) + "".join(f"/{p}" for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class ExperimentConfig:
    """Everything one subset-sampling run needs; also the config-file schema
    (each field is a key, each key has a same-named CLI flag)."""

    data: str | None = None
    label_col: int | str = -1
    header: bool = True
    circles_n: int = 200
    circles_noise: float = 0.1
    circles_inner: float = 0.5
    train_fraction: float = 0.75
    stratified: bool = True
    subset_fraction: float = 0.1
    subset_count: int = 10
    model: str = "tree"
    criterion: str = "gini"
    max_depth: int = 4
    n_stages: int = 25
    learning_rate: float = 0.1
    scale: bool = True
    seed: int = 0
    out_dir: str = "."
    threads: int = 1

    def validate(self) -> None:
        if not 0.0 < self.subset_fraction <= 1.0:
            raise ValueError("subset_fraction must lie in (0, 1]")
        if self.subset_count < 1:
            raise ValueError("subset_count must be at least 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.model not in ("tree", "boosted"):
            raise ValueError(f"model must be 'tree' or 'boosted', got {self.model!r}")
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"criterion must be 'gini' or 'entropy', got {self.criterion!r}")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.n_stages < 1:
            raise ValueError("n_stages must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class SubsetRecord:
    index: int
    seed: int
    epsilon: float
    uncovered_classes: tuple[int, ...]
    train_accuracy: float
    test_accuracy: float
    importances: tuple[float, ...]
    importance_order: tuple[int, ...]
    rank_positions: tuple[int, ...]
    rank_distance: float

    @property
    def epsilon_is_finite(self) -> bool:
        return bool(np.isfinite(self.epsilon))

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "seed": self.seed,
            "epsilon": self.epsilon if self.epsilon_is_finite else None,
            "epsilon_is_finite": self.epsilon_is_finite,
            "uncovered_classes": list(self.uncovered_classes),
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "importances": list(self.importances),
            "importance_order": list(self.importance_order),
            "rank_positions": list(self.rank_positions),
            "rank_distance": self.rank_distance,
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    feature_names: tuple[str, ...]
    reference: dict
    records: list[SubsetRecord]
    correlation: CorrelationResult | None
    correlation_excluded: tuple[int, ...]
    correlation_note: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "reptree", "version": __version__},
            "config": asdict(self.config),
            "feature_names": list(self.feature_names),
            "reference_model": self.reference,
            "subsets": [r.to_dict() for r in self.records],
            "correlation": (
                None
                if self.correlation is None
                else {
                    "rho": self.correlation.rho,
                    "p_value": self.correlation.p_value,
                    "n": self.correlation.n,
                }
            ),
            "correlation_excluded_subsets": list(self.correlation_excluded),
            "correlation_note": self.correlation_note,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def _make_model(cfg: ExperimentConfig):
    if cfg.model == "tree":
        return DecisionTreeClassifier(criterion=cfg.criterion, max_depth=cfg.max_depth)
    return GradientBoostingBinaryClassifier(
        n_stages=cfg.n_stages, max_depth=cfg.max_depth, learning_rate=cfg.learning_rate
    )


def load_experiment_dataset(cfg: ExperimentConfig) -> LabeledDataset:
    """CSV when a path is configured, otherwise the synthetic circles."""
    if cfg.data is not None:
        return load_csv(cfg.data, label_column=cfg.label_col, has_header=cfg.header)
    return generate_circles(
        cfg.circles_n, cfg.circles_noise, cfg.circles_inner, derive_seed(cfg.seed, "circles")
    )


def _model_summary(model, train: LabeledDataset, test: LabeledDataset) -> tuple[dict, ImportanceRanking]:
    importances = model.feature_importances(normalize=True)
    ranking = rank_features(importances)
    summary = {
        "train_accuracy": float(model.score(train.points, train.labels)),
        "test_accuracy": float(model.score(test.points, test.labels)),
        "importances": [float(v) for v in importances],
        "importance_order": list(ranking.order),
        "rank_positions": list(ranking.position_of),
        "rank_distance": 0.0,
    }
    return summary, ranking


def _subset_record(
    train: LabeledDataset,
    test: LabeledDataset,
    cfg: ExperimentConfig,
    reference: ImportanceRanking,
    index: int,
    seed: int,
) -> SubsetRecord:
    subset = sample_subset(train, cfg.subset_fraction, seed)
    assignment = epsilon_of(train, subset)
    model = _make_model(cfg).fit(subset)
    importances = model.feature_importances(normalize=True)
    ranking = rank_features(importances)
    return SubsetRecord(
        index=index,
        seed=seed,
        epsilon=assignment.epsilon,
        uncovered_classes=assignment.uncovered_classes,
        train_accuracy=float(model.score(subset.points, subset.labels)),
        test_accuracy=float(model.score(test.points, test.labels)),
        importances=tuple(float(v) for v in importances),
        importance_order=ranking.order,
        rank_positions=ranking.position_of,
        rank_distance=rank_distance(ranking, reference),
    )


_POOL_CTX: dict = {}


def _pool_init(train, test, cfg, reference):
    _POOL_CTX["args"] = (train, test, cfg, reference)


def _pool_task(item):
    index, seed = item
    train, test, cfg, reference = _POOL_CTX["args"]
    return _subset_record(train, test, cfg, reference, index, seed)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the full subset-sampling experiment.

    Steps: load or generate the data; split train/test (stratified by
    default); optionally fit a min-max scaler on the training set and apply it
    to both sides; fit the reference model on the full training set; for each
    of subset_count subsets (seeds derived from the master seed by counter)
    sample, measure the covering radius against the training set, fit a model,
    and record test accuracy plus importance-ranking drift; finally correlate
    radius with drift over the subsets whose radius is finite.
    """
    cfg.validate()
    ds = load_experiment_dataset(cfg)
    train, test = split(
        ds, SplitSpec(cfg.train_fraction, derive_seed(cfg.seed, "split"), cfg.stratified)
    )
    if cfg.scale:
        train, scaler = minmax_scale(train)
        test = scaler.transform(test)

    reference_model = _make_model(cfg).fit(train)
    reference_summary, reference_ranking = _model_summary(reference_model, train, test)

    items = [(k, derive_seed(cfg.seed, "subset", k)) for k in range(cfg.subset_count)]
    if cfg.threads > 1:
        workers = min(cfg.threads, cfg.subset_count)
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_pool_init,
            initargs=(train, test, cfg, reference_ranking),
        ) as pool:
            records = list(pool.map(_pool_task, items))
    else:
        records = [
            _subset_record(train, test, cfg, reference_ranking, k, seed)
            for k, seed in items
        ]
    records.sort(key=lambda r: r.index)

    finite = [r for r in records if r.epsilon_is_finite]
    excluded = tuple(r.index for r in records if not r.epsilon_is_finite)
    correlation = None
    note = None
    if len(finite) < 3:
        note = f"correlation unavailable: only {len(finite)} finite-radius subsets"
    else:
        try:
            correlation = spearman(
                [r.epsilon for r in finite], [r.rank_distance for r in finite]
            )
        except ValueError as exc:
            note = f"correlation unavailable: {exc}"
    return ExperimentReport(
        config=cfg,
        feature_names=ds.feature_names,
        reference=reference_summary,
        records=records,
        correlation=correlation,
        correlation_excluded=excluded,
        correlation_note=note,
    )


_CSV_COLUMNS = (
    "index",
    "seed",
    "epsilon",
    "train_accuracy",
    "test_accuracy",
    "rank_distance",
    "importance_order",
    "rank_positions",
    "importances",
)


def write_report(report: ExperimentReport, out_dir: str) -> tuple[str, str]:
    """Write report.json plus a flat records.csv; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "report.json")
    csv_path = os.path.join(out_dir, "records.csv")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in report.records:
            writer.writerow(
                [
                    r.index,
                    r.seed,
                    repr(r.epsilon) if r.epsilon_is_finite else "inf",
                    repr(r.train_accuracy),
                    repr(r.test_accuracy),
                    repr(r.rank_distance),
                    ";".join(str(v) for v in r.importance_order),
                    ";".join(str(v) for v in r.rank_positions),
                    ";".join(repr(v) for v in r.importances),
                ]
            )
    return json_path, csv_path


# -- accuracy-preservation campaign ---------------------------------------


@dataclass(frozen=True)
class MixtureSpec:
    """Random-dataset generator ranges for the campaign."""

    n_range: tuple[int, int] = (20, 200)
    d_range: tuple[int, int] = (1, 5)
    class_choices: tuple[int, ...] = (2, 3)
    center_spread: float = 4.0
    cluster_sd: float = 1.0


@dataclass
class CampaignSummary:
    trials: int
    passed: int
    failed: int
    skipped: int
    vacuous: int
    vacuous_conclusion_violations: int
    radius_fraction: float
    seed: int
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "passed": self.passed,
            "failed": self.failed,
            "skipped": self.skipped,
            "vacuous": self.vacuous,
            "vacuous_conclusion_violations": self.vacuous_conclusion_violations,
            "radius_fraction": self.radius_fraction,
            "seed": self.seed,
            "failures": list(self.failures),
        }


def run_preservation_campaign(
    trials: int,
    radius_fraction: float,
    seed: int,
    mixture: MixtureSpec | None = None,
    max_depth: int = 6,
    criterion: str = "gini",
) -> CampaignSummary:
    """Randomized stress test of the accuracy-preservation property.

    Each trial draws a Gaussian-mixture dataset, fits a tree of random depth,
    perturbs every point by radius_fraction times the tree's minimum margin,
    and checks the verdict under the identity (gamma=1) assignment. Trials
    whose tree is a single leaf (infinite margin) are skipped. With
    radius_fraction < 1 the hypothesis always holds, so any failure is a
    defect; fractions >= 1 are allowed as adversarial controls, where
    conclusion violations are counted separately as vacuous, not failures.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if radius_fraction < 0:
        raise ValueError("radius_fraction must be non-negative")
    mix = mixture or MixtureSpec()
    summary = CampaignSummary(
        trials=trials, passed=0, failed=0, skipped=0, vacuous=0,
        vacuous_conclusion_violations=0, radius_fraction=radius_fraction, seed=seed,
    )
    for t in range(trials):
        rng = np.random.default_rng(derive_seed(seed, "trial", t, "params"))
        n = int(rng.integers(mix.n_range[0], mix.n_range[1] + 1))
        d = int(rng.integers(mix.d_range[0], mix.d_range[1] + 1))
        c = int(mix.class_choices[rng.integers(len(mix.class_choices))])
        depth = int(rng.integers(1, max_depth + 1))
        ds = generate_gaussian_mixture(
            n, d, c,
            seed=derive_seed(seed, "trial", t, "data"),
            center_spread=mix.center_spread,
            cluster_sd=mix.cluster_sd,
        )
        tree = DecisionTreeClassifier(criterion=criterion, max_depth=depth).fit(ds)
        if np.isinf(tree.min_margin_):
            summary.skipped += 1
            continue
        radius = radius_fraction * tree.min_margin_
        perturbed = perturbed_copy(ds, radius, derive_seed(seed, "trial", t, "noise"))
        verdict = check_accuracy_preservation(
            tree, ds, perturbed, identity_assignment(ds, perturbed)
        )
        conclusion = verdict.routes_match and verdict.accuracies_equal_exact
        if verdict.hypothesis_holds:
            if conclusion:
                summary.passed += 1
            else:
                summary.failed += 1
                if len(summary.failures) < 10:
                    summary.failures.append(
                        f"trial {t}: epsilon={verdict.epsilon!r} < margin="
                        f"{verdict.min_margin!r} but mismatches="
                        f"{verdict.n_route_mismatches}, accuracies "
                        f"{verdict.accuracy_full!r} vs {verdict.accuracy_subset!r}"
                    )
        else:
            summary.vacuous += 1
            if not conclusion:
                summary.vacuous_conclusion_violations += 1
    return summary


# -- decision-boundary grid ------------------------------------------------


def export_boundary_grid(model, bounds, resolution: int, out_path: str) -> str:
    """Rasterize a 2-D model's predictions over a uniform grid.

    bounds is ((x1_lo, x1_hi), (x2_lo, x2_hi)); the grid includes both
    endpoints on each axis and is written row-major (x1 varies slowest) as a
    CSV of x1, x2, predicted_class with resolution**2 rows.
    """
    if getattr(model, "n_features_in_", None) != 2:
        raise ValueError("boundary grid export requires a model fitted on 2-D data")
    if len(bounds) != 2 or any(len(b) != 2 for b in bounds):
        raise ValueError("bounds must be ((x1_lo, x1_hi), (x2_lo, x2_hi))")
    if resolution < 1:
        raise ValueError("resolution must be at least 1")
    (lo1, hi1), (lo2, hi2) = bounds
    if not (lo1 <= hi1 and lo2 <= hi2):
        raise ValueError("bounds must satisfy lo <= hi on both axes")
    axis1 = np.linspace(lo1, hi1, resolution)
    axis2 = np.linspace(lo2, hi2, resolution)
    grid = np.column_stack((np.repeat(axis1, resolution), np.tile(axis2, resolution)))
    preds = model.predict(grid)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("x1", "x2", "predicted_class"))
        for (x1, x2), label in zip(grid, preds):
            writer.writerow((repr(float(x1)), repr(float(x2)), int(label)))
    return out_path


def load_model(path: str):
    """Load a serialized model, dispatching on its model_type field."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("model_type")
    if kind == "decision_tree":
        return DecisionTreeClassifier.from_json_dict(doc)
    if kind == "gradient_boosting":
        return GradientBoostingBinaryClassifier.from_json_dict(doc)
    raise ValueError(f"unknown model_type {kind!r} in {path}")


def config_field_names() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]
