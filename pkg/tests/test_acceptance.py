"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v` (add -s to see the PASS lines).
The collision-data criterion runs only when the COLLISION_CSV environment
variable points at the dataset; it is skipped otherwise.
"""
import itertools
import json
import math
import os
import time

import numpy as np
import pytest

import reptree as rt
from reptree.cli import main as cli_main

from _oracles import (
    brute_force_epsilon,
    direct_positions,
    direct_rank_distance,
    exact_rank_pearson,
    permutation_p_reference,
)


def ok(criterion: int, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS - {detail}")


def test_c01_preservation_campaign_200_trials():
    started = time.perf_counter()
    summary = rt.run_preservation_campaign(200, 0.9, seed=2024, max_depth=6)
    elapsed = time.perf_counter() - started
    assert summary.trials == 200
    assert summary.failed == 0, summary.failures
    assert summary.passed + summary.skipped == 200
    assert elapsed < 60.0, f"campaign took {elapsed:.1f}s"
    ok(1, f"200 trials, 0 failures, {summary.skipped} skipped, {elapsed:.2f}s")


def test_c02_epsilon_matches_brute_force_oracle():
    rng = np.random.default_rng(55)
    started = time.perf_counter()
    checked = 0
    for i in range(50):
        n = int(rng.integers(10, 201))
        m = int(rng.integers(2, 61))
        d = int(rng.integers(1, 9))
        c = int(rng.integers(2, 4))
        X = rt.generate_gaussian_mixture(n, d, c, seed=int(rng.integers(2**31)))
        if i % 5 == 0:
            # occasionally drop a class from the candidate set
            pick = np.flatnonzero(X.labels != 0)[:m]
        else:
            pick = np.sort(rng.permutation(n)[:m])
        if pick.size == 0:
            continue
        Xt = X.subset(pick)
        expected = brute_force_epsilon(X.points, X.labels, Xt.points, Xt.labels)
        for method in ("bruteforce", "kdtree"):
            got = rt.epsilon_of(X, Xt, method=method).epsilon
            if math.isinf(expected):
                assert math.isinf(got)
            else:
                assert abs(got - expected) <= 1e-12
        checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"oracle comparison took {elapsed:.1f}s"
    ok(2, f"{checked} instances within 1e-12 of the double-loop oracle, {elapsed:.2f}s")


def test_c03_accuracy_identity():
    rng = np.random.default_rng(77)
    for _ in range(100):
        d = int(rng.integers(1, 5))
        c = int(rng.integers(2, 4))
        train = rt.generate_gaussian_mixture(
            int(rng.integers(10, 120)), d, c, seed=int(rng.integers(2**31))
        )
        evaluate = rt.generate_gaussian_mixture(
            int(rng.integers(5, 100)), d, c, seed=int(rng.integers(2**31))
        )
        tree = rt.DecisionTreeClassifier(
            criterion=("gini", "entropy")[int(rng.integers(2))],
            max_depth=int(rng.integers(1, 7)),
        ).fit(train)
        diff = abs(tree.accuracy_leafwise(evaluate) - tree.accuracy_empirical(evaluate))
        assert diff <= 1e-12
    ok(3, "leaf-weighted accuracy equals fraction-correct on 100 random pairs")


def test_c04_impurity_unit_values():
    assert rt.gini([0.5, 0.5]) == 0.5
    assert rt.entropy([0.5, 0.5]) == 1.0
    assert rt.gini([1.0, 0.0]) == 0.0
    assert rt.entropy([1.0, 0.0]) == 0.0
    ok(4, "gini/entropy unit values exact")


def _ranking_from_permutation(perm):
    d = len(perm)
    imp = np.empty(d)
    for position, feature in enumerate(perm):
        imp[feature] = d - position
    return rt.rank_features(imp)


def test_c05_rank_distance_oracle():
    for d in range(1, 5):
        for pa in itertools.permutations(range(d)):
            for pb in itertools.permutations(range(d)):
                a = _ranking_from_permutation(pa)
                b = _ranking_from_permutation(pb)
                expected = direct_rank_distance(a.position_of, b.position_of)
                assert rt.rank_distance(a, b) == pytest.approx(expected, abs=1e-15)
    rng = np.random.default_rng(88)
    for _ in range(1000):
        imp_a = rng.integers(0, 8, 23).astype(float)  # ties on purpose
        imp_b = rng.integers(0, 8, 23).astype(float)
        a, b = rt.rank_features(imp_a), rt.rank_features(imp_b)
        assert list(a.position_of) == direct_positions(imp_a)
        assert rt.rank_distance(a, b) == pytest.approx(
            direct_rank_distance(a.position_of, b.position_of), abs=1e-12
        )
    for _ in range(200):
        size = int(rng.integers(2, 11))
        a, b, c = (
            _ranking_from_permutation(tuple(rng.permutation(size))) for _ in range(3)
        )
        assert rt.rank_distance(a, b) == rt.rank_distance(b, a)
        assert rt.rank_distance(a, c) <= (
            rt.rank_distance(a, b) + rt.rank_distance(b, c) + 1e-12
        )
    ok(5, "exhaustive d<=4 pairs, 1000 random d=23 pairs, pseudometric axioms")


def test_c06_spearman_numerical_contract():
    rng = np.random.default_rng(99)
    for _ in range(20):
        x = np.round(rng.normal(size=100), 1)  # rounding injects ties
        y = np.round(rng.normal(size=100), 1)
        result = rt.spearman(x, y)
        assert abs(result.rho - exact_rank_pearson(x, y)) <= 1e-9

    p = rt.spearman_p_value(0.51, 100)
    assert 5.2e-9 <= p <= 5.2e-7, f"p={p} outside one decade of 5.2e-8"

    for n in (5, 6, 7, 8):
        x = rng.normal(size=n)
        y = np.round(rng.normal(size=n), 0)  # ties in y
        exact = rt.spearman(x, y, p_method="exact").p_value
        assert abs(exact - permutation_p_reference(x, y)) <= 1e-9
    ok(6, f"rho vs exact ranks, p(0.51, 100)={p:.3g}, permutation oracle agrees")


def test_c07_circles_desk_scale():
    accuracies = []
    for seed in range(10):
        ds = rt.generate_circles(200, seed=seed)
        train, test = rt.split(ds, rt.SplitSpec(0.75, seed=rt.derive_seed(seed, "split")))
        assert train.n_points == 150 and test.n_points == 50
        tree = rt.DecisionTreeClassifier(criterion="gini", max_depth=4).fit(train)
        accuracies.append(tree.accuracy_empirical(test))
    assert min(accuracies) >= 0.75, accuracies
    ok(7, f"depth-4 test accuracy in [{min(accuracies):.2f}, {max(accuracies):.2f}] over 10 seeds")


def test_c08_boosting_sanity():
    ds = rt.generate_circles(200, seed=6)
    train, _ = rt.split(ds, rt.SplitSpec(0.75, seed=1))
    model = rt.GradientBoostingBinaryClassifier(n_stages=25, max_depth=3).fit(train)
    losses = model.train_log_losses_
    assert len(losses) == 25
    for a, b in zip(losses, losses[1:]):
        assert b <= a + 1e-9
    single = rt.GradientBoostingBinaryClassifier(n_stages=1, max_depth=3).fit(train)
    assert np.array_equal(single.feature_importances(), single.stage_importances_[0])
    ok(8, f"log-loss fell {losses[0]:.4f} -> {losses[-1]:.4f} over 25 stages")


collision_csv = os.environ.get("COLLISION_CSV")


@pytest.mark.skipif(
    collision_csv is None,
    reason="collision CSV not supplied; set COLLISION_CSV to run",
)
def test_c09_collision_reproduction():
    label_col = os.environ.get("COLLISION_LABEL_COL", "-1")
    try:
        label_col = int(label_col)
    except ValueError:
        pass
    base = dict(
        data=collision_csv,
        label_col=label_col,
        train_fraction=0.75,
        subset_fraction=0.10,
        subset_count=100,
        max_depth=10,
        scale=True,
        seed=606,
    )
    tree_report = rt.run_experiment(rt.ExperimentConfig(model="tree", criterion="gini", **base))
    assert tree_report.correlation is not None
    assert tree_report.correlation.rho > 0.3
    assert tree_report.correlation.p_value < 0.01
    assert abs(tree_report.reference["test_accuracy"] - 0.874) <= 0.04

    boost_report = rt.run_experiment(
        rt.ExperimentConfig(model="boosted", n_stages=25, **base)
    )
    assert boost_report.correlation is not None
    assert boost_report.correlation.rho > 0.4
    assert abs(boost_report.reference["test_accuracy"] - 0.912) <= 0.04
    ok(9, (
        f"tree rho={tree_report.correlation.rho:.3f}, "
        f"boosted rho={boost_report.correlation.rho:.3f}"
    ))


def test_c10_cli_determinism(tmp_path):
    out = str(tmp_path / "out")
    args = [
        "run", "--circles-n", "120", "--subset-count", "5",
        "--subset-fraction", "0.4", "--max-depth", "3",
        "--seed", "31", "--out-dir", out,
    ]
    assert cli_main(list(args)) == 0
    first = {name: open(f"{out}/{name}", "rb").read()
             for name in ("report.json", "records.csv")}
    assert cli_main(list(args)) == 0
    for name, payload in first.items():
        assert open(f"{out}/{name}", "rb").read() == payload
    report = json.loads(first["report.json"].decode("utf-8"))
    assert report["schema_version"] == 1
    ok(10, "two identical runs produced byte-identical report.json and records.csv")
