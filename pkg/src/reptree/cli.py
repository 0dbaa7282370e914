"""Command-line interface.

Subcommands: run (subset-sampling experiment), theorem1 (margin-preservation
property campaign), boundary (decision-boundary grid export), epsilon (one-shot
covering radius between two CSVs), train (fit and serialize a model).

Every option can come from a `key = value` config file passed with --config;
a same-named flag always wins over the file. Exit codes: 0 success, 1
validation error, 2 I/O error, 3 campaign failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields

from .dataset import generate_circles, load_csv
from .experiment import (
    ExperimentConfig,
    derive_seed,
    export_boundary_grid,
    load_model,
    run_experiment,
    run_preservation_campaign,
    write_report,
)
from .representativeness import epsilon_of
from .boosting import GradientBoostingBinaryClassifier
from .tree import DecisionTreeClassifier


@dataclass(frozen=True)
class _Opt:
    name: str
    kind: str  # "int" | "float" | "str" | "bool" | "int_or_str"
    default: object = None
    help: str = ""
    required: bool = False


_RUN_HELP = {
    "data": "CSV path; omit to use the synthetic circles",
    "label_col": "label column name or index (default: last column)",
    "header": "whether the CSV has a header row",
    "model": "tree | boosted",
    "scale": "min-max scale features (fitted on the training split)",
    "threads": "worker processes for the subset loop",
}


def _experiment_opts() -> list[_Opt]:
    kinds = {
        "data": "str", "label_col": "int_or_str", "header": "bool",
        "circles_n": "int", "circles_noise": "float", "circles_inner": "float",
        "train_fraction": "float", "stratified": "bool",
        "subset_fraction": "float", "subset_count": "int",
        "model": "str", "criterion": "str", "max_depth": "int",
        "n_stages": "int", "learning_rate": "float", "scale": "bool",
        "seed": "int", "out_dir": "str", "threads": "int",
    }
    return [
        _Opt(f.name, kinds[f.name], f.default, _RUN_HELP.get(f.name, ""))
        for f in fields(ExperimentConfig)
    ]


_THEOREM_OPTS = [
    _Opt("trials", "int", 200, "number of randomized trials"),
    _Opt("radius_fraction", "float", 0.9,
         "perturbation radius as a fraction of the tree's minimum margin"),
    _Opt("seed", "int", 0),
    _Opt("max_depth", "int", 6, "maximum tree depth drawn per trial"),
    _Opt("criterion", "str", "gini"),
]

_BOUNDARY_OPTS = [
    _Opt("model", "str", help="serialized model JSON", required=True),
    _Opt("x1_min", "float", 0.0), _Opt("x1_max", "float", 1.0),
    _Opt("x2_min", "float", 0.0), _Opt("x2_max", "float", 1.0),
    _Opt("resolution", "int", 100, "grid points per axis"),
    _Opt("out", "str", help="output CSV path", required=True),
]

_EPSILON_OPTS = [
    _Opt("data", "str", help="reference CSV (the covered dataset)", required=True),
    _Opt("subset", "str", help="candidate CSV (the covering dataset)", required=True),
    _Opt("label_col", "int_or_str", -1),
    _Opt("header", "bool", True),
    _Opt("method", "str", "auto", "auto | bruteforce | kdtree"),
]

_TRAIN_OPTS = [
    _Opt("data", "str", help="CSV path; omit to use the synthetic circles"),
    _Opt("label_col", "int_or_str", -1),
    _Opt("header", "bool", True),
    _Opt("circles_n", "int", 200),
    _Opt("circles_noise", "float", 0.1),
    _Opt("circles_inner", "float", 0.5),
    _Opt("model", "str", "tree", "tree | boosted"),
    _Opt("criterion", "str", "gini"),
    _Opt("max_depth", "int", 4),
    _Opt("n_stages", "int", 25),
    _Opt("learning_rate", "float", 0.1),
    _Opt("seed", "int", 0),
    _Opt("out", "str", help="output model JSON path", required=True),
]


def _coerce(kind: str, raw, name: str):
    if raw is None or not isinstance(raw, str):
        return raw
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int_or_str":
            try:
                return int(raw)
            except ValueError:
                return raw
        return raw
    except ValueError:
        raise ValueError(f"cannot parse {raw!r} as {kind} for option {name!r}") from None


def _read_config(path: str, opts: list[_Opt]) -> dict:
    allowed = {o.name: o for o in opts}
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            if not sep:
                raise ValueError(f"{path}: line {line_num}: expected 'key = value'")
            key = key.strip().replace("-", "_")
            if key not in allowed:
                raise ValueError(
                    f"{path}: line {line_num}: unknown key {key!r}; "
                    f"allowed keys: {sorted(allowed)}"
                )
            values[key] = _coerce(allowed[key].kind, value.strip(), key)
    return values


def _add_opts(sub: argparse.ArgumentParser, opts: list[_Opt]) -> None:
    sub.add_argument("--config", default=None,
                     help="key-value file supplying defaults for any flag")
    for o in opts:
        flag = "--" + o.name.replace("_", "-")
        if o.kind == "bool":
            sub.add_argument(flag, dest=o.name, action=argparse.BooleanOptionalAction,
                             default=None, help=o.help)
        else:
            sub.add_argument(flag, dest=o.name, default=None, help=o.help, metavar="V")


def _resolve(args: argparse.Namespace, opts: list[_Opt]) -> dict:
    values = {o.name: o.default for o in opts}
    if args.config:
        values.update(_read_config(args.config, opts))
    for o in opts:
        supplied = getattr(args, o.name)
        if supplied is not None:
            values[o.name] = _coerce(o.kind, supplied, o.name)
    for o in opts:
        if o.required and values[o.name] is None:
            raise ValueError(f"missing required option --{o.name.replace('_', '-')}")
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise ValueError(message)


def _load_dataset(values: dict):
    if values["data"] is not None:
        return load_csv(values["data"], label_column=values["label_col"],
                        has_header=values["header"])
    return generate_circles(values["circles_n"], values["circles_noise"],
                            values["circles_inner"], derive_seed(values["seed"], "circles"))


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(**_resolve(args, _experiment_opts()))
    report = run_experiment(cfg)
    json_path, csv_path = write_report(report, cfg.out_dir)
    print(f"report written to {json_path}")
    print(f"records written to {csv_path}")
    if report.correlation is not None:
        print(
            f"spearman rho={report.correlation.rho:.4f} "
            f"p={report.correlation.p_value:.3g} over n={report.correlation.n} subsets"
        )
    else:
        print(report.correlation_note or "correlation unavailable")
    return 0


def _cmd_theorem1(args) -> int:
    values = _resolve(args, _THEOREM_OPTS)
    summary = run_preservation_campaign(
        trials=values["trials"],
        radius_fraction=values["radius_fraction"],
        seed=values["seed"],
        max_depth=values["max_depth"],
        criterion=values["criterion"],
    )
    print(json.dumps(summary.to_dict(), indent=2))
    return 3 if summary.failed else 0


def _cmd_boundary(args) -> int:
    values = _resolve(args, _BOUNDARY_OPTS)
    model = load_model(values["model"])
    path = export_boundary_grid(
        model,
        ((values["x1_min"], values["x1_max"]), (values["x2_min"], values["x2_max"])),
        values["resolution"],
        values["out"],
    )
    print(f"grid written to {path}")
    return 0


def _cmd_epsilon(args) -> int:
    values = _resolve(args, _EPSILON_OPTS)
    reference = load_csv(values["data"], label_column=values["label_col"],
                         has_header=values["header"])
    candidate = load_csv(values["subset"], label_column=values["label_col"],
                         has_header=values["header"])
    assignment = epsilon_of(reference, candidate, method=values["method"])
    finite = assignment.epsilon != float("inf")
    print(json.dumps({
        "epsilon": assignment.epsilon if finite else None,
        "epsilon_is_finite": finite,
        "uncovered_classes": list(assignment.uncovered_classes),
        "gamma": assignment.gamma,
        "n_reference": reference.n_points,
        "n_candidate": candidate.n_points,
    }, indent=2))
    return 0


def _cmd_train(args) -> int:
    values = _resolve(args, _TRAIN_OPTS)
    ds = _load_dataset(values)
    if values["model"] == "tree":
        model = DecisionTreeClassifier(criterion=values["criterion"],
                                       max_depth=values["max_depth"])
    elif values["model"] == "boosted":
        model = GradientBoostingBinaryClassifier(n_stages=values["n_stages"],
                                                 max_depth=values["max_depth"],
                                                 learning_rate=values["learning_rate"])
    else:
        raise ValueError(f"model must be 'tree' or 'boosted', got {values['model']!r}")
    model.fit(ds)
    with open(values["out"], "w", encoding="utf-8") as fh:
        fh.write(model.to_json(indent=2) + "\n")
    accuracy = model.score(ds.points, ds.labels)
    print(f"model written to {values['out']} (training accuracy {accuracy:.4f})")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="reptree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the subset-sampling experiment")
    _add_opts(p_run, _experiment_opts())
    p_run.set_defaults(func=_cmd_run)

    p_thm = sub.add_parser("theorem1", help="run the accuracy-preservation campaign")
    _add_opts(p_thm, _THEOREM_OPTS)
    p_thm.set_defaults(func=_cmd_theorem1)

    p_bnd = sub.add_parser("boundary", help="export a decision-boundary grid CSV")
    _add_opts(p_bnd, _BOUNDARY_OPTS)
    p_bnd.set_defaults(func=_cmd_boundary)

    p_eps = sub.add_parser("epsilon", help="covering radius between two CSV datasets")
    _add_opts(p_eps, _EPSILON_OPTS)
    p_eps.set_defaults(func=_cmd_epsilon)

    p_train = sub.add_parser("train", help="fit a model and serialize it to JSON")
    _add_opts(p_train, _TRAIN_OPTS)
    p_train.set_defaults(func=_cmd_train)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
