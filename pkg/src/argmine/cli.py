"""Command-line front end.

Subcommands: discretize, learn, predict, evaluate, experiment, grid.
Exit codes: 0 on success, 1 on input errors, 2 on violated internal
invariants.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Any

from .case_model import build_case_model, case_model_from_json, literals
from .dectree import TreeNode, default_grid, learn_tree, tree_to_rules, tune_tree
from .errors import InputError, InvariantError
from .hero import RuleList, learn_hero, learn_hero_multi
from .inference import detect_self_attack, evaluate, predict_rule_list, predict_theory
from .pipeline import (
    ExperimentConfig,
    TABLE_HEADER,
    Table,
    apply_schemes,
    fit_schemes,
    format_table,
    load_csv,
    resolve_dataset,
    run_experiment,
    run_grid,
)
from .pruned_search import SearchConfig, Theory, learn_pruned


def _bins_value(text: str):
    return text if text == "opt" else int(text)


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with an ExperimentConfig; flags override")
    parser.add_argument("--dataset-path", dest="dataset_path")
    parser.add_argument("--target")
    parser.add_argument("--learner", choices=("pruned_search", "hero", "dectree"))
    parser.add_argument("--binning", choices=("equal-width", "equal-depth", "kmeans", "dbscan", "opt"))
    parser.add_argument("--bins", type=_bins_value)
    parser.add_argument("--max-premise-size", dest="max_premise_size", type=int)
    parser.add_argument("--exception-depth", dest="exception_depth", type=int)
    parser.add_argument("--split-fraction", dest="split_fraction", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output-dir", dest="output_dir")


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict[str, Any] = {}
    if args.config:
        with open(args.config) as f:
            data.update(json.load(f))
    for key in (
        "dataset_path", "target", "learner", "binning", "bins",
        "max_premise_size", "exception_depth", "split_fraction", "seed", "output_dir",
    ):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_json(data)


def _write_json(data: dict, path: str | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def cmd_discretize(args: argparse.Namespace) -> int:
    table = load_csv(args.input)
    columns = args.columns.split(",") if args.columns else None
    work = Table(
        columns=[c for c in table.columns if columns is None or c in columns],
        rows=table.rows,
    )
    # no target concept here: bin every numeric requested column
    schemes = fit_schemes(work, args.method, args.bins, target="", only_target=False)
    _write_json({name: s.to_json() for name, s in sorted(schemes.items())}, args.output)
    if args.transformed:
        rows = apply_schemes(table, schemes)
        with open(args.transformed, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(table.columns)
            for row in rows:
                writer.writerow([row[c] for c in table.columns])
    return 0


def _learn_from_case_model(args: argparse.Namespace) -> int:
    with open(args.input) as f:
        model = case_model_from_json(json.load(f))
    if args.learner == "pruned_search":
        theory = learn_pruned(
            model,
            SearchConfig(
                max_premise_size=args.max_premise_size or len(model.attributes),
                exception_depth=args.exception_depth if args.exception_depth is not None else 5,
                target_attributes=(args.target,) if args.target else None,
            ),
        )
        _write_json(theory.to_json(), args.output)
        return 0
    if args.learner == "hero":
        rows = []
        for case in model.cases:
            row = {lit.attribute: lit.value for lit in case.literals}
            rows.extend([row] * case.weight)
        rl = learn_hero(rows, args.target) if args.target else learn_hero_multi(rows)
        _write_json(rl.to_json(), args.output)
        if detect_self_attack(rl):
            print("warning: the learned rules imply self-attacking arguments", file=sys.stderr)
        return 0
    raise InputError("a case-model input supports the pruned_search and hero learners")


def cmd_learn(args: argparse.Namespace) -> int:
    if args.input.endswith(".json"):
        return _learn_from_case_model(args)
    if not args.target:
        raise InputError("--target is required for CSV input")
    table = load_csv(args.input)
    only_target = args.learner == "dectree"
    schemes = fit_schemes(table, args.binning, args.bins, args.target, only_target)
    rows = apply_schemes(table, schemes)
    if args.learner == "pruned_search":
        theory = learn_pruned(
            build_case_model(rows),
            SearchConfig(
                max_premise_size=args.max_premise_size or 2,
                exception_depth=args.exception_depth if args.exception_depth is not None else 5,
                target_attributes=(args.target,),
            ),
        )
        _write_json(theory.to_json(), args.output)
    elif args.learner == "hero":
        rl = learn_hero(rows, args.target)
        _write_json(rl.to_json(), args.output)
    else:
        feature_order = [c for c in table.columns if c != args.target]
        params = tune_tree(rows, args.target, default_grid(len(feature_order), args.seed or 0),
                           folds=3, feature_order=feature_order, seed=args.seed or 0)
        tree = learn_tree(rows, args.target, params, feature_order)
        _write_json(
            {
                "tree": tree.to_json(),
                "params": params.to_json(),
                "rules": [
                    {
                        "premise": {c.attribute: [c.lo, c.hi] for c in r.premise},
                        "conclusion": {c.attribute: c.value for c in r.conclusion},
                    }
                    for r in tree_to_rules(tree, args.target)
                ],
            },
            args.output,
        )
    return 0


def _load_model(path: str):
    with open(path) as f:
        data = json.load(f)
    if "arguments" in data:
        return Theory.from_json(data)
    if "rules" in data and "tree" not in data:
        return RuleList.from_json(data)
    if "tree" in data:
        return _tree_from_json(data["tree"])
    raise InputError(f"{path} is not a recognized model JSON")


def _tree_from_json(data: dict) -> TreeNode:
    if "feature" in data:
        return TreeNode(
            feature=data["feature"],
            threshold=data["threshold"],
            left=_tree_from_json(data["left"]),
            right=_tree_from_json(data["right"]),
        )
    return TreeNode(class_counts=tuple((v, c) for v, c in data["class_counts"]))


def _predict_with(model, instance: dict, target: str):
    if isinstance(model, Theory):
        return predict_theory(model, instance, target)
    if isinstance(model, RuleList):
        return predict_rule_list(model, instance, target)
    return model.predict(instance)


def cmd_predict(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    table = load_csv(args.input)
    if args.schemes:
        with open(args.schemes) as f:
            from .discretize import BinningScheme

            schemes = {k: BinningScheme.from_json(v) for k, v in json.load(f).items()}
        rows = apply_schemes(table, schemes)
    else:
        rows = table.rows
    predictions = []
    for row in rows:
        instance = {k: v for k, v in row.items() if k != args.target}
        predictions.append(_predict_with(model, instance, args.target))
    out = args.output
    writer_target = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(writer_target)
        header = ["predicted"] + (["actual"] if args.target in table.columns else [])
        writer.writerow(header)
        for row, pred in zip(rows, predictions):
            line = [pred if pred is not None else "abstain"]
            if args.target in table.columns:
                line.append(row[args.target])
            writer.writerow(line)
    finally:
        if out:
            writer_target.close()
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    pairs = []
    with open(args.predictions, newline="") as f:
        reader = csv.DictReader(f)
        if "predicted" not in (reader.fieldnames or []) or "actual" not in (reader.fieldnames or []):
            raise InputError("predictions CSV needs 'predicted' and 'actual' columns")
        for row in reader:
            pred = row["predicted"]
            pairs.append((None if pred == "abstain" else pred, row["actual"]))
    report = evaluate(pairs)
    _write_json(report.to_json(), args.output)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    result = run_experiment(config)
    print(format_table(result.table_rows()))
    if not args.quiet:
        print(f"training time: {result.runtime_ms:.1f} ms", file=sys.stderr)
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    with open(args.configs) as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise InputError("--configs must hold a JSON list of experiment configs")
    configs = [ExperimentConfig.from_json(e) for e in entries]
    results = run_grid(configs, workers=args.workers)
    rows = [row for r in results for row in r.table_rows()]
    print(format_table(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argmine",
        description="Learn defeasible arguments from tabular data via case models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="fit binning schemes for CSV columns")
    p.add_argument("--input", required=True)
    p.add_argument("--method", required=True,
                   choices=("equal-width", "equal-depth", "kmeans", "dbscan", "opt"))
    p.add_argument("--bins", type=_bins_value, default=2)
    p.add_argument("--columns", help="comma-separated column subset")
    p.add_argument("--output", help="scheme JSON path (default stdout)")
    p.add_argument("--transformed", help="optional path for the binned CSV")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("learn", help="learn a theory/rule list/tree from CSV or case-model JSON")
    p.add_argument("--input", required=True, help="CSV file or case-model JSON")
    p.add_argument("--learner", required=True, choices=("pruned_search", "hero", "dectree"))
    p.add_argument("--target")
    p.add_argument("--binning", default="equal-width",
                   choices=("equal-width", "equal-depth", "kmeans", "dbscan", "opt"))
    p.add_argument("--bins", type=_bins_value, default=2)
    p.add_argument("--max-premise-size", dest="max_premise_size", type=int)
    p.add_argument("--exception-depth", dest="exception_depth", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="model JSON path (default stdout)")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("predict", help="predict a target column with a learned model")
    p.add_argument("--model", required=True, help="model JSON from `learn`")
    p.add_argument("--input", required=True, help="CSV of instances")
    p.add_argument("--target", required=True)
    p.add_argument("--schemes", help="scheme JSON from `discretize` to bin the input first")
    p.add_argument("--output", help="predictions CSV path (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a predictions CSV (predicted,actual)")
    p.add_argument("--predictions", required=True)
    p.add_argument("--output", help="report JSON path (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run the full pipeline for one configuration")
    _add_experiment_flags(p)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("grid", help="run a list of experiment configurations")
    p.add_argument("--configs", required=True, help="JSON list of configs")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
