"""End-to-end experiment pipeline: CSV in, evaluation report out.

The four stages are splitting, discretization, learning, and evaluation.
Discretization schemes are fitted on the training partition only and then
applied to both partitions, so no information leaks from the test rows;
out-of-range test values clamp into the outer bins.
"""

from __future__ import annotations

import csv
import json
import os
import random
import time
from dataclasses import dataclass, field, replace
from statistics import pstdev
from typing import Any, Mapping, Sequence

from . import datasets
from .case_model import build_case_model
from .dectree import TreeParams, default_grid, learn_tree, tree_to_rules, tune_tree
from .discretize import (
    BinningScheme,
    DiscretizationParams,
    apply_scheme,
    optimize_scheme,
    _build,
)
from .errors import InputError, OptimizationFailedError
from .hero import learn_hero
from .inference import EvalReport, evaluate, predict_rule_list, predict_theory
from .pruned_search import SearchConfig, Theory, learn_pruned

LEARNERS = ("pruned_search", "hero", "dectree")
BINNINGS = ("equal-width", "equal-depth", "kmeans", "dbscan", "opt")

OPT_K_GRID = (2, 3, 4, 5, 6, 7, 8)
DBSCAN_EPS_FACTORS = (0.25, 0.5, 1.0, 2.0)
DBSCAN_MIN_PTS = (3, 5, 10)


@dataclass
class Table:
    """A typed column table: every column is all-float or all-string."""

    columns: list[str]
    rows: list[dict[str, Any]]

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[Any]:
        if name not in self.columns:
            raise InputError(f"no column named {name!r}; have {self.columns}")
        return [row[name] for row in self.rows]


def load_csv(path: str) -> Table:
    """Read an RFC-4180-style CSV with a header row into a typed table.

    A column is numeric when every cell parses as a float; columns mixing
    numeric and non-numeric cells are rejected with the offending row
    number, as are ragged rows and empty cells.
    """
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path} is empty") from None
        raw_rows = list(reader)
    if not raw_rows:
        raise InputError(f"{path} has headers but no data rows")
    if len(set(header)) != len(header):
        raise InputError(f"duplicate column names in {path}")
    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise InputError(f"row {i + 2} of {path} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            if cell.strip() == "":
                raise InputError(f"row {i + 2} of {path}: empty cell in column {header[j]!r}")

    columns: dict[str, list[Any]] = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in raw_rows]
        parsed = []
        numeric = 0
        first_bad = None
        for i, cell in enumerate(cells):
            try:
                parsed.append(float(cell))
                numeric += 1
            except ValueError:
                parsed.append(None)
                if first_bad is None:
                    first_bad = i
        if numeric == len(cells):
            columns[name] = parsed
        elif numeric == 0:
            columns[name] = cells  # genuinely categorical
        else:
            raise InputError(
                f"row {first_bad + 2} of {path}: cell {cells[first_bad]!r} in numeric column {name!r}"
            )
    rows = [{name: columns[name][i] for name in header} for i in range(len(raw_rows))]
    return Table(columns=list(header), rows=rows)


def split(table: Table, fraction: float, seed: int) -> tuple[Table, Table]:
    """Seeded shuffle-and-cut; fraction 1.0 disables the split entirely."""
    if not 0.0 < fraction <= 1.0:
        raise InputError(f"split fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return table, table
    n = len(table)
    cut = int(n * fraction)
    if cut == 0 or cut == n:
        raise InputError(f"{n} rows cannot be split at fraction {fraction}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    train = Table(table.columns, [table.rows[i] for i in order[:cut]])
    test = Table(table.columns, [table.rows[i] for i in order[cut:]])
    return train, test


def is_already_discrete(values: Sequence[Any]) -> bool:
    """Binary integer-valued columns count as discrete and skip binning."""
    if any(isinstance(v, str) for v in values):
        return True
    distinct = set(values)
    return len(distinct) <= 2 and all(float(v).is_integer() for v in distinct)


def _dbscan_space(values: Sequence[float]) -> list[DiscretizationParams]:
    q = pstdev(values)
    if q == 0:
        raise OptimizationFailedError("column is constant")
    return [
        DiscretizationParams(epsilon=q * f, min_pts=m)
        for f in DBSCAN_EPS_FACTORS
        for m in DBSCAN_MIN_PTS
    ]


def _optimized_scheme(method: str, values: Sequence[float], attribute: str) -> BinningScheme:
    """Silhouette-best scheme for one method, per-column parameter grid.

    Columns where no parameter combination produces two scorable clusters
    fall back to the first combination that builds at all (a single dense
    region is a legitimate, if uninformative, one-bin outcome for DBSCAN);
    only a column where everything errors fails the optimization.
    """
    if method == "dbscan":
        space = _dbscan_space(values)
    else:
        k_cap = len(set(values))
        space = [DiscretizationParams(k=k) for k in OPT_K_GRID if k <= k_cap] or [
            DiscretizationParams(k=1)
        ]
    try:
        return optimize_scheme(values, method, space, attribute)
    except OptimizationFailedError:
        for params in space:
            try:
                return _build(method, values, params, attribute)
            except InputError:
                continue
        raise


def _any_method_scheme(values: Sequence[float], attribute: str) -> BinningScheme:
    """Best scheme across all four methods by silhouette score."""
    from .discretize import silhouette

    best = None
    fallback = None
    for method in ("equal-width", "equal-depth", "kmeans", "dbscan"):
        try:
            scheme = _optimized_scheme(method, values, attribute)
        except InputError:
            continue
        if fallback is None:
            fallback = scheme
        labels = [apply_scheme(v, scheme) for v in values]
        try:
            score = silhouette(values, labels).score
        except InputError:
            continue
        if best is None or score > best[0]:
            best = (score, scheme)
    if best is not None:
        return best[1]
    if fallback is not None:
        return fallback
    raise OptimizationFailedError(f"no method produced a scheme for {attribute!r}")


def fit_schemes(
    train: Table,
    binning: str,
    bins: int | str,
    target: str,
    only_target: bool = False,
) -> dict[str, BinningScheme]:
    """Fit one scheme per binnable column on the training partition.

    The ``bins`` setting controls the target column only (it fixes the
    granularity of the classification task); feature columns always get
    the per-column parameter search for the configured method, mirroring
    the cluster-optimization step that is run for each column.  DBSCAN
    has no bin-count parameter at all, so the target also goes through
    the epsilon/min_pts grid there.
    """
    if binning not in BINNINGS:
        raise InputError(f"binning must be one of {BINNINGS}, got {binning!r}")
    schemes: dict[str, BinningScheme] = {}
    for name in train.columns:
        values = train.column(name)
        if only_target and name != target:
            continue
        if any(isinstance(v, str) for v in values):
            continue  # categorical columns are already discrete
        if name != target and is_already_discrete(values):
            continue
        if name == target and binning != "opt" and binning != "dbscan" and bins != "opt":
            if not isinstance(bins, int):
                raise InputError(f"bins must be an integer or 'opt', got {bins!r}")
            schemes[name] = _build(binning, values, DiscretizationParams(k=bins), name)
        elif binning == "opt":
            schemes[name] = _any_method_scheme(values, name)
        else:
            schemes[name] = _optimized_scheme(binning, values, name)
    return schemes


def apply_schemes(table: Table, schemes: Mapping[str, BinningScheme]) -> list[dict[str, Any]]:
    """Rows with binned values where a scheme exists, raw values elsewhere."""
    out = []
    for row in table.rows:
        new = {}
        for name, value in row.items():
            if name in schemes:
                new[name] = apply_scheme(value, schemes[name])
            else:
                new[name] = value
        out.append(new)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment run needs; JSON- and flag-compatible."""

    dataset_path: str = "boston"
    target: str = "MEDV"
    learner: str = "pruned_search"
    binning: str = "equal-width"
    bins: int | str = 2
    max_premise_size: int = 2
    exception_depth: int = 5
    split_fraction: float = 0.8
    seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise InputError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        if self.binning not in BINNINGS:
            raise InputError(f"binning must be one of {BINNINGS}, got {self.binning!r}")
        if not 0.0 < self.split_fraction <= 1.0:
            raise InputError(f"split_fraction must be in (0, 1], got {self.split_fraction}")

    def to_json(self) -> dict:
        return {
            "dataset_path": self.dataset_path,
            "target": self.target,
            "learner": self.learner,
            "binning": self.binning,
            "bins": self.bins,
            "max_premise_size": self.max_premise_size,
            "exception_depth": self.exception_depth,
            "split_fraction": self.split_fraction,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @staticmethod
    def from_json(data: Mapping[str, Any]) -> "ExperimentConfig":
        known = {
            k: data[k]
            for k in (
                "dataset_path", "target", "learner", "binning", "bins",
                "max_premise_size", "exception_depth", "split_fraction",
                "seed", "output_dir",
            )
            if k in data
        }
        return ExperimentConfig(**known)


def resolve_dataset(path: str) -> str:
    if path == "boston":
        return datasets.boston_housing_path()
    return path


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    train_report: EvalReport
    test_report: EvalReport
    model_json: dict
    schemes: dict[str, BinningScheme]
    runtime_ms: float

    def table_rows(self) -> list[list[str]]:
        rows = []
        for kind, report in (("training", self.train_report), ("test", self.test_report)):
            rows.append(
                [
                    kind,
                    _binning_label(self.config.binning),
                    "--" if self.config.binning in ("dbscan", "opt") else str(self.config.bins),
                    str(self.config.exception_depth) if self.config.learner == "pruned_search" else "--",
                    str(self.config.max_premise_size) if self.config.learner == "pruned_search" else "--",
                    f"{report.accuracy:.4f}",
                    f"{report.weighted_f1:.4f}",
                ]
            )
        return rows

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "train": self.train_report.to_json(),
            "test": self.test_report.to_json(),
            "schemes": {k: v.to_json() for k, v in sorted(self.schemes.items())},
            "runtime_ms": self.runtime_ms,
        }


TABLE_HEADER = ["data type", "binning method", "# bins", "search depth", "max # premises", "accuracy", "F1"]


def _binning_label(binning: str) -> str:
    return {
        "equal-width": "EWBinning",
        "equal-depth": "EDBinning",
        "kmeans": "kMeans",
        "dbscan": "DBSCAN",
        "opt": "opt",
    }[binning]


def format_table(rows: Sequence[Sequence[str]], header: Sequence[str] = TABLE_HEADER) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    def fmt(row):
        return " | ".join(str(c).ljust(w) for c, w in zip(row, widths))
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([fmt(header), sep, *[fmt(r) for r in rows]])


def _instance_of(row: Mapping[str, Any], target: str) -> dict:
    return {k: v for k, v in row.items() if k != target}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute split, discretize, learn, predict, evaluate for one config."""
    try:
        table = load_csv(resolve_dataset(config.dataset_path))
    except InputError as exc:
        raise InputError(f"[load] {exc}") from exc
    if config.target not in table.columns:
        raise InputError(f"[load] target {config.target!r} not among columns {table.columns}")
    try:
        train, test = split(table, config.split_fraction, config.seed)
    except InputError as exc:
        raise InputError(f"[split] {exc}") from exc

    only_target = config.learner == "dectree"
    try:
        schemes = fit_schemes(train, config.binning, config.bins, config.target, only_target)
        train_rows = apply_schemes(train, schemes)
        test_rows = apply_schemes(test, schemes)
    except InputError as exc:
        raise InputError(f"[discretize] {exc}") from exc

    target = config.target
    start = time.perf_counter()
    try:
        if config.learner == "pruned_search":
            model = build_case_model(train_rows)
            theory = learn_pruned(
                model,
                SearchConfig(
                    max_premise_size=config.max_premise_size,
                    exception_depth=config.exception_depth,
                    target_attributes=(target,),
                ),
            )
            runtime_ms = (time.perf_counter() - start) * 1000
            predict = lambda row: predict_theory(theory, _instance_of(row, target), target)
            model_json = theory.to_json()
        elif config.learner == "hero":
            rule_list = learn_hero(train_rows, target)
            runtime_ms = (time.perf_counter() - start) * 1000
            predict = lambda row: predict_rule_list(rule_list, _instance_of(row, target))
            model_json = rule_list.to_json()
        else:
            feature_order = [c for c in table.columns if c != target]
            params = tune_tree(
                train_rows, target, default_grid(len(feature_order), config.seed),
                folds=3, feature_order=feature_order, seed=config.seed,
            )
            tree = learn_tree(train_rows, target, params, feature_order)
            runtime_ms = (time.perf_counter() - start) * 1000
            predict = lambda row: tree.predict(_instance_of(row, target))
            model_json = {
                "tree": tree.to_json(),
                "params": params.to_json(),
                "rules": [
                    {
                        "premise": {c.attribute: [c.lo, c.hi] for c in r.premise},
                        "conclusion": {c.attribute: c.value for c in r.conclusion},
                    }
                    for r in tree_to_rules(tree, target)
                ],
            }
    except InputError as exc:
        raise InputError(f"[learn] {exc}") from exc

    train_report = evaluate(
        [(predict(row), row[target]) for row in train_rows], runtime_ms=runtime_ms
    )
    test_report = evaluate([(predict(row), row[target]) for row in test_rows])

    result = ExperimentResult(
        config=config,
        train_report=train_report,
        test_report=test_report,
        model_json=model_json,
        schemes=schemes,
        runtime_ms=runtime_ms,
    )
    if config.output_dir:
        write_outputs(result)
    return result


def write_outputs(result: ExperimentResult) -> None:
    out = result.config.output_dir
    os.makedirs(out, exist_ok=True)
    stem = f"{result.config.learner}_{result.config.binning}_{result.config.bins}_seed{result.config.seed}"
    with open(os.path.join(out, f"{stem}.theory.json"), "w") as f:
        json.dump(result.model_json, f, indent=2, sort_keys=True)
    with open(os.path.join(out, f"{stem}.report.json"), "w") as f:
        json.dump(result.to_json(), f, indent=2, sort_keys=True)
    with open(os.path.join(out, f"{stem}.table.txt"), "w") as f:
        f.write(format_table(result.table_rows()) + "\n")


def run_grid(configs: Sequence[ExperimentConfig], workers: int = 1) -> list[ExperimentResult]:
    """Run many experiments; configs are independent so workers may help."""
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_experiment, configs))
    return [run_experiment(c) for c in configs]
