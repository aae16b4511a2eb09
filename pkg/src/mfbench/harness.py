"""Experiment orchestration: grids, seeded cross-validation, aggregation.

A plan expands its hyperparameter grid into an ordered config list
(Cartesian product over the dimensions the model actually uses, in the
fixed order factors, iterations, learning_rate, regularization,
bnmf_alpha, bnmf_beta; the last dimension varies fastest). Every
(config, fold) pair is one trial; its model seed is derived from
(master_seed, config index, fold index) through numpy's SeedSequence,
so results do not depend on execution order or worker count.

Trials that diverge carry no metrics; they are counted and excluded
from averages. Completed trials can be journaled to a ledger file so an
interrupted run resumes without recomputation.
"""

import csv
import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .data import RatingDataset, kfold_split
from .metrics import LIST_METRICS, MetricReport, evaluate_fold, item_distances
from .models import DivergenceError, ModelConfig, fit

GRID_DIMENSIONS = {
    "pmf": ("factors", "iterations", "learning_rate", "regularization"),
    "biasedmf": ("factors", "iterations", "learning_rate", "regularization"),
    "nmf": ("factors", "iterations"),
    "bemf": ("factors", "iterations", "learning_rate", "regularization"),
    "bnmf": ("factors", "iterations", "bnmf_alpha", "bnmf_beta"),
    "urp": ("factors", "iterations"),
}

# Benchmark defaults: the full comparison sweep.
DEFAULT_GRID = {
    "factors": [4, 8, 12],
    "iterations": [25, 50, 75, 100],
    "learning_rate": [0.001, 0.01, 0.1, 1.0],
    "regularization": [0.001, 0.01, 0.1, 1.0],
    "bnmf_alpha": [0.2, 0.4, 0.6, 0.8],
    "bnmf_beta": [5.0, 15.0, 25.0],
}

_INT_DIMENSIONS = {"factors", "iterations"}


@dataclass(frozen=True)
class ExperimentPlan:
    """One model's benchmark run over one dataset."""

    model: str
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    folds: int = 4
    master_seed: int = 0
    n_values: tuple = tuple(range(1, 11))
    sample_count: int | None = None
    sample_seed: int = 0
    dataset_name: str = ""

    def validate(self):
        if self.model not in GRID_DIMENSIONS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.folds < 2:
            raise ValueError("cross-validation needs folds >= 2")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        for dim in GRID_DIMENSIONS[self.model]:
            if not self.grid.get(dim):
                raise ValueError(f"grid dimension {dim!r} is empty")
        if self.sample_count is not None and self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass
class TrialResult:
    model: str
    config_index: int
    fold_index: int
    diverged: bool
    report: MetricReport | None
    wall_time: float | None = None


@dataclass
class AggregateResult:
    model: str
    dataset_name: str
    folds: int
    master_seed: int
    n_values: tuple
    configs: list
    trials: list
    per_config: list
    across_config: dict
    best_config_index: int | None
    num_diverged: int
    resumed_trials: int = 0

    @property
    def best_metrics(self) -> dict | None:
        if self.best_config_index is None:
            return None
        return self.per_config[self.best_config_index]["metrics"]


def expand_grid(model: str, grid: dict) -> list[ModelConfig]:
    """Ordered Cartesian product over the model's grid dimensions."""
    dims = GRID_DIMENSIONS[model]
    for dim in dims:
        if not grid.get(dim):
            raise ValueError(f"grid dimension {dim!r} is empty")
    axes = []
    for dim in dims:
        values = grid[dim]
        if dim in _INT_DIMENSIONS:
            axes.append([int(v) for v in values])
        else:
            axes.append([float(v) for v in values])
    configs = []
    for combo in product(*axes):
        configs.append(ModelConfig(model=model, **dict(zip(dims, combo))))
    return configs


def plan_configs(plan: ExperimentPlan) -> list[ModelConfig]:
    """Expanded (optionally subsampled) config list of a plan."""
    plan.validate()
    configs = expand_grid(plan.model, plan.grid)
    if plan.sample_count is not None and plan.sample_count < len(configs):
        rng = np.random.default_rng(plan.sample_seed)
        chosen = sorted(rng.choice(len(configs), size=plan.sample_count,
                                   replace=False).tolist())
        configs = [configs[i] for i in chosen]
    return configs


def trial_seed(master_seed: int, config_index: int, fold_index: int) -> int:
    """Deterministic per-trial seed mixed from the trial's position."""
    ss = np.random.SeedSequence([master_seed, config_index, fold_index])
    return int(ss.generate_state(1, np.uint64)[0])


# ----------------------------------------------------------------------
# Trial execution. Workers share the folds and cache one item-distance
# matrix per fold; with jobs == 1 everything runs inline.

_WORKER = {}


def _init_worker(folds, n_values):
    _WORKER["folds"] = folds
    _WORKER["n_values"] = n_values
    _WORKER["distances"] = {}


def _run_trial(task):
    config, config_index, fold_index = task
    fold = _WORKER["folds"][fold_index]
    distances = _WORKER["distances"].get(fold_index)
    if distances is None:
        distances = item_distances(fold.train)
        _WORKER["distances"][fold_index] = distances
    start = time.perf_counter()
    try:
        model = fit(config, fold.train)
    except DivergenceError:
        return config_index, fold_index, True, None, time.perf_counter() - start
    report = evaluate_fold(model, fold, _WORKER["n_values"], distances)
    return config_index, fold_index, False, report, time.perf_counter() - start


def _load_ledger(path, n_values):
    done = {}
    try:
        handle = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        return done
    with handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            report = entry["report"]
            if report is not None:
                report = MetricReport.from_json_dict(report)
                if report.n_values != tuple(n_values):
                    continue  # stale ledger from a different plan
            done[(entry["config_index"], entry["fold_index"])] = (
                entry["diverged"], report)
    return done


def _ledger_line(config_index, fold_index, diverged, report):
    return json.dumps({
        "config_index": config_index,
        "fold_index": fold_index,
        "diverged": diverged,
        "report": None if report is None else report.to_json_dict(),
    }, sort_keys=True)


def run_experiment(ds: RatingDataset, plan: ExperimentPlan, jobs: int = 1,
                   ledger_path=None, log=None) -> AggregateResult:
    """Run every (config, fold) trial of a plan and aggregate the metrics.

    The folds are built once from the plan's master seed; each trial's
    model seed comes from :func:`trial_seed`. The returned aggregate is
    bit-identical for identical inputs regardless of ``jobs``.
    """
    plan.validate()
    configs = plan_configs(plan)
    folds = kfold_split(ds, plan.folds, plan.master_seed)
    n_values = tuple(plan.n_values)

    tasks = []
    for ci, config in enumerate(configs):
        for fi in range(plan.folds):
            seeded = ModelConfig(**{
                **config.__dict__,
                "seed": trial_seed(plan.master_seed, ci, fi),
            })
            tasks.append((seeded, ci, fi))

    done = _load_ledger(ledger_path, n_values) if ledger_path else {}
    resumed = 0
    results = {}
    for _, ci, fi in tasks:
        if (ci, fi) in done:
            diverged, report = done[(ci, fi)]
            results[(ci, fi)] = TrialResult(plan.model, ci, fi, diverged,
                                            report, wall_time=None)
            resumed += 1
    pending = [t for t in tasks if (t[1], t[2]) not in results]

    ledger = open(ledger_path, "a", encoding="utf-8") if ledger_path else None
    try:
        if jobs > 1 and pending:
            with ProcessPoolExecutor(
                    max_workers=jobs, initializer=_init_worker,
                    initargs=(folds, n_values)) as pool:
                for ci, fi, diverged, report, wall in pool.map(
                        _run_trial, pending):
                    results[(ci, fi)] = TrialResult(plan.model, ci, fi,
                                                    diverged, report, wall)
                    if ledger:
                        ledger.write(_ledger_line(ci, fi, diverged, report)
                                     + "\n")
                        ledger.flush()
                    if log:
                        log(results[(ci, fi)])
        else:
            _init_worker(folds, n_values)
            for task in pending:
                ci, fi, diverged, report, wall = _run_trial(task)
                results[(ci, fi)] = TrialResult(plan.model, ci, fi, diverged,
                                                report, wall)
                if ledger:
                    ledger.write(_ledger_line(ci, fi, diverged, report) + "\n")
                    ledger.flush()
                if log:
                    log(results[(ci, fi)])
    finally:
        if ledger:
            ledger.close()
        _WORKER.clear()

    trials = [results[(ci, fi)]
              for ci in range(len(configs)) for fi in range(plan.folds)]
    per_config, across, best_index, diverged_count = _aggregate(
        configs, trials, plan.folds, n_values)
    return AggregateResult(
        model=plan.model,
        dataset_name=plan.dataset_name,
        folds=plan.folds,
        master_seed=plan.master_seed,
        n_values=n_values,
        configs=configs,
        trials=trials,
        per_config=per_config,
        across_config=across,
        best_config_index=best_index,
        num_diverged=diverged_count,
        resumed_trials=resumed,
    )


def _metric_keys(n_values):
    keys = ["mae"]
    for metric in LIST_METRICS:
        keys.extend(f"{metric}@{n}" for n in n_values)
    return keys


def _average(values):
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def _aggregate(configs, trials, folds, n_values):
    keys = _metric_keys(n_values)
    per_config = []
    diverged_count = sum(1 for t in trials if t.diverged)
    for ci in range(len(configs)):
        fold_trials = trials[ci * folds:(ci + 1) * folds]
        valid = [t for t in fold_trials if not t.diverged]
        metrics = {}
        for key in keys:
            metrics[key] = _average(
                [t.report.to_flat_dict()[key] for t in valid]) if valid else None
        per_config.append({
            "config_index": ci,
            "valid_trials": len(valid),
            "diverged_trials": folds - len(valid),
            "metrics": metrics,
        })
    across = {key: _average([pc["metrics"][key] for pc in per_config])
              for key in keys}
    candidates = [(pc["metrics"]["mae"], pc["config_index"])
                  for pc in per_config if pc["metrics"]["mae"] is not None]
    best_index = min(candidates)[1] if candidates else None
    return per_config, across, best_index, diverged_count


def series_table(result: AggregateResult) -> dict:
    """Per-metric N-series: grid-averaged and best-config views."""
    table = {}
    best = result.best_metrics
    for metric in LIST_METRICS:
        grid_avg = {n: result.across_config[f"{metric}@{n}"]
                    for n in result.n_values}
        best_series = ({n: best[f"{metric}@{n}"] for n in result.n_values}
                       if best is not None else
                       {n: None for n in result.n_values})
        table[metric] = {"grid_avg": grid_avg, "best_config": best_series}
    return table


# ----------------------------------------------------------------------
# Persistence. Floats are written with repr (shortest exact round-trip)
# and rows in canonical order, so identical results give identical bytes.

SCHEMA_VERSION = 1

_CONFIG_COLUMNS = ("factors", "iterations", "learning_rate",
                   "regularization", "bnmf_alpha", "bnmf_beta", "seed")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trials_csv(path, result: AggregateResult):
    keys = _metric_keys(result.n_values)
    header = ["model", "config_index", "fold", *_CONFIG_COLUMNS,
              "diverged", *keys]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for trial in result.trials:
            config = result.configs[trial.config_index]
            seed = trial_seed(result.master_seed, trial.config_index,
                              trial.fold_index)
            flat = trial.report.to_flat_dict() if trial.report else {}
            row = [result.model, trial.config_index, trial.fold_index]
            row.extend(_cell(getattr(config, c)) for c in _CONFIG_COLUMNS[:-1])
            row.append(seed)
            row.append(int(trial.diverged))
            row.extend(_cell(flat.get(k)) for k in keys)
            writer.writerow(row)


def aggregate_to_json_dict(result: AggregateResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "model": result.model,
        "dataset": result.dataset_name,
        "folds": result.folds,
        "master_seed": result.master_seed,
        "n_values": list(result.n_values),
        "configs": [dataclasses.asdict(c) for c in result.configs],
        "trials": [
            {
                "config_index": t.config_index,
                "fold_index": t.fold_index,
                "diverged": t.diverged,
                "metrics": t.report.to_flat_dict() if t.report else None,
            }
            for t in result.trials
        ],
        "per_config": result.per_config,
        "across_config": result.across_config,
        "best_config_index": result.best_config_index,
        "num_diverged": result.num_diverged,
    }


def write_aggregate_json(path, result: AggregateResult):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        json.dump(aggregate_to_json_dict(result), handle, sort_keys=True,
                  indent=2)
        handle.write("\n")


def write_series_csv(path, metric: str, results: list):
    """One metric's N-series for every model in ``results``."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["model", "N", "grid_avg", "best_config"])
        for result in results:
            table = series_table(result)[metric]
            for n in result.n_values:
                writer.writerow([
                    result.model, n,
                    _cell(table["grid_avg"][n]),
                    _cell(table["best_config"][n]),
                ])


def write_timings_csv(path, result: AggregateResult):
    """Wall-clock seconds per freshly computed trial (non-deterministic)."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["model", "config_index", "fold", "wall_time"])
        for trial in result.trials:
            if trial.wall_time is None:
                continue
            writer.writerow([result.model, trial.config_index,
                             trial.fold_index, f"{trial.wall_time:.3f}"])


def format_mae_table(rows: dict) -> str:
    """Models-by-datasets MAE text table, best value per dataset marked.

    ``rows`` maps dataset name to {model: mae or None}; the best (lowest)
    value in each dataset row gets a ``*`` suffix.
    """
    models = []
    for per_model in rows.values():
        for m in per_model:
            if m not in models:
                models.append(m)
    name_width = max([len("dataset")] + [len(d) for d in rows])
    header = "dataset".ljust(name_width) + "".join(f"  {m:>12}" for m in models)
    lines = [header]
    for dataset, per_model in rows.items():
        present = [v for v in per_model.values() if v is not None]
        best = min(present) if present else None
        cells = []
        for m in models:
            v = per_model.get(m)
            if v is None:
                text = "-"
            else:
                text = f"{v:.4f}*" if v == best else f"{v:.4f}"
            cells.append(f"  {text:>12}")
        lines.append(dataset.ljust(name_width) + "".join(cells))
    return "\n".join(lines) + "\n"
