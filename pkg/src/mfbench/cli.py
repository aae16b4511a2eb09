"""Command-line front end: dataset inspection, training, benchmarks.

Commands
--------
stats             print users/items/ratings/score-range/sparsity
train             train one model, write a versioned model file
evaluate          score a saved model against a dataset (or one CV fold)
benchmark         run the full plan from a config file, write result files
export-plot-data  flatten series CSVs into one tidy long-format CSV

Exit codes: 0 success, 2 configuration or usage error, 3 I/O error,
4 training divergence.

Every command is deterministic given its inputs: rerunning `benchmark`
with the same config file reproduces every result file byte for byte
(scratch files under ``<out>/.scratch/``, such as trial timings and the
resume ledger, are exempt). A JSON config file fully determines a run;
flags override individual scalar fields.
"""

import dataclasses
import json
import re
import sys
import time
from pathlib import Path

import click

from . import harness, metrics, models
from .data import (
    DatasetError,
    DatasetFormat,
    FORMAT_PRESETS,
    ScoreScale,
    dataset_stats,
    kfold_split,
    load_ratings,
    resolve_format,
)
from .models import DivergenceError

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGENCE = 4

CONFIG_SCHEMA_VERSION = 1

_NAME_RE = re.compile(r"^[A-Za-z0-9_-]+$")


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _split_dataset_arg(value):
    """Accept either a plain path or 'preset:path'."""
    if value and ":" in value:
        prefix, rest = value.split(":", 1)
        if prefix in FORMAT_PRESETS:
            return rest, prefix
    return value, None


def _scale_from_dict(payload):
    return ScoreScale(
        min_score=float(payload["min_score"]),
        max_score=float(payload["max_score"]),
        step=float(payload["step"]),
        threshold=float(payload["threshold"]),
    )


def _format_from_dict(payload):
    return DatasetFormat(
        delimiter=payload.get("delimiter"),
        has_header=bool(payload.get("has_header", False)),
        user_col=int(payload.get("user_col", 0)),
        item_col=int(payload.get("item_col", 1)),
        rating_col=int(payload.get("rating_col", 2)),
        scale=_scale_from_dict(payload["scale"]),
        drop_values=frozenset(float(v) for v in payload.get("drop_values", [])),
    )


def _resolve_dataset(path, preset, dataset_cfg=None):
    """Merge CLI flags with the config file's dataset section."""
    dataset_cfg = dataset_cfg or {}
    path = path or dataset_cfg.get("path")
    if not path:
        _fail(EXIT_CONFIG, "no dataset path given (flag --dataset or config)")
    path, inline_preset = _split_dataset_arg(str(path))
    preset = preset or inline_preset or dataset_cfg.get("preset")
    if "format" in dataset_cfg:
        fmt = _format_from_dict(dataset_cfg["format"])
    elif preset:
        fmt = resolve_format(preset)
    else:
        fmt = resolve_format("movielens")
    if "threshold" in dataset_cfg:
        fmt = dataclasses.replace(
            fmt, scale=dataclasses.replace(
                fmt.scale, threshold=float(dataset_cfg["threshold"])))
    name = dataset_cfg.get("name") or Path(path).stem
    name = re.sub(r"[^A-Za-z0-9_-]+", "-", name)
    return path, fmt, name


def _load_dataset(path, fmt):
    try:
        return load_ratings(path, fmt)
    except FileNotFoundError:
        _fail(EXIT_IO, f"dataset file not found: {path}")
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read {path}: {exc}")
    except DatasetError as exc:
        _fail(EXIT_CONFIG, str(exc))


def _load_run_config(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            cfg = json.load(handle)
    except FileNotFoundError:
        _fail(EXIT_IO, f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"config file {path} is not valid JSON: {exc}")
    if cfg.get("schema_version") != CONFIG_SCHEMA_VERSION:
        _fail(EXIT_CONFIG,
              f"config schema_version must be {CONFIG_SCHEMA_VERSION}")
    for section in ("dataset", "plan", "output"):
        if section not in cfg:
            _fail(EXIT_CONFIG, f"config file is missing the {section!r} section")
    name = cfg["dataset"].get("name")
    if name and not _NAME_RE.match(name):
        _fail(EXIT_CONFIG, "dataset.name may only contain [A-Za-z0-9_-]")
    return cfg


@click.group()
def main():
    """Matrix factorization models with a reproducible evaluation harness."""


@main.command()
@click.option("--dataset", "dataset", help="ratings file (or preset:path)")
@click.option("--preset", type=click.Choice(sorted(FORMAT_PRESETS)),
              help="dataset format preset")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="run config file supplying the dataset section")
def stats(dataset, preset, config_path):
    """Print dataset size, score range and sparsity."""
    dataset_cfg = _load_run_config(config_path)["dataset"] if config_path else {}
    path, fmt, _ = _resolve_dataset(dataset, preset, dataset_cfg)
    ds = _load_dataset(path, fmt)
    info = dataset_stats(ds)
    click.echo(f"{'users':>10} {'items':>10} {'ratings':>10} "
               f"{'scores':>12} {'sparsity%':>10}")
    srange = f"{fmt.scale.min_score:g}-{fmt.scale.max_score:g}"
    click.echo(f"{info.num_users:>10} {info.num_items:>10} "
               f"{info.num_ratings:>10} {srange:>12} "
               f"{info.sparsity_percent:>10.2f}")


@main.command()
@click.option("--dataset", "dataset", required=True,
              help="ratings file (or preset:path)")
@click.option("--preset", type=click.Choice(sorted(FORMAT_PRESETS)))
@click.option("--model", "model_kind", required=True,
              type=click.Choice(models.MODEL_KINDS))
@click.option("--factors", default=8, show_default=True)
@click.option("--iterations", default=100, show_default=True)
@click.option("--learning-rate", default=0.01, show_default=True)
@click.option("--regularization", default=0.1, show_default=True)
@click.option("--bnmf-alpha", default=0.8, show_default=True)
@click.option("--bnmf-beta", default=5.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="output model file (.npz)")
def train(dataset, preset, model_kind, factors, iterations, learning_rate,
          regularization, bnmf_alpha, bnmf_beta, seed, out_path):
    """Train one model on the full dataset and save it."""
    path, fmt, _ = _resolve_dataset(dataset, preset)
    ds = _load_dataset(path, fmt)
    config = models.ModelConfig(
        model=model_kind, factors=factors, iterations=iterations,
        learning_rate=learning_rate, regularization=regularization,
        bnmf_alpha=bnmf_alpha, bnmf_beta=bnmf_beta, seed=seed)
    try:
        config.validate()
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    start = time.perf_counter()
    try:
        model = models.fit(config, ds)
    except DivergenceError as exc:
        _fail(EXIT_DIVERGENCE, str(exc))
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    wall = time.perf_counter() - start
    try:
        models.save_model(model, out_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {out_path}: {exc}")
    train_mae = metrics.mae(model, ds.users, ds.items, ds.values)
    click.echo(f"model: {model_kind}  training MAE: {train_mae:.6f}  "
               f"wall time: {wall:.2f}s")
    click.echo(f"saved: {out_path}")


@main.command()
@click.argument("model_file", type=click.Path())
@click.option("--dataset", "dataset", required=True,
              help="ratings file (or preset:path)")
@click.option("--preset", type=click.Choice(sorted(FORMAT_PRESETS)))
@click.option("--folds", default=None, type=int,
              help="evaluate against one fold of a k-fold split")
@click.option("--fold", "fold_index", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True,
              help="fold split seed (with --folds)")
def evaluate(model_file, dataset, preset, folds, fold_index, seed):
    """Score a saved model. With --folds, metrics run on that fold's
    test half (novelty/diversity use the fold's train half); otherwise
    the whole file is the test set and only MAE and ranking metrics are
    reported."""
    try:
        model = models.load_model(model_file)
    except FileNotFoundError:
        _fail(EXIT_IO, f"model file not found: {model_file}")
    except (OSError, ValueError) as exc:
        _fail(EXIT_IO, f"cannot load model {model_file}: {exc}")
    path, fmt, _ = _resolve_dataset(dataset, preset)
    ds = _load_dataset(path, fmt)

    if folds is not None:
        if not (0 <= fold_index < folds):
            _fail(EXIT_CONFIG, f"--fold must lie in [0, {folds})")
        split = kfold_split(ds, folds, seed)[fold_index]
        report = metrics.evaluate_fold(model, split)
        click.echo(f"mae: {report.mae!r}")
        for metric in metrics.LIST_METRICS:
            series = report.series(metric)
            cells = " ".join(
                "-" if series[n] is None else f"{series[n]:.4f}"
                for n in report.n_values)
            click.echo(f"{metric}@1..{max(report.n_values)}: {cells}")
        return

    test_mae = metrics.mae(model, ds.users, ds.items, ds.values)
    click.echo(f"mae: {test_mae!r}")
    test_ratings = {}
    for u, i, r in zip(ds.users, ds.items, ds.values):
        test_ratings.setdefault(int(u), {})[int(i)] = float(r)
    lists = {
        user: metrics.recommend_top_n(model, user,
                                      sorted(test_ratings[user]), 10).items
        for user in sorted(test_ratings)
    }
    theta = fmt.scale.threshold
    for name, value in (
        ("precision@10", metrics.precision_at_n(lists, test_ratings, theta, 10)),
        ("recall@10", metrics.recall_at_n(lists, test_ratings, theta, 10)),
        ("ndcg@10", metrics.ndcg_at_n(lists, test_ratings, 10)),
    ):
        click.echo(f"{name}: {'-' if value is None else f'{value:.4f}'}")


def _merged_grid(plan_cfg, model):
    grid = dict(harness.DEFAULT_GRID)
    grid.update(plan_cfg.get("grid", {}))
    grid.update(plan_cfg.get("grids", {}).get(model, {}))
    return grid


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--jobs", default=1, show_default=True,
              help="concurrent trials")
@click.option("--out", "out_override", type=click.Path(), default=None,
              help="override output.dir from the config file")
@click.option("--dataset", "dataset_override", default=None,
              help="override dataset path")
@click.option("--folds", "folds_override", type=int, default=None)
@click.option("--seed", "seed_override", type=int, default=None,
              help="override plan.master_seed")
def benchmark(config_path, jobs, out_override, dataset_override,
              folds_override, seed_override):
    """Run the configured models' grids under k-fold cross-validation."""
    cfg = _load_run_config(config_path)
    plan_cfg = cfg["plan"]
    path, fmt, ds_name = _resolve_dataset(dataset_override, None,
                                          cfg["dataset"])
    ds = _load_dataset(path, fmt)

    out_dir = Path(out_override or cfg["output"].get("dir", "results"))
    scratch = out_dir / ".scratch"
    scratch.mkdir(parents=True, exist_ok=True)

    model_list = plan_cfg.get("models", list(models.MODEL_KINDS))
    folds = folds_override or int(plan_cfg.get("folds", 4))
    master_seed = (seed_override if seed_override is not None
                   else int(plan_cfg.get("master_seed", 0)))
    n_max = int(plan_cfg.get("n_max", 10))
    sampling = plan_cfg.get("sampling")

    results = []
    failures = []
    for model in model_list:
        plan = harness.ExperimentPlan(
            model=model,
            grid=_merged_grid(plan_cfg, model),
            folds=folds,
            master_seed=master_seed,
            n_values=tuple(range(1, n_max + 1)),
            sample_count=sampling.get("count") if sampling else None,
            sample_seed=sampling.get("seed", 0) if sampling else 0,
            dataset_name=ds_name,
        )
        try:
            plan.validate()
            result = harness.run_experiment(
                ds, plan, jobs=jobs,
                ledger_path=scratch / f"ledger_{ds_name}__{model}.jsonl")
        except ValueError as exc:
            _fail(EXIT_CONFIG, str(exc))
        except Exception as exc:  # isolate one model's failure
            failures.append((model, exc))
            click.echo(f"model {model} failed: {exc}", err=True)
            continue
        harness.write_trials_csv(
            out_dir / f"trials_{ds_name}__{model}.csv", result)
        harness.write_aggregate_json(
            out_dir / f"aggregate_{ds_name}__{model}.json", result)
        harness.write_timings_csv(
            scratch / f"timings_{ds_name}__{model}.csv", result)
        best = result.best_metrics
        best_mae = best["mae"] if best else None
        click.echo(f"{model}: {len(result.configs)} configs x {folds} folds, "
                   f"{result.num_diverged} diverged, best MAE "
                   f"{'-' if best_mae is None else f'{best_mae:.4f}'}")
        results.append(result)

    for metric in metrics.LIST_METRICS:
        harness.write_series_csv(
            out_dir / f"series_{ds_name}__{metric}.csv", metric, results)

    rows = {ds_name: {
        r.model: (r.best_metrics or {}).get("mae") for r in results}}
    table = harness.format_mae_table(rows)
    (out_dir / "mae_table.txt").write_text(table, encoding="utf-8")
    _write_mae_csv(out_dir / "mae_table.csv", results, ds_name)
    click.echo(table, nl=False)

    if failures:
        click.echo("failed models: " + ", ".join(m for m, _ in failures),
                   err=True)
        sys.exit(1)


def _write_mae_csv(path, results, ds_name):
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = _csv.writer(handle, lineterminator="\n")
        writer.writerow(["dataset", "model", "best_mae", "grid_avg_mae",
                         "diverged_trials"])
        for r in results:
            best = (r.best_metrics or {}).get("mae")
            writer.writerow([
                ds_name, r.model,
                "" if best is None else repr(best),
                "" if r.across_config["mae"] is None
                else repr(r.across_config["mae"]),
                r.num_diverged,
            ])


@main.command("export-plot-data")
@click.option("--results", "results_dir", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def export_plot_data(results_dir, out_path):
    """Flatten series CSVs into tidy (dataset, model, metric, N, value)
    rows; values are copied verbatim from the grid-averaged column."""
    import csv as _csv

    results_dir = Path(results_dir)
    series_files = sorted(results_dir.glob("series_*__*.csv"))
    if not series_files:
        _fail(EXIT_IO, f"no series CSVs found under {results_dir}")
    with open(out_path, "w", encoding="utf-8", newline="") as handle:
        writer = _csv.writer(handle, lineterminator="\n")
        writer.writerow(["dataset", "model", "metric", "N", "value"])
        for series_path in series_files:
            stem = series_path.stem[len("series_"):]
            dataset, metric = stem.rsplit("__", 1)
            with open(series_path, "r", encoding="utf-8", newline="") as src:
                reader = _csv.reader(src)
                next(reader)  # header
                for model, n, grid_avg, _best in reader:
                    writer.writerow([dataset, model, metric, n, grid_avg])
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
