"""Command-line front end: data generation, training, and the experiment suite.

Every command writes its tables as both CSV and JSON and finishes by emitting
a run manifest (command, effective arguments, seeds, SHA-256 of each output
file).  Re-running a command with the arguments recorded in its manifest
reproduces the output files byte for byte; only the manifest timestamps
differ.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import csv
import functools
import hashlib
import json
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import click

from . import baselines, dataset, detection, pipeline, telemetry
from .benchmark import load_benchmark
from .errors import FuzzydriftError
from .evaluation import hard_assignments

OUTPUT_DIR_ENV = "FUZZYDRIFT_OUTPUT_DIR"


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_table(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(
    manifest_path, command, arguments, seeds, outputs, config_path, started
) -> Path:
    manifest_path = Path(manifest_path)
    payload = {
        "command": command,
        "arguments": arguments,
        "config_path": None if config_path is None else str(config_path),
        "seeds": seeds,
        "started": started,
        "finished": _utc_now(),
        "outputs": [
            {"path": str(path), "sha256": _sha256(path)} for path in outputs
        ],
    }
    _write_json(manifest_path, payload)
    return manifest_path


def _surface_errors(func):
    """Map package and I/O failures onto exit code 1 with a clean message."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except (FuzzydriftError, OSError, json.JSONDecodeError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _parse_ratios(text):
    """Comma-separated ratio list, e.g. ``0,0.1,0.2`` -> (0.0, 0.1, 0.2)."""
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise click.UsageError(f"cannot parse ratio list {text!r}") from exc


def _ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_data(bench, data_path, labels_path):
    """CSV override pair, or the bundled benchmark dataset when absent."""
    if (data_path is None) != (labels_path is None):
        raise click.UsageError("--data and --labels must be given together")
    if data_path is None:
        return bench.make_dataset()
    return dataset.read_csv(data_path), dataset.read_labels_csv(labels_path)


def _fit_default_pipeline(bench, matrix, labels, algorithm="posscp", space="EA_PCA"):
    return pipeline.fit_pipeline(
        matrix,
        labels,
        config=space,
        algorithm=algorithm,
        seed=bench.fit_seed,
        split_seed=bench.split_seed,
        test_fraction=bench.test_fraction,
        n_clusters=bench.n_clusters,
        entropy_threshold=bench.entropy_threshold,
        variance_threshold=bench.pca_variance_threshold,
    )


_benchmark_option = click.option(
    "--benchmark",
    "benchmark_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Benchmark config JSON overriding the bundled one; flags win over it.",
)

_output_dir_option = click.option(
    "--output-dir",
    envvar=OUTPUT_DIR_ENV,
    default=".",
    show_default=True,
    help=f"Directory for result files (overridable via ${OUTPUT_DIR_ENV}).",
)


@click.group()
def main():
    """Pump-drift change detection: synthetic telemetry, fuzzy clustering,
    reference-method comparisons, and streamed drift identification."""


@main.command()
@click.option("--samples", type=int, default=None, help="Telemetry rows to draw.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise-level", type=float, default=None, help="Sensor noise scale.")
@click.option("--constant-features", type=int, default=None)
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Generator config JSON; explicit flags override its fields.",
)
@click.option(
    "--labeled",
    is_flag=True,
    default=False,
    help="Mix drifted samples in and write a companion labels CSV.",
)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_surface_errors
def generate(samples, seed, noise_level, constant_features, config_path, labeled, out):
    """Synthesize an amplifier telemetry dataset and write it as CSV."""
    started = _utc_now()
    merged = {}
    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if not isinstance(payload, dict):
            raise click.ClickException(f"{config_path} does not hold a JSON object")
        merged.update(payload.get("generator", payload))
    if samples is not None:
        merged["samples"] = samples
    if noise_level is not None:
        merged["noise_level"] = noise_level
    if constant_features is not None:
        merged["constant_features"] = constant_features
    if "samples" not in merged:
        raise click.UsageError("--samples is required unless the config sets it")
    config = telemetry.GeneratorConfig.from_dict(merged)

    labels = None
    if labeled:
        mix = telemetry.AnomalyMixConfig()
        matrix, labels = telemetry.make_labeled_dataset(config, mix, seed)
    else:
        matrix = telemetry.generate_dataset(config, seed)

    out_path = Path(out)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    dataset.write_csv(matrix, out_path)
    config_out = out_path.with_suffix(".config.json")
    telemetry.save_config(config, config_out)
    outputs = [out_path, config_out]
    if labels is not None:
        labels_out = out_path.with_suffix(".labels.csv")
        dataset.write_labels_csv(labels, labels_out)
        outputs.append(labels_out)

    manifest = _write_manifest(
        out_path.with_suffix(".manifest.json"),
        "generate",
        {
            "samples": config.samples,
            "seed": seed,
            "noise_level": config.noise_level,
            "constant_features": config.constant_features,
            "labeled": labeled,
            "out": str(out_path),
        },
        {"seed": seed},
        outputs,
        config_path,
        started,
    )
    click.echo(
        f"wrote {matrix.n_samples} samples x {matrix.n_features} features "
        f"({config.constant_features} constant) to {out_path}"
    )
    click.echo(f"manifest: {manifest}")


@main.command()
@_benchmark_option
@click.option(
    "--data",
    "data_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Telemetry CSV; defaults to the bundled benchmark dataset.",
)
@click.option(
    "--labels",
    "labels_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Boolean drift labels CSV matching --data.",
)
@click.option(
    "--space",
    type=click.Choice(pipeline.CONFIGS),
    default="EA_PCA",
    show_default=True,
    help="Feature-space configuration to train in.",
)
@click.option(
    "--algorithm",
    type=click.Choice(pipeline.ALGORITHMS),
    default="posscp",
    show_default=True,
)
@click.option("--seed", type=int, default=None, help="Clustering seed.")
@click.option("--split-seed", type=int, default=None, help="Train/test split seed.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_surface_errors
def train(benchmark_path, data_path, labels_path, space, algorithm, seed, split_seed, out):
    """Fit the full detection pipeline once and save it as JSON."""
    started = _utc_now()
    bench = load_benchmark(benchmark_path)
    seed = bench.fit_seed if seed is None else seed
    split_seed = bench.split_seed if split_seed is None else split_seed
    matrix, labels = _load_data(bench, data_path, labels_path)
    model = pipeline.fit_pipeline(
        matrix,
        labels,
        config=space,
        algorithm=algorithm,
        seed=seed,
        split_seed=split_seed,
        test_fraction=bench.test_fraction,
        n_clusters=bench.n_clusters,
        entropy_threshold=bench.entropy_threshold,
        variance_threshold=bench.pca_variance_threshold,
    )
    result = pipeline.evaluate_pipeline(model, matrix, labels, bench.test_fraction)

    out_path = Path(out)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    model.save_json(out_path)
    manifest = _write_manifest(
        out_path.with_suffix(".manifest.json"),
        "train",
        {
            "space": space,
            "algorithm": algorithm,
            "seed": seed,
            "split_seed": split_seed,
            "data": data_path,
            "labels": labels_path,
            "out": str(out_path),
        },
        {
            "fit_seed": seed,
            "split_seed": split_seed,
            "dataset_seed": None if data_path else bench.dataset_seed,
        },
        [out_path],
        benchmark_path,
        started,
    )
    click.echo(
        f"{space}/{algorithm}: mse_train={result.mse_train:.4f} "
        f"mse_test={result.mse_test:.4f}"
    )
    click.echo(f"manifest: {manifest}")


@main.command()
@click.option(
    "--model",
    "model_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Pipeline JSON written by `train`.",
)
@click.option(
    "--data",
    "data_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_surface_errors
def predict(model_path, data_path, out):
    """Score telemetry with a saved pipeline; write one verdict per row."""
    started = _utc_now()
    model = pipeline.PipelineModel.load_json(model_path)
    matrix = dataset.read_csv(data_path)
    weights = model.memberships(matrix)
    clusters = hard_assignments(weights)
    anomalous = clusters == model.anomaly_cluster_index

    out_path = Path(out)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    header = [f"weight_{j}" for j in range(weights.shape[1])] + ["cluster", "anomalous"]
    rows = [
        [repr(float(w)) for w in weights[i]] + [int(clusters[i]), int(anomalous[i])]
        for i in range(weights.shape[0])
    ]
    _write_table(out_path, header, rows)
    manifest = _write_manifest(
        out_path.with_suffix(".manifest.json"),
        "predict",
        {"model": str(model_path), "data": str(data_path), "out": str(out_path)},
        {},
        [out_path],
        None,
        started,
    )
    click.echo(
        f"{int(anomalous.sum())} of {matrix.n_samples} samples flagged anomalous"
    )
    click.echo(f"manifest: {manifest}")


@main.command()
@_benchmark_option
@click.option("--runs", type=int, default=None, help="Averaging runs per grid cell.")
@click.option(
    "--data",
    "data_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Telemetry CSV; defaults to the bundled benchmark dataset.",
)
@click.option(
    "--labels",
    "labels_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
)
@_output_dir_option
@_surface_errors
def ablate(benchmark_path, runs, data_path, labels_path, output_dir):
    """Run the feature-space x algorithm grid and write the score tables."""
    started = _utc_now()
    bench = load_benchmark(benchmark_path)
    runs = bench.ablation_runs if runs is None else runs
    matrix, labels = _load_data(bench, data_path, labels_path)
    cells, traces = pipeline.run_ablation(
        matrix,
        labels,
        runs=runs,
        split_seed_base=bench.split_seed,
        fit_seed_base=bench.fit_seed,
        test_fraction=bench.test_fraction,
        n_clusters=bench.n_clusters,
        entropy_threshold=bench.entropy_threshold,
        variance_threshold=bench.pca_variance_threshold,
        collect_traces=True,
    )

    out_dir = _ensure_dir(output_dir)
    csv_path = out_dir / "ablation.csv"
    _write_table(
        csv_path,
        ["config", "algorithm", "mse_train", "mse_test", "std"],
        [
            [c.config, c.algorithm, repr(c.mse_train), repr(c.mse_test), repr(c.std)]
            for c in cells
        ],
    )
    json_path = out_dir / "ablation.json"
    _write_json(json_path, [c.to_dict() for c in cells])
    traces_path = out_dir / "error_traces.csv"
    trace_rows = []
    for (config, algorithm), trace in sorted(traces.items()):
        for index, (error, delta) in enumerate(zip(trace.errors, trace.deltas)):
            trace_rows.append([config, algorithm, index, repr(error), repr(delta)])
    _write_table(
        traces_path, ["config", "algorithm", "iteration", "error", "delta"], trace_rows
    )

    manifest = _write_manifest(
        out_dir / "ablate_manifest.json",
        "ablate",
        {"runs": runs, "data": data_path, "labels": labels_path},
        {
            "dataset_seed": None if data_path else bench.dataset_seed,
            "split_seed_base": bench.split_seed,
            "fit_seed_base": bench.fit_seed,
        },
        [csv_path, json_path, traces_path],
        benchmark_path,
        started,
    )
    for cell in cells:
        click.echo(
            f"{cell.config:<7} {cell.algorithm:<7} "
            f"mse_train={cell.mse_train:.4f} mse_test={cell.mse_test:.4f} "
            f"std={cell.std:.4f}"
        )
    click.echo(f"manifest: {manifest}")


@main.command()
@_benchmark_option
@click.option("--repeats", type=int, default=None, help="Averaging repeats.")
@click.option(
    "--samples", type=int, default=None, help="Subsample size drawn per repeat."
)
@click.option("--seed", type=int, default=None, help="Base seed for the repeats.")
@click.option(
    "--data",
    "data_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Telemetry CSV; defaults to the bundled benchmark dataset.",
)
@click.option(
    "--labels",
    "labels_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
)
@_output_dir_option
@_surface_errors
def compare(benchmark_path, repeats, samples, seed, data_path, labels_path, output_dir):
    """Score the pipeline head-to-head against the reference clusterers."""
    started = _utc_now()
    bench = load_benchmark(benchmark_path)
    repeats = bench.compare_repeats if repeats is None else repeats
    samples = bench.compare_samples if samples is None else samples
    seed = bench.compare_seed if seed is None else seed
    matrix, labels = _load_data(bench, data_path, labels_path)
    rows = baselines.run_comparison(
        matrix,
        labels,
        repeats=repeats,
        samples=samples,
        seed_base=seed,
        test_fraction=bench.test_fraction,
        entropy_threshold=bench.entropy_threshold,
        variance_threshold=bench.pca_variance_threshold,
    )

    out_dir = _ensure_dir(output_dir)
    csv_path = out_dir / "compare.csv"
    _write_table(
        csv_path,
        ["method", "repeats", "mse_train", "mse_test", "std"],
        [
            [r.method, r.repeats, repr(r.mse_train), repr(r.mse_test), repr(r.std)]
            for r in rows
        ],
    )
    json_path = out_dir / "compare.json"
    _write_json(json_path, [r.to_dict() for r in rows])
    manifest = _write_manifest(
        out_dir / "compare_manifest.json",
        "compare",
        {
            "repeats": repeats,
            "samples": samples,
            "seed": seed,
            "data": data_path,
            "labels": labels_path,
        },
        {
            "dataset_seed": None if data_path else bench.dataset_seed,
            "compare_seed": seed,
        },
        [csv_path, json_path],
        benchmark_path,
        started,
    )
    for row in rows:
        click.echo(
            f"{row.method:<12} mse_train={row.mse_train:.4f} "
            f"mse_test={row.mse_test:.4f} std={row.std:.4f}"
        )
    click.echo(f"manifest: {manifest}")


@main.command()
@_benchmark_option
@click.option(
    "--grid",
    default=None,
    help="Comma-separated drift ratios to scan, ascending (e.g. 0.01,0.02).",
)
@click.option("--window", type=int, default=None, help="Smoothing window length.")
@click.option(
    "--samples", type=int, default=None, help="Healthy inspection batch size."
)
@_output_dir_option
@_surface_errors
def cpd(benchmark_path, grid, window, samples, output_dir):
    """Find each algorithm's minimal detectable drift ratio on a fixed grid."""
    started = _utc_now()
    bench = load_benchmark(benchmark_path)
    grid = bench.cpd_grid if grid is None else _parse_ratios(grid)
    window = bench.cpd_window if window is None else window
    samples = bench.cpd_samples if samples is None else samples
    matrix, labels = bench.make_dataset()
    healthy = telemetry.generate_dataset(
        replace(bench.generator, samples=samples), bench.cpd_seed
    )

    def factory(algorithm):
        return _fit_default_pipeline(bench, matrix, labels, algorithm=algorithm)

    results = [
        detection.minimal_cpd(factory, algorithm, grid, healthy=healthy, window=window)
        for algorithm in pipeline.ALGORITHMS
    ]

    out_dir = _ensure_dir(output_dir)
    csv_path = out_dir / "cpd.csv"
    _write_table(
        csv_path,
        ["algorithm", "minimal_ratio", "never_fired"],
        [
            [
                r.algorithm,
                "" if r.minimal_ratio is None else repr(r.minimal_ratio),
                int(r.never_fired),
            ]
            for r in results
        ],
    )
    json_path = out_dir / "cpd.json"
    _write_json(json_path, [r.to_dict() for r in results])
    manifest = _write_manifest(
        out_dir / "cpd_manifest.json",
        "cpd",
        {"grid": list(grid), "window": window, "samples": samples},
        {
            "dataset_seed": bench.dataset_seed,
            "fit_seed": bench.fit_seed,
            "split_seed": bench.split_seed,
            "cpd_seed": bench.cpd_seed,
        },
        [csv_path, json_path],
        benchmark_path,
        started,
    )
    for result in results:
        if result.minimal_ratio is None:
            click.echo(f"{result.algorithm:<7} no drift detected on the grid")
        else:
            click.echo(
                f"{result.algorithm:<7} minimal drift {100 * result.minimal_ratio:g}%"
            )
    click.echo(f"manifest: {manifest}")


@main.command()
@_benchmark_option
@click.option(
    "--model",
    "model_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Saved pipeline JSON; defaults to training on the benchmark.",
)
@click.option(
    "--rates",
    default=None,
    help="Comma-separated degradation rates including 0 (e.g. 0,0.1,0.2).",
)
@click.option("--length", type=int, default=None, help="Inspections per stream.")
@click.option("--window", type=int, default=None, help="Smoothing window length.")
@click.option("--seed", type=int, default=None, help="Stream telemetry seed.")
@_output_dir_option
@_surface_errors
def detect(benchmark_path, model_path, rates, length, window, seed, output_dir):
    """Stream drifting inspections through the pipeline at several rates."""
    started = _utc_now()
    bench = load_benchmark(benchmark_path)
    rates = bench.stream_rates if rates is None else _parse_ratios(rates)
    length = bench.stream_length if length is None else length
    window = bench.stream_window if window is None else window
    seed = bench.stream_seed if seed is None else seed
    if model_path is None:
        matrix, labels = bench.make_dataset()
        model = _fit_default_pipeline(bench, matrix, labels)
    else:
        model = pipeline.PipelineModel.load_json(model_path)
    report = detection.run_anomaly_identification(
        model,
        bench.generator,
        rates,
        length=length,
        window=window,
        seed=seed,
        onset=bench.stream_onset,
        profile=bench.stream_profile,
    )

    out_dir = _ensure_dir(output_dir)
    curves_path = out_dir / "detect_curves.csv"
    report.save_curves_csv(curves_path)
    json_path = out_dir / "detect.json"
    report.save_json(json_path)
    manifest = _write_manifest(
        out_dir / "detect_manifest.json",
        "detect",
        {
            "rates": list(rates),
            "length": length,
            "window": window,
            "seed": seed,
            "model": model_path,
        },
        {
            "stream_seed": seed,
            "dataset_seed": None if model_path else bench.dataset_seed,
            "fit_seed": None if model_path else bench.fit_seed,
            "split_seed": None if model_path else bench.split_seed,
        },
        [curves_path, json_path],
        benchmark_path,
        started,
    )
    for rate, transition in zip(report.rates, report.transition_indices):
        if transition is None:
            click.echo(f"DR {100 * rate:g}%: OK throughout")
        else:
            click.echo(f"DR {100 * rate:g}%: nOK from inspection {transition}")
    click.echo(f"manifest: {manifest}")
