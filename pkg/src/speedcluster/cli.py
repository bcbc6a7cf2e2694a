"""Command-line pipeline: synth, ingest, cluster, elbow, impute, colorify,
important-roads, plus a dtw distance utility.

Every file-writing run leaves a manifest.json next to its outputs recording
the resolved configuration, input/output digests and per-stage timings. All
randomness flows from the --seed flag. Exit codes: 2 usage, 3 data
validation, 4 algorithmic precondition.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import re
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .clustering import ClusterConfig, ClusterModel, elbow_select, kmeans_dtw
from .colorify import (
    CongestionThresholds,
    colorify as run_colorify,
    impute as run_impute,
    summarize,
    write_colors_csv,
    write_tile_snapshot,
)
from .dtw import dtw_distance
from .errors import (
    DuplicateAttributeKey,
    EmptySeries,
    InvalidBucket,
    InvalidSpec,
    NoData,
    NoPrimaryRoads,
    ParseError,
    TooFewProfiles,
    TooFewSeries,
)
from .important_roads import (
    find_important_secondary,
    importance_json_dict,
    write_importance_csv,
)
from .model import BucketGrid, Dataset, drop_nulls
from .pipeline import (
    CleaningConfig,
    clean,
    ingest,
    join_attributes,
    read_attributes_csv,
    read_records_csv,
    read_snapshot_csv,
    write_attributes_csv,
    write_records_csv,
    write_snapshot_csv,
    write_snapshot_json,
)
from .synthgen import (
    dataset_attributes,
    default_specs,
    generate,
    important_roads_specs,
    write_labels_csv,
)

MANIFEST_SCHEMA_VERSION = 1

_VALIDATION_ERRORS = (ParseError, InvalidBucket, DuplicateAttributeKey, InvalidSpec)
_PRECONDITION_ERRORS = (TooFewSeries, TooFewProfiles, NoPrimaryRoads, EmptySeries, NoData)


def _guard(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _VALIDATION_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(3)
        except _PRECONDITION_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(4)

    return wrapper


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Run:
    """Collects the manifest for one subcommand invocation."""

    def __init__(self, command: str, out_dir, config: dict):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._outputs: list[Path] = []
        self.manifest = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "tool": "speedcluster",
            "version": __version__,
            "command": command,
            "config": config,
            "inputs": {},
            "outputs": {},
            "results": {},
            "timings_s": {},
        }

    def add_input(self, path) -> Path:
        path = Path(path)
        self.manifest["inputs"][path.name] = _sha256(path)
        return path

    def out(self, name: str) -> Path:
        path = self.out_dir / name
        self._outputs.append(path)
        return path

    def stage(self, name: str):
        run = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.manifest["timings_s"][name] = round(time.perf_counter() - self.t0, 6)
                return False

        return _Stage()

    def finish(self) -> Path:
        for path in self._outputs:
            self.manifest["outputs"][path.name] = _sha256(path)
        manifest_path = self.out_dir / "manifest.json"
        manifest_path.write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        return manifest_path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _apply_threads(threads) -> None:
    if threads is None:
        return
    if threads < 1:
        raise click.BadParameter("--threads must be at least 1")
    import numba

    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


def _parse_k_range(text: str) -> list[int]:
    text = text.strip()
    match = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        if hi < lo:
            raise click.BadParameter(f"empty k range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected A..B or a comma list, got {text!r}")


def _parse_thresholds(text: str) -> CongestionThresholds:
    parts = text.split(":")
    if len(parts) != 3:
        raise click.BadParameter("--thresholds expects free:heavy:blocked, e.g. 0.75:0.40:5")
    try:
        thresholds = CongestionThresholds(
            free_flow_ratio=float(parts[0]),
            heavy_ratio=float(parts[1]),
            blocked_speed_kmh=float(parts[2]),
        )
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    return thresholds


def _parse_series_inline(text: str) -> np.ndarray:
    values = []
    for token in re.split(r"[,\s]+", text.strip()):
        if not token or token.upper() in ("NA", "NAN", "NULL"):
            continue
        try:
            values.append(float(token))
        except ValueError:
            raise click.BadParameter(f"bad series value {token!r}")
    return np.array(values, dtype=np.float64)


def _read_series_file(path) -> np.ndarray:
    return _parse_series_inline(Path(path).read_text())


def _load_model(path) -> ClusterModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc}")
    try:
        return ClusterModel.from_json_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad model document: {exc}")


def _dataset_series(ds: Dataset):
    return [drop_nulls(p.series) for p in ds.profiles], list(ds.street_ids)


_threads_option = click.option(
    "--threads", type=int, default=None,
    help="Cap worker threads (default: all cores; results do not depend on it).",
)


@click.group()
@click.version_option(__version__, prog_name="speedcluster")
@click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
    default=None, help="JSON file of flag defaults; explicit flags override it.",
)
@click.pass_context
def main(ctx, config_path):
    """Cluster road-segment speed profiles with a DTW metric."""
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            click.echo(f"error: config file is not valid JSON: {exc}", err=True)
            raise SystemExit(3)
        if not isinstance(raw, dict):
            click.echo("error: config file must hold a JSON object", err=True)
            raise SystemExit(3)
        flat = {key.replace("-", "_"): value for key, value in raw.items()}
        ctx.default_map = {name: flat for name in main.commands}


@main.command()
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--streets", type=int, default=100, show_default=True,
              help="Streets per archetype (default scenario).")
@click.option("--missing-prob", type=float, default=0.3, show_default=True)
@click.option("--bucket-minutes", type=int, default=15, show_default=True)
@click.option("--scenario", type=click.Choice(["default", "important-roads"]),
              default="default", show_default=True)
@click.option("--n-primary", type=int, default=20, show_default=True,
              help="important-roads scenario: primary streets.")
@click.option("--n-secondary", type=int, default=180, show_default=True,
              help="important-roads scenario: ordinary secondary streets.")
@click.option("--n-planted", type=int, default=20, show_default=True,
              help="important-roads scenario: primary-like secondary streets.")
@_threads_option
@_guard
def synth(out_dir, seed, streets, missing_prob, bucket_minutes, scenario,
          n_primary, n_secondary, n_planted, threads):
    """Generate a synthetic records/attributes/labels dataset."""
    _apply_threads(threads)
    try:
        grid = BucketGrid(bucket_minutes=bucket_minutes)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    run = Run("synth", out_dir, {
        "seed": seed, "streets": streets, "missing_prob": missing_prob,
        "bucket_minutes": bucket_minutes, "scenario": scenario,
        "n_primary": n_primary, "n_secondary": n_secondary, "n_planted": n_planted,
    })
    with run.stage("generate"):
        if scenario == "default":
            specs = default_specs(streets_per_archetype=streets, missing_prob=missing_prob)
        else:
            specs = important_roads_specs(n_primary=n_primary, n_secondary=n_secondary,
                                          n_planted=n_planted)
        ds, labels = generate(specs, grid, seed=seed)
    with run.stage("write"):
        write_records_csv(ds, run.out("records.csv"))
        write_attributes_csv(dataset_attributes(ds), run.out("attributes.csv"))
        write_labels_csv(labels, run.out("labels.csv"))
    run.manifest["results"]["streets"] = len(ds)
    run.finish()
    click.echo(f"generated {len(ds)} streets into {run.out_dir}")


@main.command(name="ingest")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--attrs", "attrs_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--bucket-minutes", type=int, default=15, show_default=True)
@click.option("--timezone", default="UTC", show_default=True,
              help="Timezone used to fold timestamps onto the weekly grid.")
@click.option("--min-speed", type=float, default=1.0, show_default=True)
@click.option("--max-speed", type=float, default=140.0, show_default=True)
@click.option("--min-observed", type=int, default=3, show_default=True)
@click.option("--min-filling-rate", type=float, default=1.0 / 3.0, show_default=True)
@_threads_option
@_guard
def ingest_cmd(input_path, attrs_path, out_dir, bucket_minutes, timezone,
               min_speed, max_speed, min_observed, min_filling_rate, threads):
    """Aggregate raw records into a cleaned weekly snapshot."""
    _apply_threads(threads)
    try:
        grid = BucketGrid(bucket_minutes=bucket_minutes)
        cfg = CleaningConfig(
            min_speed_kmh=min_speed, max_speed_kmh=max_speed,
            min_observed_buckets=min_observed, min_filling_rate=min_filling_rate,
        )
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    try:
        from zoneinfo import ZoneInfo

        ZoneInfo(timezone)
    except Exception:
        raise click.BadParameter(f"unknown timezone {timezone!r}")
    run = Run("ingest", out_dir, {
        "input": str(input_path), "attrs": attrs_path, "bucket_minutes": bucket_minutes,
        "timezone": timezone, "min_speed": min_speed, "max_speed": max_speed,
        "min_observed": min_observed, "min_filling_rate": min_filling_rate,
    })
    run.add_input(input_path)
    with run.stage("ingest"):
        ds, report = ingest(read_records_csv(input_path, grid, timezone), grid, cfg)
    with run.stage("clean"):
        ds, clean_report = clean(ds, cfg)
        report = report.merge(clean_report)
    if attrs_path:
        run.add_input(attrs_path)
        with run.stage("join"):
            attrs = read_attributes_csv(attrs_path)
            ds, join_report = join_attributes(ds, attrs)
            report.unmatched_attributes += join_report.unmatched_streets
    with run.stage("write"):
        write_snapshot_csv(ds, run.out("snapshot.csv"))
        write_snapshot_json(ds, run.out("snapshot.json"))
        _write_json(run.out("cleaning_report.json"), report.to_dict())
    run.manifest["results"]["streets_retained"] = len(ds)
    run.finish()
    click.echo(f"retained {len(ds)} streets; report: {report.to_dict()}")


def _cluster_options(fn):
    for option in reversed([
        click.option("--max-iter", type=int, default=50, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--barycenter-iter", type=int, default=10, show_default=True),
        click.option("--epsilon", type=float, default=1e-4, show_default=True,
                     help="Relative inertia change declaring convergence."),
        click.option("--local", type=click.Choice(["absolute", "squared"]),
                     default="absolute", show_default=True),
        click.option("--window", type=int, default=None,
                     help="Optional warping window half-width."),
    ]):
        fn = option(fn)
    return fn


def _make_config(k, max_iter, seed, barycenter_iter, epsilon, local, window) -> ClusterConfig:
    try:
        return ClusterConfig(
            k=k, max_iterations=max_iter, seed=seed,
            convergence_epsilon=epsilon, barycenter_iterations=barycenter_iter,
            local=local, window=window,
        )
    except ValueError as exc:
        raise click.BadParameter(str(exc))


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--k", type=int, default=3, show_default=True)
@_cluster_options
@_threads_option
@_guard
def cluster(input_path, out_dir, k, max_iter, seed, barycenter_iter, epsilon,
            local, window, threads):
    """Run DTW K-Means over a snapshot and export the model."""
    _apply_threads(threads)
    config = _make_config(k, max_iter, seed, barycenter_iter, epsilon, local, window)
    run = Run("cluster", out_dir, {
        "input": str(input_path), "k": k, "max_iter": max_iter, "seed": seed,
        "barycenter_iter": barycenter_iter, "epsilon": epsilon, "local": local,
        "window": window,
    })
    run.add_input(input_path)
    with run.stage("read"):
        ds = read_snapshot_csv(input_path)
        series, ids = _dataset_series(ds)
    with run.stage("cluster"):
        model = kmeans_dtw(series, config, ids=ids)
    with run.stage("write"):
        _write_json(run.out("model.json"), model.to_json_dict())
    run.manifest["results"]["inertia"] = model.inertia
    run.manifest["results"]["iterations_run"] = model.iterations_run
    run.finish()
    click.echo(f"clustered {len(ids)} streets into k={k}; inertia={model.inertia!r}")


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--k", "k_range", default="1..6", show_default=True,
              help="Inclusive range A..B or comma list of cluster counts.")
@_cluster_options
@_threads_option
@_guard
def elbow(input_path, out_dir, k_range, max_iter, seed, barycenter_iter, epsilon,
          local, window, threads):
    """Sweep k, emit the inertia curve, and pick the elbow."""
    _apply_threads(threads)
    ks = _parse_k_range(k_range)
    if len(ks) < 3:
        raise click.BadParameter("elbow needs at least 3 values of k")
    config = _make_config(ks[0], max_iter, seed, barycenter_iter, epsilon, local, window)
    run = Run("elbow", out_dir, {
        "input": str(input_path), "k_range": k_range, "max_iter": max_iter,
        "seed": seed, "barycenter_iter": barycenter_iter, "epsilon": epsilon,
        "local": local, "window": window,
    })
    run.add_input(input_path)
    with run.stage("read"):
        ds = read_snapshot_csv(input_path)
        series, ids = _dataset_series(ds)
    with run.stage("elbow"):
        chosen_k, curve = elbow_select(series, ks, config, ids=ids)
    with run.stage("write"):
        with open(run.out("elbow_curve.csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "inertia"])
            for k, value in curve:
                writer.writerow([k, repr(value)])
    run.manifest["results"]["chosen_k"] = chosen_k
    run.manifest["results"]["curve"] = [[k, value] for k, value in curve]
    run.finish()
    click.echo(f"chosen_k={chosen_k}")


@main.command(name="impute")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@_threads_option
@_guard
def impute_cmd(input_path, model_path, out_dir, threads):
    """Fill missing buckets from cluster-peer means."""
    _apply_threads(threads)
    run = Run("impute", out_dir, {"input": str(input_path), "model": str(model_path)})
    run.add_input(input_path)
    run.add_input(model_path)
    with run.stage("read"):
        ds = read_snapshot_csv(input_path)
        model = _load_model(model_path)
    with run.stage("impute"):
        try:
            result = run_impute(ds, model)
        except ValueError as exc:
            raise ParseError(str(exc))
    with run.stage("write"):
        write_snapshot_csv(result.dataset, run.out("imputed_snapshot.csv"))
        write_snapshot_json(result.dataset, run.out("imputed_snapshot.json"))
        with open(run.out("imputed_cells.csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["street_id", "bucket_index"])
            for p in result.dataset.profiles:
                flags = result.imputed.get(p.street_id)
                if flags is None:
                    continue
                for b in np.flatnonzero(flags):
                    writer.writerow([p.street_id, int(b)])
        _write_json(run.out("imputation_report.json"), {
            "cells_imputed": result.cells_imputed,
            "cells_unfilled": result.cells_unfilled,
        })
    run.manifest["results"]["cells_imputed"] = result.cells_imputed
    run.manifest["results"]["cells_unfilled"] = result.cells_unfilled
    run.finish()
    click.echo(f"imputed {result.cells_imputed} cells; {result.cells_unfilled} remain missing")


def _read_imputed_cells(path, ds: Dataset) -> dict[str, np.ndarray]:
    buckets = ds.grid.buckets_per_week
    masks: dict[str, np.ndarray] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["street_id", "bucket_index"]:
            raise ParseError("imputed-cells header must be street_id,bucket_index", line=1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            sid = row[0]
            try:
                bucket = int(row[1])
            except (IndexError, ValueError):
                raise ParseError(f"bad imputed cell row {row!r}", line=line)
            if not 0 <= bucket < buckets:
                raise InvalidBucket(f"imputed cell bucket {bucket} outside [0, {buckets})")
            masks.setdefault(sid, np.zeros(buckets, dtype=bool))[bucket] = True
    return masks


@main.command(name="colorify")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--attrs", "attrs_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--imputed-cells", "imputed_path",
              type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--thresholds", default="0.75:0.40:5", show_default=True,
              help="free:heavy:blocked — free-flow ratio, heavy ratio, blocked km/h.")
@click.option("--percentile", type=float, default=85.0, show_default=True,
              help="Free-flow percentile fallback when max speed is absent.")
@click.option("--tile-bucket", type=int, default=None,
              help="Also write a street->color tile snapshot for this bucket.")
@_threads_option
@_guard
def colorify_cmd(input_path, attrs_path, imputed_path, out_dir, thresholds,
                 percentile, tile_bucket, threads):
    """Assign congestion levels and colors per (street, bucket)."""
    _apply_threads(threads)
    parsed = _parse_thresholds(thresholds)
    run = Run("colorify", out_dir, {
        "input": str(input_path), "attrs": attrs_path, "imputed_cells": imputed_path,
        "thresholds": parsed.to_dict(), "percentile": percentile,
        "tile_bucket": tile_bucket,
    })
    run.add_input(input_path)
    with run.stage("read"):
        ds = read_snapshot_csv(input_path)
        if attrs_path:
            run.add_input(attrs_path)
            ds, _ = join_attributes(ds, read_attributes_csv(attrs_path))
        imputed = _read_imputed_cells(imputed_path, ds) if imputed_path else None
        if imputed_path:
            run.add_input(imputed_path)
    with run.stage("colorify"):
        result = run_colorify(ds, parsed, imputed=imputed, percentile=percentile)
        summary = summarize(result, ds)
    with run.stage("write"):
        write_colors_csv(result, run.out("colors.csv"))
        _write_json(run.out("color_summary.json"), {
            "thresholds": parsed.to_dict(),
            "skipped_streets": list(result.skipped_streets),
            **summary,
        })
        if tile_bucket is not None:
            if not 0 <= tile_bucket < ds.grid.buckets_per_week:
                raise InvalidBucket(
                    f"tile bucket {tile_bucket} outside [0, {ds.grid.buckets_per_week})"
                )
            write_tile_snapshot(result, tile_bucket, run.out(f"tile_bucket_{tile_bucket}.json"))
    run.manifest["results"].update(summary)
    run.finish()
    click.echo(
        f"colored {summary['cells_observed'] + summary['cells_imputed']} cells "
        f"({summary['cells_imputed']} imputed)"
    )


@main.command(name="important-roads")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--attrs", "attrs_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--compare-k", type=int, default=None,
              help="Also report the partition and distance table for this k.")
@click.option("--scalar-weight", type=float, default=1.0, show_default=True,
              help="Weight of the scalar-feature Euclidean term.")
@click.option("--elbow/--no-elbow", "with_elbow", default=True, show_default=True,
              help="Also sweep k over --elbow-range for verification.")
@click.option("--elbow-range", default="1..6", show_default=True)
@_cluster_options
@_threads_option
@_guard
def important_roads_cmd(input_path, attrs_path, out_dir, k, compare_k, scalar_weight,
                        with_elbow, elbow_range, max_iter, seed, barycenter_iter,
                        epsilon, local, window, threads):
    """Find secondary roads that behave like primary roads."""
    _apply_threads(threads)
    config = _make_config(k, max_iter, seed, barycenter_iter, epsilon, local, window)
    run = Run("important-roads", out_dir, {
        "input": str(input_path), "attrs": str(attrs_path), "k": k,
        "compare_k": compare_k, "scalar_weight": scalar_weight,
        "elbow": with_elbow, "elbow_range": elbow_range, "max_iter": max_iter,
        "seed": seed, "barycenter_iter": barycenter_iter, "epsilon": epsilon,
        "local": local, "window": window,
    })
    run.add_input(input_path)
    run.add_input(attrs_path)
    with run.stage("read"):
        ds = read_snapshot_csv(input_path)
        ds, _ = join_attributes(ds, read_attributes_csv(attrs_path))
    with run.stage("analyze"):
        result = find_important_secondary(
            ds, k=k, config=config, scalar_weight=scalar_weight, compare_k=compare_k
        )
    doc = importance_json_dict(result)
    if with_elbow:
        with run.stage("elbow"):
            from .model import RoadClass
            from .pipeline import apply_scaler, fit_scaler

            params = fit_scaler(ds.profiles)
            buckets = ds.grid.buckets_per_week
            secondaries = [p for p in ds.profiles if p.road_class is RoadClass.SECONDARY]
            rows = [apply_scaler(p, params) for p in secondaries]
            series = [row[:buckets][~np.isnan(row[:buckets])] for row in rows]
            ks = _parse_k_range(elbow_range)
            chosen_k, curve = elbow_select(
                series, ks, config, ids=[p.street_id for p in secondaries]
            )
            doc["elbow"] = {"chosen_k": chosen_k, "curve": [[kk, v] for kk, v in curve]}
            run.manifest["results"]["elbow_chosen_k"] = chosen_k
    with run.stage("write"):
        write_importance_csv(result, run.out("important_roads.csv"))
        _write_json(run.out("importance.json"), doc)
    run.manifest["results"]["selected_cluster"] = result.selected_cluster
    run.manifest["results"]["important_streets"] = len(result.important_street_ids)
    run.finish()
    click.echo(
        f"selected cluster {result.selected_cluster} with "
        f"{len(result.important_street_ids)} important secondary streets"
    )


@main.command(name="dtw")
@click.option("--a", "a_inline", default=None, help="Comma-separated series (NA tokens dropped).")
@click.option("--b", "b_inline", default=None, help="Comma-separated series (NA tokens dropped).")
@click.option("--a-file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--b-file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--local", type=click.Choice(["absolute", "squared"]),
              default="absolute", show_default=True)
@click.option("--window", type=int, default=None)
@_threads_option
@_guard
def dtw_cmd(a_inline, b_inline, a_file, b_file, local, window, threads):
    """Print the DTW distance between two series."""
    _apply_threads(threads)
    if (a_inline is None) == (a_file is None):
        raise click.UsageError("provide exactly one of --a or --a-file")
    if (b_inline is None) == (b_file is None):
        raise click.UsageError("provide exactly one of --b or --b-file")
    a = _parse_series_inline(a_inline) if a_inline is not None else _read_series_file(a_file)
    b = _parse_series_inline(b_inline) if b_inline is not None else _read_series_file(b_file)
    click.echo(repr(dtw_distance(a, b, local=local, window=window)))


if __name__ == "__main__":
    main()
