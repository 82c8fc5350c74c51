"""Umbrella command line: design generation, data handling, training,
search, augmentation, attribution, mesh prediction, serving, reports."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, report as report_mod
from .augment import (
    CganConfig,
    CganModel,
    diagnostics,
    generate_synthetic,
    sample_conditions,
    stack_synthetic,
    train_cgan,
)
from .dataset import (
    Dataset,
    SplitIndices,
    descriptive_stats,
    drop_duplicate_parameter_rows,
    fit_scaler,
    load_dataset,
    save_dataset,
    split_holdout,
)
from .doe import FactorSpec, generate_bbd, map_levels
from .errors import ConfigError, RoughcastError
from .explain import global_importance, shap_exact
from .meshkit import Orientation, load_mesh, predict_field, write_field_json, write_field_sidecar
from .neuralnet import MlpConfig, MlpModel, compute_metrics, init_mlp, train_mlp
from .pipeline import SearchSpace, finalize_and_test, hpo_search, ratio_sweep
from .schema import CSV_COLUMNS, ProcessParameters
from .server import create_app, resolve_model_path


@click.group()
@click.version_option(version=__version__)
def main():
    """Surface-roughness prediction toolkit."""


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


# ---------------------------------------------------------------- doe


@main.group()
def doe():
    """Box-Behnken experiment designs."""


def _read_factor_file(path: str) -> list[FactorSpec]:
    factors = []
    with open(path, newline="", encoding="utf-8") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) != 5:
                raise ConfigError(
                    f"{path}:{line_no}: factor line must be name,unit,l1,l2,l3, got {len(row)} fields"
                )
            name, unit, *levels = (cell.strip() for cell in row)
            factors.append(FactorSpec(name=name, unit=unit, levels=tuple(float(v) for v in levels)))
    if not factors:
        raise ConfigError(f"{path}: no factors found")
    return factors


@doe.command("generate")
@click.option("--factors", "factor_file", required=True, type=click.Path(exists=True),
              help="CSV with one factor per line: name,unit,l1,l2,l3")
@click.option("--center", default=0, show_default=True, help="Replicated center points C0")
@click.option("--out", "out_path", required=True, type=click.Path())
def doe_generate(factor_file, center, out_path):
    """Generate the run matrix and write it as CSV with run ids."""
    try:
        factors = _read_factor_file(factor_file)
        design = generate_bbd(factors, center_replicates=center)
        rows = map_levels(design)
    except RoughcastError as exc:
        _fail(exc)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow([fac.name for fac in factors] + ["run_id"])
        for i, row in enumerate(rows, start=1):
            writer.writerow([_fmt_number(v) for v in row] + [f"Object-{i}"])
    click.echo(f"wrote {len(rows)} runs ({2 * len(factors) * (len(factors) - 1)} edge + {center} center) to {out_path}")


def _fmt_number(v: float) -> str:
    return f"{v:g}"


# ---------------------------------------------------------------- data


@main.group()
def data():
    """Measurement-table statistics and splits."""


@data.command("stats")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--column", default="ra_um", show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def data_stats(in_path, column, out_path):
    """Descriptive statistics of one numeric column."""
    try:
        ds = load_dataset(in_path)
        if column == "ra_um":
            values = ds.y
        elif column in CSV_COLUMNS[1:9]:
            values = ds.X[:, CSV_COLUMNS[1:9].index(column)]
        else:
            raise ConfigError(f"unknown numeric column {column!r}")
        stats = descriptive_stats(values)
    except RoughcastError as exc:
        _fail(exc)
    payload = json.dumps(stats.to_dict(), indent=2)
    if out_path:
        Path(out_path).write_text(payload + "\n", encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(payload)


@data.command("split")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--fractions", default="0.70,0.15,0.15", show_default=True,
              help="train,val,test fractions summing to 1")
@click.option("--seed", default=42, show_default=True)
@click.option("--group-by-object", is_flag=True,
              help="Keep all records of one specimen in the same partition")
@click.option("--out", "out_path", required=True, type=click.Path())
def data_split(in_path, fractions, seed, group_by_object, out_path):
    """Write deterministic train/val/test indices as JSON."""
    try:
        ds = load_dataset(in_path)
        fracs = tuple(float(v) for v in fractions.split(","))
        if len(fracs) != 3:
            raise ConfigError("fractions must be three comma-separated numbers")
        split = split_holdout(ds, fracs, seed=seed, group_by_object=group_by_object)
    except RoughcastError as exc:
        _fail(exc)
    Path(out_path).write_text(json.dumps(split.to_dict()) + "\n", encoding="utf-8")
    click.echo(
        f"split {len(ds)} records into train={len(split.train)} val={len(split.val)} "
        f"test={len(split.test)} (seed {seed}) -> {out_path}"
    )


# ---------------------------------------------------------------- train / eval


def _load_split(path: str) -> SplitIndices:
    return SplitIndices.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@main.command("train")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON with MLP configuration fields")
@click.option("--split", "split_path", type=click.Path(exists=True), default=None)
@click.option("--seed", default=42, show_default=True, help="Seed for the internal split")
@click.option("--dedup", is_flag=True,
              help="Drop duplicated feature rows (replicated center runs) before splitting")
@click.option("--out", "out_path", required=True, type=click.Path())
def train_cmd(data_path, config_path, split_path, seed, dedup, out_path):
    """Train a single model: scaler on train, early stop on val, report on test."""
    try:
        ds = load_dataset(data_path)
        if dedup and split_path:
            raise ConfigError("--dedup cannot be combined with --split (indices would shift)")
        if dedup:
            ds = drop_duplicate_parameter_rows(ds)
        config = MlpConfig.from_dict(json.loads(Path(config_path).read_text())) if config_path else MlpConfig()
        split = _load_split(split_path) if split_path else split_holdout(ds, (0.70, 0.15, 0.15), seed=seed)
        train_idx = np.asarray(sorted(split.train), dtype=int)
        val_idx = np.asarray(sorted(split.val), dtype=int)
        if len(val_idx) == 0:
            raise ConfigError("training needs a non-empty validation subset in the split")
        scaler = fit_scaler(ds.X[train_idx], ds.y[train_idx])
        model = init_mlp(config, ds.X.shape[1])
        best, report = train_mlp(
            model, scaler.apply(ds.X[train_idx]), ds.y[train_idx],
            scaler.apply(ds.X[val_idx]), ds.y[val_idx], config,
        )
        best.scaler = scaler
        best.metadata["train_report"] = report.to_dict()
        if split.test:
            test_idx = np.asarray(sorted(split.test), dtype=int)
            metrics = compute_metrics(ds.y[test_idx], best.predict(scaler.apply(ds.X[test_idx])))
            best.metadata["metrics"] = metrics.to_dict()
            click.echo(
                f"hold-out: MAE={metrics.mae:.3f} MSE={metrics.mse:.3f} "
                f"R2={metrics.r2:.3f} MAPE={metrics.mape:.2f}%"
            )
        best.save(out_path)
    except RoughcastError as exc:
        _fail(exc)
    click.echo(f"best val MAE {report.best_val_mae:.3f} at epoch {report.best_epoch}; model -> {out_path}")


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--split", "split_path", type=click.Path(exists=True), default=None)
@click.option("--subset", type=click.Choice(["train", "val", "test", "all"]), default="all",
              show_default=True)
def eval_cmd(model_path, data_path, split_path, subset):
    """Evaluate a stored model on a measurement table."""
    try:
        model = MlpModel.load(model_path)
        if model.scaler is None:
            raise ConfigError("model file has no scaler; cannot evaluate raw-unit data")
        ds = load_dataset(data_path)
        if subset != "all":
            if not split_path:
                raise ConfigError("--subset needs --split")
            split = _load_split(split_path)
            idx = np.asarray(sorted(getattr(split, subset)), dtype=int)
        else:
            idx = np.arange(len(ds))
        metrics = compute_metrics(ds.y[idx], model.predict(model.scaler.apply(ds.X[idx])))
    except RoughcastError as exc:
        _fail(exc)
    click.echo(json.dumps({"subset": subset, "n": int(len(idx)), **metrics.to_dict()}, indent=2))


# ---------------------------------------------------------------- hpo


@main.command("hpo")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--trials", default=50, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--folds", default=5, show_default=True)
@click.option("--test-fraction", default=0.15, show_default=True)
@click.option("--space", "space_path", type=click.Path(exists=True), default=None,
              help="JSON overriding search-space fields")
@click.option("--dedup", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--model-out", type=click.Path(), default=None,
              help="Also save the final retrained model")
def hpo_cmd(data_path, trials, seed, folds, test_fraction, space_path, dedup, out_path, model_out):
    """Cross-validated random search with fold-level median pruning."""
    try:
        ds = load_dataset(data_path)
        if dedup:
            ds = drop_duplicate_parameter_rows(ds)
        space = SearchSpace()
        if space_path:
            overrides = json.loads(Path(space_path).read_text())
            space = SearchSpace(**{
                k: (tuple(v) if isinstance(v, list) else v) for k, v in overrides.items()
            })
        split = split_holdout(ds, (1.0 - test_fraction, 0.0, test_fraction), seed=seed)
        best_config, trial_log = hpo_search(ds, split.train, space, n_trials=trials,
                                            seed=seed, folds=folds)
        model, metrics = finalize_and_test(ds, split.train, split.test, best_config)
    except RoughcastError as exc:
        _fail(exc)
    study = {
        "seed": seed,
        "folds": folds,
        "n_trials": trials,
        "space": space.to_dict(),
        "trials": [t.to_dict() for t in trial_log],
        "best_config": best_config.to_dict(),
        "holdout_metrics": metrics.to_dict(),
        "n_pool": len(split.train),
        "n_test": len(split.test),
    }
    Path(out_path).write_text(json.dumps(study, indent=2) + "\n", encoding="utf-8")
    if model_out:
        model.save(model_out)
        click.echo(f"final model -> {model_out}")
    click.echo(
        f"best objective {min(t['objective'] for t in study['trials'] if t['objective'] is not None):.3f}; "
        f"hold-out MAE={metrics.mae:.3f} R2={metrics.r2:.3f} -> {out_path}"
    )


# ---------------------------------------------------------------- cgan


@main.group()
def cgan():
    """Conditional generator for tabular augmentation."""


@cgan.command("train")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def cgan_train_cmd(data_path, split_path, config_path, out_path):
    """Train the generator/discriminator pair on the real training subset."""
    try:
        ds = load_dataset(data_path)
        split = _load_split(split_path)
        config = CganConfig.from_dict(json.loads(Path(config_path).read_text())) if config_path else CganConfig()
        model = train_cgan(ds, split, config)
    except RoughcastError as exc:
        _fail(exc)
    model.save(out_path)
    warn = " (mode-collapse warning)" if model.metadata.get("mode_collapse_warning") else ""
    click.echo(f"trained on {model.metadata['n_train']} rows{warn} -> {out_path}")


@cgan.command("sample")
@click.option("--cgan", "cgan_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@click.option("--n", "n_samples", required=True, type=int)
@click.option("--sigma", default=0.02, show_default=True,
              help="Condition perturbation std in normalized space")
@click.option("--weight", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--diagnostics-out", type=click.Path(), default=None,
              help="Also write distribution diagnostics JSON")
def cgan_sample_cmd(cgan_path, data_path, split_path, n_samples, sigma, weight, seed, out_path,
                    diagnostics_out):
    """Generate synthetic records as a dataset CSV with weight/provenance columns."""
    try:
        model = CganModel.load(cgan_path)
        ds = load_dataset(data_path)
        split = _load_split(split_path)
        train_idx = np.asarray(sorted(split.train), dtype=int)
        scaled = model.scaler.apply(ds.X[train_idx])
        conditions = sample_conditions(scaled, n_samples, sigma=sigma, seed=seed)
        records = generate_synthetic(model, conditions, weight=weight, seed=seed + 1)
        C, ra, w, clipped = stack_synthetic(records)
        X_raw = model.scaler.invert(C)
        synth = Dataset(
            [f"synthetic-{i + 1}" for i in range(len(records))],
            X_raw,
            np.maximum(ra, 1e-6),
            source=f"cgan({cgan_path})",
        )
        save_dataset(synth, out_path, weights=w, provenance=["synthetic"] * len(records))
        if diagnostics_out:
            diag = diagnostics(ds.y[train_idx], ra, clipped_flags=clipped, conditions=C)
            Path(diagnostics_out).write_text(json.dumps(diag.to_dict()) + "\n", encoding="utf-8")
            click.echo(f"diagnostics (KS={diag.ks_statistic:.3f}) -> {diagnostics_out}")
    except RoughcastError as exc:
        _fail(exc)
    click.echo(f"wrote {len(records)} synthetic records (clip fraction {float(np.mean(clipped)):.3%}) -> {out_path}")


# ---------------------------------------------------------------- sweep


@main.command("sweep")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@click.option("--cgan", "cgan_path", required=True, type=click.Path(exists=True))
@click.option("--ratios", default="0,0.5,1,2,3,4,5", show_default=True)
@click.option("--weight", default=0.5, show_default=True)
@click.option("--sigma", default=0.02, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--model-out", type=click.Path(), default=None)
def sweep_cmd(data_path, split_path, cgan_path, ratios, weight, sigma, config_path, seed,
              out_path, model_out):
    """Augmentation-ratio sweep; selection by validation MAE only."""
    try:
        ds = load_dataset(data_path)
        split = _load_split(split_path)
        cgan_model = CganModel.load(cgan_path)
        ratio_list = [float(v) for v in ratios.split(",") if v.strip() != ""]
        config = MlpConfig.from_dict(json.loads(Path(config_path).read_text())) if config_path else MlpConfig()
        result, model = ratio_sweep(ds, split, cgan_model, ratio_list,
                                    synthetic_weight=weight, config=config,
                                    sigma=sigma, seed=seed)
    except RoughcastError as exc:
        _fail(exc)
    Path(out_path).write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    if model_out:
        model.save(model_out)
        click.echo(f"selected model -> {model_out}")
    selected = next(o for o in result.outcomes if o.ratio == result.selected_ratio)
    line = f"selected ratio {result.selected_ratio} (val MAE {result.selected_val_mae:.3f}"
    if selected.test_metrics:
        line += f", hold-out MAE {selected.test_metrics.mae:.3f}"
    click.echo(line + f") -> {out_path}")


# ---------------------------------------------------------------- explain


@main.command("explain")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--split-file", "split_path", type=click.Path(exists=True), default=None)
@click.option("--split", "subset", type=click.Choice(["train", "val", "test", "all"]),
              default="test", show_default=True)
@click.option("--background", default=100, show_default=True,
              help="Background rows drawn from the training subset")
@click.option("--limit", default=0, show_default=True,
              help="Explain at most this many rows (0 = all)")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def explain_cmd(model_path, data_path, split_path, subset, background, limit, seed, out_path):
    """Exact Shapley attributions and global importance for a subset."""
    try:
        model = MlpModel.load(model_path)
        ds = load_dataset(data_path)
        rng = np.random.default_rng(seed)
        if subset == "all":
            eval_idx = np.arange(len(ds))
            bg_pool = np.arange(len(ds))
        else:
            if not split_path:
                raise ConfigError("--split-file is required unless --split all")
            split = _load_split(split_path)
            eval_idx = np.asarray(sorted(getattr(split, subset)), dtype=int)
            bg_pool = np.asarray(sorted(split.train), dtype=int)
        if limit and len(eval_idx) > limit:
            eval_idx = eval_idx[np.sort(rng.choice(len(eval_idx), size=limit, replace=False))]
        bg_size = min(background, len(bg_pool))
        bg_idx = bg_pool[np.sort(rng.choice(len(bg_pool), size=bg_size, replace=False))]
        importance = global_importance(model, ds.X[eval_idx], ds.X[bg_idx])
        explanations = [
            shap_exact(model, ds.X[i], ds.X[bg_idx]).to_dict() for i in eval_idx[: min(5, len(eval_idx))]
        ]
    except RoughcastError as exc:
        _fail(exc)
    payload = {
        "split": subset,
        "n_explained": int(len(eval_idx)),
        "background_size": int(bg_size),
        "feature_order": list(model.feature_order),
        "global_importance": importance.to_dict(),
        "sample_explanations": explanations,
    }
    Path(out_path).write_text(json.dumps(payload) + "\n", encoding="utf-8")
    click.echo("ranking: " + " > ".join(importance.ranking[:3]) + f" ... -> {out_path}")


# ---------------------------------------------------------------- mesh


@main.group()
def mesh():
    """Mesh-level roughness fields."""


@mesh.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--mesh", "mesh_path", required=True, type=click.Path(exists=True))
@click.option("--format", "mesh_format", default="auto", show_default=True,
              type=click.Choice(["auto", "stl", "stl-binary", "stl-ascii", "obj"]))
@click.option("--params", "params_path", required=True, type=click.Path(exists=True),
              help="JSON with the seven process parameters")
@click.option("--rotate", default="0,0,0", show_default=True, help="rx,ry,rz degrees")
@click.option("--color-range", default="auto", show_default=True,
              help="'auto' or 'lo,hi' in micrometers")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--sidecar", type=click.Path(), default=None,
              help="Binary float32 Ra sidecar for large meshes")
def mesh_predict_cmd(model_path, mesh_path, mesh_format, params_path, rotate, color_range,
                     out_path, sidecar):
    """Predict per-facet Ra for one mesh, orientation, and parameter set."""
    try:
        model = MlpModel.load(model_path)
        mesh_obj = load_mesh(mesh_path, fmt=mesh_format)
        params = ProcessParameters.from_dict(json.loads(Path(params_path).read_text()))
        rx, ry, rz = (float(v) for v in rotate.split(","))
        cr = "auto" if color_range == "auto" else tuple(float(v) for v in color_range.split(","))
        field = predict_field(model, mesh_obj, Orientation(rx, ry, rz), params, color_range=cr)
    except RoughcastError as exc:
        _fail(exc)
    except ValueError as exc:
        _fail(exc)
    write_field_json(field, out_path)
    if sidecar:
        write_field_sidecar(field, sidecar)
        click.echo(f"sidecar -> {sidecar}")
    s = field.summary
    click.echo(
        f"{s['predicted_count']}/{s['count']} facets predicted; Ra "
        f"[{s['min_ra']:.2f}, {s['max_ra']:.2f}] um, mean {s['mean_ra']:.2f} -> {out_path}"
    )


# ---------------------------------------------------------------- serve


@main.command("serve")
@click.option("--model", "model_path", type=click.Path(), default=None,
              help="Model JSON (falls back to ROUGHCAST_MODEL)")
@click.option("--addr", default="127.0.0.1:8080", show_default=True)
@click.option("--static", "static_dir", type=click.Path(exists=True), default=None,
              help="Directory with the built UI bundle")
@click.option("--cache-capacity", default=32, show_default=True)
def serve_cmd(model_path, addr, static_dir, cache_capacity):
    """Run the HTTP prediction service."""
    import uvicorn

    resolved = resolve_model_path(model_path)
    if resolved is None:
        click.echo("warning: no model configured; /api/predict will answer 503", err=True)
    try:
        app = create_app(model_path=resolved, cache_capacity=cache_capacity,
                         static_dir=static_dir)
    except (RoughcastError, OSError) as exc:
        _fail(exc)
    host, _, port = addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


# ---------------------------------------------------------------- report


@main.group("report")
def report_group():
    """Render figures (PNG) plus delimited extracts from artifacts."""


@report_group.command("data")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
def report_data_cmd(in_path, out_dir):
    try:
        ds = load_dataset(in_path)
        written = report_mod.report_data(ds, out_dir)
    except RoughcastError as exc:
        _fail(exc)
    click.echo("\n".join(str(p) for p in written))


def _json_report(loader):
    def run(in_path, out_dir):
        try:
            payload = json.loads(Path(in_path).read_text(encoding="utf-8"))
            written = loader(payload, out_dir)
        except RoughcastError as exc:
            _fail(exc)
        click.echo("\n".join(str(p) for p in written))

    return run


for _name, _fn in (("sweep", report_mod.report_sweep), ("shap", report_mod.report_shap),
                   ("diagnostics", report_mod.report_diagnostics), ("study", report_mod.report_study)):
    report_group.command(_name)(
        click.option("--in", "in_path", required=True, type=click.Path(exists=True))(
            click.option("--out-dir", required=True, type=click.Path())(_json_report(_fn))
        )
    )


if __name__ == "__main__":
    sys.exit(main())
