"""Figure rendering for toolkit artifacts.

Each report writes PNG figures next to a delimited (CSV) extract of the
plotted numbers, so downstream documents can embed either. Matplotlib
runs on the Agg backend; nothing here opens a window.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import Dataset, descriptive_stats
from .schema import FEATURE_LABELS, FEATURE_NAMES

FIG_DPI = 150


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return path


def report_data(dataset: Dataset, out_dir) -> list[Path]:
    """Target-distribution and feature-effect figures for a measurement table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    ra = dataset.y
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(ra, bins=30, color="#4878cf", edgecolor="white")
    ax.set_xlabel("Ra (um)")
    ax.set_ylabel("count")
    ax.set_title(f"Roughness distribution (n={len(ra)})")
    written.append(_save(fig, out / "ra_distribution.png"))

    angle = dataset.X[:, 7]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(angle, ra, s=6, alpha=0.35, color="#4878cf")
    means = [(a, ra[angle == a].mean()) for a in np.unique(angle)]
    ax.plot(*zip(*means), color="#d1452c", marker="o", label="mean per angle")
    ax.set_xlabel("surface angle (deg)")
    ax.set_ylabel("Ra (um)")
    ax.legend()
    written.append(_save(fig, out / "angle_vs_ra.png"))

    lh = dataset.X[:, 0]
    fig, ax = plt.subplots(figsize=(6, 4))
    levels = np.unique(lh)
    ax.boxplot([ra[lh == v] for v in levels], tick_labels=[str(v) for v in levels])
    ax.set_xlabel("layer height (mm)")
    ax.set_ylabel("Ra (um)")
    written.append(_save(fig, out / "layer_height_vs_ra.png"))

    stats = descriptive_stats(ra).to_dict()
    stats_path = out / "ra_stats.csv"
    with open(stats_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(stats.keys())
        writer.writerow(stats.values())
    written.append(stats_path)
    return written


def report_sweep(sweep: dict, out_dir) -> list[Path]:
    """Validation MAE versus augmentation ratio."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outcomes = sorted(sweep["outcomes"], key=lambda o: o["ratio"])
    ratios = [o["ratio"] for o in outcomes]
    val = [o["val_mae"] for o in outcomes]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ratios, val, marker="o", color="#4878cf", label="validation MAE")
    test_pts = [(o["ratio"], o["test_metrics"]["mae"]) for o in outcomes if o.get("test_metrics")]
    if test_pts:
        ax.scatter(*zip(*test_pts), color="#d1452c", zorder=3, label="hold-out MAE")
    ax.axvline(sweep["selected_ratio"], color="gray", linestyle="--", alpha=0.6)
    ax.set_xlabel("augmentation ratio (synthetic / real)")
    ax.set_ylabel("MAE (um)")
    ax.set_title(f"Selected ratio: {sweep['selected_ratio']}")
    ax.legend()
    written = [_save(fig, out / "sweep_mae.png")]

    csv_path = out / "sweep.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["ratio", "n_synthetic", "val_mae", "test_mae", "clip_fraction"])
        for o in outcomes:
            writer.writerow([
                o["ratio"], o["n_synthetic"], o["val_mae"],
                o["test_metrics"]["mae"] if o.get("test_metrics") else "",
                o.get("clip_fraction", ""),
            ])
    written.append(csv_path)
    return written


def report_shap(shap: dict, out_dir) -> list[Path]:
    """Global importance bars plus a per-sample attribution beeswarm."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    importance = shap["global_importance"]
    names = importance["ranking"]
    values = [importance["mean_abs"][n] for n in names]
    labels = [FEATURE_LABELS.get(n, n) for n in names]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.barh(labels[::-1], values[::-1], color="#4878cf")
    ax.set_xlabel("mean |attribution| (um)")
    ax.set_title("Global feature importance")
    written = [_save(fig, out / "shap_importance.png")]

    phi = np.array(importance["phi_matrix"])
    vals = np.array(importance["value_matrix"])
    fig, ax = plt.subplots(figsize=(7, 5))
    rng = np.random.default_rng(0)
    order = [list(FEATURE_NAMES).index(n) if n in FEATURE_NAMES else i
             for i, n in enumerate(names)]
    for row, (name, col) in enumerate(zip(names, order)):
        y = np.full(len(phi), row) + rng.uniform(-0.25, 0.25, len(phi))
        v = vals[:, col]
        span = v.max() - v.min()
        shade = (v - v.min()) / span if span > 0 else np.full(len(v), 0.5)
        ax.scatter(phi[:, col], y, c=shade, cmap="coolwarm", s=10, alpha=0.8)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels([FEATURE_LABELS.get(n, n) for n in names])
    ax.invert_yaxis()
    ax.axvline(0, color="gray", linewidth=0.8)
    ax.set_xlabel("attribution (um)")
    ax.set_title("Per-sample attributions (color = feature value)")
    written.append(_save(fig, out / "shap_beeswarm.png"))

    csv_path = out / "shap_importance.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["feature", "mean_abs_phi"])
        for n in names:
            writer.writerow([n, importance["mean_abs"][n]])
    written.append(csv_path)
    return written


def report_diagnostics(diag: dict, out_dir) -> list[Path]:
    """Real-versus-synthetic Ra histogram overlay."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hist = diag["histogram"]
    edges = np.array(hist["bin_edges"])
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = np.diff(edges)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(centers, hist["real_counts"], width=width, alpha=0.55, label="real", color="#4878cf")
    ax.bar(centers, hist["synthetic_counts"], width=width, alpha=0.55, label="synthetic", color="#d1452c")
    ax.set_xlabel("Ra (um)")
    ax.set_ylabel("count")
    ax.set_title(f"KS = {diag['ks_statistic']:.3f}, clip fraction = {diag['clip_fraction']:.3%}")
    ax.legend()
    written = [_save(fig, out / "augmentation_diagnostics.png")]

    csv_path = out / "augmentation_diagnostics.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_left", "bin_right", "real_count", "synthetic_count"])
        for i in range(len(centers)):
            writer.writerow([edges[i], edges[i + 1], hist["real_counts"][i], hist["synthetic_counts"][i]])
    written.append(csv_path)
    return written


def report_study(study: dict, out_dir) -> list[Path]:
    """Trial objectives over a hyperparameter search."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials = study["trials"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for status, color in (("complete", "#4878cf"), ("pruned", "#999999"), ("failed", "#d1452c")):
        pts = [(t["trial_id"], t["running_means"][-1]) for t in trials
               if t["status"] == status and t["running_means"]]
        if pts:
            ax.scatter(*zip(*pts), color=color, label=status, s=24)
    complete = [t["objective"] for t in trials if t["status"] == "complete"]
    if complete:
        ax.axhline(min(complete), color="#4878cf", linestyle="--", alpha=0.6)
    ax.set_xlabel("trial")
    ax.set_ylabel("mean validation MAE (um)")
    ax.legend()
    written = [_save(fig, out / "study_objectives.png")]

    csv_path = out / "study_trials.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["trial_id", "status", "objective", "pruned_at_fold", "fold_maes"])
        for t in trials:
            writer.writerow([
                t["trial_id"], t["status"], t.get("objective"),
                t.get("pruned_at_fold"), json.dumps(t["fold_maes"]),
            ])
    written.append(csv_path)
    return written
