"""Report writers: flat key-value text, CSV tables, and PNG figures.

Every reporting path emits the figures next to the delimited output so a
run directory is self-describing: evaluation runs get a confusion matrix
heatmap and per-class accuracy bars, ablations get a comparison chart,
and bank validation gets the Littlewood-Paley frequency map and its
radial profile.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def write_key_values(path, pairs):
    """One 'key value' line per entry, in the order given."""
    with open(path, "w") as fh:
        for key, value in pairs:
            if isinstance(value, float):
                fh.write(f"{key} {value:.10g}\n")
            else:
                fh.write(f"{key} {value}\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _save(fig, path):
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def confusion_figure(confusion, class_names, path):
    confusion = np.asarray(confusion, dtype=np.float64)
    totals = confusion.sum(axis=1, keepdims=True)
    frac = np.divide(confusion, totals, out=np.zeros_like(confusion),
                     where=totals > 0)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(frac, cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ticks = range(len(class_names))
    ax.set_xticks(ticks, class_names, rotation=90, fontsize=7)
    ax.set_yticks(ticks, class_names, fontsize=7)
    fig.colorbar(im, ax=ax, label="row fraction")
    ax.set_title("confusion matrix")
    _save(fig, path)


def per_class_figure(per_class, class_names, path):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    xs = np.arange(len(class_names))
    ax.bar(xs, np.asarray(per_class, dtype=np.float64), color="#3b6ea5")
    ax.set_xticks(xs, class_names, rotation=45, ha="right", fontsize=8)
    ax.set_ylim(0, 1)
    ax.set_ylabel("accuracy")
    ax.set_title("per-class accuracy")
    ax.grid(axis="y", alpha=0.3)
    _save(fig, path)


def ablation_figure(rows, path):
    names = [r["name"] for r in rows]
    accs = [r.get("accuracy", 0.0) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    xs = np.arange(len(names))
    ax.bar(xs, accs, color="#a5553b")
    ax.set_xticks(xs, names, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0, 1)
    ax.set_ylabel("accuracy")
    ax.set_title("configuration comparison")
    for x, a in zip(xs, accs):
        ax.text(x, a + 0.01, f"{a:.3f}", ha="center", fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    _save(fig, path)


def lp_map_figure(lp_map, path):
    """Centered heatmap of the frame energy over frequencies."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(np.fft.fftshift(np.asarray(lp_map)), cmap="magma",
                   origin="lower")
    ax.set_title("Littlewood-Paley sum")
    ax.set_xlabel("frequency (centered)")
    ax.set_ylabel("frequency (centered)")
    fig.colorbar(im, ax=ax)
    _save(fig, path)


def lp_profile_figure(lp_map, band_lo, band_hi, path):
    """Radial min/mean/max of the frame energy with the admissible band."""
    lp = np.asarray(lp_map, dtype=np.float64)
    n = lp.shape[-1]
    w = 2.0 * np.pi * np.fft.fftfreq(n)
    radius = np.hypot(w[:, None], w[None, :]).ravel()
    values = lp.ravel()
    order = np.argsort(radius)
    radius, values = radius[order], values[order]
    edges = np.linspace(0.0, radius.max() + 1e-9, 48)
    mids, lo, mid, hi = [], [], [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (radius >= a) & (radius < b)
        if not sel.any():
            continue
        mids.append(0.5 * (a + b))
        lo.append(values[sel].min())
        mid.append(values[sel].mean())
        hi.append(values[sel].max())
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    ax.fill_between(mids, lo, hi, alpha=0.3, color="#3b6ea5", label="range")
    ax.plot(mids, mid, color="#3b6ea5", label="mean")
    ax.axvspan(band_lo, band_hi, color="#a5553b", alpha=0.15,
               label="admissible band")
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("|frequency|")
    ax.set_ylabel("frame energy")
    ax.set_title("Littlewood-Paley radial profile")
    ax.legend(fontsize=8)
    _save(fig, path)


def write_eval_report(outdir, config, result):
    """Key-value report, confusion CSV, predictions CSV, and figures."""
    pairs = [
        ("dataset", config.dataset),
        ("color", config.color),
        ("order", config.order),
        ("rotations", int(config.rotations)),
        ("n_train", result["n_train"]),
        ("n_test", result["n_test"]),
        ("dimension", result["dimension"]),
        ("epsilon", result["epsilon"]),
        ("selected", result.get("selected", 0)),
        ("sigma2", result["sigma2"]),
        ("support_vectors", result["support_vectors"]),
        ("accuracy", result["accuracy"]),
    ]
    names = result["class_names"]
    for i, acc in enumerate(result["per_class"]):
        pairs.append((f"accuracy_{names[i]}", float(acc)))
    write_key_values(os.path.join(outdir, "report.txt"), pairs)
    write_csv(os.path.join(outdir, "confusion.csv"),
              ["true\\pred"] + list(names),
              [[names[i]] + list(map(int, row))
               for i, row in enumerate(result["confusion"])])
    confusion_figure(result["confusion"], names,
                     os.path.join(outdir, "confusion.png"))
    per_class_figure(result["per_class"], names,
                     os.path.join(outdir, "per_class.png"))


def write_ablation_report(outdir, config, rows, dry_run=False):
    header = ["name", "order", "rotations", "selected_per_class",
              "dimension", "accuracy"]
    table = [[r["name"], r["order"], int(r["rotations"]),
              r["selected_per_class"], r["dimension"],
              f"{r['accuracy']:.6f}" if "accuracy" in r else ""]
             for r in rows]
    write_csv(os.path.join(outdir, "ablation.csv"), header, table)
    pairs = [("dataset", config.dataset), ("dry_run", int(dry_run))]
    for r in rows:
        if "accuracy" in r:
            pairs.append((f"accuracy_{r['name']}", r["accuracy"]))
    write_key_values(os.path.join(outdir, "ablation.txt"), pairs)
    if not dry_run:
        ablation_figure(rows, os.path.join(outdir, "ablation.png"))


def write_validation_report(outdir, spatial_report, angular_max, counts,
                            completeness, checks):
    """Bank health: key-value summary, count table CSV, and figures."""
    pairs = [
        ("lp_max", spatial_report.lp_max),
        ("lp_band_min", spatial_report.band_min),
        ("lp_mean", spatial_report.mean),
        ("lp_eta", spatial_report.eta),
        ("lp_passed", int(spatial_report.passed)),
        ("angular_lp_max", angular_max),
    ]
    for key, value in checks.items():
        pairs.append((key, value))
    for J, value in completeness:
        pairs.append((f"completeness_J{J}", value))
    write_key_values(os.path.join(outdir, "validation.txt"), pairs)
    write_csv(os.path.join(outdir, "frame_counts.csv"),
              ["depth", "frames"], counts)
    lp_map_figure(spatial_report.lp_map,
                  os.path.join(outdir, "littlewood_paley.png"))
    lp_profile_figure(spatial_report.lp_map, spatial_report.band_lo,
                      spatial_report.band_hi,
                      os.path.join(outdir, "littlewood_paley_profile.png"))
