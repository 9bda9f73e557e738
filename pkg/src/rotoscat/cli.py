"""Command line interface.

Subcommands: transform, select, train, eval, ablate, validate, info.
Flags mirror PipelineConfig field names; precedence is config file over
flags over built-in defaults. The cache directory can also be set with
the ROTOSCAT_CACHE environment variable.
"""

import argparse
import dataclasses
import json
import os
import shutil
import sys

import numpy as np

from . import __version__
from .classifier import estimate_bandwidth, load_model, predict, save_model, train
from .features import (
    default_epsilon,
    load_basis,
    log_transform,
    ols_select,
    project,
    save_basis,
)
from .featurefile import load_features, load_manifest, manifest_path
from .filterbank import (
    FRAME_SLACK,
    angular_frame_map,
    build_angular_bank,
    build_spatial_bank,
    validate_bank,
)
from .pipeline import (
    CACHE_ENV_VAR,
    PipelineConfig,
    ablate,
    evaluate_predictions,
    resolve_cache_dir,
    train_eval,
    transform_dataset,
)
from .scattering import (
    ScatteringConfig,
    completeness_check,
    completeness_value,
    count_frames,
    enumerate_paths,
    scatter,
    wavelet_modulus_w1,
)

_FLAG_HELP = {
    "dataset": "dataset kind: cifar10, cifar100, imagedir",
    "data_path": "path to the dataset directory or file",
    "d": "log2 of the working image side",
    "J": "number of dyadic scales (0 derives d-2)",
    "L": "number of orientations",
    "K": "number of angular scales (0 derives from L)",
    "order": "scattering order, 1 or 2",
    "rotations": "second layer filters jointly over position and angle",
    "color": "color mode: yuv, rgb, gray",
    "boundary": "boundary handling: periodic or symmetric",
    "epsilon_rel": "log floor relative to the median nonzero coefficient",
    "features_per_class": "selected features per class "
                          "(0 proportional default, -1 disables)",
    "svm_c": "SVM box constraint",
    "bandwidth_squared": "use mean squared norm for the kernel bandwidth",
    "seed": "seed for subsets and splits",
    "train_per_class": "training images per class (0 keeps canonical split)",
    "test_per_class": "test images per class (0 keeps canonical split)",
    "workers": "worker processes for the transform",
    "cache_dir": f"feature cache directory (also ${CACHE_ENV_VAR})",
}


def _add_config_flags(parser):
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--config", metavar="FILE",
                       help="JSON config file; its keys override flags")
    for f in dataclasses.fields(PipelineConfig):
        name = "--" + f.name.replace("_", "-")
        help_text = _FLAG_HELP.get(f.name, "")
        if isinstance(f.default, bool):
            group.add_argument(name, dest=f.name, default=None,
                               action=argparse.BooleanOptionalAction,
                               help=help_text)
        else:
            kind = type(f.default)
            group.add_argument(name, dest=f.name, default=None, type=kind,
                               help=help_text)
    group.add_argument("--subset", action="store_true",
                       help="shorthand for --train-per-class 500 "
                            "--test-per-class 200")


def _merged_config(args):
    values = {}
    for f in dataclasses.fields(PipelineConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if getattr(args, "subset", False):
        values.setdefault("train_per_class", 500)
        values.setdefault("test_per_class", 200)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            values.update(json.load(fh))
    return PipelineConfig.from_dict(values)


def _load_labeled_features(path):
    matrix, table, header = load_features(path)
    labels, names, _ = load_manifest(manifest_path(path))
    if len(labels) != matrix.shape[0]:
        raise ValueError(f"manifest rows ({len(labels)}) do not match "
                         f"feature rows ({matrix.shape[0]})")
    return matrix, table, header, labels, names


def _model_meta_path(model_path):
    return str(model_path) + ".meta.json"


def cmd_transform(args):
    config = _merged_config(args)
    paths = transform_dataset(config, force=args.force)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for split, src in paths.items():
            dst = os.path.join(args.out, f"features-{split}.bin")
            shutil.copy2(src, dst)
            shutil.copy2(manifest_path(src), manifest_path(dst))
            paths[split] = dst
    for split in ("train", "test"):
        _, _, header = load_features(paths[split])
        print(f"{split} {paths[split]} rows={header['rows']} "
              f"cols={header['cols']}")
    return 0


def cmd_select(args):
    config = _merged_config(args)
    F, _, header, labels, _ = _load_labeled_features(args.features)
    eps = default_epsilon(F, config.epsilon_rel)
    F = log_transform(F, eps)
    k = config.features_per_class
    if k == 0:
        from .pipeline import SELECT_ANCHOR_DIM, SELECT_ANCHOR_PER_CLASS
        k = max(1, round(SELECT_ANCHOR_PER_CLASS * F.shape[1]
                         / SELECT_ANCHOR_DIM))
    if k <= 0:
        print("selection disabled by features_per_class < 0", file=sys.stderr)
        return 1
    basis = ols_select(F, labels, k)
    save_basis(args.out, basis)
    print(f"selected {basis.M} of {basis.D} features "
          f"({k} requested per class) -> {args.out}")
    return 0


def cmd_train(args):
    config = _merged_config(args)
    F, _, header, labels, _ = _load_labeled_features(args.features)
    eps = args.epsilon if args.epsilon else default_epsilon(
        F, config.epsilon_rel)
    F = log_transform(F, eps)
    basis_path = ""
    if args.basis:
        basis = load_basis(args.basis)
        F = project(basis, F)
        basis_path = os.path.abspath(args.basis)
    sigma2 = args.sigma2 if args.sigma2 else estimate_bandwidth(
        F, squared=config.bandwidth_squared)
    model = train(F, labels, C=config.svm_c, sigma2=sigma2)
    save_model(args.out, model)
    with open(_model_meta_path(args.out), "w") as fh:
        json.dump({"epsilon": eps, "sigma2": sigma2, "basis": basis_path},
                  fh, indent=2, sort_keys=True)
    print(f"trained {model.n_classes}-class model on {F.shape[0]} vectors, "
          f"{model.support.shape[0]} support vectors -> {args.out}")
    return 0


def cmd_eval(args):
    config = _merged_config(args)
    F, _, header, labels, names = _load_labeled_features(args.features)
    model = load_model(args.model)
    meta = {}
    meta_path = _model_meta_path(args.model)
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    eps = args.epsilon or meta.get("epsilon") or default_epsilon(
        F, config.epsilon_rel)
    F = log_transform(F, eps)
    basis_path = args.basis or meta.get("basis")
    if basis_path:
        F = project(load_basis(basis_path), F)
    predictions = predict(model, F)
    n_classes = max(model.n_classes, int(labels.max()) + 1)
    metrics = evaluate_predictions(labels, predictions, n_classes)
    class_names = [f"class_{i}" for i in range(n_classes)]
    for lab, name in zip(labels, names):
        class_names[int(lab)] = name
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    from . import report
    result = {
        "n_train": model.support.shape[0],
        "n_test": F.shape[0],
        "dimension": header["cols"],
        "epsilon": eps,
        "selected": 0 if not basis_path else load_basis(basis_path).M,
        "sigma2": model.sigma2,
        "support_vectors": model.support.shape[0],
        "accuracy": metrics["accuracy"],
        "per_class": metrics["per_class"],
        "confusion": metrics["confusion"],
        "class_names": class_names,
    }
    report.write_eval_report(outdir, config, result)
    print(f"accuracy {metrics['accuracy']:.4f} on {F.shape[0]} images "
          f"-> {outdir}")
    return 0


def cmd_run(args):
    config = _merged_config(args)
    paths = transform_dataset(config)
    result = train_eval(config, paths, outdir=args.out)
    print(f"accuracy {result['accuracy']:.4f} "
          f"(dimension {result['dimension']}, "
          f"selected {result.get('selected', 0)}) -> {args.out}")
    return 0


def cmd_ablate(args):
    config = _merged_config(args)
    rows = ablate(config, outdir=args.out, dry_run=args.dry_run)
    width = max(len(r["name"]) for r in rows)
    for r in rows:
        acc = f"{r['accuracy']:.4f}" if "accuracy" in r else "planned"
        print(f"{r['name']:<{width}}  order={r['order']} "
              f"rotations={int(r['rotations'])} "
              f"selected={r['selected_per_class']:>4} "
              f"dim={r['dimension']:>7}  {acc}")
    return 0


def _rotation_covariance_error(sbank, seed=7):
    """Max error of: rotate image by 90 degrees vs rotate each order-1 map
    and advance theta by a quarter turn (L/2 positions at step pi/L).

    Compared at full resolution; a 90 degree turn of a stride-s lattice
    lands between the decimated samples, so the subsampled maps only
    agree after this off-grid shift is accounted for.
    """
    rng = np.random.default_rng(seed)
    n = sbank.grid_size
    x = rng.standard_normal((n, n))
    xhat = np.fft.fft2(x)
    rhat = np.fft.fft2(np.rot90(x).copy())
    shift = sbank.L // 2
    err = 0.0
    for j in range(1, sbank.J + 1):
        bands = np.abs(np.fft.ifft2(xhat[None] * sbank.psi[j - 1]))
        rot = np.abs(np.fft.ifft2(rhat[None] * sbank.psi[j - 1]))
        want = np.roll(np.rot90(bands, 1, axes=(-2, -1)), shift, axis=0)
        err = max(err, float(np.max(np.abs(rot - want))))
    return err


def _w1_energy_ratio(sbank, seed=11):
    """||W1 x||^2 / ||x||^2 for white noise, at full resolution."""
    rng = np.random.default_rng(seed)
    n = sbank.grid_size
    x = rng.standard_normal((n, n))
    xhat = np.fft.fft2(x)
    total = np.sum(np.abs(xhat * sbank.phi[sbank.J - 1]) ** 2)
    for j in range(sbank.J):
        total += np.sum(np.abs(xhat[None] * sbank.psi[j]) ** 2)
    return float(total / np.sum(np.abs(xhat) ** 2))


def _contraction_ratio(config, pairs=4, seed=13):
    rng = np.random.default_rng(seed)
    n = 2 ** config.d
    scfg = ScatteringConfig(J=config.J, L=config.L, K=config.K,
                            order=config.order, rotations=config.rotations)
    worst = 0.0
    for _ in range(pairs):
        x = rng.standard_normal((n, n))
        y = rng.standard_normal((n, n))
        sx = scatter(x, scfg).flatten()
        sy = scatter(y, scfg).flatten()
        worst = max(worst, float(np.linalg.norm(sx - sy)
                                 / np.linalg.norm(x - y)))
    return worst


def cmd_validate(args):
    config = _merged_config(args)
    J, L, K, _ = config.geometry()
    sbank = build_spatial_bank(config.d, J, L)
    abank = build_angular_bank(L, K)
    if args.corrupt_bank:
        # deliberate defect used to exercise the failure path
        sbank.psi[0, 0] *= 3.0
    spatial = validate_bank(sbank)
    angular_max = float(angular_frame_map(abank).max())
    counts = [(j, count_frames(j, L)) for j in range(1, 7)]
    counts_ok = all(
        count_frames(j, L) == len(enumerate_paths(j, L, K, 1, 2, True))
        for j in range(1, 7)
    )
    completeness = [(j, completeness_value(j, L)) for j in range(1, 7)]
    cov_err = _rotation_covariance_error(sbank)
    energy = _w1_energy_ratio(sbank)
    contraction = _contraction_ratio(config)
    checks = {
        "rotation_covariance_error": cov_err,
        "w1_energy_ratio": energy,
        "contraction_max_ratio": contraction,
        "frame_counts_ok": int(counts_ok),
    }
    os.makedirs(args.out, exist_ok=True)
    from . import report
    report.write_validation_report(args.out, spatial, angular_max, counts,
                                   completeness, checks)
    print(f"littlewood-paley max {spatial.lp_max:.8f} "
          f"band min {spatial.band_min:.6f} (eta {spatial.eta})")
    print(f"angular frame max {angular_max:.8f}")
    print("depth frames")
    for j, q in counts:
        mark = "" if not completeness_check(j, L) else "  (complete)"
        print(f"{j:>5} {q:>6}{mark}")
    print(f"rotation covariance error {cov_err:.3e}")
    print(f"white-noise energy ratio {energy:.6f}")
    print(f"contraction max ratio {contraction:.8f}")
    ok = (spatial.passed
          and angular_max <= 1.0 + spatial.tol
          and counts_ok
          and cov_err < 1e-10
          and energy >= 1.0 - FRAME_SLACK
          and contraction <= 1.0 + 1e-6)
    print("validation " + ("passed" if ok else "FAILED"))
    return 0 if ok else 2


def cmd_info(args):
    config = _merged_config(args)
    J, L, K, g = config.geometry()
    print(f"version {__version__}")
    print(f"cache {resolve_cache_dir(config)}")
    print(f"resolved J={J} L={L} K={K} grid={g}x{g} "
          f"channels={config.channels()}")
    print(f"feature dimension {config.feature_dimension()}")
    print(f"selected per class {config.selected_per_class()}")
    print(f"completeness value {completeness_value(J, L):.4f} "
          f"(>= 1: {completeness_check(J, L)})")
    print(config.to_json())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rotoscat",
        description="Roto-translation scattering features and a Gaussian "
                    "kernel classifier for small-image benchmarks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="compute feature files for a "
                                         "dataset's train and test splits")
    _add_config_flags(p)
    p.add_argument("--out", help="directory to copy the feature files into")
    p.add_argument("--force", action="store_true",
                   help="recompute even if cached")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("select", help="select a discriminative basis from "
                                      "a training feature file")
    _add_config_flags(p)
    p.add_argument("--features", required=True, help="training feature file")
    p.add_argument("--out", default="basis.bin", help="basis output path")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="train the kernel classifier on a "
                                     "feature file")
    _add_config_flags(p)
    p.add_argument("--features", required=True, help="training feature file")
    p.add_argument("--basis", help="selected basis to project onto")
    p.add_argument("--epsilon", type=float, help="explicit log floor")
    p.add_argument("--sigma2", type=float, help="explicit kernel bandwidth")
    p.add_argument("--out", default="model.bin", help="model output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a feature file and "
                                    "write reports and figures")
    _add_config_flags(p)
    p.add_argument("--features", required=True, help="test feature file")
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--basis", help="selected basis (defaults to the one "
                                   "recorded at training time)")
    p.add_argument("--epsilon", type=float, help="explicit log floor")
    p.add_argument("--out", default="eval-report", help="report directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="transform, train and evaluate in one go")
    _add_config_flags(p)
    p.add_argument("--out", default="run-report", help="report directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="run the five-configuration "
                                      "comparison table")
    _add_config_flags(p)
    p.add_argument("--out", default="ablation-report", help="report directory")
    p.add_argument("--dry-run", action="store_true",
                   help="print planned configurations without computing")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("validate", help="check filter banks and transform "
                                        "invariants; nonzero exit on failure")
    _add_config_flags(p)
    p.add_argument("--out", default="validation-report",
                   help="report directory")
    p.add_argument("--corrupt-bank", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("info", help="print the resolved configuration and "
                                    "derived dimensions")
    _add_config_flags(p)
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
