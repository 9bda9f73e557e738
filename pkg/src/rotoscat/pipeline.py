"""End-to-end orchestration: datasets to features to selection to SVM.

Feature matrices are cached on disk keyed by a hash of the transform
config, so ablation sweeps reuse transforms. All per-image work runs in a
bounded worker pool with results reduced in dataset order, keeping output
bytes stable across worker counts.
"""

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .classifier import estimate_bandwidth, predict, save_model, train
from .datasets import (
    load_cifar,
    load_image_dir,
    rescale_square,
    rgb_to_yuv,
    split_train_test,
    subset_per_class,
)
from .features import (
    default_epsilon,
    log_transform,
    ols_select,
    project,
    save_basis,
)
from .featurefile import (
    load_features,
    load_manifest,
    manifest_path,
    save_features,
    save_manifest,
)
from .filterbank import build_angular_bank, build_spatial_bank
from .scattering import ScatteringConfig, enumerate_paths, scatter

CACHE_ENV_VAR = "ROTOSCAT_CACHE"

# anchor: 200 selected features per class at the 19632-dimensional
# CIFAR default, scaled in proportion to the feature dimension
SELECT_ANCHOR_PER_CLASS = 200
SELECT_ANCHOR_DIM = 19632


@dataclass
class PipelineConfig:
    """Every knob of the pipeline in one flat, file-round-trippable record.

    J = 0 and K = 0 mean "derive from d and L" (J = d - 2, 2^K = L / 2).
    features_per_class = 0 applies the proportional default; -1 disables
    selection. train/test_per_class = 0 keeps the full canonical split.
    """

    dataset: str = "cifar10"
    data_path: str = ""
    d: int = 5
    J: int = 0
    L: int = 8
    K: int = 0
    order: int = 2
    rotations: bool = True
    color: str = "yuv"
    boundary: str = "periodic"
    epsilon_rel: float = 1e-6
    features_per_class: int = 0
    svm_c: float = 1.0
    bandwidth_squared: bool = False
    seed: int = 0
    train_per_class: int = 0
    test_per_class: int = 0
    workers: int = 1
    cache_dir: str = ""

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(values) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**values)
        cfg.check()
        return cfg

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    def check(self):
        if self.dataset not in ("cifar10", "cifar100", "imagedir"):
            raise ValueError(f"unknown dataset kind {self.dataset!r}")
        if self.color not in ("yuv", "rgb", "gray"):
            raise ValueError(f"unknown color mode {self.color!r}")
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if self.boundary not in ("periodic", "symmetric"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")

    def scattering(self):
        return ScatteringConfig(J=self.J, L=self.L, K=self.K,
                                order=self.order, rotations=self.rotations,
                                boundary=self.boundary)

    def channels(self):
        return 1 if self.color == "gray" else 3

    def geometry(self):
        """Resolved (J, L, K, grid side) at this config's image size."""
        J, L, K = self.scattering().resolved(self.d)
        return J, L, K, 2 ** (self.d - J)

    def feature_dimension(self):
        J, L, K, g = self.geometry()
        paths = enumerate_paths(J, L, K, self.channels(), order=self.order,
                                rotations=self.rotations)
        return len(paths) * g * g

    def selected_per_class(self):
        if self.features_per_class < 0:
            return 0
        if self.features_per_class > 0:
            return self.features_per_class
        d = self.feature_dimension()
        return max(1, round(SELECT_ANCHOR_PER_CLASS * d / SELECT_ANCHOR_DIM))


def resolve_cache_dir(config):
    if config.cache_dir:
        return config.cache_dir
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return env
    return os.path.join(os.getcwd(), ".rotoscat_cache")


def transform_cache_key(config, split):
    """Hash of everything that affects the feature matrix of one split."""
    relevant = {
        "dataset": config.dataset,
        "data_path": os.path.abspath(config.data_path) if config.data_path
                     else "",
        "split": split,
        "d": config.d, "J": config.J, "L": config.L, "K": config.K,
        "order": config.order, "rotations": config.rotations,
        "color": config.color, "boundary": config.boundary,
        "seed": config.seed,
        "train_per_class": config.train_per_class,
        "test_per_class": config.test_per_class,
    }
    blob = json.dumps(relevant, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@lru_cache(maxsize=8)
def _banks_for(d, J, L, K):
    return build_spatial_bank(d, J, L), build_angular_bank(L, K)


def _apply_color(image, mode):
    if image.shape[0] == 1:
        return image
    if mode == "yuv":
        return rgb_to_yuv(image)
    if mode == "gray":
        return rgb_to_yuv(image)[:1]
    return image


def _scatter_one(image, scfg, d):
    dd = d + 1 if scfg.boundary == "symmetric" else d
    J, L, K = scfg.resolved(d)
    banks = _banks_for(dd, J, L, K)
    return scatter(image, scfg, banks=banks)


_POOL = {}


def _pool_init(scfg_fields, d):
    _POOL["scfg"] = ScatteringConfig(**scfg_fields)
    _POOL["d"] = d


def _pool_run(image):
    return _scatter_one(image, _POOL["scfg"], _POOL["d"]).flatten()


def transform_images(images, config):
    """Scatter a list of channel-first images into a feature matrix.

    Returns (matrix, path table, geometry metadata). Rows follow input
    order regardless of worker count.
    """
    if not images:
        raise ValueError("no images to transform")
    prepped = []
    for im in images:
        im = np.asarray(im, dtype=np.float64)
        if im.ndim == 2:
            im = im[None]
        if im.shape[-1] != 2 ** config.d or im.shape[-2] != 2 ** config.d:
            im = rescale_square(im, config.d)
        prepped.append(_apply_color(im, config.color))
    scfg = config.scattering()
    probe = _scatter_one(prepped[0], scfg, config.d)
    rows = [probe.flatten()]
    rest = prepped[1:]
    if rest:
        if config.workers > 1 and len(rest) >= 2:
            chunk = max(1, len(rest) // (config.workers * 8))
            with ProcessPoolExecutor(
                    max_workers=config.workers,
                    initializer=_pool_init,
                    initargs=(dataclasses.asdict(scfg), config.d)) as pool:
                rows.extend(pool.map(_pool_run, rest, chunksize=chunk))
        else:
            rows.extend(_scatter_one(im, scfg, config.d).flatten()
                        for im in rest)
    matrix = np.vstack(rows)
    meta = {
        "d": config.d, "J": probe.J, "L": probe.L, "K": probe.K,
        "channels": probe.channels, "order": probe.order,
        "rotations": probe.rotations, "grid": probe.grid,
        "color": config.color, "boundary": config.boundary,
    }
    return matrix, probe.path_table(), meta


def load_splits(config):
    """Materialize the train and test datasets named by the config."""
    if config.dataset in ("cifar10", "cifar100"):
        variant = 10 if config.dataset == "cifar10" else 100
        train_ds = load_cifar(config.data_path, variant, "train")
        test_ds = load_cifar(config.data_path, variant, "test")
        if config.train_per_class:
            train_ds = subset_per_class(train_ds, config.train_per_class,
                                        config.seed)
        if config.test_per_class:
            test_ds = subset_per_class(test_ds, config.test_per_class,
                                       config.seed + 1)
        return train_ds, test_ds
    full = load_image_dir(config.data_path, target_d=config.d)
    if config.train_per_class <= 0:
        raise ValueError("directory corpora need train_per_class > 0")
    train_ds, test_ds = split_train_test(full, config.train_per_class,
                                         config.seed)
    if config.test_per_class:
        test_ds = subset_per_class(test_ds, config.test_per_class,
                                   config.seed + 1)
    return train_ds, test_ds


def _write_split(path, ds, matrix, table, meta, config, split):
    meta = dict(meta)
    meta["dataset"] = config.dataset
    meta["split"] = split
    meta["n_classes"] = ds.n_classes()
    save_features(path, matrix, table, meta)
    save_manifest(manifest_path(path), [
        (i, int(ds.labels[i]), ds.class_names[int(ds.labels[i])], ds.source)
        for i in range(len(ds))
    ])


def transform_dataset(config, force=False):
    """Compute (or reuse cached) feature files for both splits.

    Returns {"train": path, "test": path}.
    """
    cache = resolve_cache_dir(config)
    os.makedirs(cache, exist_ok=True)
    paths = {s: os.path.join(cache,
                             f"features-{transform_cache_key(config, s)}.bin")
             for s in ("train", "test")}
    missing = [s for s, p in paths.items()
               if force or not (os.path.exists(p)
                                and os.path.exists(manifest_path(p)))]
    if missing:
        train_ds, test_ds = load_splits(config)
        for split, ds in (("train", train_ds), ("test", test_ds)):
            if split not in missing:
                continue
            matrix, table, meta = transform_images(ds.images, config)
            _write_split(paths[split], ds, matrix, table, meta, config, split)
    return paths


def evaluate_predictions(labels, predictions, n_classes):
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    per_class = np.full(n_classes, np.nan)
    totals = confusion.sum(axis=1)
    nz = totals > 0
    per_class[nz] = confusion[np.arange(n_classes)[nz], np.arange(n_classes)[nz]] \
        / totals[nz]
    accuracy = float((labels == predictions).mean()) if len(labels) else 0.0
    return {"accuracy": accuracy, "per_class": per_class,
            "confusion": confusion}


def train_eval(config, feature_paths, outdir=None):
    """Log transform, optional selection, bandwidth, SVM, metrics.

    feature_paths maps split name to feature file. Artifacts (model,
    basis, reports, figures) land in outdir when given.
    """
    train_F, table, header = load_features(feature_paths["train"])
    test_F, _, _ = load_features(feature_paths["test"])
    train_y, class_names, _ = load_manifest(
        manifest_path(feature_paths["train"]))
    test_y, _, _ = load_manifest(manifest_path(feature_paths["test"]))
    n_classes = header.get("n_classes", int(train_y.max()) + 1)

    eps = default_epsilon(train_F, config.epsilon_rel)
    train_F = log_transform(train_F, eps)
    test_F = log_transform(test_F, eps)

    result = {
        "n_train": train_F.shape[0],
        "n_test": test_F.shape[0],
        "dimension": train_F.shape[1],
        "epsilon": eps,
        "n_classes": n_classes,
    }

    basis = None
    k = config.selected_per_class()
    if k > 0:
        basis = ols_select(train_F, train_y, k)
        train_F = project(basis, train_F)
        test_F = project(basis, test_F)
        result["selected"] = basis.M

    sigma2 = estimate_bandwidth(train_F, squared=config.bandwidth_squared)
    model = train(train_F, train_y, C=config.svm_c, sigma2=sigma2)
    result["sigma2"] = sigma2
    result["support_vectors"] = model.support.shape[0]

    predictions = predict(model, test_F)
    metrics = evaluate_predictions(test_y, predictions, n_classes)
    result["accuracy"] = metrics["accuracy"]
    result["per_class"] = metrics["per_class"]
    result["confusion"] = metrics["confusion"]
    result["class_names"] = _class_name_list(train_y, class_names, n_classes)
    result["predictions"] = predictions

    if outdir is not None:
        from . import report
        os.makedirs(outdir, exist_ok=True)
        save_model(os.path.join(outdir, "model.bin"), model)
        if basis is not None:
            save_basis(os.path.join(outdir, "basis.bin"), basis)
        report.write_eval_report(outdir, config, result)
    return result


def _class_name_list(labels, names, n_classes):
    out = [f"class_{i}" for i in range(n_classes)]
    for lab, name in zip(labels, names):
        out[int(lab)] = name
    return out


ABLATION_ROWS = (
    ("trans_order1", dict(order=1, rotations=False), False),
    ("trans_order2", dict(order=2, rotations=False), False),
    ("trans_order2_ols", dict(order=2, rotations=False), True),
    ("roto_order2", dict(order=2, rotations=True), False),
    ("roto_order2_ols", dict(order=2, rotations=True), True),
)


def ablation_configs(config):
    """The five standard configurations derived from a base config."""
    out = []
    for name, overrides, select in ABLATION_ROWS:
        cfg = dataclasses.replace(config, **overrides)
        cfg.features_per_class = cfg.features_per_class if select else -1
        if select and config.features_per_class < 0:
            cfg.features_per_class = 0
        out.append((name, cfg))
    return out


def ablate(config, outdir=None, dry_run=False):
    """Run (or plan) the five-configuration comparison table."""
    rows = []
    for name, cfg in ablation_configs(config):
        row = {
            "name": name,
            "order": cfg.order,
            "rotations": cfg.rotations,
            "selected_per_class": cfg.selected_per_class(),
            "dimension": cfg.feature_dimension(),
        }
        if not dry_run:
            paths = transform_dataset(cfg)
            res = train_eval(cfg, paths)
            row["accuracy"] = res["accuracy"]
            row["support_vectors"] = res["support_vectors"]
        rows.append(row)
    if outdir is not None:
        from . import report
        os.makedirs(outdir, exist_ok=True)
        report.write_ablation_report(outdir, config, rows, dry_run=dry_run)
    return rows
