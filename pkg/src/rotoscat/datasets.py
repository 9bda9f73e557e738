"""Dataset ingestion: CIFAR binaries, image directories, resizing, color.

Images are stored channel-first as float64 in [0, 1]. CIFAR ingestion is
bit-exact and reversible; directory corpora get directory names as class
labels. Resampling to dyadic squares is plain bilinear interpolation with
an explicit, test-pinned coordinate convention.
"""

import os
import struct
import warnings
from dataclasses import dataclass

import numpy as np

_CIFAR10_TRAIN = [f"data_batch_{i}.bin" for i in range(1, 6)]
_CIFAR10_TEST = ["test_batch.bin"]
_CIFAR100_TRAIN = ["train.bin"]
_CIFAR100_TEST = ["test.bin"]

DEFAULT_EXCLUDED_DIRS = ("BACKGROUND_Google", "BACKGROUND", "clutter")


@dataclass
class LabeledDataset:
    """Images with dense integer class labels.

    images holds channel-first float arrays; aux_labels keeps the coarse
    CIFAR-100 label byte so serialization can round-trip exactly.
    """

    images: list
    labels: np.ndarray
    class_names: list
    source: str = ""
    seed: int = None
    skipped: int = 0
    aux_labels: np.ndarray = None

    def __len__(self):
        return len(self.images)

    def n_classes(self):
        return len(self.class_names)

    def to_array(self):
        """Stack into (N, C, side, side); requires a uniform shape."""
        shapes = {im.shape for im in self.images}
        if len(shapes) > 1:
            raise ValueError(f"dataset images have mixed shapes: {sorted(shapes)}")
        return np.stack(self.images) if self.images else np.zeros((0, 1, 1, 1))


def _parse_cifar_records(raw, label_bytes, path):
    rec = label_bytes + 3072
    if len(raw) < rec:
        raise ValueError(f"truncated file {path}: {len(raw)} bytes is less "
                         f"than one {rec}-byte record")
    if len(raw) % rec:
        raise ValueError(f"malformed record length in {path}: {len(raw)} "
                         f"bytes is not a multiple of {rec}")
    data = np.frombuffer(raw, dtype=np.uint8).reshape(-1, rec)
    labels = data[:, label_bytes - 1].astype(np.int64)
    aux = data[:, 0].astype(np.int64) if label_bytes == 2 else None
    pixels = data[:, label_bytes:].reshape(-1, 3, 32, 32)
    images = [plane.astype(np.float64) / 255.0 for plane in pixels]
    return images, labels, aux


def _read_names(path, fallback_n):
    if path and os.path.exists(path):
        with open(path) as fh:
            names = [line.strip() for line in fh if line.strip()]
        if names:
            return names
    return [f"class_{i}" for i in range(fallback_n)]


def load_cifar(path, variant=10, split="train"):
    """Load CIFAR binary batches.

    path may be the canonical batch directory (record counts validated:
    50000 train, 10000 test) or a single .bin file of records, in which
    case any record count is accepted. Records are one label byte (or two
    for the 100-class variant, coarse then fine) followed by 3072
    channel-planar pixel bytes. Fine labels are kept.
    """
    if variant not in (10, 100):
        raise ValueError(f"variant must be 10 or 100, got {variant}")
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    label_bytes = 1 if variant == 10 else 2
    expected = 50000 if split == "train" else 10000
    if os.path.isfile(path):
        files = [path]
        expected = None
        meta = None
    else:
        if variant == 10:
            names = _CIFAR10_TRAIN if split == "train" else _CIFAR10_TEST
            meta = os.path.join(path, "batches.meta.txt")
        else:
            names = _CIFAR100_TRAIN if split == "train" else _CIFAR100_TEST
            meta = os.path.join(path, "fine_label_names.txt")
        files = [os.path.join(path, f) for f in names]
        missing = [f for f in files if not os.path.exists(f)]
        if missing:
            raise FileNotFoundError(f"missing CIFAR batch files: {missing}")
    images, labels, aux = [], [], []
    for f in files:
        with open(f, "rb") as fh:
            raw = fh.read()
        im, lab, ax = _parse_cifar_records(raw, label_bytes, f)
        images.extend(im)
        labels.append(lab)
        if ax is not None:
            aux.append(ax)
    labels = np.concatenate(labels)
    aux = np.concatenate(aux) if aux else None
    if expected is not None and len(images) != expected:
        raise ValueError(f"expected {expected} records for the {split} "
                         f"split, found {len(images)}")
    class_names = _read_names(meta, variant if expected is not None
                              else int(labels.max()) + 1 if len(labels) else 1)
    return LabeledDataset(images=images, labels=labels,
                          class_names=class_names, source=str(path),
                          aux_labels=aux)


def save_cifar(ds, path, variant=10):
    """Re-serialize a 32x32 RGB dataset to CIFAR record format."""
    label_bytes = 1 if variant == 10 else 2
    with open(path, "wb") as fh:
        for i, im in enumerate(ds.images):
            if im.shape != (3, 32, 32):
                raise ValueError(f"image {i} has shape {im.shape}, "
                                 "CIFAR records need (3, 32, 32)")
            if label_bytes == 2:
                coarse = 0 if ds.aux_labels is None else int(ds.aux_labels[i])
                fh.write(struct.pack("BB", coarse, int(ds.labels[i])))
            else:
                fh.write(struct.pack("B", int(ds.labels[i])))
            fh.write(np.rint(im * 255.0).astype(np.uint8).tobytes())


def load_image_dir(path, exclude=DEFAULT_EXCLUDED_DIRS, target_d=None):
    """Load a directory-per-class image corpus.

    Subdirectory names become class names (sorted); directories listed in
    exclude are skipped. Unreadable files are skipped with a warning and
    counted on the returned dataset. target_d, when given, rescales every
    image to a 2^target_d square on load.
    """
    from PIL import Image, UnidentifiedImageError

    subdirs = sorted(
        e for e in os.listdir(path)
        if os.path.isdir(os.path.join(path, e)) and e not in exclude
    )
    if not subdirs:
        raise ValueError(f"no class directories under {path}")
    images, labels = [], []
    skipped = 0
    for cid, name in enumerate(subdirs):
        count = 0
        cdir = os.path.join(path, name)
        for fname in sorted(os.listdir(cdir)):
            fpath = os.path.join(cdir, fname)
            if not os.path.isfile(fpath):
                continue
            try:
                with Image.open(fpath) as img:
                    arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
            except (OSError, UnidentifiedImageError, ValueError):
                warnings.warn(f"skipping unreadable image {fpath}")
                skipped += 1
                continue
            arr = arr.transpose(2, 0, 1)
            if target_d is not None:
                arr = rescale_square(arr, target_d)
            images.append(arr)
            labels.append(cid)
            count += 1
        if count == 0:
            raise ValueError(f"class directory {cdir} has no readable images")
    return LabeledDataset(images=images, labels=np.asarray(labels),
                          class_names=subdirs, source=str(path),
                          skipped=skipped)


def rescale_square(x, d):
    """Bilinear resample onto a 2^d square.

    Output pixel centers map to input coordinates via
    src = (dst + 0.5) * (in_size / out_size) - 0.5, clamped at the edges.
    Inputs already at the target size pass through bit-exact.
    """
    if d < 3:
        raise ValueError(f"target log-side must be >= 3, got {d}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    h, w = x.shape[-2], x.shape[-1]
    if h == 0 or w == 0:
        raise ValueError("degenerate input: zero-size image")
    s = 2 ** d
    if h == s and w == s:
        return x.copy()
    out = x
    for axis, size in ((-2, h), (-1, w)):
        src = (np.arange(s) + 0.5) * (size / s) - 0.5
        src = np.clip(src, 0.0, size - 1.0)
        i0 = np.floor(src).astype(np.int64)
        i1 = np.minimum(i0 + 1, size - 1)
        t = src - i0
        lo = np.take(out, i0, axis=axis)
        hi = np.take(out, i1, axis=axis)
        shape = [1] * out.ndim
        shape[axis] = s
        t = t.reshape(shape)
        out = lo * (1.0 - t) + hi * t
    return out


def rgb_to_yuv(x):
    """BT.601 color transform; rows chosen so white maps to Y=1, U=V=0
    exactly in double precision."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != 3:
        raise ValueError(f"expected 3 channels, got {x.shape[0]}")
    r, g, b = x[0], x[1], x[2]
    y = (0.299 * r + 0.114 * b) + 0.587 * g
    u = 0.492 * (b - y)
    v = 0.877 * (r - y)
    return np.stack([y, u, v])


def yuv_to_rgb(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != 3:
        raise ValueError(f"expected 3 channels, got {x.shape[0]}")
    y, u, v = x[0], x[1], x[2]
    r = y + v / 0.877
    b = y + u / 0.492
    g = (y - (0.299 * r + 0.114 * b)) / 0.587
    return np.stack([r, g, b])


def _per_class_indices(labels, rng):
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        yield c, idx[rng.permutation(len(idx))]


def _take(ds, indices):
    return LabeledDataset(
        images=[ds.images[i] for i in indices],
        labels=ds.labels[indices],
        class_names=list(ds.class_names),
        source=ds.source,
        seed=ds.seed,
        aux_labels=None if ds.aux_labels is None else ds.aux_labels[indices],
    )


def split_train_test(ds, n_train_per_class, seed):
    """Deterministic per-class split: exactly n_train_per_class training
    images per class, the rest held out."""
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c, idx in _per_class_indices(ds.labels, rng):
        if len(idx) <= n_train_per_class:
            raise ValueError(f"class {c} has only {len(idx)} images, need "
                             f"more than {n_train_per_class}")
        train_idx.extend(idx[:n_train_per_class])
        test_idx.extend(idx[n_train_per_class:])
    train = _take(ds, np.asarray(sorted(train_idx)))
    test = _take(ds, np.asarray(sorted(test_idx)))
    train.seed = test.seed = seed
    return train, test


def subset_per_class(ds, n_per_class, seed):
    """Deterministic per-class subsample of a dataset."""
    rng = np.random.default_rng(seed)
    keep = []
    for c, idx in _per_class_indices(ds.labels, rng):
        if len(idx) < n_per_class:
            raise ValueError(f"class {c} has only {len(idx)} images, need "
                             f"{n_per_class}")
        keep.extend(idx[:n_per_class])
    out = _take(ds, np.asarray(sorted(keep)))
    out.seed = seed
    return out
