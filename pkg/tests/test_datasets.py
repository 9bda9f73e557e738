import os
import struct

import numpy as np
import pytest
from PIL import Image

from rotoscat import (
    LabeledDataset,
    load_cifar,
    load_image_dir,
    rescale_square,
    rgb_to_yuv,
    save_cifar,
    split_train_test,
    subset_per_class,
    yuv_to_rgb,
)


def _fake_records(rng, n, label_bytes=1):
    out = b""
    for i in range(n):
        labels = bytes([i % 7] * label_bytes)
        out += labels + rng.integers(0, 256, 3072, dtype=np.uint8).tobytes()
    return out


def test_cifar_file_roundtrip(tmp_path, rng):
    raw = _fake_records(rng, 5)
    p = tmp_path / "batch.bin"
    p.write_bytes(raw)
    ds = load_cifar(p, 10, "train")
    assert len(ds) == 5
    assert ds.images[0].shape == (3, 32, 32)
    assert ds.images[0].dtype == np.float64
    assert 0.0 <= ds.images[0].min() and ds.images[0].max() <= 1.0
    out = tmp_path / "again.bin"
    save_cifar(ds, out)
    assert out.read_bytes() == raw  # bit-exact re-serialization


def test_cifar_pixel_layout(tmp_path):
    # planar channel order: red plane then green then blue, rows major
    rec = bytes([3]) + bytes([10] * 1024) + bytes([20] * 1024) + \
        bytes([255] * 1024)
    p = tmp_path / "one.bin"
    p.write_bytes(rec)
    ds = load_cifar(p, 10, "train")
    im = ds.images[0]
    assert np.allclose(im[0], 10 / 255)
    assert np.allclose(im[1], 20 / 255)
    assert np.allclose(im[2], 1.0)
    assert ds.labels[0] == 3


def test_cifar100_keeps_fine_label(tmp_path, rng):
    raw = b""
    for i in range(4):
        raw += bytes([2, 40 + i])
        raw += rng.integers(0, 256, 3072, dtype=np.uint8).tobytes()
    p = tmp_path / "train.bin"
    p.write_bytes(raw)
    ds = load_cifar(p, 100, "train")
    assert list(ds.labels) == [40, 41, 42, 43]
    assert list(ds.aux_labels) == [2, 2, 2, 2]
    out = p.with_name("copy.bin")
    save_cifar(ds, out, variant=100)
    assert out.read_bytes() == raw


def test_cifar_malformed_record_length(tmp_path, rng):
    p = tmp_path / "bad.bin"
    p.write_bytes(_fake_records(rng, 2) + b"\x00" * 100)
    with pytest.raises(ValueError, match="malformed record length"):
        load_cifar(p, 10, "train")


def test_cifar_truncated_file(tmp_path):
    p = tmp_path / "tiny.bin"
    p.write_bytes(b"\x00" * 500)
    with pytest.raises(ValueError, match="truncated"):
        load_cifar(p, 10, "train")


def test_cifar_missing_batches(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_cifar(tmp_path, 10, "train")


def test_cifar_canonical_count_enforced(tmp_path, rng):
    for name in [f"data_batch_{i}.bin" for i in range(1, 6)]:
        (tmp_path / name).write_bytes(_fake_records(rng, 3))
    with pytest.raises(ValueError, match="expected 50000"):
        load_cifar(tmp_path, 10, "train")


def test_cifar_argument_validation(tmp_path):
    with pytest.raises(ValueError):
        load_cifar(tmp_path, 50, "train")
    with pytest.raises(ValueError):
        load_cifar(tmp_path, 10, "valid")


def _write_image_dir(root, rng, corrupt=True):
    for name, count in (("alpha", 3), ("beta", 4)):
        d = root / name
        d.mkdir(parents=True)
        for i in range(count):
            arr = rng.integers(0, 256, (20, 24, 3), dtype=np.uint8)
            Image.fromarray(arr).save(d / f"im{i}.png")
    (root / "BACKGROUND_Google").mkdir()
    arr = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    Image.fromarray(arr).save(root / "BACKGROUND_Google" / "junk.png")
    if corrupt:
        (root / "beta" / "broken.png").write_bytes(b"xx")


def test_image_dir_loading(tmp_path, rng):
    _write_image_dir(tmp_path, rng)
    with pytest.warns(UserWarning, match="unreadable"):
        ds = load_image_dir(tmp_path)
    assert ds.class_names == ["alpha", "beta"]  # background excluded
    assert len(ds) == 7
    assert ds.skipped == 1
    assert ds.images[0].shape == (3, 20, 24)


def test_image_dir_resizes_on_request(tmp_path, rng):
    _write_image_dir(tmp_path, rng, corrupt=False)
    ds = load_image_dir(tmp_path, target_d=4)
    assert all(im.shape == (3, 16, 16) for im in ds.images)


def test_image_dir_empty_class_rejected(tmp_path):
    (tmp_path / "solo").mkdir()
    with pytest.raises(ValueError, match="no readable images"):
        load_image_dir(tmp_path)


def test_image_dir_no_classes(tmp_path):
    with pytest.raises(ValueError, match="no class directories"):
        load_image_dir(tmp_path)


def test_rescale_identity_bit_exact(rng):
    x = rng.random((3, 16, 16))
    out = rescale_square(x, 4)
    assert np.array_equal(out, x)
    assert out is not x


def test_rescale_bilinear_oracle(rng):
    # per-pixel reference with explicit center-aligned source coordinates
    x = rng.random((10, 14))
    d = 3
    out = rescale_square(x, d)
    s = 2 ** d
    want = np.empty((s, s))
    for i in range(s):
        for j in range(s):
            sy = min(max((i + 0.5) * 10 / s - 0.5, 0.0), 9.0)
            sx = min(max((j + 0.5) * 14 / s - 0.5, 0.0), 13.0)
            y0, x0 = int(np.floor(sy)), int(np.floor(sx))
            y1, x1 = min(y0 + 1, 9), min(x0 + 1, 13)
            ty, tx = sy - y0, sx - x0
            top = x[y0, x0] * (1 - tx) + x[y0, x1] * tx
            bot = x[y1, x0] * (1 - tx) + x[y1, x1] * tx
            want[i, j] = top * (1 - ty) + bot * ty
    assert np.abs(out[0] - want).max() < 1e-12


def test_rescale_ramp_preserved(rng):
    # bilinear on an axis ramp returns an axis ramp (affine invariance)
    x = np.arange(48, dtype=np.float64)[None, :].repeat(48, axis=0)
    out = rescale_square(x, 5)[0]
    diffs = np.diff(out, axis=1)
    interior = diffs[:, 1:-1]
    assert np.allclose(interior, interior[0, 0])


def test_rescale_validation():
    with pytest.raises(ValueError):
        rescale_square(np.zeros((4, 4)), 2)
    with pytest.raises(ValueError):
        rescale_square(np.zeros((3, 0, 5)), 3)


def test_yuv_white_and_inverse(rng):
    white = np.ones((3, 2, 2))
    yuv = rgb_to_yuv(white)
    assert yuv[0, 0, 0] == 1.0  # exact, not approximate
    assert yuv[1, 0, 0] == 0.0
    assert yuv[2, 0, 0] == 0.0
    x = rng.random((3, 9, 9))
    back = yuv_to_rgb(rgb_to_yuv(x))
    assert np.abs(back - x).max() < 1e-10


def test_yuv_coefficients():
    red = np.zeros((3, 1, 1))
    red[0] = 1.0
    yuv = rgb_to_yuv(red)
    assert yuv[0, 0, 0] == pytest.approx(0.299)
    assert yuv[2, 0, 0] == pytest.approx(0.877 * (1 - 0.299))


def test_yuv_channel_validation():
    with pytest.raises(ValueError):
        rgb_to_yuv(np.zeros((4, 2, 2)))
    with pytest.raises(ValueError):
        yuv_to_rgb(np.zeros((1, 2, 2)))


def _toy_dataset(rng, per_class=10, classes=3):
    images = [rng.random((1, 4, 4)) for _ in range(per_class * classes)]
    labels = np.repeat(np.arange(classes), per_class)
    return LabeledDataset(images=images, labels=labels,
                          class_names=[f"c{i}" for i in range(classes)])


def test_split_deterministic_and_disjoint(rng):
    ds = _toy_dataset(rng)
    tr1, te1 = split_train_test(ds, 6, seed=42)
    tr2, te2 = split_train_test(ds, 6, seed=42)
    assert np.array_equal(tr1.labels, tr2.labels)
    assert all(np.array_equal(a, b) for a, b in zip(tr1.images, tr2.images))
    assert len(tr1) == 18 and len(te1) == 12
    ids_train = {id(im) for im in tr1.images}
    ids_test = {id(im) for im in te1.images}
    assert not ids_train & ids_test
    # different seed shuffles differently
    tr3, _ = split_train_test(ds, 6, seed=43)
    assert any(not np.array_equal(a, b)
               for a, b in zip(tr1.images, tr3.images))


def test_split_insufficient_class(rng):
    ds = _toy_dataset(rng, per_class=5)
    with pytest.raises(ValueError, match="need more than"):
        split_train_test(ds, 5, seed=0)


def test_subset_per_class(rng):
    ds = _toy_dataset(rng, per_class=10)
    sub = subset_per_class(ds, 4, seed=7)
    assert len(sub) == 12
    assert all((sub.labels == c).sum() == 4 for c in range(3))
    sub2 = subset_per_class(ds, 4, seed=7)
    assert all(np.array_equal(a, b) for a, b in zip(sub.images, sub2.images))
    with pytest.raises(ValueError):
        subset_per_class(ds, 11, seed=0)


def test_to_array_uniformity(rng):
    ds = _toy_dataset(rng)
    arr = ds.to_array()
    assert arr.shape == (30, 1, 4, 4)
    ds.images[0] = rng.random((1, 5, 5))
    with pytest.raises(ValueError, match="mixed shapes"):
        ds.to_array()
