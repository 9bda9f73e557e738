import numpy as np
import pytest

from rotoscat import (
    load_features,
    load_manifest,
    manifest_path,
    save_features,
    save_manifest,
)
from rotoscat.featurefile import export_csv


def _sample(rng, rows=5, paths=3, grid=2):
    cols = paths * grid * grid
    matrix = rng.random((rows, cols))
    base = np.array([[1, 0, 1, t + 1, 0, 0, 0] for t in range(paths)],
                    dtype=np.int16)
    table = np.repeat(base, grid * grid, axis=0)
    meta = {"d": 5, "J": 3, "L": 8, "K": 2, "channels": 1, "order": 2,
            "rotations": True, "grid": grid}
    return matrix, table, meta


def test_feature_file_roundtrip(tmp_path, rng):
    matrix, table, meta = _sample(rng)
    p = tmp_path / "f.bin"
    save_features(p, matrix, table, meta)
    m2, t2, header = load_features(p)
    assert np.array_equal(m2, matrix)
    assert np.array_equal(t2, table)
    assert header["rows"] == 5 and header["cols"] == 12
    assert header["J"] == 3 and header["grid"] == 2


def test_feature_file_deterministic_bytes(tmp_path, rng):
    matrix, table, meta = _sample(rng)
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_features(p1, matrix, table, meta)
    save_features(p2, matrix.copy(), table.copy(), dict(meta))
    assert p1.read_bytes() == p2.read_bytes()


def test_feature_file_rejects_bad_shapes(tmp_path, rng):
    matrix, table, meta = _sample(rng)
    with pytest.raises(ValueError):
        save_features(tmp_path / "x.bin", matrix[0], table, meta)
    with pytest.raises(ValueError):
        save_features(tmp_path / "x.bin", matrix, table[:-1], meta)


def test_feature_file_rejects_wrong_magic(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="not a feature file"):
        load_features(p)


def test_manifest_roundtrip(tmp_path):
    p = tmp_path / "f.bin"
    mp = manifest_path(p)
    assert mp.endswith(".manifest.csv")
    rows = [(0, 2, "bird", "src"), (1, 0, "plane", "src")]
    save_manifest(mp, rows)
    labels, names, sources = load_manifest(mp)
    assert list(labels) == [2, 0]
    assert names == ["bird", "plane"]
    assert sources == ["src", "src"]


def test_manifest_rejects_foreign_csv(tmp_path):
    p = tmp_path / "other.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        load_manifest(p)


def test_csv_export_readable(tmp_path, rng):
    matrix, table, meta = _sample(rng, rows=2)
    p = tmp_path / "f.csv"
    export_csv(p, matrix, table)
    lines = p.read_text().strip().splitlines()
    assert len(lines) == 3
    header = lines[0].split(",")
    assert len(header) == matrix.shape[1]
    assert header[0] == "order1_channel0_j11_theta1_j20_beta0_k0_p0"
    # values survive a text round trip exactly (repr serialization)
    back = np.array([[float(v) for v in line.split(",")]
                     for line in lines[1:]])
    assert np.array_equal(back, matrix)
