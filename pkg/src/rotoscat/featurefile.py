"""Binary container for scattering feature matrices.

Layout: magic, u32 version, u32 header length, JSON header (transform
geometry plus row/column counts), an int16 path table with one 7-tuple
per column, then the row-major float64 matrix. Writes are deterministic:
the same matrix and metadata produce identical bytes.

Row labels and provenance live in a sidecar manifest CSV next to the
binary (same stem, .manifest.csv suffix) so the matrix file stays a pure
numeric artifact.
"""

import csv
import json
import os
import struct

import numpy as np

FEATURE_MAGIC = b"RSFT"
FEATURE_FORMAT_VERSION = 1

PATH_FIELDS = ("order", "channel", "j1", "theta", "j2", "beta", "k")


def manifest_path(feature_path):
    stem, _ = os.path.splitext(str(feature_path))
    return stem + ".manifest.csv"


def save_features(path, matrix, table, meta):
    """Write a feature matrix, its per-column path table, and geometry
    metadata (d, J, L, K, channels, order, rotations, grid)."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    table = np.ascontiguousarray(table, dtype=np.int16)
    if matrix.ndim != 2:
        raise ValueError(f"matrix must be 2-d, got shape {matrix.shape}")
    if table.shape != (matrix.shape[1], 7):
        raise ValueError(f"path table shape {table.shape} does not match "
                         f"{matrix.shape[1]} columns")
    header = dict(meta)
    header["rows"] = int(matrix.shape[0])
    header["cols"] = int(matrix.shape[1])
    payload = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", FEATURE_FORMAT_VERSION, len(payload)))
        fh.write(payload)
        fh.write(table.astype("<i2").tobytes())
        fh.write(matrix.astype("<f8").tobytes())


def load_features(path):
    """Read back (matrix, table, header)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEATURE_MAGIC:
            raise ValueError(f"{path} is not a feature file")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != FEATURE_FORMAT_VERSION:
            raise ValueError(f"unsupported feature format version {version}")
        header = json.loads(fh.read(hlen))
        rows, cols = header["rows"], header["cols"]
        table = np.frombuffer(fh.read(cols * 7 * 2), dtype="<i2")
        table = table.reshape(cols, 7).astype(np.int16)
        matrix = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
        if matrix.size != rows * cols:
            raise ValueError(f"{path} is truncated")
        matrix = matrix.reshape(rows, cols).copy()
    return matrix, table, header


def save_manifest(path, rows):
    """Write the row manifest: (row, label, class_name, source) tuples."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "label", "class_name", "source"])
        for r in rows:
            writer.writerow(r)


def load_manifest(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader)
        if head[:2] != ["row", "label"]:
            raise ValueError(f"{path} is not a feature manifest")
        rows = list(reader)
    labels = np.asarray([int(r[1]) for r in rows], dtype=np.int64)
    names = [r[2] for r in rows]
    sources = [r[3] for r in rows]
    return labels, names, sources


def export_csv(path, matrix, table):
    """Plain-text export with one named column per coefficient."""
    cols = []
    counts = {}
    for row in table:
        key = tuple(int(v) for v in row)
        cell = counts.get(key, 0)
        counts[key] = cell + 1
        name = "_".join(f"{f}{v}" for f, v in zip(PATH_FIELDS, key))
        cols.append(f"{name}_p{cell}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in np.asarray(matrix, dtype=np.float64):
            writer.writerow([repr(float(v)) for v in row])
