"""Dataset generation, ingestion, and file formats.

Two on-disk formats, both self-describing:

* CSV: first line is the header ``n,d,has_labels`` (three integers);
  each following line is ``label,f1,...,fd`` when has_labels is 1,
  otherwise ``f1,...,fd``. Floats are written with repr precision and
  parse back losslessly.
* Binary: little-endian header ``magic b"PHDS", version u32, n u64,
  d u64, flags u32`` (flag bit 0: labels present), then n int32 labels
  when flagged, then n*d float64 features row-major.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DatasetFormatError, InvalidParametersError

__all__ = [
    "Dataset",
    "gen_synthetic",
    "normalize_rows",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
    "write_dataset",
    "read_dataset",
]

MAGIC = b"PHDS"
VERSION = 1
KINDS = ("gaussian_blobs", "unit_sphere", "two_class_separable")


@dataclass
class Dataset:
    """In-memory dataset: n x d float64 features plus optional integer labels."""

    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int32)
            if self.labels.shape[0] != self.features.shape[0]:
                raise InvalidParametersError("labels and features disagree in length")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def normalize_rows(features: np.ndarray) -> np.ndarray:
    """Scale every row to unit norm; zero rows are rejected."""
    feats = np.atleast_2d(np.asarray(features, dtype=np.float64))
    norms = np.linalg.norm(feats, axis=1, keepdims=True)
    if np.any(norms <= 0.0):
        raise InvalidParametersError("cannot normalize a zero row")
    return feats / norms


def gen_synthetic(
    kind: str,
    n: int,
    dim: int,
    classes: int = 2,
    seed: int = 0,
    normalize: bool = False,
    blob_spread: float = 4.0,
    gap: float = 0.3,
) -> Dataset:
    """Generate a deterministic synthetic dataset.

    gaussian_blobs: unit-covariance Gaussians around `classes` means placed
    at blob_spread times random unit directions; class c gets n // classes
    points (remainder spread over the first classes).
    unit_sphere: unlabeled points uniform on the sphere.
    two_class_separable: balanced two-class data with an enforced margin of
    gap/2 on each side of a random hyperplane through the origin, so a
    zero-training-error linear model always exists.
    """
    if n < 1 or dim < 2:
        raise InvalidParametersError("need n >= 1 and dim >= 2")
    if kind not in KINDS:
        raise InvalidParametersError(f"unknown kind {kind!r}; choose from {KINDS}")
    rng = np.random.default_rng(seed)
    if kind == "gaussian_blobs":
        if classes < 2:
            raise InvalidParametersError("gaussian_blobs needs classes >= 2")
        dirs = rng.standard_normal((classes, dim))
        means = blob_spread * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        counts = [n // classes + (1 if c < n % classes else 0) for c in range(classes)]
        feats = []
        labels = []
        for c, count in enumerate(counts):
            feats.append(means[c] + rng.standard_normal((count, dim)))
            labels.extend([c] * count)
        features = np.vstack(feats)
        label_arr = np.array(labels, dtype=np.int32)
    elif kind == "unit_sphere":
        raw = rng.standard_normal((n, dim))
        features = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        label_arr = None
    else:  # two_class_separable
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        raw = rng.standard_normal((n, dim))
        labels = np.zeros(n, dtype=np.int32)
        labels[: n // 2] = 1
        labels = labels[rng.permutation(n)]
        proj = raw @ direction
        ortho = raw - np.outer(proj, direction)
        signed = np.where(labels == 1, 1.0, -1.0) * (np.abs(proj) + gap / 2.0)
        features = ortho + np.outer(signed, direction)
        label_arr = labels
    if normalize:
        features = normalize_rows(features)
    return Dataset(features=features, labels=label_arr)


def write_csv(dataset: Dataset, path: str) -> None:
    has_labels = 1 if dataset.labels is not None else 0
    lines = [f"{dataset.n},{dataset.dim},{has_labels}"]
    for i in range(dataset.n):
        cells = [repr(float(v)) for v in dataset.features[i]]
        if has_labels:
            cells.insert(0, str(int(dataset.labels[i])))
        lines.append(",".join(cells))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> Dataset:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line.strip() != ""]
    if not lines:
        raise DatasetFormatError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if len(header) != 3:
        raise DatasetFormatError(f"{path}: header must be 'n,d,has_labels'", row=1)
    try:
        n, dim, has_labels = (int(cell) for cell in header)
    except ValueError:
        raise DatasetFormatError(f"{path}: non-integer header cell", row=1)
    if has_labels not in (0, 1) or n < 0 or dim < 1:
        raise DatasetFormatError(f"{path}: invalid header values", row=1)
    if len(lines) - 1 != n:
        raise DatasetFormatError(
            f"{path}: header declares {n} rows, file has {len(lines) - 1}"
        )
    expected = dim + (1 if has_labels else 0)
    features = np.empty((n, dim))
    labels = np.empty(n, dtype=np.int32) if has_labels else None
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != expected:
            raise DatasetFormatError(
                f"{path}: expected {expected} cells, found {len(cells)}", row=i
            )
        col0 = 0
        if has_labels:
            try:
                labels[i - 2] = int(cells[0])
            except ValueError:
                raise DatasetFormatError(f"{path}: bad label {cells[0]!r}", row=i, col=1)
            col0 = 1
        for j, cell in enumerate(cells[col0:]):
            try:
                value = float(cell)
            except ValueError:
                raise DatasetFormatError(
                    f"{path}: bad float {cell!r}", row=i, col=col0 + j + 1
                )
            if not math.isfinite(value):
                raise DatasetFormatError(
                    f"{path}: non-finite value {cell!r}", row=i, col=col0 + j + 1
                )
            features[i - 2, j] = value
    return Dataset(features=features, labels=labels)


def write_binary(dataset: Dataset, path: str) -> None:
    has_labels = dataset.labels is not None
    header = struct.pack("<4sIQQI", MAGIC, VERSION, dataset.n, dataset.dim, 1 if has_labels else 0)
    with open(path, "wb") as fh:
        fh.write(header)
        if has_labels:
            fh.write(dataset.labels.astype("<i4").tobytes())
        fh.write(dataset.features.astype("<f8").tobytes())


def read_binary(path: str) -> Dataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) == 0:
        raise DatasetFormatError(f"{path}: empty dataset file")
    head_size = struct.calcsize("<4sIQQI")
    if len(blob) < head_size:
        raise DatasetFormatError(f"{path}: truncated header")
    magic, version, n, dim, flags = struct.unpack_from("<4sIQQI", blob)
    if magic != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    offset = head_size
    labels = None
    if flags & 1:
        need = n * 4
        if len(blob) < offset + need:
            raise DatasetFormatError(f"{path}: truncated label block")
        labels = np.frombuffer(blob, dtype="<i4", count=n, offset=offset).copy()
        offset += need
    need = n * dim * 8
    if len(blob) != offset + need:
        raise DatasetFormatError(
            f"{path}: feature block is {len(blob) - offset} bytes, expected {need}"
        )
    features = (
        np.frombuffer(blob, dtype="<f8", count=n * dim, offset=offset)
        .reshape(n, dim)
        .copy()
    )
    if not np.all(np.isfinite(features)):
        bad = np.argwhere(~np.isfinite(features))[0]
        raise DatasetFormatError(
            f"{path}: non-finite feature", row=int(bad[0]) + 1, col=int(bad[1]) + 1
        )
    return Dataset(features=features, labels=labels)


def write_dataset(dataset: Dataset, path: str, fmt: str) -> None:
    if fmt == "csv":
        write_csv(dataset, path)
    elif fmt == "binary":
        write_binary(dataset, path)
    else:
        raise InvalidParametersError(f"unknown format {fmt!r}")


def read_dataset(path: str, fmt: str) -> Dataset:
    if fmt == "csv":
        return read_csv(path)
    if fmt == "binary":
        return read_binary(path)
    raise InvalidParametersError(f"unknown format {fmt!r}")
