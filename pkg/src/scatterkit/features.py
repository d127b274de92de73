"""Feature standardization and the binary feature-file format.

SCF1 layout (all integers little-endian):
  magic b"SCF1" | version u32 | width u64 | rows u64 | labels-flag u8 |
  path-table length u64 | path-table UTF-8 bytes |
  rows x width float32 row-major | labels u32 x rows (if flag)

Storage is 32-bit for size; computation upstream/downstream stays 64-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ParameterError

SCF_MAGIC = b"SCF1"
SCS_MAGIC = b"SCS1"
FORMAT_VERSION = 1
EPSILON = 1e-12


@dataclass
class Standardizer:
    """Per-feature affine map v -> (v - mean) * inv_std.

    Columns whose training std falls below epsilon get inv_std = 0 (the
    feature carries no information and is zeroed); their indices are kept
    in constant_columns.
    """
    mean: np.ndarray
    inv_std: np.ndarray
    epsilon: float = EPSILON
    constant_columns: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        if self.mean.shape != self.inv_std.shape or self.mean.ndim != 1:
            raise ParameterError("mean and inv_std must be equal-length vectors")


def fit_standardizer(train: np.ndarray, epsilon: float = EPSILON) -> Standardizer:
    """Per-column mean and population (1/n) standard deviation."""
    X = np.asarray(train, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ParameterError("standardizer needs a matrix with >= 2 rows")
    mean = X.mean(axis=0)
    std = np.sqrt(((X - mean) ** 2).mean(axis=0))
    constant = std < epsilon
    inv_std = np.zeros_like(std)
    inv_std[~constant] = 1.0 / std[~constant]
    return Standardizer(mean=mean, inv_std=inv_std, epsilon=epsilon,
                        constant_columns=np.flatnonzero(constant))


def apply_standardizer(s: Standardizer, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != s.mean.shape[0]:
        raise ParameterError(
            f"feature length {v.shape[-1]} != standardizer length {s.mean.shape[0]}")
    return (v - s.mean) * s.inv_std


# ---- binary files ----

class _Reader:
    """Sequential binary reader that reports the byte offset of failures."""

    def __init__(self, f):
        self.f = f
        self.offset = 0

    def read(self, n, what):
        data = self.f.read(n)
        if len(data) != n:
            raise FormatError(
                f"truncated file while reading {what}: wanted {n} bytes, "
                f"got {len(data)}", offset=self.offset)
        self.offset += n
        return data

    def unpack(self, fmt, what):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.read(size, what))


def _read_magic(r: _Reader, magic: bytes):
    got = r.read(len(magic), "magic")
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}", offset=0)
    (version,) = r.unpack("<I", "version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)


def write_features(path, path_table: str, matrix: np.ndarray, labels=None):
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ParameterError("feature matrix must be 2D")
    rows, width = matrix.shape
    if labels is not None:
        labels = np.ascontiguousarray(labels, dtype="<u4")
        if labels.shape != (rows,):
            raise ParameterError(f"labels shape {labels.shape} != ({rows},)")
    table = path_table.encode("utf-8")
    with open(path, "wb") as f:
        f.write(SCF_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<QQBQ", width, rows, int(labels is not None),
                            len(table)))
        f.write(table)
        f.write(matrix.tobytes())
        if labels is not None:
            f.write(labels.tobytes())


def read_features(path):
    """Returns (path_table, matrix float32, labels or None)."""
    with open(path, "rb") as f:
        r = _Reader(f)
        _read_magic(r, SCF_MAGIC)
        width, rows, flag, table_len = r.unpack("<QQBQ", "header")
        if flag not in (0, 1):
            raise FormatError(f"bad labels flag {flag}", offset=r.offset - 9)
        table = r.read(table_len, "path table").decode("utf-8")
        data = r.read(rows * width * 4, "feature rows")
        matrix = np.frombuffer(data, dtype="<f4").reshape(rows, width).copy()
        labels = None
        if flag:
            labels = np.frombuffer(r.read(rows * 4, "labels"), dtype="<u4").copy()
        trailing = f.read(1)
        if trailing:
            raise FormatError("trailing bytes after declared content",
                              offset=r.offset)
    return table, matrix, labels


def write_standardizer(path, s: Standardizer):
    dim = s.mean.shape[0]
    with open(path, "wb") as f:
        f.write(SCS_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Qd", dim, s.epsilon))
        f.write(np.ascontiguousarray(s.mean, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(s.inv_std, dtype="<f8").tobytes())


def read_standardizer(path) -> Standardizer:
    with open(path, "rb") as f:
        r = _Reader(f)
        _read_magic(r, SCS_MAGIC)
        dim, epsilon = r.unpack("<Qd", "header")
        mean = np.frombuffer(r.read(dim * 8, "mean"), dtype="<f8").copy()
        inv_std = np.frombuffer(r.read(dim * 8, "inv_std"), dtype="<f8").copy()
        trailing = f.read(1)
        if trailing:
            raise FormatError("trailing bytes after declared content",
                              offset=r.offset)
    return Standardizer(mean=mean, inv_std=inv_std, epsilon=epsilon,
                        constant_columns=np.flatnonzero(inv_std == 0.0))
