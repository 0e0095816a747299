"""Dense matrix helpers, column normalization and matrix file IO.

Columns are samples (pixels) throughout the package; rows are bands.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MatrixParseError(ValueError):
    """Raised when a matrix file cannot be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-d float64 array with at least one row and column."""
    A = np.array(M, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


@dataclass(frozen=True)
class NormalizedData:
    """Unit-column data together with the original column norms.

    Attributes
    ----------
    X : ndarray, shape (m, k)
        Retained columns scaled to unit l2 norm.
    norms : ndarray, shape (k,)
        Original l2 norm of each retained column.
    kept : ndarray, shape (k,)
        Indices of the retained columns in the raw input.
    """

    X: np.ndarray
    norms: np.ndarray
    kept: np.ndarray

    def restore(self):
        """Undo the scaling of the retained columns."""
        return self.X * self.norms[None, :]


def normalize_columns(X0):
    """Scale every column of `X0` to unit l2 norm.

    Zero columns are not allowed here; use `drop_small_columns` with a zero
    threshold to discard them first.
    """
    X0 = as_matrix(X0, "X0")
    norms = np.linalg.norm(X0, axis=0)
    if not np.any(norms > 0):
        raise ValueError("no nonzero columns")
    if np.any(norms == 0):
        raise ValueError("zero columns cannot be normalized; use drop_small_columns")
    return NormalizedData(X=X0 / norms, norms=norms, kept=np.arange(X0.shape[1]))


def drop_small_columns(X0, rel_threshold):
    """Discard columns whose norm is below ``rel_threshold * max_j ||X0_j||``.

    The comparison is strict, so a column sitting exactly on the threshold is
    kept. Zero columns are always removed. The survivors are normalized and
    their original positions recorded in ``kept``.
    """
    if not 0 <= rel_threshold < 1:
        raise ValueError("rel_threshold must lie in [0, 1)")
    X0 = as_matrix(X0, "X0")
    norms = np.linalg.norm(X0, axis=0)
    top = norms.max()
    if top == 0:
        raise ValueError("no nonzero columns")
    keep = (norms >= rel_threshold * top) & (norms > 0)
    if not keep.any():
        raise ValueError("all columns were pruned")
    kept = np.flatnonzero(keep)
    return NormalizedData(X=X0[:, kept] / norms[kept], norms=norms[kept], kept=kept)


def _infer_format(path, fmt):
    if fmt is not None:
        fmt = fmt.lower()
    else:
        fmt = Path(path).suffix.lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"unsupported matrix format {fmt!r}; expected csv or json")
    return fmt


def parse_csv(text):
    """Parse row-per-line, comma separated decimal text into a matrix."""
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            row = [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise MatrixParseError(f"non-numeric token {bad.strip()!r}", lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MatrixParseError(f"expected {width} values, found {len(row)}", lineno)
        rows.append(row)
    if not rows:
        raise MatrixParseError("empty matrix")
    M = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        r = int(np.flatnonzero(~np.isfinite(M).all(axis=1))[0])
        raise MatrixParseError("non-finite value", r + 1)
    return M


def _is_float(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def format_csv(M):
    M = as_matrix(M)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in M)


def matrix_to_json(M):
    M = as_matrix(M)
    return {"rows": M.shape[0], "cols": M.shape[1], "data": [float(v) for v in M.ravel()]}


def matrix_from_json(obj):
    try:
        r, c, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise MatrixParseError(f"malformed matrix JSON: {exc}") from None
    if len(data) != r * c:
        raise MatrixParseError(f"expected {r * c} entries, found {len(data)}")
    return as_matrix(np.asarray(data, dtype=np.float64).reshape(r, c))


def read_matrix(path, fmt=None):
    """Read a matrix from a ``csv`` or ``json`` file.

    The format defaults to the file suffix.
    """
    fmt = _infer_format(path, fmt)
    text = Path(path).read_text()
    if fmt == "csv":
        return parse_csv(text)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixParseError(exc.msg, exc.lineno) from None
    return matrix_from_json(obj)


def write_matrix(path, M, fmt=None):
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        Path(path).write_text(format_csv(M))
    else:
        Path(path).write_text(json.dumps(matrix_to_json(M)))


def write_pgm(path, image):
    """Write a 2-d array as an ASCII (P2) 8-bit grayscale image scaled by its max."""
    image = np.asarray(image, dtype=np.float64)
    top = image.max() if image.size else 0.0
    scaled = np.zeros(image.shape, dtype=int) if top <= 0 else np.rint(np.clip(image, 0, None) / top * 255).astype(int)
    h, w = scaled.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join(str(v) for v in row) for row in scaled]
    Path(path).write_text("\n".join(lines) + "\n")
