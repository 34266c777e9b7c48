"""Plain-text matrix files.

Layout: '#' comment lines are ignored wherever they appear; the first
data line holds the row count R; each of the following R data lines
holds 2C whitespace-separated decimal floats, one (re, im) pair per
entry, row major. Square observables have R = C = N. Decoupling maps
are rectangular and carry ``s-matrix rows=.. cols=.. K=..`` in a
comment so the model space can be rebuilt. Values are written with 17
significant digits, enough to round-trip float64 exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, MatrixFileError
from ..spaces import ModelSpace, ObservableMatrix, validate_hermitian
from ..transform import DecouplingMap, DirectProvenance

__all__ = [
    "write_matrix",
    "read_matrix",
    "write_observable",
    "read_observable",
    "write_decoupling_map",
    "read_decoupling_map",
    "write_effective",
]

_FMT = "{:.17g}"


def write_matrix(path, matrix, comments=()) -> None:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"can only write 2-D matrices, got ndim={m.ndim}")
    lines = [f"# {c}" for c in comments]
    lines.append(str(m.shape[0]))
    for row in m:
        lines.append(" ".join(f"{_FMT.format(z.real)} {_FMT.format(z.imag)}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path):
    """Parse a matrix file into ``(complex matrix, comment list)``.

    The column count is taken from the rows themselves, so rectangular
    data reads back exactly as written.
    """
    rows = None
    data: list[list[float]] = []
    comments: list[str] = []
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            comments.append(text[1:].strip())
            continue
        if rows is None:
            try:
                rows = int(text)
            except ValueError as exc:
                raise MatrixFileError(f"{path}:{ln}: expected the row count, got {text!r}") from exc
            if rows < 0:
                raise MatrixFileError(f"{path}:{ln}: negative row count")
            continue
        try:
            values = [float(token) for token in text.split()]
        except ValueError as exc:
            raise MatrixFileError(f"{path}:{ln}: non-numeric entry") from exc
        if len(values) % 2:
            raise MatrixFileError(f"{path}:{ln}: odd float count; entries are (re, im) pairs")
        data.append(values)
    if rows is None:
        raise MatrixFileError(f"{path}: missing row count line")
    if len(data) != rows:
        raise MatrixFileError(f"{path}: declared {rows} rows, found {len(data)}")
    if rows == 0:
        return np.zeros((0, 0), dtype=np.complex128), comments
    widths = {len(r) for r in data}
    if len(widths) != 1:
        raise MatrixFileError(f"{path}: rows have inconsistent entry counts")
    cols = widths.pop() // 2
    if cols == 0:
        raise MatrixFileError(f"{path}: rows carry no entries")
    flat = np.array(data, dtype=float).reshape(rows, cols, 2)
    return np.ascontiguousarray(flat[..., 0] + 1j * flat[..., 1]), comments


def read_observable(path):
    """Square Hermitian matrix file -> (ObservableMatrix, comments)."""
    m, comments = read_matrix(path)
    if m.shape[0] != m.shape[1]:
        raise MatrixFileError(f"{path}: observable must be square, got {m.shape}")
    return validate_hermitian(m), comments


def write_observable(path, obs: ObservableMatrix, comments=()) -> None:
    write_matrix(path, obs.matrix, comments)


def _parse_fields(comment: str) -> dict[str, str]:
    out = {}
    for token in comment.split():
        if "=" in token:
            key, _, value = token.partition("=")
            out[key] = value
    return out


def write_decoupling_map(path, dm: DecouplingMap, extra_comments=()) -> None:
    ms = dm.model_space
    k = ",".join(str(i) for i in ms.indices)
    comments = [f"s-matrix rows={ms.total_dim - ms.dim} cols={ms.dim} K={k}"]
    if isinstance(dm.provenance, DirectProvenance) and dm.provenance.indices:
        comments.append("J=" + ",".join(str(i) for i in dm.provenance.indices))
    comments.extend(extra_comments)
    write_matrix(path, dm.s, comments)


def read_decoupling_map(path) -> DecouplingMap:
    m, comments = read_matrix(path)
    header = next((c for c in comments if c.startswith("s-matrix")), None)
    if header is None:
        raise MatrixFileError(f"{path}: missing 's-matrix' header comment")
    fields = _parse_fields(header)
    try:
        rows = int(fields["rows"])
        cols = int(fields["cols"])
        kset = tuple(int(t) for t in fields["K"].split(","))
    except (KeyError, ValueError) as exc:
        raise MatrixFileError(f"{path}: malformed s-matrix header {header!r}") from exc
    if rows == 0:
        m = np.zeros((0, cols), dtype=np.complex128)
    if m.shape != (rows, cols):
        raise MatrixFileError(f"{path}: data shape {m.shape} does not match header ({rows}, {cols})")
    indices = None
    for comment in comments:
        extra = _parse_fields(comment)
        if "J" in extra:
            try:
                indices = tuple(int(t) for t in extra["J"].split(","))
            except ValueError as exc:
                raise MatrixFileError(f"{path}: malformed J field in {comment!r}") from exc
    ms = ModelSpace(rows + cols, kset)
    s = np.ascontiguousarray(m)
    s.setflags(write=False)
    return DecouplingMap(ms, s, DirectProvenance(indices) if indices else None)


def write_effective(path, op, *, residual: float | None = None, extra_comments=()) -> None:
    """Effective-operator file with provenance comments (K, J, residual)."""
    ms = op.model_space
    comments = ["K=" + ",".join(str(i) for i in ms.indices)]
    provenance = getattr(op.decoupling, "provenance", None)
    if isinstance(provenance, DirectProvenance) and provenance.indices:
        comments.append("J=" + ",".join(str(i) for i in provenance.indices))
    if residual is not None:
        comments.append(f"residual={residual:.6e}")
    comments.extend(extra_comments)
    write_matrix(path, op.matrix, comments)
