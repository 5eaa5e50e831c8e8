"""Readers and writers for the text formats used by the command line."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import InputError

FORMAT_VERSION = 1


def read_edge_list(path):
    """Edges ``u v [w]`` per line; ``#`` starts a comment. Labels stay strings."""
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 2:
            edges.append((parts[0], parts[1], 1.0))
        elif len(parts) == 3:
            try:
                edges.append((parts[0], parts[1], float(parts[2])))
            except ValueError:
                raise InputError(f"{path}:{lineno}: weight is not a number") from None
        else:
            raise InputError(f"{path}:{lineno}: expected 'u v [w]'")
    return edges


def _numeric_rows(path):
    text = Path(path).read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]  # header
    try:
        return [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None


def read_matrix_csv(path) -> np.ndarray:
    """Dense matrix from CSV, one row per line, optional header row."""
    rows = _numeric_rows(path)
    if not rows:
        return np.zeros((0, 0))
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows have different lengths")
    return np.array(rows, dtype=float)


def read_point_cloud_csv(path) -> np.ndarray:
    """Points as rows of ambient coordinates."""
    X = read_matrix_csv(path)
    if X.size == 0:
        return np.zeros((0, 1))
    return X


def write_point_cloud_csv(path, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def write_generator(path, L, sparse: bool = False):
    """Dense CSV, or ``i j value`` lines when ``sparse``."""
    M = L.matrix if hasattr(L, "matrix") else sp.csr_array(L)
    with open(path, "w", newline="") as fh:
        if sparse:
            coo = M.tocoo()
            fh.write(f"# n {M.shape[0]}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {float(v)!r}\n")
        else:
            w = csv.writer(fh)
            for row in M.toarray():
                w.writerow([repr(float(v)) for v in row])


def read_generator(path, n=None) -> sp.csr_array:
    """Inverse of :func:`write_generator`; the format is sniffed from the content."""
    text = Path(path).read_text()
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    if "," in first:
        return sp.csr_array(read_matrix_csv(path))
    rows, cols, vals = [], [], []
    for ln in text.splitlines():
        if ln.startswith("# n "):
            n = int(ln.split()[2])
            continue
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        i, j, v = ln.split()
        rows.append(int(i))
        cols.append(int(j))
        vals.append(float(v))
    if n is None:
        n = max(max(rows), max(cols)) + 1
    return sp.csr_array((vals, (rows, cols)), shape=(n, n))


def read_measure_csv(path, space) -> np.ndarray:
    """Rows ``point-id, weight``; ids are labels of ``space`` or integer indices."""
    m = np.zeros(space.n)
    labels = {str(p): i for i, p in enumerate(space.points)}
    for row in csv.reader(io.StringIO(Path(path).read_text())):
        if not row or row[0].strip().startswith("#"):
            continue
        key, val = row[0].strip(), row[1].strip()
        try:
            w = float(val)
        except ValueError:
            continue  # header
        if key in labels:
            m[labels[key]] += w
        else:
            try:
                m[int(key)] += w
            except (ValueError, IndexError):
                raise InputError(f"{path}: unknown point {key!r}") from None
    return m


def write_plan(path, plan):
    with open(path, "w") as fh:
        fh.write(f"# p {plan.p} cost {plan.cost!r}\n")
        for i, j, v in plan.to_coo():
            fh.write(f"{i} {j} {v!r}\n")


def dump_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=False, default=_jsonable)
    if path is None or str(path) == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")


def dump_csv(path, rows, columns, meta):
    """Table with ``# key: value`` metadata lines ahead of the header."""
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {json.dumps(v, default=_jsonable)}\n")
    w = csv.writer(buf)
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    if path is None or str(path) == "-":
        print(buf.getvalue(), end="")
    else:
        Path(path).write_text(buf.getvalue())


def _cell(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return v


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")
