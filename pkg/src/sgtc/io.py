"""Plain-text file formats for tensors, masks and graphs (0-based indices)."""

import json
import math
import pathlib

import numpy as np

from .graphs import RegularGraph
from .masks import SamplingMask


class FormatError(ValueError):
    """Malformed input file."""


def _tokens(text):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise FormatError("empty file")
    return lines


def _ints(line, what):
    try:
        return [int(v) for v in line.split()]
    except ValueError as exc:
        raise FormatError(f"bad {what} line: {line!r}") from exc


def format_tensor(T):
    T = np.asarray(T, dtype=np.float64)
    head = " ".join(str(v) for v in (T.ndim,) + T.shape)
    return head + "\n" + "\n".join(repr(float(v)) for v in T.ravel()) + "\n"


def parse_tensor(text):
    """Parse ``t n_1 .. n_t`` followed by row-major values."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return tensor_from_json(json.loads(text))
    lines = _tokens(text)
    head = _ints(lines[0], "header")
    if len(head) < 2 or head[0] != len(head) - 1:
        raise FormatError(f"tensor header must be 't n_1 .. n_t', got {lines[0]!r}")
    dims = tuple(head[1:])
    try:
        values = np.array(" ".join(lines[1:]).split(), dtype=np.float64)
    except ValueError as exc:
        raise FormatError("non-numeric tensor value") from exc
    if values.size != math.prod(dims):
        raise FormatError(f"expected {math.prod(dims)} values for dims {dims}, got {values.size}")
    if not np.isfinite(values).all():
        raise FormatError("tensor values must be finite")
    return values.reshape(dims)


def tensor_from_json(obj):
    """Tensor embedded in a JSON config: ``{"dims": [...], "values": [...]}``."""
    try:
        dims = tuple(int(n) for n in obj["dims"])
        values = np.asarray(obj["values"], dtype=np.float64).ravel()
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("embedded tensor needs 'dims' and 'values'") from exc
    if values.size != math.prod(dims):
        raise FormatError(f"expected {math.prod(dims)} values for dims {dims}, got {values.size}")
    return values.reshape(dims)


def format_mask(mask):
    head = " ".join(str(v) for v in (mask.order,) + mask.dims + (mask.size,))
    body = "\n".join(" ".join(str(i) for i in row) for row in mask.indices.tolist())
    return head + "\n" + body + "\n"


def parse_mask(text):
    """Parse ``t n_1 .. n_t |E|`` followed by one index tuple per line."""
    lines = _tokens(text)
    head = _ints(lines[0], "header")
    if len(head) < 3 or head[0] != len(head) - 2:
        raise FormatError(f"mask header must be 't n_1 .. n_t |E|', got {lines[0]!r}")
    t, dims, count = head[0], tuple(head[1:-1]), head[-1]
    rows = [_ints(ln, "index") for ln in lines[1:]]
    if len(rows) != count:
        raise FormatError(f"header announces {count} entries, found {len(rows)}")
    if any(len(r) != t for r in rows):
        raise FormatError(f"every index line needs {t} integers")
    try:
        return SamplingMask(dims, np.array(rows, dtype=np.int64).reshape(-1, t))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def format_graph(g):
    body = "\n".join(f"{u} {v}" for u, v in g.edges.tolist())
    return f"{g.n} {g.d}\n{body}\n"


def parse_graph(text):
    """Parse ``n d`` followed by one ``u v`` edge per line."""
    lines = _tokens(text)
    head = _ints(lines[0], "header")
    if len(head) != 2:
        raise FormatError(f"graph header must be 'n d', got {lines[0]!r}")
    edges = [_ints(ln, "edge") for ln in lines[1:]]
    if any(len(e) != 2 for e in edges):
        raise FormatError("every edge line needs two vertices")
    try:
        return RegularGraph(head[0], head[1], np.array(edges, dtype=np.int64).reshape(-1, 2))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def read_tensor(path):
    return parse_tensor(pathlib.Path(path).read_text())


def write_tensor(path, T):
    pathlib.Path(path).write_text(format_tensor(T))


def read_mask(path):
    return parse_mask(pathlib.Path(path).read_text())


def write_mask(path, mask):
    pathlib.Path(path).write_text(format_mask(mask))


def read_graph(path):
    return parse_graph(pathlib.Path(path).read_text())


def write_graph(path, g):
    pathlib.Path(path).write_text(format_graph(g))
