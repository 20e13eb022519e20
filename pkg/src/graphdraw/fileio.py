"""Reading graphs, writing layouts.

Two input formats: a plain edge list (one "u v" pair per line, `#`
comments, optional single-integer header fixing the node count) and the
Matrix Market coordinate format, where the nonzero pattern of a square
matrix is read as an undirected graph. Layouts go out as JSON or SVG with
byte-deterministic serialization.
"""

from __future__ import annotations

import json

import numpy as np

from .graph import Graph, build_graph
from .metrics import StressReport

__all__ = [
    "parse_edge_list",
    "parse_matrix_market",
    "load_graph_text",
    "write_edge_list",
    "layout_json_bytes",
    "parse_layout_json",
    "layout_svg_bytes",
]


class FormatError(ValueError):
    pass


def parse_edge_list(text: str) -> Graph:
    """Edge list with 0-based indices; node count = max index + 1 unless a
    lone integer on the first data line overrides it."""
    edges = []
    header = None
    seen_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1 and not seen_data:
            seen_data = True
            try:
                header = int(parts[0])
            except ValueError:
                raise FormatError(f"line {lineno}: expected an integer node "
                                  f"count, got {parts[0]!r}")
            if header < 1:
                raise FormatError(f"line {lineno}: node count must be >= 1")
            continue
        seen_data = True
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer endpoint in {raw!r}")
        if u < 0 or v < 0:
            raise FormatError(f"line {lineno}: negative vertex index")
        edges.append((u, v))
    if not edges and header is None:
        raise FormatError("no edges found")
    n = header if header is not None else max(max(e) for e in edges) + 1
    if edges and max(max(e) for e in edges) >= n:
        raise FormatError(f"vertex index {max(max(e) for e in edges)} "
                          f"outside declared node count {n}")
    return build_graph(n, edges)


def parse_matrix_market(text: str) -> Graph:
    """Coordinate-format Matrix Market: the nonzero pattern of a square
    matrix, symmetrized, diagonal dropped, values ignored."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise FormatError("missing %%MatrixMarket header")
    fields = lines[0].split()
    if len(fields) < 4:
        raise FormatError("malformed header line")
    obj, fmt = fields[1].lower(), fields[2].lower()
    if obj != "matrix":
        raise FormatError(f"unsupported object {obj!r}")
    if fmt != "coordinate":
        raise FormatError(f"unsupported format {fmt!r} (only coordinate)")

    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise FormatError("missing size line")
    sizeno, size_line = body[0]
    parts = size_line.split()
    if len(parts) != 3:
        raise FormatError(f"line {sizeno}: expected 'rows cols nnz'")
    try:
        rows, cols, nnz = (int(p) for p in parts)
    except ValueError:
        raise FormatError(f"line {sizeno}: non-integer size entry")
    if rows != cols:
        raise FormatError(f"matrix is {rows}x{cols}, need square")
    entries = body[1:]
    if len(entries) != nnz:
        raise FormatError(f"expected {nnz} entries, found {len(entries)}")
    edges = []
    for lineno, ln in entries:
        parts = ln.split()
        if len(parts) < 2:
            raise FormatError(f"line {lineno}: expected 'row col [value]'")
        try:
            r, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer coordinate")
        if not (1 <= r <= rows and 1 <= c <= cols):
            raise FormatError(f"line {lineno}: coordinate out of range")
        if r != c:
            edges.append((r - 1, c - 1))
    return build_graph(rows, edges)


def load_graph_text(text: str) -> Graph:
    if text.lstrip().startswith("%%MatrixMarket"):
        return parse_matrix_market(text)
    return parse_edge_list(text)


def write_edge_list(g: Graph) -> bytes:
    lines = [f"{g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return ("\n".join(lines) + "\n").encode("ascii")


def layout_json_bytes(g: Graph, pos: np.ndarray, report: StressReport | None = None,
                      meta: dict | None = None) -> bytes:
    doc = {
        "nodes": [[float(c) for c in row] for row in np.asarray(pos)],
        "edges": [[int(u), int(v)] for u, v in g.edges],
        "meta": dict(meta or {}),
    }
    if report is not None:
        doc["meta"]["stress"] = {
            "raw": report.raw,
            "alpha": report.alpha,
            "scale_invariant": report.scale_invariant,
            "normalized": report.normalized,
        }
    # repr-exact floats: parse(write(x)) == x and identical inputs give
    # identical bytes
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("ascii")


def parse_layout_json(data: bytes):
    doc = json.loads(data.decode("ascii"))
    pos = np.array(doc["nodes"], dtype=np.float64)
    edges = [(int(u), int(v)) for u, v in doc["edges"]]
    n = pos.shape[0]
    return build_graph(n, edges), pos, doc.get("meta", {})


_SVG_SIZE = 720.0
_SVG_PAD = 24.0


def layout_svg_bytes(g: Graph, pos: np.ndarray) -> bytes:
    """Edges as lines under nodes as circles, viewport-fitted."""
    pos = np.asarray(pos, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("svg output needs an (n, 2) layout")
    if not np.all(np.isfinite(pos)):
        raise ValueError("layout contains non-finite coordinates")
    lo = pos.min(axis=0)
    span = float((pos.max(axis=0) - lo).max())
    if span <= 0.0:
        span = 1.0
    inner = _SVG_SIZE - 2 * _SVG_PAD
    xy = (pos - lo) / span * inner + _SVG_PAD
    # svg y grows downward; flip so the layout keeps its orientation
    ys = _SVG_SIZE - xy[:, 1]
    xs = xy[:, 0]
    r = max(2.0, min(6.0, 60.0 / max(1.0, np.sqrt(g.n))))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE:.0f}" '
        f'height="{_SVG_SIZE:.0f}" viewBox="0 0 {_SVG_SIZE:.0f} {_SVG_SIZE:.0f}">',
        f'<rect width="100%" height="100%" fill="white"/>',
    ]
    for u, v in g.edges:
        out.append(f'<line x1="{xs[u]:.3f}" y1="{ys[u]:.3f}" '
                   f'x2="{xs[v]:.3f}" y2="{ys[v]:.3f}" '
                   f'stroke="#4878a8" stroke-width="1.2"/>')
    for i in range(g.n):
        out.append(f'<circle cx="{xs[i]:.3f}" cy="{ys[i]:.3f}" r="{r:.2f}" '
                   f'fill="#1d3557"/>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("ascii")
