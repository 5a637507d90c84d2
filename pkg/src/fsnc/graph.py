"""Attributed graphs: on-disk format, validation, GCN normalization, induced subgraphs.

A dataset directory holds::

    meta.json             {name, n_nodes, n_features, n_classes, class_split}
    edges.tsv             one undirected edge per line: ``u<TAB>v``
    labels.tsv            ``node_id<TAB>class_id``
    features.tsv          dense rows: ``node_id<TAB>x_0<TAB>...<TAB>x_{d-1}``
    features.sparse.tsv   or sparse triplets: ``node_id<TAB>dim<TAB>value``
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp

Features = Union[np.ndarray, sp.csr_array]

SPARSE_DENSITY_THRESHOLD = 0.05


class GraphFormatError(ValueError):
    """Malformed dataset directory; the message names the file and line."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected attributed graph.

    ``adjacency`` stores every edge in both directions with unit weights and
    no self-loops. Labels keep their dataset-wide class ids even on induced
    subgraphs, so ``n_classes`` is the size of the full label space.
    """

    adjacency: sp.csr_array
    features: Features
    labels: np.ndarray
    n_classes: int
    name: str = ""

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    def edge_array(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        coo = sp.triu(self.adjacency, k=1, format="coo")
        edges = np.column_stack([coo.row, coo.col]).astype(np.int64)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        return edges[order]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    @cached_property
    def normalized_adjacency(self) -> sp.csr_array:
        """GCN-normalized adjacency, computed once per graph object."""
        return gcn_normalize(self)


def _validate(g: Graph) -> None:
    a = g.adjacency
    if not isinstance(a, sp.csr_array):
        raise TypeError("adjacency must be a scipy.sparse.csr_array")
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"adjacency must be square, got {a.shape}")
    if g.features.shape[0] != n:
        raise ValueError(f"features have {g.features.shape[0]} rows for {n} nodes")
    if g.labels.shape != (n,):
        raise ValueError(f"labels have shape {g.labels.shape} for {n} nodes")
    if n and (g.labels.min() < 0 or g.labels.max() >= g.n_classes):
        raise ValueError("label out of range [0, n_classes)")
    if not a.has_sorted_indices:
        raise ValueError("CSR column indices must be sorted within each row")
    if a.nnz:
        rows = np.repeat(np.arange(n), np.diff(a.indptr))
        if np.any(rows == a.indices):
            raise ValueError("self-loops are not stored")
        same_row = np.diff(rows) == 0
        if np.any(np.diff(a.indices)[same_row] <= 0):
            raise ValueError("CSR column indices must be strictly increasing")
        if (a != a.T).nnz:
            raise ValueError("adjacency must be symmetric")
    if sp.issparse(g.features):
        values = g.features.data
    else:
        values = np.asarray(g.features)
    if not np.all(np.isfinite(values)):
        raise ValueError("features must be finite")


def adjacency_from_edges(n_nodes: int, edges: np.ndarray) -> sp.csr_array:
    """Symmetric unit-weight CSR from an edge list.

    Duplicates and both orientations collapse; self-loops are dropped.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n_nodes):
        raise ValueError("edge endpoint out of range")
    keep = edges[:, 0] != edges[:, 1]
    u, v = edges[keep, 0], edges[keep, 1]
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    a = sp.coo_array((np.ones(rows.size), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    a.sum_duplicates()
    a.data[:] = 1.0
    a.sort_indices()
    return a


def make_graph(n_nodes, edges, features, labels, n_classes=None, name="") -> Graph:
    labels = np.asarray(labels, dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if labels.size else 0
    if not sp.issparse(features):
        features = np.asarray(features, dtype=np.float64)
    else:
        features = sp.csr_array(features, dtype=np.float64)
    return Graph(adjacency_from_edges(n_nodes, edges), features, labels, int(n_classes), name)


def gcn_normalize(g: Graph) -> sp.csr_array:
    """Return ``D^-1/2 (A + I) D^-1/2`` where ``D`` is the degree matrix of ``A + I``."""
    n = g.n_nodes
    a_hat = (g.adjacency + sp.eye_array(n, format="csr")).tocsr()
    a_hat.sort_indices()
    deg = np.diff(a_hat.indptr).astype(np.float64)  # unit weights: row nnz == degree + 1
    rows = np.repeat(np.arange(n), np.diff(a_hat.indptr))
    # sqrt of the exact integer product: the diagonal comes out as exactly 1/(d+1)
    a_hat.data = 1.0 / np.sqrt(deg[rows] * deg[a_hat.indices])
    return a_hat


def induced_subgraph(g: Graph, keep) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``keep`` with ids renumbered in ascending order.

    Returns the subgraph and ``kept``, the sorted global ids, so that
    ``kept[local] == global``.
    """
    kept = np.unique(np.asarray(list(keep) if not isinstance(keep, np.ndarray) else keep, dtype=np.int64))
    if kept.size == 0:
        raise ValueError("keep set is empty")
    if kept[0] < 0 or kept[-1] >= g.n_nodes:
        raise ValueError("keep set contains an invalid node id")
    adj = g.adjacency[kept][:, kept].tocsr()
    adj.sort_indices()
    feats = g.features[kept]
    if sp.issparse(feats):
        feats = sp.csr_array(feats)
    sub = Graph(adj, feats, g.labels[kept].copy(), g.n_classes, g.name)
    return sub, kept


# --------------------------------------------------------------------------- I/O


def read_meta(path) -> dict:
    path = Path(path)
    meta_file = path / "meta.json"
    if not meta_file.is_file():
        raise GraphFormatError(f"{meta_file}: missing file")
    try:
        meta = json.loads(meta_file.read_text())
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"{meta_file}:{e.lineno}: invalid JSON ({e.msg})") from e
    for key in ("n_nodes", "n_features", "n_classes"):
        if key not in meta:
            raise GraphFormatError(f"{meta_file}: missing key {key!r}")
    return meta


def _rows(path: Path):
    with path.open() as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if line and not line.startswith("#"):
                yield lineno, line.split()


def _parse_int(tok: str, path: Path, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: expected an integer, got {tok!r}") from None


def _check_node(node: int, n: int, path: Path, lineno: int) -> int:
    if not 0 <= node < n:
        raise GraphFormatError(f"{path}:{lineno}: node id {node} out of range [0, {n})")
    return node


def load_graph(path) -> Graph:
    """Load and validate a dataset directory."""
    path = Path(path)
    meta = read_meta(path)
    n, d, c = int(meta["n_nodes"]), int(meta["n_features"]), int(meta["n_classes"])

    edge_file = path / "edges.tsv"
    if not edge_file.is_file():
        raise GraphFormatError(f"{edge_file}: missing file")
    edges = []
    for lineno, tok in _rows(edge_file):
        if len(tok) != 2:
            raise GraphFormatError(f"{edge_file}:{lineno}: expected 2 columns, got {len(tok)}")
        u = _check_node(_parse_int(tok[0], edge_file, lineno), n, edge_file, lineno)
        v = _check_node(_parse_int(tok[1], edge_file, lineno), n, edge_file, lineno)
        if u == v:
            raise GraphFormatError(f"{edge_file}:{lineno}: self-loop on node {u}")
        edges.append((u, v))

    label_file = path / "labels.tsv"
    if not label_file.is_file():
        raise GraphFormatError(f"{label_file}: missing file")
    labels = np.full(n, -1, dtype=np.int64)
    for lineno, tok in _rows(label_file):
        if len(tok) != 2:
            raise GraphFormatError(f"{label_file}:{lineno}: expected 2 columns, got {len(tok)}")
        node = _check_node(_parse_int(tok[0], label_file, lineno), n, label_file, lineno)
        y = _parse_int(tok[1], label_file, lineno)
        if not 0 <= y < c:
            raise GraphFormatError(f"{label_file}:{lineno}: label {y} out of range [0, {c})")
        if labels[node] != -1:
            raise GraphFormatError(f"{label_file}:{lineno}: duplicate label for node {node}")
        labels[node] = y
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise GraphFormatError(
            f"{label_file}: {missing.size} of n_nodes={n} nodes have no label (first: {missing[0]})"
        )
    absent = np.flatnonzero(np.bincount(labels, minlength=c) == 0)
    if absent.size:
        raise GraphFormatError(f"{label_file}: class {absent[0]} labels no node (n_classes={c})")

    features = _load_features(path, n, d)
    try:
        return make_graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), features, labels, c,
                          meta.get("name", path.name))
    except ValueError as e:
        raise GraphFormatError(f"{path}: {e}") from e


def _load_features(path: Path, n: int, d: int) -> Features:
    dense_file = path / "features.tsv"
    sparse_file = path / "features.sparse.tsv"
    if sparse_file.is_file():
        rows, cols, vals = [], [], []
        for lineno, tok in _rows(sparse_file):
            if len(tok) != 3:
                raise GraphFormatError(f"{sparse_file}:{lineno}: expected 3 columns, got {len(tok)}")
            rows.append(_check_node(_parse_int(tok[0], sparse_file, lineno), n, sparse_file, lineno))
            dim = _parse_int(tok[1], sparse_file, lineno)
            if not 0 <= dim < d:
                raise GraphFormatError(f"{sparse_file}:{lineno}: dim {dim} out of range [0, {d})")
            cols.append(dim)
            try:
                vals.append(float(tok[2]))
            except ValueError:
                raise GraphFormatError(f"{sparse_file}:{lineno}: bad value {tok[2]!r}") from None
        x = sp.coo_array((np.array(vals, dtype=np.float64), (np.array(rows, dtype=np.int64),
                          np.array(cols, dtype=np.int64))), shape=(n, d)).tocsr()
        x.sum_duplicates()
        x.sort_indices()
        return _choose_storage(x)
    if dense_file.is_file():
        x = np.zeros((n, d), dtype=np.float64)
        seen = np.zeros(n, dtype=bool)
        for lineno, tok in _rows(dense_file):
            if len(tok) != d + 1:
                raise GraphFormatError(
                    f"{dense_file}:{lineno}: expected {d + 1} columns (node id + n_features={d}), got {len(tok)}"
                )
            node = _check_node(_parse_int(tok[0], dense_file, lineno), n, dense_file, lineno)
            try:
                x[node] = [float(t) for t in tok[1:]]
            except ValueError:
                raise GraphFormatError(f"{dense_file}:{lineno}: non-numeric feature value") from None
            seen[node] = True
        if not seen.all():
            raise GraphFormatError(
                f"{dense_file}: {int((~seen).sum())} of n_nodes={n} nodes have no feature row"
            )
        return _choose_storage(x)
    raise GraphFormatError(f"{path}: missing features.tsv or features.sparse.tsv")


def _choose_storage(x) -> Features:
    n, d = x.shape
    nnz = x.nnz if sp.issparse(x) else int(np.count_nonzero(x))
    density = nnz / max(n * d, 1)
    if density < SPARSE_DENSITY_THRESHOLD:
        return sp.csr_array(x)
    return x.toarray() if sp.issparse(x) else np.asarray(x)


def _fmt(v: float) -> str:
    return repr(float(v)) if v != int(v) else str(int(v))


def save_graph(g: Graph, path, class_split: dict | None = None) -> Path:
    """Write ``g`` in the dataset-directory format; features go sparse below 5% density."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": g.name or path.name,
        "n_nodes": g.n_nodes,
        "n_features": g.n_features,
        "n_classes": g.n_classes,
    }
    if class_split is not None:
        meta["class_split"] = {k: sorted(int(c) for c in v) for k, v in class_split.items()}
    (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    with (path / "edges.tsv").open("w") as f:
        for u, v in g.edge_array():
            f.write(f"{u}\t{v}\n")
    with (path / "labels.tsv").open("w") as f:
        for i, y in enumerate(g.labels):
            f.write(f"{i}\t{y}\n")

    for stale in ("features.tsv", "features.sparse.tsv"):
        (path / stale).unlink(missing_ok=True)
    x = g.features
    nnz = x.nnz if sp.issparse(x) else int(np.count_nonzero(x))
    if nnz / max(g.n_nodes * g.n_features, 1) < SPARSE_DENSITY_THRESHOLD:
        coo = sp.coo_array(sp.csr_array(x))
        order = np.lexsort((coo.col, coo.row))
        with (path / "features.sparse.tsv").open("w") as f:
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                f.write(f"{r}\t{c}\t{_fmt(v)}\n")
    else:
        dense = x.toarray() if sp.issparse(x) else x
        with (path / "features.tsv").open("w") as f:
            for i, row in enumerate(dense):
                f.write(str(i) + "\t" + "\t".join(_fmt(v) for v in row) + "\n")
    return path
