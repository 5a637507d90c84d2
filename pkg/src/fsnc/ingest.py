"""Converters from common raw citation-network layouts into the dataset-directory format."""

from __future__ import annotations

import logging
import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import Graph, GraphFormatError, make_graph

log = logging.getLogger(__name__)


@dataclass
class IngestStats:
    edge_lines: int = 0
    duplicate_edges: int = 0
    self_loops: int = 0
    dangling_edges: int = 0


def _find_one(directory: Path, suffix: str) -> Path:
    hits = sorted(directory.glob(f"*{suffix}"))
    if len(hits) != 1:
        raise GraphFormatError(f"{directory}: expected exactly one *{suffix} file, found {len(hits)}")
    return hits[0]


def _collapse(n_nodes: int, pairs: list[tuple[int, int]], stats: IngestStats) -> np.ndarray:
    seen = set()
    out = []
    for u, v in pairs:
        if u == v:
            stats.self_loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            stats.duplicate_edges += 1
            continue
        seen.add(key)
        out.append(key)
    return np.array(sorted(out), dtype=np.int64).reshape(-1, 2)


def read_linqs(directory, name: str | None = None) -> tuple[Graph, list[str], IngestStats]:
    """Read a ``*.content`` / ``*.cites`` pair (LINQS layout, string paper ids).

    Nodes are numbered in ``.content`` order; class ids follow the sorted
    class names. Citations touching unknown papers are dropped and counted.
    """
    directory = Path(directory)
    content = _find_one(directory, ".content")
    cites = _find_one(directory, ".cites")

    ids: dict[str, int] = {}
    rows: list[np.ndarray] = []
    raw_labels: list[str] = []
    width = None
    with content.open() as f:
        for lineno, line in enumerate(f, start=1):
            tok = line.split()
            if not tok:
                continue
            if len(tok) < 3:
                raise GraphFormatError(f"{content}:{lineno}: expected id, features, label")
            if width is None:
                width = len(tok)
            elif len(tok) != width:
                raise GraphFormatError(f"{content}:{lineno}: expected {width} columns, got {len(tok)}")
            if tok[0] in ids:
                raise GraphFormatError(f"{content}:{lineno}: duplicate paper id {tok[0]!r}")
            ids[tok[0]] = len(ids)
            try:
                rows.append(np.array(tok[1:-1], dtype=np.float64))
            except ValueError:
                raise GraphFormatError(f"{content}:{lineno}: non-numeric feature value") from None
            raw_labels.append(tok[-1])
    if not ids:
        raise GraphFormatError(f"{content}: empty feature table")

    class_names = sorted(set(raw_labels))
    class_of = {c: i for i, c in enumerate(class_names)}
    labels = np.array([class_of[c] for c in raw_labels], dtype=np.int64)
    features = sp.csr_array(np.vstack(rows))

    stats = IngestStats()
    pairs = []
    with cites.open() as f:
        for lineno, line in enumerate(f, start=1):
            tok = line.split()
            if not tok:
                continue
            if len(tok) != 2:
                raise GraphFormatError(f"{cites}:{lineno}: expected 2 columns, got {len(tok)}")
            stats.edge_lines += 1
            if tok[0] not in ids or tok[1] not in ids:
                stats.dangling_edges += 1
                continue
            pairs.append((ids[tok[0]], ids[tok[1]]))
    n = len(ids)
    edges = _collapse(n, pairs, stats)
    g = make_graph(n, edges, features, labels, len(class_names), name or content.stem)
    return g, class_names, stats


def _load_pickle(path: Path):
    if not path.is_file():
        raise GraphFormatError(f"{path}: missing file")
    with path.open("rb") as f:
        return pickle.load(f, encoding="latin1")


def read_planetoid(directory, name: str | None = None) -> tuple[Graph, list[str], IngestStats]:
    """Read the ``ind.<name>.{allx,ally,tx,ty,graph,test.index}`` layout.

    Test indices missing from the file (CiteSeer has isolated test nodes)
    get all-zero feature rows and the label of a zero one-hot row, class 0.
    """
    directory = Path(directory)
    if name is None:
        hits = sorted(directory.glob("ind.*.graph"))
        if len(hits) != 1:
            raise GraphFormatError(f"{directory}: cannot infer dataset name from ind.*.graph files")
        name = hits[0].name.split(".")[1]
    stem = directory / f"ind.{name}"
    allx = sp.csr_array(_load_pickle(Path(f"{stem}.allx")), dtype=np.float64)
    tx = sp.csr_array(_load_pickle(Path(f"{stem}.tx")), dtype=np.float64)
    ally = np.asarray(_load_pickle(Path(f"{stem}.ally")))
    ty = np.asarray(_load_pickle(Path(f"{stem}.ty")))
    graph = _load_pickle(Path(f"{stem}.graph"))
    index_file = Path(f"{stem}.test.index")
    if not index_file.is_file():
        raise GraphFormatError(f"{index_file}: missing file")
    test_index = np.array([int(t) for t in index_file.read_text().split()], dtype=np.int64)
    if allx.shape[0] == 0 and tx.shape[0] == 0:
        raise GraphFormatError(f"{stem}.allx: empty feature table")

    sorted_test = np.sort(test_index)
    lo, hi = int(sorted_test[0]), int(sorted_test[-1])
    span = hi - lo + 1
    tx_full = sp.lil_array((span, tx.shape[1]))
    tx_full[sorted_test - lo, :] = tx
    ty_full = np.zeros((span, ty.shape[1]))
    ty_full[sorted_test - lo] = ty

    x = sp.vstack([allx, sp.csr_array(tx_full)]).tocsr()
    y = np.vstack([ally, ty_full])
    # tx row i belongs to node test_index[i] (file order); move rows to their true ids
    perm = np.arange(x.shape[0])
    perm[test_index] = sorted_test
    x = sp.csr_array(x[perm])
    labels = y[perm].argmax(axis=1).astype(np.int64)
    n = x.shape[0]

    stats = IngestStats()
    pairs = []
    for u, nbrs in graph.items():
        for v in nbrs:
            stats.edge_lines += 1
            if not (0 <= u < n and 0 <= v < n):
                stats.dangling_edges += 1
                continue
            pairs.append((int(u), int(v)))
    edges = _collapse(n, pairs, stats)
    g = make_graph(n, edges, x, labels, y.shape[1], name)
    return g, [f"class_{i}" for i in range(y.shape[1])], stats


READERS = {"linqs": read_linqs, "planetoid": read_planetoid}


def table_row(g: Graph, split_sizes=None) -> str:
    """One line in the layout of the benchmark statistics table."""
    cols = [g.name, f"{g.n_nodes:,}", f"{g.n_edges:,}", f"{g.n_features:,}", str(g.n_classes)]
    if split_sizes is not None:
        cols += [str(s) for s in split_sizes]
    return "  ".join(cols)


TABLE_HEADER = "Dataset  #Nodes  #Edges  #Features  |C|  |C_train|  |C_dev|  |C_test|"
