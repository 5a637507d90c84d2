import json
import math

import numpy as np
import pytest
import scipy.sparse as sp

from fsnc.graph import (Graph, GraphFormatError, gcn_normalize, induced_subgraph, load_graph, make_graph,
                        save_graph)

from conftest import planted_graph
from oracles import brute_force_cross_edges, dense_gcn_normalize


def write_dataset(path, n, edges, labels, n_classes, features=None, extra_meta=None):
    path.mkdir(parents=True, exist_ok=True)
    meta = {"name": path.name, "n_nodes": n, "n_features": 2, "n_classes": n_classes}
    meta.update(extra_meta or {})
    (path / "meta.json").write_text(json.dumps(meta))
    (path / "edges.tsv").write_text("".join(f"{u}\t{v}\n" for u, v in edges))
    (path / "labels.tsv").write_text("".join(f"{i}\t{y}\n" for i, y in enumerate(labels)))
    if features is None:
        features = "".join(f"{i}\t1.0\t{i}.5\n" for i in range(n))
    (path / "features.tsv").write_text(features)
    return path


# --------------------------------------------------------------------------- normalization


def test_edgeless_graph_normalizes_to_exact_identity():
    g = make_graph(3, np.empty((0, 2), int), np.ones((3, 2)), [0, 1, 1])
    a = gcn_normalize(g).toarray()
    assert np.array_equal(a, np.eye(3))


def test_single_edge_gives_one_half_everywhere():
    g = make_graph(2, [(0, 1)], np.ones((2, 2)), [0, 1])
    assert np.array_equal(gcn_normalize(g).toarray(), np.full((2, 2), 0.5))


def test_path_graph_entries():
    g = make_graph(3, [(0, 1), (1, 2)], np.ones((3, 2)), [0, 1, 0])
    a = gcn_normalize(g).toarray()
    assert a[0, 1] == pytest.approx(1 / math.sqrt(6), abs=1e-15)
    assert a[1, 1] == pytest.approx(1 / 3, abs=1e-15)
    assert a[0, 2] == 0.0


def test_normalization_matches_dense_oracle_on_random_graphs():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        iu, ju = np.triu_indices(n, k=1)
        mask = rng.random(iu.size) < rng.uniform(0, 0.4)
        edges = np.column_stack([iu[mask], ju[mask]])
        g = make_graph(n, edges, np.zeros((n, 1)), np.zeros(n, int))
        worst = max(worst, np.abs(gcn_normalize(g).toarray() - dense_gcn_normalize(edges, n)).max())
    assert worst <= 1e-12


def test_normalized_entries_in_unit_interval_and_symmetric(planted):
    a = planted.normalized_adjacency
    assert (a.data > 0).all() and (a.data <= 1).all()
    assert abs(a - a.T).max() == 0


def test_isolated_node_row_is_single_unit_diagonal():
    g = make_graph(3, [(0, 1)], np.ones((3, 1)), [0, 0, 0])
    row = g.normalized_adjacency[[2]].toarray()[0]
    assert np.array_equal(row, [0.0, 0.0, 1.0])


# --------------------------------------------------------------------------- construction and validation


def test_reverse_duplicate_edges_collapse_to_one():
    g = make_graph(2, [(0, 1), (1, 0), (0, 1)], np.ones((2, 1)), [0, 0])
    assert g.n_edges == 1
    assert g.edge_array().tolist() == [[0, 1]]


def test_adjacency_invariants(planted):
    a = planted.adjacency
    assert (a != a.T).nnz == 0
    assert a.diagonal().sum() == 0
    for i in range(a.shape[0]):
        cols = a.indices[a.indptr[i]:a.indptr[i + 1]]
        assert (np.diff(cols) > 0).all()


@pytest.mark.parametrize("kwargs, msg", [
    (dict(labels=[0, 2]), "label"),
    (dict(features=np.array([[np.nan], [0.0]])), "finite"),
    (dict(edges=[(0, 5)]), "range"),
])
def test_make_graph_rejects_invalid_input(kwargs, msg):
    args = dict(n_nodes=2, edges=[(0, 1)], features=np.ones((2, 1)), labels=[0, 1], n_classes=2)
    args.update(kwargs)
    with pytest.raises(ValueError, match=msg):
        make_graph(**args)


def test_make_graph_drops_self_loops():
    g = make_graph(2, [(0, 0), (0, 1)], np.ones((2, 1)), [0, 1])
    assert g.adjacency.diagonal().sum() == 0 and g.n_edges == 1


def test_graph_rejects_asymmetric_adjacency():
    a = sp.csr_array(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match="symmetric"):
        Graph(a, np.ones((2, 1)), np.array([0, 1]), 2)


# --------------------------------------------------------------------------- induced subgraphs


def test_triangle_keep_two_nodes():
    g = make_graph(3, [(0, 1), (1, 2), (0, 2)], np.eye(3), [0, 1, 2])
    sub, kept = induced_subgraph(g, [0, 1])
    assert sub.n_nodes == 2 and sub.n_edges == 1
    assert kept.tolist() == [0, 1]


def test_full_keep_is_identity(planted):
    sub, kept = induced_subgraph(planted, np.arange(planted.n_nodes))
    assert np.array_equal(kept, np.arange(planted.n_nodes))
    assert (sub.adjacency != planted.adjacency).nnz == 0
    assert np.array_equal(sub.features, planted.features)
    assert np.array_equal(sub.labels, planted.labels)


def test_subgraph_mapping_preserves_order_and_attributes(planted):
    keep = [50, 3, 17, 90, 4]
    sub, kept = induced_subgraph(planted, keep)
    assert kept.tolist() == sorted(keep)
    assert np.array_equal(sub.features, planted.features[kept])
    assert np.array_equal(sub.labels, planted.labels[kept])
    dense = planted.adjacency.toarray()
    assert np.array_equal(sub.adjacency.toarray(), dense[np.ix_(kept, kept)])


def test_subgraph_composition_equals_inner_keep():
    g = planted_graph(seed=3)
    rng = np.random.default_rng(0)
    outer = np.sort(rng.choice(g.n_nodes, 70, replace=False))
    inner_local = np.sort(rng.choice(70, 30, replace=False))
    once, kept_outer = induced_subgraph(g, outer)
    twice, kept_inner = induced_subgraph(once, inner_local)
    direct, kept_direct = induced_subgraph(g, outer[inner_local])
    assert np.array_equal(kept_outer[kept_inner], kept_direct)
    assert (twice.adjacency != direct.adjacency).nnz == 0
    assert np.array_equal(twice.features, direct.features)


@pytest.mark.parametrize("keep", [[], [0, 1000], [-1]])
def test_subgraph_rejects_bad_keep(planted, keep):
    with pytest.raises(ValueError):
        induced_subgraph(planted, keep)


def test_cora_train_class_subgraph_counts(cora):
    train = {0, 1, 2}
    keep = [i for i, y in enumerate(cora.labels.tolist()) if y in train]
    sub, kept = induced_subgraph(cora, keep)
    assert sub.n_nodes == len(keep)
    edges = cora.edge_array().tolist()
    labels = cora.labels.tolist()
    expected = sum(1 for u, v in edges if labels[u] in train and labels[v] in train)
    assert sub.n_edges == expected
    rest = set(range(7)) - train
    assert brute_force_cross_edges(sub.edge_array().tolist(), sub.labels.tolist(), [train, rest]) == 0


# --------------------------------------------------------------------------- on-disk format


def test_cora_counts(cora):
    assert (cora.n_nodes, cora.n_edges, cora.n_features, cora.n_classes) == (2708, 5278, 1433, 7)


def test_citeseer_counts(citeseer):
    assert (citeseer.n_nodes, citeseer.n_edges, citeseer.n_features, citeseer.n_classes) == (3327, 4552, 3703, 6)


def test_empty_edge_file_gives_edgeless_graph(tmp_path):
    g = load_graph(write_dataset(tmp_path / "d", 3, [], [0, 1, 1], 2))
    assert g.n_nodes == 3 and g.n_edges == 0


def test_both_directions_in_file_give_one_edge(tmp_path):
    g = load_graph(write_dataset(tmp_path / "d", 3, [(0, 1), (1, 0)], [0, 1, 1], 2))
    assert g.n_edges == 1


@pytest.mark.parametrize("sparse_features", [False, True])
def test_save_load_roundtrip(tmp_path, sparse_features):
    g = planted_graph(seed=5)
    if sparse_features:
        x = np.where(np.random.default_rng(1).random(g.features.shape) < 0.03, g.features, 0.0)
        g = make_graph(g.n_nodes, g.edge_array(), sp.csr_array(x), g.labels, g.n_classes, g.name)
    save_graph(g, tmp_path / "g")
    stored = "features.sparse.tsv" if sparse_features else "features.tsv"
    assert (tmp_path / "g" / stored).is_file()
    h = load_graph(tmp_path / "g")
    assert h.n_nodes == g.n_nodes
    assert np.array_equal(h.edge_array(), g.edge_array())
    assert np.array_equal(h.labels, g.labels)
    dense = lambda x: x.toarray() if sp.issparse(x) else x
    assert np.array_equal(dense(h.features), dense(g.features))


def test_cora_roundtrip_is_exact(cora, tmp_path):
    save_graph(cora, tmp_path / "cora")
    h = load_graph(tmp_path / "cora")
    assert np.array_equal(h.edge_array(), cora.edge_array())
    assert (h.features != cora.features).nnz == 0


@pytest.mark.parametrize("mutate, where", [
    (lambda p: (p / "edges.tsv").write_text("0\t1\n1\t9\n"), "edges.tsv:2"),
    (lambda p: (p / "edges.tsv").write_text("0\tx\n"), "edges.tsv:1"),
    (lambda p: (p / "labels.tsv").write_text("0\t0\n1\t7\n2\t1\n"), "labels.tsv:2"),
    (lambda p: (p / "labels.tsv").write_text("0\t0\n1\t1\n"), "labels.tsv"),
    (lambda p: (p / "features.tsv").write_text("0\t1\t2\n1\t1\n2\t1\t1\n"), "features.tsv:2"),
    (lambda p: (p / "edges.tsv").unlink(), "edges.tsv"),
    (lambda p: (p / "meta.json").write_text("{"), "meta.json"),
])
def test_load_errors_name_file_and_line(tmp_path, mutate, where):
    path = write_dataset(tmp_path / "d", 3, [(0, 1)], [0, 1, 1], 2)
    mutate(path)
    with pytest.raises(GraphFormatError, match=where.replace(".", r"\.")):
        load_graph(path)


def test_class_without_nodes_is_rejected_at_load(tmp_path):
    with pytest.raises(GraphFormatError, match="class 2"):
        load_graph(write_dataset(tmp_path / "d", 3, [], [0, 1, 1], 3))
