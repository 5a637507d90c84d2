import numpy as np
import pytest

from fsnc.graph import make_graph
from fsnc.splits import ClassSplit, build_view, build_views, edge_cut_audit, split_classes

from conftest import planted_graph
from oracles import brute_force_cross_edges


def test_fixed_split_on_cora(cora):
    s = split_classes(cora, (3, 2, 2))
    assert (s.train, s.dev, s.test) == ((0, 1, 2), (3, 4), (5, 6))


def test_split_sizes_for_seventy_classes():
    g = planted_graph(n_classes=70, per_class=2, n_features=2)
    s = split_classes(g, (40, 15, 15), seed=3)
    assert s.sizes() == (40, 15, 15)
    assert sorted(s.train + s.dev + s.test) == list(range(70))


@pytest.mark.parametrize("sizes", [(7, 0, 0), (3, 2, 1), (3, 2, 2, 0)])
def test_bad_sizes_rejected(cora, sizes):
    with pytest.raises(ValueError):
        split_classes(cora, sizes)


def test_seeded_split_is_deterministic_and_seed_dependent(cora):
    a = split_classes(cora, (3, 2, 2), seed=11)
    assert a == split_classes(cora, (3, 2, 2), seed=11)
    assert len({split_classes(cora, (3, 2, 2), seed=s) for s in range(10)}) > 1


def test_class_split_requires_disjoint_nonempty_sets():
    with pytest.raises(ValueError, match="disjoint"):
        ClassSplit((0, 1), (1,), (2,))
    with pytest.raises(ValueError, match="empty"):
        ClassSplit((0,), (), (2,))
    with pytest.raises(ValueError, match="range"):
        ClassSplit.from_dict({"train": [0], "dev": [1], "test": [9]}, n_classes=3)


def test_transductive_views_share_the_full_graph(cora):
    views = build_views(cora, split_classes(cora, (3, 2, 2)), "transductive")
    assert all(v.graph is cora for v in views.values())
    assert views["train"].normalized is views["test"].normalized is views["dev"].normalized
    assert views["train"].graph.n_nodes == 2708
    assert np.array_equal(views["dev"].to_global, np.arange(2708))


def test_inductive_views_partition_nodes_and_cut_cross_edges(cora):
    split = split_classes(cora, (3, 2, 2))
    views = build_views(cora, split, "inductive")
    labels = cora.labels.tolist()
    seen = []
    for p, v in views.items():
        members = [i for i, y in enumerate(labels) if y in split.classes(p)]
        assert v.to_global.tolist() == members
        assert v.graph.n_nodes == len(members)
        seen.extend(members)
        # every surviving edge maps back to an original edge inside the partition
        dense_ok = set(map(tuple, cora.edge_array().tolist()))
        for u, w in v.graph.edge_array().tolist():
            assert (int(v.to_global[u]), int(v.to_global[w])) in dense_ok
    assert sorted(seen) == list(range(cora.n_nodes))

    audit = edge_cut_audit(cora, split)
    cross = brute_force_cross_edges(cora.edge_array().tolist(), labels, [split.train, split.dev, split.test])
    assert audit["cross_partition_edges"] == cross
    assert sum(v.graph.n_edges for v in views.values()) + cross == cora.n_edges
    assert audit["intra"] == {p: views[p].graph.n_edges for p in views}


def test_inductive_normalization_uses_subgraph_degrees():
    # path 0-1-2 with node 2 in another partition: node 1 loses a neighbor
    g = make_graph(3, [(0, 1), (1, 2)], np.ones((3, 1)), [0, 0, 1], n_classes=3)
    v = build_view(g, ClassSplit((0,), (1,), (2,)), "inductive", "train")
    assert np.array_equal(v.normalized.toarray(), np.full((2, 2), 0.5))


def test_view_covering_all_nodes_is_the_full_graph():
    g = make_graph(4, [(0, 1), (2, 3)], np.ones((4, 1)), [0, 0, 0, 0], n_classes=3)
    v = build_view(g, ClassSplit((0,), (1,), (2,)), "inductive", "train")
    assert v.graph is g


def test_view_with_no_nodes_is_an_error():
    g = make_graph(4, [(0, 1)], np.ones((4, 1)), [0, 0, 1, 1], n_classes=3)
    with pytest.raises(ValueError):
        build_view(g, ClassSplit((0,), (1,), (2,)), "inductive", "test")


def test_to_local_roundtrip(planted):
    split = ClassSplit((0, 1), (2, 3), (4, 5))
    v = build_view(planted, split, "inductive", "dev")
    assert np.array_equal(v.to_local(v.to_global), np.arange(v.graph.n_nodes))
    with pytest.raises(KeyError):
        v.to_local([0])  # node 0 is a train-class node
