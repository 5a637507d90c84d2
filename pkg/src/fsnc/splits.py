"""Class-level splits and the transductive / inductive views built from them."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .graph import Graph, induced_subgraph
from .rng import SPLIT, substream

PARTITIONS = ("train", "dev", "test")


class Setting(str, Enum):
    TRANSDUCTIVE = "transductive"
    INDUCTIVE = "inductive"


@dataclass(frozen=True)
class ClassSplit:
    train: tuple[int, ...]
    dev: tuple[int, ...]
    test: tuple[int, ...]

    def __post_init__(self) -> None:
        parts = [set(self.train), set(self.dev), set(self.test)]
        for name, p in zip(PARTITIONS, parts):
            if not p:
                raise ValueError(f"{name} class set is empty")
        if parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2]:
            raise ValueError("class sets must be pairwise disjoint")

    def classes(self, partition: str) -> tuple[int, ...]:
        if partition not in PARTITIONS:
            raise ValueError(f"unknown partition {partition!r}")
        return getattr(self, partition)

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.dev), len(self.test)

    def as_dict(self) -> dict[str, list[int]]:
        return {p: list(self.classes(p)) for p in PARTITIONS}

    @classmethod
    def from_dict(cls, d: dict, n_classes: int | None = None) -> "ClassSplit":
        split = cls(*(tuple(sorted(int(c) for c in d[p])) for p in PARTITIONS))
        if n_classes is not None:
            for p in PARTITIONS:
                if any(not 0 <= c < n_classes for c in split.classes(p)):
                    raise ValueError(f"{p} class id out of range [0, {n_classes})")
        return split


def split_classes(g: Graph, sizes, seed="fixed") -> ClassSplit:
    """Assign class ids to train/dev/test.

    ``seed="fixed"`` takes ids in ascending order (train first); an integer
    seed shuffles the ids with a seeded stream before slicing.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != 3 or sum(sizes) != g.n_classes:
        raise ValueError(f"split sizes {sizes} must sum to n_classes={g.n_classes}")
    if min(sizes) < 1:
        raise ValueError(f"split sizes {sizes} leave a partition empty")
    ids = np.arange(g.n_classes)
    if seed != "fixed":
        ids = substream(int(seed), SPLIT).permutation(ids)
    a, b = sizes[0], sizes[0] + sizes[1]
    return ClassSplit(
        tuple(sorted(int(c) for c in ids[:a])),
        tuple(sorted(int(c) for c in ids[a:b])),
        tuple(sorted(int(c) for c in ids[b:])),
    )


@dataclass(frozen=True, eq=False)
class SplitView:
    """What one phase of training or evaluation is allowed to see.

    ``to_global[local]`` maps view node ids back to the source graph; it is
    the identity in the transductive setting.
    """

    setting: Setting
    partition: str
    classes: tuple[int, ...]
    graph: Graph
    to_global: np.ndarray

    @property
    def normalized(self) -> sp.csr_array:
        return self.graph.normalized_adjacency

    def to_local(self, global_ids) -> np.ndarray:
        global_ids = np.asarray(global_ids, dtype=np.int64)
        local = np.searchsorted(self.to_global, global_ids)
        local = np.minimum(local, self.to_global.size - 1)
        if np.any(self.to_global[local] != global_ids):
            raise KeyError("node not present in this view")
        return local

    def class_nodes(self) -> dict[int, np.ndarray]:
        """Local ids of this partition's nodes, per class, in ascending order."""
        labels = self.graph.labels
        return {c: np.flatnonzero(labels == c) for c in self.classes}

    def labeled_nodes(self) -> np.ndarray:
        return np.flatnonzero(np.isin(self.graph.labels, self.classes))


def build_view(g: Graph, split: ClassSplit, setting, partition: str) -> SplitView:
    setting = Setting(setting)
    classes = split.classes(partition)
    members = np.flatnonzero(np.isin(g.labels, classes))
    if members.size == 0:
        raise ValueError(f"{partition} classes {classes} label no nodes")
    if setting is Setting.TRANSDUCTIVE:
        return SplitView(setting, partition, classes, g, np.arange(g.n_nodes))
    if members.size == g.n_nodes:
        return SplitView(setting, partition, classes, g, members)
    sub, kept = induced_subgraph(g, members)
    return SplitView(setting, partition, classes, sub, kept)


def build_views(g: Graph, split: ClassSplit, setting) -> dict[str, SplitView]:
    return {p: build_view(g, split, setting, p) for p in PARTITIONS}


def edge_cut_audit(g: Graph, split: ClassSplit) -> dict:
    """Intra-partition edge counts and the number of edges crossing partitions."""
    part_of = np.full(g.n_classes, -1)
    for i, p in enumerate(PARTITIONS):
        part_of[list(split.classes(p))] = i
    node_part = part_of[g.labels]
    edges = g.edge_array()
    pu, pv = node_part[edges[:, 0]], node_part[edges[:, 1]]
    same = pu == pv
    return {
        "total_edges": int(edges.shape[0]),
        "intra": {p: int(np.count_nonzero(same & (pu == i))) for i, p in enumerate(PARTITIONS)},
        "cross_partition_edges": int(np.count_nonzero(~same)),
    }
