"""N-way K-shot Q-query episode sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .rng import substream
from .splits import SplitView


class InsufficientClassesError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeSpec:
    n_way: int
    k_shot: int
    q_query: int

    def __post_init__(self) -> None:
        if self.n_way < 2 or self.k_shot < 1 or self.q_query < 1:
            raise ValueError(f"invalid episode spec {self}: need N >= 2, K >= 1, Q >= 1")


@dataclass(frozen=True, eq=False)
class Episode:
    """Support/query node ids are local to the view the episode was drawn from."""

    support: np.ndarray
    support_labels: np.ndarray
    query: np.ndarray
    query_labels: np.ndarray
    class_map: tuple[int, ...]

    @property
    def n_way(self) -> int:
        return len(self.class_map)

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.support, self.query])

    def to_record(self, view: SplitView) -> dict:
        return {
            "class_map": list(self.class_map),
            "support": view.to_global[self.support].tolist(),
            "support_labels": self.support_labels.tolist(),
            "query": view.to_global[self.query].tolist(),
            "query_labels": self.query_labels.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict, view: SplitView) -> "Episode":
        return cls(
            view.to_local(rec["support"]),
            np.asarray(rec["support_labels"], dtype=np.int64),
            view.to_local(rec["query"]),
            np.asarray(rec["query_labels"], dtype=np.int64),
            tuple(int(c) for c in rec["class_map"]),
        )


def eligible_classes(view: SplitView, spec: EpisodeSpec) -> list[int]:
    need = spec.k_shot + spec.q_query
    return [c for c, nodes in sorted(view.class_nodes().items()) if nodes.size >= need]


def check_feasible(view: SplitView, spec: EpisodeSpec) -> None:
    eligible = eligible_classes(view, spec)
    if len(eligible) < spec.n_way:
        raise InsufficientClassesError(
            f"insufficient classes in {view.partition} view: {len(eligible)} classes have >= "
            f"{spec.k_shot + spec.q_query} nodes, {spec.n_way}-way episodes need {spec.n_way}"
        )


def sample_episode(view: SplitView, spec: EpisodeSpec, rng: np.random.Generator) -> Episode:
    check_feasible(view, spec)
    by_class = view.class_nodes()
    eligible = np.array(eligible_classes(view, spec), dtype=np.int64)
    chosen = rng.choice(eligible, size=spec.n_way, replace=False)
    k = spec.k_shot
    support, query = [], []
    for nodes in (by_class[int(c)] for c in chosen):
        picked = rng.choice(nodes, size=k + spec.q_query, replace=False)
        support.append(picked[:k])
        query.append(picked[k:])
    labels = np.arange(spec.n_way, dtype=np.int64)
    return Episode(
        np.concatenate(support),
        np.repeat(labels, k),
        np.concatenate(query),
        np.repeat(labels, spec.q_query),
        tuple(int(c) for c in chosen),
    )


def sample_batch(view: SplitView, spec: EpisodeSpec, count: int, master_seed: int) -> list[Episode]:
    """``count`` episodes; episode ``i`` depends only on ``(master_seed, i)``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count:
        check_feasible(view, spec)
    return [sample_episode(view, spec, substream(master_seed, i)) for i in range(count)]


def write_jsonl(path, episodes: Iterable[Episode], view: SplitView) -> None:
    with open(path, "w") as f:
        for ep in episodes:
            f.write(json.dumps(ep.to_record(view)) + "\n")


def read_jsonl(path, view: SplitView) -> list[Episode]:
    with open(path) as f:
        return [Episode.from_record(json.loads(line), view) for line in f if line.strip()]
