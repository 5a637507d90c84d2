"""Finite-difference checks of every hand-derived gradient path on small random problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .encoders import (classify, classify_backward, gcn_backward, gcn_forward, init_encoder, init_head,
                       mlp_backward, mlp_forward)
from .episodes import EpisodeSpec, sample_episode
from .graph import Graph, make_graph
from .methods import MethodConfig, ProtoNet, probe_objective
from .nn import GradCheckReport, ParamSet, grad_check, softmax_ce
from .splits import ClassSplit, build_view

PATHS = ("gcn", "mlp", "probe", "protonet")


def random_graph(rng: np.random.Generator, n_nodes: int, n_features: int, n_classes: int,
                 density: float = 0.2) -> Graph:
    iu, ju = np.triu_indices(n_nodes, k=1)
    mask = rng.random(iu.size) < density
    edges = np.column_stack([iu[mask], ju[mask]])
    labels = np.concatenate([np.arange(n_classes), rng.integers(0, n_classes, n_nodes - n_classes)])
    rng.shuffle(labels)
    return make_graph(n_nodes, edges, rng.normal(size=(n_nodes, n_features)), labels, n_classes)


def _encoder_head_loss(forward, backward, g: Graph, rows, targets) -> Callable[[ParamSet], tuple[float, ParamSet]]:
    def loss_fn(params):
        z, cache = forward(g, params, rows)
        loss, g_logits = softmax_ce(classify(z, params), targets)
        grads, g_z = classify_backward(z, params, g_logits)
        grads.update(backward(cache, g_z))
        return loss, grads

    return loss_fn


def gcn_case(rng: np.random.Generator):
    n, d, c = int(rng.integers(6, 31)), int(rng.integers(2, 11)), 3
    g = random_graph(rng, n, d, c)
    params = init_encoder(rng, d, 8, 5) | init_head(rng, 5, c)
    params["head.b"] = rng.normal(size=(1, c))
    rows = rng.choice(n, size=min(n, 10), replace=False)
    fwd = lambda g_, p, r: gcn_forward(g_.normalized_adjacency, g_.features, p, r)
    return _encoder_head_loss(fwd, gcn_backward, g, rows, g.labels[rows]), params


def mlp_case(rng: np.random.Generator):
    n, d, c = int(rng.integers(6, 31)), int(rng.integers(2, 11)), 3
    g = random_graph(rng, n, d, c)
    params = init_encoder(rng, d, 8, 5) | init_head(rng, 5, c)
    params["head.b"] = rng.normal(size=(1, c))
    rows = rng.choice(n, size=min(n, 10), replace=False)
    fwd = lambda g_, p, r: mlp_forward(g_.features, p, r)
    return _encoder_head_loss(fwd, mlp_backward, g, rows, g.labels[rows]), params


def probe_case(rng: np.random.Generator):
    m, e, c = int(rng.integers(2, 26)), int(rng.integers(2, 11)), int(rng.integers(2, 6))
    z = rng.normal(size=(m, e))
    y = rng.integers(0, c, m)
    onehot = np.eye(c)[y]
    wd = 5e-4

    def loss_fn(params):
        loss, gw, gb = probe_objective(z, onehot, params["head.W"], params["head.b"], wd)
        return float(loss), {"head.W": gw, "head.b": gb}

    return loss_fn, {"head.W": rng.normal(size=(e, c)), "head.b": rng.normal(size=(1, c))}


def protonet_case(rng: np.random.Generator, backbone: str = "mlp"):
    spec = EpisodeSpec(2, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    # train classes 0..2 each get at least k + q nodes; 3 and 4 fill dev/test
    per_class = spec.k_shot + spec.q_query
    n = int(rng.integers(3 * per_class + 2, 31))
    d = int(rng.integers(2, 11))
    labels = np.concatenate([np.repeat(np.arange(3), per_class), [3, 4],
                             rng.integers(0, 5, n - 3 * per_class - 2)])
    rng.shuffle(labels)
    g = random_graph(rng, n, d, 5)
    g = make_graph(n, g.edge_array(), g.features, labels, 5)
    view = build_view(g, ClassSplit((0, 1, 2), (3,), (4,)), "transductive", "train")
    method = ProtoNet(MethodConfig(method="protonet", backbone=backbone, hidden=8, embed=5), spec)
    episode = sample_episode(view, spec, rng)

    def loss_fn(params):
        return method.episode_loss(params, view, episode)

    return loss_fn, init_encoder(rng, d, 8, 5)


@dataclass
class SuiteResult:
    path: str
    reports: list[GradCheckReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def max_error(self) -> float:
        return max(r.max_error for r in self.reports)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bad = sum(len(r.violations) for r in self.reports)
        return (f"{status}  {self.path:<9} instances={len(self.reports)} max_rel_err={self.max_error:.2e} "
                f"violations={bad}")


def run_suite(instances: int = 20, h: float = 1e-5, tol: float = 1e-4, seed: int = 0,
              paths=PATHS) -> list[SuiteResult]:
    makers = {
        "gcn": gcn_case,
        "mlp": mlp_case,
        "probe": probe_case,
        "protonet": lambda r: protonet_case(r, "mlp" if r.integers(2) == 0 else "gcn"),
    }
    results = []
    for i, path in enumerate(paths):
        rng = np.random.default_rng([seed, i])
        reports = []
        for _ in range(instances):
            loss_fn, params = makers[path](rng)
            reports.append(grad_check(loss_fn, params, h=h, tol=tol, rng=rng))
        results.append(SuiteResult(path, reports))
    return results
