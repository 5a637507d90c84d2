"""Two-layer GCN and MLP encoders and the linear classifier head.

Parameter names: ``enc.W1`` (d x h), ``enc.W2`` (h x e), ``head.W`` (e x c),
``head.b`` (1 x c). Neither encoder has biases or a final nonlinearity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .nn import ParamSet, glorot, relu, spmm

HIDDEN = 64
EMBED = 32


def init_encoder(rng: np.random.Generator, n_features: int, hidden: int = HIDDEN,
                 embed: int = EMBED) -> ParamSet:
    return {"enc.W1": glorot(rng, n_features, hidden), "enc.W2": glorot(rng, hidden, embed)}


def init_head(rng: np.random.Generator, embed: int, n_classes: int) -> ParamSet:
    return {"head.W": glorot(rng, embed, n_classes), "head.b": np.zeros((1, n_classes))}


def zero_head(embed: int, n_classes: int) -> ParamSet:
    return {"head.W": np.zeros((embed, n_classes)), "head.b": np.zeros((1, n_classes))}


def _check_features(x, params: ParamSet) -> None:
    if x.shape[1] != params["enc.W1"].shape[0]:
        raise ValueError(f"feature dim {x.shape[1]} does not match enc.W1 {params['enc.W1'].shape}")


@dataclass
class GCNCache:
    adj: sp.csr_array
    x: object
    pre1: np.ndarray
    hidden: np.ndarray
    w2: np.ndarray
    n_nodes: int
    rows: np.ndarray | None


def gcn_forward(adj, x, params: ParamSet, rows=None) -> tuple[np.ndarray, GCNCache]:
    """``Z = A ReLU(A X W1) W2`` over the whole graph; returns ``Z[rows]`` when given."""
    _check_features(x, params)
    w1, w2 = params["enc.W1"], params["enc.W2"]
    pre1 = spmm(adj, spmm(x, w1))
    hidden = relu(pre1)
    z = spmm(adj, hidden @ w2)
    rows = None if rows is None else np.asarray(rows, dtype=np.int64)
    out = z if rows is None else z[rows]
    return out, GCNCache(adj, x, pre1, hidden, w2, z.shape[0], rows)


def gcn_backward(cache: GCNCache, grad_z: np.ndarray) -> ParamSet:
    if cache.rows is not None:
        full = np.zeros((cache.n_nodes, grad_z.shape[1]))
        np.add.at(full, cache.rows, grad_z)
        grad_z = full
    adj_t = cache.adj.T
    grad_q = spmm(adj_t, grad_z)
    grad_w2 = cache.hidden.T @ grad_q
    grad_pre1 = (grad_q @ cache.w2.T) * (cache.pre1 > 0)
    grad_p = spmm(adj_t, grad_pre1)
    grad_w1 = np.asarray(cache.x.T @ grad_p)
    return {"enc.W1": grad_w1, "enc.W2": grad_w2}


@dataclass
class MLPCache:
    x: object
    pre1: np.ndarray
    hidden: np.ndarray
    w2: np.ndarray


def mlp_forward(x, params: ParamSet, rows=None) -> tuple[np.ndarray, MLPCache]:
    """``Z = ReLU(X W1) W2``; with ``rows`` only those feature rows are touched."""
    _check_features(x, params)
    if rows is not None:
        x = x[np.asarray(rows, dtype=np.int64)]
    pre1 = spmm(x, params["enc.W1"])
    hidden = relu(pre1)
    return hidden @ params["enc.W2"], MLPCache(x, pre1, hidden, params["enc.W2"])


def mlp_backward(cache: MLPCache, grad_z: np.ndarray) -> ParamSet:
    grad_w2 = cache.hidden.T @ grad_z
    grad_pre1 = (grad_z @ cache.w2.T) * (cache.pre1 > 0)
    grad_w1 = np.asarray(cache.x.T @ grad_pre1)
    return {"enc.W1": grad_w1, "enc.W2": grad_w2}


def classify(z: np.ndarray, params: ParamSet) -> np.ndarray:
    return z @ params["head.W"] + params["head.b"]


def classify_backward(z: np.ndarray, params: ParamSet, grad_logits: np.ndarray) -> tuple[ParamSet, np.ndarray]:
    """Gradients of the head and of the embeddings ``z``."""
    grads = {
        "head.W": z.T @ grad_logits,
        "head.b": grad_logits.sum(axis=0, keepdims=True),
    }
    return grads, grad_logits @ params["head.W"].T


class Encoder:
    """Backbone dispatch: ``embed`` returns embeddings of ``rows`` of ``graph``."""

    uses_graph: bool = False
    name: str = ""

    def embed(self, graph: Graph, params: ParamSet, rows=None):
        raise NotImplementedError

    def backward(self, cache, grad_z: np.ndarray) -> ParamSet:
        raise NotImplementedError


class GCNEncoder(Encoder):
    uses_graph = True
    name = "gcn"

    def embed(self, graph: Graph, params: ParamSet, rows=None):
        return gcn_forward(graph.normalized_adjacency, graph.features, params, rows)

    def backward(self, cache, grad_z):
        return gcn_backward(cache, grad_z)


class MLPEncoder(Encoder):
    uses_graph = False
    name = "mlp"

    def embed(self, graph: Graph, params: ParamSet, rows=None):
        return mlp_forward(graph.features, params, rows)

    def backward(self, cache, grad_z):
        return mlp_backward(cache, grad_z)


ENCODERS = {"gcn": GCNEncoder, "mlp": MLPEncoder}


def make_encoder(backbone: str) -> Encoder:
    try:
        return ENCODERS[backbone]()
    except KeyError:
        raise ValueError(f"unknown backbone {backbone!r}; expected one of {sorted(ENCODERS)}") from None
