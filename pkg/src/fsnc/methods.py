"""Training strategies.

* ``ignn``     -- GCN pretrained with supervised cross-entropy on the train
                  classes, then frozen; each episode fits a fresh linear probe.
* ``protonet`` -- prototypical networks, squared Euclidean distance.
* ``maml``     -- first-order MAML over an MLP encoder plus linear head.
* ``meta_gnn`` -- the same first-order MAML over a GCN encoder.

Every method exposes ``init_state``, ``train_step``, ``prepare`` and
``evaluate``; the protocol drives them without knowing which is which.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .encoders import EMBED, HIDDEN, Encoder, classify, classify_backward, init_encoder, init_head, make_encoder
from .episodes import Episode, EpisodeSpec, sample_episode
from .nn import AdamState, ParamSet, adam_step, copy_params, log_softmax, sgd_step, softmax_ce
from .splits import SplitView

METHODS = ("ignn", "protonet", "maml", "meta_gnn")


@dataclass
class MethodConfig:
    method: str = "ignn"
    backbone: str | None = None
    hidden: int = HIDDEN
    embed: int = EMBED
    lr: float = 1e-2
    weight_decay: float = 5e-4
    probe_lr: float = 1e-2
    probe_steps: int = 300
    probe_weight_decay: float = 5e-4
    inner_lr: float = 0.1
    inner_steps: int = 5
    distance: str = "squared_euclidean"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.backbone is None:
            self.backbone = "gcn" if self.method in ("ignn", "meta_gnn") else "mlp"
        if self.method in ("ignn", "meta_gnn") and self.backbone != "gcn":
            raise ValueError(f"{self.method} requires the gcn backbone")
        if self.method == "maml" and self.backbone != "mlp":
            raise ValueError("maml uses the mlp backbone; use meta_gnn for a GCN")
        if self.backbone not in ("gcn", "mlp"):
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if self.distance != "squared_euclidean":
            raise ValueError(f"unsupported distance {self.distance!r}")
        if self.inner_steps < 0 or self.probe_steps < 0:
            raise ValueError("step counts must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "MethodConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown method keys: {sorted(unknown)}")
        return cls(**d)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpisodeResult:
    accuracy: float
    predictions: np.ndarray


@dataclass
class TrainState:
    params: ParamSet
    optimizer: AdamState
    epoch: int = 0


def _result(logits: np.ndarray, labels: np.ndarray) -> EpisodeResult:
    pred = logits.argmax(axis=1)
    return EpisodeResult(float(np.mean(pred == labels)), pred)


def _remap(labels: np.ndarray, classes) -> np.ndarray:
    return np.searchsorted(np.asarray(classes), labels)


class Method:
    """Shared plumbing; subclasses implement the strategy-specific parts."""

    name = ""

    def __init__(self, config: MethodConfig, spec: EpisodeSpec):
        self.config = config
        self.spec = spec
        self.encoder: Encoder = make_encoder(config.backbone)

    @property
    def uses_graph(self) -> bool:
        return self.encoder.uses_graph

    def init_params(self, rng: np.random.Generator, n_features: int, n_train_classes: int) -> ParamSet:
        return init_encoder(rng, n_features, self.config.hidden, self.config.embed)

    def init_state(self, rng: np.random.Generator, n_features: int, n_train_classes: int) -> TrainState:
        params = self.init_params(rng, n_features, n_train_classes)
        opt = AdamState(lr=self.config.lr, weight_decay=self.config.weight_decay)
        return TrainState(params, opt)

    def train_step(self, state: TrainState, view: SplitView, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def prepare(self, params: ParamSet, view: SplitView):
        """Per-evaluation precomputation shared by all episodes (frozen embeddings)."""
        if self.uses_graph:
            return self.encoder.embed(view.graph, params)[0]
        return None

    def _embed_nodes(self, params, view, nodes, context):
        if context is not None:
            return context[nodes]
        return self.encoder.embed(view.graph, params, rows=nodes)[0]

    def episode_result(self, params: ParamSet, view: SplitView, episode: Episode, context=None) -> EpisodeResult:
        raise NotImplementedError

    def evaluate(self, params: ParamSet, view: SplitView, episodes: list[Episode], context=None,
                 pool=None) -> list[float]:
        """Per-episode accuracies; never mutates ``params``."""
        if context is None:
            context = self.prepare(params, view)

        def one(ep):
            return self.episode_result(params, view, ep, context).accuracy

        if pool is None:
            return [one(ep) for ep in episodes]
        return list(pool.map(one, episodes))


# --------------------------------------------------------------------------- I-GNN


def probe_objective(z, onehot, w, b, weight_decay):
    """Probe loss ``CE + weight_decay/2 * (|W|^2 + |b|^2)`` and its gradients.

    Works on single problems (``z``: m x e) or batches (``z``: B x m x e).
    """
    m = z.shape[-2]
    logits = z @ w + b
    logp = log_softmax(logits)
    loss = -(onehot * logp).sum(axis=(-2, -1)) / m
    loss = loss + 0.5 * weight_decay * ((w * w).sum(axis=(-2, -1)) + (b * b).sum(axis=(-2, -1)))
    g = (np.exp(logp) - onehot) / m
    grad_w = np.swapaxes(z, -1, -2) @ g + weight_decay * w
    grad_b = g.sum(axis=-2, keepdims=True) + weight_decay * b
    return loss, grad_w, grad_b


def fit_probe(z_support: np.ndarray, y_support: np.ndarray, n_way: int, lr: float, steps: int,
              weight_decay: float) -> tuple[np.ndarray, np.ndarray]:
    """Full-batch gradient descent on a fresh linear head, zero-initialized.

    Accepts a leading batch axis: ``z_support`` of shape ``(B, m, e)`` and
    ``y_support`` of shape ``(B, m)`` fit ``B`` independent heads.
    """
    batched = z_support.ndim == 3
    zs = z_support if batched else z_support[None]
    ys = y_support if batched else y_support[None]
    b_, m, e = zs.shape
    onehot = np.zeros((b_, m, n_way))
    np.put_along_axis(onehot, ys[..., None], 1.0, axis=2)
    w = np.zeros((b_, e, n_way))
    b = np.zeros((b_, 1, n_way))
    for _ in range(steps):
        _, grad_w, grad_b = probe_objective(zs, onehot, w, b, weight_decay)
        w -= lr * grad_w
        b -= lr * grad_b
    return (w, b) if batched else (w[0], b[0])


def probe_loss(z: np.ndarray, y: np.ndarray, w: np.ndarray, b: np.ndarray) -> float:
    logp = log_softmax(z @ w + b)
    return float(-logp[np.arange(len(y)), y].mean())


class IGNN(Method):
    name = "ignn"

    def init_params(self, rng, n_features, n_train_classes):
        params = init_encoder(rng, n_features, self.config.hidden, self.config.embed)
        params.update(init_head(rng, self.config.embed, n_train_classes))
        return params

    def pretrain_loss(self, params: ParamSet, view: SplitView) -> tuple[float, ParamSet]:
        nodes = view.labeled_nodes()
        if nodes.size == 0:
            raise ValueError("pretraining view has no labeled nodes")
        targets = _remap(view.graph.labels[nodes], view.classes)
        z, cache = self.encoder.embed(view.graph, params, rows=nodes)
        loss, g_logits = softmax_ce(classify(z, params), targets)
        grads, g_z = classify_backward(z, params, g_logits)
        grads.update(self.encoder.backward(cache, g_z))
        return loss, grads

    def train_step(self, state, view, rng):
        loss, grads = self.pretrain_loss(state.params, view)
        adam_step(state.params, grads, state.optimizer)
        state.epoch += 1
        return loss

    def linear_probe(self, params, view, episode, context=None) -> EpisodeResult:
        return self.episode_result(params, view, episode, context)

    def episode_result(self, params, view, episode, context=None):
        c = self.config
        z = self.prepare(params, view) if context is None else context
        w, b = fit_probe(z[episode.support], episode.support_labels, episode.n_way,
                         c.probe_lr, c.probe_steps, c.probe_weight_decay)
        return _result(z[episode.query] @ w + b, episode.query_labels)

    def evaluate(self, params, view, episodes, context=None, pool=None):
        if not episodes:
            return []
        c = self.config
        z = self.prepare(params, view) if context is None else context
        n_way = episodes[0].n_way
        if any(ep.n_way != n_way or ep.support.size != episodes[0].support.size for ep in episodes):
            return super().evaluate(params, view, episodes, z, pool)
        zs = np.stack([z[ep.support] for ep in episodes])
        ys = np.stack([ep.support_labels for ep in episodes])
        w, b = fit_probe(zs, ys, n_way, c.probe_lr, c.probe_steps, c.probe_weight_decay)
        zq = np.stack([z[ep.query] for ep in episodes])
        pred = (zq @ w + b).argmax(axis=2)
        yq = np.stack([ep.query_labels for ep in episodes])
        return [float(a) for a in (pred == yq).mean(axis=1)]


# --------------------------------------------------------------------------- ProtoNet


def prototype_loss(z_support, y_support, z_query, y_query, n_way):
    """Cross-entropy of ``-||z_q - c_j||^2`` logits.

    Returns ``(loss, grad_support, grad_query, logits)``.
    """
    onehot = np.zeros((z_support.shape[0], n_way))
    onehot[np.arange(len(y_support)), y_support] = 1.0
    counts = onehot.sum(axis=0)
    protos = (onehot.T @ z_support) / counts[:, None]
    diff = z_query[:, None, :] - protos[None, :, :]
    logits = -(diff * diff).sum(axis=2)
    loss, g_logits = softmax_ce(logits, y_query)
    g_dist = -g_logits
    g_query = 2.0 * (g_dist.sum(axis=1)[:, None] * z_query - g_dist @ protos)
    g_protos = 2.0 * (g_dist.sum(axis=0)[:, None] * protos - g_dist.T @ z_query)
    g_support = (g_protos / counts[:, None])[y_support]
    return loss, g_support, g_query, logits


class ProtoNet(Method):
    name = "protonet"

    def episode_loss(self, params: ParamSet, view: SplitView, episode: Episode) -> tuple[float, ParamSet]:
        nodes = episode.nodes
        z, cache = self.encoder.embed(view.graph, params, rows=nodes)
        ns = episode.support.size
        loss, g_s, g_q, _ = prototype_loss(z[:ns], episode.support_labels, z[ns:],
                                           episode.query_labels, episode.n_way)
        return loss, self.encoder.backward(cache, np.vstack([g_s, g_q]))

    def train_step(self, state, view, rng):
        episode = sample_episode(view, self.spec, rng)
        loss, grads = self.episode_loss(state.params, view, episode)
        adam_step(state.params, grads, state.optimizer)
        state.epoch += 1
        return loss

    def episode_result(self, params, view, episode, context=None):
        z = self._embed_nodes(params, view, episode.nodes, context)
        ns = episode.support.size
        _, _, _, logits = prototype_loss(z[:ns], episode.support_labels, z[ns:],
                                         episode.query_labels, episode.n_way)
        return _result(logits, episode.query_labels)


# --------------------------------------------------------------------------- first-order MAML


class FOMAML(Method):
    name = "maml"

    def init_params(self, rng, n_features, n_train_classes):
        params = init_encoder(rng, n_features, self.config.hidden, self.config.embed)
        params.update(init_head(rng, self.config.embed, self.spec.n_way))
        return params

    def loss_and_grads(self, params, view, nodes, labels) -> tuple[float, ParamSet]:
        z, cache = self.encoder.embed(view.graph, params, rows=nodes)
        loss, g_logits = softmax_ce(classify(z, params), labels)
        grads, g_z = classify_backward(z, params, g_logits)
        grads.update(self.encoder.backward(cache, g_z))
        return loss, grads

    def adapt(self, params, view, episode) -> ParamSet:
        """Inner loop: plain SGD on the support set, starting from ``params``."""
        c = self.config
        adapted = params
        for _ in range(c.inner_steps):
            _, grads = self.loss_and_grads(adapted, view, episode.support, episode.support_labels)
            adapted = sgd_step(adapted, grads, c.inner_lr)
        return adapted

    def outer_grads(self, params, view, episode) -> tuple[float, ParamSet]:
        adapted = self.adapt(params, view, episode)
        return self.loss_and_grads(adapted, view, episode.query, episode.query_labels)

    def train_step(self, state, view, rng):
        episode = sample_episode(view, self.spec, rng)
        loss, grads = self.outer_grads(state.params, view, episode)
        adam_step(state.params, grads, state.optimizer)
        state.epoch += 1
        return loss

    def prepare(self, params, view):
        return None

    def episode_result(self, params, view, episode, context=None):
        adapted = self.adapt(params, view, episode)
        z, _ = self.encoder.embed(view.graph, adapted, rows=episode.query)
        return _result(classify(z, adapted), episode.query_labels)


class MetaGNN(FOMAML):
    name = "meta_gnn"


_REGISTRY = {"ignn": IGNN, "protonet": ProtoNet, "maml": FOMAML, "meta_gnn": MetaGNN}


def build_method(config: MethodConfig, spec: EpisodeSpec) -> Method:
    return _REGISTRY[config.method](config, spec)


def train_step(method: Method, state: TrainState, views: dict[str, SplitView], rng: np.random.Generator) -> float:
    """One unit of training: a pretraining epoch (ignn) or one meta-train episode."""
    return method.train_step(state, views["train"], rng)


def copy_state_params(state: TrainState) -> ParamSet:
    return copy_params(state.params)
