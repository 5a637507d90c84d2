"""Numerical kernel: sparse products, softmax cross-entropy, Adam, gradient checking.

Parameters are plain ``dict[str, np.ndarray]`` (float64); gradients use the
same keys.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

ParamSet = dict[str, np.ndarray]


def spmm(a, b: np.ndarray) -> np.ndarray:
    """Sparse (CSR) times dense."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"spmm dimension mismatch: {a.shape} x {b.shape}")
    if sp.issparse(a):
        return np.asarray(a @ b)
    return np.asarray(a) @ b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_ce(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient with respect to ``logits``."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    m, c = logits.shape
    if targets.shape != (m,):
        raise ValueError(f"targets shape {targets.shape} does not match {m} rows")
    if m and (targets.min() < 0 or targets.max() >= c):
        raise ValueError(f"target label out of range [0, {c})")
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    logp = log_softmax(logits)
    rows = np.arange(m)
    loss = -logp[rows, targets].sum() / m
    grad = np.exp(logp)
    grad[rows, targets] -= 1.0
    grad /= m
    return float(loss), grad


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


# --------------------------------------------------------------------------- optimizer


@dataclass
class AdamState:
    lr: float = 1e-2
    weight_decay: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: ParamSet = field(default_factory=dict)
    v: ParamSet = field(default_factory=dict)


def adam_step(params: ParamSet, grads: ParamSet, state: AdamState) -> ParamSet:
    """One Adam update with decoupled weight decay, in place.

    ``p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)``
    """
    for name, g in grads.items():
        if params[name].shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter {name!r} shape {params[name].shape}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        update = m_hat / (np.sqrt(v_hat) + state.eps)
        if state.weight_decay:
            update = update + state.weight_decay * p
        p -= state.lr * update
    return params


def sgd_step(params: ParamSet, grads: ParamSet, lr: float) -> ParamSet:
    return {k: p - lr * grads[k] if k in grads else p for k, p in params.items()}


# --------------------------------------------------------------------------- helpers


def copy_params(params: ParamSet) -> ParamSet:
    return {k: v.copy() for k, v in params.items()}


def params_checksum(params: ParamSet) -> str:
    h = hashlib.sha256()
    for k in sorted(params):
        h.update(k.encode())
        h.update(np.ascontiguousarray(params[k], dtype=np.float64).tobytes())
    return h.hexdigest()


def save_params(params: ParamSet, path) -> Path:
    """Binary ``.npz`` checkpoint keyed by parameter name."""
    path = Path(path)
    with path.open("wb") as f:
        np.savez(f, **params)
    return path


def load_params(path) -> ParamSet:
    with np.load(path) as data:
        return {k: data[k].astype(np.float64) for k in data.files}


# --------------------------------------------------------------------------- gradient check


@dataclass
class GradCheckReport:
    checked: int
    max_error: float
    tol: float
    violations: list[tuple[str, tuple[int, ...], float, float, float]]

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} checked={self.checked} max_err={self.max_error:.3e} tol={self.tol:.0e} "
                f"violations={len(self.violations)}")


def grad_check(
    loss_fn: Callable[[ParamSet], tuple[float, ParamSet]],
    params: ParamSet,
    h: float = 1e-5,
    tol: float = 1e-4,
    max_coords: int = 200,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic gradients with central differences.

    Error per coordinate is ``|analytic - numeric| / max(1, |analytic|)``;
    up to ``max_coords`` coordinates are sampled from each parameter.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    _, grads = loss_fn(params)
    violations = []
    worst = 0.0
    checked = 0
    for name, p in params.items():
        g = grads.get(name, np.zeros_like(p))
        flat = p.reshape(-1)
        if flat.size <= max_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            up, _ = loss_fn(params)
            flat[i] = orig - h
            down, _ = loss_fn(params)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            analytic = float(g.reshape(-1)[i])
            err = abs(analytic - numeric) / max(1.0, abs(analytic))
            worst = max(worst, err)
            checked += 1
            if err > tol:
                violations.append((name, np.unravel_index(i, p.shape), analytic, numeric, err))
    return GradCheckReport(checked, worst, tol, violations)
