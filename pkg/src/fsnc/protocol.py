"""Unified train / validate / early-stop / test protocol with repeated runs."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .episodes import EpisodeSpec, check_feasible, sample_batch
from .graph import Graph
from .methods import Method, MethodConfig, build_method
from .nn import ParamSet, copy_params, save_params
from .rng import DEV, INIT, TEST, TRAIN, derive_seed, substream
from .splits import ClassSplit, Setting, SplitView, build_views
from .stats import summarize

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1


@dataclass
class ProtocolConfig:
    EI: int = 10
    S: int = 100
    E: int = 10
    M: int = 10000
    T: int = 5
    n_way: int = 2
    k_shot: int = 5
    q_query: int = 10
    setting: str = "inductive"
    method: MethodConfig = field(default_factory=MethodConfig)
    master_seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.method, dict):
            self.method = MethodConfig.from_dict(self.method)
        Setting(self.setting)
        if self.EI < 1 or self.S < 1 or self.E < 1 or self.T < 1:
            raise ValueError("EI, S, E and T must be >= 1")
        if self.M < self.EI:
            raise ValueError(f"M={self.M} must be >= EI={self.EI}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        self.spec  # validates N, K, Q

    @property
    def spec(self) -> EpisodeSpec:
        return EpisodeSpec(self.n_way, self.k_shot, self.q_query)


@dataclass
class RepeatResult:
    repeat: int
    test_accuracy: float
    best_dev_accuracy: float
    best_epoch: int
    stop_epoch: int
    validations: list[tuple[int, float]]
    test_episode_accuracies: list[float]
    wall_clock_s: float = 0.0


@dataclass
class RunReport:
    method: str
    setting: str
    dataset: str
    config: dict
    repeats: list[RepeatResult]
    mean: float
    ci95: float
    wall_clock_s: float = 0.0

    @property
    def accuracies(self) -> list[float]:
        return [r.test_accuracy for r in self.repeats]

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "method": self.method,
            "setting": self.setting,
            "dataset": self.dataset,
            "mean": self.mean,
            "ci95": self.ci95,
            "accuracies": self.accuracies,
            "config": self.config,
            "repeats": [asdict(r) for r in self.repeats],
            "wall_clock_s": self.wall_clock_s,
        }


def evaluate_tasks(method: Method, params: ParamSet, view: SplitView, spec: EpisodeSpec, count: int,
                   seed: int, pool=None) -> float:
    """Mean accuracy over ``count`` episodes sampled with ``seed``."""
    episodes = sample_batch(view, spec, count, seed)
    return float(np.mean(method.evaluate(params, view, episodes, pool=pool)))


def check_views(method: Method, views: dict[str, SplitView], spec: EpisodeSpec) -> None:
    """Fail before training if any phase cannot supply episodes for ``spec``."""
    check_feasible(views["dev"], spec)
    check_feasible(views["test"], spec)
    if method.name != "ignn":
        check_feasible(views["train"], spec)


def run_repeat(method: Method, views: dict[str, SplitView], split: ClassSplit, config: ProtocolConfig,
               repeat: int, pool=None, checkpoint_dir: Path | None = None) -> RepeatResult:
    start = time.perf_counter()
    seed = config.master_seed
    spec = config.spec
    state = method.init_state(substream(seed, repeat, INIT), views["train"].graph.n_features,
                              len(split.train))
    train_rng = substream(seed, repeat, TRAIN)
    dev_episodes = sample_batch(views["dev"], spec, config.S, derive_seed(seed, repeat, DEV))

    best = copy_params(state.params)
    a_best, best_epoch = 0.0, 0
    patience = 0
    history = []
    k = 1
    while k <= config.M:
        method.train_step(state, views["train"], train_rng)
        if k % config.EI == 0:
            a = float(np.mean(method.evaluate(state.params, views["dev"], dev_episodes, pool=pool)))
            history.append((k, a))
            if a > a_best:
                a_best, best_epoch, patience = a, k, 0
                best = copy_params(state.params)
            else:
                patience += 1
        if patience == config.E:
            break
        k += 1
    stop_epoch = min(k, config.M)

    test_episodes = sample_batch(views["test"], spec, config.S, derive_seed(seed, repeat, TEST))
    test_accs = method.evaluate(best, views["test"], test_episodes, pool=pool)
    if checkpoint_dir is not None:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
        save_params(best, checkpoint_dir / f"repeat_{repeat}.npz")
    log.info("repeat %d: stop=%d best_epoch=%d dev=%.4f test=%.4f", repeat, stop_epoch, best_epoch,
             a_best, float(np.mean(test_accs)))
    return RepeatResult(repeat, float(np.mean(test_accs)), a_best, best_epoch, stop_epoch, history,
                        [float(a) for a in test_accs], time.perf_counter() - start)


def _repeat_worker(args):
    graph, split, config, repeat, checkpoint_dir = args
    views = build_views(graph, split, config.setting)
    method = build_method(config.method, config.spec)
    return run_repeat(method, views, split, config, repeat, checkpoint_dir=checkpoint_dir)


def run_protocol(graph: Graph, split: ClassSplit, config: ProtocolConfig, jobs: int = 1,
                 method: Method | None = None, checkpoint_dir=None, repeats=None) -> RunReport:
    """Run ``config.T`` independent repeats and summarize their test accuracies.

    ``method`` overrides the one built from ``config.method`` (used for
    scripted harness checks). ``repeats`` selects a subset or order of repeat
    indices; each repeat is seeded only by ``(master_seed, repeat)``.
    """
    start = time.perf_counter()
    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    views = build_views(graph, split, config.setting)
    built = method or build_method(config.method, config.spec)
    check_views(built, views, config.spec)
    order = list(range(config.T)) if repeats is None else list(repeats)

    if jobs > 1 and len(order) > 1 and method is None:
        with ProcessPoolExecutor(max_workers=min(jobs, len(order))) as ex:
            results = list(ex.map(_repeat_worker, [(graph, split, config, r, checkpoint_dir) for r in order]))
    elif jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = [run_repeat(built, views, split, config, r, pool, checkpoint_dir) for r in order]
    else:
        results = [run_repeat(built, views, split, config, r, None, checkpoint_dir) for r in order]

    mean, ci = summarize([r.test_accuracy for r in results])
    cfg = asdict(config)
    return RunReport(
        method=getattr(built, "name", config.method.method),
        setting=config.setting,
        dataset=graph.name,
        config=cfg,
        repeats=results,
        mean=mean,
        ci95=ci,
        wall_clock_s=time.perf_counter() - start,
    )
