"""Run configuration files (TOML, versioned schema).

Example::

    schema_version = 1
    dataset = "data/cora"
    setting = "inductive"
    out = "runs/cora_ignn_2w5s"
    seed = 0

    [split]
    sizes = [3, 2, 2]
    seed = "fixed"

    [method]
    method = "ignn"

    [protocol]
    EI = 10
    S = 100
    E = 10
    M = 10000
    T = 5
    N = 2
    K = 5
    Q = 10
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .methods import MethodConfig
from .protocol import ProtocolConfig

CONFIG_SCHEMA_VERSION = 1
SEED_ENV = "FSNC_SEED"

_TOP_KEYS = {"schema_version", "dataset", "setting", "out", "seed", "split", "method", "protocol"}
_SPLIT_KEYS = {"sizes", "seed"}
_PROTOCOL_KEYS = {"EI", "S", "E", "M", "T", "N", "K", "Q"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: Path
    out: Path
    setting: str = "inductive"
    seed: int = 0
    split_sizes: tuple[int, ...] | None = None
    split_seed: int | str = "fixed"
    method: MethodConfig = field(default_factory=MethodConfig)
    EI: int = 10
    S: int = 100
    E: int = 10
    M: int = 10000
    T: int = 5
    N: int = 2
    K: int = 5
    Q: int = 10

    def protocol(self) -> ProtocolConfig:
        return ProtocolConfig(
            EI=self.EI, S=self.S, E=self.E, M=self.M, T=self.T,
            n_way=self.N, k_shot=self.K, q_query=self.Q,
            setting=self.setting, method=self.method, master_seed=self.seed,
        )

    def with_shots(self, n_way: int, k_shot: int) -> "RunConfig":
        return replace(self, N=n_way, K=k_shot)

    def resolved(self) -> dict:
        """Everything needed to reproduce the run, as plain data."""
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "dataset": str(self.dataset),
            "setting": self.setting,
            "out": str(self.out),
            "seed": self.seed,
            "split": {"sizes": list(self.split_sizes) if self.split_sizes else None,
                      "seed": self.split_seed},
            "method": self.method.as_dict(),
            "protocol": {k: getattr(self, k) for k in ("EI", "S", "E", "M", "T", "N", "K", "Q")},
        }


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def parse_config(doc: dict, base_dir: Path = Path("."), env=None) -> RunConfig:
    env = os.environ if env is None else env
    _reject_unknown(doc, _TOP_KEYS, "config")
    version = doc.get("schema_version")
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"config: schema_version must be {CONFIG_SCHEMA_VERSION}, got {version!r}")
    for key in ("dataset", "out"):
        if key not in doc:
            raise ConfigError(f"config: missing required key {key!r}")

    dataset = Path(doc["dataset"])
    if not dataset.is_absolute():
        dataset = (base_dir / dataset).resolve()
    if not (dataset / "meta.json").is_file():
        raise ConfigError(f"config: dataset directory {dataset} does not exist or has no meta.json")
    out = Path(doc["out"])
    if not out.is_absolute():
        out = (base_dir / out).resolve()

    split = doc.get("split", {})
    _reject_unknown(split, _SPLIT_KEYS, "[split]")
    split_seed = split.get("seed", "fixed")
    if not (split_seed in ("fixed", "manifest") or isinstance(split_seed, int)):
        raise ConfigError("[split]: seed must be an integer, \"fixed\" or \"manifest\"")
    sizes = split.get("sizes")

    proto = doc.get("protocol", {})
    _reject_unknown(proto, _PROTOCOL_KEYS, "[protocol]")
    try:
        method = MethodConfig.from_dict(dict(doc.get("method", {})))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[method]: {e}") from e

    seed = doc.get("seed", 0)
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None

    cfg = RunConfig(
        dataset=dataset,
        out=out,
        setting=doc.get("setting", "inductive"),
        seed=int(seed),
        split_sizes=tuple(sizes) if sizes is not None else None,
        split_seed=split_seed,
        method=method,
        **{k: int(v) for k, v in proto.items()},
    )
    try:
        cfg.protocol()
    except ValueError as e:
        raise ConfigError(f"config: {e}") from e
    return cfg


def load_config(path, env=None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: config file not found")
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    return parse_config(doc, path.parent, env)
