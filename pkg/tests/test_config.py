import pytest

from fsnc.config import ConfigError, load_config, parse_config

from conftest import DATA, ROOT


def doc(**kw):
    d = {"schema_version": 1, "dataset": str(DATA / "cora"), "out": "runs/x"}
    d.update(kw)
    return d


def test_defaults(tmp_path):
    cfg = parse_config(doc(), tmp_path, env={})
    assert (cfg.N, cfg.K, cfg.Q, cfg.EI, cfg.S, cfg.E, cfg.M, cfg.T) == (2, 5, 10, 10, 100, 10, 10000, 5)
    assert cfg.setting == "inductive" and cfg.seed == 0 and cfg.method.method == "ignn"
    assert cfg.out == (tmp_path / "runs/x").resolve()
    p = cfg.protocol()
    assert p.spec.n_way == 2 and p.spec.k_shot == 5


@pytest.mark.parametrize("bad, match", [
    (doc(extra=1), "unknown keys"),
    (doc(protocol={"lr": 1}), "unknown keys"),
    (doc(split={"ratio": 1}), "unknown keys"),
    (doc(schema_version=2), "schema_version"),
    ({"schema_version": 1, "out": "x"}, "missing"),
    (doc(dataset="/nonexistent/dir"), "does not exist"),
    (doc(split={"seed": "random"}), "seed"),
    (doc(protocol={"N": 1}), "config"),
    (doc(method={"method": "gat"}), "method"),
])
def test_rejections(bad, match, tmp_path):
    with pytest.raises(ConfigError, match=match):
        parse_config(bad, tmp_path, env={})


def test_seed_environment_override(tmp_path):
    assert parse_config(doc(seed=3), tmp_path, env={"FSNC_SEED": "11"}).seed == 11
    assert parse_config(doc(seed=3), tmp_path, env={"FSNC_SEED": ""}).seed == 3
    with pytest.raises(ConfigError, match="FSNC_SEED"):
        parse_config(doc(), tmp_path, env={"FSNC_SEED": "abc"})


def test_shipped_configs_load():
    paths = sorted((ROOT / "configs").glob("*.toml"))
    assert len(paths) == 8
    for p in paths:
        cfg = load_config(p, env={})
        assert cfg.dataset.is_dir() and cfg.split_seed == "manifest"


def test_relative_paths_resolve_against_config_dir(tmp_path):
    (tmp_path / "c.toml").write_text(
        f'schema_version = 1\ndataset = "{DATA / "cora"}"\nout = "o"\n[protocol]\nK = 1\n')
    cfg = load_config(tmp_path / "c.toml", env={})
    assert cfg.out == (tmp_path / "o").resolve() and cfg.K == 1
    assert cfg.with_shots(2, 3).K == 3
    assert cfg.resolved()["protocol"]["K"] == 1


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")
    (tmp_path / "bad.toml").write_text("schema_version = = 1")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.toml")
