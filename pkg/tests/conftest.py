from pathlib import Path

import numpy as np
import pytest

from fsnc.graph import load_graph, make_graph

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def planted_graph(seed=0, n_classes=6, per_class=20, n_features=8, p_in=0.3, p_out=0.02, name="planted"):
    """Small graph with class-clustered features and mostly intra-class edges."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), per_class)
    n = labels.size
    centers = rng.normal(scale=2.0, size=(n_classes, n_features))
    x = centers[labels] + rng.normal(size=(n, n_features))
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(iu.size) < p
    return make_graph(n, np.column_stack([iu[keep], ju[keep]]), x, labels, n_classes, name)


def dataset_dirs():
    return sorted(p for p in DATA.iterdir() if (p / "meta.json").is_file())


@pytest.fixture(scope="session")
def cora():
    return load_graph(DATA / "cora")


@pytest.fixture(scope="session")
def citeseer():
    return load_graph(DATA / "citeseer")


@pytest.fixture
def planted():
    return planted_graph()


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(criterion: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        lines.append((criterion, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda t: t[0]):
            terminalreporter.write_line(line)
