import json

import numpy as np
import pytest

SMALL_BLOCKS = {
    "ga": {"population_size": 6, "generations": 3},
    "ensemble": {"n_members": 3, "z": 2},
    "forest": {"n_trees": 8},
}


def write_series_csv(path, seed=0, T=160):
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    y = 10 + np.sin(2 * np.pi * t / 20) + 0.1 * rng.normal(size=T)
    x = np.cos(2 * np.pi * t / 20) + 0.1 * rng.normal(size=T)
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r},{float(b)!r}\n")
    return path


def small_config(csv_name="series.csv", models=None, **overrides):
    cfg = {
        "datasets": [{"name": "wave", "path": csv_name, "target": "y", "lags": 1}],
        "models": models or [{"kind": "NTSK-wRLS", "params": {"rules": 3}}],
        "seed": 3,
        **SMALL_BLOCKS,
    }
    cfg.update(overrides)
    return cfg


@pytest.fixture
def workspace(tmp_path):
    """Directory holding ``series.csv`` and a writer for ``config.json``."""
    write_series_csv(tmp_path / "series.csv")

    def write_config(**kwargs):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(small_config(output_dir=str(tmp_path / "out"), **kwargs)))
        return path

    return tmp_path, write_config


# --- acceptance reporting ------------------------------------------------------

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _criteria.append((status, marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for status, name in _criteria:
            terminalreporter.write_line(f"{status} {name}")
