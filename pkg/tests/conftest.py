"""Shared fixtures for the fsbench test suite."""
import numpy as np
import pytest

from fsbench.services.dataset import Dataset, normalize_min_max
from fsbench.services.rng import SeededRng


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run 15-trial statistical checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical acceptance experiments (need --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_dataset(features, labels, normalized=False, name="toy") -> Dataset:
    return Dataset(features=np.asarray(features, dtype=np.float64), labels=np.asarray(labels),
                   feature_names=(), normalized=normalized, name=name)


@pytest.fixture
def rng():
    return SeededRng(7)


@pytest.fixture
def two_blobs():
    """Two tight, well separated classes in 3 features; feature 3 is uniform noise."""
    gen = np.random.default_rng(11)
    n = 60
    a = np.column_stack([gen.normal(0.2, 0.02, n), gen.normal(0.2, 0.02, n), gen.uniform(0, 1, n)])
    b = np.column_stack([gen.normal(0.8, 0.02, n), gen.normal(0.8, 0.02, n), gen.uniform(0, 1, n)])
    return make_dataset(np.vstack([a, b]), np.repeat([1, 2], n), name="two-blobs")


@pytest.fixture
def two_blobs_normalized(two_blobs):
    return normalize_min_max(two_blobs)


@pytest.fixture
def defaults_file(tmp_path, monkeypatch):
    """Point the settings at a copy of the shipped defaults so tests may edit it."""
    from pathlib import Path

    from fsbench.config import CONFIG_DIR, settings

    target = tmp_path / "defaults.yaml"
    target.write_text(Path(CONFIG_DIR / "defaults.yaml").read_text(encoding="utf-8"), encoding="utf-8")
    monkeypatch.setattr(settings, "DEFAULTS_FILE", str(target))
    return target
