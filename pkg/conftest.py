"""Общие фикстуры тестов"""

import pytest

import config
from stable_rng import RandomStream
from utils.monitoring import metrics_collector


@pytest.fixture
def make_stream():
    """Фабрика потоков с фиксированным зерном"""
    def factory(seed: int = 12345, stream_id: int = 0) -> RandomStream:
        return RandomStream(seed, stream_id)
    return factory


@pytest.fixture
def results_dir(tmp_path, monkeypatch):
    path = tmp_path / "results"
    monkeypatch.setattr(config, "RESULTS_DIR", str(path))
    return path


@pytest.fixture(autouse=True)
def isolated_run(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "LOG_FILE", str(tmp_path / "logs" / "stablesim.log"))
    monkeypatch.setattr(config, "ARCHIVE_REPORTS", False)
    monkeypatch.setattr(config, "SAVE_METRICS", False)
    metrics_collector.reset()
    yield
    metrics_collector.reset()
