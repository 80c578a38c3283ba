import json

import pytest

import config
from utils.monitoring import MetricsCollector
from utils.validation import Validation


# ============================
# ПАРАМЕТРЫ КОМАНД
# ============================

def test_complete_parameter_set():
    assert Validation.check_parameters('eval', 'ml-three', {'xi': 0.5, 'offset': 1.0, 'gamma': 2.0, 'z': -1.0}) == (True, "")


def test_missing_parameters_are_named_as_flags():
    ok, message = Validation.check_parameters('simulate', 'fpp', {'nu': 0.5})
    assert not ok
    assert "--mu" in message and "--t-max" in message


def test_unknown_parameters_are_reported():
    ok, message = Validation.check_parameters('sample', 'positive-stable', {'nu': 0.5, 'rho': 0.5})
    assert not ok
    assert "--rho" in message


def test_none_values_are_ignored():
    assert Validation.check_parameters('sample', 'positive-stable', {'nu': 0.5, 'rho': None})[0]


def test_optional_parameters():
    assert Validation.check_parameters('simulate', 'subdiffusion', {'alpha': 1.5, 't': 1.0, 'route': 'direct'})[0]
    assert Validation.check_parameters('verify', 'duality', {'alpha': 1.8})[0]
    assert Validation.check_parameters('verify', 'all', {})[0]


@pytest.mark.parametrize("subcommand, selector", [('plot', 'fpp'), ('eval', 'gamma')])
def test_unknown_command_or_selector(subcommand, selector):
    assert not Validation.check_parameters(subcommand, selector, {})[0]


@pytest.mark.parametrize("seed, ok", [(0, True), (2 ** 64 - 1, True), (2 ** 64, False), (-5, False), (None, False)])
def test_seed_range(seed, ok):
    assert Validation.validate_seed(seed)[0] is ok


def test_sample_size():
    assert Validation.validate_sample_size(1)[0]
    assert not Validation.validate_sample_size(0)[0]


@pytest.mark.parametrize("alpha, route, ok", [
    (0.5, None, True),
    (0.5, 'direct', True),
    (0.5, 'time-inversion', False),
    (1.5, None, True),
    (1.5, 'stable-positive-part', True),
    (1.5, 'direct', False),
    (1.5, 'teleport', False),
])
def test_route_matches_index(alpha, route, ok):
    assert Validation.validate_route(alpha, route)[0] is ok


def test_output_path(tmp_path):
    assert Validation.validate_output_path(None)[0]
    assert Validation.validate_output_path('-')[0]
    assert Validation.validate_output_path(str(tmp_path / "out.csv"))[0]
    assert not Validation.validate_output_path(str(tmp_path / "missing" / "out.csv"))[0]


# ============================
# КОНФИГУРАЦИЯ И МЕТРИКИ
# ============================

def test_default_config_is_valid():
    assert not any("❌" in error for error in config.validate_config())


def test_config_flags_bad_values(monkeypatch):
    monkeypatch.setattr(config, "THRESHOLD_P", 1.5)
    monkeypatch.setattr(config, "MC_WORKERS", 0)
    errors = config.validate_config()
    assert any("THRESHOLD_P" in error for error in errors)
    assert any("MC_WORKERS" in error for error in errors)


def test_bm_variance_factor(monkeypatch):
    assert config.bm_variance_factor("laplacian") == 2.0
    assert config.bm_variance_factor("half-laplacian") == 1.0
    monkeypatch.setattr(config, "BM_GENERATOR", "half-laplacian")
    assert config.bm_variance_factor() == 1.0
    with pytest.raises(ValueError):
        config.bm_variance_factor("bilaplacian")


def test_metrics_summary_and_file(results_dir):
    collector = MetricsCollector()
    collector.record_draws("positive_stable", 10)
    collector.record_draws("positive_stable", 5)
    collector.record_rejections(8, 4)
    collector.record_regimes({'series': 3})
    collector.record_check("kanter_levy", True, 0.5)
    collector.record_check("linnik_ks", False, 0.25)
    with pytest.raises(KeyError):
        with collector.timed("broken"):
            raise KeyError("boom")

    summary = collector.get_metrics_summary()
    assert summary['draws'] == {'positive_stable': 15}
    assert summary['total_draws'] == 15
    assert summary['acceptance_rate'] == 0.5
    assert summary['ml_regimes'] == {'series': 3}
    assert summary['checks_passed'] == 1 and summary['checks_failed'] == 1
    assert summary['errors'] == 1

    path = collector.save_metrics_to_file()
    with open(path, encoding='utf-8') as f:
        stored = json.load(f)
    assert stored['check_durations'] == {'kanter_levy': 0.5, 'linnik_ks': 0.25}
