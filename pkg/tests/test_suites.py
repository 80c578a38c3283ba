import pytest

from stable_rng import ParameterError
from statcheck import all_passed
from suites import SUITE_ORDER, SUITE_SEEDS, SuiteSettings, run_suite
from utils.monitoring import metrics_collector


def test_mlfun_suite_passes():
    reports = run_suite('mlfun')
    assert reports
    assert all_passed(reports)
    assert {report.seed for report in reports} == {SUITE_SEEDS['mlfun']}


def test_checks_are_recorded():
    reports = run_suite('mlfun')
    summary = metrics_collector.get_metrics_summary()
    assert summary['checks_passed'] == len(reports)
    assert summary['checks_failed'] == 0


def test_duality_suite_with_overrides():
    settings = SuiteSettings(n=20_000, alpha=1.8, rho=0.5, seed=5)
    reports = run_suite('duality', settings)
    assert len(reports) == 2
    assert all_passed(reports)
    assert reports[0].name == "duality_ks[alpha=1.8,rho=0.5]"
    assert all(report.seed == 5 for report in reports)


def test_duality_suite_rejects_lower_index():
    with pytest.raises(ParameterError):
        run_suite('duality', SuiteSettings(alpha=0.8))


def test_unknown_suite():
    with pytest.raises(ParameterError):
        run_suite('benchmarks')


def test_calibration_suite():
    settings = SuiteSettings(calibration_trials=1_000, calibration_n=200)
    reports = run_suite('calibration', settings)
    assert [report.test for report in reports] == ['ks', 'ks2', 'chi2', 'moment']
    assert all_passed(reports)


def test_seed_override():
    assert SuiteSettings().seed_for('pde') == SUITE_SEEDS['pde']
    assert SuiteSettings(seed=9).seed_for('pde') == 9


@pytest.mark.slow
@pytest.mark.parametrize("suite", [name for name in SUITE_ORDER if name not in ('mlfun', 'calibration')])
def test_full_suite_passes(suite):
    assert all_passed(run_suite(suite))
