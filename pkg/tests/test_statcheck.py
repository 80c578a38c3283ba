import json
import math

import numpy as np
import pytest
from scipy import stats

from stable_rng import ParameterError, RandomStream
from statcheck import (
    InsufficientDataError,
    KsReport,
    ToleranceReport,
    ZeroVarianceError,
    all_passed,
    bundle_to_json_lines,
    calibrate_null,
    chi_square_pmf,
    ecf_check,
    ks_one_sample,
    ks_two_sample,
    moment_zscore,
    tolerance_check,
)


# ============================
# КОЛМОГОРОВ-СМИРНОВ
# ============================

def test_ks_one_sample_statistic_matches_scipy():
    u = RandomStream(3).uniform(2_000)
    report = ks_one_sample(u, lambda x: x, name="uniform", seed=3)
    assert report.statistic == pytest.approx(stats.kstest(u, "uniform").statistic, rel=1e-12)
    assert report.passed
    assert report.n1 == 2_000 and report.n2 == 0
    assert report.seed == 3


def test_ks_one_sample_detects_shift():
    x = RandomStream(4).gaussian(5_000) + 0.2
    assert not ks_one_sample(x, stats.norm.cdf).passed


def test_ks_two_sample_statistic_matches_scipy():
    stream = RandomStream(5)
    a, b = stream.gaussian(1_500), stream.gaussian(2_500)
    report = ks_two_sample(a, b)
    assert report.statistic == pytest.approx(stats.ks_2samp(a, b).statistic, rel=1e-12)
    assert report.passed


@pytest.mark.parametrize("shift", [0.0, 0.05, 0.1])
def test_ks_two_sample_p_value_matches_scipy(shift):
    stream = RandomStream(8)
    a, b = stream.gaussian(1_000), stream.gaussian(1_600) + shift
    expected = stats.ks_2samp(a, b, method="asymp").pvalue
    assert ks_two_sample(a, b).p_value == pytest.approx(expected, abs=0.02)


def test_ks_two_sample_slack_absorbs_known_bias():
    stream = RandomStream(6)
    a = stream.uniform(20_000)
    b = stream.uniform(20_000) + 0.05
    assert not ks_two_sample(a, b).passed
    assert ks_two_sample(a, b, slack=0.06).passed


def test_ks_requires_enough_samples():
    with pytest.raises(InsufficientDataError):
        ks_one_sample(np.linspace(0.1, 0.9, 50), lambda x: x)


def test_ks_rejects_non_finite_samples():
    x = RandomStream(1).uniform(500)
    x[10] = np.nan
    with pytest.raises(ParameterError):
        ks_one_sample(x, lambda v: v)


# ============================
# ХИ-КВАДРАТ
# ============================

def test_chi_square_exact_fit():
    report = chi_square_pmf([50, 30, 20], [0.5, 0.3, 0.2], 100)
    assert report.statistic == pytest.approx(0.0)
    assert report.dof == 2
    assert report.p_value == pytest.approx(1.0)
    assert report.passed


def test_chi_square_pools_sparse_tail():
    report = chi_square_pmf([90, 9, 1], [0.9, 0.09], 100)
    assert report.pooled_bins == 2
    assert report.statistic == pytest.approx(0.0, abs=1e-12)


def test_chi_square_accepts_callable_pmf():
    stream = RandomStream(8)
    draws = np.searchsorted(np.cumsum(stats.poisson.pmf(np.arange(40), 2.0)), stream.uniform(10_000), side="right")
    counts = np.bincount(draws)
    assert chi_square_pmf(counts, lambda k: stats.poisson.pmf(k, 2.0), 10_000).passed


def test_chi_square_detects_wrong_rate():
    stream = RandomStream(9)
    draws = np.searchsorted(np.cumsum(stats.poisson.pmf(np.arange(40), 2.5)), stream.uniform(10_000), side="right")
    counts = np.bincount(draws)
    assert not chi_square_pmf(counts, stats.poisson.pmf(np.arange(counts.size), 2.0), 10_000).passed


def test_chi_square_count_mismatch():
    with pytest.raises(ParameterError):
        chi_square_pmf([10, 10], [0.5, 0.5], 25)


def test_chi_square_single_bin():
    with pytest.raises(InsufficientDataError):
        chi_square_pmf([3], [1.0], 3)


# ============================
# ХАРАКТЕРИСТИЧЕСКАЯ ФУНКЦИЯ И МОМЕНТЫ
# ============================

def test_ecf_of_gaussian():
    x = RandomStream(10).gaussian(50_000)
    reports = ecf_check(x, [0.5, 1.0, 2.0], lambda xi: math.exp(-xi ** 2 / 2.0), name="gauss")
    assert len(reports) == 3
    assert all_passed(reports)
    assert reports[0].threshold == pytest.approx(5.0 / math.sqrt(50_000))
    assert reports[1].name == "gauss[xi=1]"


def test_ecf_detects_wrong_scale():
    x = 1.5 * RandomStream(11).gaussian(50_000)
    assert not all_passed(ecf_check(x, [1.0], lambda xi: math.exp(-xi ** 2 / 2.0)))


def test_moment_zscore():
    x = RandomStream(12).exponential(20_000)
    report = moment_zscore(x, 1.0)
    assert report.passed
    assert abs(report.z_score) <= 4.0
    assert not moment_zscore(x, 1.1).passed


def test_moment_zero_variance():
    assert moment_zscore(np.ones(20_000), 1.0).passed
    with pytest.raises(ZeroVarianceError):
        moment_zscore(np.ones(20_000), 2.0)


def test_moment_requires_samples():
    with pytest.raises(InsufficientDataError):
        moment_zscore(np.ones(100), 1.0)
    assert moment_zscore(np.ones(100), 1.0, min_samples=10).passed


def test_tolerance_check():
    assert tolerance_check(1.0 + 1e-11, 1.0, 1e-10).passed
    assert not tolerance_check(1.1, 1.0, 1e-10).passed
    assert tolerance_check(100.5, 100.0, 0.01, relative=True).passed
    assert not tolerance_check(100.5, 100.0, 0.01).passed


# ============================
# КАЛИБРОВКА И СЕРИАЛИЗАЦИЯ
# ============================

@pytest.mark.parametrize("test", ["ks", "moment"])
def test_null_calibration(test):
    report = calibrate_null(test, trials=1_000, n=200, seed=77)
    assert report.trials == 1_000
    assert report.passed
    assert report.rejection_rate <= 0.005


@pytest.mark.slow
@pytest.mark.parametrize("test", ["ks2", "chi2"])
def test_null_calibration_slow(test):
    assert calibrate_null(test, trials=1_000, n=1_000, seed=78).passed


def test_unknown_calibration():
    with pytest.raises(ParameterError):
        calibrate_null("anderson", trials=1, n=10)


def test_reports_serialize_to_json_lines():
    reports = [
        KsReport(np.float64(0.01), np.float64(0.5), 100, 0, True, 0.001, "a", 1),
        ToleranceReport(1.0, 1.0, 0.0, 1e-10, True, "b"),
    ]
    lines = bundle_to_json_lines(reports).splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first['kind'] == "ks"
    assert first['statistic'] == pytest.approx(0.01)
    assert json.loads(lines[1])['kind'] == "tolerance"
    assert all_passed(reports)
