import math

import numpy as np
import pytest
from scipy import integrate, stats

from mlfun import frac_poisson_pmf_table, ml_two
from processes import (
    OutOfHorizonError,
    RenewalTrajectory,
    Route,
    SubordinatorPath,
    count_at,
    estimate_pde_solution,
    first_passage_times,
    frac_poisson_counts,
    heat_kernel,
    inverse_from_path,
    sample_inverse_subordinator,
    sample_subdiffusion_direct,
    sample_subdiffusion_dual,
    sample_subordinate_bm,
    simulate_frac_poisson,
    simulate_subordinator_path,
    subordinator_terminal_values,
)
from stable_rng import (
    LinnikParams,
    OneSidedIndex,
    ParameterError,
    sample_mittag_leffler_rv,
    sample_positive_stable,
)
from statcheck import chi_square_pmf, ecf_check, ks_one_sample, ks_two_sample, moment_zscore


# ============================
# ДРОБНЫЙ ПУАССОН
# ============================

def _trajectory(times, t_max=4.0):
    return RenewalTrajectory(np.array(times), LinnikParams(0.5, 1.0), t_max)


def test_count_at_is_right_continuous():
    traj = _trajectory([0.5, 1.2, 3.0])
    assert [count_at(traj, t) for t in (0.1, 0.5, 1.0, 1.2, 4.0)] == [0, 1, 1, 2, 3]
    with pytest.raises(OutOfHorizonError):
        count_at(traj, 5.0)


@pytest.mark.parametrize("times", [[0.5, 0.5], [1.0, 0.7], [0.0, 1.0], [1.0, 4.5]])
def test_trajectory_validation(times):
    with pytest.raises(ParameterError):
        _trajectory(times)


def test_count_at_event_boundary():
    traj = _trajectory([1.0, 2.5])
    assert count_at(traj, 2.5) == 2
    assert count_at(traj, 0.999999) == 0


def test_empty_trajectory():
    traj = _trajectory([])
    assert len(traj) == 0
    assert count_at(traj, 2.0) == 0


def test_simulated_trajectory_stays_in_horizon(make_stream):
    traj = simulate_frac_poisson(LinnikParams(0.7, 5.0), 100.0, make_stream())
    assert len(traj) > 0
    assert traj.event_times[-1] <= 100.0
    assert count_at(traj, 100.0) == len(traj)
    assert list(traj.to_frame().columns) == ['event', 'time']
    assert traj.to_dict()["values"] == list(range(1, len(traj) + 1))


def test_unit_index_counts_are_poisson(make_stream):
    n = 20_000
    counts = frac_poisson_counts(LinnikParams(1.0, 3.0), 1.0, n, make_stream())
    histogram = np.bincount(counts)
    pmf = stats.poisson.pmf(np.arange(histogram.size), 3.0)
    assert chi_square_pmf(histogram, pmf, n).passed


def test_fractional_counts_match_pmf(make_stream):
    n = 20_000
    nu, mu, t = 0.6, 1.0, 1.0
    counts = frac_poisson_counts(LinnikParams(nu, mu), t, n, make_stream())
    table = frac_poisson_pmf_table(nu, mu, t)
    histogram = np.bincount(counts, minlength=table.size)
    assert chi_square_pmf(histogram, table, n).passed


def test_no_event_probability_is_survival(make_stream):
    nu, mu, t = 0.6, 1.2, 2.0
    counts = frac_poisson_counts(LinnikParams(nu, mu), t, 50_000, make_stream())
    target = ml_two(nu, 1.0, -mu * t ** nu).value
    assert moment_zscore((counts == 0).astype(float), target).passed


# ============================
# СУБОРДИНАТОР
# ============================

def test_unit_index_path_is_identity(make_stream):
    path = simulate_subordinator_path(1.0, 1.0, 0.25, make_stream())
    np.testing.assert_array_equal(path.values, path.grid)
    assert path.grid.size == 5
    assert list(path.to_frame().columns) == ['time', 'value']


def test_path_is_non_decreasing(make_stream):
    path = simulate_subordinator_path(0.6, 2.0, 0.01, make_stream())
    assert path.values[0] == 0.0
    assert np.all(np.diff(path.values) >= 0.0)
    assert path.dt == pytest.approx(0.01)


def test_path_rejects_step_beyond_horizon(make_stream):
    with pytest.raises(ParameterError):
        simulate_subordinator_path(0.5, 1.0, 2.0, make_stream())


def test_path_validation():
    with pytest.raises(ParameterError):
        SubordinatorPath(np.array([0.0, 1.0]), np.array([0.0, -1.0]), OneSidedIndex(0.5))
    with pytest.raises(ParameterError):
        SubordinatorPath(np.array([0.0, 1.0]), np.array([0.5, 1.0]), OneSidedIndex(0.5))


def test_inverse_from_path(make_stream):
    path = simulate_subordinator_path(0.7, 5.0, 0.01, make_stream())
    level = 0.5 * path.values[-1]
    passage = inverse_from_path(path, level)
    position = int(round(passage / path.dt))
    assert path.values[position] > level
    assert path.values[position - 1] <= level
    assert inverse_from_path(path, 0.25 * level) <= passage
    with pytest.raises(OutOfHorizonError):
        inverse_from_path(path, path.values[-1])


def test_terminal_values_follow_scaling(make_stream):
    nu = 0.6
    values = subordinator_terminal_values(nu, 1.0, 1 / 64, 20_000, make_stream(stream_id=1))
    exact = sample_positive_stable(nu, make_stream(stream_id=2), 20_000)
    assert ks_two_sample(values, exact).passed


def test_inverse_subordinator_at_unit_time(make_stream):
    np.testing.assert_array_equal(
        sample_inverse_subordinator(0.6, 1.0, make_stream(), 100),
        sample_mittag_leffler_rv(0.6, make_stream(), 100),
    )


@pytest.mark.parametrize("alpha, t", [(0.4, 2.0), (0.8, 0.5)])
def test_inverse_subordinator_mean(make_stream, alpha, t):
    values = sample_inverse_subordinator(alpha, t, make_stream(), 100_000)
    assert moment_zscore(values, t ** alpha / math.gamma(1.0 + alpha)).passed


def test_unit_index_first_passage_within_one_step(make_stream):
    passage = first_passage_times(1.0, 0.5, 0.1, 50, make_stream())
    assert np.all(passage >= 0.5 - 1e-12)
    assert np.all(passage <= 0.6 + 1e-12)


def _ecdf(sample, points):
    return np.searchsorted(np.sort(sample), points, side="right") / sample.size


def test_first_passage_overshoots_by_at_most_one_step(make_stream):
    # сеточное время прохождения = ceil(L_t / dt)·dt, то есть L_t ≤ оракул ≤ L_t + dt
    dt = 1 / 64
    passage = first_passage_times(0.5, 1.0, dt, 20_000, make_stream(stream_id=3))
    exact = sample_inverse_subordinator(0.5, 1.0, make_stream(stream_id=4), 100_000)

    se = math.sqrt(passage.var() / passage.size + exact.var() / exact.size)
    gap = passage.mean() - exact.mean()
    assert -4.0 * se <= gap <= dt + 4.0 * se

    points = np.concatenate([passage, exact])
    bound = 1.63 * math.sqrt((passage.size + exact.size) / (passage.size * exact.size))
    # оракул стохастически доминирует точный закон, а точный закон, сдвинутый на dt, - оракул
    assert np.max(_ecdf(passage, points) - _ecdf(exact, points)) <= bound
    assert np.max(_ecdf(exact, points - dt) - _ecdf(passage, points)) <= bound


@pytest.mark.slow
def test_first_passage_matches_mittag_leffler_law(make_stream):
    dt = 1 / 256
    passage = first_passage_times(0.5, 1.0, dt, 5_000, make_stream(stream_id=1))
    exact = sample_inverse_subordinator(0.5, 1.0, make_stream(stream_id=2), 50_000)
    assert ks_two_sample(passage, exact, slack=dt / math.sqrt(math.pi)).passed


# ============================
# СУБДИФФУЗИЯ
# ============================

def test_near_unit_index_is_heat_flow(make_stream):
    values = sample_subdiffusion_direct(0.999, 1.0, make_stream(), 50_000)
    assert ks_one_sample(values, stats.norm(scale=math.sqrt(2.0)).cdf).passed


def test_subdiffusion_is_symmetric(make_stream):
    values = sample_subdiffusion_direct(0.5, 1.0, make_stream(), 100_000)
    assert moment_zscore(values, 0.0).passed
    assert moment_zscore((values > 0.0).astype(float), 0.5).passed


@pytest.mark.parametrize("generator, factor", [("laplacian", 2.0), ("half-laplacian", 1.0)])
def test_subdiffusion_second_moment(make_stream, generator, factor):
    alpha, t = 0.5, 2.0
    values = sample_subdiffusion_direct(alpha, t, make_stream(), 100_000, generator=generator)
    target = factor * t ** alpha / math.gamma(1.0 + alpha)
    assert moment_zscore(values ** 2, target).passed


@pytest.mark.parametrize("alpha, t", [(1.5, 1.0), (1.8, 2.0)])
def test_dual_routes_agree(make_stream, alpha, t):
    inversion = sample_subdiffusion_dual(alpha, t, "time-inversion", make_stream(stream_id=1), 20_000)
    positive = sample_subdiffusion_dual(alpha, t, Route.STABLE_POSITIVE_PART, make_stream(stream_id=2), 20_000)
    assert ks_two_sample(inversion, positive).passed


def test_cms_positive_part_route(make_stream):
    dual = sample_subdiffusion_dual(1.5, 1.0, "stable-positive-part", make_stream(stream_id=1), 20_000)
    cms = sample_subdiffusion_dual(1.5, 1.0, "stable-positive-part", make_stream(stream_id=2), 20_000,
                                   positive_part="cms")
    assert ks_two_sample(dual, cms).passed


def test_dual_route_arguments_validated(make_stream):
    with pytest.raises(ParameterError):
        Route.parse("sideways")
    with pytest.raises(ParameterError):
        sample_subdiffusion_dual(1.5, 1.0, "stable-positive-part", make_stream(), 10, positive_part="exact")
    with pytest.raises(ParameterError):
        sample_subdiffusion_dual(0.9, 1.0, "time-inversion", make_stream(), 10)


def test_subordinate_bm_characteristic_function(make_stream):
    alpha, t = 1.5, 1.0
    values = sample_subordinate_bm(alpha, t, make_stream(), 50_000)
    reports = ecf_check(values, [0.5, 1.0, 2.0], lambda xi: math.exp(-t * abs(xi) ** (2.0 / alpha)))
    assert all(report.passed for report in reports)


def test_dual_route_at_gaussian_index(make_stream):
    values = sample_subdiffusion_dual(2.0, 1.0, "time-inversion", make_stream(), 100_000)
    assert moment_zscore(values ** 2, 2.0 / math.gamma(1.5)).passed


def test_subordinate_bm_near_unit_index(make_stream):
    values = sample_subordinate_bm(1.001, 1.0, make_stream(), 50_000)
    reports = ecf_check(values, [0.5, 1.0, 2.0], lambda xi: math.exp(-xi ** 2))
    assert all(report.passed for report in reports)


def test_heat_kernel_is_density():
    mass, _ = integrate.quad(lambda x: heat_kernel(x, 1.5), -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert heat_kernel(0.0, 1.0) == pytest.approx(1.0 / math.sqrt(4.0 * math.pi))
    assert heat_kernel(0.0, 1.0, "half-laplacian") == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))


# ============================
# ОЦЕНКА РЕШЕНИЯ
# ============================

def test_pde_estimate_accounts_for_mass(make_stream):
    estimate = estimate_pde_solution(0.6, 1.0, 50, 3.0, 20_000, make_stream())
    assert estimate.mass + estimate.out_of_range_mass == pytest.approx(1.0, abs=1e-12)
    assert estimate.out_of_range_mass > 0.0
    assert list(estimate.to_frame().columns) == ['bin_left', 'bin_right', 'density']
    assert estimate.metadata()['bins'] == 50


def test_pde_estimate_second_moment(make_stream):
    alpha, t = 0.7, 1.0
    estimate = estimate_pde_solution(alpha, t, 400, 20.0, 200_000, make_stream())
    target = 2.0 * t ** alpha / math.gamma(1.0 + alpha)
    assert estimate.second_moment() == pytest.approx(target, rel=0.05)


@pytest.mark.parametrize("alpha, bins, range_, n", [
    (1.2, 50, 3.0, 20_000),
    (0.5, 5, 3.0, 20_000),
    (0.5, 50, 0.0, 20_000),
    (0.5, 50, 3.0, 1_000),
])
def test_pde_estimate_validation(make_stream, alpha, bins, range_, n):
    with pytest.raises(ParameterError):
        estimate_pde_solution(alpha, 1.0, bins, range_, n, make_stream())
