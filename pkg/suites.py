"""
Приемочные наборы проверок для команды verify.

Каждый набор - функция (settings) -> list[отчет]. Зерна по умолчанию
зафиксированы в SUITE_SEEDS; номер проверки внутри набора задает
stream_id, поэтому отдельные проверки не зависят друг от друга.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import special, stats

import config
from mlfun import (
    MLArgs,
    frac_poisson_pmf,
    frac_poisson_pmf_table,
    levy_cdf,
    linnik_cdf,
    ml_three,
    ml_two,
    ml_values,
    mittag_leffler_rv_moment,
)
from processes import (
    Route,
    estimate_pde_solution,
    first_passage_times,
    frac_poisson_counts,
    heat_kernel,
    sample_inverse_subordinator,
    sample_subdiffusion_direct,
    sample_subdiffusion_dual,
    sample_subordinate_bm,
    subordinator_terminal_values,
)
from stable_rng import (
    LinnikParams,
    ParameterError,
    RandomStream,
    StrictStableParams,
    sample_dual_positive,
    sample_mittag_leffler_rv,
    sample_positive_linnik,
    sample_positive_part,
    sample_positive_stable,
    sample_strictly_stable,
    shard_map,
)
from statcheck import (
    CALIBRATION_TESTS,
    AnyReport,
    calibrate_null,
    chi_square_pmf,
    ecf_check,
    ks_one_sample,
    ks_two_sample,
    moment_zscore,
    tolerance_check,
)
from utils.monitoring import metrics_collector

logger = logging.getLogger(__name__)

# Зерна по умолчанию; --seed заменяет зерно выбранного набора
SUITE_SEEDS: Dict[str, int] = {
    'samplers': 101,
    'mlfun': 0,
    'duality': 11,
    'processes': 307,
    'pde': 509,
    'calibration': 20240601,
}

SUITE_ORDER = ('samplers', 'mlfun', 'duality', 'processes', 'pde', 'calibration')

# Максимум плотности L_1 при α = 1/2 (закон √2|N(0,1)|): 1/√π
_INVERSE_HALF_DENSITY_MAX = 1.0 / math.sqrt(math.pi)

# Сетка 5 × 4 × 10 = 200 точек для сведения E^1_{ξ,μ} к E_{ξ,μ}
_REDUCTION_XI = (0.3, 0.6, 0.9, 1.3, 1.7)
_REDUCTION_MU = (0.5, 1.0, 1.5, 2.0)
_REDUCTION_Z = np.linspace(-4.0, 2.0, 10)


@dataclass
class SuiteSettings:
    """Параметры прогона наборов"""
    n: int = field(default_factory=lambda: config.VERIFY_SAMPLES)
    paths: int = field(default_factory=lambda: config.VERIFY_PATHS)
    path_dt: float = field(default_factory=lambda: config.VERIFY_PATH_DT)
    threshold_p: float = field(default_factory=lambda: config.THRESHOLD_P)
    workers: int = field(default_factory=lambda: config.MC_WORKERS)
    seed: Optional[int] = None
    alpha: Optional[float] = None
    rho: Optional[float] = None
    calibration_trials: int = 1000
    calibration_n: int = 1000

    def seed_for(self, suite: str) -> int:
        return SUITE_SEEDS[suite] if self.seed is None else int(self.seed)


class _Checks:
    """Нумерация подпотоков и пометка отчетов зерном"""

    def __init__(self, suite: str, settings: SuiteSettings):
        self.suite = suite
        self.settings = settings
        self.seed = settings.seed_for(suite)
        self.reports: List[AnyReport] = []
        self._next_stream = 0

    def stream(self) -> RandomStream:
        self._next_stream += 1
        return RandomStream(self.seed, self._next_stream)

    def draw(self, sampler: Callable[[RandomStream, int], np.ndarray], n: Optional[int] = None) -> np.ndarray:
        n = n or self.settings.n
        return shard_map(lambda m, sub: sampler(sub, m), n, self.stream(), self.settings.workers)

    def add(self, *reports: AnyReport):
        for report in reports:
            report.seed = self.seed
            self.reports.append(report)


# ============================
# ГЕНЕРАТОРЫ
# ============================

def samplers_suite(settings: SuiteSettings) -> List[AnyReport]:
    checks = _Checks('samplers', settings)
    p = settings.threshold_p

    half = checks.draw(lambda s, m: sample_positive_stable(0.5, s, m))
    checks.add(ks_one_sample(half, levy_cdf, p, name="kanter_levy_ks"))

    for nu in np.round(np.arange(0.2, 0.95, 0.1), 1):
        s_values = checks.draw(lambda s, m, nu=nu: sample_positive_stable(nu, s, m))
        for lam in (0.5, 1.0, 2.0):
            checks.add(moment_zscore(np.exp(-lam * s_values), math.exp(-lam ** nu),
                                     name=f"laplace[nu={nu:g},lambda={lam:g}]"))

    ml = checks.draw(lambda s, m: sample_mittag_leffler_rv(0.5, s, m))
    half_normal = np.abs(math.sqrt(2.0) * checks.draw(lambda s, m: s.gaussian(m)))
    checks.add(
        ks_two_sample(ml, half_normal, p, name="mittag_leffler_half_normal_ks"),
        moment_zscore(ml, mittag_leffler_rv_moment(0.5, 1), name="mittag_leffler_mean"),
    )

    params = LinnikParams(0.7, 1.0)
    linnik = checks.draw(lambda s, m: sample_positive_linnik(params, s, m))
    checks.add(ks_one_sample(linnik, lambda t: linnik_cdf(params, t, tol=config.ML_ASYMPTOTIC_TOL), p,
                             name="linnik_cdf_ks"))

    cauchy = checks.draw(lambda s, m: sample_strictly_stable(StrictStableParams(1.0, 0.5), s, m))
    checks.add(ks_one_sample(cauchy, stats.cauchy.cdf, p, name="cms_cauchy_ks"))

    skewed = checks.draw(lambda s, m: sample_strictly_stable(StrictStableParams(1.5, 0.6), s, m))
    checks.add(moment_zscore((skewed > 0.0).astype(float), 0.6, name="cms_positivity[alpha=1.5,rho=0.6]"))
    return checks.reports


# ============================
# ФУНКЦИИ МИТТАГ-ЛЕФФЛЕРА
# ============================

def _worst(name: str, values: np.ndarray, targets: np.ndarray, tolerance: float, relative: bool = False):
    reports = [tolerance_check(v, t, tolerance, name, relative) for v, t in zip(values, targets)]
    return max(reports, key=lambda r: r.abs_error / r.tolerance)


def mlfun_suite(settings: SuiteSettings) -> List[AnyReport]:
    checks = _Checks('mlfun', settings)

    z = np.linspace(-5.0, 5.0, 41)
    checks.add(_worst("ml_exp_identity", ml_values(1.0, 1.0, z), np.exp(z), 1e-12, relative=True))

    y = np.linspace(0.0, 10.0, 21)
    checks.add(_worst("ml_cos_identity", ml_values(2.0, 1.0, -y ** 2), np.cos(y), 1e-10))

    checks.add(_worst("ml_erfc_identity", ml_values(0.5, 1.0, z), special.erfcx(-z), 1e-8, relative=True))

    grid = [(xi, mu, float(zz)) for xi in _REDUCTION_XI for mu in _REDUCTION_MU for zz in _REDUCTION_Z]
    three = np.array([ml_three(MLArgs(xi, mu, 1.0, zz)).value for xi, mu, zz in grid])
    two = np.array([ml_two(xi, mu, zz).value for xi, mu, zz in grid])
    checks.add(_worst("prabhakar_gamma_one_reduction", three, two, 1e-12, relative=True))

    kummer, exact = [], []
    for k in range(11):
        for x in (0.5, 2.0, 5.0):
            kummer.append(ml_three(MLArgs(1.0, k + 1.0, k + 1.0, -x)).value)
            exact.append(math.exp(-x) / math.factorial(k))
    checks.add(_worst("prabhakar_exponential_identity", np.array(kummer), np.array(exact), 1e-10))

    ks = np.arange(21)
    poisson = np.array([frac_poisson_pmf(1.0, 3.0, 1.0, int(k)) for k in ks])
    checks.add(_worst("frac_poisson_unit_index", poisson, stats.poisson.pmf(ks, 3.0), 1e-10))

    table = frac_poisson_pmf_table(0.6, 1.0, 1.0)
    checks.add(tolerance_check(float(table.sum()), 1.0, 1e-8, "frac_poisson_mass"))
    return checks.reports


# ============================
# ДВОЙСТВЕННОСТЬ
# ============================

def duality_suite(settings: SuiteSettings) -> List[AnyReport]:
    checks = _Checks('duality', settings)
    p = settings.threshold_p
    alpha = 1.5 if settings.alpha is None else settings.alpha
    rho = 0.6 if settings.rho is None else settings.rho
    if not 1.0 < alpha <= 2.0:
        raise ParameterError(f"проверка двойственности требует α ∈ (1, 2], получено {alpha}")

    params = StrictStableParams(alpha, rho)
    direct = checks.draw(lambda s, m: sample_positive_part(params, s, m))
    dual = checks.draw(lambda s, m: sample_dual_positive(params, s, m))
    checks.add(ks_two_sample(direct, dual, p, name=f"duality_ks[alpha={alpha:g},rho={rho:g}]"))

    edge = StrictStableParams(alpha, 1.0 / alpha)
    direct = checks.draw(lambda s, m: sample_positive_part(edge, s, m))
    kanter = checks.draw(lambda s, m: sample_dual_positive(edge, s, m))
    checks.add(ks_two_sample(direct, kanter, p, name=f"duality_edge_ks[alpha={alpha:g}]"))
    return checks.reports


# ============================
# ПРОЦЕССЫ
# ============================

def processes_suite(settings: SuiteSettings) -> List[AnyReport]:
    checks = _Checks('processes', settings)
    p, n = settings.threshold_p, settings.n

    params = LinnikParams(0.6, 1.0)
    counts = frac_poisson_counts(params, 1.0, n, checks.stream(), settings.workers)
    table = frac_poisson_pmf_table(params.nu, params.mu, 1.0)
    checks.add(
        chi_square_pmf(np.bincount(counts), table, n, p, name="frac_poisson_chi_square[nu=0.6]"),
        moment_zscore((counts == 0).astype(float), 1.0 - linnik_cdf(params, 1.0), name="frac_poisson_survival"),
    )

    poisson = LinnikParams(1.0, 3.0)
    counts = frac_poisson_counts(poisson, 1.0, n, checks.stream(), settings.workers)
    checks.add(chi_square_pmf(np.bincount(counts), lambda k: stats.poisson.pmf(k, 3.0), n, p,
                              name="frac_poisson_chi_square[nu=1]"))

    terminal = subordinator_terminal_values(0.5, 1.0, 1.0 / 1024, settings.paths, checks.stream(), settings.workers)
    coarse = subordinator_terminal_values(0.5, 1.0, 1.0 / 256, settings.paths, checks.stream(), settings.workers)
    checks.add(
        ks_one_sample(terminal, levy_cdf, p, name="subordinator_terminal_ks"),
        ks_two_sample(terminal, coarse, p, name="subordinator_grid_refinement_ks"),
    )
    half_time = subordinator_terminal_values(0.7, 0.5, 1.0 / 64, settings.paths, checks.stream(), settings.workers)
    checks.add(moment_zscore(np.exp(-half_time), math.exp(-0.5), name="subordinator_laplace",
                             min_samples=min(settings.paths, 10_000)))

    for alpha in (0.3, 0.5, 0.7):
        for t in (0.5, 1.0, 2.0):
            values = checks.draw(lambda s, m, a=alpha, tt=t: sample_inverse_subordinator(a, tt, s, m))
            checks.add(moment_zscore(values, t ** alpha / math.gamma(1.0 + alpha),
                                     name=f"inverse_subordinator_mean[alpha={alpha},t={t}]"))

    dt = settings.path_dt
    oracle = first_passage_times(0.5, 1.0, dt, settings.paths, checks.stream(), settings.workers)
    marginal = checks.draw(lambda s, m: sample_inverse_subordinator(0.5, 1.0, s, m))
    checks.add(ks_two_sample(marginal, oracle, p, slack=_INVERSE_HALF_DENSITY_MAX * dt,
                             name="inverse_subordinator_path_oracle_ks"))

    for alpha in (1.25, 1.5, 1.8):
        for t in (1.0, 2.0):
            direct = checks.draw(lambda s, m, a=alpha, tt=t: sample_subdiffusion_direct(1.0 / a, tt, s, m))
            inversion = checks.draw(
                lambda s, m, a=alpha, tt=t: sample_subdiffusion_dual(a, tt, Route.TIME_INVERSION, s, m))
            positive = checks.draw(
                lambda s, m, a=alpha, tt=t: sample_subdiffusion_dual(a, tt, Route.STABLE_POSITIVE_PART, s, m))
            tag = f"alpha={alpha},t={t}"
            checks.add(
                ks_two_sample(direct, inversion, p, name=f"routes_direct_inversion[{tag}]"),
                ks_two_sample(direct, positive, p, name=f"routes_direct_positive[{tag}]"),
                ks_two_sample(inversion, positive, p, name=f"routes_inversion_positive[{tag}]"),
            )

    alpha = 1.5
    for t in (1.0, 2.0):
        bm = checks.draw(lambda s, m, tt=t: sample_subordinate_bm(alpha, tt, s, m))
        checks.add(*ecf_check(bm, (0.5, 1.0, 2.0),
                              lambda xi, tt=t: math.exp(-tt * abs(xi) ** (2.0 / alpha)),
                              name=f"subordinate_bm_ecf[t={t}]"))
        symmetric = StrictStableParams(2.0 / alpha, 0.5)
        oracle = t ** (alpha / 2.0) * checks.draw(lambda s, m: sample_strictly_stable(symmetric, s, m))
        checks.add(ks_two_sample(bm, oracle, p, name=f"subordinate_bm_stable_ks[t={t}]"))
    return checks.reports


# ============================
# ДРОБНОЕ УРАВНЕНИЕ
# ============================

def pde_suite(settings: SuiteSettings) -> List[AnyReport]:
    checks = _Checks('pde', settings)
    n = settings.n

    estimate = estimate_pde_solution(0.5, 1.0, 81, 8.0, n, checks.stream(), settings.workers)
    target = 2.0 / math.gamma(1.5)
    checks.add(
        tolerance_check(estimate.second_moment(), target, 0.02 * target, "pde_second_moment"),
        tolerance_check(estimate.mass + estimate.out_of_range_mass, 1.0, 1e-12, "pde_mass_accounting"),
    )

    near_heat = estimate_pde_solution(0.999, 1.0, 81, 8.0, n, checks.stream(), settings.workers)
    kernel = heat_kernel(near_heat.centers, 1.0)
    worst = int(np.argmax(np.abs(near_heat.density - kernel)))
    checks.add(tolerance_check(near_heat.density[worst], kernel[worst], 5.0 * math.sqrt(81 / n),
                               "pde_heat_kernel_limit"))
    return checks.reports


def calibration_suite(settings: SuiteSettings) -> List[AnyReport]:
    checks = _Checks('calibration', settings)
    for test in CALIBRATION_TESTS:
        checks.add(calibrate_null(test, settings.calibration_trials, settings.calibration_n,
                                  checks.seed, settings.threshold_p))
    return checks.reports


SUITES: Dict[str, Callable[[SuiteSettings], List[AnyReport]]] = {
    'samplers': samplers_suite,
    'mlfun': mlfun_suite,
    'duality': duality_suite,
    'processes': processes_suite,
    'pde': pde_suite,
    'calibration': calibration_suite,
}


def run_suite(name: str, settings: Optional[SuiteSettings] = None) -> List[AnyReport]:
    """
    Запуск набора по имени; 'all' запускает все наборы по порядку.

    Returns:
        list: отчеты всех проверок набора
    """
    settings = settings or SuiteSettings()
    names = SUITE_ORDER if name == 'all' else (name,)
    reports: List[AnyReport] = []
    for suite in names:
        if suite not in SUITES:
            raise ParameterError(f"неизвестный набор {suite!r}, ожидается all или один из {SUITE_ORDER}")
        logger.info(f"📊 Набор {suite}: зерно {settings.seed_for(suite)}")
        with metrics_collector.timed(suite) as timer:
            suite_reports = SUITES[suite](settings)
        for report in suite_reports:
            metrics_collector.record_check(report.name, report.passed, timer.elapsed)
            if not report.passed:
                logger.warning(f"❌ {suite}/{report.name} не пройдена")
        passed = sum(1 for r in suite_reports if r.passed)
        logger.info(f"✅ Набор {suite}: {passed}/{len(suite_reports)} проверок за {timer.elapsed:.1f} с")
        reports.extend(suite_reports)
    return reports
