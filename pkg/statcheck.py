"""
Статистические проверки: критерии Колмогорова-Смирнова, хи-квадрат,
эмпирическая характеристическая функция, z-оценка момента.

Каждая проверка возвращает отчет-датакласс с полем passed и методом
to_dict() для сериализации в JSON.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, ClassVar, Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy import special, stats

import config
from stable_rng import ParameterError, RandomStream

logger = logging.getLogger(__name__)

MIN_KS_SAMPLES = 100
MIN_MOMENT_SAMPLES = 10_000
MIN_POOLED_EXPECTED = 5.0
MOMENT_Z_LIMIT = 4.0
ECF_SIGMAS = 5.0


class InsufficientDataError(ValueError):
    """Слишком мало данных для проверки"""


class ZeroVarianceError(ValueError):
    """Нулевая дисперсия при среднем, отличном от целевого"""


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


class Report:
    """Общий интерфейс отчетов"""
    kind: ClassVar[str] = "report"

    def to_dict(self):
        data = {key: _plain(value) for key, value in asdict(self).items()}
        data['kind'] = self.kind
        return data


@dataclass
class KsReport(Report):
    kind: ClassVar[str] = "ks"
    statistic: float
    p_value: float
    n1: int
    n2: int
    passed: bool
    threshold_p: float
    name: str = "ks"
    seed: Optional[int] = None


@dataclass
class ChiSquareReport(Report):
    kind: ClassVar[str] = "chi_square"
    statistic: float
    dof: int
    p_value: float
    pooled_bins: int
    passed: bool
    threshold_p: float
    name: str = "chi_square"
    seed: Optional[int] = None


@dataclass
class EcfReport(Report):
    kind: ClassVar[str] = "ecf"
    xi: float
    empirical_re: float
    empirical_im: float
    target_re: float
    target_im: float
    deviation: float
    threshold: float
    n: int
    passed: bool
    name: str = "ecf"
    seed: Optional[int] = None


@dataclass
class MomentReport(Report):
    kind: ClassVar[str] = "moment"
    empirical: float
    target: float
    z_score: float
    n: int
    passed: bool
    variance: float = math.nan
    name: str = "moment"
    seed: Optional[int] = None


@dataclass
class ToleranceReport(Report):
    kind: ClassVar[str] = "tolerance"
    value: float
    target: float
    abs_error: float
    tolerance: float
    passed: bool
    name: str = "tolerance"
    seed: Optional[int] = None


@dataclass
class CalibrationReport(Report):
    kind: ClassVar[str] = "calibration"
    test: str
    trials: int
    n: int
    rejections: int
    rejection_rate: float
    max_rate: float
    threshold_p: float
    passed: bool
    name: str = "calibration"
    seed: Optional[int] = None


AnyReport = Union[KsReport, ChiSquareReport, EcfReport, MomentReport, ToleranceReport, CalibrationReport]


def _as_samples(samples, minimum: int) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < minimum:
        raise InsufficientDataError(f"нужно не меньше {minimum} значений, получено {x.size}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("выборка содержит нечисловые или бесконечные значения")
    return x


def _kolmogorov_p(statistic: float, effective_n: float) -> float:
    # поправка Стивенса к асимптотическому распределению Колмогорова
    root = math.sqrt(effective_n)
    return float(np.clip(special.kolmogorov((root + 0.12 + 0.11 / root) * statistic), 0.0, 1.0))


# ============================
# КОЛМОГОРОВ-СМИРНОВ
# ============================

def ks_one_sample(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray],
                  threshold_p: Optional[float] = None, name: str = "ks_one_sample",
                  seed: Optional[int] = None) -> KsReport:
    """Одновыборочный критерий: D = sup |F_n - F|"""
    threshold_p = config.THRESHOLD_P if threshold_p is None else threshold_p
    x = np.sort(_as_samples(samples, MIN_KS_SAMPLES))
    n = x.size
    values = np.clip(np.asarray(cdf(x), dtype=float), 0.0, 1.0)
    ranks = np.arange(1, n + 1) / n
    statistic = float(max(np.max(ranks - values), np.max(values - (ranks - 1.0 / n)), 0.0))
    p_value = _kolmogorov_p(statistic, n)
    return KsReport(statistic, p_value, n, 0, p_value > threshold_p, threshold_p, name, seed)


def ks_two_sample(a: Sequence[float], b: Sequence[float], threshold_p: Optional[float] = None,
                  slack: float = 0.0, name: str = "ks_two_sample", seed: Optional[int] = None) -> KsReport:
    """
    Двухвыборочный критерий с эффективным объемом n1·n2/(n1+n2).

    slack уменьшает статистику перед вычислением p-значения; так учитывается
    известное смещение одной из выборок (например, дискретизация пути).
    """
    threshold_p = config.THRESHOLD_P if threshold_p is None else threshold_p
    a = _as_samples(a, MIN_KS_SAMPLES)
    b = _as_samples(b, MIN_KS_SAMPLES)
    n1, n2 = a.size, b.size
    statistic = float(stats.ks_2samp(a, b, method="asymp").statistic)
    p_value = _kolmogorov_p(max(statistic - slack, 0.0), n1 * n2 / (n1 + n2))
    return KsReport(statistic, p_value, n1, n2, p_value > threshold_p, threshold_p, name, seed)


# ============================
# ХИ-КВАДРАТ
# ============================

def _pool(observed: np.ndarray, expected: np.ndarray):
    pooled_obs, pooled_exp = [], []
    acc_obs = acc_exp = 0.0
    for o, e in zip(observed, expected):
        acc_obs += o
        acc_exp += e
        if acc_exp >= MIN_POOLED_EXPECTED:
            pooled_obs.append(acc_obs)
            pooled_exp.append(acc_exp)
            acc_obs = acc_exp = 0.0
    if acc_exp > 0.0 or acc_obs > 0.0:
        if pooled_exp:
            pooled_obs[-1] += acc_obs
            pooled_exp[-1] += acc_exp
        else:
            pooled_obs.append(acc_obs)
            pooled_exp.append(acc_exp)
    return np.array(pooled_obs), np.array(pooled_exp)


def chi_square_pmf(counts: Sequence[int], pmf: Union[Callable[[int], float], Sequence[float]], n: int,
                   threshold_p: Optional[float] = None, name: str = "chi_square",
                   seed: Optional[int] = None) -> ChiSquareReport:
    """
    Критерий хи-квадрат для целочисленной выборки.

    counts[k] - число значений, равных k. Масса pmf за пределами len(counts)
    образует отдельную хвостовую корзину. Корзины объединяются слева
    направо, пока ожидаемое число не достигнет 5; остаток справа
    присоединяется к последней корзине.
    """
    threshold_p = config.THRESHOLD_P if threshold_p is None else threshold_p
    observed = np.asarray(counts, dtype=float)
    if observed.sum() != n:
        raise ParameterError(f"сумма счетчиков {observed.sum():.0f} не равна n = {n}")
    support = np.arange(observed.size)
    if callable(pmf):
        probs = np.array([pmf(int(k)) for k in support], dtype=float)
    else:
        probs = np.zeros(observed.size)
        given = np.asarray(pmf, dtype=float)[:observed.size]
        probs[:given.size] = given
    tail = max(0.0, 1.0 - float(probs.sum()))
    observed = np.append(observed, 0.0)
    expected = n * np.append(probs, tail)

    pooled_obs, pooled_exp = _pool(observed, expected)
    if pooled_obs.size < 2:
        raise InsufficientDataError("после объединения осталось меньше двух корзин")
    with np.errstate(divide="ignore", invalid="ignore"):
        statistic = float(np.sum((pooled_obs - pooled_exp) ** 2 / pooled_exp))
    dof = int(pooled_obs.size - 1)
    p_value = float(stats.chi2.sf(statistic, dof))
    return ChiSquareReport(statistic, dof, p_value, int(pooled_obs.size), p_value > threshold_p,
                           threshold_p, name, seed)


# ============================
# ХАРАКТЕРИСТИЧЕСКАЯ ФУНКЦИЯ И МОМЕНТЫ
# ============================

def ecf_check(samples: Sequence[float], xi_values: Iterable[float], target: Callable[[float], complex],
              name: str = "ecf", seed: Optional[int] = None,
              min_samples: int = MIN_MOMENT_SAMPLES) -> List[EcfReport]:
    """Отклонение эмпирической характеристической функции от target в точках ξ, порог 5/√n"""
    x = _as_samples(samples, min_samples)
    n = x.size
    threshold = ECF_SIGMAS / math.sqrt(n)
    reports = []
    for xi in xi_values:
        empirical = complex(np.mean(np.cos(xi * x)), np.mean(np.sin(xi * x)))
        expected = complex(target(xi))
        deviation = abs(empirical - expected)
        reports.append(EcfReport(
            float(xi), empirical.real, empirical.imag, expected.real, expected.imag,
            deviation, threshold, n, deviation <= threshold, f"{name}[xi={xi:g}]", seed,
        ))
    return reports


def moment_zscore(samples: Sequence[float], target: float, name: str = "moment",
                  seed: Optional[int] = None, min_samples: int = MIN_MOMENT_SAMPLES) -> MomentReport:
    """z = (среднее - target)/(s/√n), проходит при |z| ≤ 4"""
    x = _as_samples(samples, min_samples)
    n = x.size
    mean = float(np.mean(x))
    variance = float(np.var(x, ddof=1))
    if variance == 0.0:
        if mean != target:
            raise ZeroVarianceError(f"нулевая дисперсия, среднее {mean} ≠ {target}")
        z_score = 0.0
    else:
        z_score = (mean - target) / math.sqrt(variance / n)
    return MomentReport(mean, float(target), z_score, n, abs(z_score) <= MOMENT_Z_LIMIT, variance, name, seed)


def tolerance_check(value: float, target: float, tolerance: float, name: str = "tolerance",
                    relative: bool = False) -> ToleranceReport:
    """Детерминированное сравнение числа с эталоном"""
    error = abs(value - target)
    bound = tolerance * max(1.0, abs(target)) if relative else tolerance
    return ToleranceReport(float(value), float(target), float(error), float(bound),
                           bool(error <= bound), name)


# ============================
# КАЛИБРОВКА
# ============================

CALIBRATION_TESTS = ("ks", "ks2", "chi2", "moment")


def _null_trial(test: str, n: int, stream: RandomStream, threshold_p: float) -> bool:
    if test == "ks":
        return ks_one_sample(stream.uniform(n), lambda u: u, threshold_p).passed
    if test == "ks2":
        return ks_two_sample(stream.gaussian(n), stream.gaussian(n), threshold_p).passed
    if test == "chi2":
        support = np.arange(40)
        pmf = stats.poisson.pmf(support, 3.0)
        draws = np.searchsorted(np.cumsum(pmf), stream.uniform(n), side="right")
        counts = np.bincount(draws, minlength=support.size)[:support.size]
        return chi_square_pmf(counts, pmf, int(counts.sum()), threshold_p).passed
    if test == "moment":
        return moment_zscore(stream.exponential(n), 1.0, min_samples=1).passed
    raise ParameterError(f"неизвестный тип калибровки {test!r}, ожидается один из {CALIBRATION_TESTS}")


def calibrate_null(test: str, trials: int = 1000, n: int = 1000, seed: int = None,
                   threshold_p: Optional[float] = None, max_rate: float = 0.005) -> CalibrationReport:
    """Доля отклонений верной гипотезы по trials независимым зернам"""
    threshold_p = config.THRESHOLD_P if threshold_p is None else threshold_p
    seed = config.DEFAULT_SEED if seed is None else seed
    root = RandomStream(seed)
    rejections = sum(
        0 if _null_trial(test, n, root.split(trial), threshold_p) else 1
        for trial in range(trials)
    )
    rate = rejections / trials
    logger.info(f"📊 Калибровка {test}: {rejections}/{trials} отклонений")
    return CalibrationReport(test, trials, n, rejections, rate, max_rate, threshold_p,
                             rate <= max_rate, f"calibration_{test}", seed)


def all_passed(reports: Iterable[AnyReport]) -> bool:
    return all(report.passed for report in reports)


def bundle_to_json_lines(reports: Iterable[AnyReport]) -> str:
    """Один компактный JSON-объект на строку"""
    return "\n".join(json.dumps(report.to_dict(), ensure_ascii=False) for report in reports)
