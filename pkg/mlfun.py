"""
Численное вычисление функций Миттаг-Леффлера

    E_{ξ,μ}(z)   = Σ z^k / Γ(ξk + μ)
    E^γ_{ξ,μ}(z) = Σ (γ)_k z^k / (k! Γ(ξk + μ))

и построенных на них плотности и функции распределения закона Линника,
вероятностей дробного пуассоновского процесса.

Режимы вычисления:
    closed_form - z = 0 и ξ = 1 при z < 0 (функция Куммера 1F1);
    series      - степенной ряд с компенсированным суммированием; радиус
                  ряда определяется оценкой ошибки округления
                  eps·Σ|член|·(4 + |log-части члена|) ≤ tol;
    asymptotic  - разложение по степеням 1/z при z ≪ 0 (ξ < 1, а также
                  1 < ξ < 2 при γ = 1), обрезка на наименьшем члене.
Если ни ряд, ни асимптотика не дают ошибку ≤ tol, ряд пересчитывается в
повышенной точности (mpmath) и результат считается режимом series.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import mpmath
import numpy as np
from scipy import special

import config
from stable_rng import LinnikParams, OneSidedIndex, ParameterError, as_index
from utils.monitoring import metrics_collector

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_ASYMPTOTIC_TERMS = 200

ArrayLike = Union[float, np.ndarray]


class EvaluationError(RuntimeError):
    """Вычисление не сошлось в пределах лимита членов"""

    def __init__(self, message: str, partial_value: float = math.nan,
                 terms_used: int = 0, regime: Optional["Regime"] = None):
        super().__init__(message)
        self.partial_value = partial_value
        self.terms_used = terms_used
        self.regime = regime


class Regime(str, Enum):
    SERIES = "series"
    ASYMPTOTIC = "asymptotic"
    CLOSED_FORM = "closed_form"


_REGIMES = (Regime.SERIES, Regime.ASYMPTOTIC, Regime.CLOSED_FORM)
_SERIES, _ASYMPTOTIC, _CLOSED = 0, 1, 2


@dataclass(frozen=True)
class MLArgs:
    """Аргументы E^γ_{ξ,μ}(z)"""
    xi: float
    mu_param: float
    gamma_param: float = 1.0
    z: float = 0.0

    def __post_init__(self):
        _check_parameters(self.xi, self.mu_param, self.gamma_param)
        if not math.isfinite(float(self.z)):
            raise ParameterError(f"аргумент z должен быть конечным, получено {self.z}")


@dataclass(frozen=True)
class EvalResult:
    value: float
    est_abs_error: float
    terms_used: int
    regime: Regime

    def to_dict(self):
        return {
            'value': self.value,
            'est_abs_error': self.est_abs_error,
            'terms_used': self.terms_used,
            'regime': self.regime.value,
        }


def _check_parameters(xi: float, mu: float, gamma: float):
    if not math.isfinite(xi) or not 0.0 < xi <= 2.0:
        raise ParameterError(f"ξ должен лежать в (0, 2], получено {xi}")
    if not math.isfinite(mu) or mu <= 0.0:
        raise ParameterError(f"параметр μ должен быть положительным, получено {mu}")
    if not math.isfinite(gamma) or gamma <= 0.0:
        raise ParameterError(f"параметр γ должен быть положительным, получено {gamma}")


# ============================
# ЯДРО ВЫЧИСЛЕНИЙ
# ============================

def _log_coefficient(xi: float, mu: float, gamma: float, k: np.ndarray) -> np.ndarray:
    # log((γ)_k / (k! Γ(ξk + μ))) через разности логарифмов гамма-функции
    return (special.gammaln(gamma + k) - special.gammaln(gamma)
            - special.gammaln(k + 1.0) - special.gammaln(xi * k + mu))


def _log_coefficient_size(xi: float, mu: float, gamma: float, k: np.ndarray) -> np.ndarray:
    # сумма модулей слагаемых логарифма; ошибка log-коэффициента ~ eps·size
    return (np.abs(special.gammaln(gamma + k)) + abs(math.lgamma(gamma))
            + np.abs(special.gammaln(k + 1.0)) + np.abs(special.gammaln(xi * k + mu)))


def _series_length(xi: float, mu: float, gamma: float, radius: float, cap: int) -> int:
    """Число членов ряда, после которого хвост пренебрежимо мал"""
    if radius == 0.0:
        return 1
    log_r = math.log(radius)
    log_cut = math.log(_EPS) - 10.0
    peak = -math.inf
    previous = math.inf
    block = 64
    for start in range(0, cap, block):
        ks = np.arange(start, min(start + block, cap), dtype=float)
        log_terms = _log_coefficient(xi, mu, gamma, ks) + ks * log_r
        for offset, lt in enumerate(log_terms):
            peak = max(peak, lt)
            if start + offset > 0 and lt < previous and lt < peak + log_cut:
                return start + offset + 1
            previous = lt
    raise EvaluationError(
        f"ряд E^{gamma}_{{{xi},{mu}}} при |z| = {radius} не сошелся за {cap} членов",
        terms_used=cap, regime=Regime.SERIES,
    )


def _series(xi: float, mu: float, gamma: float, z: np.ndarray, cap: int):
    """Компенсированное (Ноймайер) суммирование степенного ряда"""
    count = _series_length(xi, mu, gamma, float(np.max(np.abs(z))), cap)
    ks = np.arange(count, dtype=float)
    log_coef = _log_coefficient(xi, mu, gamma, ks)
    coef_size = _log_coefficient_size(xi, mu, gamma, ks)
    log_abs_z = np.log(np.abs(z))
    negative = z < 0.0

    total = np.zeros_like(z)
    compensation = np.zeros_like(z)
    rounding = np.zeros_like(z)
    peak = np.full_like(z, -np.inf)
    last = np.zeros_like(z)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(count):
            log_term = log_coef[k] + (k * log_abs_z if k else 0.0)
            term = np.exp(log_term)
            if k % 2 == 1:
                term = np.where(negative, -term, term)
            running = total + term
            compensation += np.where(np.abs(total) >= np.abs(term),
                                     (total - running) + term,
                                     (term - running) + total)
            total = running
            # exp(log_term) несет относительную ошибку порядка eps·|log_term|
            rounding += np.abs(term) * (4.0 + coef_size[k] + k * np.abs(log_abs_z))
            peak = np.maximum(peak, log_term)
            last = np.abs(term)
    value = total + compensation
    error = _EPS * rounding + 2.0 * last + _EPS * np.abs(value)
    return value, error, count, peak


def _asymptotic(xi: float, mu: float, gamma: float, x: np.ndarray, tol: float):
    """
    Разложение E^γ_{ξ,μ}(-x) по степеням 1/x, обрезанное на наименьшем члене.

    Оценка ошибки: два первых отброшенных члена с множителем 2 + √N
    (N - номер обрезки) плюс накопленное округление вычисленных членов.
    """
    log_x = np.log(x)
    total = np.zeros_like(x)
    rounding = np.zeros_like(x)
    previous_total = np.zeros_like(x)
    previous_rounding = np.zeros_like(x)
    previous_magnitude = np.zeros_like(x)
    best_value = np.zeros_like(x)
    best_error = np.full_like(x, np.inf)
    best_terms = np.zeros(x.shape, dtype=int)
    lg = math.lgamma(gamma)

    with np.errstate(all="ignore"):
        for k in range(_ASYMPTOTIC_TERMS + 1):
            power = gamma + k
            log_coef = math.lgamma(power) - lg - math.lgamma(k + 1.0)
            coef_size = abs(math.lgamma(power)) + abs(lg) + math.lgamma(k + 1.0)
            reciprocal = float(special.rgamma(mu - xi * power))
            # 1/Γ около полюсов: ошибка аргумента eps·|μ - ξp| умножается на |(1/Γ)'|
            shift = mu - xi * power
            log_slope = (math.lgamma(1.0 + abs(shift)) + math.log(math.log(2.0 + abs(shift)) + math.pi)
                         - math.log(math.pi))
            scale = np.exp(log_coef - power * log_x)
            magnitude = scale * abs(reciprocal)
            term = scale * reciprocal * (-1.0 if k % 2 else 1.0)
            if k >= 1:
                window = 2.0 + math.sqrt(k)
                candidate = window * (previous_magnitude + magnitude) + _EPS * previous_rounding
                better = candidate < best_error
                best_error = np.where(better, candidate, best_error)
                best_value = np.where(better, previous_total, best_value)
                best_terms = np.where(better, k - 1, best_terms)
                # дальше либо обрезка ниже округления, либо ряд уже расходится
                tail = np.maximum(previous_magnitude, magnitude)
                settled = (tail <= 1e-3 * _EPS * np.abs(best_value)) | (magnitude > 1e3 * best_error)
                if np.all(settled):
                    break
            previous_total = total
            previous_rounding = rounding
            total = total + term
            rounding = (rounding + magnitude * (4.0 + coef_size + power * np.abs(log_x))
                        + 2.0 * (abs(mu) + xi * power) * np.exp(log_coef - power * log_x + log_slope))
            previous_magnitude = magnitude

        if xi > 1.0:
            # экспоненциально малые слагаемые от корней z^{1/ξ} вне положительной полуоси
            best_error = best_error + (2.0 / xi) * np.exp(
                (1.0 - mu) / xi * log_x + np.exp(log_x / xi) * math.cos(math.pi / xi))
    return best_value, best_error + _EPS * np.abs(best_value), best_terms


def _mp_series(xi: float, mu: float, gamma: float, z: float, log_peak: float, tol: float, cap: int):
    """
    Ряд в повышенной точности для зоны сильного сокращения

    Returns:
        (значение, число членов, оценка абсолютной ошибки)
    """
    # округление ~ peak·10^{-digits} держится на 5 порядков ниже tol
    digits = max(20, int(math.ceil(max(0.0, log_peak) / math.log(10.0) - math.log10(tol))) + 5)
    with mpmath.workdps(digits):
        zz = mpmath.mpf(z)
        g = mpmath.mpf(gamma)
        total = mpmath.mpf(0)
        cutoff = mpmath.mpf(tol) * mpmath.mpf(10) ** -3
        previous = mpmath.inf
        for k in range(cap):
            term = mpmath.rf(g, k) * zz ** k * mpmath.rgamma(xi * k + mu) / mpmath.factorial(k)
            total += term
            size = abs(term)
            if k > 0 and size < previous and size <= cutoff:
                value = float(total)
                rounding = (k + 1) * math.exp(max(0.0, log_peak) - digits * math.log(10.0))
                return value, k + 1, 2.0 * _EPS * abs(value) + 2.0 * float(size) + rounding + 1e-300
            previous = size
    raise EvaluationError(
        f"ряд повышенной точности не сошелся за {cap} членов (z = {z})",
        partial_value=float(total), terms_used=cap, regime=Regime.SERIES,
    )


def _evaluate(xi: float, mu: float, gamma: float, z: np.ndarray, tol: float
              ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Вычисление E^γ_{ξ,μ} на массиве z

    Returns:
        (значения, оценки абсолютной ошибки, число членов, коды режимов)
    """
    _check_parameters(xi, mu, gamma)
    cap = config.ML_TERM_CAP
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ParameterError("аргумент z должен быть конечным")

    values = np.empty_like(z)
    errors = np.empty_like(z)
    terms = np.zeros(z.shape, dtype=int)
    regimes = np.full(z.shape, _SERIES, dtype=int)
    pending = np.ones(z.shape, dtype=bool)

    zero = z == 0.0
    values[zero] = special.rgamma(mu)
    errors[zero] = 4.0 * _EPS * abs(values[zero]) if zero.any() else 0.0
    terms[zero] = 1
    regimes[zero] = _CLOSED
    pending &= ~zero

    if xi == 1.0:
        # E^γ_{1,μ}(z) = e^z·1F1(μ-γ; μ; -z) / Γ(μ), без сокращения при z < 0
        kummer = pending & (z < 0.0)
        if kummer.any():
            x = -z[kummer]
            values[kummer] = np.exp(-x) * special.hyp1f1(mu - gamma, mu, x) * special.rgamma(mu)
            errors[kummer] = 16.0 * _EPS * np.abs(values[kummer]) + 1e-300
            regimes[kummer] = _CLOSED
            pending &= ~kummer

    asymptotic_allowed = xi < 1.0 or (1.0 < xi < 2.0 and gamma == 1.0)
    asym_value = np.full_like(z, np.nan)
    asym_error = np.full_like(z, np.inf)
    asym_terms = np.zeros(z.shape, dtype=int)
    if asymptotic_allowed:
        negative = pending & (z < 0.0)
        if negative.any():
            a_val, a_err, a_terms = _asymptotic(xi, mu, gamma, -z[negative], tol)
            asym_value[negative] = a_val
            asym_error[negative] = a_err
            asym_terms[negative] = a_terms
            accept = negative & (asym_error <= tol)
            values[accept] = asym_value[accept]
            errors[accept] = asym_error[accept]
            terms[accept] = asym_terms[accept]
            regimes[accept] = _ASYMPTOTIC
            pending &= ~accept

    fallback_count = 0
    if pending.any():
        index = np.flatnonzero(pending)
        s_val, s_err, s_count, s_peak = _series(xi, mu, gamma, z[index], cap)
        for j, i in enumerate(index):
            if np.isfinite(s_val[j]) and s_err[j] <= tol:
                values[i], errors[i], terms[i] = s_val[j], s_err[j], s_count
                continue
            log_peak = s_peak[j] if np.isfinite(s_peak[j]) else 700.0
            value, used, mp_error = _mp_series(xi, mu, gamma, float(z[i]), log_peak, tol, cap)
            if not math.isfinite(value):
                raise EvaluationError(
                    f"E^{gamma}_{{{xi},{mu}}}({z[i]}) выходит за пределы double",
                    partial_value=value, terms_used=used, regime=Regime.SERIES,
                )
            values[i], errors[i], terms[i] = value, mp_error, used
            regimes[i] = _SERIES
            fallback_count += 1

    if fallback_count:
        metrics_collector.increment_counter('ml_fallbacks', fallback_count)
        logger.debug(f"Повышенная точность для {fallback_count} точек (ξ={xi}, μ={mu}, γ={gamma})")
    metrics_collector.record_regimes({
        regime.value: int(np.count_nonzero(regimes == code)) for code, regime in enumerate(_REGIMES)
    })
    return values, errors, terms, regimes


# ============================
# ФУНКЦИИ МИТТАГ-ЛЕФФЛЕРА
# ============================

def ml_three(args: MLArgs, tol: Optional[float] = None) -> EvalResult:
    """Трехпараметрическая функция E^γ_{ξ,μ}(z) (Прабхакар)"""
    tol = tol or config.ML_SERIES_TOL
    value, error, terms, regime = _evaluate(
        float(args.xi), float(args.mu_param), float(args.gamma_param), np.array([float(args.z)]), tol)
    return EvalResult(float(value[0]), float(error[0]), int(terms[0]), _REGIMES[int(regime[0])])


def ml_two(xi: float, mu_param: float, z: float, tol: Optional[float] = None) -> EvalResult:
    """Двухпараметрическая функция E_{ξ,μ}(z)"""
    return ml_three(MLArgs(xi, mu_param, 1.0, z), tol)


def ml_values(xi: float, mu_param: float, z: ArrayLike, gamma_param: float = 1.0,
              tol: Optional[float] = None) -> ArrayLike:
    """Значения E^γ_{ξ,μ} на массиве аргументов (без диагностики)"""
    tol = tol or config.ML_SERIES_TOL
    z_arr = np.asarray(z, dtype=float)
    values, _, _, _ = _evaluate(float(xi), float(mu_param), float(gamma_param), z_arr.ravel(), tol)
    values = values.reshape(z_arr.shape)
    return float(values) if z_arr.ndim == 0 else values


# ============================
# ЗАКОН ЛИННИКА И ДРОБНЫЙ ПУАССОН
# ============================

def _positive_times(t: ArrayLike) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    if not np.all(t_arr > 0.0) or not np.all(np.isfinite(t_arr)):
        raise ParameterError("время t должно быть положительным и конечным")
    return t_arr


def _shape_like(values: np.ndarray, t: ArrayLike) -> ArrayLike:
    return float(values) if np.ndim(t) == 0 else values


def linnik_density(params: LinnikParams, t: ArrayLike, tol: Optional[float] = None) -> ArrayLike:
    """Плотность μ t^{ν-1} E_{ν,ν}(-μ t^ν)"""
    t_arr = _positive_times(t)
    nu, mu = params.nu.nu, params.mu
    power = t_arr ** nu
    density = mu * t_arr ** (nu - 1.0) * ml_values(nu, nu, -mu * power, tol=tol)
    return _shape_like(np.maximum(density, 0.0), t)


def linnik_cdf(params: LinnikParams, t: ArrayLike, tol: Optional[float] = None) -> ArrayLike:
    """
    Функция распределения 1 - E_{ν,1}(-μ t^ν).

    Для массовых вычислений под критерий Колмогорова достаточно
    tol=config.ML_ASYMPTOTIC_TOL.
    """
    t_arr = _positive_times(t)
    nu, mu = params.nu.nu, params.mu
    cdf = 1.0 - ml_values(nu, 1.0, -mu * t_arr ** nu, tol=tol)
    return _shape_like(np.clip(cdf, 0.0, 1.0), t)


def frac_poisson_pmf(nu: Union[OneSidedIndex, float], mu: float, t: float, k: int) -> float:
    """
    P{N^ν(t) = k} = (μ t^ν)^k E^{k+1}_{ν, νk+1}(-μ t^ν)

    Returns:
        float: вероятность, отрицательные остатки округления обнуляются
    """
    nu = as_index(nu).nu
    k = int(k)
    if k < 0:
        raise ParameterError(f"k должен быть неотрицательным, получено {k}")
    if not mu > 0.0:
        raise ParameterError(f"интенсивность μ должна быть положительной, получено {mu}")
    _positive_times(t)
    x = mu * t ** nu
    scale = math.exp(k * math.log(x)) if k else 1.0
    tol = config.ML_SERIES_TOL / max(1.0, scale)
    result = ml_three(MLArgs(nu, nu * k + 1.0, k + 1.0, -x), tol)
    value = scale * result.value
    if value < 0.0:
        if value < -1e-9:
            logger.warning(f"⚠️ Отрицательная вероятность {value:.3e} при k={k}, ν={nu}, μ={mu}, t={t}")
        value = 0.0
    return min(value, 1.0)


def frac_poisson_pmf_table(nu: Union[OneSidedIndex, float], mu: float, t: float,
                           mass_tol: float = 1e-10, k_max: int = 10_000) -> np.ndarray:
    """
    Вероятности k = 0..K, K выбирается так, чтобы недостающая масса была < mass_tol.

    Погрешности отдельных вероятностей могут не дать сумме дойти до
    1 - mass_tol, поэтому таблица обрывается и на убывающем хвосте с членами
    меньше 1e-3·mass_tol после основной массы.
    """
    values = []
    cumulative = 0.0
    previous = math.inf
    for k in range(k_max):
        p = frac_poisson_pmf(nu, mu, t, k)
        values.append(p)
        cumulative += p
        if cumulative >= 1.0 - mass_tol or (cumulative > 0.5 and p < previous and p < 1e-3 * mass_tol):
            return np.array(values)
        previous = p
    raise EvaluationError(
        f"масса распределения N(t) не набрана за {k_max} значений (накоплено {cumulative})",
        partial_value=cumulative, terms_used=k_max,
    )


def levy_cdf(t: ArrayLike) -> ArrayLike:
    """Функция распределения одностороннего 1/2-устойчивого закона: erfc(1/(2√t))"""
    t_arr = _positive_times(t)
    return _shape_like(special.erfc(0.5 / np.sqrt(t_arr)), t)


def mittag_leffler_rv_moment(alpha: float, order: int) -> float:
    """Момент величины Миттаг-Леффлера: n! / Γ(1 + nα)"""
    alpha = as_index(alpha).nu
    return math.factorial(order) / math.gamma(1.0 + order * alpha)
