"""
Генераторы случайных величин для устойчивых законов и связанных с ними
распределений: односторонний устойчивый (алгоритм Кантера), строго
устойчивый (Чамберс-Мэллоуз-Штук), Миттаг-Леффлер, положительный Линник
и двойственное представление положительной части.

Нормировка: односторонний закон имеет преобразование Лапласа e^{-λ^ν},
симметричный закон - характеристическую функцию e^{-|ξ|^α}.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

import config
from utils.monitoring import metrics_collector

logger = logging.getLogger(__name__)

# Отступ равномерной величины от концов (0, 1) в алгоритмах Кантера и CMS
KANTER_GUARD = 1e-12

# Допуск при проверке граничных ограничений на (α, ρ)
_EDGE_TOL = 1e-12

Sample = Union[float, np.ndarray]


class ParameterError(ValueError):
    """Параметры вне области определения закона"""


class UnsupportedParametrization(ValueError):
    """Параметризация допустима формально, но не поддерживается генератором"""


class RejectionCapExceeded(RuntimeError):
    """Метод отбора исчерпал лимит попыток"""

    def __init__(self, message: str, attempts: int, accepted: int):
        super().__init__(message)
        self.attempts = attempts
        self.accepted = accepted


# ============================
# ПОТОК СЛУЧАЙНЫХ ЧИСЕЛ
# ============================

class RandomStream:
    """
    Воспроизводимый расщепляемый поток равномерных, экспоненциальных
    и гауссовых величин.

    Последовательность определяется парой (seed, stream_id) и путем
    расщепления; разные stream_id дают независимые подпотоки
    (SeedSequence с ключом порождения).
    """

    def __init__(self, seed: int, stream_id: int = 0, path: Tuple[int, ...] = ()):
        seed = int(seed)
        stream_id = int(stream_id)
        if not 0 <= seed < 2 ** 64:
            raise ParameterError(f"seed должен быть 64-битным неотрицательным целым, получено {seed}")
        if stream_id < 0:
            raise ParameterError(f"stream_id должен быть неотрицательным, получено {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        self.path = tuple(int(p) for p in path)
        sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,) + self.path)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def split(self, index: int) -> "RandomStream":
        """Дочерний поток с номером index"""
        if index < 0:
            raise ParameterError(f"номер подпотока должен быть неотрицательным, получено {index}")
        return RandomStream(self.seed, self.stream_id, self.path + (int(index),))

    def uniform(self, size: Optional[int] = None, guard: float = 0.0) -> Sample:
        """Равномерная величина на открытом интервале (guard, 1 - guard)"""
        n = 1 if size is None else int(size)
        u = self._generator.random(n)
        bad = (u <= guard) | (u >= 1.0 - guard)
        while bad.any():
            u[bad] = self._generator.random(int(bad.sum()))
            bad = (u <= guard) | (u >= 1.0 - guard)
        return _finish(u, size)

    def exponential(self, size: Optional[int] = None) -> Sample:
        """Экспоненциальная величина с параметром 1, строго положительная"""
        u = np.atleast_1d(self.uniform(size))
        return _finish(-np.log(u), size)

    def gaussian(self, size: Optional[int] = None) -> Sample:
        """Стандартная нормальная величина"""
        n = 1 if size is None else int(size)
        return _finish(self._generator.standard_normal(n), size)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"


def _finish(values: np.ndarray, size: Optional[int]) -> Sample:
    if size is None:
        return float(values[0])
    return values


def shard_map(fn: Callable[[int, RandomStream], np.ndarray], n: int, stream: RandomStream,
              workers: Optional[int] = None, chunk_size: int = config.CHUNK_SIZE) -> np.ndarray:
    """
    Разбивает n испытаний на фиксированные шарды по chunk_size.

    Шард i считается на stream.split(i), результаты склеиваются по порядку
    шардов, поэтому ответ не зависит от числа рабочих потоков.
    """
    n = int(n)
    if n <= 0:
        raise ParameterError(f"число испытаний должно быть положительным, получено {n}")
    workers = workers or config.MC_WORKERS
    sizes = [min(chunk_size, n - start) for start in range(0, n, chunk_size)]

    def run(index: int) -> np.ndarray:
        return np.asarray(fn(sizes[index], stream.split(index)))

    if workers <= 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    return np.concatenate(parts, axis=0)


# ============================
# ПАРАМЕТРЫ
# ============================

@dataclass(frozen=True)
class OneSidedIndex:
    """Индекс одностороннего устойчивого закона, ν ∈ (0, 1]"""
    nu: float

    def __post_init__(self):
        nu = float(self.nu)
        if not math.isfinite(nu) or not 0.0 < nu <= 1.0:
            raise ParameterError(f"индекс ν должен лежать в (0, 1], получено {self.nu}")
        object.__setattr__(self, "nu", nu)


@dataclass(frozen=True)
class StrictStableParams:
    """
    Параметры строго устойчивого закона S_{α,ρ}.

    ρ = P{S > 0}; допустимы αρ ≤ 1 и α(1-ρ) ≤ 1, при α = 2 только ρ = 1/2.
    """
    alpha: float
    rho: float

    def __post_init__(self):
        alpha = float(self.alpha)
        rho = float(self.rho)
        if not math.isfinite(alpha) or not 0.0 < alpha <= 2.0:
            raise ParameterError(f"α должен лежать в (0, 2], получено {self.alpha}")
        if not math.isfinite(rho) or not 0.0 <= rho <= 1.0:
            raise ParameterError(f"ρ должен лежать в [0, 1], получено {self.rho}")
        if alpha * rho > 1.0 + _EDGE_TOL or alpha * (1.0 - rho) > 1.0 + _EDGE_TOL:
            raise ParameterError(f"нарушено ограничение αρ ≤ 1, α(1-ρ) ≤ 1: α={alpha}, ρ={rho}")
        if alpha == 2.0 and abs(rho - 0.5) > _EDGE_TOL:
            raise ParameterError(f"при α = 2 допускается только ρ = 1/2, получено {rho}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class LinnikParams:
    """Параметры положительного закона Линника: индекс ν и интенсивность μ"""
    nu: OneSidedIndex
    mu: float

    def __post_init__(self):
        if not isinstance(self.nu, OneSidedIndex):
            object.__setattr__(self, "nu", OneSidedIndex(self.nu))
        mu = float(self.mu)
        if not math.isfinite(mu) or mu <= 0.0:
            raise ParameterError(f"интенсивность μ должна быть положительной, получено {self.mu}")
        object.__setattr__(self, "mu", mu)


def as_index(nu: Union[OneSidedIndex, float]) -> OneSidedIndex:
    return nu if isinstance(nu, OneSidedIndex) else OneSidedIndex(nu)


# ============================
# ПЕРЕХОД (α, ρ) <-> (α, β)
# ============================

def rho_to_beta(alpha: float, rho: float) -> float:
    """
    Асимметрия β по параметру положительности ρ.

    ρ = 1/2 + arctan(β·tan(πα/2)) / (πα), α ≠ 1.
    """
    alpha = float(alpha)
    rho = float(rho)
    if not 0.0 < alpha <= 2.0 or alpha == 1.0:
        raise ParameterError(f"переход к β определен для α ∈ (0, 2], α ≠ 1, получено {alpha}")
    if alpha == 2.0:
        if abs(rho - 0.5) > _EDGE_TOL:
            raise ParameterError(f"при α = 2 допускается только ρ = 1/2, получено {rho}")
        return 0.0
    beta = math.tan(math.pi * alpha * (rho - 0.5)) / math.tan(math.pi * alpha / 2.0)
    if abs(beta) > 1.0 + 1e-9:
        raise ParameterError(
            f"|β| = {abs(beta):.6g} > 1: нарушено ограничение αρ ≤ 1, α(1-ρ) ≤ 1 (α={alpha}, ρ={rho})"
        )
    return max(-1.0, min(1.0, beta))


def beta_to_rho(alpha: float, beta: float) -> float:
    """Параметр положительности ρ по асимметрии β"""
    alpha = float(alpha)
    beta = float(beta)
    if not 0.0 < alpha <= 2.0 or alpha == 1.0:
        raise ParameterError(f"переход к ρ определен для α ∈ (0, 2], α ≠ 1, получено {alpha}")
    if abs(beta) > 1.0:
        raise ParameterError(f"β должен лежать в [-1, 1], получено {beta}")
    if alpha == 2.0:
        return 0.5
    return 0.5 + math.atan(beta * math.tan(math.pi * alpha / 2.0)) / (math.pi * alpha)


# ============================
# ГЕНЕРАТОРЫ
# ============================

def _kanter_log(nu: float, stream: RandomStream, n: int) -> np.ndarray:
    # log S_ν = ((1-ν)/ν)·(log A(πU) - log E)
    u = math.pi * np.atleast_1d(stream.uniform(n, guard=KANTER_GUARD))
    e = np.atleast_1d(stream.exponential(n))
    a = 1.0 - nu
    log_a = (nu / a) * np.log(np.sin(nu * u)) + np.log(np.sin(a * u)) - np.log(np.sin(u)) / a
    return (a / nu) * (log_a - np.log(e))


def sample_positive_stable(nu: Union[OneSidedIndex, float], stream: RandomStream,
                           size: Optional[int] = None) -> Sample:
    """
    Односторонний устойчивый закон S_ν (алгоритм Кантера).

    Преобразование Лапласа E e^{-λS} = e^{-λ^ν}; при ν = 1 возвращает ровно 1.
    """
    nu = as_index(nu).nu
    n = 1 if size is None else int(size)
    metrics_collector.record_draws("positive_stable", n)
    if nu == 1.0:
        return _finish(np.ones(n), size)
    return _finish(np.exp(_kanter_log(nu, stream, n)), size)


def _cms(alpha: float, rho: float, stream: RandomStream, n: int) -> np.ndarray:
    # Чамберс-Мэллоуз-Штук в форме с единичным масштабом: сдвиг B = arctan(β tan(πα/2))/α
    beta = rho_to_beta(alpha, rho)
    shift = math.atan(beta * math.tan(math.pi * alpha / 2.0)) / alpha
    v = math.pi * (np.atleast_1d(stream.uniform(n, guard=KANTER_GUARD)) - 0.5)
    w = np.atleast_1d(stream.exponential(n))
    phase = alpha * (v + shift)
    with np.errstate(divide="ignore"):
        numerator = np.sin(phase)
        log_abs = (np.log(np.abs(numerator))
                   - np.log(np.cos(v)) / alpha
                   + (1.0 - alpha) / alpha * (np.log(np.maximum(np.cos(v - phase), 1e-300)) - np.log(w)))
    return np.sign(numerator) * np.exp(log_abs)


def sample_strictly_stable(params: StrictStableParams, stream: RandomStream,
                           size: Optional[int] = None) -> Sample:
    """
    Строго устойчивый закон S_{α,ρ}, P{S > 0} = ρ.

    Returns:
        float или массив: при α = 2 это N(0, 2), при α = 1, ρ = 1/2 - стандартный Коши
    """
    alpha, rho = params.alpha, params.rho
    n = 1 if size is None else int(size)
    metrics_collector.record_draws("strictly_stable", n)

    if alpha == 2.0:
        return _finish(math.sqrt(2.0) * np.atleast_1d(stream.gaussian(n)), size)
    if alpha == 1.0:
        if abs(rho - 0.5) > _EDGE_TOL:
            raise UnsupportedParametrization(
                f"при α = 1 строгая устойчивость требует ρ = 1/2, получено ρ = {rho}"
            )
        v = math.pi * (np.atleast_1d(stream.uniform(n, guard=KANTER_GUARD)) - 0.5)
        return _finish(np.tan(v), size)
    return _finish(_cms(alpha, rho, stream, n), size)


def _conditioned_positive(draw: Callable[[int], np.ndarray], n: int, cap: int) -> np.ndarray:
    """Отбор положительных значений; каждое значение получает не более cap попыток"""
    out = np.empty(n)
    filled = 0
    attempts = 0
    rounds = 0
    while filled < n:
        if rounds >= cap:
            metrics_collector.record_rejections(attempts, filled)
            raise RejectionCapExceeded(
                f"отбор положительных значений: {cap} попыток исчерпано, принято {filled} из {n}",
                attempts, filled,
            )
        need = n - filled
        batch = draw(need)
        positive = batch[batch > 0.0]
        out[filled:filled + positive.size] = positive
        filled += positive.size
        attempts += need
        rounds += 1
    metrics_collector.record_rejections(attempts, filled)
    logger.debug(f"Отбор: {attempts} попыток за {rounds} раундов для {n} значений")
    return out


def sample_positive_part(params: StrictStableParams, stream: RandomStream,
                         size: Optional[int] = None, cap: Optional[int] = None) -> Sample:
    """S_{α,ρ} при условии S > 0, отбором из генератора CMS"""
    cap = cap or config.REJECTION_CAP
    n = 1 if size is None else int(size)
    if params.rho == 0.0:
        raise RejectionCapExceeded(f"ρ = 0: положительная часть {params} вырождена", 0, 0)
    values = _conditioned_positive(lambda m: np.atleast_1d(sample_strictly_stable(params, stream, m)), n, cap)
    return _finish(values, size)


def sample_mittag_leffler_rv(alpha: Union[OneSidedIndex, float], stream: RandomStream,
                             size: Optional[int] = None) -> Sample:
    """Величина Миттаг-Леффлера M_α = S_α^{-α}; при α = 1 ровно 1"""
    alpha = as_index(alpha).nu
    n = 1 if size is None else int(size)
    metrics_collector.record_draws("mittag_leffler", n)
    if alpha == 1.0:
        return _finish(np.ones(n), size)
    return _finish(np.exp(-alpha * _kanter_log(alpha, stream, n)), size)


def sample_positive_linnik(params: LinnikParams, stream: RandomStream,
                           size: Optional[int] = None) -> Sample:
    """
    Положительный закон Линника E^{1/ν}·S_ν, E ~ Exp(μ) независима от S_ν.

    Преобразование Лапласа μ / (s^ν + μ).
    """
    nu = params.nu.nu
    n = 1 if size is None else int(size)
    metrics_collector.record_draws("positive_linnik", n)
    log_s = np.zeros(n) if nu == 1.0 else _kanter_log(nu, stream, n)
    log_e = np.log(np.atleast_1d(stream.exponential(n))) - math.log(params.mu)
    return _finish(np.exp(log_e / nu + log_s), size)


def sample_dual_positive(params: StrictStableParams, stream: RandomStream,
                         size: Optional[int] = None, cap: Optional[int] = None) -> Sample:
    """
    Положительная часть S_{α,ρ}, α ∈ (1, 2], через двойственный закон:
    X^{-1/α}, где X ~ S_{1/α, αρ} при условии X > 0.

    При αρ = 1 внутренний закон односторонний и используется алгоритм
    Кантера без отбора.
    """
    alpha, rho = params.alpha, params.rho
    if not 1.0 < alpha <= 2.0:
        raise ParameterError(f"двойственное представление требует α ∈ (1, 2], получено {alpha}")
    cap = cap or config.REJECTION_CAP
    n = 1 if size is None else int(size)
    inner_alpha = 1.0 / alpha
    inner_rho = min(1.0, alpha * rho)
    metrics_collector.record_draws("dual_positive", n)

    if abs(inner_rho - 1.0) <= _EDGE_TOL:
        return _finish(np.exp(-inner_alpha * _kanter_log(inner_alpha, stream, n)), size)

    if inner_rho == 0.0:
        raise RejectionCapExceeded(f"αρ = 0: положительная часть {params} вырождена", 0, 0)
    inner = StrictStableParams(inner_alpha, inner_rho)
    x = _conditioned_positive(lambda m: np.atleast_1d(sample_strictly_stable(inner, stream, m)), n, cap)
    return _finish(np.exp(-inner_alpha * np.log(x)), size)
