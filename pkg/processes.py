"""
Траектории: дробный пуассоновский процесс, устойчивый субординатор и его
обратный процесс, субдиффузия B(L_t), подчиненное броуновское движение и
оценка Монте-Карло решения дробного уравнения диффузии.

Масштабирование по времени: L_t = t^α·M_α (первое прохождение уровня t
субординатором s^{1/α}S_α). При t = 1 все представления совпадают с
исходными формулами без множителей.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np
import pandas as pd

import config
from stable_rng import (
    LinnikParams,
    OneSidedIndex,
    ParameterError,
    RandomStream,
    Sample,
    StrictStableParams,
    as_index,
    sample_dual_positive,
    sample_mittag_leffler_rv,
    sample_positive_linnik,
    sample_positive_part,
    sample_positive_stable,
    shard_map,
)
from utils.monitoring import metrics_collector

logger = logging.getLogger(__name__)

# Ограничение на объем одного блока приращений в first_passage_times
_BLOCK_BUDGET = 1 << 22


class OutOfHorizonError(ValueError):
    """Запрошенное время лежит за пределами смоделированного горизонта"""


class Route(str, Enum):
    TIME_INVERSION = "time_inversion"
    STABLE_POSITIVE_PART = "stable_positive_part"

    @classmethod
    def parse(cls, value: Union["Route", str]) -> "Route":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise ParameterError(f"неизвестный маршрут {value!r}, ожидается time-inversion или stable-positive-part")


def _check_time(name: str, value: float):
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} должно быть положительным и конечным, получено {value}")


def _check_subordinated_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"индекс α должен лежать в (0, 1], получено {alpha}")
    return alpha


def _check_dual_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise ParameterError(f"индекс α должен лежать в (1, 2], получено {alpha}")
    return alpha


# ============================
# ДРОБНЫЙ ПУАССОНОВСКИЙ ПРОЦЕСС
# ============================

@dataclass(frozen=True)
class RenewalTrajectory:
    """Моменты событий процесса восстановления на [0, t_max]"""
    event_times: np.ndarray
    params: LinnikParams
    t_max: float

    def __post_init__(self):
        times = np.asarray(self.event_times, dtype=float)
        object.__setattr__(self, "event_times", times)
        if times.size:
            if not np.all(np.isfinite(times)) or times[0] <= 0.0:
                raise ParameterError("моменты событий должны быть положительными и конечными")
            if np.any(np.diff(times) <= 0.0):
                raise ParameterError("моменты событий должны строго возрастать")
            if times[-1] > self.t_max:
                raise ParameterError("событие за пределами горизонта t_max")

    def __len__(self):
        return int(self.event_times.size)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'event': np.arange(1, len(self) + 1),
            'time': self.event_times,
        })

    def to_dict(self):
        return {
            'params': {'nu': self.params.nu.nu, 'mu': self.params.mu, 't_max': self.t_max},
            'times': self.event_times.tolist(),
            'values': list(range(1, len(self) + 1)),
        }


def simulate_frac_poisson(params: LinnikParams, t_max: float, stream: RandomStream) -> RenewalTrajectory:
    """
    Траектория N^ν на [0, t_max]: накопленные суммы интервалов Линника.

    Первое событие после t_max отбрасывается.
    """
    _check_time("t_max", t_max)
    nu = params.nu.nu
    # ожидаемое число событий μ t^ν / Γ(1+ν) задает размер блока
    block = max(16, int(2.0 * params.mu * t_max ** nu / math.gamma(1.0 + nu)) + 1)
    parts = []
    clock = 0.0
    while True:
        arrivals = clock + np.cumsum(sample_positive_linnik(params, stream, size=block))
        inside = arrivals[arrivals <= t_max]
        parts.append(inside)
        if inside.size < block:
            break
        clock = float(arrivals[-1])
    times = np.concatenate(parts)
    logger.debug(f"Траектория N^ν: {times.size} событий на [0, {t_max}]")
    return RenewalTrajectory(times, params, float(t_max))


def count_at(traj: RenewalTrajectory, t: float) -> int:
    """Число событий с моментом ≤ t (непрерывная справа ступенчатая функция)"""
    if t > traj.t_max:
        raise OutOfHorizonError(f"t = {t} за горизонтом траектории t_max = {traj.t_max}")
    return int(np.searchsorted(traj.event_times, t, side="right"))


def frac_poisson_counts(params: LinnikParams, t: float, n: int, stream: RandomStream,
                        workers: Optional[int] = None) -> np.ndarray:
    """Значения N^ν(t) для n независимых траекторий"""
    _check_time("t", t)

    def chunk(m: int, sub: RandomStream) -> np.ndarray:
        clock = np.zeros(m)
        counts = np.zeros(m, dtype=np.int64)
        active = np.arange(m)
        while active.size:
            clock[active] += sample_positive_linnik(params, sub, size=active.size)
            arrived = clock[active] <= t
            counts[active[arrived]] += 1
            active = active[arrived]
        return counts

    return shard_map(chunk, n, stream, workers)


# ============================
# СУБОРДИНАТОР И ОБРАТНЫЙ ПРОЦЕСС
# ============================

@dataclass(frozen=True)
class SubordinatorPath:
    """Значения субординатора на равномерной сетке с шагом dt"""
    grid: np.ndarray
    values: np.ndarray
    index: OneSidedIndex
    dt: float = field(default=0.0)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.shape != values.shape or grid.size < 2:
            raise ParameterError("сетка и значения должны совпадать по длине (не менее 2 точек)")
        if grid[0] != 0.0 or values[0] != 0.0:
            raise ParameterError("путь должен начинаться в точке (0, 0)")
        if np.any(np.diff(values) < 0.0):
            raise ParameterError("значения субординатора должны не убывать")
        if not self.dt:
            object.__setattr__(self, "dt", float(grid[1] - grid[0]))
        if self.dt <= 0.0:
            raise ParameterError(f"шаг сетки должен быть положительным, получено {self.dt}")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'time': self.grid, 'value': self.values})

    def to_dict(self):
        return {
            'params': {'nu': self.index.nu, 'dt': self.dt},
            'times': self.grid.tolist(),
            'values': self.values.tolist(),
        }


def simulate_subordinator_path(index: Union[OneSidedIndex, float], t_max: float, dt: float,
                               stream: RandomStream) -> SubordinatorPath:
    """Путь с независимыми приращениями dt^{1/ν}·S_ν на сетке 0, dt, ..., ≥ t_max"""
    index = as_index(index)
    _check_time("t_max", t_max)
    _check_time("dt", dt)
    if dt > t_max:
        raise ParameterError(f"шаг dt = {dt} больше горизонта t_max = {t_max}")
    steps = int(math.ceil(t_max / dt - 1e-9))
    grid = np.arange(steps + 1) * dt
    if index.nu == 1.0:
        return SubordinatorPath(grid, grid.copy(), index, dt)
    increments = dt ** (1.0 / index.nu) * sample_positive_stable(index, stream, size=steps)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return SubordinatorPath(grid, values, index, dt)


def subordinator_terminal_values(index: Union[OneSidedIndex, float], t_max: float, dt: float, n: int,
                                 stream: RandomStream, workers: Optional[int] = None) -> np.ndarray:
    """Конечные значения n путей simulate_subordinator_path без хранения сетки"""
    index = as_index(index)
    _check_time("t_max", t_max)
    _check_time("dt", dt)
    steps = int(math.ceil(t_max / dt - 1e-9))
    scale = dt ** (1.0 / index.nu)

    def chunk(m: int, sub: RandomStream) -> np.ndarray:
        rows = max(1, _BLOCK_BUDGET // steps)
        out = np.empty(m)
        for start in range(0, m, rows):
            k = min(rows, m - start)
            draws = sample_positive_stable(index, sub, size=k * steps).reshape(k, steps)
            out[start:start + k] = scale * draws.sum(axis=1)
        return out

    return shard_map(chunk, n, stream, workers)


def sample_inverse_subordinator(alpha: Union[OneSidedIndex, float], t: float, stream: RandomStream,
                                size: Optional[int] = None) -> Sample:
    """Обратный субординатор L_t = t^α·M_α; при t = 1 это ровно величина M_α"""
    alpha = as_index(alpha).nu
    _check_time("t", t)
    scale = t ** alpha
    return scale * sample_mittag_leffler_rv(alpha, stream, size=size)


def inverse_from_path(path: SubordinatorPath, t: float) -> float:
    """Наименьшее время сетки, в котором путь превышает уровень t"""
    if path.values[-1] <= t:
        raise OutOfHorizonError(
            f"путь не превысил уровень {t} (конечное значение {path.values[-1]:.6g})"
        )
    position = int(np.searchsorted(path.values, t, side="right"))
    return float(path.grid[position])


def first_passage_times(index: Union[OneSidedIndex, float], t: float, dt: float, n: int,
                        stream: RandomStream, workers: Optional[int] = None) -> np.ndarray:
    """
    Время первого превышения уровня t для n путей с шагом dt.

    Тот же закон, что inverse_from_path(simulate_subordinator_path(...), t);
    смещение вверх не больше одного шага сетки.
    """
    index = as_index(index)
    _check_time("t", t)
    _check_time("dt", dt)
    scale = dt ** (1.0 / index.nu)

    def chunk(m: int, sub: RandomStream) -> np.ndarray:
        position = np.zeros(m)
        passage = np.zeros(m)
        active = np.arange(m)
        steps_done = 0
        while active.size:
            block = int(max(64, min(4096, _BLOCK_BUDGET // active.size)))
            draws = sample_positive_stable(index, sub, size=active.size * block)
            levels = position[active, None] + np.cumsum(scale * draws.reshape(active.size, block), axis=1)
            crossed = levels > t
            hit = crossed.any(axis=1)
            first = np.argmax(crossed, axis=1)
            passage[active[hit]] = (steps_done + first[hit] + 1) * dt
            position[active[~hit]] = levels[~hit, -1]
            active = active[~hit]
            steps_done += block
        return passage

    with metrics_collector.timed("first_passage") as timer:
        result = shard_map(chunk, n, stream, workers)
    logger.debug(f"Первое прохождение: {n} путей, dt={dt}, {timer.elapsed:.2f} с")
    return result


# ============================
# СУБДИФФУЗИЯ И ПОДЧИНЕННОЕ БРОУНОВСКОЕ ДВИЖЕНИЕ
# ============================

def _gaussian(stream: RandomStream, variance, size: Optional[int]) -> Sample:
    return np.sqrt(variance) * stream.gaussian(size)


def sample_subdiffusion_direct(alpha: Union[OneSidedIndex, float], t: float, stream: RandomStream,
                               size: Optional[int] = None, generator: Optional[str] = None) -> Sample:
    """B(L_t): гауссова величина с дисперсией f·L_t, f = 2 для генератора Δ"""
    factor = config.bm_variance_factor(generator)
    time_change = sample_inverse_subordinator(alpha, t, stream, size)
    return _gaussian(stream, factor * time_change, size)


def sample_subdiffusion_dual(alpha: float, t: float, route: Union[Route, str], stream: RandomStream,
                             size: Optional[int] = None, positive_part: str = "dual",
                             generator: Optional[str] = None) -> Sample:
    """
    Субдиффузия с индексом 1/α, α ∈ (1, 2], двумя эквивалентными путями:

    time_inversion       - T = t^{-1/α}·S_{1/α}^{1/α}, ответ B(T)/T;
    stable_positive_part - время t^{1/α}·(S_{α,1/α})_+; положительная часть
                           берется двойственным генератором ("dual") или
                           отбором из CMS ("cms").
    """
    alpha = _check_dual_alpha(alpha)
    _check_time("t", t)
    route = Route.parse(route)
    factor = config.bm_variance_factor(generator)
    inner = 1.0 / alpha

    if route is Route.TIME_INVERSION:
        stable = sample_positive_stable(inner, stream, size=size)
        inversion = t ** (-inner) * stable ** inner
        return _gaussian(stream, factor * inversion, size) / inversion

    params = StrictStableParams(alpha, inner)
    if positive_part == "dual":
        part = sample_dual_positive(params, stream, size=size)
    elif positive_part == "cms":
        part = sample_positive_part(params, stream, size=size)
    else:
        raise ParameterError(f"positive_part должен быть 'dual' или 'cms', получено {positive_part!r}")
    return _gaussian(stream, factor * t ** inner * part, size)


def sample_subordinate_bm(alpha: float, t: float, stream: RandomStream,
                          size: Optional[int] = None, generator: Optional[str] = None) -> Sample:
    """
    Подчиненное броуновское движение B(τ_t), τ_t = t^α·S_{1/α}.

    При генераторе Δ характеристическая функция e^{-t|ξ|^{2/α}}.
    """
    alpha = _check_dual_alpha(alpha)
    _check_time("t", t)
    factor = config.bm_variance_factor(generator)
    tau = t ** alpha * sample_positive_stable(1.0 / alpha, stream, size=size)
    return _gaussian(stream, factor * tau, size)


def heat_kernel(x, t: float, generator: Optional[str] = None):
    """Ядро теплопроводности на прямой: e^{-x²/(4t)}/√(4πt) для генератора Δ"""
    _check_time("t", t)
    variance = config.bm_variance_factor(generator) * t
    x = np.asarray(x, dtype=float)
    return np.exp(-x ** 2 / (2.0 * variance)) / math.sqrt(2.0 * math.pi * variance)


# ============================
# РЕШЕНИЕ ДРОБНОГО УРАВНЕНИЯ
# ============================

@dataclass
class PdeEstimate:
    """Гистограммная оценка u(0, y, t) на [-range, range]"""
    t: float
    x_grid: np.ndarray
    density: np.ndarray
    n_samples: int
    alpha: float
    out_of_range_mass: float

    @property
    def bin_widths(self) -> np.ndarray:
        return np.diff(self.x_grid)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.x_grid[:-1] + self.x_grid[1:])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * self.bin_widths))

    def second_moment(self) -> float:
        return float(np.sum(self.centers ** 2 * self.density * self.bin_widths))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'bin_left': self.x_grid[:-1],
            'bin_right': self.x_grid[1:],
            'density': self.density,
        })

    def metadata(self):
        return {
            'alpha': self.alpha,
            't': self.t,
            'bins': int(self.density.size),
            'range': float(self.x_grid[-1]),
            'n_samples': self.n_samples,
            'mass': self.mass,
            'out_of_range_mass': self.out_of_range_mass,
        }


def estimate_pde_solution(alpha: float, t: float, bins: int, range_: float, n: int,
                          stream: RandomStream, workers: Optional[int] = None,
                          generator: Optional[str] = None) -> PdeEstimate:
    """
    Нормированная гистограмма n значений B(L_t) на [-range_, range_].

    Returns:
        PdeEstimate: масса вне диапазона записывается отдельно
    """
    alpha = _check_subordinated_alpha(alpha)
    _check_time("t", t)
    if n < 10_000:
        raise ParameterError(f"для оценки нужно n ≥ 10^4, получено {n}")
    if bins < 10:
        raise ParameterError(f"число корзин должно быть ≥ 10, получено {bins}")
    _check_time("range", range_)

    samples = shard_map(
        lambda m, sub: sample_subdiffusion_direct(alpha, t, sub, size=m, generator=generator),
        n, stream, workers,
    )
    counts, edges = np.histogram(samples, bins=bins, range=(-range_, range_))
    inside = int(counts.sum())
    density = counts / (n * np.diff(edges))
    estimate = PdeEstimate(
        t=float(t), x_grid=edges, density=density, n_samples=int(n),
        alpha=alpha, out_of_range_mass=(n - inside) / n,
    )
    logger.info(f"📊 Оценка u(x, t): α={alpha}, t={t}, n={n}, вне диапазона {estimate.out_of_range_mass:.2e}")
    return estimate
