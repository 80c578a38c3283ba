"""
Модуль валидации параметров командной строки
"""

import os
from typing import Dict, FrozenSet, Optional, Tuple
import logging

logger = logging.getLogger(__name__)

_Spec = Tuple[FrozenSet[str], FrozenSet[str]]


def _spec(required, optional=()) -> _Spec:
    return frozenset(required), frozenset(optional)


class Validation:
    """Проверка наборов параметров для каждой команды и селектора"""

    # селектор -> (обязательные, необязательные)
    SAMPLE_PARAMETERS: Dict[str, _Spec] = {
        'positive-stable': _spec({'nu'}),
        'strictly-stable': _spec({'alpha', 'rho'}),
        'mittag-leffler': _spec({'alpha'}),
        'positive-linnik': _spec({'nu', 'mu'}),
        'dual-positive': _spec({'alpha', 'rho'}),
    }

    SIMULATE_PARAMETERS: Dict[str, _Spec] = {
        'fpp': _spec({'nu', 'mu', 't_max'}),
        'subordinator': _spec({'nu', 't_max', 'dt'}),
        'inverse-subordinator': _spec({'alpha', 't'}),
        'subdiffusion': _spec({'alpha', 't'}, {'route'}),
        'subordinate-bm': _spec({'alpha', 't'}),
        'pde-estimate': _spec({'alpha', 't', 'bins', 'range'}),
    }

    EVAL_PARAMETERS: Dict[str, _Spec] = {
        'ml-two': _spec({'xi', 'offset', 'z'}),
        'ml-three': _spec({'xi', 'offset', 'gamma', 'z'}),
        'linnik-density': _spec({'nu', 'mu', 't'}),
        'linnik-cdf': _spec({'nu', 'mu', 't'}),
        'frac-poisson-pmf': _spec({'nu', 'mu', 't', 'k'}),
        'levy-cdf': _spec({'t'}),
    }

    VERIFY_PARAMETERS: Dict[str, _Spec] = {
        name: _spec(set(), {'alpha', 'rho'})
        for name in ('all', 'samplers', 'mlfun', 'duality', 'processes', 'pde', 'calibration')
    }

    TABLES = {
        'sample': SAMPLE_PARAMETERS,
        'simulate': SIMULATE_PARAMETERS,
        'eval': EVAL_PARAMETERS,
        'verify': VERIFY_PARAMETERS,
    }

    ROUTES = ('direct', 'time-inversion', 'stable-positive-part')

    @staticmethod
    def flag(key: str) -> str:
        """Имя параметра в виде флага командной строки"""
        return '--' + key.replace('_', '-')

    @staticmethod
    def check_parameters(subcommand: str, selector: str, params: Dict[str, object]) -> Tuple[bool, str]:
        """
        Проверка состава параметров

        Returns:
            Tuple[bool, str]: (валидно ли, сообщение об ошибке)
        """
        table = Validation.TABLES.get(subcommand)
        if table is None:
            return False, f"неизвестная команда {subcommand!r}"
        if selector not in table:
            return False, f"неизвестный селектор {selector!r} для {subcommand}, допустимы: {', '.join(sorted(table))}"

        required, optional = table[selector]
        given = {key for key, value in params.items() if value is not None}

        missing = sorted(required - given)
        if missing:
            flags = ', '.join(Validation.flag(key) for key in missing)
            return False, f"{subcommand} {selector}: не хватает параметров {flags}"

        unknown = sorted(given - required - optional)
        if unknown:
            flags = ', '.join(Validation.flag(key) for key in unknown)
            return False, f"{subcommand} {selector}: параметры {flags} не используются"

        return True, ""

    @staticmethod
    def validate_seed(seed: int) -> Tuple[bool, str]:
        """Зерно - 64-битное неотрицательное целое"""
        if seed is None:
            return False, "зерно не задано"
        if not 0 <= int(seed) < 2 ** 64:
            return False, f"--seed должен лежать в [0, 2^64), получено {seed}"
        return True, ""

    @staticmethod
    def validate_sample_size(n: int) -> Tuple[bool, str]:
        if n is None or int(n) < 1:
            return False, f"-n должен быть положительным, получено {n}"
        return True, ""

    @staticmethod
    def validate_route(alpha: float, route: Optional[str]) -> Tuple[bool, str]:
        """Маршрут субдиффузии согласован с индексом α"""
        if route is not None and route not in Validation.ROUTES:
            return False, f"--route должен быть одним из {', '.join(Validation.ROUTES)}"
        if alpha <= 1.0 and route not in (None, 'direct'):
            return False, f"маршрут {route} требует α ∈ (1, 2], получено α = {alpha}"
        if alpha > 1.0 and route == 'direct':
            return False, f"прямой маршрут требует α ∈ (0, 1], получено α = {alpha}"
        return True, ""

    @staticmethod
    def validate_output_path(path: Optional[str]) -> Tuple[bool, str]:
        """Каталог для файла вывода должен существовать"""
        if not path or path == '-':
            return True, ""
        directory = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(directory):
            return False, f"каталог {directory} для --output не существует"
        return True, ""
