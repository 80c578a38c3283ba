#!/usr/bin/env python3
"""
stablesim - командная строка: генерация, моделирование траекторий,
вычисление функций и проверочные наборы.

    python cli.py sample positive-stable --nu 0.5 -n 10 --seed 7
    python cli.py simulate fpp --nu 0.6 --mu 1 --t-max 10 --seed 3
    python cli.py eval ml-two --xi 0.5 --offset 1 --z -2
    python cli.py verify all

Коды возврата: 0 - все проверки пройдены, 1 - проверка или вычисление не
удались, 2 - ошибка параметров.
"""

import argparse
import logging
import logging.handlers
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, TextIO

import numpy as np
import pandas as pd

import config
from mlfun import (
    MLArgs,
    frac_poisson_pmf,
    levy_cdf,
    linnik_cdf,
    linnik_density,
    ml_three,
    ml_two,
)
from processes import (
    estimate_pde_solution,
    sample_inverse_subordinator,
    sample_subdiffusion_direct,
    sample_subdiffusion_dual,
    sample_subordinate_bm,
    simulate_frac_poisson,
    simulate_subordinator_path,
)
from reports.archive import archive_bundle, cleanup_old_reports
from reports.export import export_reports_xlsx, reports_frame, samples_frame, write_csv, write_json
from stable_rng import (
    LinnikParams,
    ParameterError,
    RandomStream,
    StrictStableParams,
    sample_dual_positive,
    sample_mittag_leffler_rv,
    sample_positive_linnik,
    sample_positive_stable,
    sample_strictly_stable,
    shard_map,
)
from statcheck import all_passed, bundle_to_json_lines
from suites import SUITE_ORDER, SuiteSettings, run_suite
from utils.monitoring import metrics_collector
from utils.validation import Validation

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_MAX_SIZE = 10 * 1024 * 1024  # 10 MB
LOG_BACKUP_COUNT = 5

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

PARAMETER_KEYS = ('nu', 'alpha', 'rho', 'mu', 't', 't_max', 'dt', 'bins', 'range',
                  'xi', 'offset', 'gamma', 'z', 'k', 'route')

logger = logging.getLogger(__name__)


# ============================
# КОНФИГУРАЦИЯ ЛОГИРОВАНИЯ
# ============================

_handlers: List[logging.Handler] = []


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """Файл с ротацией и консоль (stderr); stdout остается только для данных"""
    level = (level or config.LOG_LEVEL).upper()
    log_file = log_file or config.LOG_FILE
    formatter = logging.Formatter(LOG_FORMAT)

    root_logger = logging.getLogger()
    for handler in _handlers:
        root_logger.removeHandler(handler)
        handler.close()
    _handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    _handlers.append(console_handler)

    try:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=LOG_MAX_SIZE,
            backupCount=LOG_BACKUP_COUNT,
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        _handlers.append(file_handler)
    except OSError as e:
        print(f"⚠️ Лог-файл {log_file} недоступен: {e}", file=sys.stderr)

    root_logger.setLevel(getattr(logging, level, logging.INFO))
    for handler in _handlers:
        root_logger.addHandler(handler)

    logging.getLogger('matplotlib').setLevel(logging.WARNING)
    logging.getLogger('numexpr').setLevel(logging.WARNING)


# ============================
# РАЗБОР АРГУМЕНТОВ
# ============================

@dataclass
class CliConfig:
    subcommand: str
    selector: str
    params: Dict[str, Any] = field(default_factory=dict)
    n: Optional[int] = None
    seed: Optional[int] = None
    format: str = 'csv'
    output: Optional[str] = None
    threshold_p: Optional[float] = None
    excel: Optional[str] = None
    archive: bool = False

    def get(self, key: str):
        return self.params[key]

    def effective_seed(self) -> int:
        return config.DEFAULT_SEED if self.seed is None else self.seed

    def sample_size(self) -> int:
        return 1 if self.n is None else self.n


def _add_common(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('параметры')
    for flag in ('--nu', '--alpha', '--rho', '--mu', '--t', '--t-max', '--dt', '--range',
                 '--xi', '--offset', '--gamma', '--z'):
        group.add_argument(flag, type=float, default=None)
    group.add_argument('--bins', type=int, default=None)
    group.add_argument('--k', type=int, default=None)
    group.add_argument('--route', default=None, help=f"один из: {', '.join(Validation.ROUTES)}")

    parser.add_argument('-n', type=int, default=None, help='число значений')
    parser.add_argument('--seed', type=int, default=None, help='64-битное зерно')
    parser.add_argument('--format', choices=('csv', 'json'), default=None,
                        help='csv по умолчанию, для verify - json')
    parser.add_argument('--output', default=None, help='файл вывода (по умолчанию stdout)')
    parser.add_argument('--threshold-p', type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='stablesim', description='Устойчивые законы и дробные процессы')
    commands = parser.add_subparsers(dest='subcommand', required=True)

    for name, table in (('sample', Validation.SAMPLE_PARAMETERS),
                        ('simulate', Validation.SIMULATE_PARAMETERS),
                        ('eval', Validation.EVAL_PARAMETERS)):
        sub = commands.add_parser(name)
        sub.add_argument('selector', choices=sorted(table))
        _add_common(sub)

    verify = commands.add_parser('verify')
    verify.add_argument('selector', choices=('all',) + SUITE_ORDER)
    _add_common(verify)
    verify.add_argument('--excel', default=None, help='экспорт отчетов в Excel')
    verify.add_argument('--archive', action='store_true', help='сохранить отчеты в RESULTS_DIR')
    return parser


def parse_config(argv: Optional[List[str]] = None) -> CliConfig:
    args = build_parser().parse_args(argv)
    params = {key: getattr(args, key) for key in PARAMETER_KEYS if getattr(args, key) is not None}

    checks = [Validation.check_parameters(args.subcommand, args.selector, params)]
    if args.seed is not None:
        checks.append(Validation.validate_seed(args.seed))
    if args.n is not None:
        checks.append(Validation.validate_sample_size(args.n))
    if args.subcommand == 'simulate' and args.selector == 'subdiffusion' and args.alpha is not None:
        checks.append(Validation.validate_route(args.alpha, args.route))
    checks.append(Validation.validate_output_path(args.output))
    if args.threshold_p is not None and not 0.0 < args.threshold_p < 1.0:
        checks.append((False, f"--threshold-p должен лежать в (0, 1), получено {args.threshold_p}"))

    for ok, message in checks:
        if not ok:
            raise ParameterError(message)

    return CliConfig(
        subcommand=args.subcommand,
        selector=args.selector,
        params=params,
        n=args.n,
        seed=args.seed,
        format=args.format or ('json' if args.subcommand == 'verify' else 'csv'),
        output=args.output,
        threshold_p=args.threshold_p,
        excel=getattr(args, 'excel', None),
        archive=getattr(args, 'archive', False),
    )


@contextmanager
def _open_output(path: Optional[str]):
    if not path or path == '-':
        yield sys.stdout
        return
    with open(path, 'w', encoding='utf-8', newline='') as f:
        yield f


def _emit(cfg: CliConfig, frame: pd.DataFrame, meta: Dict[str, Any], json_body: Dict[str, Any], out: TextIO):
    if cfg.format == 'json':
        write_json({**meta, **json_body}, out)
    else:
        write_csv(frame, meta, out)


def _meta(cfg: CliConfig, **extra) -> Dict[str, Any]:
    meta = {'command': cfg.subcommand, 'selector': cfg.selector}
    meta.update({key: cfg.params[key] for key in PARAMETER_KEYS if key in cfg.params})
    meta.update(extra)
    return meta


# ============================
# КОМАНДЫ
# ============================

def _sampler(cfg: CliConfig) -> Callable[[RandomStream, int], np.ndarray]:
    p = cfg.params
    selector = cfg.selector
    if selector == 'positive-stable':
        return lambda s, m: sample_positive_stable(p['nu'], s, m)
    if selector == 'strictly-stable':
        params = StrictStableParams(p['alpha'], p['rho'])
        return lambda s, m: sample_strictly_stable(params, s, m)
    if selector == 'mittag-leffler':
        return lambda s, m: sample_mittag_leffler_rv(p['alpha'], s, m)
    if selector == 'positive-linnik':
        params = LinnikParams(p['nu'], p['mu'])
        return lambda s, m: sample_positive_linnik(params, s, m)
    params = StrictStableParams(p['alpha'], p['rho'])
    return lambda s, m: sample_dual_positive(params, s, m)


def _emit_samples(cfg: CliConfig, sampler: Callable[[RandomStream, int], np.ndarray], out: TextIO,
                  bare_json: bool = False, **extra):
    seed, n = cfg.effective_seed(), cfg.sample_size()
    values = shard_map(lambda m, sub: sampler(sub, m), n, RandomStream(seed))
    meta = _meta(cfg, n=n, seed=seed, **extra)
    if bare_json and cfg.format == 'json':
        write_json(values.tolist(), out)
        return
    _emit(cfg, samples_frame(values), meta, {'samples': values.tolist()}, out)


def run_sample(cfg: CliConfig, out: TextIO) -> int:
    """Генерация n значений выбранного закона"""
    _emit_samples(cfg, _sampler(cfg), out, bare_json=True)
    return EXIT_OK


def run_simulate(cfg: CliConfig, out: TextIO) -> int:
    """Траектории, выборки процессов и оценка решения уравнения"""
    p = cfg.params
    seed = cfg.effective_seed()
    stream = RandomStream(seed)
    selector = cfg.selector

    if selector == 'fpp':
        trajectory = simulate_frac_poisson(LinnikParams(p['nu'], p['mu']), p['t_max'], stream)
        _emit(cfg, trajectory.to_frame(), _meta(cfg, seed=seed, events=len(trajectory)), trajectory.to_dict(), out)
        return EXIT_OK

    if selector == 'subordinator':
        path = simulate_subordinator_path(p['nu'], p['t_max'], p['dt'], stream)
        _emit(cfg, path.to_frame(), _meta(cfg, seed=seed), path.to_dict(), out)
        return EXIT_OK

    if selector == 'pde-estimate':
        estimate = estimate_pde_solution(p['alpha'], p['t'], p['bins'], p['range'], cfg.sample_size(), stream)
        meta = _meta(cfg, seed=seed, **estimate.metadata())
        body = {'bins': estimate.to_frame().to_dict(orient='list')}
        _emit(cfg, estimate.to_frame(), meta, body, out)
        return EXIT_OK

    alpha, t = p['alpha'], p['t']
    if selector == 'inverse-subordinator':
        sampler = lambda s, m: sample_inverse_subordinator(alpha, t, s, m)
    elif selector == 'subordinate-bm':
        sampler = lambda s, m: sample_subordinate_bm(alpha, t, s, m)
    elif alpha <= 1.0:
        sampler = lambda s, m: sample_subdiffusion_direct(alpha, t, s, m)
    else:
        route = p.get('route') or 'time-inversion'
        sampler = lambda s, m: sample_subdiffusion_dual(alpha, t, route, s, m)
    _emit_samples(cfg, sampler, out)
    return EXIT_OK


def run_eval(cfg: CliConfig, out: TextIO) -> int:
    """Значение функции в одной точке"""
    p = cfg.params
    selector = cfg.selector
    if selector in ('ml-two', 'ml-three'):
        if selector == 'ml-two':
            result = ml_two(p['xi'], p['offset'], p['z'])
        else:
            result = ml_three(MLArgs(p['xi'], p['offset'], p['gamma'], p['z']))
        row = result.to_dict()
    elif selector == 'linnik-density':
        row = {'value': linnik_density(LinnikParams(p['nu'], p['mu']), p['t'])}
    elif selector == 'linnik-cdf':
        row = {'value': linnik_cdf(LinnikParams(p['nu'], p['mu']), p['t'])}
    elif selector == 'frac-poisson-pmf':
        row = {'value': frac_poisson_pmf(p['nu'], p['mu'], p['t'], p['k'])}
    else:
        row = {'value': levy_cdf(p['t'])}
    _emit(cfg, pd.DataFrame([row]), _meta(cfg), {'result': row}, out)
    return EXIT_OK


def run_verify(cfg: CliConfig, out: TextIO) -> int:
    """
    Проверочные наборы: одна JSON-строка на проверку или таблица CSV при --format csv.

    Returns:
        int: 0 только если все проверки пройдены
    """
    p = cfg.params
    settings = SuiteSettings(seed=cfg.seed, alpha=p.get('alpha'), rho=p.get('rho'))
    if cfg.threshold_p is not None:
        settings.threshold_p = cfg.threshold_p
    if cfg.n is not None:
        settings.n = cfg.n

    names = SUITE_ORDER if cfg.selector == 'all' else (cfg.selector,)
    bundle = {name: run_suite(name, settings) for name in names}
    reports = [report for suite_reports in bundle.values() for report in suite_reports]

    if cfg.format == 'json':
        out.write(bundle_to_json_lines(reports) + "\n")
    else:
        write_csv(reports_frame(bundle), _meta(cfg, seed=cfg.seed, threshold_p=settings.threshold_p), out)

    if cfg.excel:
        export_reports_xlsx(bundle, cfg.excel)
    if cfg.archive or config.ARCHIVE_REPORTS:
        if archive_bundle(bundle):
            cleanup_old_reports()
    if config.SAVE_METRICS:
        metrics_collector.save_metrics_to_file()

    passed = all_passed(reports)
    failed = sum(1 for report in reports if not report.passed)
    if passed:
        logger.info(f"✅ Все проверки пройдены ({len(reports)})")
    else:
        logger.error(f"❌ Не пройдено проверок: {failed} из {len(reports)}")
    return EXIT_OK if passed else EXIT_FAILED


HANDLERS = {
    'sample': run_sample,
    'simulate': run_simulate,
    'eval': run_eval,
    'verify': run_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Основная функция"""
    setup_logging()

    config_errors = config.validate_config()
    for error in config_errors:
        logger.warning(error)
    if any("❌" in error for error in config_errors):
        print("🛑 Критические ошибки конфигурации, проверьте .env", file=sys.stderr)
        return EXIT_USAGE

    try:
        cfg = parse_config(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    except ValueError as e:
        print(f"❌ Ошибка параметров: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.debug(f"Команда {cfg.subcommand} {cfg.selector}: {cfg.params}")
    try:
        with _open_output(cfg.output) as out:
            return HANDLERS[cfg.subcommand](cfg, out)
    except ValueError as e:
        print(f"❌ Ошибка параметров: {e}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_FAILED
    except Exception:
        logger.exception("❌ Непредвиденная ошибка")
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
