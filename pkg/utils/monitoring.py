"""
Модуль мониторинга и сбора метрик прогонов Монте-Карло
"""

import json
import os
import threading
import time
from collections import defaultdict
from datetime import datetime
from typing import Dict, Any
import logging

import config

logger = logging.getLogger(__name__)


class MetricsCollector:
    """Сборщик метрик для мониторинга"""

    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        """Сброс всех счетчиков"""
        self.metrics: Dict[str, Any] = {
            # Генерация
            'draws': defaultdict(int),
            'rejection_attempts': 0,
            'rejection_accepted': 0,

            # Функции Миттаг-Леффлера
            'ml_regimes': defaultdict(int),
            'ml_fallbacks': 0,

            # Проверки
            'checks_passed': 0,
            'checks_failed': 0,
            'check_durations': {},

            'errors': 0,
            'started': datetime.now(),
        }

    def record_draws(self, sampler: str, count: int):
        """Учет числа сгенерированных значений"""
        with self._lock:
            self.metrics['draws'][sampler] += int(count)

    def record_rejections(self, attempts: int, accepted: int):
        """Учет попыток метода отбора"""
        with self._lock:
            self.metrics['rejection_attempts'] += int(attempts)
            self.metrics['rejection_accepted'] += int(accepted)

    def record_regimes(self, counts: Dict[str, int]):
        """Учет режимов вычисления функций Миттаг-Леффлера"""
        with self._lock:
            for regime, count in counts.items():
                self.metrics['ml_regimes'][regime] += int(count)

    def increment_counter(self, metric_name: str, value: int = 1):
        """Увеличение счетчика метрики"""
        with self._lock:
            if metric_name in self.metrics:
                self.metrics[metric_name] += value
            else:
                self.metrics[metric_name] = value

    def record_check(self, name: str, passed: bool, duration: float):
        """Запись результата и длительности проверки"""
        with self._lock:
            if passed:
                self.metrics['checks_passed'] += 1
            else:
                self.metrics['checks_failed'] += 1
            self.metrics['check_durations'][name] = round(duration, 4)

    def timed(self, name: str):
        """Контекстный менеджер для замера длительности блока"""
        return _Timer(self, name)

    def get_metrics_summary(self) -> Dict[str, Any]:
        """Получение сводки метрик"""
        with self._lock:
            attempts = self.metrics['rejection_attempts']
            return {
                'timestamp': datetime.now().isoformat(),
                'uptime_seconds': round((datetime.now() - self.metrics['started']).total_seconds(), 3),
                'draws': dict(self.metrics['draws']),
                'total_draws': sum(self.metrics['draws'].values()),
                'rejection_attempts': attempts,
                'acceptance_rate': round(self.metrics['rejection_accepted'] / attempts, 6) if attempts else None,
                'ml_regimes': dict(self.metrics['ml_regimes']),
                'ml_fallbacks': self.metrics['ml_fallbacks'],
                'checks_passed': self.metrics['checks_passed'],
                'checks_failed': self.metrics['checks_failed'],
                'errors': self.metrics['errors'],
            }

    def save_metrics_to_file(self):
        """Сохранение метрик в JSON файл"""
        try:
            os.makedirs(config.RESULTS_DIR, exist_ok=True)

            filename = os.path.join(
                config.RESULTS_DIR,
                f'metrics_{datetime.now().strftime("%Y%m%d")}.json'
            )

            data_to_save = {
                'summary': self.get_metrics_summary(),
                'check_durations': dict(self.metrics['check_durations']),
            }

            with open(filename, 'w', encoding='utf-8') as f:
                json.dump(data_to_save, f, ensure_ascii=False, indent=2)

            logger.info(f"✅ Метрики сохранены в {filename}")
            return filename

        except Exception as e:
            logger.error(f"❌ Ошибка сохранения метрик: {e}")
            return None


class _Timer:
    def __init__(self, collector: MetricsCollector, name: str):
        self.collector = collector
        self.name = name
        self.elapsed = 0.0

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self._start
        if exc_type is not None:
            self.collector.increment_counter('errors')
        return False


# Глобальный экземпляр сборщика метрик
metrics_collector = MetricsCollector()
