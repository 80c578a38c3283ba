"""
Конфигурация stablesim
Все настройки загружаются из .env файла
"""

import os
from dotenv import load_dotenv

# Загружаем переменные окружения
load_dotenv()

# ============================
# ЛОГИРОВАНИЕ
# ============================

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "logs/stablesim.log")

# ============================
# РЕЗУЛЬТАТЫ И МЕТРИКИ
# ============================

RESULTS_DIR = os.getenv("RESULTS_DIR", "results/")
MAX_ARCHIVED_REPORTS = int(os.getenv("MAX_ARCHIVED_REPORTS", "30"))
ARCHIVE_REPORTS = os.getenv("ARCHIVE_REPORTS", "false").lower() == "true"
SAVE_METRICS = os.getenv("SAVE_METRICS", "false").lower() == "true"

# ============================
# МОНТЕ-КАРЛО
# ============================

DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "20240601"))
THRESHOLD_P = float(os.getenv("THRESHOLD_P", "0.001"))
MC_WORKERS = int(os.getenv("MC_WORKERS", "1"))

# Размер шарда фиксирован: от него зависит разбиение на подпотоки
CHUNK_SIZE = 1 << 16

# Лимит попыток при отборе положительных значений
REJECTION_CAP = int(os.getenv("REJECTION_CAP", "10000"))

# Броуновское движение: "laplacian" -> Var B(t) = 2t, "half-laplacian" -> Var B(t) = t
BM_GENERATOR = os.getenv("BM_GENERATOR", "laplacian")

# ============================
# ФУНКЦИИ МИТТАГ-ЛЕФФЛЕРА
# ============================

ML_TERM_CAP = int(os.getenv("ML_TERM_CAP", "10000"))
ML_SERIES_TOL = float(os.getenv("ML_SERIES_TOL", "1e-10"))
# Допуск для массовых вычислений функции распределения (критерии согласия)
ML_ASYMPTOTIC_TOL = float(os.getenv("ML_ASYMPTOTIC_TOL", "1e-6"))

# ============================
# ПРОВЕРОЧНЫЕ НАБОРЫ
# ============================

VERIFY_SAMPLES = int(os.getenv("VERIFY_SAMPLES", "100000"))
VERIFY_PATHS = int(os.getenv("VERIFY_PATHS", "10000"))
VERIFY_PATH_DT = float(os.getenv("VERIFY_PATH_DT", "1e-4"))

BM_GENERATORS = ("laplacian", "half-laplacian")

# ============================
# ВАЛИДАЦИЯ КОНФИГУРАЦИИ
# ============================

def validate_config():
    """Проверяет корректность конфигурации"""
    errors = []

    if LOG_LEVEL.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        errors.append(f"⚠️  LOG_LEVEL={LOG_LEVEL} не распознан, будет использован INFO")

    if BM_GENERATOR not in BM_GENERATORS:
        errors.append(f"❌ BM_GENERATOR должен быть одним из {BM_GENERATORS}, получено {BM_GENERATOR!r}")

    if not 0.0 < THRESHOLD_P < 1.0:
        errors.append(f"❌ THRESHOLD_P должен лежать в (0, 1), получено {THRESHOLD_P}")

    if MC_WORKERS < 1:
        errors.append(f"❌ MC_WORKERS должен быть не меньше 1, получено {MC_WORKERS}")

    if REJECTION_CAP < 1:
        errors.append(f"❌ REJECTION_CAP должен быть положительным, получено {REJECTION_CAP}")

    if ML_TERM_CAP < 10:
        errors.append(f"❌ ML_TERM_CAP слишком мал: {ML_TERM_CAP}")

    if not 0 <= DEFAULT_SEED < 2 ** 64:
        errors.append("❌ DEFAULT_SEED должен быть 64-битным неотрицательным целым")

    if VERIFY_SAMPLES < 10_000:
        errors.append(f"⚠️  VERIFY_SAMPLES={VERIFY_SAMPLES} меньше 10^4, асимптотические p-значения неточны")

    if MAX_ARCHIVED_REPORTS < 1:
        errors.append("⚠️  MAX_ARCHIVED_REPORTS должен быть не меньше 1")

    return errors


def bm_variance_factor(generator: str = None) -> float:
    """Дисперсия B(1) для выбранного генератора броуновского движения"""
    generator = generator or BM_GENERATOR
    if generator == "laplacian":
        return 2.0
    if generator == "half-laplacian":
        return 1.0
    raise ValueError(f"неизвестный генератор броуновского движения: {generator!r}")
