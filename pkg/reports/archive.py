"""
Архив наборов отчетов verify с ротацией старых файлов
"""

import json
import os
from datetime import datetime
from typing import Any, Dict, List, Optional
import logging

import config

logger = logging.getLogger(__name__)

ARCHIVE_PREFIX = "verify_"


def _bundle_payload(bundle: Dict[str, List[Any]]) -> Dict[str, Any]:
    return {
        'created': datetime.now().isoformat(timespec='seconds'),
        'suites': {suite: [report.to_dict() for report in reports] for suite, reports in bundle.items()},
    }


def archive_bundle(bundle: Dict[str, List[Any]], results_dir: Optional[str] = None) -> Optional[str]:
    """
    Сохраняет набор отчетов в results_dir

    Returns:
        str: Путь к созданному файлу или None в случае ошибки
    """
    results_dir = results_dir or config.RESULTS_DIR
    try:
        os.makedirs(results_dir, exist_ok=True)

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        archive_file = os.path.join(results_dir, f"{ARCHIVE_PREFIX}{timestamp}.json")
        suffix = 1
        while os.path.exists(archive_file):
            archive_file = os.path.join(results_dir, f"{ARCHIVE_PREFIX}{timestamp}_{suffix}.json")
            suffix += 1

        payload = _bundle_payload(bundle)
        expected = json.dumps(payload, ensure_ascii=False, sort_keys=True)
        with open(archive_file, 'w', encoding='utf-8') as f:
            json.dump(payload, f, ensure_ascii=False, indent=2)

        # Проверяем, что файл читается обратно без потерь
        try:
            with open(archive_file, 'r', encoding='utf-8') as f:
                stored = json.dumps(json.load(f), ensure_ascii=False, sort_keys=True)
            if stored != expected:
                logger.error(f"Проверка целостности архива не пройдена: {archive_file}")
                os.remove(archive_file)
                return None
        except Exception as e:
            logger.error(f"Ошибка проверки целостности: {e}")
            os.remove(archive_file)
            return None

        logger.info(f"✅ Отчеты сохранены в архив: {archive_file}")
        return archive_file

    except Exception as e:
        logger.error(f"❌ Ошибка архивирования отчетов: {e}")
        return None


def list_archived_reports(results_dir: Optional[str] = None) -> List[str]:
    """Архивные файлы, самые старые первыми"""
    results_dir = results_dir or config.RESULTS_DIR
    if not os.path.isdir(results_dir):
        return []
    files = []
    for name in os.listdir(results_dir):
        if name.startswith(ARCHIVE_PREFIX) and name.endswith(".json"):
            path = os.path.join(results_dir, name)
            if os.path.isfile(path):
                files.append((os.path.getmtime(path), name, path))
    files.sort()
    return [path for _, _, path in files]


def cleanup_old_reports(max_reports: Optional[int] = None, results_dir: Optional[str] = None) -> int:
    """
    Удаляет старые архивы, оставляя только последние max_reports

    Returns:
        int: число удаленных файлов
    """
    max_reports = config.MAX_ARCHIVED_REPORTS if max_reports is None else max_reports
    removed = 0
    try:
        archived = list_archived_reports(results_dir)
        for path in archived[:max(0, len(archived) - max_reports)]:
            try:
                os.remove(path)
                removed += 1
                logger.info(f"🗑 Удален старый архив: {os.path.basename(path)}")
            except Exception as e:
                logger.error(f"Ошибка удаления файла {path}: {e}")

    except Exception as e:
        logger.error(f"❌ Ошибка очистки старых архивов: {e}")
    return removed
