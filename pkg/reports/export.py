"""
Запись выборок, траекторий и отчетов в CSV / JSON / Excel
"""

import io
import json
import logging
from typing import Any, Dict, Iterable, List, Optional, TextIO, Tuple

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def samples_frame(values, column: str = 'value') -> pd.DataFrame:
    """Одна колонка значений"""
    return pd.DataFrame({column: np.atleast_1d(np.asarray(values, dtype=float))})


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value).replace(' ', '_')


def format_header(meta: Dict[str, Any], columns: Iterable[str]) -> str:
    """Строка-комментарий '# key=value ... columns=a,b'"""
    parts = [f"{key}={_format_value(value)}" for key, value in meta.items() if value is not None]
    parts.append("columns=" + ",".join(columns))
    return "# " + " ".join(parts)


def write_csv(frame: pd.DataFrame, meta: Dict[str, Any], out: TextIO):
    """Заголовок-комментарий, затем строки данных без строки имен колонок"""
    out.write(format_header(meta, frame.columns) + "\n")
    frame.to_csv(out, header=False, index=False, lineterminator="\n")


def read_csv(source) -> Tuple[Dict[str, str], pd.DataFrame]:
    """
    Чтение файла, записанного write_csv

    Returns:
        Tuple[dict, DataFrame]: (метаданные из заголовка, данные)
    """
    if isinstance(source, str):
        with open(source, 'r', encoding='utf-8') as f:
            text = f.read()
    else:
        text = source.read()

    first, _, body = text.partition("\n")
    if not first.startswith("#"):
        raise ValueError("файл не начинается с заголовка-комментария '#'")
    meta = dict(item.split("=", 1) for item in first[1:].split() if "=" in item)
    columns = meta.get('columns', 'value').split(",")
    if not body.strip():
        return meta, pd.DataFrame(columns=columns)
    frame = pd.read_csv(io.StringIO(body), comment='#', header=None, names=columns,
                        float_precision='round_trip')
    return meta, frame


def write_json(obj: Any, out: TextIO, compact: bool = False):
    json.dump(obj, out, ensure_ascii=False, indent=None if compact else 2)
    out.write("\n")


_REPORT_LEADING = ['suite', 'kind', 'name', 'passed', 'seed']


def reports_frame(bundle: Dict[str, List[Any]]) -> pd.DataFrame:
    """Все отчеты одной таблицей: набор, вид, имя, исход, затем поля своего вида"""
    rows = [{'suite': suite, **report.to_dict()} for suite, reports in bundle.items() for report in reports]
    if not rows:
        return pd.DataFrame(columns=_REPORT_LEADING)
    frame = pd.DataFrame(rows)
    return frame[_REPORT_LEADING + [column for column in frame.columns if column not in _REPORT_LEADING]]


def export_reports_xlsx(bundle: Dict[str, List[Any]], path: str) -> Optional[str]:
    """Экспорт отчетов в Excel: лист на каждый набор и лист сводки"""
    try:
        summary = []
        with pd.ExcelWriter(path, engine='xlsxwriter') as writer:
            for suite, reports in bundle.items():
                rows = [report.to_dict() for report in reports]
                pd.DataFrame(rows).to_excel(writer, sheet_name=suite[:31], index=False)
                passed = sum(1 for report in reports if report.passed)
                summary.append({
                    'Набор': suite,
                    'Проверок': len(reports),
                    'Пройдено': passed,
                    'Не пройдено': len(reports) - passed,
                })
            pd.DataFrame(summary).to_excel(writer, sheet_name='Сводка', index=False)

        logger.info(f"✅ Отчеты экспортированы в {path}")
        return path

    except Exception as e:
        logger.error(f"❌ Ошибка экспорта в Excel: {e}")
        return None
