# utils.py
import csv
import io
import logging
import threading
from datetime import datetime
from typing import Any, Iterable, List, Mapping, Sequence

import orjson

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_NON_STR_KEYS


def log_activity(message: str, thread_id: str = "MAIN") -> None:
    """Enhanced activity logging"""
    timestamp = datetime.now().strftime("%H:%M:%S")
    logging.info(f"[{timestamp}] [{threading.current_thread().name}] [{thread_id}] {message}")


def dumps_json(payload: Any, indent: bool = True) -> bytes:
    """Byte-stable JSON: sorted keys, optional two-space indent"""
    options = JSON_OPTIONS | (orjson.OPT_INDENT_2 if indent else 0)
    return orjson.dumps(payload, option=options)


def loads_json(data: bytes | str) -> Any:
    return orjson.loads(data)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if cell is None else cell for cell in row])
    return buffer.getvalue()


def dicts_to_csv(records: List[Mapping[str, Any]]) -> str:
    if not records:
        return ""
    header = list(records[0].keys())
    return rows_to_csv(header, ([record.get(key) for key in header] for record in records))
