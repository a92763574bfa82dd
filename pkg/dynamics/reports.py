"""CSV and JSON writers shared by the commands and the HTTP views.

CSV: header row, comma separator, LF endings, floats by repr.
JSON: UTF-8, keys in insertion order, NaN and infinities as null.
"""
import csv
import io
import json
import logging
import math
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return '' if value is None else str(value)


def table_csv(columns, rows) -> str:
    """``rows`` are dicts keyed by column name."""
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(column)) for column in columns])
    return stream.getvalue()


def jsonable(value):
    """Plain JSON types with NaN/inf mapped to None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def report_json(report) -> str:
    return json.dumps(jsonable(report), indent=2, ensure_ascii=False, allow_nan=False) + '\n'


def write_outputs(out_dir, name, report, columns, rows):
    """Write ``<name>.json`` and ``<name>.csv``; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path, csv_path = out_dir / f'{name}.json', out_dir / f'{name}.csv'
    with open(json_path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(report_json(report))
    with open(csv_path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(table_csv(columns, rows))
    logger.info('wrote %s and %s (%d rows)', json_path, csv_path, len(rows))
    return json_path, csv_path
