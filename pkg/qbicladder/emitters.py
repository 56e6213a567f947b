"""
Table output for the command line tool.

CSV tables carry optional ``# key: value`` comment lines before the header and
after the last row; JSON output holds the same content as
``{"metadata": ..., "rows": [...], "report": ...}``.
"""

import io
import logging
import sys
from typing import Optional, TextIO

import numpy as np
import orjson
import pandas as pd

from qbicladder.pydantic import orjson_default

logger = logging.getLogger(__name__)

FULL_PRECISION = "%.16g"
TABLE_PRECISION = "%.8f"


def _comment_lines(items: Optional[dict]) -> str:
    if not items:
        return ""
    return "".join(f"# {key}: {_format_value(value)}\n" for key, value in items.items())


def _format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FULL_PRECISION % value
    return str(value)


def to_csv(
    frame: pd.DataFrame,
    metadata: Optional[dict] = None,
    report: Optional[dict] = None,
    formats: Optional[dict[str, str]] = None,
    float_format: str = FULL_PRECISION,
) -> str:
    """
    Render a table as CSV.

    ``formats`` maps column names to printf formats that override
    ``float_format`` for those columns.
    """
    frame = frame.copy()
    for column, fmt in (formats or {}).items():
        if column in frame:
            frame[column] = [fmt % v for v in frame[column]]

    buffer = io.StringIO()
    buffer.write(_comment_lines(metadata))
    frame.to_csv(buffer, index=False, float_format=float_format, lineterminator="\n")
    buffer.write(_comment_lines(report))
    return buffer.getvalue()


def to_json(
    frame: pd.DataFrame, metadata: Optional[dict] = None, report: Optional[dict] = None
) -> str:
    payload = {
        "metadata": metadata or {},
        "rows": frame.to_dict(orient="records"),
        "report": report or {},
    }
    return orjson.dumps(
        payload,
        default=orjson_default,
        option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_INDENT_2 | orjson.OPT_NON_STR_KEYS,
    ).decode()


def emit(
    frame: pd.DataFrame,
    output_format: str = "csv",
    output_path: Optional[str] = None,
    metadata: Optional[dict] = None,
    report: Optional[dict] = None,
    formats: Optional[dict[str, str]] = None,
    stream: Optional[TextIO] = None,
) -> str:
    """
    Write a table to ``output_path`` or standard output and return the text.
    """
    fmt = getattr(output_format, "value", output_format)
    if fmt == "csv":
        text = to_csv(frame, metadata=metadata, report=report, formats=formats)
    elif fmt == "json":
        text = to_json(frame, metadata=metadata, report=report) + "\n"
    else:
        raise ValueError(f"unknown output format {output_format!r}")

    if output_path:
        with open(output_path, "w") as f:
            f.write(text)
        logger.info(f"wrote {len(frame)} rows to {output_path}")
    else:
        (stream or sys.stdout).write(text)
    return text
