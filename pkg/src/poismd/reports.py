"""Deterministic CSV serialization for all CLI outputs.

Files are RFC-4180 (UTF-8, CRLF, '.' decimal) with a leading comment block:
tool version, the exact run configuration, and per-column units.  Floats are
printed with 17 significant digits so equal inputs reproduce equal bytes.
"""

from __future__ import annotations

import io
import math
from typing import Sequence

TOOL_NAME = "poismd"
TOOL_VERSION = "0.1.0"

_EOL = "\r\n"


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def render_csv(
    columns: Sequence[tuple[str, str]],
    rows: Sequence[dict],
    config: dict,
) -> str:
    """Render rows to CSV text with the standard header block."""
    buf = io.StringIO()
    buf.write(f"# {TOOL_NAME} {TOOL_VERSION}{_EOL}")
    echo = " ".join(f"{key}={format_value(val)}" for key, val in sorted(config.items()))
    buf.write(f"# config: {echo}{_EOL}")
    units = ", ".join(f"{name} ({unit})" for name, unit in columns)
    buf.write(f"# columns: {units}{_EOL}")
    names = [name for name, _ in columns]
    buf.write(",".join(names) + _EOL)
    for row in rows:
        buf.write(",".join(format_value(row[name]) for name in names) + _EOL)
    return buf.getvalue()


def write_csv(
    path: str | None,
    columns: Sequence[tuple[str, str]],
    rows: Sequence[dict],
    config: dict,
) -> str:
    """Write (or print, when ``path`` is None) the rendered CSV; returns the text."""
    text = render_csv(columns, rows, config)
    if path is None:
        print(text, end="")
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    return text
