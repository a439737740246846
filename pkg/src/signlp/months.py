"""Integer month indexing.

The panel is monthly, so dates are handled as integer month indices
``year * 12 + (month - 1)``.  Day-level timestamps never enter the engine;
event dates are reduced to their month at aggregation time.
"""

from __future__ import annotations

import datetime as _dt
import re

MIN_MONTH = 1900 * 12      # 1900-01
MAX_MONTH = 2100 * 12 + 11 # 2100-12

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def parse_month(text: str) -> int:
    """Parse ``YYYY-MM`` into a month index; raise ValueError if malformed
    or outside [1900-01, 2100-12]."""
    m = _MONTH_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a YYYY-MM month: {text!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    idx = year * 12 + (month - 1)
    if not MIN_MONTH <= idx <= MAX_MONTH:
        raise ValueError(f"date {text!r} outside supported range")
    return idx


def format_month(idx: int) -> str:
    """Inverse of :func:`parse_month`."""
    year, month = divmod(int(idx), 12)
    return f"{year:04d}-{month + 1:02d}"


def month_of_year(idx: int) -> int:
    """Calendar month 1..12 of a month index."""
    return int(idx) % 12 + 1


def parse_day(text: str) -> _dt.date:
    """Parse ``YYYY-MM-DD`` event dates."""
    m = _DATE_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a YYYY-MM-DD date: {text!r}")
    return _dt.date(int(m.group(1)), int(m.group(2)), int(m.group(3)))


def month_of_date(day: _dt.date) -> int:
    return day.year * 12 + (day.month - 1)
