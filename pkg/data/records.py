"""
Exam Records
CSV ingestion of historical exams (exam_type, day, start, completion).
Malformed rows are rejected with their line number, never silently dropped.
"""

import logging
import re
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path

import pandas as pd

from scheduling.errors import InvalidInputError

logger = logging.getLogger(__name__)

COLUMNS = ("exam_type", "day", "start", "completion")
_CLOCK = re.compile(r"\d{1,2}:\d{2}:\d{2}(\.\d+)?")


@dataclass(frozen=True)
class ExamRecord:
    record_id: int          # CSV line number
    exam_type: str
    day: date
    start: datetime
    completion: datetime

    @property
    def duration(self) -> float:
        """Service duration in minutes."""
        return (self.completion - self.start).total_seconds() / 60.0


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


def _timestamp(text: str, field: str) -> pd.Timestamp:
    stamp = pd.Timestamp(text)
    if pd.isna(stamp):
        raise ValueError(f"empty {field}")
    return stamp


def _parse_day(value: str) -> date:
    return _timestamp(str(value).strip(), "day").date()


def _parse_time(value: str, day: date, field: str) -> datetime:
    text = str(value).strip()
    if _CLOCK.fullmatch(text):
        return _timestamp(f"{day.isoformat()} {text}", field).to_pydatetime()
    return _timestamp(text, field).to_pydatetime()


def _parse_row(line: int, row: pd.Series) -> ExamRecord:
    exam_type = str(row["exam_type"]).strip()
    if not exam_type:
        raise ValueError("empty exam_type")
    day = _parse_day(row["day"])
    start = _parse_time(row["start"], day, "start")
    completion = _parse_time(row["completion"], day, "completion")
    if completion < start:
        raise ValueError(f"completion {completion.time()} precedes start {start.time()}")
    return ExamRecord(line, exam_type, day, start, completion)


def parse_records(frame: pd.DataFrame) -> tuple:
    """(records, rejected rows) from a frame read with string dtype."""
    missing = [col for col in COLUMNS if col not in frame.columns]
    if missing:
        raise InvalidInputError(f"records CSV is missing columns: {', '.join(missing)}")
    records, rejected = [], []
    for offset, row in frame.iterrows():
        line = int(offset) + 2      # header is line 1
        try:
            records.append(_parse_row(line, row))
        except (ValueError, TypeError) as e:
            rejected.append(RejectedRow(line, str(e)))
    return records, rejected


def load_records(path) -> list:
    """Parse and validate a records CSV; rejected rows are logged with their line numbers."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InvalidInputError(f"cannot read records file {path}: {e}") from e

    records, rejected = parse_records(frame)
    for row in rejected:
        logger.warning(f"Rejected {path.name} line {row.line}: {row.reason}")
    if not records:
        raise InvalidInputError(f"{path} holds no valid records ({len(rejected)} rejected)")
    logger.info(f"Loaded {len(records)} records from {path.name} ({len(rejected)} rejected)")
    return records


def records_frame(records) -> pd.DataFrame:
    """One row per record with its duration in minutes."""
    return pd.DataFrame(
        {
            "record_id": [r.record_id for r in records],
            "exam_type": [r.exam_type for r in records],
            "day": [r.day for r in records],
            "start": [r.start for r in records],
            "duration": [r.duration for r in records],
        }
    )
