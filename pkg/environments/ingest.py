"""
CSV ingestion for item features and click logs.

- features CSV: one row per item, d comma-separated reals, no header
- click-log CSV: header ``timestamp,item``, integer fields, one event per row

Errors name the file and the 1-based line number of the offending row.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import InvalidInputError
from core.types import FeatureMatrix
from environments.replay import ReplayLog

logger = logging.getLogger(__name__)

_LINE_RE = re.compile(r"line (\d+)")


class IngestError(InvalidInputError):
    """Raised when an input file cannot be parsed"""

    pass


def _read_csv(path: Path, **kwargs) -> pd.DataFrame:
    if not path.is_file():
        raise IngestError(f"{path}: file not found")
    try:
        return pd.read_csv(path, **kwargs)
    except pd.errors.EmptyDataError as e:
        raise IngestError(f"{path}: file is empty") from e
    except pd.errors.ParserError as e:
        match = _LINE_RE.search(str(e))
        where = f"line {match.group(1)}" if match else "unknown line"
        raise IngestError(f"{path}: malformed row at {where}: {e}") from e


def _data_lines(path: Path) -> list[int]:
    """1-based file line of each non-blank line; parsed rows map onto these in order."""
    with path.open(encoding="utf-8", errors="replace") as f:
        return [number for number, text in enumerate(f, start=1) if text.strip()]


def _first_bad_row(frame: pd.DataFrame) -> int | None:
    bad = frame.isna().any(axis=1).to_numpy()
    return int(np.argmax(bad)) if bad.any() else None


def ingest_features(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    raw = _read_csv(path, header=None, dtype=str, skip_blank_lines=True)
    if raw.empty:
        raise IngestError(f"{path}: file is empty")
    frame = raw.apply(pd.to_numeric, errors="coerce")
    row = _first_bad_row(frame)
    if row is not None:
        raise IngestError(f"{path}: line {_data_lines(path)[row]} has a missing or non-numeric field")
    features = FeatureMatrix(frame.to_numpy(dtype=np.float64))
    logger.info(f"✅ Loaded {features.L} item features (d={features.d}) from {path}")
    return features


def ingest_log(path: str | Path, K: int, L: int | None = None) -> ReplayLog:
    """Load a click log; events out of timestamp order are re-sorted and flagged."""
    path = Path(path)
    raw = _read_csv(path, dtype=str, skip_blank_lines=True)
    if list(raw.columns) != ["timestamp", "item"]:
        raise IngestError(f"{path}: header must be 'timestamp,item', got '{','.join(map(str, raw.columns))}'")
    if raw.empty:
        raise IngestError(f"{path}: log has no events")
    # the first non-blank line is the header
    lines = _data_lines(path)[1:]
    frame = raw.apply(pd.to_numeric, errors="coerce")
    row = _first_bad_row(frame)
    if row is not None:
        raise IngestError(f"{path}: line {lines[row]} has a missing or non-numeric field")
    values = frame.to_numpy(dtype=np.float64)
    if not np.all(values == np.round(values)):
        row = int(np.argmax(np.any(values != np.round(values), axis=1)))
        raise IngestError(f"{path}: line {lines[row]} has a non-integer field")
    timestamps = values[:, 0].astype(np.int64)
    items = values[:, 1].astype(np.int64)
    if items.min() < 0:
        row = int(np.argmax(items < 0))
        raise IngestError(f"{path}: line {lines[row]} has a negative item index")
    n_items = int(items.max()) + 1
    if L is None:
        L = n_items
    elif n_items > L:
        row = int(np.argmax(items >= L))
        raise IngestError(f"{path}: line {lines[row]} item index {items[row]} is not below L={L}")
    resorted = bool(np.any(np.diff(timestamps) < 0))
    if resorted:
        order = np.argsort(timestamps, kind="stable")
        timestamps, items = timestamps[order], items[order]
        logger.warning(f"⚠️ {path}: events were not sorted by timestamp; re-sorted")
    log = ReplayLog(timestamps=timestamps, items=items, L=L, K=K, resorted=resorted)
    logger.info(f"✅ Loaded {log.n_events} click events over {L} items from {path}")
    return log
