"""
CSV export and SVG plot rendering for metric series.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from core.types import SamplerId  # noqa: E402
from harness.metrics import MetricsSeries  # noqa: E402

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ["t", "reward", "violation_rate", "chosen_sampler", "score"]
ARR_COLUMNS = ["t", "sampler_id", "arr"]
FLOAT_FORMAT = "%.10g"


def _fmt(value: float) -> str:
    return FLOAT_FORMAT % value


class SeriesCsvWriter:
    """Appends one row per round and flushes, so partial runs leave a usable file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w", newline="", encoding="utf-8")
        except OSError as e:
            raise OSError(f"Cannot write {self.path}: {e}") from e
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(SERIES_COLUMNS)

    def write(self, t: int, reward: float, violation: float, sampler: SamplerId, score: float) -> None:
        self._writer.writerow([t, _fmt(reward), _fmt(violation), sampler.value, _fmt(score)])
        self._handle.flush()

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "SeriesCsvWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def series_frame(series: MetricsSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t": range(1, len(series) + 1),
            "reward": series.rewards,
            "violation_rate": series.violations,
            "chosen_sampler": [s.value for s in series.chosen],
            "score": series.scores,
        },
        columns=SERIES_COLUMNS,
    )


def _to_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e}") from e
    return path


def export_csv(series: MetricsSeries, path: str | Path) -> Path:
    return _to_csv(series_frame(series), path)


def export_arr(series: MetricsSeries, path: str | Path, samplers: Sequence[SamplerId] | None = None) -> Path:
    """Sidecar of arr_t per sampler for every round after the exploration phase."""
    samplers = list(samplers) if samplers is not None else series.samplers_seen()
    start = series.exploration_horizon + 1
    rows = []
    for sid in samplers:
        for offset, value in enumerate(series.arr_trajectory(sid)):
            rows.append((start + offset, sid.value, value))
    frame = pd.DataFrame(rows, columns=ARR_COLUMNS).sort_values(["t", "sampler_id"], kind="stable")
    return _to_csv(frame, path)


def read_series_csv(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise OSError(f"Cannot read {path}: {e}") from e
    missing = [c for c in SERIES_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}")
    return frame


def render_plot(frames: Sequence[pd.DataFrame], labels: Sequence[str], path: str | Path) -> Path:
    """Cumulative-mean reward and violation-rate curves, one line per series, as SVG."""
    path = Path(path)
    plt.rcParams["svg.hashsalt"] = "cmab"
    fig, (ax_r, ax_c) = plt.subplots(1, 2, figsize=(10, 4))
    for frame, label in zip(frames, labels):
        t = frame["t"].to_numpy()
        ax_r.plot(t, frame["reward"].expanding().mean().to_numpy(), label=label, linewidth=1.2)
        ax_c.plot(t, frame["violation_rate"].expanding().mean().to_numpy(), label=label, linewidth=1.2)
    ax_r.set_xlabel("round")
    ax_r.set_ylabel("cumulative mean reward")
    ax_c.set_xlabel("round")
    ax_c.set_ylabel("cumulative mean violation rate")
    if frames:
        ax_r.legend(fontsize=8)
    fig.tight_layout()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.info(f"💾 Plot written to {path}")
    return path
