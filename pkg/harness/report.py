"""
Replicate aggregation straight from the per-replicate CSV files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import pandas as pd

from harness.export import read_series_csv

REPORT_COLUMNS = ["run", "rounds", "reward_mean", "violation_mean", "reward_last", "violation_last"]


def summarize_runs(csv_paths: Sequence[str | Path], last_window: int = 200) -> pd.DataFrame:
    """One row per replicate plus ``mean`` and ``std`` rows across replicates."""
    rows = []
    for path in csv_paths:
        frame = read_series_csv(path)
        tail = frame.tail(last_window)
        rows.append(
            {
                "run": str(path),
                "rounds": len(frame),
                "reward_mean": frame["reward"].mean(),
                "violation_mean": frame["violation_rate"].mean(),
                "reward_last": tail["reward"].mean(),
                "violation_last": tail["violation_rate"].mean(),
            }
        )
    table = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    if table.empty:
        return table
    numeric = table.drop(columns="run")
    aggregate = pd.DataFrame(
        [
            {"run": "mean", **numeric.mean().to_dict()},
            {"run": "std", **numeric.std(ddof=0).to_dict()},
        ]
    )
    return pd.concat([table, aggregate], ignore_index=True)


def chosen_shares(csv_paths: Sequence[str | Path]) -> pd.DataFrame:
    """Share of rounds won by each sampler, per replicate."""
    shares = {}
    for path in csv_paths:
        frame = read_series_csv(path)
        shares[str(path)] = frame["chosen_sampler"].value_counts(normalize=True)
    return pd.DataFrame(shares).fillna(0.0).T.sort_index(axis=1)
