"""Read campaign CSVs and reduce them to per-scheme curve statistics.

The input schema is the simulator's documented metrics CSV; this package
deliberately touches nothing else of the simulator. Aggregation: for each
scheme and episode, the across-seed mean and a normal-approximation 95%
band (1.96 * sample std / sqrt(seeds)); a single seed yields a zero-width
band. Optional smoothing is a trailing moving average applied to both the
mean and the band half-width.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

CSV_HEADER = ("scheme", "seed", "episode", "success_norm", "failed_norm",
              "goodput_bps", "collision_rate", "mean_reward")
METRIC_COLUMNS = CSV_HEADER[3:]
CONFIDENCE_Z = 1.96


@dataclass(frozen=True)
class PlotSpec:
    csv_paths: tuple[str, ...]
    metric: str
    smooth_window: int = 10
    out_path: str = "curves.png"

    def validate(self) -> None:
        if not self.csv_paths:
            raise ValueError("at least one CSV path is required")
        if self.metric not in METRIC_COLUMNS:
            raise ValueError(
                f"unknown metric column {self.metric!r}; choose from {METRIC_COLUMNS}")
        if self.smooth_window < 1:
            raise ValueError("smooth_window must be >= 1")


@dataclass(frozen=True)
class SchemeCurve:
    scheme: str
    episodes: np.ndarray
    mean: np.ndarray
    half_width: np.ndarray
    n_seeds: int


def read_metrics(paths) -> list[dict]:
    """Load rows from one or more metrics CSVs, checking the schema."""
    rows: list[dict] = []
    for path in paths:
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
        if not lines:
            raise ValueError(f"{path}: empty CSV")
        reader = csv.reader(lines)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for parts in reader:
            row = {"scheme": parts[0], "seed": int(parts[1]), "episode": int(parts[2])}
            for name, value in zip(METRIC_COLUMNS, parts[3:]):
                row[name] = float(value)
            rows.append(row)
    if not rows:
        raise ValueError("no data rows found")
    return rows


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average; the first points average what exists."""
    if window <= 1:
        return np.asarray(values, dtype=float)
    out = np.empty(len(values))
    for i in range(len(values)):
        out[i] = np.mean(values[max(0, i - window + 1): i + 1])
    return out


def aggregate(rows: list[dict], metric: str, smooth_window: int = 1) -> list[SchemeCurve]:
    """Across-seed mean and 95% half-width per scheme, episode-ordered."""
    if metric not in METRIC_COLUMNS:
        raise ValueError(f"unknown metric column {metric!r}")
    schemes = sorted({r["scheme"] for r in rows})
    curves: list[SchemeCurve] = []
    for scheme in schemes:
        per_episode: dict[int, list[float]] = {}
        for r in rows:
            if r["scheme"] == scheme:
                per_episode.setdefault(r["episode"], []).append(r[metric])
        episodes = np.array(sorted(per_episode))
        mean = np.empty(len(episodes))
        half = np.empty(len(episodes))
        max_seeds = 0
        for i, ep in enumerate(episodes):
            vals = np.asarray(per_episode[int(ep)], dtype=float)
            mean[i] = vals.mean()
            k = len(vals)
            max_seeds = max(max_seeds, k)
            half[i] = CONFIDENCE_Z * vals.std(ddof=1) / np.sqrt(k) if k > 1 else 0.0
        curves.append(SchemeCurve(
            scheme=scheme,
            episodes=episodes,
            mean=moving_average(mean, smooth_window),
            half_width=moving_average(half, smooth_window),
            n_seeds=max_seeds,
        ))
    return curves
