"""
CSV storage for metric rows and benchmark sweeps.
"""
import logging
import os
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

PARAM_COLUMNS = [
    "eta", "p", "theta1", "theta2", "theta3", "max_iter", "tol", "refine_every",
    "sigma", "rho", "contrast", "gamma", "tensor_mode",
]

METRIC_COLUMNS = ["command", "input", "reference", "method", "seed", "psnr", "ssim", "mse", "iterations", *PARAM_COLUMNS]

BENCH_COLUMNS = [
    "row_type", "image", "method", "setting", "level", "seed",
    "psnr", "psnr_sd", "ssim", "ssim_sd", "iterations", *PARAM_COLUMNS, "wall_time",
]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class ResultStore:
    """Append-only CSV file with a fixed header; writes are serialized."""

    def __init__(self, path: str | os.PathLike | None = None, columns: Sequence[str] = METRIC_COLUMNS):
        env_path = os.getenv("TWSO_METRICS_CSV")
        self.path = Path(path or env_path or "metrics.csv")
        self.path.expanduser().resolve().parent.mkdir(parents=True, exist_ok=True)
        self.columns = list(columns)
        self._lock = threading.Lock()

    def _needs_header(self) -> bool:
        return not self.path.exists() or self.path.stat().st_size == 0

    def append_rows(self, rows: Iterable[Dict[str, Any]]) -> None:
        rows = list(rows)
        unknown = {key for row in rows for key in row} - set(self.columns)
        if unknown:
            raise ValueError(f"unknown result column(s): {', '.join(sorted(unknown))}")
        frame = pd.DataFrame(
            [{key: _cell(row.get(key)) for key in self.columns} for row in rows],
            columns=self.columns,
        )
        with self._lock:
            frame.to_csv(self.path, mode="a", header=self._needs_header(), index=False)
        log.debug("[results] appended %d row(s) to %s", len(frame), self.path)

    def append_row(self, row: Dict[str, Any]) -> None:
        self.append_rows([row])

    def read_rows(self) -> List[Dict[str, str]]:
        if self._needs_header():
            return []
        frame = pd.read_csv(self.path, dtype=str, keep_default_na=False)
        return frame.to_dict("records")


def summarize(rows: List[Dict[str, Any]], group_keys: Sequence[str] = ("method", "setting", "level")) -> List[Dict[str, Any]]:
    """One summary row per setting: mean and sample standard deviation of psnr and ssim."""
    if not rows:
        return []
    frame = pd.DataFrame(rows)
    for metric in ("psnr", "ssim", "iterations"):
        frame[metric] = frame[metric].astype(float)
    summary = (
        frame.groupby(list(group_keys), sort=False, dropna=False)
        .agg(
            psnr=("psnr", "mean"),
            psnr_sd=("psnr", "std"),
            ssim=("ssim", "mean"),
            ssim_sd=("ssim", "std"),
            iterations=("iterations", "mean"),
        )
        .fillna({"psnr_sd": 0.0, "ssim_sd": 0.0})
        .reset_index()
    )
    summary.insert(0, "image", "*")
    summary.insert(0, "row_type", "summary")
    return summary.to_dict("records")
