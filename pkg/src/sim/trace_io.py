"""CSV / JSON export of simulation traces and plot data.

trace.csv      t, q1..qN, X (schedule bitmask), achieved_w, w_star (blank when not sampled)
avg_queue.csv  slot, avg_queue (one row per recorded slot)
delay.csv      rho, kind, time_avg_queue
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from src.sim.network_sim import SimulationTrace

TRACE_FILE = "trace.csv"
AVG_QUEUE_FILE = "avg_queue.csv"
SUMMARY_FILE = "summary.json"
DELAY_FILE = "delay.csv"


def trace_frame(trace: SimulationTrace) -> pd.DataFrame:
    """One row per recorded slot"""
    columns: dict[str, Any] = {"t": [r.slot for r in trace.records]}
    queues = np.array([r.queues for r in trace.records], dtype=np.int64).reshape(-1, trace.num_links)
    for link in range(trace.num_links):
        columns[f"q{link + 1}"] = queues[:, link]
    columns["X"] = [r.schedule for r in trace.records]
    columns["achieved_w"] = [r.achieved_weight for r in trace.records]
    columns["w_star"] = [np.nan if r.oracle_weight is None else r.oracle_weight for r in trace.records]
    return pd.DataFrame(columns)


def write_trace_csv(trace: SimulationTrace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(trace).to_csv(path, index=False, na_rep="", float_format="%.12g")
    return path


def read_trace_csv(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path)


def write_avg_queue_csv(trace: SimulationTrace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    slots = np.array([r.slot for r in trace.records], dtype=np.int64)
    frame = pd.DataFrame({"slot": slots, "avg_queue": trace.avg_queue[slots - 1]})
    frame.to_csv(path, index=False, float_format="%.12g")
    return path


def write_delay_csv(rows: Sequence[dict[str, Any]], path: str | Path) -> Path:
    """Time-average queue per link for every (rho, kind); rows averaged over seeds"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=["rho", "kind", "time_avg_queue"])
    if not frame.empty:
        frame = frame.groupby(["rho", "kind"], as_index=False)["time_avg_queue"].mean()
        frame = frame.sort_values(["kind", "rho"])
    frame.to_csv(path, index=False, float_format="%.12g")
    return path


def write_summary_json(summary: dict[str, Any], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_summary_json(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
