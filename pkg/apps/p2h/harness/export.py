"""
Output files of a scenario run.

Trace tables are CSV with a fixed column order. Every file opens with a
``#`` header line carrying the configuration hash and seed, so downstream
plotting can read them with ``pandas.read_csv(path, comment="#")``.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from p2h.harness.metrics import Metrics

logger = logging.getLogger(__name__)

TRACE_BASE_COLUMNS = [
    "hour",
    "interval",
    "t",
    "instruction_w",
    "achieved_w",
    "bus_q_var",
    "bus_pf",
    "h2_kg_h",
]
TRACE_STACK_FIELDS = ["delta", "current", "baseline", "temperature", "hto", "p", "q"]


def trace_columns(n_stacks: int) -> List[str]:
    columns = list(TRACE_BASE_COLUMNS)
    for b in range(n_stacks):
        columns.extend(f"{name}_{b}" for name in TRACE_STACK_FIELDS)
    return columns


def header_line(config_hash: str, seed: Optional[int] = None, **extra) -> str:
    fields = {"config_hash": config_hash}
    if seed is not None:
        fields["seed"] = seed
    fields.update(extra)
    return "# " + " ".join(f"{key}={value}" for key, value in fields.items())


def write_table(frame: pd.DataFrame, path, config_hash: str, seed: Optional[int] = None,
                columns: Optional[List[str]] = None, **extra) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is not None:
        frame = frame.reindex(columns=columns)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(header_line(config_hash, seed, **extra) + "\n")
        frame.to_csv(handle, index=False, float_format="%.10g")
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path


def write_trace(trace: pd.DataFrame, path, n_stacks: int, config_hash: str, seed: int, **extra) -> Path:
    return write_table(trace, path, config_hash, seed, columns=trace_columns(n_stacks), **extra)


def read_table(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_metrics(metrics: Dict[str, Metrics], path, config_hash: str, seed: int, **extra) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config_hash": config_hash,
        "seed": seed,
        **extra,
        "controllers": {name: m.to_dict() for name, m in metrics.items()},
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
