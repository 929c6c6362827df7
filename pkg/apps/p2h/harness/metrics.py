"""Scenario scores: instruction tracking, bus power factor and hydrogen output."""
import math
from dataclasses import asdict, dataclass
from typing import Dict, Sequence

import numpy as np
import pandas as pd

# Samples off the instruction by more than this many watts count as untracked.
TRACKING_DEADBAND_W = 1.0


@dataclass(frozen=True)
class Metrics:
    flexibility_mw: float
    avg_pf: float
    production_kg: float
    min_pf: float
    max_hto: float
    samples: int
    pf_violations: int
    mpc_time_mean: float = 0.0
    mpc_time_max: float = 0.0
    rt_time_mean: float = 0.0
    rt_time_max: float = 0.0
    untracked_samples: int = 0

    def __post_init__(self):
        if self.flexibility_mw < 0:
            raise ValueError("flexibility cannot be negative")
        if self.samples and not 0.0 < self.avg_pf <= 1.0 + 1e-12:
            raise ValueError(f"average PF {self.avg_pf} outside (0, 1]")
        if self.production_kg < 0:
            raise ValueError("production cannot be negative")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _timing(values: Sequence[float]):
    if not values:
        return 0.0, 0.0
    return float(np.mean(values)), float(np.max(values))


def compute_metrics(trace: pd.DataFrame, dt: float, pf_min: float = 0.9, mpc_times: Sequence[float] = (),
                    rt_times: Sequence[float] = ()) -> Metrics:
    """
    Scores over every sub-interval of a closed-loop trace.

    flexibility = Σ |P_instruction − Σ_b P_b| in MW, avg_pf the mean bus PF
    over all samples, production = Σ hydrogen rate × dt in kg.
    """
    if trace.empty:
        return Metrics(0.0, 1.0, 0.0, 1.0, 0.0, 0, 0)
    error = (trace["instruction_w"] - trace["achieved_w"]).abs()
    hto_columns = [c for c in trace.columns if c.startswith("hto_")]
    mpc_mean, mpc_max = _timing(mpc_times)
    rt_mean, rt_max = _timing(rt_times)
    return Metrics(
        flexibility_mw=float(error.sum() / 1e6),
        avg_pf=float(trace["bus_pf"].mean()),
        production_kg=float(trace["h2_kg_h"].sum() * dt),
        min_pf=float(trace["bus_pf"].min()),
        max_hto=float(trace[hto_columns].to_numpy().max()) if hto_columns else math.nan,
        samples=int(len(trace)),
        pf_violations=int((trace["bus_pf"] < pf_min - 1e-9).sum()),
        mpc_time_mean=mpc_mean,
        mpc_time_max=mpc_max,
        rt_time_mean=rt_mean,
        rt_time_max=rt_max,
        untracked_samples=int((error > TRACKING_DEADBAND_W).sum()),
    )


def hourly_pf(trace: pd.DataFrame) -> pd.Series:
    """Interval-average bus PF per hour."""
    return trace.groupby("hour")["bus_pf"].mean()


def comparison_table(results: Dict[str, Metrics]) -> pd.DataFrame:
    """Side-by-side metrics, one column per controller."""
    rows = {name: metrics.to_dict() for name, metrics in results.items()}
    return pd.DataFrame(rows)
