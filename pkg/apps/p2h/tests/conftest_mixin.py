"""
Shared factories for the p2h test suite.

Plants are built from the shipped plant.yaml with dotted overrides, so the
tests exercise the same configuration path as the management commands.
Surrogate bundles are expensive enough to cache per (n_stacks, grid) shape.
"""
from functools import lru_cache
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from p2h.config import PlantFile, load_plant_config
from p2h.fitting.artifact import Surrogates, build_surrogates
from p2h.harness.export import trace_columns
from p2h.milp.solvers import get_solver
from p2h.physics.plant import PlantConfig


def make_plant_file(n_stacks: int = 2, overrides: Optional[Dict[str, object]] = None) -> PlantFile:
    return load_plant_config(None, {"plant.n_stacks": n_stacks, **(overrides or {})})


def make_config(n_stacks: int = 2, overrides: Optional[Dict[str, object]] = None) -> PlantConfig:
    return make_plant_file(n_stacks, overrides).plant_config()


@lru_cache(maxsize=None)
def make_surrogates(n_stacks: int = 2, n_i: int = 4, n_t: int = 2) -> Surrogates:
    """Coarse-grid surrogates; PF polynomial on a reduced sample budget."""
    config = make_config(n_stacks)
    return build_surrogates(
        config,
        n_i=n_i,
        n_t=n_t,
        pf_order=3,
        training_samples=400,
        validation_samples=400,
        seed=7,
        error_orders=(3,),
    )


def native_solver():
    return get_solver("native")


def highs_solver():
    return get_solver("highs")


# ---------------------------------------------------------------------------
# Synthetic closed-loop traces
# ---------------------------------------------------------------------------

def make_trace(deltas: Sequence[Sequence[int]], baselines: Sequence[Sequence[float]], hto: float = 0.5,
               pf: float = 0.95, intervals_per_hour: int = 4, instruction: float = 1.0e6,
               achieved: Optional[float] = None, h2_rate: float = 10.0) -> pd.DataFrame:
    """
    One row per sub-interval from hourly (delta, baseline) rows shaped
    [hour][stack]; every sub-interval of an hour repeats the hourly values.
    """
    deltas = np.asarray(deltas, dtype=int)
    baselines = np.asarray(baselines, dtype=float)
    hours, n_stacks = deltas.shape
    rows = []
    for hour in range(hours):
        for interval in range(1, intervals_per_hour + 1):
            row = {
                "hour": hour,
                "interval": interval,
                "t": hour * intervals_per_hour + interval,
                "instruction_w": instruction,
                "achieved_w": instruction if achieved is None else achieved,
                "bus_q_var": 0.0,
                "bus_pf": pf,
                "h2_kg_h": h2_rate,
            }
            for b in range(n_stacks):
                on = int(deltas[hour, b])
                row[f"delta_{b}"] = on
                row[f"current_{b}"] = baselines[hour, b] if on else 0.0
                row[f"baseline_{b}"] = baselines[hour, b] if on else 0.0
                row[f"temperature_{b}"] = 70.0
                row[f"hto_{b}"] = hto
                row[f"p_{b}"] = 0.0
                row[f"q_{b}"] = 0.0
            rows.append(row)
    return pd.DataFrame(rows, columns=trace_columns(n_stacks))
