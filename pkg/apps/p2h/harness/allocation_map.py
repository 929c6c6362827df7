"""Brute-force optimal current split for two running stacks at fixed temperatures."""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from p2h.physics.plant import PlantConfig
from p2h.physics.rectifier import active_power, reactive_power
from p2h.physics.stack import hydrogen_rate

logger = logging.getLogger(__name__)

POWER_BAND = 0.0025


@dataclass(frozen=True)
class AllocationResult:
    p_total: float
    temperatures: Tuple[float, float]
    feasible: bool
    currents: Optional[Tuple[float, float]]
    production: Optional[float]
    pf: Optional[float]
    grid: pd.DataFrame

    @property
    def spread(self) -> Optional[float]:
        if self.currents is None:
            return None
        return abs(self.currents[0] - self.currents[1])


def allocation_map_two_stack(p_total: float, temperatures: Tuple[float, float], config: PlantConfig,
                             points: int = 200, band: float = POWER_BAND,
                             pf_min: Optional[float] = None) -> AllocationResult:
    """
    Search a points×points current grid over [i_min_sampled, I_max]² for the
    most hydrogen at |P − p_total| ≤ band·p_total and bus PF ≥ pf_min.

    An empty feasible set comes back as ``feasible=False`` with the full map.
    """
    params = config.stack
    pf_min = config.pf_min if pf_min is None else pf_min
    currents = np.linspace(params.i_min_sampled, params.i_max, points)
    t1, t2 = temperatures
    p1 = np.asarray(active_power(currents, t1, params, config.rectifier))
    p2 = np.asarray(active_power(currents, t2, params, config.rectifier))
    q1 = np.asarray(reactive_power(currents, t1, params, config.rectifier))
    q2 = np.asarray(reactive_power(currents, t2, params, config.rectifier))
    m = np.asarray(hydrogen_rate(currents))

    power = p1[:, None] + p2[None, :]
    reactive = q1[:, None] + q2[None, :] - config.bus_compensation((1, 1))
    pf = power / np.hypot(power, reactive)
    production = m[:, None] + m[None, :]
    in_band = np.abs(power - p_total) <= band * p_total
    feasible = in_band & (pf >= pf_min)

    i1, i2 = np.meshgrid(currents, currents, indexing="ij")
    grid = pd.DataFrame({
        "current_1": i1.ravel(),
        "current_2": i2.ravel(),
        "p_w": power.ravel(),
        "pf": pf.ravel(),
        "h2_kg_h": production.ravel(),
        "in_band": in_band.ravel(),
        "feasible": feasible.ravel(),
    })

    if not feasible.any():
        logger.info("No feasible split at %.3f MW, T = (%.1f, %.1f) °C", p_total / 1e6, t1, t2)
        return AllocationResult(p_total, (t1, t2), False, None, None, None, grid)

    masked = np.where(feasible, production, -np.inf)
    a, b = np.unravel_index(int(np.argmax(masked)), masked.shape)
    return AllocationResult(
        p_total=p_total,
        temperatures=(t1, t2),
        feasible=True,
        currents=(float(currents[a]), float(currents[b])),
        production=float(production[a, b]),
        pf=float(pf[a, b]),
        grid=grid,
    )
