"""Single-stack characteristic surfaces and the calibration anchors."""
import logging
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from p2h.physics.plant import PlantConfig
from p2h.physics.rectifier import active_power, phase_form_consistency, reactive_power, sweep
from p2h.physics.stack import hto_step, hydrogen_rate, purge_gain

logger = logging.getLogger(__name__)

SURFACES = ("p", "q", "pf", "efficiency")
SURFACE_COLUMNS = {"p": "p_w", "q": "q_var", "pf": "pf", "efficiency": "efficiency"}
TWO_STACK_TEMPERATURES = (40.0, 60.0, 80.0)
CROSSING_HORIZON_H = 24.0


def characteristic_surfaces(config: PlantConfig, n_currents: int = 100, n_temperatures: int = 11) -> Dict[str, pd.DataFrame]:
    """P, Q, PF and efficiency over the (I, T) box, one long table per quantity."""
    params = config.stack
    table = sweep(
        params,
        config.rectifier,
        currents=np.linspace(params.i_min_sampled, params.i_max, n_currents),
        temperatures=np.linspace(params.t_min, params.t_max, n_temperatures),
        compensation=config.compensation_var,
    )
    return {
        name: table[["current_a", "temperature_c", column]].rename(columns={column: "value"})
        for name, column in SURFACE_COLUMNS.items()
    }


def two_stack_pf_map(config: PlantConfig, points: int = 60, temperatures=TWO_STACK_TEMPERATURES) -> pd.DataFrame:
    """Bus PF of two running stacks at a common temperature over (I_1, I_2)."""
    params = config.stack
    currents = np.linspace(params.i_min_sampled, params.i_max, points)
    frames = []
    for t in temperatures:
        p = np.asarray(active_power(currents, t, params, config.rectifier))
        q = np.asarray(reactive_power(currents, t, params, config.rectifier))
        power = p[:, None] + p[None, :]
        reactive = q[:, None] + q[None, :] - config.bus_compensation((1, 1))
        i1, i2 = np.meshgrid(currents, currents, indexing="ij")
        frames.append(pd.DataFrame({
            "temperature_c": t,
            "current_1": i1.ravel(),
            "current_2": i2.ravel(),
            "p_w": power.ravel(),
            "pf": (power / np.hypot(power, reactive)).ravel(),
        }))
    return pd.concat(frames, ignore_index=True)


def purge_threshold(config: PlantConfig) -> Optional[float]:
    """Lowest current whose steady-state HTO n_in/gain stays at the limit, or None."""
    separator = config.separator
    needed = separator.n_in / separator.hto_max

    def excess(current):
        return float(purge_gain(current, separator)) - needed

    if excess(config.stack.i_max) < 0:
        return None
    if excess(1.0) >= 0:
        return 1.0
    return float(brentq(excess, 1.0, config.stack.i_max, xtol=1e-6))


def hto_crossing_hours(current: float, config: PlantConfig, start: float = 0.0, dt: Optional[float] = None) -> Optional[float]:
    """Hours of constant-current operation until HTO first reaches the limit."""
    dt = config.dt if dt is None else dt
    hto = start
    elapsed = 0.0
    while elapsed < CROSSING_HORIZON_H:
        nxt = float(hto_step(hto, current, dt, config.separator))
        if nxt >= config.separator.hto_max:
            # linear interpolation inside the last step
            fraction = (config.separator.hto_max - hto) / max(nxt - hto, 1e-12)
            return elapsed + fraction * dt
        hto = nxt
        elapsed += dt
    return None


def calibration_report(config: PlantConfig) -> Dict[str, object]:
    params = config.stack
    surfaces = characteristic_surfaces(config)
    p = surfaces["p"]["value"]
    q = surfaces["q"]["value"]
    pf = surfaces["pf"]
    hot = pf[np.isclose(pf["temperature_c"], params.t_max)]
    worst = hot.loc[hot["value"].idxmin()]

    two_stack = two_stack_pf_map(config, points=40, temperatures=(params.t_max,))
    diagonal = two_stack[np.isclose(two_stack["current_1"], two_stack["current_2"])]
    threshold = purge_threshold(config)
    report = {
        "p_range_mw": [float(p.min()) / 1e6, float(p.max()) / 1e6],
        "q_range_mvar": [float(q.min()) / 1e6, float(q.max()) / 1e6],
        "q_uncompensated_range_mvar": [(float(q.min()) + config.compensation_var) / 1e6,
                                       (float(q.max()) + config.compensation_var) / 1e6],
        "pf_min_at_t_max": float(worst["value"]),
        "pf_min_current_a": float(worst["current_a"]),
        "two_stack_equal_split_pf_min": float(diagonal["pf"].min()),
        "purge_threshold_a": threshold,
        "hto_crossing_h": hto_crossing_hours(params.i_min_sampled, config),
        "h2_rate_at_i_max_kg_h": float(hydrogen_rate(params.i_max)),
        "phase_form": phase_form_consistency(params, config.rectifier),
    }
    logger.info(
        "Calibration: P %.2f-%.2f MW, Q %.2f-%.2f MVar, PF min %.4f at %.0f A (T=%.0f °C)",
        *report["p_range_mw"], *report["q_range_mvar"], report["pf_min_at_t_max"], report["pf_min_current_a"],
        params.t_max,
    )
    return report
