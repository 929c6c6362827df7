"""
Separable polynomial surrogate of the bus power factor.

PF(I_1..I_N, T_1..T_N) ≈ d + Σ_b Σ_j c_j · f_j(I_b / I_max, T_b / T_max)

Cross-stack terms are not kept, and every stack shares the same
coefficients. The feature families are nested in the order, so a higher
order never fits the training set worse.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy.stats import qmc

from p2h.exceptions import FitError
from p2h.physics.plant import PlantConfig
from p2h.physics.rectifier import active_power, reactive_power

logger = logging.getLogger(__name__)

FEATURES = {
    1: ("x", "y"),
    2: ("x", "y", "x2", "xy"),
    3: ("x", "y", "x2", "xy", "x3"),
    4: ("x", "y", "x2", "xy", "x3", "x4", "x2y"),
}

_FEATURE_FUNCS = {
    "x": lambda x, y: x,
    "y": lambda x, y: y,
    "x2": lambda x, y: x ** 2,
    "xy": lambda x, y: x * y,
    "x3": lambda x, y: x ** 3,
    "x4": lambda x, y: x ** 4,
    "x2y": lambda x, y: x ** 2 * y,
}


@dataclass(frozen=True)
class PFSurrogate:
    order: int
    n_stacks: int
    intercept: float
    coefficients: Tuple[float, ...]
    current_scale: float
    temperature_scale: float
    max_error: float
    train_rmse: float

    @property
    def feature_names(self) -> Tuple[str, ...]:
        return FEATURES[self.order]

    def stack_term(self, current, temperature):
        """Contribution of one stack, without the intercept."""
        x = np.asarray(current, dtype=float) / self.current_scale
        y = np.asarray(temperature, dtype=float) / self.temperature_scale
        total = np.zeros(np.broadcast(x, y).shape)
        for name, coef in zip(self.feature_names, self.coefficients):
            total = total + coef * _FEATURE_FUNCS[name](x, y)
        return total

    def evaluate(self, currents, temperatures):
        """currents/temperatures shaped (..., n_stacks)."""
        terms = self.stack_term(currents, temperatures)
        return self.intercept + np.sum(terms, axis=-1)


def _design(currents: np.ndarray, temperatures: np.ndarray, order: int, i_scale: float, t_scale: float) -> np.ndarray:
    x = currents / i_scale
    y = temperatures / t_scale
    columns = [np.ones(currents.shape[0])]
    for name in FEATURES[order]:
        columns.append(np.sum(_FEATURE_FUNCS[name](x, y), axis=1))
    return np.column_stack(columns)


def sample_operating_points(config: PlantConfig, n_samples: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Latin-hypercube samples of all-on cluster operating points, shaped (n, N_B)."""
    params = config.stack
    sampler = qmc.LatinHypercube(d=2 * config.n_stacks, seed=seed)
    unit = sampler.random(n_samples)
    currents = qmc.scale(unit[:, :config.n_stacks], params.i_min_sampled, params.i_max)
    temperatures = qmc.scale(unit[:, config.n_stacks:], params.t_min, params.t_max)
    return currents, temperatures


def true_cluster_pf(config: PlantConfig, currents: np.ndarray, temperatures: np.ndarray) -> np.ndarray:
    p = np.asarray(active_power(currents, temperatures, config.stack, config.rectifier))
    q = np.asarray(reactive_power(currents, temperatures, config.stack, config.rectifier))
    total_p = p.sum(axis=-1)
    total_q = q.sum(axis=-1) - config.compensation_var * currents.shape[-1]
    return total_p / np.hypot(total_p, total_q)


def fit_pf_polynomial(config: PlantConfig, order: int = 3, training_samples: int = 4000,
                      validation_samples: int = 10000, seed: int = 7) -> PFSurrogate:
    if order not in FEATURES:
        raise FitError(f"polynomial order must be one of {sorted(FEATURES)}, got {order}")
    i_scale = config.stack.i_max
    t_scale = config.stack.t_max

    currents, temperatures = sample_operating_points(config, training_samples, seed)
    design = _design(currents, temperatures, order, i_scale, t_scale)
    if design.shape[0] < design.shape[1] or np.linalg.matrix_rank(design) < design.shape[1]:
        raise FitError(
            f"PF design matrix is rank deficient ({design.shape[0]} samples, {design.shape[1]} terms)"
        )
    target = true_cluster_pf(config, currents, temperatures)
    solution, *_ = np.linalg.lstsq(design, target, rcond=None)
    train_rmse = float(np.sqrt(np.mean((design @ solution - target) ** 2)))

    surrogate = PFSurrogate(
        order=order,
        n_stacks=config.n_stacks,
        intercept=float(solution[0]),
        coefficients=tuple(float(v) for v in solution[1:]),
        current_scale=i_scale,
        temperature_scale=t_scale,
        max_error=0.0,
        train_rmse=train_rmse,
    )

    v_currents, v_temperatures = sample_operating_points(config, validation_samples, seed + 1)
    error = np.abs(surrogate.evaluate(v_currents, v_temperatures) - true_cluster_pf(config, v_currents, v_temperatures))
    max_error = float(error.max())
    logger.info("PF polynomial order %d (N_B=%d): max validation error %.4f, train RMSE %.5f",
                order, config.n_stacks, max_error, train_rmse)
    return replace(surrogate, max_error=max_error)


def fit_error_table(config: PlantConfig, orders=(1, 2, 3, 4), training_samples: int = 4000,
                    validation_samples: int = 10000, seed: int = 7) -> pd.DataFrame:
    """Validation error for each polynomial order."""
    rows: List[dict] = []
    for order in orders:
        surrogate = fit_pf_polynomial(config, order, training_samples, validation_samples, seed)
        rows.append({
            "order": order,
            "n_terms": len(surrogate.coefficients) + 1,
            "max_error": surrogate.max_error,
            "train_rmse": surrogate.train_rmse,
        })
    return pd.DataFrame(rows)
