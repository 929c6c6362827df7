"""
Piecewise-linear controller tables.

Production is affine per current segment, m ≈ A_k·I + B_k. Power, reactive
power and heat release are affine per (T-segment l, I-segment k) cell,
y ≈ C_lk·I + D_lk·T + E_lk, the form the MILP linearizes with segment binaries.
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from p2h.fitting.grid import PiecewiseGrid
from p2h.physics.rectifier import RectifierParams, active_power, reactive_power
from p2h.physics.stack import StackParams, cell_voltage, hydrogen_rate

logger = logging.getLogger(__name__)

DENSE_POINTS_PER_SEGMENT = 9


@dataclass(frozen=True)
class ProductionTable:
    slopes: np.ndarray
    intercepts: np.ndarray
    max_error: float = 0.0

    def evaluate(self, grid: PiecewiseGrid, current):
        k = grid.current_segment(current)
        return self.slopes[k] * np.asarray(current, dtype=float) + self.intercepts[k]


@dataclass(frozen=True)
class CellTable:
    """Per-cell affine model; arrays are indexed [l, k]."""
    name: str
    current_coef: np.ndarray
    temperature_coef: np.ndarray
    constant: np.ndarray
    max_error: float = 0.0

    def evaluate(self, grid: PiecewiseGrid, current, temperature):
        k = grid.current_segment(current)
        l = grid.temperature_segment(temperature)
        return (self.current_coef[l, k] * np.asarray(current, dtype=float)
                + self.temperature_coef[l, k] * np.asarray(temperature, dtype=float)
                + self.constant[l, k])


def fit_production(grid: PiecewiseGrid) -> ProductionTable:
    breaks = np.asarray(grid.current_breaks)
    values = np.asarray(hydrogen_rate(breaks))
    slopes = np.diff(values) / np.diff(breaks)
    intercepts = values[:-1] - slopes * breaks[:-1]

    table = ProductionTable(slopes=slopes, intercepts=intercepts)
    dense = np.linspace(breaks[0], breaks[-1], grid.n_i * DENSE_POINTS_PER_SEGMENT * 4 + 1)
    error = np.abs(table.evaluate(grid, dense) - np.asarray(hydrogen_rate(dense)))
    table = ProductionTable(slopes=slopes, intercepts=intercepts, max_error=float(error.max()))
    logger.debug("Production table: %d segments, max error %.4f kg/h", grid.n_i, table.max_error)
    return table


def fit_cell_table(name: str, func: Callable, grid: PiecewiseGrid, samples_per_edge: int = 2) -> CellTable:
    shape = (grid.n_t, grid.n_i)
    c = np.zeros(shape)
    d = np.zeros(shape)
    e = np.zeros(shape)
    worst = 0.0
    for l in range(grid.n_t):
        t_lo, t_hi = grid.temperature_bounds(l)
        for k in range(grid.n_i):
            i_lo, i_hi = grid.current_bounds(k)
            ii, tt = np.meshgrid(np.linspace(i_lo, i_hi, samples_per_edge),
                                 np.linspace(t_lo, t_hi, samples_per_edge), indexing="ij")
            design = np.column_stack([ii.ravel(), tt.ravel(), np.ones(ii.size)])
            target = np.asarray(func(ii.ravel(), tt.ravel()))
            coef, *_ = np.linalg.lstsq(design, target, rcond=None)
            c[l, k], d[l, k], e[l, k] = coef

            di, dt = np.meshgrid(np.linspace(i_lo, i_hi, DENSE_POINTS_PER_SEGMENT),
                                 np.linspace(t_lo, t_hi, DENSE_POINTS_PER_SEGMENT), indexing="ij")
            approx = coef[0] * di + coef[1] * dt + coef[2]
            worst = max(worst, float(np.max(np.abs(approx - np.asarray(func(di, dt))))))
    logger.debug("%s table: %dx%d cells, max error %.1f", name, grid.n_t, grid.n_i, worst)
    return CellTable(name=name, current_coef=c, temperature_coef=d, constant=e, max_error=worst)


def fit_power(grid: PiecewiseGrid, params: StackParams, rectifier: RectifierParams,
              samples_per_edge: int = 2) -> CellTable:
    return fit_cell_table("power", lambda i, t: active_power(i, t, params, rectifier), grid, samples_per_edge)


def fit_reactive(grid: PiecewiseGrid, params: StackParams, rectifier: RectifierParams,
                 samples_per_edge: int = 2) -> CellTable:
    return fit_cell_table("reactive", lambda i, t: reactive_power(i, t, params, rectifier), grid, samples_per_edge)


def fit_heat(grid: PiecewiseGrid, params: StackParams, samples_per_edge: int = 2) -> CellTable:
    def heat(i, t):
        return (np.asarray(cell_voltage(i, t, params)) - params.u_tn) * i

    return fit_cell_table("heat", heat, grid, samples_per_edge)
