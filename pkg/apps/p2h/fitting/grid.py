from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from p2h.exceptions import FitError
from p2h.physics.stack import StackParams


@dataclass(frozen=True)
class PiecewiseGrid:
    """Segment breakpoints in current (k = 0..N_I-1) and temperature (l = 0..N_T-1)."""
    current_breaks: Tuple[float, ...]
    temperature_breaks: Tuple[float, ...]

    def __post_init__(self):
        for name, breaks in (("current", self.current_breaks), ("temperature", self.temperature_breaks)):
            if len(breaks) < 3:
                raise FitError(f"{name} grid needs at least two segments")
            if np.any(np.diff(breaks) <= 0):
                raise FitError(f"{name} breakpoints must be strictly increasing")

    @property
    def n_i(self) -> int:
        return len(self.current_breaks) - 1

    @property
    def n_t(self) -> int:
        return len(self.temperature_breaks) - 1

    @property
    def current_points(self) -> np.ndarray:
        b = np.asarray(self.current_breaks)
        return (b[:-1] + b[1:]) / 2.0

    @property
    def temperature_points(self) -> np.ndarray:
        b = np.asarray(self.temperature_breaks)
        return (b[:-1] + b[1:]) / 2.0

    def current_segment(self, current) -> np.ndarray:
        return _segment(self.current_breaks, current)

    def temperature_segment(self, temperature) -> np.ndarray:
        return _segment(self.temperature_breaks, temperature)

    def current_bounds(self, k: int) -> Tuple[float, float]:
        return self.current_breaks[k], self.current_breaks[k + 1]

    def temperature_bounds(self, l: int) -> Tuple[float, float]:
        return self.temperature_breaks[l], self.temperature_breaks[l + 1]


def _segment(breaks, value):
    index = np.searchsorted(np.asarray(breaks), np.asarray(value, dtype=float), side="right") - 1
    index = np.clip(index, 0, len(breaks) - 2)
    if np.ndim(index) == 0:
        return int(index)
    return index


def build_grid(params: StackParams, n_i: int = 10, n_t: int = 5,
               current_range: Optional[Tuple[float, float]] = None,
               temperature_range: Optional[Tuple[float, float]] = None) -> PiecewiseGrid:
    """Uniform breakpoints over [0, I_max] x [T_min, T_max]."""
    if n_i < 2 or n_t < 2:
        raise FitError(f"grid needs n_i >= 2 and n_t >= 2, got {n_i}, {n_t}")
    i_lo, i_hi = current_range or (0.0, params.i_max)
    t_lo, t_hi = temperature_range or (params.t_min, params.t_max)
    if i_hi <= i_lo or t_hi <= t_lo:
        raise FitError(f"degenerate grid range I=[{i_lo}, {i_hi}] T=[{t_lo}, {t_hi}]")
    return PiecewiseGrid(
        current_breaks=tuple(float(x) for x in np.linspace(i_lo, i_hi, n_i + 1)),
        temperature_breaks=tuple(float(x) for x in np.linspace(t_lo, t_hi, n_t + 1)),
    )
