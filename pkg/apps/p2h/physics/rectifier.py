"""
24-pulse thyristor rectifier interface between the AC bus and one stack.

Angle chain U -> α -> γ -> φ, AC-side currents, active/reactive power and
power factor. Angles are radians.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from p2h.exceptions import DomainError
from p2h.physics.stack import (
    DEFAULT_STACK,
    ArrayLike,
    StackParams,
    cell_voltage,
    current_efficiency,
    hydrogen_rate,
    hydrogen_rate_slope,
    voltage_current_slope,
    LHV_WH_PER_KG,
)

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
# Ideal 24-pulse voltage ratio U = (2.44 / K) · U1 · cos α
PULSE_RATIO = 2.44
LINEAR_PHASE_SLOPE = 0.6339
LINEAR_PHASE_INTERCEPT = 0.2756
LINEAR_PHASE_TOLERANCE = 0.05
# Per-rectifier switched capacitor bank, VAr
DEFAULT_COMPENSATION_VAR = 80000.0


@dataclass(frozen=True)
class RectifierParams:
    turn_ratio: float = 104.0
    u1: float = 10465.0
    nu: float = 0.9971
    loss_a: float = 5.4e-4
    loss_b: float = 1.353
    loss_c: float = 91940.0
    gamma_slope: float = -0.6738
    gamma_intercept: float = 0.5065
    firing_coefficient: float = 4.07e-3
    qc: float = 0.0

    def __post_init__(self):
        if self.turn_ratio <= 0:
            raise ValueError("turn_ratio must be positive")
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        if self.loss_c < 0:
            raise ValueError("loss_c cannot be negative")
        if self.u1 <= 0:
            raise ValueError("u1 must be positive")

    @property
    def distortion_ratio(self) -> float:
        return math.sqrt(1.0 - self.nu ** 2) / self.nu

    @property
    def ideal_firing_coefficient(self) -> float:
        """K / (2.44·U1), the coefficient the rounded 4.07e-3 stands for."""
        return self.turn_ratio / (PULSE_RATIO * self.u1)


DEFAULT_RECTIFIER = RectifierParams()


def _scalar(value):
    if np.ndim(value) == 0:
        return float(value)
    return value


def firing_angle(voltage: ArrayLike, rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    argument = rectifier.firing_coefficient * np.asarray(voltage, dtype=float)
    if np.any(argument < -1.0) or np.any(argument > 1.0):
        raise DomainError(f"firing angle undefined: arccos argument {argument!r} outside [-1, 1]")
    return _scalar(np.arccos(argument))


def overlap_angle(alpha: ArrayLike, rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    return _scalar(rectifier.gamma_slope * np.asarray(alpha, dtype=float) + rectifier.gamma_intercept)


def pf_angle(alpha: ArrayLike, rectifier: RectifierParams = DEFAULT_RECTIFIER, gamma: Optional[ArrayLike] = None):
    """Returns (cos φ, φ) after the commutation-overlap correction."""
    a = np.asarray(alpha, dtype=float)
    g = np.asarray(overlap_angle(a, rectifier) if gamma is None else gamma, dtype=float)
    cos_phi = (np.cos(a) + np.cos(a + g)) / 2.0
    return _scalar(cos_phi), _scalar(np.arccos(np.clip(cos_phi, -1.0, 1.0)))


def _angle_chain(current, temperature, params, rectifier):
    voltage = np.asarray(cell_voltage(current, temperature, params))
    cos_phi, phi = pf_angle(firing_angle(voltage, rectifier), rectifier)
    return voltage, np.asarray(cos_phi), np.asarray(phi)


def converter_loss(current: ArrayLike, rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    i = np.asarray(current, dtype=float)
    return _scalar(rectifier.loss_a * i ** 2 + rectifier.loss_b * i + rectifier.loss_c)


def active_power(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK,
                 rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    """AC active power: stack DC power plus converter losses."""
    i = np.asarray(current, dtype=float)
    voltage = np.asarray(cell_voltage(i, temperature, params))
    return _scalar(voltage * i + np.asarray(converter_loss(i, rectifier)))


def power_derivative(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK,
                     rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    """Analytic ∂P/∂I = U + I·∂U/∂I + 2aI + b."""
    i = np.asarray(current, dtype=float)
    voltage = np.asarray(cell_voltage(i, temperature, params))
    slope = np.asarray(voltage_current_slope(i, temperature, params))
    return _scalar(voltage + i * slope + 2.0 * rectifier.loss_a * i + rectifier.loss_b)


def fundamental_current(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK,
                        rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    _, cos_phi, _ = _angle_chain(current, temperature, params, rectifier)
    if np.any(cos_phi <= 0.0):
        raise DomainError("degenerate power factor angle: cos φ <= 0")
    power = np.asarray(active_power(current, temperature, params, rectifier))
    return _scalar(power / (SQRT3 * rectifier.u1 * cos_phi))


def distortion_current(fundamental: ArrayLike, rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    return _scalar(rectifier.distortion_ratio * np.asarray(fundamental, dtype=float))


def reactive_power(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK,
                   rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    """Q = √(Qs² + Qd²) − Qc of one rectifier."""
    _, cos_phi, phi = _angle_chain(current, temperature, params, rectifier)
    if np.any(cos_phi <= 0.0):
        raise DomainError("degenerate power factor angle: cos φ <= 0")
    power = np.asarray(active_power(current, temperature, params, rectifier))
    i1 = power / (SQRT3 * rectifier.u1 * cos_phi)
    q_shift = SQRT3 * rectifier.u1 * i1 * np.sin(phi)
    q_distortion = SQRT3 * rectifier.u1 * np.asarray(distortion_current(i1, rectifier))
    return _scalar(np.hypot(q_shift, q_distortion) - rectifier.qc)


def power_factor_single(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK,
                        rectifier: RectifierParams = DEFAULT_RECTIFIER, compensation: float = DEFAULT_COMPENSATION_VAR) -> ArrayLike:
    """PF of one stack; ``compensation`` is an extra bus-side bank in VAr."""
    power = np.asarray(active_power(current, temperature, params, rectifier))
    reactive = np.asarray(reactive_power(current, temperature, params, rectifier)) - compensation
    return _scalar(power / np.hypot(power, reactive))


def cluster_pf(per_stack_p: Sequence[float], per_stack_q: Sequence[float], qc: float = 0.0) -> float:
    if len(per_stack_p) == 0:
        raise ValueError("cluster_pf needs at least one stack")
    if len(per_stack_p) != len(per_stack_q):
        raise ValueError("per-stack P and Q lists differ in length")
    total_p = float(np.sum(per_stack_p))
    total_q = float(np.sum(per_stack_q)) - qc
    apparent = math.hypot(total_p, total_q)
    if apparent == 0.0:
        return 1.0
    return total_p / apparent


def production_rank(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK,
                    rectifier: RectifierParams = DEFAULT_RECTIFIER) -> ArrayLike:
    """Marginal hydrogen per marginal watt, (dm/dI)/(dP/dI), in kg/Wh."""
    return _scalar(np.asarray(hydrogen_rate_slope(current)) / np.asarray(power_derivative(current, temperature, params, rectifier)))


def current_for_power(power: float, temperature: float, params: StackParams = DEFAULT_STACK,
                      rectifier: RectifierParams = DEFAULT_RECTIFIER, tol: float = 1e-9) -> float:
    """Inverse of active_power in I at fixed T, clamped to [0, I_max]."""
    if power <= active_power(0.0, temperature, params, rectifier):
        return 0.0
    if power >= active_power(params.i_max, temperature, params, rectifier):
        return params.i_max
    lo, hi = 0.0, params.i_max
    current = power / max(cell_voltage(params.i_max / 2, temperature, params), 1.0)
    current = min(max(current, lo), hi)
    for _ in range(100):
        residual = active_power(current, temperature, params, rectifier) - power
        if abs(residual) <= tol * max(power, 1.0):
            break
        if residual > 0:
            hi = current
        else:
            lo = current
        step = current - residual / power_derivative(current, temperature, params, rectifier)
        current = step if lo < step < hi else (lo + hi) / 2.0
    return float(current)


def phase_form_consistency(params: StackParams = DEFAULT_STACK, rectifier: RectifierParams = DEFAULT_RECTIFIER,
                     samples: int = 200) -> dict:
    """Compare the linear phase form φ ≈ 0.6339·α + 0.2756 with the cos φ chain over the operating voltage range."""
    currents = np.linspace(0.0, params.i_max, samples)
    voltages = np.concatenate([
        np.asarray(cell_voltage(currents, params.t_min, params)),
        np.asarray(cell_voltage(currents, params.t_max, params)),
    ])
    alpha = np.asarray(firing_angle(voltages, rectifier))
    _, phi_chain = pf_angle(alpha, rectifier)
    phi_linear = LINEAR_PHASE_SLOPE * alpha + LINEAR_PHASE_INTERCEPT
    deviation = np.abs(phi_linear - np.asarray(phi_chain)) / np.maximum(np.abs(phi_chain), 1e-12)
    qs_constant = PULSE_RATIO * rectifier.u1 / rectifier.turn_ratio
    report = {
        "max_phase_deviation": float(deviation.max()),
        "phase_slope_from_gamma": 1.0 + rectifier.gamma_slope,
        "linear_phase_slope": LINEAR_PHASE_SLOPE,
        "qs_constant": qs_constant,
        "firing_coefficient_from_turns": rectifier.ideal_firing_coefficient,
        "consistent": bool(deviation.max() <= LINEAR_PHASE_TOLERANCE),
    }
    if not report["consistent"]:
        logger.warning(
            "Linear phase form deviates from the cos φ chain by up to %.1f%%; using the chain",
            100 * report["max_phase_deviation"],
        )
    return report


def sweep(params: StackParams = DEFAULT_STACK, rectifier: RectifierParams = DEFAULT_RECTIFIER,
          currents: Optional[Sequence[float]] = None, temperatures: Optional[Sequence[float]] = None,
          compensation: float = DEFAULT_COMPENSATION_VAR) -> pd.DataFrame:
    """Characterization table over an (I, T) grid, one row per point."""
    if currents is None:
        currents = np.linspace(params.i_min_sampled, params.i_max, 100)
    if temperatures is None:
        temperatures = np.linspace(params.t_min, params.t_max, 11)
    grid_i, grid_t = np.meshgrid(np.asarray(currents, dtype=float), np.asarray(temperatures, dtype=float), indexing="ij")
    i = grid_i.ravel()
    t = grid_t.ravel()
    voltage = np.asarray(cell_voltage(i, t, params))
    alpha = np.asarray(firing_angle(voltage, rectifier))
    cos_phi, _ = pf_angle(alpha, rectifier)
    power = np.asarray(active_power(i, t, params, rectifier))
    reactive = np.asarray(reactive_power(i, t, params, rectifier)) - compensation
    hydrogen = np.asarray(hydrogen_rate(i))
    frame = pd.DataFrame({
        "current_a": i,
        "temperature_c": t,
        "voltage_v": voltage,
        "alpha_rad": alpha,
        "gamma_rad": np.asarray(overlap_angle(alpha, rectifier)),
        "cos_phi": np.asarray(cos_phi),
        "p_w": power,
        "q_var": reactive,
        "pf": power / np.hypot(power, reactive),
        "current_efficiency": np.asarray(current_efficiency(i)),
        "h2_kg_h": hydrogen,
        "efficiency": hydrogen * LHV_WH_PER_KG / power,
    })
    return frame
