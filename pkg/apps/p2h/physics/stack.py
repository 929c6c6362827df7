"""
Electro-thermal-gas model of one alkaline electrolyzer stack.

All functions are pure and accept either scalars or numpy arrays; scalar
inputs return plain floats. Units: current A, temperature °C, voltage V,
power W, time h, HTO in percent.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from p2h.exceptions import DomainError

ArrayLike = Union[float, np.ndarray]

LHV_WH_PER_KG = 33330.0
FARADAY = 96485.0
_LN10 = math.log(10.0)
_CURRENT_TOL = 1e-9


@dataclass(frozen=True)
class VoltageCoefficients:
    """Ulleberg-form coefficients, stack level (n_cells series cells)."""
    n_cells: float = 172.0
    r1: float = 0.0054       # ohm
    r2: float = 0.0          # ohm/°C
    s: float = 6.0           # V
    t1: float = 0.002        # 1/A
    t2: float = 0.03         # °C/A
    t3: float = 0.0          # °C²/A


@dataclass(frozen=True)
class StackParams:
    rated_power: float = 1.0e6
    i_max: float = 5000.0
    t_min: float = 30.0
    t_max: float = 80.0
    t_amb: float = 25.0
    u_tn: float = 148.0
    r_h: float = 0.004
    c_h: float = 7000.0
    voltage: VoltageCoefficients = field(default_factory=VoltageCoefficients)
    p_cool_max: Optional[float] = None
    startup_band: float = 60.0
    i_min_fraction: float = 0.13

    def __post_init__(self):
        if self.i_max <= 0:
            raise ValueError("i_max must be positive")
        if self.t_min >= self.t_max:
            raise ValueError("t_min must be below t_max")
        if min(self.r_h, self.c_h, self.u_tn) <= 0:
            raise ValueError("thermal constants must be strictly positive")
        if self.p_cool_max is not None and self.p_cool_max <= 0:
            raise ValueError("p_cool_max must be positive when given")

    @property
    def i_min_sampled(self) -> float:
        """Lower end of the characterization current range."""
        return self.i_min_fraction * self.i_max


@dataclass(frozen=True)
class SeparatorParams:
    p_sep: float = 3.0e6
    t_sep: float = 343.0
    v_sep: float = 1.0
    n_in: float = 0.75
    hto_max: float = 2.0
    r_gas: float = 8.314
    faraday: float = FARADAY
    flow_scale: float = 47.0
    off_purge_rate: float = 1.5

    def __post_init__(self):
        if min(self.p_sep, self.t_sep, self.v_sep, self.n_in, self.r_gas, self.faraday, self.flow_scale) <= 0:
            raise ValueError("separator constants must be positive")
        if not 0 < self.hto_max < 100:
            raise ValueError("hto_max must lie in (0, 100)")
        if self.off_purge_rate < 0:
            raise ValueError("off_purge_rate cannot be negative")


class StackStatus(str, enum.Enum):
    OFF = "Off"
    STANDBY = "Standby"
    STARTUP = "Startup"
    NORMAL = "Normal"


@dataclass(frozen=True)
class StackState:
    current: float = 0.0
    temperature: float = 25.0
    delta: int = 0
    hto: float = 0.0
    status: StackStatus = StackStatus.OFF


DEFAULT_STACK = StackParams()
DEFAULT_SEPARATOR = SeparatorParams()


def _scalar(value):
    if np.ndim(value) == 0:
        return float(value)
    return value


def _check_temperature(temperature: np.ndarray) -> None:
    if np.any(temperature < 0.0) or np.any(temperature > 100.0) or np.any(np.isnan(temperature)):
        raise DomainError(f"temperature outside [0, 100] °C: {temperature!r}")


def _check_current(current: np.ndarray, params: StackParams) -> None:
    if np.any(current < -_CURRENT_TOL) or np.any(current > params.i_max * (1 + _CURRENT_TOL)) or np.any(np.isnan(current)):
        raise DomainError(f"current outside [0, {params.i_max}] A: {current!r}")


def reversible_voltage(temperature: ArrayLike, coeffs: VoltageCoefficients = DEFAULT_STACK.voltage) -> ArrayLike:
    t = np.asarray(temperature, dtype=float)
    _check_temperature(t)
    tk = t + 273.15
    per_cell = 1.5184 - 1.5421e-3 * tk + 9.523e-5 * tk * np.log(tk) + 9.84e-8 * tk ** 2
    return _scalar(coeffs.n_cells * per_cell)


def _activation_gain(temperature: np.ndarray, coeffs: VoltageCoefficients) -> np.ndarray:
    # T in °C; at T = 0 the temperature terms drop out
    safe_t = np.where(temperature == 0.0, np.inf, temperature)
    return coeffs.t1 + coeffs.t2 / safe_t + coeffs.t3 / safe_t ** 2


def cell_voltage(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK) -> ArrayLike:
    """Stack terminal voltage U(I, T): reversible part plus ohmic and activation overpotentials."""
    i = np.asarray(current, dtype=float)
    t = np.asarray(temperature, dtype=float)
    _check_current(i, params)
    _check_temperature(t)
    i = np.clip(i, 0.0, params.i_max)
    c = params.voltage
    ohmic = (c.r1 + c.r2 * t) * i
    activation = c.s * np.log10(_activation_gain(t, c) * i + 1.0)
    return _scalar(reversible_voltage(t, c) + ohmic + activation)


def voltage_current_slope(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK) -> ArrayLike:
    """Analytic ∂U/∂I."""
    i = np.asarray(current, dtype=float)
    t = np.asarray(temperature, dtype=float)
    c = params.voltage
    gain = _activation_gain(t, c)
    return _scalar(c.r1 + c.r2 * t + c.s * gain / ((gain * i + 1.0) * _LN10))


def current_efficiency(current: ArrayLike) -> ArrayLike:
    i = np.asarray(current, dtype=float)
    return _scalar(0.96 * i ** 2 / (250000.0 + i ** 2))


def hydrogen_rate(current: ArrayLike, faraday: float = FARADAY) -> ArrayLike:
    """Hydrogen production in kg/h."""
    i = np.asarray(current, dtype=float)
    return _scalar(360.0 * current_efficiency(i) * i / faraday)


def hydrogen_rate_slope(current: ArrayLike, faraday: float = FARADAY) -> ArrayLike:
    """d(hydrogen_rate)/dI in kg/(h·A)."""
    i = np.asarray(current, dtype=float)
    return _scalar(360.0 * 0.96 / faraday * (i ** 4 + 750000.0 * i ** 2) / (250000.0 + i ** 2) ** 2)


def production_efficiency(current: ArrayLike, temperature: ArrayLike, params: StackParams = DEFAULT_STACK,
                          rectifier=None) -> ArrayLike:
    """Hydrogen LHV output over AC input power."""
    from p2h.physics.rectifier import DEFAULT_RECTIFIER, active_power

    power = np.asarray(active_power(current, temperature, params, rectifier or DEFAULT_RECTIFIER))
    if np.any(power <= 0):
        raise ZeroDivisionError("active power must be positive to form an efficiency")
    return _scalar(np.asarray(hydrogen_rate(current)) * LHV_WH_PER_KG / power)


def purge_gain(current: ArrayLike, separator: SeparatorParams = DEFAULT_SEPARATOR) -> ArrayLike:
    """n_out/HTO in 1/h.

    The oxygen flow η¹·I/(4F) is in mol/s; 3600 turns it into mol/h, so
    n_out (in %/h) = HTO · gain with HTO in percent.
    """
    i = np.asarray(current, dtype=float)
    gas = separator.r_gas * separator.t_sep / (separator.p_sep * separator.v_sep)
    flow = np.asarray(current_efficiency(i)) * i / (4.0 * separator.faraday) * 3600.0
    return _scalar(separator.flow_scale * gas * flow)


def purge_gain_slope(current: ArrayLike, separator: SeparatorParams = DEFAULT_SEPARATOR) -> ArrayLike:
    """Analytic d(purge_gain)/dI in 1/(h·A)."""
    i = np.asarray(current, dtype=float)
    gas = separator.r_gas * separator.t_sep / (separator.p_sep * separator.v_sep)
    flow_slope = 0.96 * (i ** 4 + 750000.0 * i ** 2) / (250000.0 + i ** 2) ** 2 / (4.0 * separator.faraday) * 3600.0
    return _scalar(separator.flow_scale * gas * flow_slope)


def hto_step(hto: ArrayLike, current: ArrayLike, dt: float, separator: SeparatorParams = DEFAULT_SEPARATOR) -> ArrayLike:
    h = np.asarray(hto, dtype=float)
    gain = np.asarray(purge_gain(current, separator))
    return _scalar(np.maximum(h + dt * (separator.n_in - gain * h), 0.0))


def hto_off_step(hto: ArrayLike, dt: float, separator: SeparatorParams = DEFAULT_SEPARATOR) -> ArrayLike:
    """Separator flushing while the stack is switched off."""
    h = np.asarray(hto, dtype=float)
    return _scalar(np.maximum(h - separator.off_purge_rate * dt, 0.0))


def thermal_step(temperature: ArrayLike, current: ArrayLike, voltage: ArrayLike, p_cool: ArrayLike, dt: float,
                 params: StackParams = DEFAULT_STACK) -> ArrayLike:
    t = np.asarray(temperature, dtype=float)
    i = np.asarray(current, dtype=float)
    heat = (np.asarray(voltage, dtype=float) - params.u_tn) * i
    loss = (t - params.t_amb) / params.r_h
    return _scalar(t + dt / params.c_h * (heat - loss - np.asarray(p_cool, dtype=float)))


def steady_temperature(current: float, voltage: float, p_cool: float, params: StackParams = DEFAULT_STACK) -> float:
    return params.t_amb + params.r_h * ((voltage - params.u_tn) * current - p_cool)


def cooling_limit(params: StackParams = DEFAULT_STACK) -> float:
    """P_cool_max: configured value, else twice the heat release at (I_max, T_max)."""
    if params.p_cool_max is not None:
        return params.p_cool_max
    voltage = cell_voltage(params.i_max, params.t_max, params)
    return 2.0 * (voltage - params.u_tn) * params.i_max


def status_of(current: float, temperature: float, delta: int, params: StackParams = DEFAULT_STACK) -> StackStatus:
    if not delta:
        return StackStatus.OFF
    if current <= 0.0:
        return StackStatus.STANDBY
    if temperature < params.startup_band:
        return StackStatus.STARTUP
    return StackStatus.NORMAL


def feasible(state: StackState, params: StackParams = DEFAULT_STACK, separator: Optional[SeparatorParams] = None) -> bool:
    """Current/temperature box of an operating point, plus the HTO limit when a separator is given."""
    if state.current < -_CURRENT_TOL or state.current > params.i_max * state.delta * (1 + _CURRENT_TOL):
        return False
    if state.delta and not (params.t_min <= state.temperature <= params.t_max):
        return False
    if separator is not None and not (0.0 <= state.hto <= separator.hto_max + 1e-9):
        return False
    return True


def make_state(current: float, temperature: float, delta: int, hto: float = 0.0,
               params: StackParams = DEFAULT_STACK) -> StackState:
    return StackState(
        current=float(current),
        temperature=float(temperature),
        delta=int(delta),
        hto=float(hto),
        status=status_of(current, temperature, delta, params),
    )
