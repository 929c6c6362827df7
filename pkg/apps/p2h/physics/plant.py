"""
Multi-stack plant: N_B stacks behind identical rectifiers on one 10 kV bus.

The plant advances the exact (non-surrogate) stack dynamics one
sub-interval at a time and reports bus-level measurements.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from p2h.exceptions import InfeasibleControlError
from p2h.physics.rectifier import (
    DEFAULT_RECTIFIER,
    DEFAULT_COMPENSATION_VAR,
    RectifierParams,
    active_power,
    cluster_pf,
    reactive_power,
)
from p2h.physics.stack import (
    DEFAULT_SEPARATOR,
    DEFAULT_STACK,
    SeparatorParams,
    StackParams,
    StackState,
    cell_voltage,
    cooling_limit,
    hto_off_step,
    hto_step,
    hydrogen_rate,
    make_state,
    thermal_step,
)

logger = logging.getLogger(__name__)

HTO_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PlantConfig:
    n_stacks: int = 2
    stack: StackParams = field(default_factory=StackParams)
    separator: SeparatorParams = field(default_factory=SeparatorParams)
    rectifier: RectifierParams = field(default_factory=RectifierParams)
    intervals_per_hour: int = 4
    horizon: int = 4
    pf_min: float = 0.9
    compensation_var: float = DEFAULT_COMPENSATION_VAR
    standby_draw: bool = True

    def __post_init__(self):
        if self.n_stacks < 1:
            raise ValueError("a plant needs at least one stack")
        if self.intervals_per_hour < 1:
            raise ValueError("intervals_per_hour must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0 < self.pf_min <= 1:
            raise ValueError("pf_min must lie in (0, 1]")
        if self.compensation_var < 0:
            raise ValueError("compensation_var cannot be negative")

    @property
    def dt(self) -> float:
        return 1.0 / self.intervals_per_hour

    @property
    def rated_power(self) -> float:
        return self.n_stacks * self.stack.rated_power

    @property
    def p_cool_max(self) -> float:
        return cooling_limit(self.stack)

    def bus_compensation(self, deltas: Sequence[int]) -> float:
        """Switched compensation: one bank per energized rectifier."""
        return self.compensation_var * float(sum(1 for d in deltas if d))


@dataclass(frozen=True)
class PlantState:
    stacks: Tuple[StackState, ...]
    hour: int = 0
    interval: int = 1

    @property
    def clock(self) -> Tuple[int, int]:
        return self.hour, self.interval

    @property
    def deltas(self) -> List[int]:
        return [s.delta for s in self.stacks]


@dataclass(frozen=True)
class StackControl:
    current: float = 0.0
    p_cool: float = 0.0
    delta: int = 0


@dataclass(frozen=True)
class BusMeasurement:
    p_total: float
    q_total: float
    pf: float
    m_rate_total: float
    per_stack_p: Tuple[float, ...]
    per_stack_q: Tuple[float, ...]
    per_stack_m: Tuple[float, ...]
    qc: float = 0.0
    degenerate: bool = False


def initial_state(config: PlantConfig, temperature: Optional[float] = None, hto: float = 0.0, delta: int = 1) -> PlantState:
    temperature = config.stack.t_min if temperature is None else temperature
    stacks = tuple(make_state(0.0, temperature, delta, hto, config.stack) for _ in range(config.n_stacks))
    return PlantState(stacks=stacks, hour=0, interval=1)


def stack_power(stack: StackState, config: PlantConfig) -> Tuple[float, float]:
    """(P, Q) drawn by one rectifier; Off draws nothing, Standby the no-load loss."""
    if not stack.delta:
        return 0.0, 0.0
    if stack.current <= 0.0 and not config.standby_draw:
        return 0.0, 0.0
    p = active_power(stack.current, stack.temperature, config.stack, config.rectifier)
    q = reactive_power(stack.current, stack.temperature, config.stack, config.rectifier)
    return p, q


def measure(state: PlantState, config: PlantConfig) -> BusMeasurement:
    powers, reactives, rates = [], [], []
    for stack in state.stacks:
        p, q = stack_power(stack, config)
        powers.append(p)
        reactives.append(q)
        rates.append(hydrogen_rate(stack.current) if stack.delta else 0.0)
    qc = config.bus_compensation(state.deltas)
    p_total = float(np.sum(powers))
    degenerate = p_total <= 0.0
    pf = 1.0 if degenerate else cluster_pf(powers, reactives, qc)
    return BusMeasurement(
        p_total=p_total,
        q_total=float(np.sum(reactives)) - qc,
        pf=pf,
        m_rate_total=float(np.sum(rates)),
        per_stack_p=tuple(powers),
        per_stack_q=tuple(reactives),
        per_stack_m=tuple(rates),
        qc=qc,
        degenerate=degenerate,
    )


def thermostat_cooling(temperature: float, current: float, target: float, config: PlantConfig, dt: Optional[float] = None) -> float:
    """P_cool that lands the next temperature on ``target``, clamped to [0, P_cool_max]."""
    dt = config.dt if dt is None else dt
    params = config.stack
    heat = 0.0
    if current > 0.0:
        heat = (cell_voltage(current, temperature, params) - params.u_tn) * current
    loss = (temperature - params.t_amb) / params.r_h
    required = heat - loss - params.c_h * (target - temperature) / dt
    return float(min(max(required, 0.0), config.p_cool_max))


def _validate_control(index: int, control: StackControl, config: PlantConfig) -> None:
    params = config.stack
    if control.delta not in (0, 1):
        raise InfeasibleControlError(index, "delta", f"delta={control.delta}")
    if control.current < 0.0 or control.current > params.i_max * control.delta * (1 + HTO_TOLERANCE):
        raise InfeasibleControlError(index, "current_box", f"I={control.current:.3f} A, delta={control.delta}")
    if control.p_cool < 0.0 or control.p_cool > config.p_cool_max * (1 + HTO_TOLERANCE):
        raise InfeasibleControlError(index, "cooling_box", f"P_cool={control.p_cool:.1f} W")


def advance_stack(index: int, stack: StackState, control: StackControl, config: PlantConfig, dt: float) -> StackState:
    _validate_control(index, control, config)
    params = config.stack
    current = min(control.current, params.i_max)
    voltage = cell_voltage(current, stack.temperature, params) if current > 0.0 else 0.0
    temperature = thermal_step(stack.temperature, current, voltage, control.p_cool, dt, params)
    temperature = float(np.clip(temperature, 0.0, 100.0))

    if control.delta:
        hto = hto_step(stack.hto, current, dt, config.separator)
    else:
        hto = hto_off_step(stack.hto, dt, config.separator)
    limit = config.separator.hto_max
    if hto > limit * (1 + HTO_TOLERANCE) + HTO_TOLERANCE:
        raise InfeasibleControlError(index, "hto_max", f"HTO would reach {hto:.4f}% > {limit}%")
    return make_state(current, temperature, control.delta, hto, params)


def advance(state: PlantState, controls: Sequence[StackControl], config: PlantConfig, dt: Optional[float] = None) -> PlantState:
    if len(controls) != len(state.stacks):
        raise ValueError(f"expected {len(state.stacks)} controls, got {len(controls)}")
    dt = config.dt if dt is None else dt
    stacks = tuple(
        advance_stack(b, stack, control, config, dt)
        for b, (stack, control) in enumerate(zip(state.stacks, controls))
    )
    interval = state.interval + 1
    hour = state.hour
    if interval > config.intervals_per_hour:
        interval = 1
        hour += 1
    return replace(state, stacks=stacks, hour=hour, interval=interval)
