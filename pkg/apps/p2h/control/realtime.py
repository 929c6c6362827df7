"""
Real-time increment correction inside the hour.

The hour-ahead schedule fixes on/off states, baseline currents and target
temperatures. Every sub-interval the deviation between the realized
instruction and the baseline power is spread over the running stacks by
marginal production rank, keeping each stack inside its current box and its
separator HTO under the limit.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from p2h.exceptions import RankUndefinedError
from p2h.physics.plant import PlantConfig, stack_power
from p2h.physics.rectifier import cluster_pf, power_derivative, production_rank
from p2h.physics.stack import hto_off_step, hto_step, make_state, purge_gain, purge_gain_slope

logger = logging.getLogger(__name__)

TRACKING_TOL = 1e-9
BISECTION_STEPS = 80


@dataclass(frozen=True)
class RtSettings:
    refine_iterations: int = 2
    increase_descending: bool = True
    hto_margin: float = 1e-6
    hto_model: str = "exact"

    def __post_init__(self):
        if self.hto_model not in ("exact", "taylor"):
            raise ValueError("hto_model must be 'exact' or 'taylor'")

    @classmethod
    def from_section(cls, section) -> "RtSettings":
        return cls(**section.model_dump())


@dataclass(frozen=True)
class RtContext:
    baseline: Tuple[float, ...]
    deltas: Tuple[int, ...]
    temperatures: Tuple[float, ...]
    hto_start: Tuple[float, ...]
    ranks: Tuple[Optional[float], ...]
    config: PlantConfig
    planned_deviation: float = 0.0
    settings: RtSettings = field(default_factory=RtSettings)

    @property
    def intervals(self) -> int:
        return self.config.intervals_per_hour

    @property
    def n_stacks(self) -> int:
        return len(self.baseline)


@dataclass(frozen=True)
class RtStepResult:
    interval: int
    currents: Tuple[float, ...]
    delta_currents: Tuple[float, ...]
    delta_hto: Tuple[float, ...]
    hto: Tuple[float, ...]
    requested_power: float
    achieved_power: float
    pf: float
    pinned: Tuple[int, ...] = ()
    saturated: Tuple[int, ...] = ()

    @property
    def shortfall(self) -> float:
        return self.requested_power - self.achieved_power


@dataclass
class RtOutput:
    steps: List[RtStepResult] = field(default_factory=list)

    @property
    def tracking_error(self) -> float:
        return sum(abs(step.shortfall) for step in self.steps)


def rank_index(current: float, temperature: float, config: PlantConfig, delta: int = 1, stack: int = -1) -> float:
    """Marginal hydrogen per marginal watt at the operating point, kg/Wh."""
    if not delta:
        raise RankUndefinedError(f"Stack {stack}: rank is undefined while switched off")
    return float(production_rank(current, temperature, config.stack, config.rectifier))


def make_context(baseline: Sequence[float], deltas: Sequence[int], temperatures: Sequence[float],
                 htos: Sequence[float], config: PlantConfig,
                 planned_deviation: float = 0.0, settings: Optional[RtSettings] = None) -> RtContext:
    ranks = tuple(
        rank_index(i, t, config, d, b) if d else None
        for b, (i, t, d) in enumerate(zip(baseline, temperatures, deltas))
    )
    return RtContext(
        baseline=tuple(float(i) for i in baseline),
        deltas=tuple(int(d) for d in deltas),
        temperatures=tuple(float(t) for t in temperatures),
        hto_start=tuple(float(h) for h in htos),
        ranks=ranks,
        config=config,
        planned_deviation=float(planned_deviation),
        settings=settings or RtSettings(),
    )


def _power(current: float, temperature: float, delta: int, config: PlantConfig) -> Tuple[float, float]:
    return stack_power(make_state(current, temperature, delta, 0.0, config.stack), config)


def _project_hto(ctx: RtContext, b: int, hto_now: float, delta_hto: float, current: float) -> float:
    """HTO at the end of the sub-interval for stack b running at ``current``."""
    config = ctx.config
    dt = config.dt
    separator = config.separator
    if not ctx.deltas[b]:
        return float(hto_off_step(hto_now, dt, separator))
    if ctx.settings.hto_model == "exact":
        return float(hto_step(hto_now, current, dt, separator))
    base_current = ctx.baseline[b]
    start = ctx.hto_start[b]
    gain = purge_gain(base_current, separator)
    drift = separator.n_in - gain * start
    d_hto = -gain
    d_current = -purge_gain_slope(base_current, separator) * start
    step = drift + d_hto * delta_hto + d_current * (current - base_current)
    return float(start + delta_hto + step * dt)


def _minimum_current(ctx: RtContext, b: int, hto_now: float, delta_hto: float) -> Optional[float]:
    """Smallest current keeping HTO at or below the limit, None if no current does."""
    config = ctx.config
    cap = config.separator.hto_max - ctx.settings.hto_margin
    i_max = config.stack.i_max
    if _project_hto(ctx, b, hto_now, delta_hto, 0.0) <= cap:
        return 0.0
    if _project_hto(ctx, b, hto_now, delta_hto, i_max) > cap:
        return None
    if ctx.settings.hto_model == "taylor":
        separator = config.separator
        slope = -purge_gain_slope(ctx.baseline[b], separator) * ctx.hto_start[b] * config.dt
        if slope < 0.0:
            at_base = _project_hto(ctx, b, hto_now, delta_hto, ctx.baseline[b])
            return min(max(ctx.baseline[b] + (cap - at_base) / slope, 0.0), i_max)
    lo, hi = 0.0, i_max
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if _project_hto(ctx, b, hto_now, delta_hto, mid) > cap:
            lo = mid
        else:
            hi = mid
    return hi


def _allocation_order(ctx: RtContext, sign: float) -> List[int]:
    on = [b for b in range(ctx.n_stacks) if ctx.deltas[b]]
    descending = ctx.settings.increase_descending if sign > 0 else not ctx.settings.increase_descending
    return sorted(on, key=lambda b: (ctx.ranks[b], -b), reverse=descending)


def correct_step(ctx: RtContext, interval: int, p_realtime: float, delta_hto: Optional[Sequence[float]] = None,
                 temperatures: Optional[Sequence[float]] = None) -> RtStepResult:
    """One sub-interval of the increment correction; pure in its inputs."""
    if not 1 <= interval <= ctx.intervals:
        raise ValueError(f"sub-interval {interval} outside 1..{ctx.intervals}")
    n = ctx.n_stacks
    config = ctx.config
    i_max = config.stack.i_max
    delta_hto = tuple(delta_hto) if delta_hto is not None else tuple(0.0 for _ in range(n))
    temperatures = tuple(temperatures) if temperatures is not None else ctx.temperatures
    hto_now = [ctx.hto_start[b] + delta_hto[b] for b in range(n)]

    currents = list(ctx.baseline)
    powers = [_power(currents[b], temperatures[b], ctx.deltas[b], config)[0] for b in range(n)]
    p_base = sum(powers)
    target = p_realtime - ctx.planned_deviation
    residual = target - p_base

    floors = [0.0] * n
    pinned = set()
    for b in range(n):
        if not ctx.deltas[b]:
            continue
        floor = _minimum_current(ctx, b, hto_now[b], delta_hto[b])
        if floor is None:
            logger.warning("Stack %d: HTO limit unreachable even at I_max", b)
            floor = i_max
        floors[b] = floor
        if floor > currents[b]:
            currents[b] = floor
            pinned.add(b)
            new_power = _power(currents[b], temperatures[b], 1, config)[0]
            residual -= new_power - powers[b]
            powers[b] = new_power

    for _ in range(1 + ctx.settings.refine_iterations):
        if abs(residual) <= TRACKING_TOL * max(abs(target), 1.0):
            break
        for b in _allocation_order(ctx, residual):
            if abs(residual) <= TRACKING_TOL * max(abs(target), 1.0):
                break
            slope = power_derivative(currents[b], temperatures[b], config.stack, config.rectifier)
            if slope <= 0.0:
                continue
            proposed = currents[b] + residual / slope
            bounded = min(max(proposed, floors[b]), i_max)
            if bounded > proposed and floors[b] > 0.0:
                pinned.add(b)
            if bounded == currents[b]:
                continue
            new_power = _power(bounded, temperatures[b], 1, config)[0]
            residual -= new_power - powers[b]
            powers[b] = new_power
            currents[b] = bounded

    hto_next = [_project_hto(ctx, b, hto_now[b], delta_hto[b], currents[b]) for b in range(n)]
    d_hto = [hto_next[b] - ctx.hto_start[b] for b in range(n)]

    reactives = [_power(currents[b], temperatures[b], ctx.deltas[b], config)[1] for b in range(n)]
    achieved = sum(powers)
    qc = config.bus_compensation(ctx.deltas)
    pf = 1.0 if achieved <= 0.0 else cluster_pf(powers, reactives, qc)
    saturated = tuple(b for b in range(n) if ctx.deltas[b] and (currents[b] >= i_max or currents[b] <= floors[b])
                      and abs(residual) > TRACKING_TOL * max(abs(target), 1.0))
    return RtStepResult(
        interval=interval,
        currents=tuple(currents),
        delta_currents=tuple(currents[b] - ctx.baseline[b] for b in range(n)),
        delta_hto=tuple(d_hto),
        hto=tuple(hto_next),
        requested_power=float(target),
        achieved_power=float(achieved),
        pf=float(pf),
        pinned=tuple(sorted(pinned)),
        saturated=saturated,
    )


def end_of_hour(ctx: RtContext, delta_hto: Sequence[float]) -> Tuple[float, ...]:
    """HTO at the start of the next hour from the accumulated in-hour increment."""
    values = tuple(ctx.hto_start[b] + delta_hto[b] for b in range(ctx.n_stacks))
    limit = ctx.config.separator.hto_max
    for b, value in enumerate(values):
        if value > limit + 1e-9 and not math.isclose(value, limit):
            logger.warning("Stack %d closes the hour at HTO %.4f%% above the limit", b, value)
    return values
