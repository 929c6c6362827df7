"""
Closed-loop scenario engine.

Each hour the policy plans (hour-ahead MPC or the equal-split rule), then
every sub-interval it maps the realized instruction to stack currents, the
thermostat picks the cooling power toward the scheduled temperature, and
the plant advances with the exact stack dynamics.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from tqdm import tqdm

from p2h.control.mpc import HourlySchedule, ProposedController
from p2h.control.realtime import RtContext, RtSettings, correct_step, end_of_hour, make_context
from p2h.harness.export import trace_columns
from p2h.harness.metrics import Metrics, compute_metrics
from p2h.harness.profiles import Scenario
from p2h.physics.plant import (
    PlantConfig,
    PlantState,
    StackControl,
    advance,
    initial_state,
    measure,
    thermostat_cooling,
)
from p2h.physics.stack import make_state

logger = logging.getLogger(__name__)

HTO_MATCH_TOL = 1e-6


@dataclass(frozen=True)
class StepDecision:
    deltas: Tuple[int, ...]
    currents: Tuple[float, ...]
    baseline: Tuple[float, ...]
    targets: Tuple[float, ...]
    pinned: Tuple[int, ...] = ()


class ProposedPolicy:
    """Hour-ahead robust MPC plus the real-time increment correction."""

    name = "proposed"

    def __init__(self, controller: ProposedController, rt_settings: Optional[RtSettings] = None):
        self.controller = controller
        self.rt_settings = rt_settings or RtSettings()
        self.context: Optional[RtContext] = None
        self.targets: Tuple[float, ...] = ()
        self.schedules: List[HourlySchedule] = []
        self.expected_hto: Optional[Tuple[float, ...]] = None
        self.hto_mismatch: List[float] = []

    def begin_hour(self, state: PlantState, forecast: Sequence[float]) -> None:
        if self.expected_hto is not None:
            gap = max(abs(s.hto - e) for s, e in zip(state.stacks, self.expected_hto))
            self.hto_mismatch.append(gap)
            if gap > HTO_MATCH_TOL:
                logger.warning("Hour %d opens %.2e %% HTO away from the end-of-hour prediction", state.hour, gap)
        schedule = self.controller.plan(state, forecast)
        self.schedules.append(schedule)
        plans = schedule.first_hour()
        self.targets = tuple(plan.temperature for plan in plans)
        self.context = make_context(
            baseline=[plan.current for plan in plans],
            deltas=[plan.delta for plan in plans],
            temperatures=[s.temperature for s in state.stacks],
            htos=[s.hto for s in state.stacks],
            config=self.controller.config,
            settings=self.rt_settings,
        )

    def step(self, state: PlantState, interval: int, instruction: float) -> StepDecision:
        ctx = self.context
        measured = [s.hto - ctx.hto_start[b] for b, s in enumerate(state.stacks)]
        result = correct_step(ctx, interval, instruction, measured, [s.temperature for s in state.stacks])
        if interval == ctx.intervals:
            self.expected_hto = end_of_hour(ctx, result.delta_hto)
        return StepDecision(
            deltas=ctx.deltas,
            currents=result.currents,
            baseline=ctx.baseline,
            targets=self.targets,
            pinned=result.pinned,
        )


@dataclass
class ClosedLoopResult:
    scenario: Scenario
    controller: str
    trace: pd.DataFrame
    metrics: Metrics
    final_state: PlantState
    schedules: List[HourlySchedule] = field(default_factory=list)
    mpc_times: List[float] = field(default_factory=list)
    rt_times: List[float] = field(default_factory=list)


def _operating_state(state: PlantState, decision: StepDecision, config: PlantConfig) -> PlantState:
    stacks = tuple(
        make_state(decision.currents[b] if decision.deltas[b] else 0.0, s.temperature, decision.deltas[b], s.hto,
                   config.stack)
        for b, s in enumerate(state.stacks)
    )
    return PlantState(stacks=stacks, hour=state.hour, interval=state.interval)


def _controls(state: PlantState, decision: StepDecision, config: PlantConfig) -> List[StackControl]:
    controls = []
    for b, stack in enumerate(state.stacks):
        delta = decision.deltas[b]
        current = decision.currents[b] if delta else 0.0
        p_cool = thermostat_cooling(stack.temperature, current, decision.targets[b], config) if delta else 0.0
        controls.append(StackControl(current=current, p_cool=p_cool, delta=delta))
    return controls


def run_closed_loop(scenario: Scenario, config: PlantConfig, policy, initial: Optional[PlantState] = None,
                    progress: bool = True, on_hour: Optional[Callable[[int, int], None]] = None) -> ClosedLoopResult:
    """``on_hour(done, total)`` is called after every simulated hour."""
    if scenario.intervals_per_hour != config.intervals_per_hour:
        raise ValueError(
            f"scenario has {scenario.intervals_per_hour} sub-intervals per hour, plant expects {config.intervals_per_hour}"
        )
    state = initial or initial_state(config)
    rows: List[Dict[str, float]] = []
    mpc_times: List[float] = []
    rt_times: List[float] = []

    hours = tqdm(range(scenario.hours), desc=f"{scenario.name}/{policy.name}", unit="h", disable=not progress)
    for hour in hours:
        window = scenario.forecast_window(hour, config.horizon)
        started = time.perf_counter()
        policy.begin_hour(state, window)
        mpc_times.append(time.perf_counter() - started)

        for interval in range(1, config.intervals_per_hour + 1):
            instruction = float(scenario.instructions[hour, interval - 1])
            started = time.perf_counter()
            decision = policy.step(state, interval, instruction)
            rt_times.append(time.perf_counter() - started)

            bus = measure(_operating_state(state, decision, config), config)
            temperatures = [s.temperature for s in state.stacks]
            state = advance(state, _controls(state, decision, config), config)

            row = {
                "hour": hour,
                "interval": interval,
                "t": hour * config.intervals_per_hour + interval,
                "instruction_w": instruction,
                "achieved_w": bus.p_total,
                "bus_q_var": bus.q_total,
                "bus_pf": bus.pf,
                "h2_kg_h": bus.m_rate_total,
            }
            for b, stack in enumerate(state.stacks):
                row[f"delta_{b}"] = decision.deltas[b]
                row[f"current_{b}"] = decision.currents[b] if decision.deltas[b] else 0.0
                row[f"baseline_{b}"] = decision.baseline[b] if decision.deltas[b] else 0.0
                row[f"temperature_{b}"] = temperatures[b]
                row[f"hto_{b}"] = stack.hto
                row[f"p_{b}"] = bus.per_stack_p[b]
                row[f"q_{b}"] = bus.per_stack_q[b]
            rows.append(row)
        hours.set_postfix(pf=f"{rows[-1]['bus_pf']:.3f}")
        if on_hour is not None:
            on_hour(hour + 1, scenario.hours)

    trace = pd.DataFrame(rows, columns=trace_columns(config.n_stacks))
    metrics = compute_metrics(trace, config.dt, config.pf_min, mpc_times, rt_times)
    logger.info(
        "%s/%s: flexibility %.3f MW, avg PF %.4f, production %.2f kg",
        scenario.name, policy.name, metrics.flexibility_mw, metrics.avg_pf, metrics.production_kg,
    )
    return ClosedLoopResult(
        scenario=scenario,
        controller=policy.name,
        trace=trace,
        metrics=metrics,
        final_state=state,
        schedules=list(getattr(policy, "schedules", [])),
        mpc_times=mpc_times,
        rt_times=rt_times,
    )
