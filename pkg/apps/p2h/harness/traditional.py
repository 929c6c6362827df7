"""
Production-oriented baseline: equal current split with a 40 % lower limit.

No PF or separator logic; running stacks are held near the top of the
temperature band by the thermostat.
"""
import logging
from typing import List, Sequence, Tuple

from p2h.harness.closed_loop import StepDecision
from p2h.physics.plant import PlantConfig, PlantState
from p2h.physics.rectifier import active_power

logger = logging.getLogger(__name__)

LOWER_LIMIT_FRACTION = 0.4
HIGH_BAND_OFFSET = 5.0
BISECTION_STEPS = 60


def _group_power(current: float, temperatures: Sequence[float], config: PlantConfig) -> float:
    return sum(active_power(current, t, config.stack, config.rectifier) for t in temperatures)


def equal_split_current(instruction: float, temperatures: Sequence[float], config: PlantConfig) -> float:
    """Common current at which the given stacks together draw ``instruction``, clamped to [0, I_max]."""
    i_max = config.stack.i_max
    if instruction >= _group_power(i_max, temperatures, config):
        return i_max
    lo, hi = 0.0, i_max
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if _group_power(mid, temperatures, config) > instruction:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def traditional_controller(state: PlantState, instruction: float, config: PlantConfig) -> Tuple[List[int], List[float]]:
    """(δ, I) per stack: the largest group whose equal-split current stays at or above 40 % of I_max."""
    n_total = len(state.stacks)
    floor = LOWER_LIMIT_FRACTION * config.stack.i_max
    for n_on in range(n_total, 0, -1):
        group = list(range(n_on))
        temperatures = [state.stacks[b].temperature for b in group]
        current = equal_split_current(instruction, temperatures, config)
        if current >= floor:
            deltas = [1 if b < n_on else 0 for b in range(n_total)]
            currents = [current if b < n_on else 0.0 for b in range(n_total)]
            return deltas, currents
    return [0] * n_total, [0.0] * n_total


class TraditionalController:
    name = "traditional"

    def __init__(self, config: PlantConfig):
        self.config = config
        self.target_temperature = config.stack.t_max - HIGH_BAND_OFFSET

    def begin_hour(self, state: PlantState, forecast: Sequence[float]) -> None:
        pass

    def step(self, state: PlantState, interval: int, instruction: float) -> StepDecision:
        deltas, currents = traditional_controller(state, instruction, self.config)
        return StepDecision(
            deltas=tuple(deltas),
            currents=tuple(currents),
            baseline=tuple(currents),
            targets=tuple(self.target_temperature for _ in deltas),
        )
