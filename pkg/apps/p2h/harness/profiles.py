"""Peak-shaving instruction profiles: anti-load shapes and constant load levels."""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from p2h.exceptions import ConfigError
from p2h.physics.plant import PlantConfig

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24
LEVEL_PRESETS = {"10": 0.10, "20": 0.20, "30": 0.30, "50": 0.50, "100": 1.00}

# (first interval, last interval, fraction of plant rating), 15-min indexing t = 1..96
DAILY_SEGMENTS: Tuple[Tuple[int, int, float], ...] = (
    (1, 16, 0.85),
    (17, 28, 0.75),
    (29, 39, 0.60),
    (40, 60, 0.15),
    (61, 71, 0.55),
    (72, 84, 0.12),
    (85, 96, 0.80),
)
PRESETS = ("daily",) + tuple(LEVEL_PRESETS)


@dataclass(frozen=True)
class Scenario:
    name: str
    profile: np.ndarray
    instructions: np.ndarray
    forecast: np.ndarray
    alpha: float
    seed: int
    controller: str = "proposed"

    @property
    def hours(self) -> int:
        return self.profile.shape[0]

    @property
    def intervals_per_hour(self) -> int:
        return self.profile.shape[1]

    def forecast_window(self, hour: int, horizon: int) -> Tuple[float, ...]:
        """Hourly forecast for the next ``horizon`` hours, truncated at the end of the day."""
        day_end = (hour // HOURS_PER_DAY + 1) * HOURS_PER_DAY
        end = min(hour + horizon, day_end, self.hours)
        return tuple(float(p) for p in self.forecast[hour:end])


def _daily_fractions(intervals_per_hour: int) -> np.ndarray:
    fractions = np.zeros(96)
    for first, last, level in DAILY_SEGMENTS:
        fractions[first - 1:last] = level
    if intervals_per_hour == 4:
        return fractions.reshape(HOURS_PER_DAY, 4)
    # resample the 15-min shape onto another sub-interval count
    positions = (np.arange(HOURS_PER_DAY * intervals_per_hour) + 0.5) * 96 / (HOURS_PER_DAY * intervals_per_hour)
    return fractions[np.minimum(positions.astype(int), 95)].reshape(HOURS_PER_DAY, intervals_per_hour)


def _levels_to_fractions(levels, intervals_per_hour: int) -> np.ndarray:
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    if levels.size == 1:
        fractions = np.full((HOURS_PER_DAY, intervals_per_hour), float(levels[0]))
    elif levels.size == HOURS_PER_DAY:
        fractions = np.repeat(levels[:, None], intervals_per_hour, axis=1)
    elif levels.size == HOURS_PER_DAY * intervals_per_hour:
        fractions = levels.reshape(HOURS_PER_DAY, intervals_per_hour)
    else:
        raise ValueError(
            f"expected 1, {HOURS_PER_DAY} or {HOURS_PER_DAY * intervals_per_hour} load levels, got {levels.size}"
        )
    if np.any(fractions < 0.0) or np.any(fractions > 1.0) or np.any(np.isnan(fractions)):
        raise ValueError("load levels must lie in [0, 1] of the plant rating")
    return fractions


def make_antiload_profile(levels: Union[str, float, Sequence[float]], config: PlantConfig, alpha: float = 0.05,
                          seed: int = 0, controller: str = "proposed", days: int = 1) -> Scenario:
    """
    Build a scenario from a named preset or explicit load levels.

    The realized instruction of every sub-interval is the nominal profile
    times (1 + u), u uniform in [−α, α] from a seeded generator; the hourly
    forecast is the mean of the nominal profile over the hour.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if days < 1:
        raise ValueError("days must be >= 1")
    steps = config.intervals_per_hour
    if isinstance(levels, str):
        if levels == "daily":
            fractions = _daily_fractions(steps)
        elif levels.rstrip("%") in LEVEL_PRESETS:
            fractions = _levels_to_fractions(LEVEL_PRESETS[levels.rstrip("%")], steps)
        else:
            raise ConfigError(f"Unknown profile preset {levels!r}; choose from {', '.join(PRESETS)}")
        name = levels.rstrip("%")
    else:
        fractions = _levels_to_fractions(levels, steps)
        name = "custom"

    fractions = np.tile(fractions, (days, 1))
    profile = fractions * config.rated_power
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-alpha, alpha, size=profile.shape) if alpha > 0 else np.zeros_like(profile)
    instructions = profile * (1.0 + noise)
    forecast = profile.mean(axis=1)
    logger.debug("Scenario %s: %d hours, %.2f MW mean instruction", name, profile.shape[0], instructions.mean() / 1e6)
    return Scenario(
        name=name,
        profile=profile,
        instructions=instructions,
        forecast=forecast,
        alpha=alpha,
        seed=seed,
        controller=controller,
    )
