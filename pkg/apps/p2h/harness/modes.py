"""Cluster operating-mode labels read off a full-day trace."""
import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from p2h.physics.plant import PlantConfig

logger = logging.getLogger(__name__)

SPLIT_THRESHOLD = 0.05
HTO_BINDING_FRACTION = 0.95
PF_BINDING_BAND = 0.005
MIN_CYCLES = 2
UNEQUAL_SHARE = 0.5


class Switching(str, enum.Enum):
    IN_TURN = "in_turn"
    PARTIAL = "partial"
    NONE = "none"


class Split(str, enum.Enum):
    EQUAL = "equal"
    UNEQUAL = "unequal"
    PERIODIC = "periodic"


class ModeLabel(str, enum.Enum):
    SWITCH_IN_TURN_EQUAL = "status switch in-turn, current equal-split"
    PARTIAL_SWITCH_EQUAL = "partial status switch in-turn, current equal-split"
    NO_SWITCH_PERIODIC = "no status switch, current adjust periodically"
    NO_SWITCH_UNEQUAL = "no status switch, current unequal-split"
    NO_SWITCH_EQUAL = "no status switch, current equal-split"
    UNCLASSIFIED = "unclassified"


# label -> (switching, split, HTO binding, PF binding)
MODE_TABLE: Dict[ModeLabel, Tuple[Switching, Split, bool, bool]] = {
    ModeLabel.SWITCH_IN_TURN_EQUAL: (Switching.IN_TURN, Split.EQUAL, True, False),
    ModeLabel.PARTIAL_SWITCH_EQUAL: (Switching.PARTIAL, Split.EQUAL, True, False),
    ModeLabel.NO_SWITCH_PERIODIC: (Switching.NONE, Split.PERIODIC, True, True),
    ModeLabel.NO_SWITCH_UNEQUAL: (Switching.NONE, Split.UNEQUAL, False, True),
    ModeLabel.NO_SWITCH_EQUAL: (Switching.NONE, Split.EQUAL, False, False),
}

# constant-load preset -> label a ten-stack plant is expected to settle into
PRESET_MODES: Dict[str, ModeLabel] = {
    "10": ModeLabel.SWITCH_IN_TURN_EQUAL,
    "20": ModeLabel.PARTIAL_SWITCH_EQUAL,
    "30": ModeLabel.NO_SWITCH_PERIODIC,
    "50": ModeLabel.NO_SWITCH_UNEQUAL,
    "100": ModeLabel.NO_SWITCH_EQUAL,
}


@dataclass(frozen=True)
class ModeReport:
    label: ModeLabel
    switching: Switching
    split: Split
    hto_binding: bool
    pf_binding: bool
    cycles: Tuple[int, ...] = ()
    flags_match: bool = True
    details: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "label": self.label.value,
            "switching": self.switching.value,
            "split": self.split.value,
            "hto_binding": self.hto_binding,
            "pf_binding": self.pf_binding,
            "cycles": list(self.cycles),
            "flags_match": self.flags_match,
            **self.details,
        }


def _n_stacks(trace: pd.DataFrame) -> int:
    return sum(1 for c in trace.columns if c.startswith("delta_"))


def _cycles(deltas: np.ndarray) -> int:
    """Number of on→off transitions."""
    return int(np.sum((deltas[:-1] == 1) & (deltas[1:] == 0)))


def _hourly(trace: pd.DataFrame, column: str) -> np.ndarray:
    return trace.groupby("hour")[column].first().to_numpy()


def classify_switching(trace: pd.DataFrame) -> Tuple[Switching, List[int]]:
    n = _n_stacks(trace)
    cycles = [_cycles(_hourly(trace, f"delta_{b}").astype(int)) for b in range(n)]
    switching_stacks = sum(1 for c in cycles if c >= 1)
    if not any(c >= MIN_CYCLES for c in cycles):
        return Switching.NONE, cycles
    if switching_stacks == n:
        return Switching.IN_TURN, cycles
    return Switching.PARTIAL, cycles


def classify_split(trace: pd.DataFrame, config: PlantConfig) -> Tuple[Split, Dict[str, float]]:
    n = _n_stacks(trace)
    threshold = SPLIT_THRESHOLD * config.stack.i_max
    baselines = np.column_stack([_hourly(trace, f"baseline_{b}") for b in range(n)])
    deltas = np.column_stack([_hourly(trace, f"delta_{b}") for b in range(n)]).astype(bool)

    spreads = []
    for row, on in zip(baselines, deltas):
        if on.sum() >= 2:
            spreads.append(float(row[on].max() - row[on].min()))
    unequal_share = float(np.mean([s > threshold for s in spreads])) if spreads else 0.0

    swings = []
    for b in range(n):
        running = baselines[deltas[:, b], b]
        if running.size >= 2:
            swings.append(float(running.max() - running.min()))
    periodic_share = float(np.mean([s > threshold for s in swings])) if swings else 0.0

    details = {"unequal_share": unequal_share, "periodic_share": periodic_share}
    if unequal_share > UNEQUAL_SHARE:
        return Split.UNEQUAL, details
    if periodic_share > UNEQUAL_SHARE:
        return Split.PERIODIC, details
    return Split.EQUAL, details


def classify_modes(trace: pd.DataFrame, config: PlantConfig) -> ModeReport:
    """Mode label of a run; invariant under relabelling of the stacks."""
    n = _n_stacks(trace)
    switching, cycles = classify_switching(trace)
    split, details = classify_split(trace, config)
    hto_peak = float(trace[[f"hto_{b}" for b in range(n)]].to_numpy().max())
    hto_binding = hto_peak >= HTO_BINDING_FRACTION * config.separator.hto_max
    pf_binding = bool((trace["bus_pf"] <= config.pf_min + PF_BINDING_BAND).any())

    label: Optional[ModeLabel] = None
    for candidate, (row_switching, row_split, _, _) in MODE_TABLE.items():
        if row_switching == switching and row_split == split:
            label = candidate
            break
    if label is None:
        logger.warning("No mode row for switching=%s split=%s", switching.value, split.value)
        return ModeReport(ModeLabel.UNCLASSIFIED, switching, split, hto_binding, pf_binding, tuple(cycles), False,
                          {**details, "hto_peak": hto_peak})

    _, _, expect_hto, expect_pf = MODE_TABLE[label]
    flags_match = (expect_hto == hto_binding) and (expect_pf == pf_binding)
    if not flags_match:
        logger.info("Mode %r with HTO=%s PF=%s differs from the table's binding pattern",
                    label.value, hto_binding, pf_binding)
    return ModeReport(label, switching, split, hto_binding, pf_binding, tuple(cycles), flags_match,
                      {**details, "hto_peak": hto_peak})
