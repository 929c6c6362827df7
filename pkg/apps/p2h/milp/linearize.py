"""Exact linear rows for products involving binary variables."""
import math
from typing import List

from p2h.milp.model import MilpModel, Sense


def product_bin_cont(model: MilpModel, w: int, sigma: int, x: int, lo: float, hi: float, name: str = "") -> List[int]:
    """Rows forcing w = σ·x for binary σ and x ∈ [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"big-M product {name or w} needs finite bounds on x, got [{lo}, {hi}]")
    if lo > hi:
        raise ValueError(f"big-M product {name or w}: lower bound {lo} above upper bound {hi}")
    prefix = name or model.variables[w].name
    return [
        model.add_constraint({w: 1.0, sigma: -hi}, Sense.LE, 0.0, f"{prefix}_ub_sigma"),
        model.add_constraint({w: 1.0, sigma: -lo}, Sense.GE, 0.0, f"{prefix}_lb_sigma"),
        model.add_constraint({w: 1.0, x: -1.0, sigma: -lo}, Sense.LE, -lo, f"{prefix}_ub_x"),
        model.add_constraint({w: 1.0, x: -1.0, sigma: -hi}, Sense.GE, -hi, f"{prefix}_lb_x"),
    ]


def product_bin_bin(model: MilpModel, w: int, a: int, b: int, name: str = "") -> List[int]:
    """Rows forcing w = a AND b for binaries a, b."""
    var = model.variables[w]
    var.lb = max(var.lb, 0.0)
    var.ub = min(var.ub, 1.0)
    prefix = name or var.name
    return [
        model.add_constraint({w: 1.0, a: -1.0}, Sense.LE, 0.0, f"{prefix}_le_a"),
        model.add_constraint({w: 1.0, b: -1.0}, Sense.LE, 0.0, f"{prefix}_le_b"),
        model.add_constraint({w: 1.0, a: -1.0, b: -1.0}, Sense.GE, -1.0, f"{prefix}_ge_and"),
    ]
