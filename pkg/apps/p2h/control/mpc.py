"""
Hour-ahead robust MPC.

Per stack b and hour τ of the horizon the model carries an on/off binary δ,
current-segment binaries σ_k, temperature-segment binaries λ_l and the
segment-local current I_k and temperature T_l. Power, reactive power and
heat release come from the per-cell affine tables through the exact
products z = σ·λ, w = I·λ, v = T·σ. Production is the per-segment affine
table. The thermal and HTO recursions use hour steps; the HTO map of one
hour is the exact composition of the S intra-hour Euler steps at the
segment's purge gain.

The instruction uncertainty is a per-hour box ±α·P. Each hour gets one
second-stage current vector per sign sharing (δ, σ, λ, T) with the nominal
plan; every vertex-dependent row involves a single hour, so the two signs
per hour cover all 2^N_p vertices.
"""
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from p2h.exceptions import ClockSkewError, ConfigError, ControllerInfeasibleError, InfeasibleControlError
from p2h.fitting.artifact import Surrogates
from p2h.fitting.tables import CellTable, fit_cell_table
from p2h.milp.linearize import product_bin_bin, product_bin_cont
from p2h.milp.lp_format import dump_lp
from p2h.milp.model import MilpModel, MilpSolution, Sense, SolveStatus
from p2h.milp.solvers import BaseMilpSolver
from p2h.physics.plant import PlantConfig, PlantState
from p2h.physics.rectifier import cluster_pf
from p2h.physics.stack import purge_gain

logger = logging.getLogger(__name__)

PF_MODES = ("average", "hourly", "both")
CONSTRAINT_GROUPS = ("hto", "pf", "thermal", "min_down")


@dataclass(frozen=True)
class MpcSettings:
    alpha: float = 0.05
    pf_mode: str = "hourly"
    pf_margin: float = 0.002
    hto_gain_point: str = "lower"
    hto_margin: float = 0.0
    balance_penalty: float = 1e-3
    current_penalty: float = 1e-9
    min_down_hours: int = 0

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if self.pf_mode not in PF_MODES:
            raise ValueError(f"pf_mode must be one of {PF_MODES}")
        if self.hto_gain_point not in ("lower", "representative"):
            raise ValueError("hto_gain_point must be 'lower' or 'representative'")

    @classmethod
    def from_section(cls, section) -> "MpcSettings":
        return cls(**section.model_dump())


@dataclass(frozen=True)
class MpcProblem:
    hour: int
    forecast: Tuple[float, ...]
    temperatures: Tuple[float, ...]
    htos: Tuple[float, ...]
    deltas: Tuple[int, ...]
    config: PlantConfig
    surrogates: Surrogates
    settings: MpcSettings = field(default_factory=MpcSettings)
    off_hours: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.forecast) < 1:
            raise ValueError("forecast needs at least one hour")
        if any(p < 0 for p in self.forecast):
            raise ValueError("instructions must be nonnegative")
        n = self.config.n_stacks
        for name in ("temperatures", "htos", "deltas"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per stack ({n})")
        if self.off_hours and len(self.off_hours) != n:
            raise ValueError("off_hours must have one entry per stack")
        if self.surrogates is None:
            raise ConfigError("MPC needs fitted surrogates")

    @property
    def horizon(self) -> int:
        return len(self.forecast)

    @property
    def alpha(self) -> float:
        return self.settings.alpha


@dataclass(frozen=True)
class StackHourPlan:
    stack: int
    offset: int
    delta: int
    current: float
    temperature: float
    p_cool: float
    hto: float
    power: float
    reactive: float
    segment: int


@dataclass(frozen=True)
class HourlySchedule:
    hour: int
    plans: Tuple[Tuple[StackHourPlan, ...], ...]
    predicted_pf: Tuple[float, ...]
    nominal_pf: Tuple[float, ...]
    surrogate_pf: Tuple[float, ...]
    objective: float
    production: float
    balance_residual: Tuple[float, ...]
    status: str
    solve_seconds: float
    nodes: int = 0
    forecast: Tuple[float, ...] = ()

    @property
    def horizon(self) -> int:
        return len(self.plans)

    def first_hour(self) -> Tuple[StackHourPlan, ...]:
        return self.plans[0]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for offset, hour_plans in enumerate(self.plans):
            for plan in hour_plans:
                rows.append({
                    "hour": self.hour + offset,
                    "stack": plan.stack,
                    "delta": plan.delta,
                    "current_a": plan.current,
                    "temperature_c": plan.temperature,
                    "p_cool_w": plan.p_cool,
                    "hto_pct": plan.hto,
                    "p_w": plan.power,
                    "q_var": plan.reactive,
                    "segment": plan.segment,
                    "predicted_pf": self.predicted_pf[offset],
                })
        return pd.DataFrame(rows)


# -- linear expression helpers ------------------------------------------------

def _add(expr: Dict[int, float], j: int, coef: float) -> None:
    if coef != 0.0:
        expr[j] = expr.get(j, 0.0) + coef


def _merge(target: Dict[int, float], source: Dict[int, float], scale: float = 1.0) -> None:
    for j, coef in source.items():
        _add(target, j, scale * coef)


def _value(expr: Dict[int, float], x: np.ndarray, constant: float = 0.0) -> float:
    return constant + sum(coef * x[j] for j, coef in expr.items())


def _cell_expr(table: CellTable, w, v, z) -> Dict[int, float]:
    expr: Dict[int, float] = {}
    for k in range(len(w)):
        for l in range(len(w[k])):
            _add(expr, w[k][l], float(table.current_coef[l, k]))
            _add(expr, v[k][l], float(table.temperature_coef[l, k]))
            _add(expr, z[k][l], float(table.constant[l, k]))
    return expr


def hto_hour_map(surrogates: Surrogates, config: PlantConfig, gain_point: str = "lower") -> Tuple[np.ndarray, np.ndarray]:
    """Per-segment (a_k, b_k) with HTO_next = a_k·HTO + b_k over one hour of S Euler steps."""
    grid = surrogates.grid
    if gain_point == "lower":
        currents = np.asarray(grid.current_breaks[:-1])
    else:
        currents = grid.current_points
    gains = np.asarray(purge_gain(currents, config.separator))
    steps = config.intervals_per_hour
    ratio = 1.0 - gains / steps
    a = ratio ** steps
    b = (config.separator.n_in / steps) * sum(ratio ** j for j in range(steps))
    return a, b


def _vertex_signs(problem: MpcProblem, vertices: Optional[Sequence[Sequence[int]]]) -> List[List[int]]:
    if vertices is None:
        if problem.alpha == 0.0:
            return [[] for _ in range(problem.horizon)]
        return [[-1, 1] for _ in range(problem.horizon)]
    signs: List[set] = [set() for _ in range(problem.horizon)]
    for pattern in vertices:
        if len(pattern) != problem.horizon or any(s not in (-1, 1) for s in pattern):
            raise ValueError(f"vertex pattern {pattern!r} must be ±1 of length {problem.horizon}")
        for t, s in enumerate(pattern):
            signs[t].add(int(s))
    return [sorted(s) for s in signs]


@dataclass
class _StackHour:
    delta: int
    sigma: List[int]
    lam: List[int]
    cur: List[int]
    temp_segments: List[int]
    z: List[List[int]]
    w: List[List[int]]
    v: List[List[int]]
    temperature: int
    p_cool: int
    hto: int
    power: Dict[int, float]
    reactive: Dict[int, float]
    pf_term: Dict[int, float]
    vertex_power: Dict[int, Dict[int, float]] = field(default_factory=dict)
    vertex_reactive: Dict[int, Dict[int, float]] = field(default_factory=dict)
    vertex_pf_term: Dict[int, Dict[int, float]] = field(default_factory=dict)


@dataclass
class MpcModel:
    """Built MILP plus the index bookkeeping needed to read a solution back."""
    model: MilpModel
    problem: MpcProblem
    cells: List[List[_StackHour]]
    signs: List[List[int]]
    hto_a: np.ndarray
    hto_b: np.ndarray
    pf_table: Optional[CellTable]
    relax: FrozenSet[str] = frozenset()


def build_milp(problem: MpcProblem, vertices: Optional[Sequence[Sequence[int]]] = None,
               relax: FrozenSet[str] = frozenset()) -> MpcModel:
    config = problem.config
    settings = problem.settings
    surrogates = problem.surrogates
    grid = surrogates.grid
    params = config.stack
    separator = config.separator
    n_k, n_l = grid.n_i, grid.n_t
    cb, tb = grid.current_breaks, grid.temperature_breaks
    if cb[-1] > params.i_max + 1e-9 or tb[0] < params.t_min - 1e-9 or tb[-1] > params.t_max + 1e-9:
        raise ConfigError("surrogate grid extends beyond the stack's current/temperature box")
    if surrogates.n_stacks != config.n_stacks:
        raise ConfigError(f"surrogates fit for {surrogates.n_stacks} stacks, plant has {config.n_stacks}")

    signs = _vertex_signs(problem, vertices)
    hto_a, hto_b = hto_hour_map(surrogates, config, settings.hto_gain_point)
    hto_cap = separator.hto_max - settings.hto_margin
    if "hto" in relax:
        hto_cap = 100.0
    pf_target = min(config.pf_min + settings.pf_margin, 1.0)
    kappa = math.tan(math.acos(pf_target))
    use_cone = settings.pf_mode in ("hourly", "both") and "pf" not in relax
    use_average = settings.pf_mode in ("average", "both") and "pf" not in relax
    pf_table = None
    if use_average:
        pf_table = fit_cell_table("pf_term", surrogates.pf.stack_term, grid)

    t_floor = min(params.t_amb, min(problem.temperatures)) - 1.0
    big_t = params.t_max - t_floor + 1.0
    p_cool_max = config.p_cool_max
    r_off = separator.off_purge_rate
    loss_coef = 1.0 / params.r_h
    penalty = settings.balance_penalty

    model = MilpModel(f"mpc_h{problem.hour}")
    cells: List[List[_StackHour]] = []

    for t in range(problem.horizon):
        row_cells = []
        for b in range(config.n_stacks):
            tag = f"{b},{t}"
            delta = model.add_var(f"delta[{tag}]", binary=True)
            sigma = [model.add_var(f"sigma[{tag},{k}]", binary=True) for k in range(n_k)]
            lam = [model.add_var(f"lambda[{tag},{l}]", binary=True) for l in range(n_l)]
            cur = [model.add_var(f"I[{tag},{k}]", 0.0, cb[k + 1]) for k in range(n_k)]
            tseg = [model.add_var(f"Tseg[{tag},{l}]", 0.0, tb[l + 1]) for l in range(n_l)]
            for k in range(n_k):
                model.add_constraint({cur[k]: 1.0, sigma[k]: -cb[k + 1]}, Sense.LE, 0.0, f"Iub[{tag},{k}]")
                model.add_constraint({cur[k]: 1.0, sigma[k]: -cb[k]}, Sense.GE, 0.0, f"Ilb[{tag},{k}]")
            for l in range(n_l):
                model.add_constraint({tseg[l]: 1.0, lam[l]: -tb[l + 1]}, Sense.LE, 0.0, f"Tub[{tag},{l}]")
                model.add_constraint({tseg[l]: 1.0, lam[l]: -tb[l]}, Sense.GE, 0.0, f"Tlb[{tag},{l}]")
            model.add_constraint({**{s: 1.0 for s in sigma}, delta: -1.0}, Sense.EQ, 0.0, f"onesigma[{tag}]")
            model.add_constraint({**{s: 1.0 for s in lam}, delta: -1.0}, Sense.EQ, 0.0, f"onelambda[{tag}]")

            z = [[0] * n_l for _ in range(n_k)]
            w = [[0] * n_l for _ in range(n_k)]
            v = [[0] * n_l for _ in range(n_k)]
            for k in range(n_k):
                for l in range(n_l):
                    z[k][l] = model.add_var(f"z[{tag},{k},{l}]", 0.0, 1.0)
                    product_bin_bin(model, z[k][l], sigma[k], lam[l])
                    w[k][l] = model.add_var(f"w[{tag},{k},{l}]", 0.0, cb[k + 1])
                    product_bin_cont(model, w[k][l], lam[l], cur[k], 0.0, cb[k + 1])
                    v[k][l] = model.add_var(f"v[{tag},{k},{l}]", 0.0, tb[l + 1])
                    product_bin_cont(model, v[k][l], sigma[k], tseg[l], 0.0, tb[l + 1])

            power = _cell_expr(surrogates.power, w, v, z)
            reactive = _cell_expr(surrogates.reactive, w, v, z)
            heat = _cell_expr(surrogates.heat, w, v, z)
            pf_term = _cell_expr(pf_table, w, v, z) if pf_table is not None else {}

            for k in range(n_k):
                model.add_objective_term(cur[k], float(surrogates.production.slopes[k]) - settings.current_penalty)
                model.add_objective_term(sigma[k], float(surrogates.production.intercepts[k]))

            # operating temperature
            temperature = model.add_var(f"T[{tag}]", t_floor, params.t_max)
            link = {temperature: 1.0, **{s: -1.0 for s in tseg}}
            model.add_constraint({**link, delta: big_t}, Sense.LE, big_t, f"Tlink_ub[{tag}]")
            model.add_constraint({**link, delta: -big_t}, Sense.GE, -big_t, f"Tlink_lb[{tag}]")

            p_cool = model.add_var(f"Pcool[{tag}]", 0.0, p_cool_max)
            if "thermal" not in relax:
                thermal = {temperature: params.c_h, p_cool: 1.0}
                _merge(thermal, heat, -1.0)
                rhs = params.t_amb * loss_coef
                carry = params.c_h - loss_coef
                if t == 0:
                    rhs += carry * problem.temperatures[b]
                else:
                    _add(thermal, cells[t - 1][b].temperature, -carry)
                model.add_constraint(thermal, Sense.EQ, rhs, f"thermal[{tag}]")

            hto = model.add_var(f"HTO[{tag}]", 0.0, hto_cap)
            recursion = {hto: 1.0, delta: -r_off}
            if t == 0:
                h0 = problem.htos[b]
                for k in range(n_k):
                    _add(recursion, sigma[k], -((hto_a[k] - 1.0) * h0 + hto_b[k]))
                model.add_constraint(recursion, Sense.GE, h0 - r_off, f"hto[{tag}]")
            else:
                prev = cells[t - 1][b].hto
                _add(recursion, prev, -1.0)
                for k in range(n_k):
                    h_k = model.add_var(f"Hprod[{tag},{k}]", 0.0, hto_cap)
                    product_bin_cont(model, h_k, sigma[k], prev, 0.0, hto_cap)
                    _add(recursion, h_k, -(hto_a[k] - 1.0))
                    _add(recursion, sigma[k], -hto_b[k])
                model.add_constraint(recursion, Sense.GE, -r_off, f"hto[{tag}]")

            row_cells.append(_StackHour(
                delta=delta, sigma=sigma, lam=lam, cur=cur, temp_segments=tseg, z=z, w=w, v=v,
                temperature=temperature, p_cool=p_cool, hto=hto, power=power, reactive=reactive,
                pf_term=pf_term,
            ))
        cells.append(row_cells)

        forecast = problem.forecast[t]
        compensation = {c.delta: -config.compensation_var for c in row_cells}
        _balance_rows(model, row_cells, [c.power for c in row_cells], forecast, penalty, f"nominal[{t}]")
        if use_cone:
            _cone_rows(model, [c.power for c in row_cells], [c.reactive for c in row_cells], compensation,
                       kappa, f"pf[{t}]")

        for sign in signs[t]:
            label = "p" if sign > 0 else "m"
            for b, cell in enumerate(row_cells):
                tag = f"{b},{t},{label}"
                cur_s = [model.add_var(f"Iv[{tag},{k}]", 0.0, cb[k + 1]) for k in range(n_k)]
                w_s = [[0] * n_l for _ in range(n_k)]
                for k in range(n_k):
                    model.add_constraint({cur_s[k]: 1.0, cell.sigma[k]: -cb[k + 1]}, Sense.LE, 0.0, f"Ivub[{tag},{k}]")
                    model.add_constraint({cur_s[k]: 1.0, cell.sigma[k]: -cb[k]}, Sense.GE, 0.0, f"Ivlb[{tag},{k}]")
                    for l in range(n_l):
                        w_s[k][l] = model.add_var(f"wv[{tag},{k},{l}]", 0.0, cb[k + 1])
                        product_bin_cont(model, w_s[k][l], cell.lam[l], cur_s[k], 0.0, cb[k + 1])
                cell.vertex_power[sign] = _cell_expr(surrogates.power, w_s, cell.v, cell.z)
                cell.vertex_reactive[sign] = _cell_expr(surrogates.reactive, w_s, cell.v, cell.z)
                if pf_table is not None:
                    cell.vertex_pf_term[sign] = _cell_expr(pf_table, w_s, cell.v, cell.z)
            target = forecast * (1.0 + sign * problem.alpha)
            _balance_rows(model, row_cells, [c.vertex_power[sign] for c in row_cells], target,
                          penalty / len(signs[t]), f"vertex[{t},{label}]")
            if use_cone:
                _cone_rows(model, [c.vertex_power[sign] for c in row_cells],
                           [c.vertex_reactive[sign] for c in row_cells], compensation, kappa, f"pfv[{t},{label}]")

    if use_average:
        _average_pf_rows(model, problem, cells, signs, pf_target)
    if settings.min_down_hours > 1 and "min_down" not in relax:
        _min_down_rows(model, problem, cells)

    logger.debug("Built %r", model)
    return MpcModel(model=model, problem=problem, cells=cells, signs=signs, hto_a=hto_a, hto_b=hto_b,
                    pf_table=pf_table, relax=frozenset(relax))


def _balance_rows(model: MilpModel, row_cells, power_exprs, target: float, penalty: float, name: str) -> None:
    under = model.add_var(f"under[{name}]", 0.0)
    over = model.add_var(f"over[{name}]", 0.0)
    row: Dict[int, float] = {under: 1.0, over: -1.0}
    for expr in power_exprs:
        _merge(row, expr)
    model.add_constraint(row, Sense.EQ, target, f"balance[{name}]")
    model.add_objective_term(under, -penalty)
    model.add_objective_term(over, -penalty)


def _cone_rows(model: MilpModel, power_exprs, reactive_exprs, compensation: Dict[int, float], kappa: float,
               name: str) -> None:
    """|ΣQ − Qc·Σδ| ≤ tan(arccos PF)·ΣP."""
    upper: Dict[int, float] = dict(compensation)
    lower: Dict[int, float] = dict(compensation)
    for p_expr, q_expr in zip(power_exprs, reactive_exprs):
        _merge(upper, q_expr)
        _merge(upper, p_expr, -kappa)
        _merge(lower, q_expr)
        _merge(lower, p_expr, kappa)
    model.add_constraint(upper, Sense.LE, 0.0, f"{name}_lag")
    model.add_constraint(lower, Sense.GE, 0.0, f"{name}_lead")


def _average_pf_rows(model: MilpModel, problem: MpcProblem, cells, signs, pf_target: float) -> None:
    """Worst-vertex horizon-average PF of the polynomial surrogate ≥ PF_min."""
    intercept = problem.surrogates.pf.intercept
    total: Dict[int, float] = {}
    for t in range(problem.horizon):
        worst = model.add_var(f"pfmin[{t}]", -10.0, 10.0)
        branches = [[c.pf_term for c in cells[t]]] + [[c.vertex_pf_term[s] for c in cells[t]] for s in signs[t]]
        for i, terms in enumerate(branches):
            row = {worst: 1.0}
            for expr in terms:
                _merge(row, expr, -1.0)
            model.add_constraint(row, Sense.LE, intercept, f"pfavg[{t},{i}]")
        total[worst] = 1.0
    model.add_constraint(total, Sense.GE, problem.horizon * pf_target, "pf_average")


def _min_down_rows(model: MilpModel, problem: MpcProblem, cells) -> None:
    down = problem.settings.min_down_hours
    for b in range(problem.config.n_stacks):
        already_off = problem.off_hours[b] if problem.off_hours else 0
        if not problem.deltas[b] and 0 < already_off < down:
            for t in range(min(down - already_off, problem.horizon)):
                model.add_constraint({cells[t][b].delta: 1.0}, Sense.EQ, 0.0, f"mindown_carry[{b},{t}]")
        for t in range(problem.horizon):
            prev = cells[t - 1][b].delta if t > 0 else None
            for j in range(1, down):
                if t + j >= problem.horizon:
                    break
                row = {cells[t + j][b].delta: 1.0, cells[t][b].delta: -1.0}
                rhs = 1.0
                if prev is None:
                    rhs -= problem.deltas[b]
                else:
                    _add(row, prev, 1.0)
                model.add_constraint(row, Sense.LE, rhs, f"mindown[{b},{t},{j}]")


def _extract(built: MpcModel, solution: MilpSolution, elapsed: float) -> HourlySchedule:
    problem = built.problem
    config = problem.config
    x = solution.x
    plans = []
    predicted, nominal, surrogate_pf, residual = [], [], [], []
    htos = list(problem.htos)
    production = 0.0
    for t, row_cells in enumerate(built.cells):
        hour_plans = []
        deltas = []
        p_nominal, q_nominal = [], []
        for b, cell in enumerate(row_cells):
            delta = int(round(x[cell.delta]))
            deltas.append(delta)
            current = float(sum(x[j] for j in cell.cur)) if delta else 0.0
            segment = int(np.argmax([x[s] for s in cell.sigma])) if delta else -1
            if delta:
                hto = built.hto_a[segment] * htos[b] + built.hto_b[segment]
            else:
                hto = max(0.0, htos[b] - config.separator.off_purge_rate)
            htos[b] = hto
            power = _value(cell.power, x)
            reactive = _value(cell.reactive, x)
            p_nominal.append(power)
            q_nominal.append(reactive)
            hour_plans.append(StackHourPlan(
                stack=b,
                offset=t,
                delta=delta,
                current=max(current, 0.0),
                temperature=float(x[cell.temperature]),
                p_cool=float(x[cell.p_cool]),
                hto=float(hto),
                power=power,
                reactive=reactive,
                segment=segment,
            ))
            production += float(problem.surrogates.production.slopes[segment] * current
                                + problem.surrogates.production.intercepts[segment]) if delta else 0.0
        qc = config.bus_compensation(deltas)
        pf_values = [_bus_pf(p_nominal, q_nominal, qc)]
        for sign in built.signs[t]:
            pf_values.append(_bus_pf([_value(c.vertex_power[sign], x) for c in row_cells],
                                     [_value(c.vertex_reactive[sign], x) for c in row_cells], qc))
        nominal.append(pf_values[0])
        predicted.append(min(pf_values))
        residual.append(abs(sum(p_nominal) - problem.forecast[t]))
        if all(deltas):
            surrogate_pf.append(float(problem.surrogates.pf.evaluate(
                np.array([p.current for p in hour_plans]), np.array([p.temperature for p in hour_plans]))))
        else:
            surrogate_pf.append(float("nan"))
        plans.append(tuple(hour_plans))

    return HourlySchedule(
        hour=problem.hour,
        plans=tuple(plans),
        predicted_pf=tuple(predicted),
        nominal_pf=tuple(nominal),
        surrogate_pf=tuple(surrogate_pf),
        objective=float(solution.objective),
        production=production,
        balance_residual=tuple(residual),
        status=solution.status.value,
        solve_seconds=elapsed,
        nodes=solution.nodes,
        forecast=tuple(problem.forecast),
    )


def _bus_pf(powers: Sequence[float], reactives: Sequence[float], qc: float) -> float:
    if sum(powers) <= 0.0:
        return 1.0
    return cluster_pf(powers, reactives, qc)


def _diagnose(problem: MpcProblem, solver: BaseMilpSolver, vertices) -> List[str]:
    binding = []
    for group in CONSTRAINT_GROUPS:
        relaxed = build_milp(problem, vertices, relax=frozenset({group}))
        if solver.solve(relaxed.model).has_solution:
            binding.append(group)
    return binding


def solve_robust(problem: MpcProblem, solver: BaseMilpSolver, vertices=None,
                 dump_path: Optional[Path] = None) -> HourlySchedule:
    built = build_milp(problem, vertices)
    if dump_path is not None:
        dump_lp(built.model, dump_path)
        logger.info("MILP for hour %d written to %s", problem.hour, dump_path)
    started = time.perf_counter()
    solution = solver.solve(built.model)
    elapsed = time.perf_counter() - started
    logger.info("Hour %d: %s in %.2fs (%d nodes), objective %.4f",
                problem.hour, solution.status.value, elapsed, solution.nodes, solution.objective)

    if not solution.has_solution:
        binding = _diagnose(problem, solver, vertices) if solution.status == SolveStatus.INFEASIBLE else []
        raise ControllerInfeasibleError(problem.hour, binding, detail=solution.status.value)
    if solution.status != SolveStatus.OPTIMAL:
        logger.warning("Hour %d: using incumbent from %s solve (bound %.4f)",
                       problem.hour, solution.status.value, solution.bound)

    schedule = _extract(built, solution, elapsed)
    _check_schedule(problem, schedule)
    return schedule


def _check_schedule(problem: MpcProblem, schedule: HourlySchedule, tol: float = 1e-6) -> None:
    """Current and HTO bounds are hard; temperature and PF drift is only logged."""
    config = problem.config
    params = config.stack
    for hour_plans in schedule.plans:
        for plan in hour_plans:
            if not -tol <= plan.current <= params.i_max * plan.delta + tol:
                raise InfeasibleControlError(
                    plan.stack, "current_box",
                    f"hour {problem.hour + plan.offset}: scheduled {plan.current:.1f} A outside [0, {params.i_max * plan.delta:.0f}] A",
                )
            if plan.delta and not params.t_min - tol <= plan.temperature <= params.t_max + tol:
                logger.warning("Stack %d: scheduled temperature %.2f °C outside box", plan.stack, plan.temperature)
            if plan.hto > config.separator.hto_max + tol:
                raise InfeasibleControlError(
                    plan.stack, "hto_max",
                    f"hour {problem.hour + plan.offset}: predicted HTO {plan.hto:.4f}% above {config.separator.hto_max}%",
                )
    if problem.settings.pf_mode in ("hourly", "both"):
        for t, pf in enumerate(schedule.predicted_pf):
            if pf < config.pf_min - tol:
                logger.warning("Hour %d: predicted worst-vertex PF %.4f below %.2f", problem.hour + t, pf, config.pf_min)


def receding_horizon_step(schedule: HourlySchedule, measured: PlantState, forecast: Sequence[float],
                          previous: MpcProblem) -> MpcProblem:
    """Next hour's problem, warm-started from the measured (not predicted) state."""
    if measured.hour != schedule.hour + 1 or measured.interval != 1:
        raise ClockSkewError(
            f"measurement at (h={measured.hour}, s={measured.interval}) does not start hour {schedule.hour + 1}"
        )
    executed = schedule.first_hour()
    previous_off = previous.off_hours or tuple(0 for _ in executed)
    off_hours = tuple(0 if plan.delta else previous_off[plan.stack] + 1 for plan in executed)
    return replace(
        previous,
        hour=measured.hour,
        forecast=tuple(float(p) for p in forecast),
        temperatures=tuple(s.temperature for s in measured.stacks),
        htos=tuple(s.hto for s in measured.stacks),
        deltas=tuple(plan.delta for plan in executed),
        off_hours=off_hours,
    )


class ProposedController:
    """Hour-ahead robust MPC bound to one plant, one surrogate bundle and one solver."""

    def __init__(self, config: PlantConfig, surrogates: Surrogates, solver: BaseMilpSolver,
                 settings: Optional[MpcSettings] = None, dump_dir: Optional[Path] = None):
        self.config = config
        self.surrogates = surrogates
        self.solver = solver
        self.settings = settings or MpcSettings()
        self.dump_dir = Path(dump_dir) if dump_dir else None
        self.problem: Optional[MpcProblem] = None
        self.schedule: Optional[HourlySchedule] = None
        self.solve_times: List[float] = []

    def plan(self, state: PlantState, forecast: Sequence[float]) -> HourlySchedule:
        if self.schedule is None or self.problem is None:
            self.problem = MpcProblem(
                hour=state.hour,
                forecast=tuple(float(p) for p in forecast),
                temperatures=tuple(s.temperature for s in state.stacks),
                htos=tuple(s.hto for s in state.stacks),
                deltas=tuple(s.delta for s in state.stacks),
                config=self.config,
                surrogates=self.surrogates,
                settings=self.settings,
                off_hours=tuple(0 for _ in state.stacks),
            )
        else:
            self.problem = receding_horizon_step(self.schedule, state, forecast, self.problem)
        dump_path = self.dump_dir / f"mpc_hour_{state.hour:03d}.lp" if self.dump_dir else None
        self.schedule = solve_robust(self.problem, self.solver, dump_path=dump_path)
        self.solve_times.append(self.schedule.solve_seconds)
        return self.schedule
