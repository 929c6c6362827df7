"""
MILP container: named variables with bounds, sparse linear rows, a
maximization objective, and the solution record shared by every backend.
"""
import copy
import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
from scipy import sparse

INF = math.inf


class VarType(str, enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITER_LIMIT = "IterLimit"
    NODE_LIMIT = "NodeLimit"


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = INF
    vtype: VarType = VarType.CONTINUOUS

    @property
    def is_binary(self) -> bool:
        return self.vtype == VarType.BINARY


@dataclass
class Constraint:
    name: str
    coeffs: Dict[int, float]
    sense: Sense
    rhs: float


@dataclass
class MilpSolution:
    status: SolveStatus
    x: Optional[np.ndarray] = None
    objective: float = -INF
    bound: float = INF
    nodes: int = 0
    iterations: int = 0
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    cs_residual: Optional[float] = None
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    @property
    def has_solution(self) -> bool:
        return self.x is not None


class MilpModel:
    """Maximize c·x + c0 subject to linear rows and variable bounds."""

    def __init__(self, name: str = "p2h"):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self.objective_constant = 0.0
        self._by_name: Dict[str, int] = {}

    # -- building -----------------------------------------------------
    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, binary: bool = False) -> int:
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if binary:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if math.isnan(lb) or math.isnan(ub):
            raise ValueError(f"NaN bound on {name!r}")
        index = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), VarType.BINARY if binary else VarType.CONTINUOUS))
        self._by_name[name] = index
        return index

    def add_constraint(self, coeffs: Mapping[int, float], sense, rhs: float, name: Optional[str] = None) -> int:
        sense = Sense(sense)
        clean: Dict[int, float] = {}
        for j, a in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise IndexError(f"constraint references unknown variable {j}")
            if math.isnan(a):
                raise ValueError(f"NaN coefficient on {self.variables[j].name}")
            if a != 0.0:
                clean[j] = clean.get(j, 0.0) + float(a)
        if math.isnan(rhs):
            raise ValueError("NaN right-hand side")
        index = len(self.constraints)
        self.constraints.append(Constraint(name or f"r{index}", clean, sense, float(rhs)))
        return index

    def set_objective(self, coeffs: Mapping[int, float], constant: float = 0.0) -> None:
        self.objective = {}
        self.objective_constant = float(constant)
        for j, c in coeffs.items():
            self.add_objective_term(j, c)

    def add_objective_term(self, j: int, coef: float) -> None:
        if math.isnan(coef):
            raise ValueError("NaN objective coefficient")
        self.objective[j] = self.objective.get(j, 0.0) + float(coef)

    # -- queries ------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    @property
    def binaries(self) -> List[int]:
        return [j for j, v in enumerate(self.variables) if v.is_binary]

    def index(self, name: str) -> int:
        return self._by_name[name]

    def copy(self) -> "MilpModel":
        return copy.deepcopy(self)

    def relaxed(self) -> "MilpModel":
        model = self.copy()
        for var in model.variables:
            var.vtype = VarType.CONTINUOUS
        return model

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, v in self.objective.items():
            c[j] = v
        return c

    def bounds(self, overrides: Optional[Mapping[int, Tuple[float, float]]] = None) -> Tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        for j, (lo, hi) in (overrides or {}).items():
            lb[j], ub[j] = lo, hi
        return lb, ub

    def row_matrix(self, dense: bool = False):
        """Constraint matrix in row order, with senses and right-hand sides."""
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                rows.append(i)
                cols.append(j)
                vals.append(a)
        matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_vars))
        senses = [con.sense for con in self.constraints]
        rhs = np.array([con.rhs for con in self.constraints], dtype=float)
        return (matrix.toarray() if dense else matrix), senses, rhs

    def evaluate(self, x: Iterable[float]) -> float:
        x = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float)
        return float(self.objective_vector() @ x + self.objective_constant)

    def violations(self, x, tol: float = 1e-7, integrality_tol: float = 1e-6) -> List[str]:
        """Names of rows, bounds and integrality requirements that x breaks."""
        x = np.asarray(x, dtype=float)
        broken = []
        for j, var in enumerate(self.variables):
            if x[j] < var.lb - tol or x[j] > var.ub + tol:
                broken.append(f"bound:{var.name}")
            if var.is_binary and min(abs(x[j]), abs(x[j] - 1.0)) > integrality_tol:
                broken.append(f"integrality:{var.name}")
        for con in self.constraints:
            lhs = sum(a * x[j] for j, a in con.coeffs.items())
            scale = max(1.0, abs(con.rhs))
            if con.sense == Sense.LE and lhs > con.rhs + tol * scale:
                broken.append(con.name)
            elif con.sense == Sense.GE and lhs < con.rhs - tol * scale:
                broken.append(con.name)
            elif con.sense == Sense.EQ and abs(lhs - con.rhs) > tol * scale:
                broken.append(con.name)
        return broken

    def value(self, solution: MilpSolution, name: str) -> float:
        return float(solution.x[self.index(name)])

    def __repr__(self):
        return f"<MilpModel {self.name}: {self.n_vars} vars ({len(self.binaries)} binary), {self.n_rows} rows>"
