import logging

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from p2h.milp.model import MilpModel, MilpSolution, Sense, SolveStatus
from p2h.milp.solvers.base import BaseMilpSolver

logger = logging.getLogger(__name__)

_STATUS = {
    0: SolveStatus.OPTIMAL,
    1: SolveStatus.ITER_LIMIT,
    2: SolveStatus.INFEASIBLE,
    3: SolveStatus.UNBOUNDED,
}


class HighsSolver(BaseMilpSolver):
    """HiGHS through scipy.optimize.milp, for plant-sized horizons."""
    name = "highs"

    def solve(self, model: MilpModel) -> MilpSolution:
        c = -model.objective_vector()
        lb, ub = model.bounds()
        integrality = np.array([1 if v.is_binary else 0 for v in model.variables], dtype=int)
        constraints = []
        if model.n_rows:
            matrix, senses, rhs = model.row_matrix()
            lower = np.array([r if s in (Sense.GE, Sense.EQ) else -np.inf for s, r in zip(senses, rhs)])
            upper = np.array([r if s in (Sense.LE, Sense.EQ) else np.inf for s, r in zip(senses, rhs)])
            constraints.append(LinearConstraint(matrix, lower, upper))

        result = milp(
            c,
            constraints=constraints,
            integrality=integrality,
            bounds=Bounds(lb, ub),
            options={
                "disp": False,
                "time_limit": self.time_limit,
                "mip_rel_gap": self.gap_tol,
                "node_limit": self.node_limit,
            },
        )
        status = _STATUS.get(result.status, SolveStatus.INFEASIBLE)
        if result.status == 4:
            logger.warning("HiGHS reported: %s", result.message)
        x = None if result.x is None else np.asarray(result.x, dtype=float)
        if x is not None:
            for j in model.binaries:
                x[j] = float(round(x[j]))
        objective = -float(result.fun) + model.objective_constant if result.fun is not None else -np.inf
        dual_bound = getattr(result, "mip_dual_bound", None)
        bound = -float(dual_bound) + model.objective_constant if dual_bound is not None else objective
        return MilpSolution(
            status=status,
            x=x,
            objective=objective,
            bound=bound,
            nodes=int(getattr(result, "mip_node_count", 0) or 0),
            message=str(result.message),
        )
