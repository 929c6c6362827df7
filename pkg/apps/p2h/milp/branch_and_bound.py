"""
Best-bound branch and bound over binary variables.

Child relaxations are solved when a node is created, so the priority queue
holds exact LP bounds. Ties on the bound go to the node created first.
Branching picks the most fractional binary, lowest index on ties.
"""
import heapq
import itertools
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from p2h.milp.model import MilpModel, MilpSolution, SolveStatus
from p2h.milp.simplex import solve_lp

logger = logging.getLogger(__name__)


def _most_fractional(x: np.ndarray, binaries, integrality_tol: float) -> int:
    best_index, best_score = -1, integrality_tol
    for j in binaries:
        frac = min(x[j] - np.floor(x[j]), np.ceil(x[j]) - x[j])
        if frac > best_score + 1e-15:
            best_index, best_score = j, frac
    return best_index


def _snap(x: np.ndarray, binaries) -> np.ndarray:
    x = x.copy()
    for j in binaries:
        x[j] = float(round(x[j]))
    return x


def solve_milp(model: MilpModel, feasibility_tol: float = 1e-7, integrality_tol: float = 1e-6,
               gap_tol: float = 1e-6, node_limit: int = 20000, max_iterations: int = 50000) -> MilpSolution:
    binaries = model.binaries
    counter = itertools.count()
    heap = []
    incumbent: Optional[np.ndarray] = None
    incumbent_value = -np.inf
    nodes = 0
    iterations = 0

    def evaluate(bounds: Dict[int, Tuple[float, float]]) -> None:
        nonlocal nodes, iterations, incumbent, incumbent_value
        relaxation = solve_lp(model, bounds, feasibility_tol, max_iterations)
        nodes += 1
        iterations += relaxation.iterations
        if relaxation.status == SolveStatus.UNBOUNDED:
            raise _Unbounded()
        if relaxation.status != SolveStatus.OPTIMAL:
            if relaxation.status == SolveStatus.ITER_LIMIT:
                logger.warning("LP iteration limit at node %d; node dropped", nodes)
            return
        if relaxation.objective <= incumbent_value + gap_tol:
            return
        branch_on = _most_fractional(relaxation.x, binaries, integrality_tol)
        if branch_on < 0:
            incumbent = _snap(relaxation.x, binaries)
            incumbent_value = relaxation.objective
            logger.debug("New incumbent %.6f at node %d", incumbent_value, nodes)
            return
        heapq.heappush(heap, (-relaxation.objective, next(counter), bounds, relaxation.x, branch_on))

    try:
        evaluate({})
        while heap:
            neg_bound, _, bounds, _, branch_on = heapq.heappop(heap)
            if -neg_bound <= incumbent_value + gap_tol:
                continue
            if nodes >= node_limit:
                heapq.heappush(heap, (neg_bound, -1, bounds, None, branch_on))
                break
            for value in (0.0, 1.0):
                child = dict(bounds)
                child[branch_on] = (value, value)
                evaluate(child)
    except _Unbounded:
        return MilpSolution(status=SolveStatus.UNBOUNDED, nodes=nodes, iterations=iterations)

    open_bound = max((-item[0] for item in heap), default=-np.inf)
    if heap and open_bound > incumbent_value + gap_tol:
        status = SolveStatus.NODE_LIMIT
        bound = open_bound
    elif incumbent is None:
        return MilpSolution(status=SolveStatus.INFEASIBLE, nodes=nodes, iterations=iterations)
    else:
        status = SolveStatus.OPTIMAL
        bound = incumbent_value

    logger.debug("Branch and bound: %s after %d nodes, objective %.6f, bound %.6f",
                 status.value, nodes, incumbent_value, bound)
    return MilpSolution(
        status=status,
        x=incumbent,
        objective=float(incumbent_value),
        bound=float(bound),
        nodes=nodes,
        iterations=iterations,
    )


class _Unbounded(Exception):
    pass
