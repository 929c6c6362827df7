from p2h.milp.branch_and_bound import solve_milp
from p2h.milp.model import MilpModel, MilpSolution
from p2h.milp.simplex import solve_lp
from p2h.milp.solvers.base import BaseMilpSolver


class NativeSolver(BaseMilpSolver):
    """Dense two-phase simplex with best-bound branch and bound."""
    name = "native"

    def solve(self, model: MilpModel) -> MilpSolution:
        return solve_milp(
            model,
            feasibility_tol=self.feasibility_tol,
            integrality_tol=self.integrality_tol,
            gap_tol=self.gap_tol,
            node_limit=self.node_limit,
            max_iterations=self.max_iterations,
        )

    def solve_relaxation(self, model: MilpModel) -> MilpSolution:
        return solve_lp(model, feasibility_tol=self.feasibility_tol, max_iterations=self.max_iterations)
