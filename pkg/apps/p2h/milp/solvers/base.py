from abc import ABC, abstractmethod

from p2h.milp.model import MilpModel, MilpSolution


class BaseMilpSolver(ABC):
    """
    Abstract solver backend. Controllers only talk to this interface, so a
    backend can be swapped without touching model construction.
    """

    # Backend identifier - must be set by subclasses
    name: str = None

    def __init__(self, feasibility_tol: float = 1e-7, integrality_tol: float = 1e-6, gap_tol: float = 1e-6,
                 max_iterations: int = 50000, node_limit: int = 20000, time_limit: float = 120.0):
        if not self.name:
            raise ValueError(f"{self.__class__.__name__} must define a 'name' attribute")
        self.feasibility_tol = feasibility_tol
        self.integrality_tol = integrality_tol
        self.gap_tol = gap_tol
        self.max_iterations = max_iterations
        self.node_limit = node_limit
        self.time_limit = time_limit

    @abstractmethod
    def solve(self, model: MilpModel) -> MilpSolution:
        """Solve the mixed-integer model (maximization)."""
        pass

    def solve_relaxation(self, model: MilpModel) -> MilpSolution:
        return self.solve(model.relaxed())

    def __repr__(self):
        return f"<{self.__class__.__name__} gap={self.gap_tol} nodes<={self.node_limit}>"
