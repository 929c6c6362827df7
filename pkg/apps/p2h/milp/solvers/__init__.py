from p2h.milp.solvers.base import BaseMilpSolver
from p2h.milp.solvers.highs import HighsSolver
from p2h.milp.solvers.native import NativeSolver


# Registry of available solver backends
SOLVER_REGISTRY = {
    'native': NativeSolver,
    'highs': HighsSolver,
}


def get_solver(backend: str, **options) -> BaseMilpSolver:
    """
    Factory function returning a configured solver backend.

    Raises:
        ValueError: If the backend is not registered
    """
    solver_class = SOLVER_REGISTRY.get(backend.lower())
    if not solver_class:
        raise ValueError(
            f"Unsupported solver backend: {backend}. "
            f"Available backends: {', '.join(SOLVER_REGISTRY.keys())}"
        )
    return solver_class(**options)


def solver_from_section(section) -> BaseMilpSolver:
    """Build the backend described by a SolverSection of the plant file."""
    options = section.model_dump()
    backend = options.pop('backend')
    return get_solver(backend, **options)
