"""
Two-phase primal simplex on a dense tableau.

Pricing is Dantzig (largest reduced cost) until a run of degenerate pivots,
after which Bland's rule (lowest eligible index, lowest leaving index on
ratio ties) takes over for the rest of the solve, so the method cannot cycle.
"""
import logging
from dataclasses import dataclass
from typing import List, Mapping, Optional, Tuple

import numpy as np

from p2h.milp.model import MilpModel, MilpSolution, Sense, SolveStatus

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
DEGENERATE_RUN = 20


@dataclass
class _StandardForm:
    """max c'x' s.t. A'x' = b' (b' >= 0), x' >= 0, with x = shift + M x'."""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c0: float
    shift: np.ndarray
    mapping: np.ndarray
    n_struct: int
    slack_rows: List[int]
    artificial_cols: List[int]
    basis: List[int]
    row_sign: np.ndarray
    n_model_rows: int


def _standard_form(model: MilpModel, lb: np.ndarray, ub: np.ndarray) -> Optional[_StandardForm]:
    n = model.n_vars
    columns: List[Tuple[int, float]] = []
    shift = np.zeros(n)
    upper_rows: List[Tuple[int, float]] = []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if lo > hi:
            return None
        if np.isfinite(lo):
            shift[j] = lo
            columns.append((j, 1.0))
            if np.isfinite(hi):
                upper_rows.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))

    n_struct = len(columns)
    mapping = np.zeros((n, n_struct))
    for col, (j, sign) in enumerate(columns):
        mapping[j, col] = sign

    matrix, senses, rhs = model.row_matrix(dense=True)
    c_orig = model.objective_vector()
    rows_a = matrix @ mapping if model.n_rows else np.zeros((0, n_struct))
    rows_b = rhs - (matrix @ shift if model.n_rows else 0.0)
    senses = list(senses)

    if upper_rows:
        extra = np.zeros((len(upper_rows), n_struct))
        for r, (col, bound) in enumerate(upper_rows):
            extra[r, col] = 1.0
        rows_a = np.vstack([rows_a, extra])
        rows_b = np.concatenate([rows_b, [bound for _, bound in upper_rows]])
        senses += [Sense.LE] * len(upper_rows)

    m = rows_a.shape[0]
    row_sign = np.ones(m)
    for i in range(m):
        if rows_b[i] < 0:
            rows_a[i] = -rows_a[i]
            rows_b[i] = -rows_b[i]
            row_sign[i] = -1.0
            if senses[i] == Sense.LE:
                senses[i] = Sense.GE
            elif senses[i] == Sense.GE:
                senses[i] = Sense.LE

    n_slack = sum(1 for s in senses if s != Sense.EQ)
    n_art = sum(1 for s in senses if s != Sense.LE)
    total = n_struct + n_slack + n_art
    a = np.zeros((m, total))
    a[:, :n_struct] = rows_a
    basis = [-1] * m
    slack_rows = []
    artificial_cols = []
    s_col = n_struct
    art_col = n_struct + n_slack
    for i, sense in enumerate(senses):
        if sense == Sense.LE:
            a[i, s_col] = 1.0
            basis[i] = s_col
            slack_rows.append(i)
            s_col += 1
        elif sense == Sense.GE:
            a[i, s_col] = -1.0
            s_col += 1
            a[i, art_col] = 1.0
            basis[i] = art_col
            artificial_cols.append(art_col)
            art_col += 1
        else:
            a[i, art_col] = 1.0
            basis[i] = art_col
            artificial_cols.append(art_col)
            art_col += 1

    c = np.zeros(total)
    c[:n_struct] = c_orig @ mapping
    c0 = float(c_orig @ shift) + model.objective_constant
    return _StandardForm(a, rows_b, c, c0, shift, mapping, n_struct, slack_rows, artificial_cols,
                         basis, row_sign, model.n_rows)


class _Tableau:
    def __init__(self, a: np.ndarray, b: np.ndarray, basis: List[int]):
        m, n = a.shape
        self.t = np.zeros((m + 1, n + 1))
        self.t[:m, :n] = a
        self.t[:m, n] = b
        self.basis = list(basis)
        self.m = m
        self.n = n
        self.iterations = 0
        self._degenerate = 0
        self._bland = False

    def set_objective(self, c: np.ndarray) -> None:
        row = np.zeros(self.n + 1)
        row[:self.n] = c
        for i, j in enumerate(self.basis):
            if row[j] != 0.0:
                row -= row[j] * self.t[i]
        self.t[self.m] = row

    @property
    def objective(self) -> float:
        return -self.t[self.m, self.n]

    def pivot(self, r: int, e: int) -> None:
        t = self.t
        t[r] /= t[r, e]
        column = t[:, e].copy()
        column[r] = 0.0
        nz = np.nonzero(np.abs(column) > 0.0)[0]
        if nz.size:
            t[nz] -= np.outer(column[nz], t[r])
        self.basis[r] = e

    def _entering(self, allowed: np.ndarray, tol: float) -> int:
        reduced = self.t[self.m, :self.n]
        eligible = np.nonzero(allowed & (reduced > tol))[0]
        if eligible.size == 0:
            return -1
        if self._bland:
            return int(eligible[0])
        return int(eligible[np.argmax(reduced[eligible])])

    def _leaving(self, e: int) -> int:
        col = self.t[:self.m, e]
        rhs = self.t[:self.m, self.n]
        candidates = np.nonzero(col > PIVOT_TOL)[0]
        if candidates.size == 0:
            return -1
        ratios = rhs[candidates] / col[candidates]
        best = ratios.min()
        ties = candidates[ratios <= best + 1e-12 * max(1.0, abs(best))]
        if len(ties) == 1:
            return int(ties[0])
        # Bland: leaving variable with the lowest index
        return int(min(ties, key=lambda i: self.basis[i]))

    def run(self, allowed: np.ndarray, tol: float, max_iterations: int) -> SolveStatus:
        while True:
            if self.iterations >= max_iterations:
                return SolveStatus.ITER_LIMIT
            e = self._entering(allowed, tol)
            if e < 0:
                return SolveStatus.OPTIMAL
            r = self._leaving(e)
            if r < 0:
                return SolveStatus.UNBOUNDED
            step = self.t[r, self.n] / self.t[r, e]
            if step <= 1e-12:
                self._degenerate += 1
                if self._degenerate >= DEGENERATE_RUN and not self._bland:
                    logger.debug("Switching to Bland's rule after %d degenerate pivots", self._degenerate)
                    self._bland = True
            else:
                self._degenerate = 0
            self.pivot(r, e)
            self.iterations += 1


def solve_lp(model: MilpModel, bounds: Optional[Mapping[int, Tuple[float, float]]] = None,
             feasibility_tol: float = 1e-7, max_iterations: int = 50000) -> MilpSolution:
    """LP relaxation of ``model`` (binaries treated as [0, 1] continuous)."""
    lb, ub = model.bounds(bounds)
    form = _standard_form(model, lb, ub)
    if form is None:
        return MilpSolution(status=SolveStatus.INFEASIBLE, message="crossing variable bounds")

    tableau = _Tableau(form.a, form.b, form.basis)
    n_total = form.a.shape[1]
    artificial = np.zeros(n_total, dtype=bool)
    artificial[form.artificial_cols] = True

    if form.artificial_cols:
        phase_one = np.zeros(n_total)
        phase_one[artificial] = -1.0
        tableau.set_objective(phase_one)
        status = tableau.run(np.ones(n_total, dtype=bool), feasibility_tol * 1e-2, max_iterations)
        if status == SolveStatus.ITER_LIMIT:
            return MilpSolution(status=status, iterations=tableau.iterations, message="phase one iteration limit")
        if tableau.objective < -feasibility_tol * max(1.0, np.abs(form.b).max(initial=0.0)):
            return MilpSolution(status=SolveStatus.INFEASIBLE, iterations=tableau.iterations,
                                message=f"phase one residual {-tableau.objective:.3g}")
        _drive_out_artificials(tableau, artificial)

    tableau.set_objective(form.c)
    status = tableau.run(~artificial, feasibility_tol * 1e-2, max_iterations)
    if status != SolveStatus.OPTIMAL:
        return MilpSolution(status=status, iterations=tableau.iterations)

    x_std = np.zeros(n_total)
    for i, j in enumerate(tableau.basis):
        x_std[j] = tableau.t[i, tableau.n]
    x = form.shift + form.mapping @ x_std[:form.n_struct]
    objective = tableau.objective + form.c0

    duals, reduced, residual = _dual_certificate(form, tableau, x_std, artificial)
    return MilpSolution(
        status=SolveStatus.OPTIMAL,
        x=x,
        objective=float(objective),
        bound=float(objective),
        nodes=0,
        iterations=tableau.iterations,
        duals=duals,
        reduced_costs=reduced,
        cs_residual=residual,
    )


def _drive_out_artificials(tableau: _Tableau, artificial: np.ndarray) -> None:
    """Pivot zero-level artificials out of the basis; rows with no other entry are redundant."""
    redundant = []
    for i, j in enumerate(list(tableau.basis)):
        if not artificial[j]:
            continue
        row = tableau.t[i, :tableau.n]
        candidates = np.nonzero((~artificial) & (np.abs(row) > PIVOT_TOL))[0]
        if candidates.size:
            tableau.pivot(i, int(candidates[0]))
        else:
            redundant.append(i)
    for i in redundant:
        # keep the row but pin it: artificial stays basic at zero and never re-enters
        tableau.t[i, tableau.n] = 0.0


def _dual_certificate(form: _StandardForm, tableau: _Tableau, x_std: np.ndarray, artificial: np.ndarray):
    """Row duals y from c_B·B⁻¹, reduced costs c − Aᵀy and the complementary-slackness residual."""
    basis = tableau.basis
    b_matrix = form.a[:, basis]
    c_b = np.where(artificial[basis], 0.0, form.c[basis])
    y, *_ = np.linalg.lstsq(b_matrix.T, c_b, rcond=None)
    reduced = form.c - form.a.T @ y
    reduced[artificial] = 0.0
    residual = float(np.max(np.abs(reduced * x_std), initial=0.0))
    model_duals = (y * form.row_sign)[:form.n_model_rows]
    return model_duals, reduced[:form.n_struct], residual
