"""
Dense two-phase revised simplex.

Every problem is brought to a canonical minimization with ``>=`` and ``=``
rows, then solved either directly (primal form) or through its dual when the
problem has many more rows than columns, as the coalition LPs do.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from revenue_allocator.ext.errors import LpUsageError, SolverError
from revenue_allocator.ext.tolerances import DEFAULT_LP_SETTINGS, LpSettings

logger = logging.getLogger(__name__)


class Sense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


_RELATION_ALIASES = {
    "<=": "<=", "≤": "<=", "le": "<=",
    "=": "=", "==": "=", "eq": "=",
    ">=": ">=", "≥": ">=", "ge": ">=",
}


@dataclass(eq=False)
class LpProblem:
    sense: Sense
    objective: np.ndarray
    A: np.ndarray
    relations: np.ndarray
    rhs: np.ndarray
    lower_bounds: Optional[np.ndarray] = None

    def __post_init__(self):
        self.sense = Sense(self.sense)
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.shape[0] if self.objective.ndim == 1 else 0
        self.A = np.asarray(self.A, dtype=float)
        if self.A.size == 0:
            self.A = self.A.reshape(0, n)
        relations = np.asarray(self.relations)
        if relations.dtype.kind == "U" and np.isin(relations, ("<=", "=", ">=")).all():
            self.relations = relations.astype("<U2")
        else:
            self.relations = np.asarray([_relation(r) for r in self.relations], dtype="<U2")
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if self.lower_bounds is None:
            self.lower_bounds = np.zeros(n)
        else:
            self.lower_bounds = np.asarray(self.lower_bounds, dtype=float)

    @classmethod
    def from_rows(
        cls,
        sense: Union[Sense, str],
        objective: Sequence[float],
        constraints: Iterable[Tuple[Sequence[float], Union[Relation, str], float]],
        lower_bounds: Optional[Sequence[float]] = None,
    ) -> "LpProblem":
        """
        Build a problem from ``(coefficients, relation, rhs)`` rows.
        :param sense: minimize or maximize
        :param objective: objective coefficients
        :param constraints: iterable of (coefficient vector, relation, rhs)
        :param lower_bounds: (optional) per-variable lower bounds, ``-inf`` for free variables; default 0
        :return: LpProblem
        """
        rows, relations, rhs = [], [], []
        for coeffs, relation, value in constraints:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (len(objective),):
                raise LpUsageError(
                    f"constraint {len(rows)} has {coeffs.size} coefficients, objective has {len(objective)}"
                )
            rows.append(coeffs)
            relations.append(relation)
            rhs.append(value)

        A = np.vstack(rows) if rows else np.zeros((0, len(objective)))
        return cls(sense, objective, A, relations, rhs, lower_bounds)

    @property
    def n_variables(self) -> int:
        return int(self.objective.shape[0])

    @property
    def n_constraints(self) -> int:
        return int(self.A.shape[0])


@dataclass(eq=False)
class LpSolution:
    status: Status
    objective_value: float
    variable_values: np.ndarray
    tight_constraint_flags: np.ndarray
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    max_violation: float = 0.0
    form: str = "primal"

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _relation(value) -> str:
    key = value.value if isinstance(value, Relation) else str(value).strip().lower()
    try:
        return _RELATION_ALIASES[key]
    except KeyError:
        raise LpUsageError(f"unknown constraint relation {value!r}") from None


def _validate(problem: LpProblem):
    c, A = problem.objective, problem.A
    if c.ndim != 1 or c.size == 0:
        raise LpUsageError("objective must be a non-empty vector")
    if A.ndim != 2 or A.shape[1] != c.size:
        raise LpUsageError(f"constraint matrix has shape {A.shape}, expected (m, {c.size})")
    if problem.rhs.shape != (A.shape[0],) or problem.relations.shape != (A.shape[0],):
        raise LpUsageError("rhs and relations must have one entry per constraint row")
    if problem.lower_bounds.shape != (c.size,):
        raise LpUsageError("lower_bounds must have one entry per variable")
    if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(problem.rhs).all()):
        raise LpUsageError("coefficients must be finite")
    if np.isnan(problem.lower_bounds).any() or np.isposinf(problem.lower_bounds).any():
        raise LpUsageError("lower bounds must be finite or -inf")


@dataclass
class _Canonical:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    equality: np.ndarray
    free: np.ndarray
    shift: np.ndarray
    row_sign: np.ndarray
    objective_sign: float


def _canonicalize(problem: LpProblem) -> _Canonical:
    # min c x  s.t.  A x >= b (or = b),  x >= 0 except free columns
    objective_sign = -1.0 if problem.sense is Sense.MAXIMIZE else 1.0
    free = ~np.isfinite(problem.lower_bounds)
    shift = np.where(free, 0.0, problem.lower_bounds)
    row_sign = np.where(problem.relations == "<=", -1.0, 1.0)

    A = problem.A * row_sign[:, None] if (row_sign < 0).any() else problem.A
    b = (problem.rhs - problem.A @ shift if shift.any() else problem.rhs) * row_sign
    return _Canonical(
        c=objective_sign * problem.objective,
        A=A,
        b=b,
        equality=problem.relations == "=",
        free=free,
        shift=shift,
        row_sign=row_sign,
        objective_sign=objective_sign,
    )


@dataclass
class _Outcome:
    status: Status
    w: Optional[np.ndarray] = None
    multipliers: Optional[np.ndarray] = None
    iterations: int = 0


def _pivot(B_inv, x_B, basis, column, r, j, step):
    eta_row = B_inv[r] / column[r]
    B_inv = B_inv - np.outer(column, eta_row)
    B_inv[r] = eta_row
    x_B = x_B - step * column
    x_B[r] = step
    basis[r] = j
    return B_inv, x_B


def _column(M, j):
    """Column j of [M | I]; the identity block holds the artificial variables."""
    if j < M.shape[1]:
        return M[:, j]
    unit = np.zeros(M.shape[0])
    unit[j - M.shape[1]] = 1.0
    return unit


def _basis_matrix(M, basis):
    m, n = M.shape
    structural = basis < n
    B = np.zeros((m, m))
    B[:, structural] = M[:, basis[structural]]
    B[basis[~structural] - n, np.flatnonzero(~structural)] = 1.0
    return B


def _run_phase(M, h, cost, basis, B_inv, allowed, settings: LpSettings):
    tol = settings.tolerances
    m = basis.shape[0]
    x_B = B_inv @ h
    degenerate_streak = 0
    bland = False

    for iteration in range(settings.max_iterations):
        if iteration and iteration % settings.refactor_every == 0:
            B_inv = np.linalg.inv(_basis_matrix(M, basis))
            x_B = B_inv @ h

        y = cost[basis] @ B_inv
        reduced = cost - np.concatenate([y @ M, y])
        candidates = allowed.copy()
        candidates[basis] = False
        improving = candidates & (reduced < -tol.optimality)
        if not improving.any():
            return Status.OPTIMAL, basis, B_inv, iteration

        if bland:
            j = int(np.flatnonzero(improving)[0])
        else:
            j = int(np.argmin(np.where(improving, reduced, np.inf)))

        column = B_inv @ _column(M, j)
        positive = column > tol.pivot
        if not positive.any():
            return Status.UNBOUNDED, basis, B_inv, iteration

        ratios = np.full(m, np.inf)
        ratios[positive] = np.maximum(x_B[positive], 0.0) / column[positive]
        step = ratios.min()
        ties = np.flatnonzero(ratios <= step + tol.pivot)
        r = int(ties[np.argmin(basis[ties])])

        if step <= tol.pivot:
            degenerate_streak += 1
            if not bland and degenerate_streak >= settings.bland_after:
                logger.debug("switching to Bland's rule after %d degenerate pivots", degenerate_streak)
                bland = True
        else:
            degenerate_streak = 0

        B_inv, x_B = _pivot(B_inv, x_B, basis, column, r, j, step)

    raise SolverError(f"simplex did not converge within {settings.max_iterations} pivots")


def _drive_out_artificials(M, h, basis, B_inv, n, settings: LpSettings):
    x_B = B_inv @ h
    for r in range(basis.shape[0]):
        if basis[r] < n:
            continue
        row = B_inv[r] @ M
        candidates = np.flatnonzero(np.abs(row) > settings.tolerances.pivot)
        if candidates.size == 0:
            # redundant row; its artificial stays basic at zero
            continue
        j = int(candidates[0])
        column = B_inv @ M[:, j]
        B_inv, x_B = _pivot(B_inv, x_B, basis, column, r, j, x_B[r] / column[r])
    return basis, B_inv


def _simplex(cost: np.ndarray, M: np.ndarray, h: np.ndarray, settings: LpSettings) -> _Outcome:
    """
    min cost·w  s.t.  M w = h,  w >= 0.
    Multipliers are returned for the rows as given (before sign normalization).
    M is sign-normalized in place.
    """
    tol = settings.tolerances
    m, n = M.shape
    flip = np.where(h < 0, -1.0, 1.0)
    M *= flip[:, None]
    h = h * flip

    basis = np.arange(n, n + m)
    B_inv = np.eye(m)

    phase_one = np.concatenate([np.zeros(n), np.ones(m)])
    _, basis, B_inv, first = _run_phase(M, h, phase_one, basis, B_inv, np.ones(n + m, dtype=bool), settings)
    infeasibility = phase_one[basis] @ (B_inv @ h)
    if infeasibility > tol.feasibility * max(1.0, float(np.abs(h).max(initial=0.0))):
        return _Outcome(Status.INFEASIBLE, iterations=first)

    basis, B_inv = _drive_out_artificials(M, h, basis, B_inv, n, settings)

    phase_two = np.concatenate([cost, np.zeros(m)])
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    status, basis, B_inv, second = _run_phase(M, h, phase_two, basis, B_inv, allowed, settings)
    if status is Status.UNBOUNDED:
        return _Outcome(Status.UNBOUNDED, iterations=first + second)

    w = np.zeros(n + m)
    w[basis] = np.maximum(B_inv @ h, 0.0)
    multipliers = (phase_two[basis] @ B_inv) * flip
    return _Outcome(Status.OPTIMAL, w[:n], multipliers, first + second)


def _solve_primal_form(can: _Canonical, settings: LpSettings):
    m, n = can.A.shape
    inequality = np.flatnonzero(~can.equality)
    free = np.flatnonzero(can.free)

    surplus = np.zeros((m, inequality.size))
    surplus[inequality, np.arange(inequality.size)] = -1.0
    M = np.hstack([can.A, -can.A[:, free], surplus])
    cost = np.concatenate([can.c, -can.c[free], np.zeros(inequality.size)])

    outcome = _simplex(cost, M, can.b, settings)
    if outcome.status is not Status.OPTIMAL:
        return outcome.status, None, None, outcome.iterations

    x = outcome.w[:n].copy()
    x[free] -= outcome.w[n:n + free.size]
    return Status.OPTIMAL, x, outcome.multipliers, outcome.iterations


def _solve_dual_form(can: _Canonical, settings: LpSettings):
    # max b·y  s.t.  A^T y <= c (= c on free columns),  y >= 0 on >= rows
    m, n = can.A.shape
    equality = np.flatnonzero(can.equality)
    bounded = np.flatnonzero(~can.free)

    slack = np.zeros((n, bounded.size))
    slack[bounded, np.arange(bounded.size)] = 1.0
    M = np.hstack([can.A.T, -can.A[equality].T, slack])
    cost = np.concatenate([-can.b, can.b[equality], np.zeros(bounded.size)])

    outcome = _simplex(cost, M, can.c, settings)
    if outcome.status is Status.UNBOUNDED:
        return Status.INFEASIBLE, None, None, outcome.iterations
    if outcome.status is Status.INFEASIBLE:
        # primal is unbounded or itself infeasible; the caller decides on the primal form
        return None, None, None, outcome.iterations

    y = outcome.w[:m].copy()
    y[equality] -= outcome.w[m:m + equality.size]
    return Status.OPTIMAL, -outcome.multipliers, y, outcome.iterations


def solve_lp(problem: LpProblem, settings: Optional[LpSettings] = None) -> LpSolution:
    """
    Solve a dense linear program.
    Infeasible and unbounded problems come back as statuses, malformed ones raise LpUsageError.
    :param problem: LpProblem
    :param settings: (optional) LpSettings - tolerances, pivoting and form selection
    :return: LpSolution
    """
    settings = settings or DEFAULT_LP_SETTINGS
    _validate(problem)
    can = _canonicalize(problem)
    m, n = can.A.shape

    form = "dual" if m > settings.dual_threshold * (n + 1) else "primal"
    if form == "dual":
        status, x, y, iterations = _solve_dual_form(can, settings)
        if status is None:
            form = "primal"
            status, x, y, more = _solve_primal_form(can, settings)
            iterations += more
    else:
        status, x, y, iterations = _solve_primal_form(can, settings)

    logger.debug("LP %dx%d (%s form): %s after %d pivots", m, n, form, status.value, iterations)

    if status is not Status.OPTIMAL:
        return LpSolution(
            status=status,
            objective_value=np.nan,
            variable_values=np.full(n, np.nan),
            tight_constraint_flags=np.zeros(m, dtype=bool),
            duals=np.full(m, np.nan),
            iterations=iterations,
            max_violation=np.nan,
            form=form,
        )

    x = x + can.shift
    activity = problem.A @ x
    gap = activity - problem.rhs
    violation = np.where(
        problem.relations == "<=", np.maximum(gap, 0.0),
        np.where(problem.relations == ">=", np.maximum(-gap, 0.0), np.abs(gap)),
    )
    bound_violation = np.maximum(np.where(can.free, -np.inf, problem.lower_bounds) - x, 0.0)
    return LpSolution(
        status=Status.OPTIMAL,
        objective_value=float(problem.objective @ x),
        variable_values=x,
        tight_constraint_flags=np.abs(gap) <= settings.tolerances.feasibility,
        duals=can.objective_sign * y * can.row_sign,
        iterations=iterations,
        max_violation=float(max(violation.max(initial=0.0), bound_violation.max(initial=0.0))),
        form=form,
    )
