"""
Nucleolus by successive excess LPs.

Each round maximizes the smallest slack eps over the coalitions still free.
Coalitions that carry a positive multiplier at the optimum keep excess eps in
every optimal solution, so they become equalities at that level. Coalitions
whose characteristic vector is spanned by the fixed ones have their worth
settled and leave the LP. Rounds stop when the fixed vectors span R^k.
"""
import logging
from typing import TYPE_CHECKING, List, Optional

import numpy as np

from revenue_allocator.ext.errors import SizeLimitError, SolverError
from revenue_allocator.ext.tolerances import DEFAULT_LP_SETTINGS, LpSettings
from revenue_allocator.solve.coalitions import coalition_matrix, coalition_sums, proper_masks
from revenue_allocator.solve.least_core import excess_problem, warn_if_large
from revenue_allocator.solve.lp import LpProblem, solve_lp
from revenue_allocator.solve.solution import Concept, SolutionVector

if TYPE_CHECKING:
    from revenue_allocator.construct.game import TuGame

logger = logging.getLogger(__name__)

MAX_PLAYERS = 24
DUAL_TOL = 1e-9
SPAN_TOL = 1e-7
TIGHT_TOL = 1e-7


def _row_space(vectors: np.ndarray) -> np.ndarray:
    _, singular, vt = np.linalg.svd(vectors, full_matrices=False)
    rank = int((singular > SPAN_TOL * singular[0]).sum())
    return vt[:rank]


def _pinned(
    candidate: np.ndarray,
    level: float,
    problem: LpProblem,
    epsilon: float,
    settings: LpSettings,
) -> bool:
    """True when x(S) cannot grow above v(S) + eps among the optimal solutions of this round."""
    k = candidate.size
    bounded = LpProblem(
        "maximize",
        np.append(candidate, 0.0),
        np.vstack([problem.A, np.append(np.zeros(k), 1.0)]),
        np.append(problem.relations, ">="),
        np.append(problem.rhs, epsilon),
        problem.lower_bounds,
    )
    solution = solve_lp(bounded, settings)
    if not solution.optimal:
        raise SolverError(f"tight-coalition check is {solution.status.value}")
    return solution.objective_value <= level + TIGHT_TOL * max(1.0, abs(level))


def nucleolus(
    game: "TuGame",
    settings: Optional[LpSettings] = None,
    exact_tight_check: bool = False,
) -> SolutionVector:
    """
    Lexicographic minimizer of the sorted excess vector.
    :param game: TuGame with at most 24 players
    :param settings: (optional) LpSettings
    :param exact_tight_check: bool - confirm every tight coalition with its own LP instead of trusting multipliers
    :return: SolutionVector, epsilon is the first-round level
    """
    k = game.k
    if k > MAX_PLAYERS:
        raise SizeLimitError(f"nucleolus supports at most {MAX_PLAYERS} players, got {k}")
    warn_if_large(k, "nucleolus")
    settings = settings or DEFAULT_LP_SETTINGS

    masks = proper_masks(k)
    worth = game.values()[masks]

    active = np.ones(masks.size, dtype=bool)
    fixed_rows: List[int] = []
    fixed_worth: List[float] = []
    span = _row_space(np.ones((1, k)))

    x = None
    first_epsilon = None
    rounds = 0

    while span.shape[0] < k:
        rounds += 1
        active_idx = np.flatnonzero(active)
        problem = excess_problem(
            masks[active_idx],
            worth[active_idx],
            k,
            game.revenue,
            masks[fixed_rows] if fixed_rows else None,
            np.asarray(fixed_worth) if fixed_rows else None,
        )
        solution = solve_lp(problem, settings)
        if not solution.optimal:
            raise SolverError(f"nucleolus round {rounds} LP is {solution.status.value}")

        x = solution.variable_values[:k]
        epsilon = float(solution.variable_values[k])
        first_epsilon = epsilon if first_epsilon is None else first_epsilon

        duals = np.abs(solution.duals[:active_idx.size])
        newly = active_idx[duals > DUAL_TOL]

        if exact_tight_check or newly.size == 0:
            slack = coalition_sums(x, k)[masks[active_idx]] - worth[active_idx] - epsilon
            candidates = active_idx[(slack <= TIGHT_TOL) & ~np.isin(active_idx, newly)]
            confirmed = [
                c for c in candidates
                if _pinned(coalition_matrix(masks[c:c + 1], k)[0], worth[c] + epsilon, problem, epsilon, settings)
            ]
            newly = np.union1d(newly, np.asarray(confirmed, dtype=int))

        if newly.size == 0:
            raise SolverError(f"nucleolus round {rounds} fixed no coalition at eps={epsilon!r}")

        active[newly] = False
        fixed_rows.extend(int(c) for c in newly)
        fixed_worth.extend(float(w) + epsilon for w in worth[newly])

        span = _row_space(np.vstack([np.ones((1, k)), coalition_matrix(masks[fixed_rows], k)]))
        remaining = np.flatnonzero(active)
        if remaining.size:
            rows = coalition_matrix(masks[remaining], k)
            residual = rows - (rows @ span.T) @ span
            active[remaining[np.linalg.norm(residual, axis=1) <= SPAN_TOL]] = False

        logger.debug(
            "nucleolus round %d: eps=%r, fixed %d (total %d), rank %d, %d coalitions left",
            rounds, epsilon, newly.size, len(fixed_rows), span.shape[0], int(active.sum()),
        )

    if x is None:
        # a lone player takes everything
        x = np.full(k, game.revenue / k)
        first_epsilon = 0.0

    excess = worth - coalition_sums(x, k)[masks]
    return SolutionVector(
        concept=Concept.NUCLEOLUS,
        x=x,
        labels=game.labels,
        epsilon=first_epsilon,
        iterations=rounds,
        fixed_coalitions=len(fixed_rows),
        max_excess=float(excess.max()) if excess.size else 0.0,
    )
