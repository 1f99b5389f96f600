import logging
from typing import TYPE_CHECKING, Optional

import numpy as np

from revenue_allocator.ext.errors import SizeLimitError, SolverError
from revenue_allocator.ext.tolerances import LpSettings
from revenue_allocator.solve.coalitions import coalition_matrix, coalition_sums, proper_masks
from revenue_allocator.solve.lp import LpProblem, solve_lp
from revenue_allocator.solve.solution import Concept, SolutionVector

if TYPE_CHECKING:
    from revenue_allocator.construct.game import TuGame

logger = logging.getLogger(__name__)

MAX_PLAYERS = 24
LARGE_GAME = 20


def warn_if_large(k: int, what: str):
    if k > LARGE_GAME:
        # the constraint matrix and its dual-form transpose coexist
        size = 2 * ((1 << k) - 1) * (k + 1) * 8 / 2 ** 30
        logger.warning("%s of %d players holds about %.1f GiB of coalition rows", what, k, size)


def excess_problem(
    masks: np.ndarray,
    worth: np.ndarray,
    k: int,
    revenue: float,
    fixed_masks: Optional[np.ndarray] = None,
    fixed_worth: Optional[np.ndarray] = None,
) -> LpProblem:
    """
    maximize eps s.t. x(S) - eps >= v(S) for S in ``masks``, x(T) = ``fixed_worth`` for T in
    ``fixed_masks`` and x(N) = revenue. Variables are (x_1..x_k, eps), all free.
    The constraint matrix is allocated once, 2^k rows at most.
    """
    masks = np.asarray(masks, dtype=np.int64)
    fixed_masks = np.zeros(0, dtype=np.int64) if fixed_masks is None else np.asarray(fixed_masks, dtype=np.int64)
    fixed_worth = np.zeros(0) if fixed_worth is None else fixed_worth
    m, f = masks.size, fixed_masks.size

    A = np.zeros((m + f + 1, k + 1))
    coalition_matrix(masks, k, out=A[:m, :k])
    A[:m, k] = -1.0
    coalition_matrix(fixed_masks, k, out=A[m:m + f, :k])
    A[-1, :k] = 1.0

    relations = np.concatenate([
        np.full(m, ">=", dtype="<U2"),
        np.full(f + 1, "=", dtype="<U2"),
    ])
    rhs = np.concatenate([worth, fixed_worth, [revenue]])
    objective = np.append(np.zeros(k), 1.0)

    return LpProblem("maximize", objective, A, relations, rhs, np.full(k + 1, -np.inf))


def least_core(game: "TuGame", settings: Optional[LpSettings] = None) -> SolutionVector:
    """
    Largest eps such that every proper coalition gets at least v(S) + eps.
    The returned x is one optimal vertex; several usually exist.
    :param game: TuGame with at most 24 players
    :param settings: (optional) LpSettings
    :return: SolutionVector carrying eps
    """
    k = game.k
    if k > MAX_PLAYERS:
        raise SizeLimitError(f"least core supports at most {MAX_PLAYERS} players, got {k}")
    warn_if_large(k, "least core")

    masks = proper_masks(k)
    worth = game.values()[masks]
    solution = solve_lp(excess_problem(masks, worth, k, game.revenue), settings)
    if not solution.optimal:
        raise SolverError(f"least-core LP is {solution.status.value}")

    x = solution.variable_values[:k]
    epsilon = float(solution.variable_values[k])
    excess = worth - coalition_sums(x, k)[masks]
    logger.debug("least core of %d players: eps=%r after %d pivots", k, epsilon, solution.iterations)

    return SolutionVector(
        concept=Concept.LEAST_CORE,
        x=x,
        labels=game.labels,
        epsilon=epsilon,
        iterations=solution.iterations,
        max_excess=float(excess.max()) if excess.size else 0.0,
    )
