import logging
from math import comb
from typing import TYPE_CHECKING

import numpy as np

from revenue_allocator.ext.errors import SizeLimitError, SolverError
from revenue_allocator.solve.coalitions import coalition_sums, popcount, proper_masks
from revenue_allocator.solve.solution import Concept, SolutionVector

if TYPE_CHECKING:
    from revenue_allocator.construct.game import TuGame

logger = logging.getLogger(__name__)

MAX_PLAYERS = 24
EFFICIENCY_TOL = 1e-6


def shapley(game: "TuGame") -> SolutionVector:
    """
    Exact Shapley value by enumerating every coalition, rescaled so the
    shares add up to R.
    :param game: TuGame with at most 24 players
    :return: SolutionVector
    """
    k = game.k
    if k > MAX_PLAYERS:
        raise SizeLimitError(f"exact Shapley value supports at most {MAX_PLAYERS} players, got {k}")

    v = game.values()
    masks = np.arange(1 << k, dtype=np.int64)
    sizes = popcount(masks, k)
    # weight of a coalition of size s not containing the player: s!(k-s-1)!/k!
    weights = np.array([1.0 / (k * comb(k - 1, s)) for s in range(k)])

    phi = np.zeros(k)
    for i in range(k):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.dot(weights[sizes[without]], v[without | bit] - v[without])

    total = phi.sum()
    if abs(total - game.revenue) > EFFICIENCY_TOL * max(1.0, abs(game.revenue)):
        raise SolverError(f"Shapley shares add up to {total!r}, expected {game.revenue!r}")

    x = phi * (game.revenue / total) if total != 0 else phi
    excess = v[proper_masks(k)] - coalition_sums(x, k)[proper_masks(k)]
    logger.debug("Shapley value of %d players, rescale factor %r", k, game.revenue / total if total else 1.0)

    return SolutionVector(
        concept=Concept.SHAPLEY,
        x=x,
        labels=game.labels,
        max_excess=float(excess.max()) if excess.size else 0.0,
    )
