"""
Coalition game built on a cross-efficiency matrix.

A member i of a coalition S of two or more players is worth the best
evaluation it receives from another member of S. A lone player is worth the
worst evaluation it receives from the other players of its universe. f(S)
sums the member worths and v(S) = f(S) R / f(N).
"""
import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from revenue_allocator.construct.cem import CrossEfficiencyMatrix
from revenue_allocator.ext.cache import cache
from revenue_allocator.ext.errors import InputError, SizeLimitError
from revenue_allocator.ext.tolerances import DEFAULT_TOLERANCES
from revenue_allocator.solve.coalitions import Coalition, as_mask, coalition_sums, members, proper_masks

logger = logging.getLogger(__name__)

DENSE_LIMIT = 24
EXHAUSTIVE_LIMIT = 14


class SingletonUniverse(str, Enum):
    GAME = "game"
    FULL = "full"


def _evaluations(cem: CrossEfficiencyMatrix) -> np.ndarray:
    peers = np.array(cem.values, dtype=float)
    np.fill_diagonal(peers, 0.0)
    return peers


def singleton_floor(cem: CrossEfficiencyMatrix, universe: Optional[CrossEfficiencyMatrix] = None) -> np.ndarray:
    """
    Worst evaluation each player of ``cem`` receives from the other units of ``universe``.
    :param cem: CrossEfficiencyMatrix - the game's players
    :param universe: (optional) CrossEfficiencyMatrix containing the game's labels; default ``cem``
    :return: np.ndarray of length cem.k
    """
    universe = universe if universe is not None else cem
    if universe.k < 2:
        raise InputError("a lone player needs at least one other evaluator")

    floor = np.empty(cem.k)
    for i, label in enumerate(cem.labels):
        column = universe.index_of(label)
        others = np.delete(universe.values[:, column], column)
        floor[i] = others.min()
    return floor


def _dense_f(peers: np.ndarray, floor: np.ndarray) -> np.ndarray:
    k = peers.shape[0]
    size = 1 << k
    masks = np.arange(size, dtype=np.int64)
    f = np.zeros(size)
    best = np.zeros(size)

    for i in range(k):
        # best[mask] = max evaluation of i by the members of mask
        best[0] = 0.0
        for d in range(k):
            low = 1 << d
            np.maximum(best[:low], peers[d, i], out=best[low:2 * low])
        f += np.where((masks >> i) & 1, best, 0.0)

    f[1 << np.arange(k)] = floor
    f[0] = 0.0
    return f


class CoalitionValueTable:
    """
    f(S) for every coalition, precomputed densely up to ``DENSE_LIMIT`` players
    and evaluated on demand (memoized) above that.
    """

    def __init__(self, peers: np.ndarray, floor: np.ndarray, fingerprint: str = "", dense_limit: int = DENSE_LIMIT):
        self.k = int(peers.shape[0])
        self.peers = peers
        self.floor = np.asarray(floor, dtype=float)
        self.fingerprint = fingerprint or hashlib.sha1(peers.tobytes() + self.floor.tobytes()).hexdigest()
        self._dense = _dense_f(peers, self.floor) if self.k <= dense_limit else None

    @classmethod
    def from_cem(
        cls,
        cem: CrossEfficiencyMatrix,
        universe: Optional[CrossEfficiencyMatrix] = None,
        dense_limit: int = DENSE_LIMIT,
    ) -> "CoalitionValueTable":
        floor = singleton_floor(cem, universe)
        fingerprint = hashlib.sha1(f"{cem.fingerprint}:{floor.tobytes().hex()}".encode()).hexdigest()
        return cls(_evaluations(cem), floor, fingerprint, dense_limit)

    @classmethod
    def from_values(cls, f: Sequence[float]) -> "CoalitionValueTable":
        """Wrap an explicit table indexed by mask."""
        f = np.asarray(f, dtype=float)
        k = int(np.log2(f.size)) if f.size else 0
        if f.size != 1 << k or k < 1:
            raise InputError(f"value table needs 2^k entries, got {f.size}")

        table = cls.__new__(cls)
        table.k = k
        table.peers = None
        table.floor = f[1 << np.arange(k)]
        table.fingerprint = hashlib.sha1(f.tobytes()).hexdigest()
        table._dense = f.copy()
        table._dense[0] = 0.0
        return table

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    def dense(self) -> np.ndarray:
        if self._dense is None:
            raise SizeLimitError(f"{self.k} players exceed the dense coalition table limit of {DENSE_LIMIT}")
        return self._dense

    def evaluate(self, mask: int) -> float:
        if mask == 0:
            return 0.0
        players = members(mask, self.k)
        if players.size == 1:
            return float(self.floor[players[0]])
        return float(self.peers[np.ix_(players, players)].max(axis=0).sum())

    def __getitem__(self, mask: int) -> float:
        if self._dense is not None:
            return float(self._dense[mask])
        return _lazy_f(self, int(mask))

    def __repr__(self):
        return f"CoalitionValueTable(k={self.k}, fingerprint={self.fingerprint})"


@cache()
def _lazy_f(table: CoalitionValueTable, mask: int) -> float:
    return table.evaluate(mask)


class TuGame:
    """
    Transferable-utility game with v(S) = f(S) R / f(N) and v(N) = R exactly.
    """

    def __init__(
        self,
        table: CoalitionValueTable,
        revenue: float,
        labels: Optional[Sequence[str]] = None,
        stages: Optional[Sequence[int]] = None,
    ):
        self.table = table
        self.k = table.k
        self.revenue = float(revenue)
        self.labels = tuple(labels) if labels is not None else tuple(str(i + 1) for i in range(self.k))
        self.stages = np.asarray(stages, dtype=int) if stages is not None else np.zeros(self.k, dtype=int)

        if len(self.labels) != self.k or self.stages.shape != (self.k,):
            raise InputError("one label and one stage per player are required")

        self.f_grand = table[self.grand]
        if not self.f_grand > 0:
            raise InputError("degenerate game: f(N) must be positive")
        self.scale = self.revenue / self.f_grand
        self._values = None

    @classmethod
    def from_cem(
        cls,
        cem: CrossEfficiencyMatrix,
        revenue: float,
        singleton_universe: Union[SingletonUniverse, str] = SingletonUniverse.GAME,
        universe: Optional[CrossEfficiencyMatrix] = None,
    ) -> "TuGame":
        """
        :param cem: CrossEfficiencyMatrix - the players and their evaluations
        :param revenue: float - R, the grand coalition's worth
        :param singleton_universe: ``game`` takes lone-player floors over ``cem``, ``full`` over ``universe``
        :param universe: (optional) CrossEfficiencyMatrix - the full evaluator set, needed for ``full``
        :return: TuGame
        """
        if SingletonUniverse(singleton_universe) is SingletonUniverse.FULL and universe is not None:
            table = CoalitionValueTable.from_cem(cem, universe)
        else:
            table = CoalitionValueTable.from_cem(cem)
        return cls(table, revenue, cem.labels, cem.stages)

    @classmethod
    def from_values(cls, values: Sequence[float], labels: Optional[Sequence[str]] = None) -> "TuGame":
        """Game given directly by v over all masks; R is v(N)."""
        table = CoalitionValueTable.from_values(values)
        return cls(table, table[(1 << table.k) - 1], labels)

    @property
    def grand(self) -> int:
        return (1 << self.k) - 1

    def f(self, coalition: Coalition) -> float:
        return self.table[as_mask(coalition, self.k)]

    def v(self, coalition: Coalition) -> float:
        mask = as_mask(coalition, self.k)
        if mask == self.grand:
            return self.revenue
        if mask == 0:
            return 0.0
        return self.scale * self.table[mask]

    def values(self) -> np.ndarray:
        """v over every mask 0..2^k-1."""
        if self._values is None:
            values = self.scale * self.table.dense()
            values[0] = 0.0
            values[self.grand] = self.revenue
            values.flags.writeable = False
            self._values = values
        return self._values

    def __repr__(self):
        return f"TuGame(k={self.k}, revenue={self.revenue!r}, table={self.table!r})"


def coalition_cree(
    cem: CrossEfficiencyMatrix,
    coalition: Coalition,
    i: int,
    universe: Optional[CrossEfficiencyMatrix] = None,
) -> float:
    """
    Worth of member i inside coalition S.
    :param cem: CrossEfficiencyMatrix
    :param coalition: bitmask or player indices
    :param i: int - a member of the coalition
    :param universe: (optional) evaluator set for lone players; default ``cem``
    :return: float
    """
    mask = as_mask(coalition, cem.k)
    if not (mask >> i) & 1:
        raise InputError(f"player {i} is not a member of coalition {mask}")

    players = members(mask, cem.k)
    if players.size == 1:
        return float(singleton_floor(cem, universe)[i])
    return float(cem.values[players[players != i], i].max())


def f_value(cem: CrossEfficiencyMatrix, coalition: Coalition, universe: Optional[CrossEfficiencyMatrix] = None) -> float:
    mask = as_mask(coalition, cem.k)
    if mask == 0:
        raise InputError("f is defined for nonempty coalitions")
    return float(sum(coalition_cree(cem, mask, i, universe) for i in members(mask, cem.k)))


def char_value(
    cem: CrossEfficiencyMatrix,
    coalition: Coalition,
    revenue: float,
    universe: Optional[CrossEfficiencyMatrix] = None,
) -> float:
    mask = as_mask(coalition, cem.k)
    grand = (1 << cem.k) - 1
    f_grand = f_value(cem, grand, universe)
    if not f_grand > 0:
        raise InputError("degenerate game: f(N) must be positive")
    if mask == grand:
        return float(revenue)
    if mask == 0:
        return 0.0
    return f_value(cem, mask, universe) * revenue / f_grand


def grand_value(cem: CrossEfficiencyMatrix) -> float:
    """f(N) of the players in ``cem``: each column's best peer evaluation."""
    if cem.k == 1:
        raise InputError("a lone player needs at least one other evaluator")
    return float(_evaluations(cem).max(axis=0).sum())


@dataclass(frozen=True)
class SuperadditivityVerdict:
    holds: bool
    counterexample: Optional[Tuple[int, int]]
    exhaustive: bool
    pairs_checked: int


def _violations(v_union, v_first, v_second, tol):
    return v_union < v_first + v_second - tol


def check_superadditive(
    game: TuGame,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    samples: int = 100_000,
    seed: int = 0,
    tol: float = 1e-9,
) -> SuperadditivityVerdict:
    """
    Look for disjoint S1, S2 with v(S1 | S2) < v(S1) + v(S2).
    Every disjoint pair is scanned up to ``exhaustive_limit`` players,
    larger games are checked on ``samples`` random pairs.
    :param game: TuGame
    :param exhaustive_limit: int
    :param samples: int - random pairs for the sampled mode
    :param seed: int - sampling seed
    :param tol: float - absolute slack, scaled by max(1, |R|)
    :return: SuperadditivityVerdict, counterexample as a pair of masks
    """
    k = game.k
    slack = tol * max(1.0, abs(game.revenue))

    if k <= exhaustive_limit:
        v = game.values()
        masks = np.arange(1 << k, dtype=np.int64)
        checked = 0
        for first in range(1, 1 << k):
            second = masks[((masks & first) == 0) & (masks > first)]
            checked += second.size
            bad = np.flatnonzero(_violations(v[first | second], v[first], v[second], slack))
            if bad.size:
                return SuperadditivityVerdict(False, (first, int(second[bad[0]])), True, checked)
        return SuperadditivityVerdict(True, None, True, checked)

    logger.warning("super-additivity of a %d-player game checked on %d sampled pairs only", k, samples)
    rng = np.random.default_rng(seed)
    side = rng.integers(0, 3, size=(samples, k))
    weights = np.int64(1) << np.arange(k, dtype=np.int64)
    first = ((side == 1) * weights).sum(axis=1)
    second = ((side == 2) * weights).sum(axis=1)
    keep = (first > 0) & (second > 0)
    first, second = first[keep], second[keep]

    if game.table.is_dense:
        v = game.values()
        v_first, v_second, v_union = v[first], v[second], v[first | second]
    else:
        v_first = np.array([game.v(int(m)) for m in first])
        v_second = np.array([game.v(int(m)) for m in second])
        v_union = np.array([game.v(int(m)) for m in first | second])

    bad = np.flatnonzero(_violations(v_union, v_first, v_second, slack))
    if bad.size:
        return SuperadditivityVerdict(False, (int(first[bad[0]]), int(second[bad[0]])), False, int(first.size))
    return SuperadditivityVerdict(True, None, False, int(first.size))


@dataclass(frozen=True, eq=False)
class CoreVerdict:
    nonempty: bool
    epsilon: float
    witness: np.ndarray


def check_core_nonempty(game: TuGame) -> CoreVerdict:
    from revenue_allocator.solve.least_core import least_core

    solution = least_core(game)
    return CoreVerdict(
        nonempty=solution.epsilon >= -DEFAULT_TOLERANCES.feasibility,
        epsilon=solution.epsilon,
        witness=solution.x,
    )


def excess_vector(game: TuGame, x: Sequence[float]) -> np.ndarray:
    """v(S) - x(S) for every proper nonempty coalition, ordered by mask."""
    x = np.asarray(x, dtype=float)
    if x.shape != (game.k,):
        raise InputError(f"allocation has {x.size} entries for {game.k} players")
    masks = proper_masks(game.k)
    return game.values()[masks] - coalition_sums(x, game.k)[masks]


def max_excess(game: TuGame, x: Sequence[float]) -> float:
    excess = excess_vector(game, x)
    return float(excess.max()) if excess.size else 0.0


def is_imputation(game: TuGame, x: Sequence[float], tol: float = 1e-6) -> bool:
    x = np.asarray(x, dtype=float)
    singles = np.array([game.v(1 << i) for i in range(game.k)])
    return bool(abs(x.sum() - game.revenue) <= tol and (x >= singles - tol).all())


def in_core(game: TuGame, x: Sequence[float], tol: float = 1e-6) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(abs(x.sum() - game.revenue) <= tol and max_excess(game, x) <= tol)
