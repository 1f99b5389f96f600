import asyncio
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from revenue_allocator.construct.cem import (
    CrossEfficiencyMatrix,
    average_crees,
    competition_ranks,
    cree_ranks,
    stage_submatrix,
)
from revenue_allocator.construct.game import (
    DENSE_LIMIT,
    SingletonUniverse,
    TuGame,
    check_core_nonempty,
    check_superadditive,
    grand_value,
    in_core,
    is_imputation,
)
from revenue_allocator.ext.cache import clear_cache
from revenue_allocator.ext.errors import AllocatorError, InputError, SizeLimitError, SolverError
from revenue_allocator.ext.tolerances import DEFAULT_TOLERANCES, LpSettings
from revenue_allocator.solve.least_core import least_core
from revenue_allocator.solve.nucleolus import nucleolus
from revenue_allocator.solve.shapley import shapley
from revenue_allocator.solve.solution import Concept, SolutionVector

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    DIRECT = "direct"
    SECONDARY = "secondary"


@dataclass(frozen=True)
class PlayerRow:
    label: str
    dmu_id: str
    stage: int
    allocation: float
    rank: int
    stage_rank: int
    avg_cree: float
    cree_rank: int
    comparison: float


@dataclass(eq=False)
class AllocationReport:
    mode: Mode
    concept: Concept
    revenue: float
    stage_split: Tuple[float, float]
    players: List[PlayerRow]
    cem: CrossEfficiencyMatrix
    epsilon: Optional[float] = None
    max_excess: float = 0.0
    is_imputation: bool = True
    in_core: bool = True
    checks: Optional[List[Dict]] = None

    @property
    def allocations(self) -> np.ndarray:
        return np.array([row.allocation for row in self.players])

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(row.label for row in self.players)

    def stage_total(self, stage: int) -> float:
        return float(sum(row.allocation for row in self.players if row.stage == stage))

    def row(self, label: str) -> PlayerRow:
        for row in self.players:
            if row.label == label:
                return row
        raise InputError(f"no player labelled {label!r}")

    def to_dict(self) -> dict:
        r1, r2 = self.stage_split
        data = {
            "mode": self.mode.value,
            "concept": self.concept.value,
            "R": self.revenue,
            "R1": r1,
            "R2": r2,
            "players": [
                {
                    "label": row.label,
                    "dmu_id": row.dmu_id,
                    "stage": row.stage,
                    "allocation": row.allocation,
                    "rank": row.rank,
                    "stage_rank": row.stage_rank,
                    "avg_cree": row.avg_cree,
                    "cree_rank": row.cree_rank,
                    "comparison": row.comparison,
                }
                for row in self.players
            ],
            "cem": self.cem.values.tolist(),
            "cem_labels": list(self.cem.labels),
            "epsilon": self.epsilon,
            "max_excess": self.max_excess,
            "is_imputation": self.is_imputation,
            "in_core": self.in_core,
        }
        if self.checks is not None:
            data["checks"] = self.checks
        return data


def _require_two_stages(cem: CrossEfficiencyMatrix) -> Tuple[np.ndarray, np.ndarray]:
    first, second = cem.stage_indices(1), cem.stage_indices(2)
    if first.size == 0 or second.size == 0 or first.size + second.size != cem.k:
        raise InputError("expected a matrix over stage-1 and stage-2 sub-DMUs")
    return first, second


def stage_revenues(cem_2n: CrossEfficiencyMatrix, revenue: float) -> Tuple[float, float]:
    """
    Split R between the stages in proportion to f(N1) and f(N2).
    :param cem_2n: CrossEfficiencyMatrix over both stages
    :param revenue: float - R
    :return: (R1, R2) with R1 + R2 = R
    """
    _require_two_stages(cem_2n)
    f_first = grand_value(stage_submatrix(cem_2n, 1))
    f_second = grand_value(stage_submatrix(cem_2n, 2))
    if not f_first + f_second > 0:
        raise InputError("degenerate game: f(N) must be positive")

    r1 = f_first * revenue / (f_first + f_second)
    return r1, revenue - r1


def rank_rows(allocations: Sequence[float], tie: float = DEFAULT_TOLERANCES.rank_tie) -> np.ndarray:
    """Rank 1 is the largest allocation; values within ``tie`` share the lower rank."""
    return competition_ranks(allocations, tie)


def comparison_values(avg_crees: Sequence[float], allocations: Sequence[float]) -> np.ndarray:
    """
    Scale average CREEs by the allocation-per-efficiency of the most efficient player.
    :param avg_crees: vector of average CREE values
    :param allocations: vector of allocations, same order
    :return: np.ndarray of comparison values
    """
    avg_crees = np.asarray(avg_crees, dtype=float)
    allocations = np.asarray(allocations, dtype=float)
    anchor = int(np.argmax(avg_crees))
    if not avg_crees[anchor] > 0:
        raise InputError("comparison values need a positive average CREE")

    coefficient = allocations[anchor] / avg_crees[anchor]
    logger.debug("comparison coefficient %r anchored on player %d", coefficient, anchor)
    return coefficient * avg_crees


def solve_game(
    game: TuGame,
    concept: Union[Concept, str],
    settings: Optional[LpSettings] = None,
    exact_tight_check: bool = False,
) -> SolutionVector:
    concept = Concept(concept)
    if concept is Concept.SHAPLEY:
        solution = shapley(game)
    elif concept is Concept.LEAST_CORE:
        solution = least_core(game, settings)
    else:
        solution = nucleolus(game, settings, exact_tight_check)

    logger.info("%s of %d players done (sum %.6f)", concept.value, game.k, solution.total)
    return solution


def direct_game(
    cem_2n: CrossEfficiencyMatrix,
    revenue: float,
    singleton_universe: Union[SingletonUniverse, str] = SingletonUniverse.GAME,
) -> TuGame:
    _require_two_stages(cem_2n)
    if cem_2n.k > DENSE_LIMIT:
        raise SizeLimitError(
            f"direct allocation over {cem_2n.k} sub-DMUs exceeds the {DENSE_LIMIT}-player limit; "
            "use secondary mode, which yields the same stage totals"
        )
    return TuGame.from_cem(cem_2n, revenue, singleton_universe, cem_2n)


def stage_games(
    cem_2n: CrossEfficiencyMatrix,
    revenue: float,
    singleton_universe: Union[SingletonUniverse, str] = SingletonUniverse.GAME,
) -> Tuple[Tuple[TuGame, TuGame], Tuple[float, float]]:
    _require_two_stages(cem_2n)
    split = stage_revenues(cem_2n, revenue)
    logger.info("stage revenues R1=%.6f R2=%.6f", *split)

    games = []
    for stage, stage_revenue in zip((1, 2), split):
        block = stage_submatrix(cem_2n, stage)
        if block.k > DENSE_LIMIT:
            raise SizeLimitError(f"stage {stage} has {block.k} sub-DMUs, above the {DENSE_LIMIT}-player limit")
        games.append(TuGame.from_cem(block, stage_revenue, singleton_universe, cem_2n))
    return tuple(games), split


def _dmu_id(label: str, dmu_ids: Optional[Sequence[str]]) -> str:
    number = label.split(".")[0]
    if dmu_ids is not None and number.isdigit() and 0 < int(number) <= len(dmu_ids):
        return str(dmu_ids[int(number) - 1])
    return number


def assemble_report(
    mode: Union[Mode, str],
    concept: Union[Concept, str],
    cem_2n: CrossEfficiencyMatrix,
    revenue: float,
    split: Tuple[float, float],
    games: Sequence[TuGame],
    solutions: Sequence[SolutionVector],
    dmu_ids: Optional[Sequence[str]] = None,
    checks: Optional[List[Dict]] = None,
) -> AllocationReport:
    """
    Lay the solutions of one or two games out over the 2n sub-DMUs, in matrix order.
    """
    position = {label: i for i, label in enumerate(cem_2n.labels)}
    allocations = np.empty(cem_2n.k)
    for solution in solutions:
        for label, value in zip(solution.labels, solution.x):
            allocations[position[label]] = value

    averages = np.empty(cem_2n.k)
    stage_ranks = np.empty(cem_2n.k, dtype=int)
    efficiency_ranks = np.empty(cem_2n.k, dtype=int)
    for stage in (1, 2):
        indices = cem_2n.stage_indices(stage)
        block = stage_submatrix(cem_2n, stage)
        averages[indices] = average_crees(block)
        efficiency_ranks[indices] = cree_ranks(block)
        stage_ranks[indices] = rank_rows(allocations[indices])
    comparisons = comparison_values(averages, allocations)
    ranks = rank_rows(allocations)

    players = [
        PlayerRow(
            label=label,
            dmu_id=_dmu_id(label, dmu_ids),
            stage=int(cem_2n.stages[i]),
            allocation=float(allocations[i]),
            rank=int(ranks[i]),
            stage_rank=int(stage_ranks[i]),
            avg_cree=float(averages[i]),
            cree_rank=int(efficiency_ranks[i]),
            comparison=float(comparisons[i]),
        )
        for i, label in enumerate(cem_2n.labels)
    ]

    epsilons = [s.epsilon for s in solutions if s.epsilon is not None]
    return AllocationReport(
        mode=Mode(mode),
        concept=Concept(concept),
        revenue=float(revenue),
        stage_split=(float(split[0]), float(split[1])),
        players=players,
        cem=cem_2n,
        epsilon=min(epsilons) if epsilons else None,
        max_excess=max(s.max_excess for s in solutions),
        is_imputation=all(is_imputation(g, s.x) for g, s in zip(games, solutions)),
        in_core=all(in_core(g, s.x) for g, s in zip(games, solutions)),
        checks=checks,
    )


def direct_allocation(
    cem_2n: CrossEfficiencyMatrix,
    revenue: float,
    concept: Union[Concept, str],
    singleton_universe: Union[SingletonUniverse, str] = SingletonUniverse.GAME,
    settings: Optional[LpSettings] = None,
    dmu_ids: Optional[Sequence[str]] = None,
) -> AllocationReport:
    """
    Allocate R over all 2n sub-DMUs as a single game.
    :param cem_2n: CrossEfficiencyMatrix over both stages, at most 24 units
    :param revenue: float - R
    :param concept: shapley, leastcore or nucleolus
    :param singleton_universe: (optional) evaluator set for lone players
    :param settings: (optional) LpSettings
    :param dmu_ids: (optional) raw panel identifiers
    :return: AllocationReport
    """
    game = direct_game(cem_2n, revenue, singleton_universe)
    split = stage_revenues(cem_2n, revenue)
    solution = solve_game(game, concept, settings)
    return assemble_report(Mode.DIRECT, concept, cem_2n, revenue, split, [game], [solution], dmu_ids)


def secondary_allocation(
    cem_2n: CrossEfficiencyMatrix,
    revenue: float,
    concept: Union[Concept, str],
    singleton_universe: Union[SingletonUniverse, str] = SingletonUniverse.GAME,
    settings: Optional[LpSettings] = None,
    dmu_ids: Optional[Sequence[str]] = None,
) -> AllocationReport:
    """
    Split R into stage pots (R1, R2), then allocate each pot within its stage.
    :param cem_2n: CrossEfficiencyMatrix over both stages, at most 24 units per stage
    :param revenue: float - R
    :param concept: shapley, leastcore or nucleolus
    :param singleton_universe: (optional) ``game`` (stage players) or ``full`` (all 2n units)
    :param settings: (optional) LpSettings
    :param dmu_ids: (optional) raw panel identifiers
    :return: AllocationReport
    """
    games, split = stage_games(cem_2n, revenue, singleton_universe)
    solutions = [solve_game(game, concept, settings) for game in games]
    return assemble_report(Mode.SECONDARY, concept, cem_2n, revenue, split, games, solutions, dmu_ids)


@dataclass(frozen=True)
class ModeComparison:
    concept: Concept
    max_difference: float
    direct_stage_totals: Tuple[float, float]
    secondary_stage_totals: Tuple[float, float]
    differences: Dict[str, float] = field(default_factory=dict)


def compare_modes(direct: AllocationReport, secondary: AllocationReport) -> ModeComparison:
    """
    Componentwise gap between a direct and a secondary report of the same concept.
    """
    if direct.concept is not secondary.concept:
        raise InputError("compare reports of the same solution concept")
    if set(direct.labels) != set(secondary.labels):
        raise InputError("reports cover different sub-DMUs")

    differences = {row.label: abs(row.allocation - secondary.row(row.label).allocation) for row in direct.players}
    return ModeComparison(
        concept=direct.concept,
        max_difference=max(differences.values()),
        direct_stage_totals=(direct.stage_total(1), direct.stage_total(2)),
        secondary_stage_totals=(secondary.stage_total(1), secondary.stage_total(2)),
        differences=differences,
    )


def _game_checks(game: TuGame, seed: int) -> Dict:
    verdict = check_superadditive(game, seed=seed)
    core = check_core_nonempty(game)
    return {
        "players": list(game.labels),
        "superadditive": verdict.holds,
        "exhaustive": verdict.exhaustive,
        "pairs_checked": verdict.pairs_checked,
        "counterexample": list(verdict.counterexample) if verdict.counterexample else None,
        "core_nonempty": core.nonempty,
        "core_epsilon": core.epsilon,
    }


class AllocationDAO:
    report: AllocationReport

    def __init__(
        self,
        cem: CrossEfficiencyMatrix,
        revenue: float,
        mode: Union[Mode, str],
        concept: Union[Concept, str],
        singleton_universe: Union[SingletonUniverse, str],
        settings: Optional[LpSettings],
        exact_tight_check: bool,
        checks: bool,
        seed: int,
        dmu_ids: Optional[Sequence[str]],
    ):
        if not revenue > 0:
            raise InputError(f"revenue must be positive, got {revenue!r}")

        self.cem = cem
        self.revenue = float(revenue)
        self.mode = Mode(mode)
        self.concept = Concept(concept)
        self.singleton_universe = SingletonUniverse(singleton_universe)
        self.settings = settings
        self.exact_tight_check = exact_tight_check
        self.checks = checks
        self.seed = seed
        self.dmu_ids = dmu_ids

    async def build_report(self):
        if self.mode is Mode.DIRECT:
            games = (direct_game(self.cem, self.revenue, self.singleton_universe),)
            split = stage_revenues(self.cem, self.revenue)
        else:
            games, split = stage_games(self.cem, self.revenue, self.singleton_universe)

        solutions = await asyncio.gather(*(
            asyncio.to_thread(solve_game, game, self.concept, self.settings, self.exact_tight_check)
            for game in games
        ))

        checks = None
        if self.checks:
            checks = list(await asyncio.gather(*(
                asyncio.to_thread(_game_checks, game, self.seed) for game in games
            )))

        self.report = assemble_report(
            self.mode, self.concept, self.cem, self.revenue, split, games, solutions, self.dmu_ids, checks,
        )
        clear_cache()
        return self


class Allocation(AllocationDAO):
    async def export(self):
        try:
            return await super().build_report()
        except AllocatorError:
            raise
        except Exception as exc:
            logger.exception("allocation %s/%s failed", self.mode.value, self.concept.value)
            raise SolverError(f"{self.mode.value} {self.concept.value} allocation failed: {exc}") from exc
