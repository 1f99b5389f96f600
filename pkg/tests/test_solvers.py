import logging
import tracemalloc
from itertools import permutations

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from revenue_allocator.construct.cem import CrossEfficiencyMatrix
from revenue_allocator.construct.game import TuGame, excess_vector
from revenue_allocator.ext.errors import SizeLimitError
from revenue_allocator.solve.coalitions import as_mask, coalition_matrix, coalition_sums, members, proper_masks
from revenue_allocator.solve.least_core import least_core, warn_if_large
from revenue_allocator.solve.lp import LpProblem, solve_lp
from revenue_allocator.solve.nucleolus import nucleolus
from revenue_allocator.solve.shapley import shapley
from revenue_allocator.solve.solution import Concept


def game_of(values):
    return TuGame.from_values(np.asarray(values, dtype=float))


def is_balanced(collection: np.ndarray, k: int) -> bool:
    """Positive weights on the rows of ``collection`` that cover every player equally."""
    n = collection.shape[0]
    problem = LpProblem(
        "minimize",
        np.append(np.zeros(n), 1.0),
        np.hstack([collection.T, -np.ones((k, 1))]),
        ["="] * k,
        np.zeros(k),
        np.append(np.ones(n), 0.0),
    )
    return solve_lp(problem).optimal


def satisfies_balancedness(game, x, tol=1e-6):
    """Every upper level set of excesses is balanced."""
    k = game.k
    masks = proper_masks(k)
    excess = excess_vector(game, x)
    rows = coalition_matrix(masks, k)
    for level in np.unique(np.round(excess, 7)):
        if not is_balanced(rows[excess >= level - tol], k):
            return False
    return True


small_games = st.integers(2, 4).flatmap(
    lambda k: st.lists(st.integers(0, 12), min_size=1 << k, max_size=1 << k).map(
        lambda v: [0] + v[1:-1] + [max(v[-1], 1)]
    )
)


def test_coalition_masks():
    assert as_mask([0, 2], 3) == 5
    assert members(6, 3).tolist() == [1, 2]
    np.testing.assert_allclose(coalition_sums([1.0, 2.0, 4.0], 3), [0, 1, 2, 3, 4, 5, 6, 7])


def test_coalition_matrix_fills_given_rows():
    block = np.full((4, 3), -1.0)
    rows = coalition_matrix([1, 6], 3, out=block[1:3])

    assert rows.base is block
    np.testing.assert_array_equal(block, [[-1, -1, -1], [1, 0, 0], [0, 1, 1], [-1, -1, -1]])


def test_least_core_holds_few_copies_of_the_coalition_rows():
    k = 14
    rng = np.random.default_rng(6)
    cem = CrossEfficiencyMatrix(rng.uniform(0.1, 1.0, (k, k)), [f"{j}.1" for j in range(1, k + 1)], [1] * k)
    game = TuGame.from_cem(cem, 100.0)
    game.values()
    one_copy = (1 << k) * (k + 1) * 8

    tracemalloc.start()
    try:
        solution = least_core(game)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()

    assert solution.x.sum() == pytest.approx(100.0)
    assert peak < 4 * one_copy


def test_large_games_log_their_footprint(caplog):
    with caplog.at_level(logging.WARNING):
        warn_if_large(20, "least core")
        warn_if_large(22, "nucleolus")

    assert len(caplog.records) == 1
    assert "nucleolus of 22 players" in caplog.text


def test_two_player_solutions_agree():
    game = game_of([0, 1, 2, 6])

    for solution in (shapley(game), nucleolus(game)):
        np.testing.assert_allclose(solution.x, [2.5, 3.5], atol=1e-9)


def test_symmetric_players_split_evenly():
    game = game_of([0, 0, 0, 4, 0, 4, 4, 9])

    np.testing.assert_allclose(shapley(game).x, [3, 3, 3], atol=1e-9)
    np.testing.assert_allclose(nucleolus(game).x, [3, 3, 3], atol=1e-8)


def test_dummy_player_gets_its_own_worth():
    # player 2 adds exactly 2 to every coalition
    base = [0, 1, 3, 7]
    values = base + [b + 2 for b in base]
    assert shapley(game_of(values)).x[2] == pytest.approx(2.0)


def test_majority_game_least_core():
    solution = least_core(game_of([0, 0, 0, 1, 0, 1, 1, 1]))

    assert solution.concept is Concept.LEAST_CORE
    assert solution.epsilon == pytest.approx(-1 / 3)
    np.testing.assert_allclose(solution.x, [1 / 3] * 3, atol=1e-9)
    assert solution.max_excess == pytest.approx(1 / 3)


def test_shapley_rejects_large_games():
    cem = CrossEfficiencyMatrix(np.full((25, 25), 0.5), [str(i) for i in range(25)], [1] * 25)
    game = TuGame.from_cem(cem, 1.0)

    for solver in (shapley, least_core, nucleolus):
        with pytest.raises(SizeLimitError):
            solver(game)


def test_single_player_takes_everything():
    assert nucleolus(game_of([0, 5])).x.tolist() == [5.0]


@settings(max_examples=40, deadline=None)
@given(values=small_games)
def test_nucleolus_passes_balancedness_criterion(values):
    game = game_of(values)
    solution = nucleolus(game)

    assert solution.total == pytest.approx(game.revenue, abs=1e-7)
    assert satisfies_balancedness(game, solution.x)


@settings(max_examples=40, deadline=None)
@given(values=small_games)
def test_nucleolus_tight_check_variants_agree(values):
    game = game_of(values)
    np.testing.assert_allclose(nucleolus(game).x, nucleolus(game, exact_tight_check=True).x, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(values=small_games, data=st.data())
def test_solutions_follow_player_relabelling(values, data):
    game = game_of(values)
    k = game.k
    order = data.draw(st.sampled_from(list(permutations(range(k)))))

    # player p of the relabelled game is player order[p] of the original
    relabelled = np.zeros(1 << k)
    for mask in range(1 << k):
        relabelled[mask] = game.v([order[p] for p in members(mask, k)])
    other = game_of(relabelled)

    for solver in (shapley, nucleolus):
        np.testing.assert_allclose(solver(other).x, solver(game).x[list(order)], atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(values=small_games)
def test_nucleolus_lies_in_least_core(values):
    game = game_of(values)
    bound = least_core(game).epsilon
    solution = nucleolus(game)

    assert solution.epsilon == pytest.approx(bound, abs=1e-7)
    assert excess_vector(game, solution.x).max() <= -bound + 1e-7


@settings(max_examples=30, deadline=None)
@given(values=small_games)
def test_shapley_is_efficient(values):
    game = game_of(values)
    assume(abs(game.revenue) > 0)
    assert shapley(game).total == pytest.approx(game.revenue, rel=1e-12)


def test_direct_game_nucleolus_is_in_core(printed_stage_cem):
    game = TuGame.from_cem(printed_stage_cem, 100.0)
    solution = nucleolus(game)

    assert solution.epsilon == pytest.approx(0.0, abs=1e-8)
    assert solution.max_excess <= 1e-7
    assert solution.x[:7].sum() == pytest.approx(game.v(list(range(7))), abs=1e-7)
