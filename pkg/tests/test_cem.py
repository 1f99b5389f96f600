import numpy as np
import pytest

from revenue_allocator.construct.cem import (
    CrossEfficiencyMatrix, aggressive_cross_efficiency, average_cree, average_crees, build_cem,
    ccr_efficiency, combine_stage_blocks, competition_ranks, cree_ranks, stage_submatrix,
)
from revenue_allocator.construct.panel import DmuPanel, normalize_panel, split_to_subdmus
from revenue_allocator.ext.errors import InputError


@pytest.fixture(scope="module")
def small_panel(numerical_panel):
    return DmuPanel(
        numerical_panel.dmu_ids[:4], numerical_panel.X[:4], numerical_panel.Z[:4], numerical_panel.Y[:4],
    )


@pytest.fixture(scope="module")
def small_units(small_panel):
    return split_to_subdmus(normalize_panel(small_panel))


@pytest.fixture(scope="module")
def small_cem(small_units):
    return build_cem(small_units)


def test_self_efficiency_of_first_stage_one_unit(numerical_units, printed_tol):
    assert ccr_efficiency(numerical_units, 0) == pytest.approx(0.379, abs=printed_tol.three_decimals)
    assert ccr_efficiency(numerical_units, 1) == pytest.approx(1.0, abs=1e-7)


def test_identical_dmus_are_efficient():
    panel = DmuPanel(("a", "b"), [[2.0, 3.0], [2.0, 3.0]], [[5.0], [5.0]], [[7.0], [7.0]])
    units = split_to_subdmus(normalize_panel(panel))

    for d in range(units.k):
        assert ccr_efficiency(units, d) == pytest.approx(1.0, abs=1e-9)


def test_aggressive_self_evaluation_is_theta(small_units):
    theta = ccr_efficiency(small_units, 0)
    assert aggressive_cross_efficiency(small_units, 0, 0, theta) == pytest.approx(theta, abs=1e-7)


def test_cross_stage_evaluations_are_zero(numerical_cem):
    first, second = numerical_cem.stage_indices(1), numerical_cem.stage_indices(2)

    np.testing.assert_allclose(numerical_cem.values[np.ix_(first, second)], 0.0, atol=1e-9)
    np.testing.assert_allclose(numerical_cem.values[np.ix_(second, first)], 0.0, atol=1e-9)


def test_reproduces_printed_matrix(numerical_cem, table3_cem, printed_tol):
    for d, evaluator in enumerate(table3_cem.labels):
        for l, evaluated in enumerate(table3_cem.labels):
            actual = numerical_cem.values[numerical_cem.index_of(evaluator), numerical_cem.index_of(evaluated)]
            assert actual == pytest.approx(table3_cem.values[d, l], abs=printed_tol.three_decimals), (evaluator, evaluated)


def test_stage_blocks_match_printed_tables(numerical_cem, table5_cem, table6_cem, printed_tol):
    for printed in (table5_cem, table6_cem):
        block = stage_submatrix(numerical_cem, int(printed.stages[0]))
        assert block.labels == printed.labels
        np.testing.assert_allclose(block.values, printed.values, atol=printed_tol.two_decimals)


def test_values_lie_in_unit_interval(numerical_cem):
    assert (numerical_cem.values >= 0).all() and (numerical_cem.values <= 1).all()


def test_nobody_rates_a_unit_above_its_self_efficiency(numerical_cem):
    assert (numerical_cem.values <= numerical_cem.theta[None, :] + 1e-7).all()


def test_stage_block_equals_stage_alone(small_units, small_cem):
    for stage in (1, 2):
        indices = small_units.stage_indices(stage)
        alone = build_cem(small_units.subset(indices))
        np.testing.assert_allclose(stage_submatrix(small_cem, stage).values, alone.values, atol=1e-7)


def test_column_scaling_leaves_matrix_unchanged(small_panel, small_cem):
    scaled = DmuPanel(small_panel.dmu_ids, small_panel.X * [2.0, 10.0, 0.5], small_panel.Z * 3.0, small_panel.Y * 7.0)
    again = build_cem(split_to_subdmus(normalize_panel(scaled)))

    np.testing.assert_allclose(again.values, small_cem.values, atol=1e-8)


def test_worker_count_does_not_change_result(small_units, small_cem):
    threaded = build_cem(small_units, workers=3)

    assert threaded.values.tobytes() == small_cem.values.tobytes()
    assert threaded.fingerprint == small_cem.fingerprint


def test_workers_must_be_positive(small_units):
    with pytest.raises(InputError):
        build_cem(small_units, workers=0)


def test_single_dmu_matrix_is_diagonal():
    units = split_to_subdmus(normalize_panel(DmuPanel(("a",), [[1.0]], [[1.0]], [[1.0]])))
    cem = build_cem(units)

    np.testing.assert_allclose(cem.values, np.eye(2), atol=1e-9)


def test_matrix_is_read_only(small_cem):
    with pytest.raises(ValueError):
        small_cem.values[0, 0] = 0.5


def test_matrix_validation():
    with pytest.raises(InputError):
        CrossEfficiencyMatrix(np.ones((2, 3)), ("a", "b"), (1, 1))
    with pytest.raises(InputError):
        CrossEfficiencyMatrix(np.ones((2, 2)), ("a",), (1, 1))


def test_labels_and_frame(small_cem):
    assert small_cem.index_of("3.2") == 6
    with pytest.raises(InputError):
        small_cem.index_of("9.9")

    frame = small_cem.to_frame()
    assert frame.index.name == "evaluator"
    assert list(frame.columns) == list(small_cem.labels)


def test_combine_stage_blocks(table5_cem, table6_cem):
    combined = combine_stage_blocks(table5_cem, table6_cem)

    assert combined.k == 14
    assert combined.labels[7] == "1.2"
    np.testing.assert_array_equal(stage_submatrix(combined, 2).values, table6_cem.values)
    assert combined.values[0, 7] == 0.0


def test_average_cree_is_column_mean(table5_cem, printed_tol):
    means = average_crees(table5_cem)

    assert means[0] == pytest.approx(np.mean([0.38, 0.23, 0.3, 0.21, 0.32, 0.29, 0.38]))
    assert average_cree(table5_cem, 0) == means[0]
    with pytest.raises(InputError):
        average_cree(table5_cem, 7)


@pytest.mark.parametrize("values, ranks", [
    ([3.0, 1.0, 3.0, 2.0], [1, 4, 1, 3]),
    ([0.5, 0.502, 0.3], [1, 1, 3]),
    ([1.0], [1]),
])
def test_competition_ranks(values, ranks):
    assert competition_ranks(values).tolist() == ranks


def test_cree_ranks_start_at_one(table5_cem):
    ranks = cree_ranks(table5_cem)
    assert ranks.min() == 1
    assert len(ranks) == table5_cem.k
