import numpy as np
import pytest

from revenue_allocator.cli import load_panel
from revenue_allocator.construct.cem import CrossEfficiencyMatrix, build_cem, combine_stage_blocks
from revenue_allocator.construct.panel import normalize_panel, split_to_subdmus
from revenue_allocator.data import get_dataset
from revenue_allocator.ext.cache import clear_cache
from revenue_allocator.ext.tolerances import ComparisonProfile


def golden_matrix(table: dict, stage=None) -> CrossEfficiencyMatrix:
    """Printed table as a matrix; stages come from the 'j.s' labels."""
    labels = table["labels"]
    stages = [int(label.split(".")[1]) for label in labels]
    return CrossEfficiencyMatrix(np.array(table["values"], dtype=float), labels, stages)


def stage_ordered(cem: CrossEfficiencyMatrix) -> CrossEfficiencyMatrix:
    """Reorder an interleaved 1.1, 1.2, 2.1, ... matrix to stage-1 units first."""
    order = np.concatenate([cem.stage_indices(1), cem.stage_indices(2)])
    return CrossEfficiencyMatrix(
        cem.values[np.ix_(order, order)],
        [cem.labels[i] for i in order],
        cem.stages[order],
    )


@pytest.fixture(autouse=True)
def _fresh_cache():
    clear_cache()
    yield
    clear_cache()


@pytest.fixture(scope="session")
def printed_tol():
    return ComparisonProfile("paper")


@pytest.fixture(scope="session")
def numerical_golden():
    return get_dataset("numerical_example").golden()


@pytest.fixture(scope="session")
def bank_golden():
    return get_dataset("bank_branches").golden()


@pytest.fixture(scope="session")
def bank_stage_one_cem(bank_golden):
    return golden_matrix(bank_golden["stage_cem"]["1"])


@pytest.fixture(scope="session")
def numerical_panel():
    dataset = get_dataset("numerical_example")
    return load_panel(dataset.path, dataset.dims)


@pytest.fixture(scope="session")
def numerical_units(numerical_panel):
    return split_to_subdmus(normalize_panel(numerical_panel))


@pytest.fixture(scope="session")
def numerical_cem(numerical_units):
    return build_cem(numerical_units)


@pytest.fixture(scope="session")
def table3_cem(numerical_golden):
    """The printed 14x14 matrix, stage-1 units first."""
    return stage_ordered(golden_matrix(numerical_golden["cem"]))


@pytest.fixture(scope="session")
def table5_cem(numerical_golden):
    return golden_matrix(numerical_golden["stage_cem"]["1"])


@pytest.fixture(scope="session")
def table6_cem(numerical_golden):
    return golden_matrix(numerical_golden["stage_cem"]["2"])


@pytest.fixture(scope="session")
def printed_stage_cem(table5_cem, table6_cem):
    return combine_stage_blocks(table5_cem, table6_cem)


@pytest.fixture(scope="session")
def bank_cem():
    dataset = get_dataset("bank_branches")
    units = split_to_subdmus(normalize_panel(load_panel(dataset.path, dataset.dims)))
    return build_cem(units, workers=4)
