import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from revenue_allocator.construct.panel import SubDmuSet
from revenue_allocator.ext.errors import InputError, SolverError
from revenue_allocator.ext.tolerances import DEFAULT_LP_SETTINGS, DEFAULT_TOLERANCES, LpSettings
from revenue_allocator.solve.lp import LpProblem, solve_lp

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CrossEfficiencyMatrix:
    """
    E[d, l] is unit d's evaluation of unit l under d's aggressive weights.
    The diagonal holds the CCR self-efficiencies.
    """
    values: np.ndarray
    labels: Tuple[str, ...]
    stages: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InputError(f"cross-efficiency matrix must be square, got shape {values.shape}")
        if len(self.labels) != values.shape[0] or len(self.stages) != values.shape[0]:
            raise InputError("one label and one stage per unit are required")
        if not np.isfinite(values).all():
            raise InputError("cross-efficiency matrix contains non-finite values")

        values = values.copy()
        values.flags.writeable = False
        stages = np.asarray(self.stages, dtype=int).copy()
        stages.flags.writeable = False

        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
        object.__setattr__(self, "stages", stages)

    @property
    def k(self) -> int:
        return int(self.values.shape[0])

    @property
    def theta(self) -> np.ndarray:
        return np.diag(self.values).copy()

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha1()
        digest.update(np.ascontiguousarray(self.values).tobytes())
        digest.update("|".join(self.labels).encode())
        digest.update(self.stages.tobytes())
        return digest.hexdigest()

    def stage_indices(self, stage: int) -> np.ndarray:
        return np.flatnonzero(self.stages == stage)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown unit label {label!r}") from None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=pd.Index(self.labels, name="evaluator"), columns=list(self.labels))

    def __repr__(self):
        return f"CrossEfficiencyMatrix(k={self.k}, fingerprint={self.fingerprint})"


def _weights_problem(units: SubDmuSet, target: int) -> Tuple[np.ndarray, list, list]:
    """Rows shared by models (1) and (3): every unit's ratio at most 1, target input at 1."""
    n_out = units.outputs.shape[1]
    frontier = np.hstack([units.outputs, -units.inputs])
    normalization = np.concatenate([np.zeros(n_out), units.inputs[target]])

    A = np.vstack([frontier, normalization])
    relations = ["<="] * units.k + ["="]
    rhs = [0.0] * units.k + [1.0]
    return A, relations, rhs


def ccr_weights(units: SubDmuSet, d: int, settings: Optional[LpSettings] = None):
    """
    Self-evaluation of unit d: maximize mu.y_d with omega.x_d = 1 and no unit above 1.
    :param units: SubDmuSet
    :param d: int - evaluated unit
    :param settings: (optional) LpSettings
    :return: (theta, mu, omega)
    """
    if not 0 <= d < units.k:
        raise InputError(f"unit index {d} out of range for {units.k} units")

    n_out = units.outputs.shape[1]
    A, relations, rhs = _weights_problem(units, d)
    objective = np.concatenate([units.outputs[d], np.zeros(units.inputs.shape[1])])

    solution = solve_lp(LpProblem("maximize", objective, A, relations, rhs), settings)
    if not solution.optimal:
        raise SolverError(f"CCR model for unit {d} is {solution.status.value}; unit data is corrupted")

    weights = solution.variable_values
    theta = float(min(max(solution.objective_value, 0.0), 1.0))
    return theta, weights[:n_out], weights[n_out:]


def ccr_efficiency(units: SubDmuSet, d: int, settings: Optional[LpSettings] = None) -> float:
    return ccr_weights(units, d, settings)[0]


def aggressive_cross_efficiency(
    units: SubDmuSet,
    d: int,
    l: int,
    theta_d: float,
    settings: Optional[LpSettings] = None,
) -> float:
    """
    Minimize unit d's evaluation of unit l while d keeps its self-efficiency theta_d.
    An infeasible first attempt is retried once with relaxed feasibility.
    :param units: SubDmuSet
    :param d: int - evaluator
    :param l: int - evaluated unit
    :param theta_d: float - CCR efficiency of d
    :param settings: (optional) LpSettings
    :return: float in [0, 1]
    """
    for index in (d, l):
        if not 0 <= index < units.k:
            raise InputError(f"unit index {index} out of range for {units.k} units")

    settings = settings or DEFAULT_LP_SETTINGS
    A, relations, rhs = _weights_problem(units, l)
    keep_self = np.concatenate([-units.outputs[d], theta_d * units.inputs[d]])
    problem = LpProblem(
        "minimize",
        np.concatenate([units.outputs[l], np.zeros(units.inputs.shape[1])]),
        np.vstack([A, keep_self]),
        relations + ["="],
        rhs + [0.0],
    )

    solution = solve_lp(problem, settings)
    if not solution.optimal:
        logger.warning(
            "aggressive model (%d, %d) is %s, retrying with relaxed tolerances",
            d, l, solution.status.value,
        )
        relaxed = LpSettings(
            tolerances=settings.tolerances.relaxed(),
            bland_after=settings.bland_after,
            max_iterations=settings.max_iterations,
            refactor_every=settings.refactor_every,
            dual_threshold=settings.dual_threshold,
        )
        solution = solve_lp(problem, relaxed)
        if not solution.optimal:
            raise SolverError(f"aggressive model ({d}, {l}) is {solution.status.value} after relaxed retry")

    return float(min(max(solution.objective_value, 0.0), 1.0))


def build_cem(units: SubDmuSet, workers: int = 1, settings: Optional[LpSettings] = None) -> CrossEfficiencyMatrix:
    """
    Compute the aggressive cross-efficiency matrix of every unit pair.
    Rows are independent, the result does not depend on ``workers``.
    :param units: SubDmuSet
    :param workers: int - threads evaluating rows
    :param settings: (optional) LpSettings
    :return: CrossEfficiencyMatrix
    """
    if workers < 1:
        raise InputError("workers must be at least 1")

    started = time.perf_counter()
    k = units.k

    def theta_of(d):
        return ccr_efficiency(units, d, settings)

    def row_of(d):
        row = np.array([aggressive_cross_efficiency(units, d, l, theta[d], settings) for l in range(k)])
        row[d] = theta[d]
        return row

    with ThreadPoolExecutor(max_workers=workers) as pool:
        theta = list(pool.map(theta_of, range(k)))
        rows = list(pool.map(row_of, range(k)))

    cem = CrossEfficiencyMatrix(np.vstack(rows), units.labels, units.stage)
    logger.info("built %dx%d cross-efficiency matrix in %.2fs", k, k, time.perf_counter() - started)
    return cem


def stage_submatrix(cem: CrossEfficiencyMatrix, stage: int) -> CrossEfficiencyMatrix:
    indices = cem.stage_indices(stage)
    if indices.size == 0:
        raise InputError(f"matrix has no stage-{stage} units")
    return CrossEfficiencyMatrix(cem.values[np.ix_(indices, indices)], [cem.labels[i] for i in indices], cem.stages[indices])


def combine_stage_blocks(first: CrossEfficiencyMatrix, second: CrossEfficiencyMatrix) -> CrossEfficiencyMatrix:
    """
    Place two per-stage matrices on the diagonal of a 2n matrix, zeros across stages.
    """
    k1, k2 = first.k, second.k
    values = np.zeros((k1 + k2, k1 + k2))
    values[:k1, :k1] = first.values
    values[k1:, k1:] = second.values
    return CrossEfficiencyMatrix(
        values,
        first.labels + second.labels,
        np.concatenate([first.stages, second.stages]),
    )


def average_crees(cem: CrossEfficiencyMatrix) -> np.ndarray:
    return cem.values.mean(axis=0)


def average_cree(cem: CrossEfficiencyMatrix, i: int) -> float:
    if not 0 <= i < cem.k:
        raise InputError(f"unit index {i} out of range for {cem.k} units")
    return float(cem.values[:, i].mean())


def competition_ranks(values: Sequence[float], tie: float = DEFAULT_TOLERANCES.rank_tie) -> np.ndarray:
    """
    Descending competition ranking: 1 + the number of values larger by more than ``tie``.
    """
    values = np.asarray(values, dtype=float)
    return 1 + (values[None, :] > values[:, None] + tie).sum(axis=1)


def cree_ranks(cem: CrossEfficiencyMatrix, tie: float = DEFAULT_TOLERANCES.rank_tie) -> np.ndarray:
    return competition_ranks(average_crees(cem), tie)
