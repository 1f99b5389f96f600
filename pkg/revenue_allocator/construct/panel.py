import logging
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from revenue_allocator.ext.errors import InputError, PanelError

logger = logging.getLogger(__name__)

STAGES = (1, 2)


@dataclass(frozen=True, eq=False)
class DmuPanel:
    """
    Raw measurements of n two-stage DMUs: s initial inputs X, q intermediate
    products Z and t final outputs Y, one row per DMU.
    """
    dmu_ids: Tuple[str, ...]
    X: np.ndarray
    Z: np.ndarray
    Y: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dmu_ids", tuple(str(i) for i in self.dmu_ids))
        for name in ("X", "Z", "Y"):
            block = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if block.shape[0] != len(self.dmu_ids):
                raise InputError(f"{name} has {block.shape[0]} rows for {len(self.dmu_ids)} DMUs")
            if block.shape[1] < 1:
                raise InputError(f"{name} needs at least one column")
            if not np.isfinite(block).all():
                raise InputError(f"{name} contains non-finite values")
            object.__setattr__(self, name, block)

    @property
    def n(self) -> int:
        return len(self.dmu_ids)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.X.shape[1], self.Z.shape[1], self.Y.shape[1]

    def columns(self):
        s, q, t = self.dims
        names = [f"x{i + 1}" for i in range(s)] + [f"z{i + 1}" for i in range(q)] + [f"y{i + 1}" for i in range(t)]
        return names, np.hstack([self.X, self.Z, self.Y])

    def validate_for_allocation(self):
        """
        Raw panels entering the allocation pipeline need at least two DMUs and
        strictly positive entries.
        """
        if self.n < 2:
            raise InputError("cross-efficiency needs at least two DMUs")

        names, values = self.columns()
        bad_rows, bad_cols = np.nonzero(values <= 0)
        if bad_rows.size:
            raise PanelError("entries must be strictly positive", row=int(bad_rows[0]) + 1, column=names[bad_cols[0]])
        return self


def normalize_panel(panel: DmuPanel) -> DmuPanel:
    """
    Divide every column by its sum over the DMUs.
    :param panel: DmuPanel - raw measurements
    :return: DmuPanel with columns summing to 1
    """
    names, values = panel.columns()
    sums = values.sum(axis=0)
    zero = np.flatnonzero(sums <= 0)
    if zero.size:
        raise PanelError("column sum must be strictly positive", column=names[zero[0]])

    s, q, _ = panel.dims
    scaled = values / sums
    return replace(
        panel,
        X=scaled[:, :s],
        Z=scaled[:, s:s + q],
        Y=scaled[:, s + q:],
        normalized=True,
    )


@dataclass(frozen=True, eq=False)
class SubDmuSet:
    """
    Single-stage units in the shared (s+q)-input / (q+t)-output space.
    Stage-1 units come first, then stage-2 units, both in DMU order.
    """
    inputs: np.ndarray
    outputs: np.ndarray
    dmu_index: np.ndarray
    stage: np.ndarray
    dmu_ids: Tuple[str, ...]

    def __post_init__(self):
        if self.inputs.shape[0] != self.outputs.shape[0]:
            raise InputError("inputs and outputs must describe the same units")
        no_input = np.flatnonzero(~(self.inputs > 0).any(axis=1))
        no_output = np.flatnonzero(~(self.outputs > 0).any(axis=1))
        if no_input.size or no_output.size:
            unit = int(np.union1d(no_input, no_output)[0])
            raise PanelError("every sub-DMU needs a positive input and a positive output", row=unit + 1)

    @property
    def k(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(f"{j + 1}.{s}" for j, s in zip(self.dmu_index, self.stage))

    def stage_indices(self, stage: int) -> np.ndarray:
        return np.flatnonzero(self.stage == stage)

    def subset(self, indices: Sequence[int]) -> "SubDmuSet":
        indices = np.asarray(indices, dtype=int)
        return SubDmuSet(
            inputs=self.inputs[indices],
            outputs=self.outputs[indices],
            dmu_index=self.dmu_index[indices],
            stage=self.stage[indices],
            dmu_ids=self.dmu_ids,
        )


def split_to_subdmus(panel: DmuPanel) -> SubDmuSet:
    """
    Turn n two-stage DMUs into 2n zero-padded single-stage units:
    stage 1 is (x, 0) -> (z, 0) and stage 2 is (0, z) -> (0, y).
    :param panel: DmuPanel - normalized measurements
    :return: SubDmuSet with stage-1 units at 0..n-1 and stage-2 units at n..2n-1
    """
    if not panel.normalized:
        logger.debug("splitting a panel that was not normalized")

    n = panel.n
    s, q, t = panel.dims

    first_inputs = np.hstack([panel.X, np.zeros((n, q))])
    first_outputs = np.hstack([panel.Z, np.zeros((n, t))])
    second_inputs = np.hstack([np.zeros((n, s)), panel.Z])
    second_outputs = np.hstack([np.zeros((n, q)), panel.Y])

    return SubDmuSet(
        inputs=np.vstack([first_inputs, second_inputs]),
        outputs=np.vstack([first_outputs, second_outputs]),
        dmu_index=np.concatenate([np.arange(n), np.arange(n)]),
        stage=np.repeat(np.array(STAGES), n),
        dmu_ids=panel.dmu_ids,
    )
