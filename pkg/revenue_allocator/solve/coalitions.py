from typing import Iterable, Optional, Union

import numpy as np

from revenue_allocator.ext.errors import InputError

Coalition = Union[int, Iterable[int]]


def as_mask(coalition: Coalition, k: int) -> int:
    """
    Bit i set means player i is a member.
    :param coalition: int bitmask or iterable of player indices
    :param k: int - number of players
    :return: int
    """
    if isinstance(coalition, (int, np.integer)):
        mask = int(coalition)
    else:
        mask = 0
        for player in coalition:
            player = int(player)
            if not 0 <= player < k:
                raise InputError(f"player {player} out of range for {k} players")
            mask |= 1 << player

    if mask < 0 or mask >> k:
        raise InputError(f"coalition mask {mask} out of range for {k} players")
    return mask


def members(mask: int, k: int) -> np.ndarray:
    return np.flatnonzero((mask >> np.arange(k)) & 1)


def popcount(masks: np.ndarray, k: int) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    counts = np.zeros(masks.shape, dtype=np.int64)
    for bit in range(k):
        counts += (masks >> bit) & 1
    return counts


def proper_masks(k: int) -> np.ndarray:
    """Every coalition except the empty and the grand one."""
    return np.arange(1, (1 << k) - 1, dtype=np.int64)


def coalition_sums(x: np.ndarray, k: int) -> np.ndarray:
    """x(S) for every mask S in 0..2^k-1."""
    x = np.asarray(x, dtype=float)
    sums = np.zeros(1 << k)
    for player in range(k):
        low = 1 << player
        sums[low:2 * low] = sums[:low] + x[player]
    return sums


def coalition_matrix(masks: np.ndarray, k: int, out: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Row r is the characteristic vector of masks[r].
    Filled one column at a time, into ``out`` when given.
    """
    masks = np.asarray(masks, dtype=np.int64)
    if out is None:
        out = np.empty((masks.shape[0], k))
    for player in range(k):
        out[:, player] = (masks >> player) & 1
    return out
