from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np


class Concept(str, Enum):
    SHAPLEY = "shapley"
    LEAST_CORE = "leastcore"
    NUCLEOLUS = "nucleolus"


@dataclass(frozen=True, eq=False)
class SolutionVector:
    concept: Concept
    x: np.ndarray
    labels: Tuple[str, ...]
    epsilon: Optional[float] = None
    iterations: int = 0
    fixed_coalitions: int = 0
    max_excess: float = 0.0

    @property
    def total(self) -> float:
        return float(self.x.sum())
