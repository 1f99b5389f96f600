import os
from dataclasses import dataclass, replace

from revenue_allocator.ext.errors import InputError


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-8
    objective: float = 1e-7
    pivot: float = 1e-10
    # reduced-cost threshold for entering candidates
    optimality: float = 1e-9
    rank_tie: float = 5e-3

    def relaxed(self) -> "Tolerances":
        return replace(self, feasibility=1e-6)


@dataclass(frozen=True)
class LpSettings:
    tolerances: Tolerances = Tolerances()
    bland_after: int = 50
    max_iterations: int = 50_000
    refactor_every: int = 64
    dual_threshold: int = 3


DEFAULT_TOLERANCES = Tolerances()
DEFAULT_LP_SETTINGS = LpSettings()


class ComparisonProfile:
    """
    Absolute tolerances used when comparing results against printed tables.
    ``paper`` follows the tables' rounding, ``strict`` ignores it.
    """
    env_var: str = "ALLOC_TOL"

    profiles: dict = {
        "paper": {"three_decimals": 5e-3, "two_decimals": 5e-2, "integers": 1.0},
        "strict": {"three_decimals": 1e-6, "two_decimals": 1e-6, "integers": 1e-6},
    }

    def __init__(self, name: str = "paper"):
        if name not in self.profiles:
            raise InputError(f"unknown tolerance profile {name!r}, expected one of {sorted(self.profiles)}")
        self.name = name
        self.three_decimals = self.profiles[name]["three_decimals"]
        self.two_decimals = self.profiles[name]["two_decimals"]
        self.integers = self.profiles[name]["integers"]

    @classmethod
    def from_env(cls) -> "ComparisonProfile":
        return cls(os.environ.get(cls.env_var, "paper").strip().lower() or "paper")
