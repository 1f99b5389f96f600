import json
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

from revenue_allocator.ext.errors import InputError

data_dir = Path(__file__).resolve().parent


@dataclass(frozen=True)
class Dataset:
    name: str
    dims: Tuple[int, int, int]
    revenue: float

    @property
    def path(self) -> Path:
        return data_dir / f"{self.name}.csv"

    @property
    def golden_path(self) -> Path:
        return data_dir / f"{self.name}_golden.json"

    def golden(self) -> dict:
        with open(self.golden_path, "r", encoding="utf-8") as f:
            return json.load(f)


DATASETS = {
    "numerical_example": Dataset("numerical_example", (3, 1, 2), 100.0),
    "bank_branches": Dataset("bank_branches", (3, 2, 2), 1000.0),
}


def get_dataset(name: str) -> Dataset:
    try:
        return DATASETS[name]
    except KeyError:
        raise InputError(f"unknown dataset {name!r}, expected one of {sorted(DATASETS)}") from None
