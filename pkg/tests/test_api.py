import asyncio
import json

import pytest

import revenue_allocator
from revenue_allocator import export_report, quick_allocate, raw_allocate
from revenue_allocator.ext.errors import InputError


def test_quick_allocate_numerical_example():
    report = asyncio.run(quick_allocate(concept="shapley"))

    assert report.mode.value == "secondary"
    assert report.allocations.sum() == pytest.approx(100.0, abs=1e-6)
    assert report.row("1.1").dmu_id == "1"


def test_raw_allocate_with_checks(printed_stage_cem, tmp_path):
    report = asyncio.run(raw_allocate(printed_stage_cem, 100.0, mode="direct", concept="nucleolus", checks=True))

    assert report.in_core
    assert report.checks[0]["exhaustive"]

    path = asyncio.run(export_report(report, tmp_path / "direct.json"))
    written = json.loads(path.read_text())
    assert written["checks"][0]["superadditive"] is True
    assert written["cem_labels"] == list(printed_stage_cem.labels)


def test_unknown_dataset():
    with pytest.raises(InputError):
        asyncio.run(quick_allocate("nowhere"))


def test_version():
    assert revenue_allocator.__version__ == "1.0.0"
