import asyncio
from pathlib import Path
from typing import Optional, Sequence

from revenue_allocator.cli import load_panel
from revenue_allocator.construct.allocation import Allocation, AllocationReport
from revenue_allocator.construct.cem import CrossEfficiencyMatrix, build_cem
from revenue_allocator.construct.panel import DmuPanel, normalize_panel, split_to_subdmus
from revenue_allocator.data import get_dataset
from revenue_allocator.ext.report_io import write_report
from revenue_allocator.ext.tolerances import LpSettings


async def quick_allocate(
    dataset: str = "numerical_example",
    mode: str = "secondary",
    concept: str = "nucleolus",
):
    """
    Allocate the revenue of a bundled dataset with its own dims and revenue.
    :param dataset: (optional) numerical_example or bank_branches
    :param mode: (optional) direct or secondary
    :param concept: (optional) shapley, leastcore or nucleolus
    :return: AllocationReport
    """
    bundled = get_dataset(dataset)
    panel = load_panel(bundled.path, bundled.dims)
    return await allocate(panel, bundled.revenue, mode=mode, concept=concept)


async def allocate(
    panel: DmuPanel,
    revenue: float,
    mode: str = "secondary",
    concept: str = "nucleolus",
    singleton_universe: str = "game",
    workers: int = 1,
    checks: bool = False,
    seed: int = 0,
    settings: Optional[LpSettings] = None,
):
    """
    Run the whole pipeline on a raw panel.
    :param panel: DmuPanel - raw, strictly positive measurements
    :param revenue: float - R to allocate
    :param mode: (optional) direct or secondary
    :param concept: (optional) shapley, leastcore or nucleolus
    :param singleton_universe: (optional) game or full - evaluators of lone players
    :param workers: (optional) integer - threads building the cross-efficiency matrix
    :param checks: (optional) boolean - attach super-additivity and core verdicts
    :param seed: (optional) integer - seed for sampled checks
    :param settings: (optional) LpSettings
    :return: AllocationReport
    """
    panel.validate_for_allocation()
    units = split_to_subdmus(normalize_panel(panel))
    cem = await asyncio.to_thread(build_cem, units, workers, settings)

    return await raw_allocate(
        cem,
        revenue,
        mode=mode,
        concept=concept,
        singleton_universe=singleton_universe,
        checks=checks,
        seed=seed,
        settings=settings,
        dmu_ids=panel.dmu_ids,
    )


async def raw_allocate(
    cem: CrossEfficiencyMatrix,
    revenue: float,
    mode: str = "secondary",
    concept: str = "nucleolus",
    singleton_universe: str = "game",
    checks: bool = False,
    seed: int = 0,
    settings: Optional[LpSettings] = None,
    exact_tight_check: bool = False,
    dmu_ids: Optional[Sequence[str]] = None,
):
    """
    Allocate from an already computed 2n cross-efficiency matrix.
    :param cem: CrossEfficiencyMatrix - stage-1 and stage-2 sub-DMUs
    :param revenue: float - R to allocate
    :param mode: (optional) direct or secondary
    :param concept: (optional) shapley, leastcore or nucleolus
    :param singleton_universe: (optional) game or full
    :param checks: (optional) boolean - attach super-additivity and core verdicts
    :param seed: (optional) integer - seed for sampled checks
    :param settings: (optional) LpSettings
    :param exact_tight_check: (optional) boolean - confirm nucleolus tight sets with one LP each
    :param dmu_ids: (optional) raw panel identifiers for the report rows
    :return: AllocationReport
    """
    allocation = await Allocation(
        cem=cem,
        revenue=revenue,
        mode=mode,
        concept=concept,
        singleton_universe=singleton_universe,
        settings=settings,
        exact_tight_check=exact_tight_check,
        checks=checks,
        seed=seed,
        dmu_ids=dmu_ids,
    ).export()
    return allocation.report


async def export_report(
    report: AllocationReport,
    path,
    fmt: str = "json",
    tz_info: str = "UTC",
) -> Path:
    """
    Write a report to disk.
    :param report: AllocationReport
    :param path: destination file
    :param fmt: (optional) json, csv or html
    :param tz_info: (optional) TZ Database Name - timezone of the html timestamp
    :return: Path written
    """
    return await asyncio.to_thread(write_report, report, path, fmt, tz_info)
