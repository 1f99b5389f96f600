from revenue_allocator.revenue_allocator import allocate, raw_allocate, quick_allocate, export_report
from revenue_allocator.construct.allocation import (
    AllocationReport,
    compare_modes,
    direct_allocation,
    secondary_allocation,
)
from revenue_allocator.ext.errors import AllocatorError, InputError, SizeLimitError, SolverError

__version__ = "1.0.0"

__all__ = (
    "allocate",
    "raw_allocate",
    "quick_allocate",
    "export_report",
    "AllocationReport",
    "compare_modes",
    "direct_allocation",
    "secondary_allocation",
    "AllocatorError",
    "InputError",
    "SizeLimitError",
    "SolverError",
)
