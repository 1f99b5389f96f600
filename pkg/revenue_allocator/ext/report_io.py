import json
import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from revenue_allocator.construct.allocation import AllocationReport
from revenue_allocator.construct.cem import CrossEfficiencyMatrix
from revenue_allocator.construct.html_report import HtmlReport
from revenue_allocator.ext.errors import InputError

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "html")

REPORT_COLUMNS = [
    "mode", "concept", "R", "R1", "R2",
    "label", "dmu_id", "stage", "allocation", "rank", "stage_rank", "avg_cree", "cree_rank", "comparison",
]
PLOT_COLUMNS = ["label", "stage", "comparison", "allocation"]

PathLike = Union[str, Path]


def report_frame(report: AllocationReport) -> pd.DataFrame:
    r1, r2 = report.stage_split
    rows = [
        {
            "mode": report.mode.value,
            "concept": report.concept.value,
            "R": report.revenue,
            "R1": r1,
            "R2": r2,
            **{column: getattr(row, column) for column in REPORT_COLUMNS[5:]},
        }
        for row in report.players
    ]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_json(report: AllocationReport, path: PathLike) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2)
        f.write("\n")
    return path


def write_csv(report: AllocationReport, path: PathLike) -> Path:
    path = Path(path)
    report_frame(report).to_csv(path, index=False, lineterminator="\n")
    return path


def read_csv_report(path: PathLike) -> pd.DataFrame:
    """Read a report written by ``write_csv``; floats come back bit-for-bit."""
    frame = pd.read_csv(
        path,
        dtype={"mode": str, "concept": str, "label": str, "dmu_id": str},
        float_precision="round_trip",
    )
    missing = [column for column in REPORT_COLUMNS if column not in frame.columns]
    if missing:
        raise InputError(f"{path} is not an allocation report, missing columns {missing}")
    return frame


def write_plot_data(report: AllocationReport, path: PathLike) -> Path:
    path = Path(path)
    report_frame(report)[PLOT_COLUMNS].to_csv(path, index=False, lineterminator="\n")
    return path


def write_cem(cem: CrossEfficiencyMatrix, path: PathLike) -> Path:
    path = Path(path)
    cem.to_frame().to_csv(path, lineterminator="\n")
    return path


def write_html(report: AllocationReport, path: PathLike, tz_info: str = "UTC") -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(HtmlReport(report, tz_info).flow())
    return path


def write_report(report: AllocationReport, path: PathLike, fmt: str = "json", tz_info: Optional[str] = "UTC") -> Path:
    """
    :param report: AllocationReport
    :param path: destination file
    :param fmt: json, csv or html
    :param tz_info: (optional) TZ Database Name for the html timestamp
    :return: Path written
    """
    if fmt == "json":
        written = write_json(report, path)
    elif fmt == "csv":
        written = write_csv(report, path)
    elif fmt == "html":
        written = write_html(report, path, tz_info or "UTC")
    else:
        raise InputError(f"unknown report format {fmt!r}, expected one of {FORMATS}")

    logger.info("wrote %s", written)
    return written
