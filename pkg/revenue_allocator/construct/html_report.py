import datetime
import logging
from typing import Optional

import pytz

from revenue_allocator.construct.allocation import AllocationReport
from revenue_allocator.construct.assets import CemTable, GameChecks, PlayerRowHtml, Summary
from revenue_allocator.ext.errors import InputError
from revenue_allocator.ext.html_generator import fill_out, total, PARSE_MODE_NONE

logger = logging.getLogger(__name__)


class HtmlReport:
    html: str

    def __init__(self, report: AllocationReport, pytz_timezone: str = "UTC", generated_at: Optional[datetime.datetime] = None):
        self.report = report
        self.pytz_timezone = pytz_timezone
        self.generated_at = generated_at

    def flow(self):
        try:
            timezone = pytz.timezone(self.pytz_timezone)
        except pytz.UnknownTimeZoneError:
            raise InputError(f"unknown timezone {self.pytz_timezone!r}") from None

        moment = self.generated_at or datetime.datetime.now(pytz.utc)
        if moment.tzinfo is None:
            moment = pytz.utc.localize(moment)
        time_now = moment.astimezone(timezone).strftime("%e %B %Y at %T (%Z)")

        player_rows = "".join(PlayerRowHtml(row).flow() for row in self.report.players)
        checks = "".join(GameChecks(verdict).flow() for verdict in self.report.checks or [])

        self.html = fill_out(total, [
            ("TITLE", f"{self.report.mode.value.capitalize()} allocation by {self.report.concept.value}"),
            ("DATE_TIME", time_now),
            ("SUMMARY", Summary(self.report).flow(), PARSE_MODE_NONE),
            ("PLAYER_ROWS", player_rows, PARSE_MODE_NONE),
            ("CHECKS", checks, PARSE_MODE_NONE),
            ("CEM_TABLE", CemTable(self.report.cem).flow(), PARSE_MODE_NONE),
        ])
        logger.debug("rendered %s report, %d characters", self.report.mode.value, len(self.html))
        return self.html
