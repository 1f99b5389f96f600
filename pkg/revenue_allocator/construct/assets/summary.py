from revenue_allocator.construct.allocation import AllocationReport
from revenue_allocator.ext.html_generator import fill_out, summary, summary_epsilon, PARSE_MODE_NONE, PARSE_MODE_NUMBER


class Summary:
    def __init__(self, report: AllocationReport):
        self.report = report

    def flow(self):
        epsilon = ""
        if self.report.epsilon is not None:
            epsilon = fill_out(summary_epsilon, [("EPSILON", self.report.epsilon, PARSE_MODE_NUMBER)])

        r1, r2 = self.report.stage_split
        return fill_out(summary, [
            ("MODE", self.report.mode.value),
            ("CONCEPT", self.report.concept.value),
            ("REVENUE", self.report.revenue, PARSE_MODE_NUMBER),
            ("R1", r1, PARSE_MODE_NUMBER),
            ("R2", r2, PARSE_MODE_NUMBER),
            ("STAGE1_TOTAL", self.report.stage_total(1), PARSE_MODE_NUMBER),
            ("STAGE2_TOTAL", self.report.stage_total(2), PARSE_MODE_NUMBER),
            ("EPSILON", epsilon, PARSE_MODE_NONE),
            ("MAX_EXCESS", self.report.max_excess, PARSE_MODE_NUMBER),
            ("IS_IMPUTATION", "yes" if self.report.is_imputation else "no", PARSE_MODE_NONE),
            ("IN_CORE", "yes" if self.report.in_core else "no", PARSE_MODE_NONE),
        ])
