from revenue_allocator.construct.cem import CrossEfficiencyMatrix
from revenue_allocator.ext.html_generator import (
    fill_out, cem_table, cem_header_cell, cem_row, cem_cell, PARSE_MODE_NONE, PARSE_MODE_NUMBER
)


class CemTable:
    """Stage-blocked rendering of a cross-efficiency matrix; cross-stage cells are greyed out."""

    def __init__(self, cem: CrossEfficiencyMatrix):
        self.cem = cem

    def flow(self):
        header = "".join(fill_out(cem_header_cell, [("LABEL", label)]) for label in self.cem.labels)
        rows = "".join(self.build_row(d) for d in range(self.cem.k))

        return fill_out(cem_table, [
            ("HEADER_CELLS", header, PARSE_MODE_NONE),
            ("ROWS", rows, PARSE_MODE_NONE),
        ])

    def build_row(self, d):
        cells = ""
        for l in range(self.cem.k):
            if d == l:
                css = "self"
            elif self.cem.stages[d] != self.cem.stages[l]:
                css = "cross-stage"
            else:
                css = "peer"
            cells += fill_out(cem_cell, [
                ("CLASS", css, PARSE_MODE_NONE),
                ("VALUE", self.cem.values[d, l], PARSE_MODE_NUMBER),
            ])

        return fill_out(cem_row, [
            ("STAGE", str(self.cem.stages[d]), PARSE_MODE_NONE),
            ("LABEL", self.cem.labels[d]),
            ("CELLS", cells, PARSE_MODE_NONE),
        ])
