from revenue_allocator.construct.allocation import PlayerRow
from revenue_allocator.ext.html_generator import fill_out, player_row, PARSE_MODE_NONE, PARSE_MODE_NUMBER


class PlayerRowHtml:
    def __init__(self, row: PlayerRow):
        self.row = row

    def flow(self):
        return fill_out(player_row, [
            ("LABEL", self.row.label),
            ("DMU_ID", self.row.dmu_id),
            ("STAGE", str(self.row.stage), PARSE_MODE_NONE),
            ("ALLOCATION", self.row.allocation, PARSE_MODE_NUMBER),
            ("RANK", str(self.row.rank), PARSE_MODE_NONE),
            ("STAGE_RANK", str(self.row.stage_rank), PARSE_MODE_NONE),
            ("AVG_CREE", self.row.avg_cree, PARSE_MODE_NUMBER),
            ("CREE_RANK", str(self.row.cree_rank), PARSE_MODE_NONE),
            ("COMPARISON", self.row.comparison, PARSE_MODE_NUMBER),
        ])
