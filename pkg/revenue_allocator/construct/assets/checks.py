from typing import Dict

from revenue_allocator.ext.html_generator import fill_out, checks_row, PARSE_MODE_NONE, PARSE_MODE_NUMBER


class GameChecks:
    def __init__(self, verdict: Dict):
        self.verdict = verdict

    def flow(self):
        players = self.verdict["players"]
        return fill_out(checks_row, [
            ("PLAYERS", f"{players[0]}..{players[-1]}" if players else ""),
            ("SUPERADDITIVE", "yes" if self.verdict["superadditive"] else "no", PARSE_MODE_NONE),
            ("SCAN", "exhaustive" if self.verdict["exhaustive"] else "sampled", PARSE_MODE_NONE),
            ("PAIRS", str(self.verdict["pairs_checked"]), PARSE_MODE_NONE),
            ("CORE", "yes" if self.verdict["core_nonempty"] else "no", PARSE_MODE_NONE),
            ("CORE_EPSILON", self.verdict["core_epsilon"], PARSE_MODE_NUMBER),
        ])
