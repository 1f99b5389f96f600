from .summary import Summary
from .player_row import PlayerRowHtml
from .cem_table import CemTable
from .checks import GameChecks

__all__ = (
    "Summary",
    "PlayerRowHtml",
    "CemTable",
    "GameChecks",
)
