from typing import Optional


class AllocatorError(Exception):
    exit_code: int = 1
    category: str = "error"


class InputError(AllocatorError, ValueError):
    exit_code = 2
    category = "input error"


class SizeLimitError(AllocatorError):
    exit_code = 3
    category = "size limit"


class SolverError(AllocatorError):
    exit_code = 4
    category = "solver failure"


class LpUsageError(InputError):
    pass


class PanelError(InputError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column

        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")

        super().__init__(f"{message} ({', '.join(where)})" if where else message)
