"""Exception hierarchy shared across the package."""


class TtmppError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(TtmppError):
    """An array argument does not match the instance's index sets."""


class ScenarioError(TtmppError):
    """A scenario cannot be applied to its base instance."""


class InstanceFormatError(TtmppError):
    """Serialized instance/scenario data is malformed.

    Carries file/row/column coordinates where available so callers can
    point users at the offending cell.
    """

    def __init__(self, message: str, *, file: str | None = None,
                 row: int | None = None, column: str | int | None = None):
        coords = []
        if file is not None:
            coords.append(f"file={file}")
        if row is not None:
            coords.append(f"row={row}")
        if column is not None:
            coords.append(f"column={column}")
        if coords:
            message = f"{message} ({', '.join(coords)})"
        super().__init__(message)
        self.file = file
        self.row = row
        self.column = column


class StoreError(TtmppError):
    """Scenario store operation failed."""


class NotFoundError(StoreError):
    """Requested id does not exist in the store."""


class BudgetExceededError(TtmppError):
    """Exhaustive enumeration was requested beyond its size budget."""


class SolverNumericalError(TtmppError):
    """The LP machinery hit an unrecoverable numerical failure."""


class ReportError(TtmppError):
    """A swap report was requested for a solution that has no schedule."""
