"""Exception types shared across the package."""


class SizeLimitError(ValueError):
    """Raised when a dense O(n^3) routine is asked to exceed its size cap."""


class DegenerateColumnError(ValueError):
    """Raised when a column has (numerically) zero norm after row-centering."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(
            f"column {column} has zero norm after row-centering and cannot be normalized"
        )


class DegenerateValuesError(ValueError):
    """Raised when 1-D clustering input is constant and no split exists."""
