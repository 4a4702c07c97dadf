"""Exception types shared across the package."""


class DegenerateFitError(RuntimeError):
    """Raised when an estimation step collapses numerically.

    Typical causes: the residual variance hits its floor repeatedly
    (perfect interpolation), or every density weight underflows.
    ``params`` carries the last valid parameter estimate when one exists.
    """

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


class DegenerateScoreError(RuntimeError):
    """Raised when a model-selection score cannot be evaluated (all
    held-out density terms underflow)."""
