"""Exception hierarchy shared across the package.

Two broad families matter to callers: input/configuration problems
(reject before doing real work) and failures discovered mid-computation.
The CLI maps them to exit codes 2 and 3 respectively.
"""


class EcfKitError(Exception):
    """Base class for all package errors."""


class InputError(EcfKitError):
    """Invalid user input, configuration, or file content."""


class ConstantDistancesError(InputError):
    """All off-diagonal class distances are equal; min-max normalization is undefined."""


class ComputeError(EcfKitError):
    """Numerical or runtime failure inside an otherwise valid computation."""


class InfeasibleRowError(ComputeError):
    """A row subproblem has an empty feasible set (policy too strict for the current factor)."""

    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"row {row}: constraint set is infeasible")


class CodingGenerationError(ComputeError):
    """Rejection sampling failed to produce a coding matrix meeting the requested correction."""

    def __init__(self, message: str, best=None, best_min_distance: int | None = None):
        self.best = best
        self.best_min_distance = best_min_distance
        super().__init__(message)
