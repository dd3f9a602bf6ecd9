"""Exception hierarchy shared by the engine modules.

Error kinds map onto the CLI exit codes and the service's HTTP error
payloads: input/format problems, convergence failures, and forcing the
bounded message scheme on a graph whose loop bound is not fulfilled.
"""


class GraphmpError(Exception):
    """Base class for all package errors."""

    kind = "input"


class GraphFormatError(GraphmpError):
    """Malformed edge list / matrix text, conflicting duplicates, bad ids."""

    kind = "input"


class AsymmetryError(GraphFormatError):
    """Matrix entries (i,j) and (j,i) disagree beyond tolerance."""


class DisconnectedGraphError(GraphmpError):
    """Operation requires a connected base graph."""

    kind = "input"


class LoopBoundError(GraphmpError):
    """Bounded mode forced but the loop-bound verdict is false."""

    kind = "loop_bound"


class ConvergenceError(GraphmpError):
    """Fixed-point iteration failed (non-finite values or max_iter hit).

    Carries whatever partial state the caller may want to report.
    """

    kind = "convergence"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
