"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: malformed inputs (GraphFormatError,
ConfigError) are usage errors, NumericError subclasses signal a numeric
failure in a fitting or estimation step.
"""


class FrontdoorLabError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------- graphs


class GraphError(FrontdoorLabError):
    pass


class CycleDetected(GraphError):
    """The edge set contains a directed cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle))


class UnknownNode(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class OverlappingSets(GraphError):
    """Query sets passed to a separation test are not disjoint."""


class NodeNotObserved(GraphError):
    pass


class GraphFormatError(GraphError):
    """A graph text file could not be parsed."""


# ---------------------------------------------------------------- data


class InvalidCount(FrontdoorLabError):
    pass


class AllMissingColumn(FrontdoorLabError):
    pass


class NothingToImpute(FrontdoorLabError):
    pass


class ConfigError(FrontdoorLabError):
    """A run configuration file or value could not be parsed."""


class MissingInput(FrontdoorLabError):
    """A pipeline stage was invoked before its input file exists."""

    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"expected input not found: {self.path}")


# ---------------------------------------------------------------- numerics


class NumericError(FrontdoorLabError):
    pass


class SingularSystem(NumericError):
    """The penalized normal equations are numerically singular."""


class TooFewDistinctValues(NumericError):
    pass


class TooFewCompleteRows(NumericError):
    pass


class EmptyResidualPool(NumericError):
    pass
