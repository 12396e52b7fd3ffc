"""Exception types raised across the package."""


class SocialDPError(Exception):
    """Base class for all package errors."""


class GraphError(SocialDPError, ValueError):
    pass


class InvalidNodeId(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class DisconnectedGraph(GraphError):
    pass


class BipartiteGraph(GraphError):
    pass


class InvalidDegree(GraphError):
    pass


class GenerationFailed(GraphError):
    pass


class ConvergenceFailure(SocialDPError, RuntimeError):
    pass


class EmptySampleSet(SocialDPError, ValueError):
    """Raised when a popularity estimate is requested from zero samples."""


class ConfigError(SocialDPError, ValueError):
    pass
